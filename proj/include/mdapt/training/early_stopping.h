#pragma once

#include <functional>
#include <vector>

namespace mdapt::training {

struct EarlyStopResult {
  int epochs_run = 0;
  int best_epoch = -1;
  double best_metric = 0.0;
  std::vector<double> history;  // dev metric per epoch
};

// Runs up to max_epochs epochs. `run_epoch` trains one epoch and returns the
// dev metric (higher is better). Training stops once `patience` consecutive
// epochs fail to beat the best value; `on_improved` fires on every new best.
EarlyStopResult run_early_stopping(int max_epochs, int patience,
                                   const std::function<double(int epoch)>& run_epoch,
                                   const std::function<void(int epoch)>& on_improved = {});

}  // namespace mdapt::training
