#include "mdapt/training/early_stopping.h"

#include "mdapt/common/error.h"

namespace mdapt::training {

EarlyStopResult run_early_stopping(int max_epochs, int patience,
                                   const std::function<double(int epoch)>& run_epoch,
                                   const std::function<void(int epoch)>& on_improved) {
  if (patience < 1) throw UsageError("early stopping: patience must be >= 1");
  EarlyStopResult out;
  int stale = 0;
  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    const double metric = run_epoch(epoch);
    out.history.push_back(metric);
    out.epochs_run = epoch + 1;
    if (out.best_epoch < 0 || metric > out.best_metric) {
      out.best_metric = metric;
      out.best_epoch = epoch;
      stale = 0;
      if (on_improved) on_improved(epoch);
    } else if (++stale >= patience) {
      break;
    }
  }
  return out;
}

}  // namespace mdapt::training
