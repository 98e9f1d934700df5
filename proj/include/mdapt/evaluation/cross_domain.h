#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace mdapt::evaluation {

struct CrossDomainEntry {
  std::string name;  // e.g. "base", "in-domain", "other-domain"
  std::filesystem::path checkpoint;
};

struct CrossDomainRow {
  std::string name;
  std::optional<double> metric;
  std::string error;  // set when metric is empty
};

struct CrossDomainReport {
  std::string task;
  std::vector<CrossDomainRow> rows;

  bool ok() const;
  std::string table() const;
  nlohmann::json to_json() const;
};

// Evaluates every checkpoint with `evaluate`. A missing file or an evaluator
// exception becomes an error row instead of aborting the report.
CrossDomainReport cross_domain_report(
    const std::string& task, const std::vector<CrossDomainEntry>& entries,
    const std::function<double(const std::filesystem::path&)>& evaluate);

}  // namespace mdapt::evaluation
