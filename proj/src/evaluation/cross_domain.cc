#include "mdapt/evaluation/cross_domain.h"

#include <iomanip>
#include <sstream>

namespace mdapt::evaluation {

bool CrossDomainReport::ok() const {
  for (const auto& r : rows) {
    if (!r.metric) return false;
  }
  return true;
}

std::string CrossDomainReport::table() const {
  std::ostringstream out;
  out << std::left << std::setw(16) << "checkpoint" << std::right << std::setw(10) << task
      << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(16) << r.name << std::right << std::setw(10);
    if (r.metric) {
      out << std::fixed << std::setprecision(4) << *r.metric;
    } else {
      out << "ERROR" << "  " << r.error;
    }
    out << '\n';
  }
  return out.str();
}

nlohmann::json CrossDomainReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row = {{"name", r.name}};
    if (r.metric) {
      row["metric"] = *r.metric;
    } else {
      row["error"] = r.error;
    }
    rows_json.push_back(row);
  }
  return {{"task", task}, {"ok", ok()}, {"rows", rows_json}};
}

CrossDomainReport cross_domain_report(
    const std::string& task, const std::vector<CrossDomainEntry>& entries,
    const std::function<double(const std::filesystem::path&)>& evaluate) {
  CrossDomainReport report;
  report.task = task;
  for (const auto& e : entries) {
    CrossDomainRow row{e.name, std::nullopt, ""};
    if (!std::filesystem::exists(e.checkpoint)) {
      row.error = "missing checkpoint " + e.checkpoint.string();
    } else {
      try {
        row.metric = evaluate(e.checkpoint);
      } catch (const std::exception& ex) {
        row.error = ex.what();
      }
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace mdapt::evaluation
