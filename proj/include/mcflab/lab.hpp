#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcflab/config.hpp"
#include "mcflab/grid.hpp"
#include "mcflab/io.hpp"

namespace mcflab {

constexpr int kReportSchema = 1;

/// Metrics, verdicts and artifacts of one experiment run.
class Report {
public:
  Report(std::string experiment, unsigned threads, std::filesystem::path output, bool dumps);

  [[nodiscard]] unsigned threads() const noexcept { return threads_; }
  [[nodiscard]] const std::string& experiment() const noexcept { return experiment_; }

  /// New entry in "cases"; fill in its metrics.
  nlohmann::json& add_case(const std::string& name);
  /// Experiment-wide metric.
  void metric(const std::string& key, nlohmann::json value);

  void le(const std::string& name, double value, double limit);
  void ge(const std::string& name, double value, double limit);
  void in(const std::string& name, double value, double lo, double hi);
  void truth(const std::string& name, bool ok);

  /// Writes a field dump under the output directory (when dumps are on).
  void dump(const std::string& name, const Field& field);
  void dump(const std::string& name, const GraphFlow& flow);

  [[nodiscard]] bool passed() const noexcept { return failed_ == 0; }
  [[nodiscard]] std::size_t verdict_count() const noexcept { return verdicts_.size(); }
  [[nodiscard]] std::size_t failed_count() const noexcept { return failed_; }
  /// Full report; `wall_clock_s` is the only nondeterministic field.
  [[nodiscard]] nlohmann::json json(const nlohmann::json& input, double wall_clock_s) const;

private:
  void verdict(const std::string& name, bool pass, nlohmann::json value, nlohmann::json limit, const char* relation);
  std::string experiment_;
  unsigned threads_;
  std::filesystem::path output_;
  bool dumps_;
  nlohmann::json cases_ = nlohmann::json::array();
  nlohmann::json metrics_ = nlohmann::json::object();
  nlohmann::json verdicts_ = nlohmann::json::array();
  nlohmann::json artifacts_ = nlohmann::json::array();
  std::size_t failed_ = 0;
};

/// Reads and validates every field; the returned action performs the run.
using ExperimentAction = std::function<void(Report&)>;

struct Experiment {
  std::string id;
  std::string summary;
  std::function<ExperimentAction(const Config&)> prepare;
};

const std::vector<Experiment>& experiments();
/// Throws ConfigError on an unknown id.
const Experiment& find_experiment(const std::string& id);

struct RunOptions {
  unsigned threads = 1;
  std::filesystem::path output;  // empty: [experiment] output, else lab-out/<id>
  bool write = true;             // write report.json and dumps
};

struct RunOutcome {
  nlohmann::json report;
  bool passed = false;
  std::filesystem::path report_path;
};

/// Validates without running. Throws ConfigError.
void check_config(const Config& cfg);
/// Validates, runs and writes the report. Throws ConfigError on validation
/// failures and propagates runtime errors.
RunOutcome run_experiment(const Config& cfg, const RunOptions& options);

}  // namespace mcflab
