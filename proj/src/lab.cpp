#include "mcflab/lab.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

namespace mcflab {

namespace {

nlohmann::json number(double v) {
  // JSON has no inf/nan; keep them visible as strings
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

}  // namespace

Report::Report(std::string experiment, unsigned threads, std::filesystem::path output, bool dumps)
    : experiment_(std::move(experiment)), threads_(threads), output_(std::move(output)), dumps_(dumps) {}

nlohmann::json& Report::add_case(const std::string& name) {
  cases_.push_back({{"name", name}});
  return cases_.back();
}

void Report::metric(const std::string& key, nlohmann::json value) { metrics_[key] = std::move(value); }

void Report::verdict(const std::string& name, bool pass, nlohmann::json value, nlohmann::json limit,
                     const char* relation) {
  nlohmann::json v = {{"name", name}, {"pass", pass}, {"relation", relation}, {"value", std::move(value)}};
  if (!limit.is_null()) v["limit"] = std::move(limit);
  verdicts_.push_back(std::move(v));
  if (!pass) ++failed_;
}

void Report::le(const std::string& name, double value, double limit) {
  verdict(name, value <= limit, number(value), number(limit), "<=");
}

void Report::ge(const std::string& name, double value, double limit) {
  verdict(name, value >= limit, number(value), number(limit), ">=");
}

void Report::in(const std::string& name, double value, double lo, double hi) {
  verdict(name, value >= lo && value <= hi, number(value), nlohmann::json::array({number(lo), number(hi)}), "in");
}

void Report::truth(const std::string& name, bool ok) { verdict(name, ok, ok, nullptr, "true"); }

void Report::dump(const std::string& name, const Field& field) {
  if (!dumps_) return;
  Field f = field;
  f.header.experiment = experiment_;
  dump_field(f, output_ / name);
  artifacts_.push_back(name + ".bin");
}

void Report::dump(const std::string& name, const GraphFlow& flow) { dump(name, flow_field(flow, experiment_)); }

nlohmann::json Report::json(const nlohmann::json& input, double wall_clock_s) const {
  return {{"schema", kReportSchema},
          {"experiment", experiment_},
          {"input", input},
          {"cases", cases_},
          {"metrics", metrics_},
          {"verdicts", verdicts_},
          {"passed", passed()},
          {"summary", {{"verdicts", verdicts_.size()}, {"failed", failed_}}},
          {"artifacts", artifacts_},
          {"wall_clock_s", wall_clock_s}};
}

namespace {

struct Prepared {
  const Experiment* experiment;
  ExperimentAction action;
  std::filesystem::path output;
  bool dumps;
};

Prepared prepare(const Config& cfg) {
  const std::string id = cfg.text("experiment.id");
  const Experiment& ex = find_experiment(id);
  Prepared p{&ex, {}, cfg.text("experiment.output", "lab-out/" + id), cfg.flag("experiment.dump", true)};
  cfg.integer("experiment.seed", 20240611);
  p.action = ex.prepare(cfg);
  cfg.reject_unread();
  return p;
}

}  // namespace

const Experiment& find_experiment(const std::string& id) {
  for (const auto& e : experiments()) {
    if (e.id == id) return e;
  }
  std::string known;
  for (const auto& e : experiments()) known += (known.empty() ? "" : ", ") + e.id;
  throw ConfigError("experiment.id", "unknown experiment '" + id + "' (known: " + known + ")");
}

void check_config(const Config& cfg) { prepare(cfg); }

RunOutcome run_experiment(const Config& cfg, const RunOptions& options) {
  const auto p = prepare(cfg);
  const auto output = options.output.empty() ? p.output : options.output;
  Report report(p.experiment->id, options.threads, output, options.write && p.dumps);
  if (options.write) std::filesystem::create_directories(output);
  const auto start = std::chrono::steady_clock::now();
  p.action(report);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  RunOutcome out;
  out.report = report.json(cfg.echo(), secs);
  out.passed = report.passed();
  if (options.write) {
    out.report_path = output / "report.json";
    std::ofstream f(out.report_path, std::ios::trunc);
    if (!f) throw IoError("cannot write " + out.report_path.string());
    f << out.report.dump(2) << '\n';
  }
  return out;
}

}  // namespace mcflab
