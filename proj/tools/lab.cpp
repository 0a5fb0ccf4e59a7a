// lab: run, list and validate experiment configs.
//
// Exit codes: 0 all verdicts pass, 1 a verdict failed, 2 usage or config
// error, 3 runtime error.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>

#include "mcflab/lab.hpp"
#include "mcflab/parallel.hpp"

namespace {

constexpr int kPass = 0, kVerdictFailure = 1, kUsage = 2, kRuntime = 3;

// LAB_THREADS must be a positive integer when set
bool threads_env_ok() {
  const char* env = std::getenv("LAB_THREADS");
  if (!env) return true;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  return *env != '\0' && *end == '\0' && v >= 1;
}

int run(const std::string& path, const std::string& output, bool quiet) {
  const auto cfg = mcflab::Config::from_file(path);
  mcflab::RunOptions opt;
  opt.threads = mcflab::lab_threads();
  opt.output = output;
  const auto out = mcflab::run_experiment(cfg, opt);
  if (!quiet) {
    for (const auto& v : out.report["verdicts"]) {
      std::printf("%s  %s\n", v["pass"].get<bool>() ? "ok  " : "FAIL", v["name"].get<std::string>().c_str());
    }
  }
  const auto& s = out.report["summary"];
  std::printf("%s: %zu of %zu verdicts passed, report %s\n", out.report["experiment"].get<std::string>().c_str(),
              s["verdicts"].get<std::size_t>() - s["failed"].get<std::size_t>(), s["verdicts"].get<std::size_t>(),
              out.report_path.string().c_str());
  return out.passed ? kPass : kVerdictFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean curvature flow and phase-field experiment runner"};
  app.require_subcommand(1);

  std::string config, output;
  bool quiet = false;
  auto* run_cmd = app.add_subcommand("run", "Run the experiment described by a config file");
  run_cmd->add_option("config", config, "INI config file")->required();
  run_cmd->add_option("-o,--output", output, "Output directory (overrides [experiment] output)");
  run_cmd->add_flag("-q,--quiet", quiet, "Only print the summary line");

  auto* list_cmd = app.add_subcommand("list", "List the experiment ids");

  std::string check_path;
  auto* check_cmd = app.add_subcommand("check", "Validate a config file without running it");
  check_cmd->add_option("config", check_path, "INI config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }
  if (!threads_env_ok()) {
    std::fprintf(stderr, "error: LAB_THREADS must be a positive integer\n");
    return kUsage;
  }

  try {
    if (*list_cmd) {
      for (const auto& e : mcflab::experiments()) std::printf("%-16s %s\n", e.id.c_str(), e.summary.c_str());
      return kPass;
    }
    if (*check_cmd) {
      const auto cfg = mcflab::Config::from_file(check_path);
      mcflab::check_config(cfg);
      std::printf("%s: ok (%s)\n", check_path.c_str(), cfg.text("experiment.id").c_str());
      return kPass;
    }
    if (*run_cmd) return run(config, output, quiet);
  } catch (const mcflab::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return kRuntime;
  }
  return kUsage;
}
