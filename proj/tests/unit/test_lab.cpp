#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>

#include "mcflab/lab.hpp"

using namespace mcflab;

namespace {

RunOutcome run_text(const std::string& text, unsigned threads = 1) {
  RunOptions opt;
  opt.threads = threads;
  opt.write = false;
  return run_experiment(Config::from_string(text), opt);
}

std::string error_field(const std::string& text) {
  try {
    check_config(Config::from_string(text));
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<none>";
}

}  // namespace

TEST_CASE("typed lookups parse lists and record defaults") {
  const auto c = Config::from_string(
      "[a]\nxs = 1, 2.5, -3e-2\nns = 4,8\nf = yes\ne = pow(x1, 2) + t; 0.3\ns = hello\n");
  CHECK(c.reals("a.xs") == std::vector<double>{1.0, 2.5, -0.03});
  CHECK(c.integers("a.ns") == std::vector<int>{4, 8});
  CHECK(c.flag("a.f", false));
  CHECK(c.texts("a.e") == std::vector<std::string>{"pow(x1, 2) + t", "0.3"});
  CHECK(c.real("b.missing", 0.5) == 0.5);
  CHECK(c.text("a.s") == "hello");
  const auto echo = c.echo();
  CHECK(echo["b"]["missing"] == 0.5);
  CHECK(echo["a"]["ns"] == nlohmann::json({4, 8}));
  CHECK_NOTHROW(c.reject_unread());
}

TEST_CASE("lookup failures name the field") {
  const auto c = Config::from_string("[a]\nx = 1.5.2\nn = 2.5\nb = maybe\nl = 1,,2\n");
  CHECK_THROWS_WITH_AS(c.real("a.x"), "a.x: expected a number, got '1.5.2'", ConfigError);
  CHECK_THROWS_AS(c.integer("a.n"), ConfigError);
  CHECK_THROWS_AS(c.flag("a.b", true), ConfigError);
  CHECK_THROWS_AS(c.reals("a.l"), ConfigError);
  CHECK_THROWS_WITH_AS(c.real("a.y"), "a.y: required field missing", ConfigError);
  CHECK_THROWS_AS(Config::from_string("[a\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(Config::from_string("x = 1\n"), ConfigError);
}

TEST_CASE("unread keys are rejected") {
  const auto c = Config::from_string("[a]\nx = 1\ny = 2\n");
  c.real("a.x");
  CHECK_THROWS_WITH_AS(c.reject_unread(), "a.y: unknown field for this experiment", ConfigError);
}

TEST_CASE("every experiment id is registered once") {
  const std::vector<std::string> ids = {"mcf-convergence", "brakke-verify", "brakke-violate", "blowup",
                                        "mollify-lemmas",  "projection-maps", "ac-circle",      "ac-forced-flat",
                                        "ac-tderiv",       "exponents",       "lpq"};
  REQUIRE(experiments().size() == ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) CHECK(experiments()[k].id == ids[k]);
  CHECK_THROWS_AS(find_experiment("mcf"), ConfigError);
}

TEST_CASE("malformed configs fail validation on the offending field") {
  CHECK(error_field("[experiment]\nid = ac-circle\n[physics]\nN = 128\n") == "physics.eps");
  CHECK(error_field("[experiment]\nid = ac-circle\n[physics]\neps = 0.04, 0.02\nN = 128\n") == "physics.N");
  CHECK(error_field("[experiment]\nid = ac-circle\n[physics]\neps = 0.04\nN = 128\nT = 0.2\n") == "physics.T");
  CHECK(error_field("[physics]\np = 2\n") == "experiment.id");
  CHECK(error_field("[experiment]\nid = zzz\n") == "experiment.id");
  CHECK(error_field("[experiment]\nid = mcf-convergence\n") == "flow.exact");
  CHECK(error_field("[experiment]\nid = mcf-convergence\n[grid]\nN = 16, 32\n[flow]\nexact = t\n") == "grid.N");
  CHECK(error_field("[experiment]\nid = mcf-convergence\n[flow]\nexact = t +\n") == "flow.exact");
  CHECK(error_field("[experiment]\nid = mcf-convergence\n[flow]\nexact = t\nu = 0\n") == "flow.u");
  CHECK(error_field("[experiment]\nid = lpq\n[physics]\np = 1.5\n") == "physics.p");
  CHECK(error_field("[experiment]\nid = lpq\n[grid]\nN = 16\nextra = 1\n") == "grid.extra");
  CHECK(error_field("[experiment]\nid = exponents\n[physics]\nn = 3\nbeta = 2.5\n") == "physics.gamma");
  CHECK(error_field("[experiment]\nid = exponents\n[physics]\nmode = other\n") == "physics.mode");
  CHECK(error_field("[experiment]\nid = mollify-lemmas\n[flow]\nexpr = t\n[physics]\neps = 0.1, -0.05\n") ==
        "physics.eps");
  CHECK(error_field("[experiment]\nid = brakke-violate\n[family]\nlambda = 0.9\n") == "family.xs");
  CHECK(error_field("[experiment]\nid = ac-circle\n[physics]\neps = 0.04\nN = 128\n") == "<none>");
}

TEST_CASE("exponents experiment reports the theorem-mode values") {
  const auto out = run_text(
      "[experiment]\nid = exponents\n[physics]\nn = 3\nbeta = 2.5\ngamma = 4\n[expect]\np = 10\nq = 4\nalpha = 0.3\n");
  CHECK(out.passed);
  const auto& cs = out.report["cases"][0];
  CHECK(cs["p"].get<double>() == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(cs["q"].get<double>() == 4.0);
  CHECK(cs["alpha"].get<double>() == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(out.report["verdicts"].size() == 4);
}

TEST_CASE("a failing expectation fails the run") {
  const auto out = run_text("[experiment]\nid = exponents\n[physics]\nmode = power\nk = 2\np = 2\nq = 2\n");
  CHECK_FALSE(out.passed);
  CHECK(out.report["summary"]["failed"] == 1);
  const auto ok = run_text(
      "[experiment]\nid = exponents\n[physics]\nmode = power\nk = 2\np = 2\nq = 2\n[expect]\nadmissible = false\n");
  CHECK(ok.passed);
}

TEST_CASE("lpq experiment on the flat graph matches the closed-form norms") {
  // |u| = 1 on [-1,1] x (0,1): sqrt(2)
  const auto a = run_text("[experiment]\nid = lpq\n[flow]\nu = 0; 1\n[expect]\nvalue = 1.4142135623730951\n"
                          "[thresholds]\nrel_tolerance = 1e-12\n");
  CHECK(a.passed);
  // u = t e_n, p = 2, q = 4: (4/5)^(1/4), trapezoid error O(dt^2)
  const auto b = run_text("[experiment]\nid = lpq\n[grid]\nM = 256\n[flow]\nu = 0; t\n[physics]\nq = 4\n");
  CHECK(b.report["cases"][0]["value"].get<double>() == doctest::Approx(std::pow(0.8, 0.25)).epsilon(1e-4));
}

TEST_CASE("brakke-verify passes on the forced-flat solution") {
  const auto out = run_text("[experiment]\nid = brakke-verify\n[flow]\nexact = 0.3*t\nu = 0; 0.3\n");
  CHECK(out.passed);
  // no reductions are asserted on round-off residuals
  CHECK(out.report["verdicts"].size() == 6);
}

TEST_CASE("reports are deterministic apart from the wall clock") {
  const std::string text =
      "[experiment]\nid = brakke-violate\n[grid]\nN = 32\nM = 128\n[family]\nxs = -0.2, 0.2\noffsets = 0, 0.1\n";
  auto a = run_text(text, 1).report;
  auto b = run_text(text, 4).report;
  a.erase("wall_clock_s");
  b.erase("wall_clock_s");
  CHECK(a.dump() == b.dump());
}

TEST_CASE("run writes the report and dumps under the output directory") {
  const auto dir = std::filesystem::temp_directory_path() / "mcflab_lab_test";
  std::filesystem::remove_all(dir);
  RunOptions opt;
  opt.output = dir;
  const auto out = run_experiment(
      Config::from_string("[experiment]\nid = mcf-convergence\n[grid]\nN = 8, 16, 32\n[flow]\nexact = 0.2*x1 + 0.1\n"),
      opt);
  CHECK(out.passed);
  CHECK(std::filesystem::exists(dir / "report.json"));
  CHECK(std::filesystem::exists(dir / "flow_N32.bin"));
  CHECK(load_flow(dir / "flow_N32").grid.N == 32);
  CHECK(out.report["schema"] == kReportSchema);
  CHECK(out.report["input"]["grid"]["N"] == nlohmann::json({8, 16, 32}));
}
