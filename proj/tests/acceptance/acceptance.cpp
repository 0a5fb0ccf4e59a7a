// Acceptance suite: one PASS/FAIL line per criterion, sub-checks indented below.
// Every tolerance is written out at its use site.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mcflab/allencahn.hpp"
#include "mcflab/geometry.hpp"
#include "mcflab/io.hpp"
#include "mcflab/mcfsolve.hpp"
#include "mcflab/parallel.hpp"
#include "mcflab/studies.hpp"
#include "mcflab/weakform.hpp"

using namespace mcflab;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

class Checks {
public:
  void le(const std::string& what, double value, double limit) {
    add(value <= limit, what + " = " + fmt(value) + " <= " + fmt(limit));
  }
  void ge(const std::string& what, double value, double limit) {
    add(value >= limit, what + " = " + fmt(value) + " >= " + fmt(limit));
  }
  void in(const std::string& what, double value, double lo, double hi) {
    add(value >= lo && value <= hi, what + " = " + fmt(value) + " in [" + fmt(lo) + ", " + fmt(hi) + "]");
  }
  void truth(const std::string& what, bool ok) { add(ok, what); }
  void info(const std::string& what) { lines_.push_back("    info  " + what); }
  [[nodiscard]] bool ok() const { return failed_ == 0; }
  [[nodiscard]] const std::vector<std::string>& lines() const { return lines_; }

private:
  void add(bool ok, const std::string& line) {
    if (!ok) ++failed_;
    lines_.push_back(std::string(ok ? "    ok    " : "    FAIL  ") + line);
  }
  std::vector<std::string> lines_;
  int failed_ = 0;
};

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<int>(v.size()));
  int k = 0;
  for (double x : v) out[k++] = x;
  return out;
}

double max_error(const GraphFlow& flow, const Expr& exact) {
  const auto truth = sample_graph(exact, flow.grid);
  double e = 0.0;
  for (std::size_t k = 0; k < truth.f.size(); ++k) e = std::max(e, std::abs(truth.f[k] - flow.f[k]));
  return e;
}

AmbientField vertical(int n, const std::string& c) {
  std::vector<std::string> u(static_cast<std::size_t>(n), "0");
  u.back() = c;
  return AmbientField::parse(u, n);
}

unsigned threads() { return lab_threads(); }

// 1. exact identities
void identities(Checks& ck) {
  struct Flow {
    int n, N;
    const char* expr;
  };
  const std::vector<Flow> flows = {{2, 32, "0.2*sin(2*x1) + 0.1*t*x1"},
                                   {2, 48, "t - log(cos(x1))"},
                                   {2, 40, "sqrt(16 - x1^2)"},
                                   {3, 24, "sqrt(16 - x1^2 - x2^2)"},
                                   {3, 20, "0.3*sin(x1)*cos(2*x2) + t*x1*x2"}};
  double worst = 0.0;
  bool sums_exact = true, roundtrip = true;
  const auto dir = std::filesystem::temp_directory_path() / "mcflab-acceptance";
  int idx = 0;
  for (const auto& fl : flows) {
    const auto g = build_grid(fl.n, fl.N, 16, 0.0, 1.0);
    const auto e = Expr::parse(fl.expr, fl.n);
    const auto gf = sample_graph(e, g);
    auto height = [&](const Vec& y) {
      Vec X = Vec::Zero(fl.n);
      X.head(fl.n - 1) = y;
      return e(std::span<const double>(X.data(), static_cast<std::size_t>(fl.n)), 0.5);
    };
    Vec y1 = Vec::Zero(fl.n - 1), y2 = Vec::Zero(fl.n - 1);
    y1[0] = 0.1;
    y2[0] = -0.2;
    Vec c1(fl.n), c2(fl.n);
    c1 << y1, height(y1);
    c2 << y2, height(y2);
    auto planar = TestFunction::planar(Vec::Zero(fl.n - 1), 0.5, 0.6, 0.2);
    planar.separable = true;
    const std::vector<TestFunction> family = {TestFunction::bump(c1, 0.5, 0.5),
                                              TestFunction::bump(c2, 0.5, 0.4, BumpProfile::Polynomial), planar};
    std::vector<std::string> u(static_cast<std::size_t>(fl.n), "0");
    u[0] = "0.1";
    u.back() = "x1*t";
    const auto U = AmbientField::parse(u, fl.n);
    for (const auto& psi : family) {
      for (int j = 0; j <= g.M; ++j) worst = std::max(worst, std::abs(divergence_identity_residual(gf, j, psi)));
      const auto r = brakke_residual(gf, U, psi);
      sums_exact = sums_exact && r.total == r.curvature_term + r.transport_term + r.time_term;
    }
    const auto base = dir / ("flow" + std::to_string(idx++));
    dump_flow(gf, base, "acceptance");
    const auto back = load_flow(base);
    roundtrip = roundtrip && back.f.size() == gf.f.size() &&
                std::memcmp(back.f.data(), gf.f.data(), gf.f.size() * sizeof(double)) == 0 &&
                back.grid.dt == g.dt && back.grid.hx == g.hx && back.grid.N == g.N && back.grid.M == g.M;
  }
  std::filesystem::remove_all(dir);
  ck.le("divergence identity residual, 5 flows x 3 test functions, all levels", worst, 1e-12);
  ck.truth("brakke components sum bitwise to the total", sums_exact);
  ck.truth("field dump round trip is bit-exact", roundtrip);
}

// 2. curvature convergence
void curvature(Checks& ck) {
  const double R = 4.0;
  for (int n : {2, 3}) {
    std::vector<double> hx, err;
    double rel64 = 0.0;
    for (int N : {16, 32, 64}) {
      const auto g = build_grid(n, N, 1, 0.0, 1.0);
      const auto gf = sample_graph(Expr::parse(n == 2 ? "sqrt(16 - x1^2)" : "sqrt(16 - x1^2 - x2^2)", n), g);
      const auto H = mean_curvature(gf, 0).H;
      const double target = (n - 1) / R;
      double e = 0.0;
      for (std::size_t node = 0; node < g.spatial_size(); ++node) {
        if (!g.on_boundary(node)) e = std::max(e, std::abs(std::abs(H[node]) - target));
      }
      hx.push_back(g.hx);
      err.push_back(e);
      if (N == 64) rel64 = e / target;
    }
    const std::string tag = n == 2 ? "circle" : "sphere";
    ck.in(tag + " |H| order", log_slope(hx, err), 1.7, 2.3);
    ck.le(tag + " max relative |H| error at N=64", rel64, 0.01);
  }
}

// 3. motion-law solver
void solver(Checks& ck) {
  const auto gr = Expr::parse("t - log(cos(x1))", 2);
  std::vector<Level> levels;
  for (int N : {16, 32, 64}) levels.push_back({N, std::pow(2.0 / N, 2)});
  const auto st = convergence_study(gr, AmbientField::zero(2), 2, 0.0, 0.5, levels, Scheme::SemiImplicit, threads());
  ck.le("grim reaper max error at N=64, dt=hx^2, T=0.5", st.errors.back(), 1e-3);
  ck.in("grim reaper spatial order", st.order, 1.7, 2.3);

  for (int n : {2, 3}) {
    SolverConfig c;
    c.n = n;
    c.N = 32;
    c.dt = std::pow(2.0 / 32, 2);
    c.t1 = 0.5;
    const auto forced = Expr::parse("0.3*t", n);
    const auto tilt = Expr::parse(n == 2 ? "x1 + 0.3*t" : "x1 - 0.5*x2 + 0.3*t", n);
    const auto still = Expr::parse(n == 2 ? "0.4*x1 - 0.1" : "0.4*x1 - 0.3*x2 + 0.2", n);
    const auto u = vertical(n, "0.3");
    const std::string d = " (n=" + std::to_string(n) + ")";
    ck.le("forced flat max error" + d, max_error(solve(forced, u, c, forced).flow, forced), 1e-9);
    ck.le("forced tilted plane max error" + d, max_error(solve(tilt, u, c, tilt).flow, tilt), 1e-9);
    ck.le("static tilted plane max error" + d,
          max_error(solve(still, AmbientField::zero(n), c, still).flow, still), 1e-9);
  }
}

// 4. Brakke formulation on solver outputs
void brakke(Checks& ck) {
  const std::vector<int> Ns = {16, 32, 64};
  const auto family = planar_family({-0.3, 0.0, 0.3}, 0.25, 0.5, 0.2);
  const auto ff = solver_residuals("forced flat", Expr::parse("0.3*t", 2), vertical(2, "0.3"), 2, 0.5, Ns, 1.0,
                                   family, threads());
  const auto tilt = solver_residuals("forced tilted plane", Expr::parse("x1 + 0.3*t", 2), vertical(2, "0.3"), 2,
                                     0.5, Ns, 1.0, family, threads());
  const auto gr = solver_residuals("grim reaper", Expr::parse("t - log(cos(x1))", 2), AmbientField::zero(2), 2,
                                   0.5, Ns, 1.0, family, threads());
  const double C = residual_constant(ff);
  ck.info("C calibrated on forced flat = " + fmt(C));
  for (const auto* s : {&ff, &tilt, &gr}) {
    for (const auto& lv : s->levels) {
      const std::string d = s->name + " N=" + std::to_string(lv.N);
      ck.le("|velocity identity| " + d, lv.max_velocity, C * lv.scale());
      ck.le("|brakke residual| " + d, lv.max_brakke, C * lv.scale());
    }
  }
  for (std::size_t k = 1; k < gr.levels.size(); ++k) {
    const auto& a = gr.levels[k - 1];
    const auto& b = gr.levels[k];
    const std::string d = " N=" + std::to_string(a.N) + "->" + std::to_string(b.N);
    ck.ge("grim reaper velocity identity reduction" + d, a.max_velocity / b.max_velocity, 3.0);
    ck.ge("grim reaper brakke residual reduction" + d, a.max_brakke / b.max_brakke, 3.0);
  }
  ck.info("constant the grim reaper outputs need: " + fmt(residual_constant(gr)));

  const auto g = build_grid(2, 64, 256, 0.0, 0.5);
  const auto rev = sample_graph(Expr::parse("-t - log(cos(x1))", 2), g);
  const auto scan = witness_scan(rev, AmbientField::zero(2), {-0.4, -0.2, 0.0, 0.2, 0.4}, {-0.2, -0.1, 0.0, 0.1, 0.2},
                                 {0.15, 0.25, 0.35}, 0.3);
  ck.ge("reversed grim reaper: negative residuals in the 5x5x3 family", static_cast<double>(scan.negatives), 1.0);
  ck.le("reversed grim reaper: most negative residual", scan.min, 0.0);
}

// 5. blow-up
void blowup(Checks& ck) {
  const auto g = build_grid(2, 256, 2048, 0.0, 1.0);
  const auto gf = sample_graph(Expr::parse("sqrt(16 - x1^2)", 2), g);
  BlowupSpec spec;
  spec.y = Vec::Zero(1);
  spec.s = 0.5;
  spec.lambdas = {0.4, 0.2, 0.1, 0.05, 0.025};
  spec.offset = vec({0.0, -0.5});
  const auto st = blowup_study(gf, AmbientField::zero(2), spec);
  ck.ge("resolved lambdas", st.resolved, 3);
  ck.le("relative distance to the tangent-plane pairing at lambda=" + fmt(st.smallest_lambda), st.final_rel_error,
        0.10);
  ck.ge("curvature-term regression slope in lambda", st.curvature_slope, 0.8);
}

// 6. mollification lemmas and projection maps
void mollification(Checks& ck) {
  const std::vector<MollifyFlow> flows = {{"grim reaper", "t - log(cos(x1))", 1.0, 2},
                                          {"|x|^1.5 profile", "0.5*abs(x1)^1.5 + 0.2*t", 0.5, 2},
                                          {"sine wave", "0.3*sin(2*x1) + 0.2*t*t", 1.0, 2}};
  MollifySweepSetup setup;  // eps 0.2, 0.1, 0.05 at eps/hx = eps^2/dt = 12
  for (const auto& fl : flows) {
    const auto sw = mollify_sweep(fl, setup, threads());
    bool values = true, hessian = true, monotone = true;
    double roundtrip = 0.0, dt_distance_excess = 0.0;
    std::size_t failures = 0;
    for (std::size_t k = 0; k < sw.levels.size(); ++k) {
      const auto& lv = sw.levels[k];
      values = values && lv.bounds.values_hold;
      hessian = hessian && lv.bounds.hessian_holds;
      if (k > 0) monotone = monotone && lv.max_gradF_minus_I <= 1.05 * sw.levels[k - 1].max_gradF_minus_I;
      roundtrip = std::max(roundtrip, lv.max_roundtrip);
      failures += lv.projection_failures;
      // O(dt^2) with constant 10, plus 1e-8
      dt_distance_excess = std::max(dt_distance_excess, lv.dt_distance_error / (10.0 * lv.dt * lv.dt + 1e-8));
    }
    const std::string d = " [" + fl.name + "]";
    ck.truth("value bound sup|f^eps - f| <= 2[f] eps^(1+alpha) at every eps" + d, values);
    ck.truth("Hessian bound ||D^2 f^eps|| <= c(rho) eps^(alpha-1) at every eps" + d, hessian);
    ck.ge("decay order of sup|f^eps - f|" + d, sw.decay_order, 1.0 + fl.alpha - 0.2);
    std::ostringstream gf;
    for (const auto& lv : sw.levels) gf << fmt(lv.max_gradF_minus_I) << ' ';
    ck.truth("max ||grad F - I|| non-increasing within 5%: " + gf.str() + d, monotone);
    ck.le("F(G(x)) round trip" + d, roundtrip, 1e-8);
    ck.truth("projection maps built at every node" + d, failures == 0);
    ck.le("d_t d^eps error / (10 dt^2 + 1e-8)" + d, dt_distance_excess, 1.0);
  }
}

// 7. change-of-variables limit
void change_of_variables(Checks& ck) {
  const auto phi = TestFunction::planar(vec({0.0}), 0.25, 0.7, 0.15, BumpProfile::Smooth);
  const auto sw = cov_sweep(Expr::parse("t - log(cos(x1))", 2), 2, {0.2, 0.1, 0.05}, 12.0, 0.0, 0.5, phi, threads());
  bool decreasing = true;
  std::ostringstream gaps;
  for (std::size_t k = 0; k < sw.levels.size(); ++k) {
    gaps << fmt(sw.levels[k].cov.gap) << ' ';
    if (k > 0) decreasing = decreasing && sw.levels[k].cov.gap < sw.levels[k - 1].cov.gap;
  }
  ck.truth("gap decreases across eps = 0.2, 0.1, 0.05: " + gaps.str(), decreasing);
  // the grim reaper is smooth, alpha = 1
  ck.ge("observed order of the gap", sw.order, 1.0);
}

// 8. Allen-Cahn
void allen_cahn(Checks& ck) {
  const auto well = DoubleWell::standard();
  const PhaseMap map(well);
  ck.le("|sigma - 4/3|", std::abs(map.sigma() - 4.0 / 3.0), 1e-8);
  ck.le("|Phi(0) - 1/2|", std::abs(map(0.0) - 0.5), 1e-8);

  AcCircleSetup setup;  // eps 0.04 / 0.02 on N 128 / 256, Strang with Fourier symbol
  const auto cases = ac_circle_study(setup, well, threads());
  double cmin = INFINITY, cmax = 0.0;
  for (const auto& c : cases) {
    const std::string d = " (eps=" + fmt(c.eps) + ", N=" + std::to_string(c.N) + ")";
    ck.le("circle radius error / eps" + d, c.max_error / c.eps, 0.25);
    ck.truth("energy non-increasing at every step" + d, c.energy_monotone);
    ck.le("by-parts gap" + d, c.velocity.gap, 1e-12);
    ck.truth("time-derivative chain inequality" + d, c.tderiv.chain_holds);
    cmin = std::min(cmin, c.tderiv.constant);
    cmax = std::max(cmax, c.tderiv.constant);
  }
  ck.le("radius error ratio eps=0.02 / eps=0.04", cases[1].max_error / cases[0].max_error, 0.6);
  ck.le("time-derivative constant max/min across eps", cmax / cmin, 2.0 - 1e-12);

  const auto flat = ac_forced_flat_study(AcFlatSetup{}, well);
  ck.truth("forced flat interface stays graphical", flat.graph.has_value());
  ck.le("forced flat height error / (eps + hx)", flat.max_height_error / (flat.eps + flat.hx), 1.0);
  ck.le("forced flat by-parts gap", flat.velocity.gap, 1e-12);
}

// 9. exponent arithmetic
void exponents(Checks& ck) {
  const auto a = admissibility(1, 4, 4);
  ck.truth("k=1, p=4, q=4: alpha = 0.25, admissible", a.admissible && std::abs(a.alpha - 0.25) <= 1e-14);
  const auto b = theorem_exponents(3, 2.5, 4);
  ck.truth("n=3, beta=2.5, gamma=4: p=10, q=4, alpha=0.3",
           b.admissible && std::abs(b.p - 10.0) <= 1e-12 && b.q == 4.0 && std::abs(b.alpha - 0.3) <= 1e-14);
  const auto c = admissibility(2, 2, 2);
  ck.truth("k=2, p=q=2: inadmissible", !c.admissible);
  ck.truth("alpha <= 0 rejected (k=1, p=2, q=4 gives alpha = 0)", !admissibility(1, 2, 4).admissible);
  // threshold n gamma / (2(gamma-1)) = 2 for n = 3, gamma = 4
  ck.truth("beta at the threshold rejected (n=3, beta=2, gamma=4)", !theorem_exponents(3, 2.0, 4).admissible);
  ck.truth("beta below the threshold rejected (n=3, beta=1.9, gamma=4)", !theorem_exponents(3, 1.9, 4).admissible);
  ck.truth("beta above the threshold accepted (n=3, beta=2.1, gamma=4)", theorem_exponents(3, 2.1, 4).admissible);
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Checks&)>>> criteria = {
      {"exact identities", identities},
      {"curvature convergence", curvature},
      {"motion-law solver", solver},
      {"Brakke formulation", brakke},
      {"blow-up", blowup},
      {"mollification lemmas", mollification},
      {"change-of-variables limit", change_of_variables},
      {"Allen-Cahn pipeline", allen_cahn},
      {"exponent arithmetic", exponents},
  };
  int failed = 0;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Checks ck;
    const auto t0 = std::chrono::steady_clock::now();
    std::string error;
    try {
      criteria[i].second(ck);
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = error.empty() && ck.ok();
    if (!pass) ++failed;
    std::printf("%s  criterion %zu: %s  [%.1f s]\n", pass ? "PASS" : "FAIL", i + 1, criteria[i].first, secs);
    for (const auto& line : ck.lines()) std::printf("%s\n", line.c_str());
    if (!error.empty()) std::printf("    error: %s\n", error.c_str());
    std::fflush(stdout);
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%d of %zu criteria passed  [%.1f s]\n", static_cast<int>(criteria.size()) - failed, criteria.size(),
              total);
  return failed == 0 ? 0 : 1;
}
