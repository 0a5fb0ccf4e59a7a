#include "mcflab/studies.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mcflab/parallel.hpp"

namespace mcflab {

namespace {

std::string number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double max_error(const GraphFlow& flow, const Expr& exact) {
  const auto truth = sample_graph(exact, flow.grid);
  double e = 0.0;
  for (std::size_t k = 0; k < truth.f.size(); ++k) e = std::max(e, std::abs(truth.f[k] - flow.f[k]));
  return e;
}

}  // namespace

std::vector<TestFunction> planar_family(const std::vector<double>& centers, double s, double radius,
                                        double time_radius, BumpProfile profile) {
  std::vector<TestFunction> out;
  for (double c : centers) {
    Vec y(1);
    y << c;
    out.push_back(TestFunction::planar(y, s, radius, time_radius, profile));
  }
  return out;
}

ResidualSeries solver_residuals(const std::string& name, const Expr& exact, const AmbientField& u, int n,
                                double t1, const std::vector<int>& Ns, double dt_scale,
                                const std::vector<TestFunction>& family, unsigned threads) {
  ResidualSeries series;
  series.name = name;
  series.levels.resize(Ns.size());
  std::vector<GraphFlow> flows(Ns.size());
  parallel_for(Ns.size(), threads, [&](std::size_t i) {
    SolverConfig cfg;
    cfg.n = n;
    cfg.N = Ns[i];
    const double hx = 2.0 / Ns[i];
    cfg.dt = dt_scale * hx * hx;
    cfg.t1 = t1;
    auto run = solve(exact, u, cfg, exact);
    auto& lv = series.levels[i];
    lv.N = Ns[i];
    lv.hx = run.flow.grid.hx;
    lv.dt = run.flow.grid.dt;
    lv.solver_error = max_error(run.flow, exact);
    for (const auto& psi : family) {
      // test functions ignoring x_n are extended to n dimensions here
      TestFunction phi = psi;
      if (phi.center.size() != n) {
        Vec c = Vec::Zero(n);
        c.head(phi.center.size()) = phi.center;
        phi.center = c;
      }
      lv.velocity.push_back(velocity_identity_residual(run.flow, phi));
      lv.brakke.push_back(brakke_residual(run.flow, u, phi).total);
      lv.max_velocity = std::max(lv.max_velocity, std::abs(lv.velocity.back()));
      lv.max_brakke = std::max(lv.max_brakke, std::abs(lv.brakke.back()));
    }
    flows[i] = std::move(run.flow);
  });
  if (!flows.empty()) series.finest = std::move(flows.back());
  return series;
}

double residual_constant(const ResidualSeries& s) {
  double c = 0.0;
  for (const auto& lv : s.levels) c = std::max(c, std::max(lv.max_velocity, lv.max_brakke) / lv.scale());
  return c;
}

WitnessScan witness_scan(const GraphFlow& gf, const AmbientField& u, const std::vector<double>& xs,
                         const std::vector<double>& offsets, const std::vector<double>& times, double lambda,
                         double threshold) {
  const auto& g = gf.grid;
  if (g.n != 2) throw WeakFormError("witness scans are defined for curves (n = 2)");
  WitnessScan scan;
  for (double x : xs) {
    const int i = static_cast<int>(std::lround((x + 1.0) / g.hx));
    const std::size_t node = g.node({i, 0});
    for (double off : offsets) {
      for (double s : times) {
        const int j = static_cast<int>(std::lround((s - g.t0) / g.dt));
        Vec c(2);
        c << g.x(i), gf.at(j, node) + off;
        scan.family.push_back(TestFunction::bump(c, g.t(j), lambda));
      }
    }
  }
  scan.residual.resize(scan.family.size());
  for (std::size_t k = 0; k < scan.family.size(); ++k) {
    scan.residual[k] = brakke_residual(gf, u, scan.family[k]).total;
    if (scan.residual[k] < scan.residual[scan.argmin]) scan.argmin = k;
    if (scan.residual[k] < -threshold) ++scan.negatives;
  }
  if (!scan.residual.empty()) scan.min = scan.residual[scan.argmin];
  return scan;
}

BlowupStudy blowup_study(const GraphFlow& gf, const AmbientField& u, const BlowupSpec& spec) {
  BlowupStudy st;
  st.result = blowup_residual(gf, u, spec);
  std::vector<double> lam, curv;
  for (const auto& e : st.result.entries) {
    if (!e.resolved) continue;
    ++st.resolved;
    lam.push_back(e.lambda);
    curv.push_back(std::abs(e.curvature_term));
    st.smallest_lambda = e.lambda;
    st.final_value = e.value;
  }
  if (st.resolved > 0) st.final_rel_error = std::abs(st.final_value / st.result.limit - 1.0);
  if (st.resolved > 1) st.curvature_slope = log_slope(lam, curv);
  return st;
}

MollifySweep mollify_sweep(const MollifyFlow& flow, const MollifySweepSetup& setup, unsigned threads) {
  if (setup.eps.empty()) throw MollifyError("empty eps sweep");
  MollifySweep sweep;
  sweep.flow = flow;
  sweep.levels.resize(setup.eps.size());
  const double emax = *std::max_element(setup.eps.begin(), setup.eps.end());
  const auto expr = Expr::parse(flow.expr, flow.n);
  parallel_for(setup.eps.size(), threads, [&](std::size_t i) {
    const double eps = setup.eps[i];
    auto& lv = sweep.levels[i];
    lv.eps = eps;
    lv.N = static_cast<int>(std::lround(2.0 * setup.ratio / eps));
    lv.M = static_cast<int>(std::lround((setup.t1 - setup.t0) * setup.ratio / (eps * eps)));
    const auto g = build_grid(flow.n, lv.N, lv.M, setup.t0, setup.t1);
    lv.dt = g.dt;
    auto base = std::make_shared<const GraphFlow>(sample_graph(expr, g));
    auto mg = mollify_graph(base, eps);
    const double semi = parabolic_seminorm(*base, flow.alpha, setup.seed).value;
    lv.bounds = lemma_bounds(mg, flow.alpha, semi);

    for (int j = 0; j <= g.M; ++j) {
      const double t = g.t(j);
      if (t < setup.t0 + emax * emax - 1e-12 || t > setup.t1 - emax * emax + 1e-12) continue;
      for (std::size_t node = 0; node < g.spatial_size(); ++node) {
        if (!mg.inner(j, node)) continue;
        const Vec x = g.coords(node);
        if (x.cwiseAbs().maxCoeff() > 1.0 - emax + 1e-12) continue;
        lv.sup_common = std::max(lv.sup_common, std::abs(mg.at(j, node) - base->at(j, node)));
      }
    }

    if (!setup.projections) return;
    const int jm = g.M / 2;
    const auto pr = projection_maps(mg, jm);
    lv.max_gradF_minus_I = pr.max_gradF_minus_I;
    lv.max_roundtrip = pr.max_roundtrip;
    lv.projection_failures = pr.failures.size();
    lv.max_curvature_ratio = pr.max_curvature_ratio;
    const double t = g.t(jm);
    for (double x : setup.probe_x) {
      Vec xp = Vec::Zero(g.axes());
      xp[0] = x;
      for (double off : setup.probe_offsets) {
        Vec X(flow.n);
        X.head(g.axes()) = xp;
        X[g.axes()] = mg(xp, t).value + off;
        const auto sd = signed_distance(mg, X, t);
        const double fd = (signed_distance(mg, X, t + g.dt).d - signed_distance(mg, X, t - g.dt).d) / (2.0 * g.dt);
        lv.dt_distance_error = std::max(lv.dt_distance_error, std::abs(fd - sd.dt));
      }
    }
  });
  std::vector<double> e, d;
  for (const auto& lv : sweep.levels) {
    e.push_back(lv.eps);
    d.push_back(lv.sup_common);
  }
  if (e.size() > 1) sweep.decay_order = log_slope(e, d);
  return sweep;
}

CovSweep cov_sweep(const Expr& flow, int n, const std::vector<double>& eps, double ratio, double t0, double t1,
                   const TestFunction& phi, unsigned threads) {
  if (eps.empty()) throw MollifyError("empty eps sweep");
  CovSweep sweep;
  sweep.levels.resize(eps.size());
  const double emax = *std::max_element(eps.begin(), eps.end());
  parallel_for(eps.size(), threads, [&](std::size_t i) {
    auto& lv = sweep.levels[i];
    lv.eps = eps[i];
    lv.N = static_cast<int>(std::lround(2.0 * ratio / lv.eps));
    lv.M = static_cast<int>(std::lround((t1 - t0) * ratio / (lv.eps * lv.eps)));
    lv.stride = std::max(1, static_cast<int>(std::lround(emax / lv.eps)));
    const auto g = build_grid(n, lv.N, lv.M, t0, t1);
    const auto mg = mollify_graph(sample_graph(flow, g), lv.eps);
    lv.cov = change_of_variables_check(mg, phi, 1, lv.stride);
  });
  std::vector<double> e, gap;
  for (const auto& lv : sweep.levels) {
    e.push_back(lv.eps);
    gap.push_back(lv.cov.gap);
  }
  if (e.size() > 1) sweep.order = log_slope(e, gap);
  return sweep;
}

std::vector<AcCircleCase> ac_circle_study(const AcCircleSetup& setup, const DoubleWell& well, unsigned threads) {
  if (setup.eps.size() != setup.N.size()) throw AcError("eps and N lists differ in length");
  const auto d0 = Expr::parse(number(setup.R0) + " - sqrt(x1^2 + x2^2)", 2);
  std::vector<AcCircleCase> cases(setup.eps.size());
  parallel_for(cases.size(), threads, [&](std::size_t i) {
    AcConfig cfg;
    cfg.n = 2;
    cfg.N = setup.N[i];
    cfg.eps = setup.eps[i];
    cfg.T = setup.T;
    cfg.dt_fraction = setup.dt_fraction;
    cfg.scheme = setup.scheme;
    cfg.spectral = setup.spectral;
    cfg.output_every = setup.output_every;
    cfg.extraction = Extraction::Radial;
    auto psi = TestFunction::bump(Vec::Zero(2), setup.probe_time, setup.probe_radius);
    psi.time_radius = setup.probe_time_radius;
    cfg.probes.push_back(psi);
    auto run = run_allen_cahn(cfg, well, AmbientField::zero(2), d0);
    auto& c = cases[i];
    c.eps = cfg.eps;
    c.N = cfg.N;
    c.dt = run.dt;
    c.steps = run.steps;
    c.times = run.output_times;
    c.radius = run.radius;
    for (std::size_t k = 0; k < c.times.size(); ++k) {
      c.exact.push_back(std::sqrt(setup.R0 * setup.R0 - 2.0 * c.times[k]));
      const double err = c.radius[k] - c.exact[k];
      if (std::abs(err) > c.max_error) {
        c.max_error = std::abs(err);
        c.signed_error = err;
      }
    }
    c.energy_monotone = run.energy_monotone;
    c.max_energy_increase = run.max_energy_increase;
    c.max_abs_phi = run.max_abs_phi;
    c.tderiv = run.tderiv.front();
    c.velocity = run.velocity.front();
    c.phi_final = std::move(run.phi_final);
    c.grid = run.field.grid;
  });
  return cases;
}

AcFlatStudy ac_forced_flat_study(const AcFlatSetup& setup, const DoubleWell& well) {
  AcConfig cfg;
  cfg.n = 2;
  cfg.N = setup.N;
  cfg.eps = setup.eps;
  cfg.T = setup.T;
  cfg.scheme = setup.scheme;
  cfg.spectral = setup.spectral;
  cfg.output_every = setup.output_every;
  cfg.extraction = Extraction::Graph;
  auto psi = TestFunction::bump(Vec::Zero(2), setup.probe_time, setup.probe_radius);
  psi.time_radius = setup.probe_time_radius;
  cfg.probes.push_back(psi);
  const auto u = AmbientField::parse({"0", number(setup.c)}, 2);
  // interfaces at x_n = 0 and x_n = +-1 of the periodic box
  const auto run = run_allen_cahn(cfg, well, u, Expr::parse("abs(1 - abs(x2 + 0.5)) - 0.5", 2));

  AcFlatStudy st;
  st.eps = setup.eps;
  st.hx = 2.0 / setup.N;
  st.graph_lost_at = run.graph_lost_at;
  st.velocity = run.velocity.front();
  st.tderiv = run.tderiv.front();
  st.graph = run.graph;
  if (st.graph) {
    const auto& gf = *st.graph;
    for (int j = 0; j <= gf.grid.M; ++j) {
      for (double f : gf.slice(j)) st.max_height_error = std::max(st.max_height_error, std::abs(f - setup.c * gf.grid.t(j)));
    }
  }
  const int K = 800;
  for (int a = 0; a < K; ++a) {
    for (int b = 0; b < K; ++b) {
      const double t = setup.T * (b + 0.5) / K;
      Vec X(2);
      X << -1.0 + 2.0 * (a + 0.5) / K, setup.c * t;
      st.exact_pairing += setup.c * psi.value(X, t) * (2.0 / K) * (setup.T / K);
    }
  }
  return st;
}

}  // namespace mcflab
