#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>

#include "mcflab/geometry.hpp"
#include "mcflab/io.hpp"
#include "mcflab/lab.hpp"
#include "mcflab/mcfsolve.hpp"
#include "mcflab/weakform.hpp"

namespace py = pybind11;
using namespace mcflab;

namespace {

std::vector<py::ssize_t> flow_shape(const SpaceTimeGrid& g) {
  std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(g.time_levels())};
  for (int a = 0; a < g.axes(); ++a) shape.push_back(g.per_axis());
  return shape;
}

py::array_t<double> samples(const GraphFlow& gf) {
  py::array_t<double> out(flow_shape(gf.grid));
  std::copy(gf.f.begin(), gf.f.end(), out.mutable_data());
  return out;
}

py::array_t<double> slice(const SpaceTimeGrid& g, const std::vector<double>& v) {
  std::vector<py::ssize_t> shape;
  for (int a = 0; a < g.axes(); ++a) shape.push_back(g.per_axis());
  py::array_t<double> out(shape);
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::object json_to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

py::dict exponents_dict(const Exponents& e) {
  py::dict d;
  d["k"] = e.k;
  d["p"] = e.p;
  d["q"] = e.q;
  d["alpha"] = e.alpha;
  d["admissible"] = e.admissible;
  d["any_p"] = e.any_p;
  d["alpha_max"] = e.alpha_max;
  d["reason"] = e.reason;
  return d;
}

AmbientField field_of(const std::vector<std::string>& u, int n) {
  return u.empty() ? AmbientField::zero(n) : AmbientField::parse(u, n);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Graphical mean curvature flow, weak-form residuals and the experiment runner.";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<Expr>(m, "Expr")
      .def(py::init(&Expr::parse), py::arg("source"), py::arg("n"))
      .def(
          "__call__",
          [](const Expr& e, std::vector<double> X, double t) {
            if (static_cast<int>(X.size()) != e.dimension()) throw py::value_error("X must have n entries");
            return e(X, t);
          },
          py::arg("X"), py::arg("t"))
      .def_property_readonly("source", &Expr::source)
      .def_property_readonly("n", &Expr::dimension)
      .def("__repr__", [](const Expr& e) { return "Expr('" + e.source() + "')"; });

  py::class_<SpaceTimeGrid>(m, "Grid")
      .def_readonly("n", &SpaceTimeGrid::n)
      .def_readonly("N", &SpaceTimeGrid::N)
      .def_readonly("M", &SpaceTimeGrid::M)
      .def_readonly("t0", &SpaceTimeGrid::t0)
      .def_readonly("t1", &SpaceTimeGrid::t1)
      .def_readonly("hx", &SpaceTimeGrid::hx)
      .def_readonly("dt", &SpaceTimeGrid::dt)
      .def("__repr__", [](const SpaceTimeGrid& g) {
        return "Grid(n=" + std::to_string(g.n) + ", N=" + std::to_string(g.N) + ", M=" + std::to_string(g.M) + ")";
      });
  m.def("build_grid", &build_grid, py::arg("n"), py::arg("N"), py::arg("M"), py::arg("t0"), py::arg("t1"));

  py::class_<GraphFlow>(m, "GraphFlow")
      .def_readonly("grid", &GraphFlow::grid)
      .def_property_readonly("f", &samples, "Heights, shape (M+1, N+1[, N+1]).")
      .def("__repr__", [](const GraphFlow& gf) {
        return "GraphFlow(n=" + std::to_string(gf.grid.n) + ", N=" + std::to_string(gf.grid.N) +
               ", M=" + std::to_string(gf.grid.M) + ")";
      });
  m.def("sample_graph", &sample_graph, py::arg("expr"), py::arg("grid"));
  m.def(
      "make_flow",
      [](const SpaceTimeGrid& g, py::array_t<double, py::array::c_style | py::array::forcecast> f) {
        if (static_cast<std::size_t>(f.size()) != g.size()) throw py::value_error("sample count does not match grid");
        return make_flow(g, std::vector<double>(f.data(), f.data() + f.size()));
      },
      py::arg("grid"), py::arg("f"));

  m.def(
      "mean_curvature", [](const GraphFlow& gf, int j) { return slice(gf.grid, mean_curvature(gf, j).H); },
      py::arg("flow"), py::arg("level"), "Mean curvature at time level j, zero on boundary nodes.");

  m.def(
      "solve",
      [](const Expr& initial, std::vector<std::string> u, int N, double dt, double t0, double t1,
         std::optional<Expr> exact, bool explicit_scheme) {
        SolverConfig cfg;
        cfg.n = initial.dimension();
        cfg.N = N;
        cfg.dt = dt > 0.0 ? dt : std::pow(2.0 / N, 2);
        cfg.t0 = t0;
        cfg.t1 = t1;
        cfg.scheme = explicit_scheme ? Scheme::Explicit : Scheme::SemiImplicit;
        cfg.boundary = exact ? BoundarySource::ExactTrace : BoundarySource::FrozenInitial;
        return solve(initial, field_of(u, cfg.n), cfg, exact).flow;
      },
      py::arg("initial"), py::arg("u") = std::vector<std::string>{}, py::arg("N") = 32, py::arg("dt") = 0.0,
      py::arg("t0") = 0.0, py::arg("t1") = 0.5, py::arg("exact") = std::nullopt, py::arg("explicit") = false,
      "Marches the motion law; dt = 0 picks hx^2.");

  m.def(
      "brakke_residual",
      [](const GraphFlow& gf, std::vector<double> center, double s, double radius, double time_radius,
         std::vector<std::string> u, bool planar) {
        const int n = gf.grid.n;
        Vec c = Vec::Zero(n);
        for (std::size_t k = 0; k < center.size() && k < static_cast<std::size_t>(n); ++k) c[k] = center[k];
        auto phi = planar ? TestFunction::planar(c.head(n - 1), s, radius, time_radius, BumpProfile::Polynomial)
                          : TestFunction::bump(c, s, radius);
        phi.time_radius = time_radius;
        const auto r = brakke_residual(gf, field_of(u, n), phi);
        py::dict d;
        d["total"] = r.total;
        d["curvature_term"] = r.curvature_term;
        d["transport_term"] = r.transport_term;
        d["time_term"] = r.time_term;
        d["quad_error"] = r.quad_error;
        return d;
      },
      py::arg("flow"), py::arg("center"), py::arg("s"), py::arg("radius"), py::arg("time_radius"),
      py::arg("u") = std::vector<std::string>{}, py::arg("planar") = false,
      "Brakke functional against a bump centred at (center, s).");

  m.def(
      "lpq_norm",
      [](const GraphFlow& gf, std::vector<std::string> u, double p, double q) {
        return lpq_norm(gf, field_of(u, gf.grid.n), p, q);
      },
      py::arg("flow"), py::arg("u"), py::arg("p"), py::arg("q"));
  m.def(
      "admissibility", [](int k, double p, double q) { return exponents_dict(admissibility(k, p, q)); },
      py::arg("k"), py::arg("p"), py::arg("q"));
  m.def(
      "theorem_exponents",
      [](int n, double beta, double gamma) { return exponents_dict(theorem_exponents(n, beta, gamma)); },
      py::arg("n"), py::arg("beta"), py::arg("gamma"));

  m.def(
      "dump_flow", [](const GraphFlow& gf, const std::filesystem::path& base) { dump_flow(gf, base); },
      py::arg("flow"), py::arg("base"));
  m.def("load_flow", &load_flow, py::arg("base"));

  m.def("experiments", [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : experiments()) out.emplace_back(e.id, e.summary);
    return out;
  });
  m.def(
      "check_config", [](const std::string& text) { check_config(Config::from_string(text)); }, py::arg("text"),
      "Validates INI text; raises ConfigError naming the field.");
  m.def(
      "run_config",
      [](const std::string& text, unsigned threads, std::optional<std::filesystem::path> output) {
        RunOptions opt;
        opt.threads = threads;
        opt.write = output.has_value();
        if (output) opt.output = *output;
        const auto cfg = Config::from_string(text);
        RunOutcome out;
        {
          py::gil_scoped_release release;
          out = run_experiment(cfg, opt);
        }
        return json_to_py(out.report);
      },
      py::arg("text"), py::arg("threads") = 1, py::arg("output") = std::nullopt,
      "Runs INI text and returns the report; writes report.json and dumps only when output is given.");
}
