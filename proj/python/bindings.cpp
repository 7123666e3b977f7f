#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include <json.hpp>

#include "bpi/analysis.hpp"
#include "bpi/diffusion.hpp"
#include "bpi/discrete.hpp"
#include "bpi/errors.hpp"
#include "bpi/experiment.hpp"
#include "bpi/forest.hpp"
#include "bpi/interaction.hpp"
#include "bpi/rayknight.hpp"

namespace py = pybind11;
using namespace bpi;

namespace {

py::dict step_path_dict(const StepPath& p) {
  py::dict d;
  d["initial"] = p.initial;
  d["jump_times"] = p.jump_times;
  d["counts"] = p.counts;
  d["scale"] = p.scale;
  d["t_end"] = p.t_end;
  d["truncated"] = p.truncated;
  return d;
}

DiscreteParams discrete_params(double lambda, double mu, const InteractionFunction& f, std::int64_t m, double t_max,
                               std::int64_t scale, std::uint64_t max_events) {
  DiscreteParams p;
  p.lambda = lambda;
  p.mu = mu;
  p.f = f;
  p.m = m;
  p.t_max = t_max;
  p.scale = scale;
  p.max_events = max_events;
  return p;
}

}  // namespace

PYBIND11_MODULE(_bpi, m) {
  m.doc() = "Interacting branching processes: discrete chains, planar forests, Feller diffusions, local-time fields";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<MalformedForest>(m, "MalformedForest", PyExc_ValueError);
  py::register_exception<MissingArtifact>(m, "MissingArtifact", PyExc_FileNotFoundError);
  py::register_exception<EmptySample>(m, "EmptySample", PyExc_ValueError);
  py::register_exception<DerivativeUnavailable>(m, "DerivativeUnavailable", PyExc_ValueError);
  py::register_exception<GridMismatch>(m, "GridMismatch", PyExc_ValueError);

  py::class_<InteractionFunction>(m, "Interaction")
      .def_static("logistic", &InteractionFunction::logistic, py::arg("theta"), py::arg("gamma"))
      .def_static("linear", &InteractionFunction::linear, py::arg("theta"))
      .def_static("zero", &InteractionFunction::zero)
      .def_static("custom", &InteractionFunction::custom, py::arg("step"), py::arg("values"), py::arg("beta") = 0.0)
      .def("__call__", &InteractionFunction::evaluate)
      .def("derivative", &InteractionFunction::derivative)
      .def_property_readonly("beta", &InteractionFunction::beta)
      .def("__repr__", &InteractionFunction::describe);

  m.def("classify", [](const InteractionFunction& f, double tail_limit, double tolerance) {
        const ScaleReport r = classify(f, tail_limit, tolerance);
        py::dict d;
        d["classification"] = to_string(r.classification);
        d["lambda_estimate"] = r.lambda_estimate;
        d["lambda_infinite"] = r.lambda_infinite;
        d["rule"] = r.rule;
        return d;
      }, py::arg("f"), py::arg("tail_limit") = 100.0, py::arg("tolerance") = 1e-6);
  m.def("scale_function", &scale_function, py::arg("f"), py::arg("z"));
  m.def("hitting_probability", &hitting_probability, py::arg("f"), py::arg("x"), py::arg("a"), py::arg("b"));

  m.def("total_rates", [](const InteractionFunction& f, double lambda, double mu, std::int64_t k) {
        const Rates r = total_rates(f, lambda, mu, k);
        return py::make_tuple(r.birth, r.death);
      }, py::arg("f"), py::arg("lam"), py::arg("mu"), py::arg("k"));
  m.def("simulate_population",
        [](double lambda, double mu, const InteractionFunction& f, std::int64_t m0, double t_max, std::uint64_t seed,
           std::int64_t scale, std::uint64_t max_events) {
          Engine rng(seed);
          return step_path_dict(simulate_population(discrete_params(lambda, mu, f, m0, t_max, scale, max_events), rng));
        },
        py::arg("lam"), py::arg("mu"), py::arg("f"), py::arg("m"), py::arg("t_max"), py::arg("seed"),
        py::arg("scale") = 1, py::arg("max_events") = 10'000'000);

  m.def("grow_forest",
        [](double lambda, double mu, const InteractionFunction& f, std::int64_t m0, double t_max, std::uint64_t seed,
           double p) {
          const PlanarForest forest = grow_forest(discrete_params(lambda, mu, f, m0, t_max, 1, 10'000'000), seed);
          const PolyPath path = explore(forest, p);
          py::dict d;
          py::list rows;
          for (const Individual& x : forest.individuals)
            rows.append(py::make_tuple(x.id, x.parent, x.birth, x.death, x.censored, key_to_string(x.key)));
          d["individuals"] = rows;
          std::vector<double> s;
          std::vector<double> h;
          for (const Vertex& v : path.vertices) {
            s.push_back(v.s);
            h.push_back(v.h);
          }
          d["s"] = s;
          d["h"] = h;
          d["ray_knight_discrepancy"] = discrete_ray_knight_check(forest, p).max_discrepancy;
          d["total_branch_length"] = forest.total_branch_length();
          return d;
        },
        py::arg("lam"), py::arg("mu"), py::arg("f"), py::arg("m"), py::arg("t_max"), py::arg("seed"), py::arg("p") = 2.0);

  m.def("solve_feller", [](const InteractionFunction& f, double x, double t_max, double dt, std::uint64_t seed) {
        return solve_feller(f, x, t_max, dt, seed).values;
      }, py::arg("f"), py::arg("x"), py::arg("t_max"), py::arg("dt"), py::arg("seed"));
  m.def("feller_marginal",
        [](const InteractionFunction& f, double x, double t, double dt, std::size_t replicates, std::uint64_t seed,
           unsigned threads) {
          py::gil_scoped_release release;
          return feller_marginal(f, x, t, dt, replicates, seed, threads);
        },
        py::arg("f"), py::arg("x"), py::arg("t"), py::arg("dt"), py::arg("replicates"), py::arg("seed"),
        py::arg("threads") = 1);

  m.def("ray_knight_field",
        [](const InteractionFunction& f, double x, double level, std::size_t replicates, std::uint64_t seed,
           double ds, double dh, std::optional<double> ceiling, double calibration) {
          RKParams p;
          p.f = f;
          p.x_targets = {x};
          p.ds = ds;
          p.dh = dh;
          p.ceiling = ceiling;
          p.calibration = calibration;
          py::gil_scoped_release release;
          return ray_knight_field(p, replicates, seed).field_samples(0, level);
        },
        py::arg("f"), py::arg("x"), py::arg("level"), py::arg("replicates"), py::arg("seed"), py::arg("ds") = 1e-4,
        py::arg("dh") = 0.02, py::arg("ceiling") = py::none(), py::arg("calibration") = 2.0);

  m.def("ks_two_sample", py::overload_cast<const std::vector<double>&, const std::vector<double>&>(&ks_two_sample));
  m.def("moment_report", [](const std::vector<double>& a) {
    const MomentReport r = moment_report(a);
    py::dict d;
    d["count"] = r.count;
    d["mean"] = r.mean;
    d["variance"] = r.variance;
    d["standard_error"] = r.standard_error;
    d["ci"] = py::make_tuple(r.ci_low, r.ci_high);
    return d;
  });

  m.def("run_config", [](const std::string& config_json) {
        const ExperimentConfig c = parse_config(nlohmann::json::parse(config_json));
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(c);
        }
        py::dict d;
        d["verdict"] = to_string(r.verdict);
        d["artifacts"] = r.artifacts;
        d["warnings"] = r.warnings;
        d["partial"] = r.partial;
        d["error"] = r.error;
        d["summary"] = r.summary.dump();
        return d;
      }, py::arg("config_json"));
}
