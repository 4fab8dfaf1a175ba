#include "phasectl/config.hpp"
#include "phasectl/dynamics.hpp"
#include "phasectl/errors.hpp"
#include "phasectl/harness.hpp"
#include "phasectl/jacobian.hpp"
#include "phasectl/pipeline.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace phasectl;

namespace {

RunConfig make_run(const FlatConfig& overrides, const std::string& base_dir) {
  FlatConfig flat = default_config();
  for (const auto& [k, v] : overrides) {
    if (!flat.contains(k)) throw ConfigError("unknown key '" + k + "'");
    flat[k] = v;
  }
  return build_run_config(flat, base_dir);
}

py::dict rollout_dict(const RolloutResult& r) {
  py::dict d;
  d["episodic_cost"] = r.episodic_cost;
  d["terminal_mse"] = r.terminal_mse;
  d["final_state"] = r.trajectory.states.back();
  d["per_step_costs"] = r.trajectory.per_step_costs;
  return d;
}

py::list history_list(const std::vector<IterationRecord>& history) {
  py::list out;
  for (const IterationRecord& h : history) {
    py::dict d;
    d["iteration"] = h.iteration;
    d["cost"] = h.cost;
    d["mu"] = h.mu;
    d["alpha"] = h.alpha;
    d["accepted"] = h.accepted;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Phase-field optimal control core";

  auto base = py::register_exception<Error>(m, "PhasectlError");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  auto numerical = py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<BlowupError>(m, "BlowupError", numerical.ptr());
  py::register_exception<StalledError>(m, "StalledError", numerical.ptr());
  py::register_exception<EstimationError>(m, "EstimationError", numerical.ptr());

  m.def("default_config", &default_config);
  m.def("load_config", [](const std::filesystem::path& p) { return load_config_file(p); });
  m.def("code_version", &code_version);

  m.def(
      "make_goal",
      [](int n, const std::string& kind, int partitions) {
        return make_goal(GridSpec{n, 1.0}, parse_goal_kind(kind), partitions).field.values();
      },
      py::arg("n"), py::arg("kind"), py::arg("partitions"));
  m.def(
      "baseline_control",
      [](const Vector& goal) {
        const int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(goal.size()))));
        const BaselineControl c = baseline_control(PhaseField(GridSpec{n, 1.0}, goal));
        return py::make_tuple(c.t_bar, c.h_bar);
      },
      py::arg("goal"));
  m.def(
      "open_loop_parameter_count",
      [](int n, int horizon) { return open_loop_parameter_count(GridSpec{n, 1.0}, horizon); },
      py::arg("n"), py::arg("horizon"));

  py::class_<FeedbackPolicy>(m, "Policy")
      .def_static("load", &load_policy, py::arg("path"))
      .def("save", [](const FeedbackPolicy& p, const std::filesystem::path& path) { save_policy(p, path); })
      .def_property_readonly("horizon", &FeedbackPolicy::horizon)
      .def_property_readonly("nominal_cost", [](const FeedbackPolicy& p) { return p.nominal.total_cost; })
      .def_property_readonly("states", [](const FeedbackPolicy& p) { return p.nominal.states; })
      .def_property_readonly("controls", [](const FeedbackPolicy& p) { return p.nominal.controls; })
      .def_property_readonly("gains", [](const FeedbackPolicy& p) { return p.gains; })
      .def_property_readonly("parameter_count", &FeedbackPolicy::open_loop_parameter_count);

  py::class_<D2CDesign>(m, "Design")
      .def_readonly("policy", &D2CDesign::policy)
      .def_property_readonly("history",
                             [](const D2CDesign& d) { return history_list(d.open_loop.history); })
      .def_property_readonly("converged", [](const D2CDesign& d) { return d.open_loop.converged; })
      .def_property_readonly("nominal_cost",
                             [](const D2CDesign& d) { return d.policy.nominal.total_cost; })
      .def_property_readonly("final_state",
                             [](const D2CDesign& d) { return d.policy.nominal.states.back(); })
      .def("save", [](const D2CDesign& d, const std::filesystem::path& dir) { save_design(d, dir); });

  py::class_<RunConfig>(m, "Run")
      .def(py::init(&make_run), py::arg("config") = FlatConfig{}, py::arg("base_dir") = ".")
      .def_readonly("config", &RunConfig::flat)
      .def_property_readonly("n", [](const RunConfig& r) { return r.model.grid.n; })
      .def_property_readonly("dt", [](const RunConfig& r) { return r.model.dt; })
      .def_property_readonly("pde", [](const RunConfig& r) { return to_string(r.model.pde); })
      .def_property_readonly("horizon", [](const RunConfig& r) { return r.ilqr.horizon; })
      .def_property_readonly("goal", [](const RunConfig& r) { return r.goal.values(); })
      .def_property_readonly("initial", [](const RunConfig& r) { return r.initial.values(); })
      .def_property_readonly("parameter_count",
                             [](const RunConfig& r) { return r.design().open_loop_parameter_count(); })
      .def(
          "step",
          [](const RunConfig& r, const Vector& state, const Vector& control) {
            return step_flat(state, control, r.model);
          },
          py::arg("state"), py::arg("control"))
      .def(
          "analytic_jacobians",
          [](const RunConfig& r, const Vector& x, const Vector& u) {
            const Jacobians j = analytic_jacobians(x, u, r.model);
            return py::make_tuple(j.A, j.B);
          },
          py::arg("state"), py::arg("control"))
      .def(
          "estimate_jacobians",
          [](const RunConfig& r, const Vector& x, const Vector& u, double sigma, int samples,
             std::uint64_t seed) {
            LlsCdConfig cfg;
            cfg.sigma = sigma;
            cfg.n_samples = samples;
            cfg.seed = seed;
            const ModelParams params = r.model;
            const Jacobians j = estimate_jacobians(
                x, u, [&params](const Vector& a, const Vector& b) { return step_flat(a, b, params); },
                cfg);
            return py::make_tuple(j.A, j.B);
          },
          py::arg("state"), py::arg("control"), py::arg("sigma") = 1e-4, py::arg("samples") = 0,
          py::arg("seed") = 1)
      .def(
          "design",
          [](const RunConfig& r) {
            py::gil_scoped_release release;
            return d2c_design(r.design());
          })
      .def(
          "rollout",
          [](const RunConfig& r, const std::string& strategy, const FeedbackPolicy* policy,
             double noise, std::uint64_t seed) {
            SweepProblem problem = r.sweep_problem();
            if (policy) problem.policy = *policy;
            RolloutResult out;
            {
              py::gil_scoped_release release;
              out = run_strategy(problem, parse_strategy(strategy), NoiseSpec{noise, seed});
            }
            return rollout_dict(out);
          },
          py::arg("strategy"), py::arg("policy") = nullptr, py::arg("noise") = 0.0,
          py::arg("seed") = 0)
      .def(
          "sweep",
          [](const RunConfig& r, const FeedbackPolicy* policy) {
            SweepProblem problem = r.sweep_problem();
            if (policy) problem.policy = *policy;
            SweepResult result;
            {
              py::gil_scoped_release release;
              result = run_sweep(problem, r.sweep);
            }
            py::list rows;
            for (const CellStats& c : result.cells) {
              py::dict d;
              d["strategy"] = to_string(c.strategy);
              d["noise_level"] = c.noise_level;
              d["mean_cost"] = c.mean_cost;
              d["std_cost"] = c.std_cost;
              d["min"] = c.min_cost;
              d["max"] = c.max_cost;
              d["n"] = c.n;
              d["n_failed"] = c.n_failed;
              d["raw_costs"] = c.raw_costs;
              rows.append(d);
            }
            return py::make_tuple(rows, encode_sweep_csv(result));
          },
          py::arg("policy") = nullptr);
}
