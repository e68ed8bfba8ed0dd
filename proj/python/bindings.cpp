#include "racbf/commands.hpp"
#include "racbf/config.hpp"
#include "racbf/error.hpp"
#include "racbf/filter.hpp"
#include "racbf/hjsolver.hpp"
#include "racbf/protocol.hpp"
#include "racbf/sim.hpp"
#include "racbf/valuefn.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace racbf;

namespace {

using ValuePtr = std::shared_ptr<ValueGrid>;

py::array_t<double> rows_of(const std::vector<Vec>& rows, int width) {
  py::array_t<double> out({static_cast<py::ssize_t>(rows.size()), static_cast<py::ssize_t>(width)});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int c = 0; c < width; ++c) m(r, c) = c < rows[r].size() ? rows[r][c] : 0.0;
  return out;
}

std::vector<py::ssize_t> shape_of(const Grid& g) {
  std::vector<py::ssize_t> shape;
  for (int i = 0; i < g.ndim(); ++i) shape.push_back(g.dim(i).count);
  return shape;
}

Policy policy_from(const py::object& policy, const RunConfig& cfg, const Environment& env, std::uint64_t seed) {
  if (policy.is_none()) return builtin_policy(cfg.policy, cfg.policy_params, seed, env.model);
  if (py::isinstance<py::str>(policy)) return builtin_policy(policy.cast<std::string>(), nlohmann::json::object(), seed, env.model);
  auto fn = policy.cast<py::function>();
  return [fn](const Vec& x, double tau) { return fn(x, tau).cast<Vec>(); };
}

py::dict trace_dict(const EpisodeTrace& tr, const SystemModel& m) {
  py::dict d;
  d["seed"] = tr.seed;
  d["times"] = tr.times;
  d["states"] = rows_of(tr.states, m.state_dim);
  d["nominal"] = rows_of(tr.nominal, m.control_dim);
  d["applied"] = rows_of(tr.applied, m.control_dim);
  d["disturbances"] = rows_of(tr.disturbances, m.disturbance_dim);
  std::vector<std::string> status;
  for (StepStatus s : tr.status) status.push_back(to_string(s));
  d["status"] = status;
  d["reward"] = tr.reward;
  d["g"] = tr.g;
  d["l"] = tr.l;
  d["entered_failure"] = tr.entered_failure;
  d["ended_in_target"] = tr.ended_in_target;
  d["start_rejected"] = tr.start_rejected;
  d["window_reward"] = tr.window_reward();
  d["left_tube_step"] = tr.left_tube_step ? py::cast(*tr.left_tube_step) : py::none();
  d["left_domain_step"] = tr.left_domain_step ? py::cast(*tr.left_domain_step) : py::none();
  return d;
}

}  // namespace

PYBIND11_MODULE(_racbf, mod) {
  mod.doc() = "Reach-avoid value functions, safety filter and episodes";

  py::register_exception<ConfigError>(mod, "ConfigError", PyExc_ValueError);
  py::register_exception<FormatError>(mod, "FormatError", PyExc_ValueError);
  py::register_exception<OutOfDomain>(mod, "OutOfDomain", PyExc_ValueError);
  py::register_exception<HorizonError>(mod, "HorizonError", PyExc_ValueError);
  py::register_exception<InstabilityError>(mod, "InstabilityError", PyExc_RuntimeError);
  py::register_exception<ContractViolation>(mod, "ContractViolation", PyExc_RuntimeError);

  py::class_<RunConfig>(mod, "Config")
      .def_static("load", &load_run_config, py::arg("path"))
      .def_static(
          "from_text", [](const std::string& text) { return run_config_from(parse_toml(text)); }, py::arg("text"))
      .def_readonly("system", &RunConfig::system)
      .def_readonly("policy", &RunConfig::policy)
      .def_readonly("seeds", &RunConfig::seeds)
      .def_property_readonly("horizon", [](const RunConfig& c) { return c.solve.horizon; })
      .def_property_readonly("duration", [](const RunConfig& c) { return c.episode.duration; })
      .def_property_readonly("state_dim", [](const RunConfig& c) { return c.model().state_dim; })
      .def_property_readonly("control_dim", [](const RunConfig& c) { return c.model().control_dim; })
      .def("spec_hash", &RunConfig::spec_hash)
      .def("target_margin", [](const RunConfig& c, const Vec& x) { return target_margin(c.target, x); })
      .def("failure_margin", [](const RunConfig& c, const Vec& x) { return failure_margin(c.failure, x); })
      .def("to_json", [](const RunConfig& c) { return c.raw.dump(); });

  py::class_<ValueGrid, ValuePtr>(mod, "ValueFunction")
      .def_static(
          "load", [](const std::string& path) { return std::make_shared<ValueGrid>(load(path)); },
          py::arg("path"))
      .def("save", [](const ValueGrid& vg, const std::string& path) { save(vg, path); }, py::arg("path"))
      .def_readonly("times", &ValueGrid::times)
      .def_readonly("converged", &ValueGrid::converged)
      .def_property_readonly("shape", [](const ValueGrid& vg) { return shape_of(vg.grid); })
      .def_property_readonly("provenance", [](const ValueGrid& vg) { return vg.provenance.dump(); })
      .def("value", [](const ValueGrid& vg, const Vec& x, double t) { return value_at(vg, x, t); }, py::arg("x"),
           py::arg("t"))
      .def("gradient", [](const ValueGrid& vg, const Vec& x, double t) { return spatial_gradient(vg, x, t); },
           py::arg("x"), py::arg("t"))
      .def("time_derivative",
           [](const ValueGrid& vg, const Vec& x, double t) { return temporal_derivative(vg, x, t); }, py::arg("x"),
           py::arg("t"))
      .def("member", [](const ValueGrid& vg, const Vec& x, double t) { return membership(vg, x, t); },
           py::arg("x"), py::arg("t"))
      .def(
          "slice",
          [](const ValueGrid& vg, double t) {
            const std::vector<double> s = slice_at(vg, t);
            py::array_t<double> out(shape_of(vg.grid));
            std::copy(s.begin(), s.end(), out.mutable_data());
            return out;
          },
          py::arg("t"));

  mod.def(
      "solve",
      [](const RunConfig& cfg) {
        py::gil_scoped_release nogil;
        return std::make_shared<ValueGrid>(solve(cfg.model(), cfg.grid(), cfg.target, cfg.failure, cfg.solve));
      },
      py::arg("config"));

  mod.def(
      "check_residuals",
      [](const RunConfig& cfg, const ValuePtr& vg) {
        const ResidualReport r =
            check_residuals(cfg.model(), *vg, cfg.target, cfg.failure, cfg.solve.mode, cfg.filter.gamma);
        py::dict d;
        d["vi_fraction"] = r.vi_fraction();
        d["cbf_fraction"] = r.cbf_fraction();
        d["checked"] = r.vi_checked;
        return d;
      },
      py::arg("config"), py::arg("value"));

  mod.def(
      "filter_control",
      [](const RunConfig& cfg, const ValuePtr& vg, const Vec& x, double t, const Vec& u_nom) {
        const FilterResult r = filter_control(*vg, cfg.model(), x, t, u_nom, cfg.filter);
        return py::make_tuple(r.u, to_string(r.status));
      },
      py::arg("config"), py::arg("value"), py::arg("x"), py::arg("t"), py::arg("u_nom"));

  mod.def(
      "run_episode",
      [](const RunConfig& cfg, const ValuePtr& vg, std::uint64_t seed, const py::object& policy, bool filter) {
        const Environment env = cfg.environment(vg);
        EpisodeSpec spec = cfg.episode;
        spec.filter_enabled = filter;
        return trace_dict(run_episode(env, policy_from(policy, cfg, env, seed), spec, seed), env.model);
      },
      py::arg("config"), py::arg("value"), py::arg("seed") = 0, py::arg("policy") = py::none(),
      py::arg("filter") = true);

  py::class_<ProtocolSession>(mod, "Session")
      .def(py::init([](const RunConfig& cfg, const ValuePtr& vg) {
             return std::make_unique<ProtocolSession>(cfg, std::shared_ptr<const ValueGrid>(vg));
           }),
           py::arg("config"), py::arg("value"))
      .def("handle", &ProtocolSession::handle, py::arg("line"))
      .def_property_readonly("closed", &ProtocolSession::closed);

  mod.def(
      "solve_to",
      [](const RunConfig& cfg, const std::string& out_dir) {
        std::ostringstream log;
        return cmd_solve(cfg, out_dir, log).dump();
      },
      py::arg("config"), py::arg("out_dir"));

  mod.def(
      "simulate_to",
      [](const RunConfig& cfg, const std::string& value_path, const std::string& out_dir,
         const std::vector<std::uint64_t>& seeds, bool force) {
        std::ostringstream log;
        return cmd_simulate(cfg, value_path, out_dir, seeds, force, log).dump();
      },
      py::arg("config"), py::arg("value_path"), py::arg("out_dir"), py::arg("seeds"), py::arg("force") = false);
}
