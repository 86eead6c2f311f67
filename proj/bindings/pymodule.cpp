#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lyapnet/experiments.hpp"
#include "lyapnet/network.hpp"
#include "lyapnet/small_gain.hpp"
#include "lyapnet/systems.hpp"
#include "lyapnet/training.hpp"
#include "lyapnet/verification.hpp"

namespace py = pybind11;
using namespace lyapnet;

namespace {

// nlohmann::json <-> python via its string form; enough for configs and
// reports.
py::object json_to_py(const nlohmann::json& j) {
  py::module_ json = py::module_::import("json");
  return json.attr("loads")(j.dump());
}

nlohmann::json py_to_json(const py::object& obj) {
  py::module_ json = py::module_::import("json");
  return nlohmann::json::parse(
      json.attr("dumps")(obj).cast<std::string>());
}

}  // namespace

PYBIND11_MODULE(_lyapnet, m) {
  m.doc() = "Compositional neural Lyapunov functions for interconnected "
            "ODE systems";

  py::class_<Box>(m, "Box")
      .def_static("centered", &Box::centered, py::arg("n"),
                  py::arg("half_width"))
      .def_readwrite("lo", &Box::lo)
      .def_readwrite("hi", &Box::hi);

  py::enum_<Topology>(m, "Topology")
      .value("Chain", Topology::Chain)
      .value("Ring", Topology::Ring);

  py::class_<ChainSystemConfig>(m, "ChainSystemConfig")
      .def(py::init([](int n, double coupling, Topology topology) {
             return ChainSystemConfig{n, coupling, topology};
           }),
           py::arg("n"), py::arg("coupling") = 0.1,
           py::arg("topology") = Topology::Chain);

  py::class_<InterconnectedSystem>(m, "InterconnectedSystem")
      .def_readonly("n", &InterconnectedSystem::n)
      .def_readonly("d_max", &InterconnectedSystem::d_max)
      .def_readonly("dims", &InterconnectedSystem::dims)
      .def_property_readonly(
          "transform",
          [](const InterconnectedSystem& s) -> py::object {
            return s.transform ? py::cast(*s.transform) : py::none();
          })
      .def("field",
           [](const InterconnectedSystem& s, const Eigen::VectorXd& x) {
             return s.field(x);
           },
           py::arg("x"));

  py::class_<SubsystemISSData>(m, "SubsystemISSData");

  m.def("make_chain",
        [](int n, double coupling, Topology topology) {
          return make_chain({n, coupling, topology});
        },
        py::arg("n"), py::arg("coupling") = 0.1,
        py::arg("topology") = Topology::Chain);
  m.def("make_planar_chain", &make_planar_chain, py::arg("nodes"),
        py::arg("coupling"), py::arg("omega"),
        py::arg("topology") = Topology::Chain);
  m.def("make_rotated", &make_rotated, py::arg("base"), py::arg("seed"));

  py::class_<GridSpec>(m, "GridSpec")
      .def(py::init<>())
      .def_readwrite("r_min", &GridSpec::r_min)
      .def_readwrite("r_max", &GridSpec::r_max)
      .def_readwrite("points_per_axis", &GridSpec::points_per_axis)
      .def_readwrite("rays", &GridSpec::rays)
      .def_readwrite("seed", &GridSpec::seed);

  py::class_<SmallGainCertificate>(m, "SmallGainCertificate")
      .def_property_readonly("passed",
                             [](const SmallGainCertificate& c) {
                               return c.verdict ==
                                      SmallGainCertificate::Verdict::PassOnGrid;
                             })
      .def_readonly("min_margin", &SmallGainCertificate::min_margin)
      .def_readonly("witness", &SmallGainCertificate::witness)
      .def_readonly("points_checked", &SmallGainCertificate::points_checked)
      .def("to_dict", [](const SmallGainCertificate& c) {
        return json_to_py(c.to_json());
      });

  m.def("check_small_gain", &check_small_gain, py::arg("spec"),
        py::arg("grid") = GridSpec{});

  py::class_<ComposedLyapunov>(m, "ComposedLyapunov")
      .def("value", &ComposedLyapunov::value, py::arg("x"))
      .def("gradient", &ComposedLyapunov::gradient, py::arg("x"))
      .def("subsystem_value", &ComposedLyapunov::subsystem_value,
           py::arg("i"), py::arg("z"))
      .def_property_readonly("mu", &ComposedLyapunov::mu);

  m.def("compose_lyapunov", &compose_lyapunov, py::arg("spec"),
        py::arg("quad_tol") = kDefaultQuadTol);
  m.def("normalize_to_w1", &normalize_to_w1, py::arg("v"), py::arg("box"),
        py::arg("samples") = 4096, py::arg("seed") = 0);

  py::enum_<ActivationKind>(m, "ActivationKind")
      .value("Softplus", ActivationKind::Softplus)
      .value("Tanh", ActivationKind::Tanh)
      .value("Identity", ActivationKind::Identity);

  py::class_<LyapunovNetwork>(m, "LyapunovNetwork")
      .def("forward", &LyapunovNetwork::forward, py::arg("x"))
      .def("grad_x", &LyapunovNetwork::grad_x, py::arg("x"))
      .def_property(
          "params",
          [](const LyapunovNetwork& net) -> Eigen::VectorXd {
            return net.params();
          },
          [](LyapunovNetwork& net, const Eigen::VectorXd& theta) {
            if (theta.size() != net.params().size()) {
              throw std::invalid_argument("parameter size mismatch");
            }
            net.params() = theta;
          })
      .def_property_readonly("param_count", &LyapunovNetwork::param_count)
      .def_property_readonly("input_dim", &LyapunovNetwork::input_dim)
      .def("neuron_count",
           [](const LyapunovNetwork& net) { return net.neuron_count().first; })
      .def("metadata", [](const LyapunovNetwork& net) {
        return json_to_py(net.metadata());
      });

  py::class_<DenseNet1, LyapunovNetwork>(m, "DenseNet1")
      .def(py::init<int, int, ActivationKind, std::uint64_t>(), py::arg("n"),
           py::arg("width"), py::arg("activation") = ActivationKind::Softplus,
           py::arg("seed") = 0);
  py::class_<SublayerNet, LyapunovNetwork>(m, "SublayerNet")
      .def(py::init<std::vector<int>, int, ActivationKind, std::uint64_t>(),
           py::arg("dims"), py::arg("width"),
           py::arg("activation") = ActivationKind::Softplus,
           py::arg("seed") = 0);
  py::class_<TransformNet, LyapunovNetwork>(m, "TransformNet")
      .def(py::init<int, int, int, ActivationKind, std::uint64_t>(),
           py::arg("n"), py::arg("d_max"), py::arg("width"),
           py::arg("activation") = ActivationKind::Softplus,
           py::arg("seed") = 0)
      .def("assign_transform", &TransformNet::assign_transform,
           py::arg("to_base"), py::arg("dims"));

  m.def("save_checkpoint", &save_checkpoint, py::arg("net"), py::arg("path"));
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

  py::class_<TrainingConfig>(m, "TrainingConfig")
      .def(py::init<>())
      .def_readwrite("steps", &TrainingConfig::steps)
      .def_readwrite("batch", &TrainingConfig::batch)
      .def_readwrite("lr0", &TrainingConfig::lr0)
      .def_readwrite("lr_final", &TrainingConfig::lr_final)
      .def_readwrite("kappa", &TrainingConfig::kappa)
      .def_readwrite("kappa_pos", &TrainingConfig::kappa_pos)
      .def_readwrite("seed", &TrainingConfig::seed)
      .def_static("from_dict",
                  [](const py::object& obj) {
                    return TrainingConfig::from_json(py_to_json(obj));
                  })
      .def("to_dict", [](const TrainingConfig& cfg) {
        return json_to_py(cfg.to_json());
      });

  py::class_<TrainReport>(m, "TrainReport")
      .def_readonly("final_loss", &TrainReport::final_loss)
      .def_readonly("curve", &TrainReport::curve)
      .def_readonly("aborted", &TrainReport::aborted)
      .def_readonly("wall_seconds", &TrainReport::wall_seconds)
      .def("curve_csv", &TrainReport::curve_csv);

  py::class_<FitConfig>(m, "FitConfig")
      .def(py::init<>())
      .def_readwrite("samples", &FitConfig::samples)
      .def_readwrite("holdout", &FitConfig::holdout)
      .def_readwrite("steps", &FitConfig::steps)
      .def_readwrite("batch", &FitConfig::batch)
      .def_readwrite("lr0", &FitConfig::lr0)
      .def_readwrite("lr_final", &FitConfig::lr_final)
      .def_readwrite("seed", &FitConfig::seed);

  py::class_<FitReport>(m, "FitReport")
      .def_readonly("sup_error", &FitReport::sup_error)
      .def_readonly("rms_error", &FitReport::rms_error)
      .def_readonly("final_train_mse", &FitReport::final_train_mse)
      .def_readonly("aborted", &FitReport::aborted);

  m.def("train", &train, py::arg("net"), py::arg("sys"), py::arg("config"));
  m.def("fit_to_reference",
        [](LyapunovNetwork& net, const ComposedLyapunov& reference,
           const Box& box, const FitConfig& cfg) {
          return fit_to_reference(
              net,
              [&reference](const Eigen::VectorXd& x) {
                return reference.value(x);
              },
              box, cfg);
        },
        py::arg("net"), py::arg("reference"), py::arg("box"),
        py::arg("config"));

  py::class_<VerificationReport>(m, "VerificationReport")
      .def_readonly("samples", &VerificationReport::samples)
      .def_readonly("violations", &VerificationReport::violations)
      .def_readonly("violation_rate", &VerificationReport::violation_rate)
      .def_readonly("worst_margin", &VerificationReport::worst_margin)
      .def_readonly("diverged", &VerificationReport::diverged)
      .def("to_dict", [](const VerificationReport& r) {
        return json_to_py(r.to_json());
      });

  m.def("verify_network_pointwise",
        [](const LyapunovNetwork& net, const InterconnectedSystem& sys,
           const Box& box, int samples, double kappa, double tol, double r0,
           std::uint64_t seed) {
          return verify_pointwise(
              as_scalar_field(net), sys, box, samples,
              [kappa](const Eigen::VectorXd& x) {
                return kappa * x.squaredNorm();
              },
              tol, r0, seed);
        },
        py::arg("net"), py::arg("sys"), py::arg("box"),
        py::arg("samples") = 10000, py::arg("kappa") = 0.05,
        py::arg("tol") = 0.0, py::arg("r0") = 1e-3, py::arg("seed") = 0);
  m.def("verify_analytic_pointwise",
        [](const ComposedLyapunov& v, const InterconnectedSystem& sys,
           const Box& box, int samples, double kappa, double tol, double r0,
           std::uint64_t seed) {
          return verify_pointwise(
              as_scalar_field(v), sys, box, samples,
              [kappa](const Eigen::VectorXd& x) {
                return kappa * x.squaredNorm();
              },
              tol, r0, seed);
        },
        py::arg("v"), py::arg("sys"), py::arg("box"),
        py::arg("samples") = 10000, py::arg("kappa") = 0.05,
        py::arg("tol") = 0.0, py::arg("r0") = 1e-3, py::arg("seed") = 0);
  m.def("verify_network_integral",
        [](const LyapunovNetwork& net, const InterconnectedSystem& sys,
           const Box& box, int samples, double horizon, double step,
           double kappa, double tol, std::uint64_t seed) {
          return verify_integral(
              as_scalar_field(net), sys, box, samples, horizon, step,
              [kappa](const Eigen::VectorXd& x) {
                return kappa * x.squaredNorm();
              },
              tol, seed);
        },
        py::arg("net"), py::arg("sys"), py::arg("box"),
        py::arg("samples") = 1000, py::arg("horizon") = 1.0,
        py::arg("step") = 1e-3, py::arg("kappa") = 0.05, py::arg("tol") = 0.0,
        py::arg("seed") = 0);

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("times", &Trajectory::times)
      .def_readonly("states", &Trajectory::states)
      .def_readonly("diverged", &Trajectory::diverged)
      .def_property_readonly("final_state", [](const Trajectory& t) {
        return t.final_state();
      });

  m.def("integrate_rk4", &integrate_rk4, py::arg("sys"), py::arg("x0"),
        py::arg("horizon"), py::arg("step"));

  py::class_<ScalingRecord>(m, "ScalingRecord")
      .def_readonly("n", &ScalingRecord::n)
      .def_readonly("minimal_width", &ScalingRecord::minimal_width)
      .def_readonly("total_neurons", &ScalingRecord::total_neurons)
      .def_readonly("verdict", &ScalingRecord::verdict)
      .def("csv_row", &ScalingRecord::csv_row,
           py::arg("mask_wall_ms") = false);

  py::class_<PowerLawFit>(m, "PowerLawFit")
      .def_readonly("slope", &PowerLawFit::slope)
      .def_readonly("intercept", &PowerLawFit::intercept)
      .def_readonly("r_squared", &PowerLawFit::r_squared);

  py::class_<SweepResult>(m, "SweepResult")
      .def_readonly("records", &SweepResult::records)
      .def_readonly("fit", &SweepResult::fit)
      .def_readonly("excluded", &SweepResult::excluded)
      .def("csv", &SweepResult::csv, py::arg("mask_wall_ms") = false);

  m.def("scaling_sweep",
        [](const py::object& cfg) {
          return scaling_sweep(ExperimentConfig::from_json(py_to_json(cfg)));
        },
        py::arg("config"));
  m.def("fit_power_law", &fit_power_law, py::arg("x"), py::arg("y"));
}
