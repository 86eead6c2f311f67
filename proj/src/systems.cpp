#include "lyapnet/systems.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace lyapnet {

namespace {

std::vector<std::vector<int>> neighbor_lists(int nodes, Topology topology) {
  std::vector<std::vector<int>> nb(nodes);
  for (int i = 0; i < nodes; ++i) {
    if (i > 0) {
      nb[i].push_back(i - 1);
    }
    if (i + 1 < nodes) {
      nb[i].push_back(i + 1);
    }
  }
  if (topology == Topology::Ring && nodes > 2) {
    nb[0].push_back(nodes - 1);
    nb[nodes - 1].push_back(0);
  }
  return nb;
}

std::vector<SubsystemISSData> chain_iss_data(
    int nodes, int block_dim, double c,
    const std::vector<std::vector<int>>& neighbors) {
  std::vector<SubsystemISSData> data;
  data.reserve(nodes);
  for (int i = 0; i < nodes; ++i) {
    SubsystemISSData sub;
    sub.index = i;
    sub.dim = block_dim;
    sub.value = [](const Eigen::VectorXd& z) { return 0.5 * z.squaredNorm(); };
    sub.gradient = [](const Eigen::VectorXd& z) { return z; };
    sub.alpha = KinfFn::linear(2.0 * (1.0 - c));
    sub.eta = PositiveDefiniteFn::sat_linear(1.0, 1.0);
    sub.gains.assign(nodes, std::nullopt);
    for (int j : neighbors[i]) {
      sub.gains[j] = KinfFn::linear(c);
    }
    data.push_back(std::move(sub));
  }
  return data;
}

}  // namespace

nlohmann::json ChainSystemConfig::to_json() const {
  return {{"family", "chain"},
          {"n", n},
          {"c", coupling},
          {"topology", topology == Topology::Chain ? "chain" : "ring"}};
}

ChainSystemConfig ChainSystemConfig::from_json(const nlohmann::json& j) {
  ChainSystemConfig cfg;
  cfg.n = j.at("n").get<int>();
  cfg.coupling = j.at("c").get<double>();
  const std::string topo = j.value("topology", "chain");
  if (topo == "chain") {
    cfg.topology = Topology::Chain;
  } else if (topo == "ring") {
    cfg.topology = Topology::Ring;
  } else {
    throw std::invalid_argument("unknown topology: " + topo);
  }
  return cfg;
}

std::pair<InterconnectedSystem, std::vector<SubsystemISSData>> make_chain(
    const ChainSystemConfig& cfg) {
  if (cfg.n < 1) {
    throw std::invalid_argument("chain needs at least one node");
  }
  if (!(cfg.coupling > 0.0 && cfg.coupling < 0.25)) {
    throw std::invalid_argument("coupling must lie in (0, 0.25)");
  }
  const auto neighbors = neighbor_lists(cfg.n, cfg.topology);
  const double c = cfg.coupling;

  InterconnectedSystem sys;
  sys.n = cfg.n;
  sys.family = Family::F1;
  sys.d_max = 1;
  sys.dims.assign(cfg.n, 1);
  sys.field = [neighbors, c](const Eigen::VectorXd& x) {
    Eigen::VectorXd dx = -x;
    for (std::size_t i = 0; i < neighbors.size(); ++i) {
      for (int j : neighbors[i]) {
        dx[static_cast<int>(i)] += c * x[j];
      }
    }
    return dx;
  };
  sys.config = cfg.to_json();
  return {std::move(sys), chain_iss_data(cfg.n, 1, c, neighbors)};
}

std::pair<InterconnectedSystem, std::vector<SubsystemISSData>>
make_planar_chain(int nodes, double coupling, double omega,
                  Topology topology) {
  if (nodes < 1) {
    throw std::invalid_argument("chain needs at least one node");
  }
  if (!(coupling > 0.0 && coupling < 0.25)) {
    throw std::invalid_argument("coupling must lie in (0, 0.25)");
  }
  const auto neighbors = neighbor_lists(nodes, topology);
  const double c = coupling;

  InterconnectedSystem sys;
  sys.n = 2 * nodes;
  sys.family = Family::F1;
  sys.d_max = 2;
  sys.dims.assign(nodes, 2);
  sys.field = [neighbors, c, omega](const Eigen::VectorXd& x) {
    Eigen::VectorXd dx(x.size());
    for (std::size_t i = 0; i < neighbors.size(); ++i) {
      const int o = 2 * static_cast<int>(i);
      double u = -x[o] + omega * x[o + 1];
      double v = -omega * x[o] - x[o + 1];
      for (int j : neighbors[i]) {
        u += c * x[2 * j];
        v += c * x[2 * j + 1];
      }
      dx[o] = u;
      dx[o + 1] = v;
    }
    return dx;
  };
  sys.config = {{"family", "planar_chain"},
                {"nodes", nodes},
                {"c", coupling},
                {"omega", omega},
                {"topology", topology == Topology::Chain ? "chain" : "ring"}};
  return {std::move(sys), chain_iss_data(nodes, 2, c, neighbors)};
}

InterconnectedSystem make_rotated(const InterconnectedSystem& base,
                                  std::uint64_t seed) {
  if (base.family != Family::F1) {
    throw std::invalid_argument("make_rotated expects an F1 base system");
  }
  const int n = base.n;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      g(i, j) = gauss(rng);
    }
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd t = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) {
      t.col(j) *= -1.0;
    }
  }

  InterconnectedSystem sys;
  sys.n = n;
  sys.family = Family::F2;
  sys.d_max = base.d_max;
  sys.dims = base.dims;
  sys.transform = t;
  sys.transform_inv = t.transpose();  // orthogonal
  sys.base_field = base.field;
  const auto base_f = base.field;
  const Eigen::MatrixXd tt = t;
  sys.field = [base_f, tt](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return tt.transpose() * base_f(tt * x);
  };
  sys.config = {{"family", "rotated"},
                {"base", base.config},
                {"seed", seed}};
  return sys;
}

Trajectory integrate_rk4(const InterconnectedSystem& sys,
                         const Eigen::VectorXd& x0, double horizon,
                         double step) {
  if (x0.size() != sys.n) {
    throw std::invalid_argument("initial state dimension mismatch");
  }
  if (!(horizon > 0.0) || !(step > 0.0) || step > horizon) {
    throw std::invalid_argument("need 0 < step <= horizon");
  }
  Trajectory traj;
  traj.step = step;
  traj.times.push_back(0.0);
  traj.states.push_back(x0);

  double t = 0.0;
  Eigen::VectorXd x = x0;
  while (t < horizon) {
    const double h = std::min(step, horizon - t);
    const Eigen::VectorXd k1 = sys.field(x);
    const Eigen::VectorXd k2 = sys.field(x + 0.5 * h * k1);
    const Eigen::VectorXd k3 = sys.field(x + 0.5 * h * k2);
    const Eigen::VectorXd k4 = sys.field(x + h * k3);
    x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
    if (!x.allFinite()) {
      traj.diverged = true;
      traj.times.push_back(t);
      traj.states.push_back(x);
      return traj;
    }
    traj.times.push_back(t);
    traj.states.push_back(x);
    if (h < step) {
      break;
    }
  }
  return traj;
}

std::string trajectory_to_csv(const Trajectory& traj) {
  std::ostringstream out;
  out.precision(17);
  const int n = static_cast<int>(traj.states.front().size());
  out << "t";
  for (int k = 1; k <= n; ++k) {
    out << ",x" << k;
  }
  out << "\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    out << traj.times[i];
    for (int k = 0; k < n; ++k) {
      out << "," << traj.states[i][k];
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace lyapnet
