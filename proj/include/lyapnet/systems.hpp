#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lyapnet/small_gain.hpp"

namespace lyapnet {

enum class Family { F1, F2 };
enum class Topology { Chain, Ring };

/// Interconnected ODE system dx/dt = f(x) with an optional subsystem
/// partition and, for F2 systems, the mixing transform T with
/// f(x) = T^{-1} ftilde(T x) for a base field ftilde in F1.
struct InterconnectedSystem {
  int n = 0;
  Family family = Family::F1;
  int d_max = 1;
  std::vector<int> dims;  // partition, sums to n
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> field;
  std::optional<Eigen::MatrixXd> transform;      // T
  std::optional<Eigen::MatrixXd> transform_inv;  // T^{-1}
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> base_field;
  nlohmann::json config;  // provenance, round-trips through the CLI
};

struct ChainSystemConfig {
  int n = 2;
  double coupling = 0.1;  // must lie in (0, 0.25)
  Topology topology = Topology::Chain;

  nlohmann::json to_json() const;
  static ChainSystemConfig from_json(const nlohmann::json& j);
};

/// Linear chain/ring of scalar nodes dz_i/dt = -z_i + c * sum of
/// neighbors, with closed-form ISS data (V_i = z_i^2/2, alpha_i =
/// 2(1-c) r, neighbor gains c r, eta_i = min(r, 1)).
std::pair<InterconnectedSystem, std::vector<SubsystemISSData>> make_chain(
    const ChainSystemConfig& cfg);

/// Chain of weakly damped planar oscillators (d_i = 2): each node obeys
/// dz/dt = R z + c * sum of neighbor states with R = [[-1, w], [-w, -1]],
/// V_i = |z|^2/2. Same ISS data shape as the scalar chain.
std::pair<InterconnectedSystem, std::vector<SubsystemISSData>>
make_planar_chain(int nodes, double coupling, double omega,
                  Topology topology = Topology::Chain);

/// F2 system obtained by conjugating an F1 system with a seeded random
/// orthogonal T: f(x) = T^T ftilde(T x), so the field looks mixed while
/// T x recovers the base subsystem coordinates.
InterconnectedSystem make_rotated(const InterconnectedSystem& base,
                                  std::uint64_t seed);

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  double step = 0.0;
  bool diverged = false;

  const Eigen::VectorXd& final_state() const { return states.back(); }
};

/// Classical fixed-step RK4 on a uniform grid; the last step is
/// shortened so the final time equals the horizon exactly.
Trajectory integrate_rk4(const InterconnectedSystem& sys,
                         const Eigen::VectorXd& x0, double horizon,
                         double step);

/// Trajectory as CSV text: header t,x1,...,xn then one row per knot.
std::string trajectory_to_csv(const Trajectory& traj);

}  // namespace lyapnet
