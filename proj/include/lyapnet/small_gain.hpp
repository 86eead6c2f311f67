#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lyapnet/box.hpp"
#include "lyapnet/comparison.hpp"

namespace lyapnet {

/// Per-subsystem ISS data: Lyapunov function V_i with gradient, decay
/// rate alpha_i, cross-gain row gamma_ij (empty entry means zero gain;
/// the diagonal entry is always zero), and the weight eta_i.
struct SubsystemISSData {
  int index = 0;
  int dim = 1;
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  KinfFn alpha = KinfFn::linear(1.0);
  std::vector<std::optional<KinfFn>> gains;  // length s, gains[index] empty
  PositiveDefiniteFn eta = PositiveDefiniteFn::sat_linear(1.0, 1.0);
};

/// The gain map Gamma(r)_i = sum_j gamma_ij(r_j) and the diagonal decay
/// map A(r)_i = alpha_i(r_i), both componentwise monotone with fixed
/// point at the origin.
class GainOperators {
 public:
  explicit GainOperators(const std::vector<SubsystemISSData>& spec);

  int size() const { return s_; }
  Eigen::VectorXd gamma_of(const Eigen::VectorXd& r) const;
  Eigen::VectorXd a_of(const Eigen::VectorXd& r) const;
  Eigen::VectorXd eta_of(const Eigen::VectorXd& r) const;

 private:
  int s_;
  std::vector<std::vector<std::optional<KinfFn>>> gains_;
  std::vector<KinfFn> alphas_;
  std::vector<PositiveDefiniteFn> etas_;
};

/// Finite evaluation grid for the small-gain inequality: log-spaced
/// tensor grid on [r_min, r_max]^s for small s, random rays otherwise.
struct GridSpec {
  double r_min = 1e-4;
  double r_max = 1e3;
  int points_per_axis = 25;
  int rays = 1000;
  int radii = 50;
  int tensor_axis_limit = 3;  // use tensor grid for s <= this
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static GridSpec from_json(const nlohmann::json& j);
};

/// Outcome of the grid check of the small-gain inequality. A pass is
/// evidence on the grid only, never a proof.
struct SmallGainCertificate {
  enum class Verdict { PassOnGrid, Fail };

  Verdict verdict = Verdict::Fail;
  std::string grid_description;
  std::int64_t points_checked = 0;
  double min_margin = 0.0;          // min over grid of eta(r)^T r - eta(r)^T Gamma(A(r))
  Eigen::VectorXd min_margin_at;
  Eigen::VectorXd witness;          // first violating point, fail only

  nlohmann::json to_json() const;
};

SmallGainCertificate check_small_gain(const std::vector<SubsystemISSData>& spec,
                                      const GridSpec& grid);

/// Compositional Lyapunov function V(x) = mu * sum_i Vhat_i(z_i) with
/// Vhat_i the integral of lambda_i = eta_i(alpha_i(.)) up to V_i(z_i).
class ComposedLyapunov {
 public:
  ComposedLyapunov(const std::vector<SubsystemISSData>& spec, double quad_tol);

  double value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;

  /// Value of the i-th summand mu * Vhat_i at subsystem state z_i.
  double subsystem_value(int i, const Eigen::VectorXd& z) const;
  /// Sum over k of |d(mu * Vhat_i)/dz_k| at z.
  double subsystem_grad_l1(int i, const Eigen::VectorXd& z) const;

  int dim() const { return n_; }
  int subsystems() const { return static_cast<int>(dims_.size()); }
  const std::vector<int>& dims() const { return dims_; }
  const std::vector<int>& offsets() const { return offsets_; }
  double mu() const { return mu_; }
  void scale_mu(double factor);

 private:
  int n_;
  std::vector<int> dims_;
  std::vector<int> offsets_;
  std::vector<std::function<double(const Eigen::VectorXd&)>> values_;
  std::vector<std::function<Eigen::VectorXd(const Eigen::VectorXd&)>> grads_;
  std::vector<ScalarProfile> profiles_;
  double mu_ = 1.0;
};

ComposedLyapunov compose_lyapunov(const std::vector<SubsystemISSData>& spec,
                                  double quad_tol = kDefaultQuadTol);

/// Rescales V so that every summand fits the unit-gradient class on the
/// box: mu = 1 / max_i sup_box sum_k |dVhat_i/dz_k|, the sup estimated
/// on quasi-random samples plus the block box corners.
ComposedLyapunov normalize_to_w1(const ComposedLyapunov& v, const Box& box,
                                 int samples, std::uint64_t seed);

}  // namespace lyapnet
