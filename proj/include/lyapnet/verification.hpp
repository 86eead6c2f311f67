#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "lyapnet/box.hpp"
#include "lyapnet/network.hpp"
#include "lyapnet/small_gain.hpp"
#include "lyapnet/systems.hpp"

namespace lyapnet {

/// Scalar candidate W with (optionally) its gradient.
struct ScalarField {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

ScalarField as_scalar_field(const ComposedLyapunov& v);
ScalarField as_scalar_field(const LyapunovNetwork& net);

/// Sampled verification outcome. Sampling is evidence, not proof; every
/// report carries its sample count.
struct VerificationReport {
  enum class Mode { Pointwise, Integral };

  Mode mode = Mode::Pointwise;
  int samples = 0;
  int violations = 0;
  double violation_rate = 0.0;
  double worst_margin = 0.0;  // most positive violation margin observed
  Eigen::VectorXd worst_point;
  double tol = 0.0;
  double horizon = 0.0;  // integral mode
  double step = 0.0;     // integral mode
  int diverged = 0;      // trajectories that left f64 range

  nlohmann::json to_json() const;
};

using MarginFn = std::function<double(const Eigen::VectorXd&)>;

/// Counts sampled x in the box with |x|_inf >= r0 where
/// DW(x).f(x) > -h(x) + tol.
VerificationReport verify_pointwise(const ScalarField& w,
                                    const InterconnectedSystem& sys,
                                    const Box& box, int samples,
                                    const MarginFn& h, double tol, double r0,
                                    std::uint64_t seed);

/// Integrates trajectories from sampled initial points and flags
/// W(x(T)) > W(x0) - integral of h along the trajectory + tol. The
/// h-integral uses composite Simpson on the RK4 grid.
VerificationReport verify_integral(const ScalarField& w,
                                   const InterconnectedSystem& sys,
                                   const Box& box, int samples, double horizon,
                                   double step, const MarginFn& h, double tol,
                                   std::uint64_t seed);

struct SupErrorResult {
  double sup = 0.0;
  double rms = 0.0;
  Eigen::VectorXd argmax;

  nlohmann::json to_json() const;
};

/// Monte-Carlo sup and RMS of |W - reference| on the box, box corners
/// included for n <= 10.
SupErrorResult sup_error(const ScalarField& w,
                         const std::function<double(const Eigen::VectorXd&)>&
                             reference,
                         const Box& box, int samples, std::uint64_t seed);

}  // namespace lyapnet
