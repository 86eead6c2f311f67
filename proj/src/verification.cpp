#include "lyapnet/verification.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <stdexcept>

#include "lyapnet/network.hpp"
#include "lyapnet/sampling.hpp"

namespace lyapnet {

ScalarField as_scalar_field(const ComposedLyapunov& v) {
  return {[v](const Eigen::VectorXd& x) { return v.value(x); },
          [v](const Eigen::VectorXd& x) { return v.gradient(x); }};
}

ScalarField as_scalar_field(const LyapunovNetwork& net) {
  auto shared = std::shared_ptr<LyapunovNetwork>(net.clone());
  return {[shared](const Eigen::VectorXd& x) { return shared->forward(x); },
          [shared](const Eigen::VectorXd& x) { return shared->grad_x(x); }};
}

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) {
    arr.push_back(v[i]);
  }
  return arr;
}

}  // namespace

nlohmann::json VerificationReport::to_json() const {
  nlohmann::json j;
  j["mode"] = mode == Mode::Pointwise ? "pointwise" : "integral";
  j["samples"] = samples;
  j["violations"] = violations;
  j["violation_rate"] = violation_rate;
  j["worst_margin"] = worst_margin;
  j["worst_point"] = vector_to_json(worst_point);
  j["tol"] = tol;
  if (mode == Mode::Integral) {
    j["horizon"] = horizon;
    j["step"] = step;
    j["diverged"] = diverged;
  }
  return j;
}

nlohmann::json SupErrorResult::to_json() const {
  return {{"sup", sup}, {"rms", rms}, {"argmax", vector_to_json(argmax)}};
}

VerificationReport verify_pointwise(const ScalarField& w,
                                    const InterconnectedSystem& sys,
                                    const Box& box, int samples,
                                    const MarginFn& h, double tol, double r0,
                                    std::uint64_t seed) {
  if (tol < 0.0) {
    throw std::invalid_argument("tolerance must be nonnegative");
  }
  VerificationReport report;
  report.mode = VerificationReport::Mode::Pointwise;
  report.tol = tol;
  report.worst_margin = -std::numeric_limits<double>::infinity();
  report.worst_point = Eigen::VectorXd::Zero(box.dim());

  std::mt19937_64 rng(seed);
  int used = 0;
  while (used < samples) {
    const Eigen::VectorXd x = uniform_in_box(box, rng);
    if (x.lpNorm<Eigen::Infinity>() < r0) {
      continue;
    }
    ++used;
    const double margin = w.gradient(x).dot(sys.field(x)) + h(x);
    if (margin > report.worst_margin) {
      report.worst_margin = margin;
      report.worst_point = x;
    }
    if (margin > tol) {
      ++report.violations;
    }
  }
  report.samples = used;
  report.violation_rate =
      used > 0 ? static_cast<double>(report.violations) / used : 0.0;
  return report;
}

namespace {

// Composite Simpson over the trajectory knots; a trailing odd interval
// falls back to the trapezoid rule.
double integrate_along(const Trajectory& traj, const MarginFn& h) {
  const std::size_t k = traj.times.size();
  if (k < 2) {
    return 0.0;
  }
  std::vector<double> vals(k);
  for (std::size_t i = 0; i < k; ++i) {
    vals[i] = h(traj.states[i]);
  }
  double total = 0.0;
  std::size_t i = 0;
  while (i + 2 < k) {
    const double h1 = traj.times[i + 1] - traj.times[i];
    const double h2 = traj.times[i + 2] - traj.times[i + 1];
    if (std::abs(h1 - h2) < 1e-12 * std::max(h1, h2)) {
      total += h1 / 3.0 * (vals[i] + 4.0 * vals[i + 1] + vals[i + 2]);
      i += 2;
    } else {
      // Uneven pair (shortened final step): trapezoid on one interval.
      total += 0.5 * h1 * (vals[i] + vals[i + 1]);
      i += 1;
    }
  }
  while (i + 1 < k) {
    total += 0.5 * (traj.times[i + 1] - traj.times[i]) *
             (vals[i] + vals[i + 1]);
    i += 1;
  }
  return total;
}

}  // namespace

VerificationReport verify_integral(const ScalarField& w,
                                   const InterconnectedSystem& sys,
                                   const Box& box, int samples, double horizon,
                                   double step, const MarginFn& h, double tol,
                                   std::uint64_t seed) {
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("horizon must be positive");
  }
  VerificationReport report;
  report.mode = VerificationReport::Mode::Integral;
  report.tol = tol;
  report.horizon = horizon;
  report.step = step;
  report.worst_margin = -std::numeric_limits<double>::infinity();
  report.worst_point = Eigen::VectorXd::Zero(box.dim());

  std::mt19937_64 rng(seed);
  for (int i = 0; i < samples; ++i) {
    const Eigen::VectorXd x0 = uniform_in_box(box, rng);
    const Trajectory traj = integrate_rk4(sys, x0, horizon, step);
    if (traj.diverged) {
      ++report.diverged;
      continue;
    }
    const double decrease = integrate_along(traj, h);
    const double margin =
        w.value(traj.final_state()) - (w.value(x0) - decrease);
    if (margin > report.worst_margin) {
      report.worst_margin = margin;
      report.worst_point = x0;
    }
    if (margin > tol) {
      ++report.violations;
    }
  }
  report.samples = samples;
  report.violation_rate =
      samples > 0 ? static_cast<double>(report.violations) / samples : 0.0;
  return report;
}

SupErrorResult sup_error(const ScalarField& w,
                         const std::function<double(const Eigen::VectorXd&)>&
                             reference,
                         const Box& box, int samples, std::uint64_t seed) {
  SupErrorResult result;
  result.argmax = Eigen::VectorXd::Zero(box.dim());
  std::mt19937_64 rng(seed);
  double sq = 0.0;
  int count = 0;
  const auto consider = [&](const Eigen::VectorXd& x, bool into_rms) {
    const double err = std::abs(w.value(x) - reference(x));
    if (err > result.sup) {
      result.sup = err;
      result.argmax = x;
    }
    if (into_rms) {
      sq += err * err;
      ++count;
    }
  };
  for (int i = 0; i < samples; ++i) {
    consider(uniform_in_box(box, rng), true);
  }
  for (const auto& corner : box_corners(box)) {
    consider(corner, false);
  }
  result.rms = count > 0 ? std::sqrt(sq / count) : 0.0;
  return result;
}

}  // namespace lyapnet
