#pragma once

#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

namespace lyapnet {

/// Class-K-infinity comparison function: zero at zero, strictly
/// increasing, unbounded. Closed parametric family so tests can use
/// closed-form cross-checks and configs can round-trip through JSON.
class KinfFn {
 public:
  enum class Kind { Linear, Power };

  static KinfFn linear(double slope);
  static KinfFn power(double coef, double exponent);

  double operator()(double r) const;

  Kind kind() const { return kind_; }
  double slope() const { return a_; }
  double coef() const { return a_; }
  double exponent() const { return p_; }

  nlohmann::json to_json() const;
  static KinfFn from_json(const nlohmann::json& j);

 private:
  KinfFn(Kind kind, double a, double p) : kind_(kind), a_(a), p_(p) {}

  Kind kind_;
  double a_;  // slope (linear) or coefficient (power)
  double p_;  // exponent (power only)
};

/// Positive definite scalar function: zero at zero, positive elsewhere.
/// Bounded variants (saturated linear) report a finite supremum; a
/// wrapped K-infinity function is unbounded.
class PositiveDefiniteFn {
 public:
  enum class Kind { SatLinear, KinfWrapped };

  static PositiveDefiniteFn sat_linear(double slope, double cap);
  static PositiveDefiniteFn wrap(const KinfFn& fn);

  double operator()(double r) const;

  Kind kind() const { return kind_; }
  double slope() const { return slope_; }
  double cap() const { return cap_; }
  const KinfFn& wrapped() const;

  /// Finite supremum for bounded variants, nullopt otherwise.
  std::optional<double> supremum() const;

  nlohmann::json to_json() const;
  static PositiveDefiniteFn from_json(const nlohmann::json& j);

 private:
  PositiveDefiniteFn(Kind kind, double slope, double cap,
                     std::optional<KinfFn> inner)
      : kind_(kind), slope_(slope), cap_(cap), inner_(std::move(inner)) {}

  Kind kind_;
  double slope_ = 0.0;
  double cap_ = 0.0;
  std::optional<KinfFn> inner_;
};

/// Adaptive Simpson quadrature of f over [a, b] with absolute
/// tolerance tol. Recursion depth is capped at max_depth.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol, int max_depth = 40);

/// Scalar profile lambda(tau) = eta(alpha(tau)) with cached quadrature
/// tolerance. The profile is nonnegative and zero at zero.
class ScalarProfile {
 public:
  ScalarProfile(std::function<double(double)> eval, double quad_tol);

  double operator()(double tau) const;
  double quad_tol() const { return quad_tol_; }

  /// Integral of the profile over [0, upper], adaptive Simpson.
  double integrate(double upper) const;
  double integrate(double upper, double tol) const;

 private:
  std::function<double(double)> eval_;
  double quad_tol_;
};

constexpr double kDefaultQuadTol = 1e-10;

/// Profile lambda(tau) = outer(inner(tau)).
ScalarProfile compose(const PositiveDefiniteFn& outer, const KinfFn& inner,
                      double quad_tol = kDefaultQuadTol);

/// Numerical evidence that the integral of eta(alpha(r)) over [0, R]
/// grows without bound: the partial integral must keep increasing over
/// doubling R up to R = 1e6. Evidence, never proof.
bool divergence_evidence(const PositiveDefiniteFn& eta, const KinfFn& alpha);

}  // namespace lyapnet
