#include "lyapnet/comparison.hpp"

#include <cmath>
#include <stdexcept>

namespace lyapnet {

namespace {

void require_nonneg(double r) {
  if (!(r >= 0.0)) {
    throw std::domain_error("comparison function evaluated at negative or "
                            "non-finite argument");
  }
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string(what) + " must be positive");
  }
}

}  // namespace

KinfFn KinfFn::linear(double slope) {
  require_positive(slope, "slope");
  return KinfFn(Kind::Linear, slope, 1.0);
}

KinfFn KinfFn::power(double coef, double exponent) {
  require_positive(coef, "coef");
  require_positive(exponent, "exponent");
  return KinfFn(Kind::Power, coef, exponent);
}

double KinfFn::operator()(double r) const {
  require_nonneg(r);
  switch (kind_) {
    case Kind::Linear:
      return a_ * r;
    case Kind::Power:
      return a_ * std::pow(r, p_);
  }
  throw std::logic_error("unreachable");
}

nlohmann::json KinfFn::to_json() const {
  switch (kind_) {
    case Kind::Linear:
      return {{"kind", "linear"}, {"slope", a_}};
    case Kind::Power:
      return {{"kind", "power"}, {"coef", a_}, {"exponent", p_}};
  }
  throw std::logic_error("unreachable");
}

KinfFn KinfFn::from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "linear") {
    return linear(j.at("slope").get<double>());
  }
  if (kind == "power") {
    return power(j.at("coef").get<double>(), j.at("exponent").get<double>());
  }
  throw std::invalid_argument("unknown K-infinity function kind: " + kind);
}

PositiveDefiniteFn PositiveDefiniteFn::sat_linear(double slope, double cap) {
  require_positive(slope, "slope");
  require_positive(cap, "cap");
  return PositiveDefiniteFn(Kind::SatLinear, slope, cap, std::nullopt);
}

PositiveDefiniteFn PositiveDefiniteFn::wrap(const KinfFn& fn) {
  return PositiveDefiniteFn(Kind::KinfWrapped, 0.0, 0.0, fn);
}

double PositiveDefiniteFn::operator()(double r) const {
  require_nonneg(r);
  switch (kind_) {
    case Kind::SatLinear:
      return std::min(slope_ * r, cap_);
    case Kind::KinfWrapped:
      return (*inner_)(r);
  }
  throw std::logic_error("unreachable");
}

const KinfFn& PositiveDefiniteFn::wrapped() const {
  if (kind_ != Kind::KinfWrapped) {
    throw std::logic_error("not a wrapped K-infinity function");
  }
  return *inner_;
}

std::optional<double> PositiveDefiniteFn::supremum() const {
  if (kind_ == Kind::SatLinear) {
    return cap_;
  }
  return std::nullopt;
}

nlohmann::json PositiveDefiniteFn::to_json() const {
  switch (kind_) {
    case Kind::SatLinear:
      return {{"kind", "satlinear"}, {"slope", slope_}, {"cap", cap_}};
    case Kind::KinfWrapped:
      return {{"kind", "kinf"}, {"inner", inner_->to_json()}};
  }
  throw std::logic_error("unreachable");
}

PositiveDefiniteFn PositiveDefiniteFn::from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "satlinear") {
    return sat_linear(j.at("slope").get<double>(), j.at("cap").get<double>());
  }
  if (kind == "kinf") {
    return wrap(KinfFn::from_json(j.at("inner")));
  }
  throw std::invalid_argument("unknown positive definite function kind: " +
                              kind);
}

namespace {

double simpson(const std::function<double(double)>& f, double a, double fa,
               double b, double fb, double m, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double simpson_rec(const std::function<double(double)>& f, double a, double fa,
                   double b, double fb, double m, double fm, double whole,
                   double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(f, a, fa, m, fm, lm, flm);
  const double right = simpson(f, m, fm, b, fb, rm, frm);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol, int max_depth) {
  if (!std::isfinite(a) || !std::isfinite(b)) {
    throw std::domain_error("quadrature bounds must be finite");
  }
  if (!(tol > 0.0)) {
    throw std::invalid_argument("quadrature tolerance must be positive");
  }
  if (a == b) {
    return 0.0;
  }
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = simpson(f, a, fa, b, fb, m, fm);
  return simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

ScalarProfile::ScalarProfile(std::function<double(double)> eval,
                             double quad_tol)
    : eval_(std::move(eval)), quad_tol_(quad_tol) {
  if (!(quad_tol_ > 0.0)) {
    throw std::invalid_argument("quadrature tolerance must be positive");
  }
}

double ScalarProfile::operator()(double tau) const {
  require_nonneg(tau);
  return eval_(tau);
}

double ScalarProfile::integrate(double upper) const {
  return integrate(upper, quad_tol_);
}

double ScalarProfile::integrate(double upper, double tol) const {
  if (!std::isfinite(upper) || upper < 0.0) {
    throw std::domain_error("integration upper bound must be finite and "
                            "nonnegative");
  }
  if (upper == 0.0) {
    return 0.0;
  }
  return adaptive_simpson(eval_, 0.0, upper, tol);
}

ScalarProfile compose(const PositiveDefiniteFn& outer, const KinfFn& inner,
                      double quad_tol) {
  return ScalarProfile(
      [outer, inner](double tau) { return outer(inner(tau)); }, quad_tol);
}

bool divergence_evidence(const PositiveDefiniteFn& eta, const KinfFn& alpha) {
  // Integrate eta(alpha(r)) over doubling segments [R, 2R]; divergence
  // evidence means every doubling adds a strictly positive amount and
  // the increments do not decay toward zero.
  const auto integrand = [&](double r) { return eta(alpha(r)); };
  constexpr double kRMax = 1e6;
  constexpr double kMinIncrement = 1e-8;
  double lo = 0.0;
  double hi = 1.0;
  double prev_increment = -1.0;
  while (lo < kRMax) {
    const double seg_tol = std::max(1e-12, 1e-8 * (hi - lo));
    const double inc = adaptive_simpson(integrand, lo, hi, seg_tol, 30);
    if (!(inc > kMinIncrement)) {
      return false;
    }
    if (prev_increment > 0.0 && inc < 0.25 * prev_increment) {
      // Geometrically shrinking increments: partial sums look bounded.
      return false;
    }
    prev_increment = inc;
    lo = hi;
    hi = std::min(2.0 * hi, kRMax);
    if (lo >= kRMax) {
      break;
    }
  }
  return true;
}

}  // namespace lyapnet
