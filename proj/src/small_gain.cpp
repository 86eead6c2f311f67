#include "lyapnet/small_gain.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "lyapnet/sampling.hpp"

namespace lyapnet {

GainOperators::GainOperators(const std::vector<SubsystemISSData>& spec) {
  s_ = static_cast<int>(spec.size());
  if (s_ == 0) {
    throw std::invalid_argument("empty subsystem list");
  }
  for (const auto& sub : spec) {
    if (static_cast<int>(sub.gains.size()) != s_) {
      throw std::invalid_argument("gain row length does not match the number "
                                  "of subsystems");
    }
    if (sub.gains[sub.index].has_value()) {
      throw std::invalid_argument("diagonal gain gamma_ii must be zero");
    }
    gains_.push_back(sub.gains);
    alphas_.push_back(sub.alpha);
    etas_.push_back(sub.eta);
  }
}

Eigen::VectorXd GainOperators::gamma_of(const Eigen::VectorXd& r) const {
  if (r.size() != s_) {
    throw std::invalid_argument("gain operator argument length mismatch");
  }
  if ((r.array() < 0.0).any()) {
    throw std::domain_error("gain operator argument must be nonnegative");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(s_);
  for (int i = 0; i < s_; ++i) {
    for (int j = 0; j < s_; ++j) {
      if (gains_[i][j].has_value()) {
        out[i] += (*gains_[i][j])(r[j]);
      }
    }
  }
  return out;
}

Eigen::VectorXd GainOperators::a_of(const Eigen::VectorXd& r) const {
  if (r.size() != s_) {
    throw std::invalid_argument("decay operator argument length mismatch");
  }
  Eigen::VectorXd out(s_);
  for (int i = 0; i < s_; ++i) {
    out[i] = alphas_[i](r[i]);
  }
  return out;
}

Eigen::VectorXd GainOperators::eta_of(const Eigen::VectorXd& r) const {
  Eigen::VectorXd out(s_);
  for (int i = 0; i < s_; ++i) {
    out[i] = etas_[i](r[i]);
  }
  return out;
}

nlohmann::json GridSpec::to_json() const {
  return {{"r_min", r_min},
          {"r_max", r_max},
          {"points_per_axis", points_per_axis},
          {"rays", rays},
          {"radii", radii},
          {"tensor_axis_limit", tensor_axis_limit},
          {"seed", seed}};
}

GridSpec GridSpec::from_json(const nlohmann::json& j) {
  GridSpec g;
  g.r_min = j.value("r_min", g.r_min);
  g.r_max = j.value("r_max", g.r_max);
  g.points_per_axis = j.value("points_per_axis", g.points_per_axis);
  g.rays = j.value("rays", g.rays);
  g.radii = j.value("radii", g.radii);
  g.tensor_axis_limit = j.value("tensor_axis_limit", g.tensor_axis_limit);
  g.seed = j.value("seed", g.seed);
  return g;
}

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) {
    arr.push_back(v[i]);
  }
  return arr;
}

std::vector<double> log_spaced(double lo, double hi, int count) {
  std::vector<double> out;
  out.reserve(count);
  if (count == 1) {
    out.push_back(lo);
    return out;
  }
  const double llo = std::log(lo);
  const double lhi = std::log(hi);
  for (int k = 0; k < count; ++k) {
    out.push_back(std::exp(llo + (lhi - llo) * k / (count - 1)));
  }
  return out;
}

}  // namespace

nlohmann::json SmallGainCertificate::to_json() const {
  nlohmann::json j;
  j["verdict"] = verdict == Verdict::PassOnGrid ? "pass_on_grid" : "fail";
  j["grid"] = grid_description;
  j["points_checked"] = points_checked;
  j["min_margin"] = min_margin;
  j["min_margin_at"] = vector_to_json(min_margin_at);
  if (verdict == Verdict::Fail) {
    j["witness"] = vector_to_json(witness);
  }
  return j;
}

SmallGainCertificate check_small_gain(const std::vector<SubsystemISSData>& spec,
                                      const GridSpec& grid) {
  if (!(grid.r_min > 0.0) || !(grid.r_max > grid.r_min)) {
    throw std::invalid_argument("grid must exclude the origin and satisfy "
                                "r_min < r_max");
  }
  if (grid.points_per_axis < 1) {
    throw std::invalid_argument("empty grid");
  }
  const GainOperators ops(spec);
  const int s = ops.size();

  SmallGainCertificate cert;
  cert.verdict = SmallGainCertificate::Verdict::PassOnGrid;
  cert.min_margin = std::numeric_limits<double>::infinity();
  cert.min_margin_at = Eigen::VectorXd::Zero(s);

  bool found_violation = false;
  const auto visit = [&](const Eigen::VectorXd& r) {
    if ((r.array() == 0.0).all()) {
      return;  // origin excluded by definition
    }
    const Eigen::VectorXd eta = ops.eta_of(r);
    const double lhs = eta.dot(ops.gamma_of(ops.a_of(r)));
    const double rhs = eta.dot(r);
    const double margin = rhs - lhs;
    ++cert.points_checked;
    if (margin < cert.min_margin) {
      cert.min_margin = margin;
      cert.min_margin_at = r;
    }
    if (margin <= 0.0 && !found_violation) {
      found_violation = true;
      cert.verdict = SmallGainCertificate::Verdict::Fail;
      cert.witness = r;
    }
  };

  if (s <= grid.tensor_axis_limit) {
    // Tensor product of {0} plus log-spaced axis values.
    std::vector<double> axis = {0.0};
    for (double v : log_spaced(grid.r_min, grid.r_max, grid.points_per_axis)) {
      axis.push_back(v);
    }
    const int a = static_cast<int>(axis.size());
    std::vector<int> idx(s, 0);
    Eigen::VectorXd r(s);
    while (true) {
      for (int i = 0; i < s; ++i) {
        r[i] = axis[idx[i]];
      }
      visit(r);
      int pos = 0;
      while (pos < s && ++idx[pos] == a) {
        idx[pos++] = 0;
      }
      if (pos == s) {
        break;
      }
    }
    cert.grid_description =
        "tensor log grid, " + std::to_string(grid.points_per_axis) +
        " points/axis on [" + std::to_string(grid.r_min) + ", " +
        std::to_string(grid.r_max) + "]";
  } else {
    // Coordinate axes plus random rays through the positive orthant.
    const auto radii = log_spaced(grid.r_min, grid.r_max, grid.radii);
    for (int i = 0; i < s; ++i) {
      for (double rho : radii) {
        Eigen::VectorXd r = Eigen::VectorXd::Zero(s);
        r[i] = rho;
        visit(r);
      }
    }
    std::mt19937_64 rng(grid.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int ray = 0; ray < grid.rays; ++ray) {
      Eigen::VectorXd dir(s);
      for (int i = 0; i < s; ++i) {
        dir[i] = std::abs(gauss(rng));
      }
      const double norm = dir.norm();
      if (norm == 0.0) {
        continue;
      }
      dir /= norm;
      for (double rho : radii) {
        visit(rho * dir);
      }
    }
    cert.grid_description =
        "axis points plus " + std::to_string(grid.rays) + " random rays x " +
        std::to_string(grid.radii) + " radii on [" +
        std::to_string(grid.r_min) + ", " + std::to_string(grid.r_max) + "]";
  }
  return cert;
}

ComposedLyapunov::ComposedLyapunov(const std::vector<SubsystemISSData>& spec,
                                   double quad_tol) {
  if (spec.empty()) {
    throw std::invalid_argument("empty subsystem list");
  }
  n_ = 0;
  for (const auto& sub : spec) {
    dims_.push_back(sub.dim);
    offsets_.push_back(n_);
    n_ += sub.dim;
    values_.push_back(sub.value);
    grads_.push_back(sub.gradient);
    profiles_.push_back(compose(sub.eta, sub.alpha, quad_tol));
  }
}

double ComposedLyapunov::value(const Eigen::VectorXd& x) const {
  if (x.size() != n_) {
    throw std::invalid_argument("state dimension mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const Eigen::VectorXd z = x.segment(offsets_[i], dims_[i]);
    total += profiles_[i].integrate(values_[i](z));
  }
  return mu_ * total;
}

Eigen::VectorXd ComposedLyapunov::gradient(const Eigen::VectorXd& x) const {
  if (x.size() != n_) {
    throw std::invalid_argument("state dimension mismatch");
  }
  Eigen::VectorXd g(n_);
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const Eigen::VectorXd z = x.segment(offsets_[i], dims_[i]);
    const double lambda = profiles_[i](values_[i](z));
    g.segment(offsets_[i], dims_[i]) = mu_ * lambda * grads_[i](z);
  }
  return g;
}

double ComposedLyapunov::subsystem_value(int i, const Eigen::VectorXd& z) const {
  return mu_ * profiles_[i].integrate(values_[i](z));
}

double ComposedLyapunov::subsystem_grad_l1(int i,
                                           const Eigen::VectorXd& z) const {
  const double lambda = profiles_[i](values_[i](z));
  return mu_ * lambda * grads_[i](z).cwiseAbs().sum();
}

void ComposedLyapunov::scale_mu(double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw std::invalid_argument("scale factor must be positive and finite");
  }
  mu_ *= factor;
}

ComposedLyapunov compose_lyapunov(const std::vector<SubsystemISSData>& spec,
                                  double quad_tol) {
  return ComposedLyapunov(spec, quad_tol);
}

ComposedLyapunov normalize_to_w1(const ComposedLyapunov& v, const Box& box,
                                 int samples, std::uint64_t seed) {
  if (box.dim() != v.dim()) {
    throw std::invalid_argument("box dimension mismatch");
  }
  if (!box.contains_origin()) {
    throw std::invalid_argument("normalization box must contain the origin");
  }
  if (samples < 1) {
    throw std::invalid_argument("need at least one sample");
  }
  double worst = 0.0;
  for (int i = 0; i < v.subsystems(); ++i) {
    const int off = v.offsets()[i];
    const int d = v.dims()[i];
    Box block;
    block.lo = box.lo.segment(off, d);
    block.hi = box.hi.segment(off, d);
    QuasiRandomSequence qr(d, seed + static_cast<std::uint64_t>(i));
    double sup = 0.0;
    for (int k = 0; k < samples; ++k) {
      const Eigen::VectorXd u = qr.next();
      const Eigen::VectorXd z =
          block.lo + (block.hi - block.lo).cwiseProduct(u);
      sup = std::max(sup, v.subsystem_grad_l1(i, z));
    }
    for (const auto& corner : box_corners(block)) {
      sup = std::max(sup, v.subsystem_grad_l1(i, corner));
    }
    worst = std::max(worst, sup);
  }
  if (!(worst > 0.0)) {
    throw std::runtime_error("degenerate Lyapunov candidate: sampled "
                             "gradients are identically zero");
  }
  ComposedLyapunov out = v;
  out.scale_mu(1.0 / worst);
  return out;
}

}  // namespace lyapnet
