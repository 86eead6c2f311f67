#include "lyapnet/sampling.hpp"

#include <cmath>

namespace lyapnet {

namespace {

// Root of x^(d+1) = x + 1, the basis of the R_d sequence.
double generalized_golden_ratio(int d) {
  double x = 1.5;
  for (int i = 0; i < 64; ++i) {
    x = std::pow(1.0 + x, 1.0 / (d + 1));
  }
  return x;
}

}  // namespace

QuasiRandomSequence::QuasiRandomSequence(int dim, std::uint64_t seed) {
  const double g = generalized_golden_ratio(dim);
  alpha_.resize(dim);
  state_.resize(dim);
  double p = 1.0;
  for (int k = 0; k < dim; ++k) {
    p /= g;
    alpha_[k] = p;
    state_[k] = 0.5;
  }
  // Seed shifts the starting point along the sequence.
  const double shift = static_cast<double>(seed % 100003) / 100003.0;
  for (int k = 0; k < dim; ++k) {
    state_[k] = std::fmod(state_[k] + shift, 1.0);
  }
}

Eigen::VectorXd QuasiRandomSequence::next() {
  for (int k = 0; k < state_.size(); ++k) {
    state_[k] += alpha_[k];
    if (state_[k] >= 1.0) {
      state_[k] -= 1.0;
    }
  }
  return state_;
}

Eigen::VectorXd uniform_in_box(const Box& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd x(box.dim());
  for (int k = 0; k < x.size(); ++k) {
    x[k] = box.lo[k] + (box.hi[k] - box.lo[k]) * unit(rng);
  }
  return x;
}

std::vector<Eigen::VectorXd> box_corners(const Box& box, int max_dim) {
  const int n = box.dim();
  std::vector<Eigen::VectorXd> corners;
  if (n > max_dim) {
    return corners;
  }
  const std::size_t count = std::size_t{1} << n;
  corners.reserve(count);
  for (std::size_t mask = 0; mask < count; ++mask) {
    Eigen::VectorXd x(n);
    for (int k = 0; k < n; ++k) {
      x[k] = (mask >> k) & 1 ? box.hi[k] : box.lo[k];
    }
    corners.push_back(std::move(x));
  }
  return corners;
}

}  // namespace lyapnet
