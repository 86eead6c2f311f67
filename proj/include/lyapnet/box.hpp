#pragma once

#include <stdexcept>

#include <Eigen/Dense>

namespace lyapnet {

/// Axis-aligned compact box, used as the approximation domain K.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  static Box centered(int n, double half_width) {
    if (n <= 0 || !(half_width > 0.0)) {
      throw std::invalid_argument("box needs positive dimension and width");
    }
    Box b;
    b.lo = Eigen::VectorXd::Constant(n, -half_width);
    b.hi = Eigen::VectorXd::Constant(n, half_width);
    return b;
  }

  int dim() const { return static_cast<int>(lo.size()); }

  bool contains_origin() const {
    return (lo.array() <= 0.0).all() && (hi.array() >= 0.0).all();
  }
};

}  // namespace lyapnet
