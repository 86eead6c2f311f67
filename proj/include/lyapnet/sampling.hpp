#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "lyapnet/box.hpp"

namespace lyapnet {

/// Additive-recurrence quasi-random sequence in [0,1)^d (the R_d
/// generalization of the golden ratio), deterministic given the seed
/// offset.
class QuasiRandomSequence {
 public:
  explicit QuasiRandomSequence(int dim, std::uint64_t seed = 0);
  Eigen::VectorXd next();

 private:
  Eigen::VectorXd alpha_;
  Eigen::VectorXd state_;
};

/// Uniform sample in the box, using the supplied engine.
Eigen::VectorXd uniform_in_box(const Box& box, std::mt19937_64& rng);

/// All 2^n corners of the box when n <= max_dim, empty otherwise.
std::vector<Eigen::VectorXd> box_corners(const Box& box, int max_dim = 10);

}  // namespace lyapnet
