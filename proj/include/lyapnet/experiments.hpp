#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lyapnet/small_gain.hpp"
#include "lyapnet/systems.hpp"
#include "lyapnet/training.hpp"
#include "lyapnet/verification.hpp"

namespace lyapnet {

/// One cell of the N-vs-n study. "Minimal" is optimizer-limited: best
/// of the tried seeds under a fixed fit budget, so it upper-bounds the
/// true expressivity minimum.
struct ScalingRecord {
  int n = 0;
  int d_max = 1;
  std::string arch = "sublayer";
  double eps = 0.1;
  int minimal_width = 0;  // M
  int total_neurons = 0;  // N from count_neurons
  double achieved_sup_error = 0.0;
  std::vector<std::uint64_t> seeds;
  std::uint64_t best_seed = 0;
  double wall_ms = 0.0;
  std::string verdict = "not_found";  // "ok" | "not_found"

  std::string csv_row(bool mask_wall_ms = false) const;
  static std::string csv_header();
  nlohmann::json to_json() const;
};

struct ExperimentConfig {
  std::vector<int> dimensions = {2, 4, 6, 8};
  double eps = 0.1;
  std::string arch = "sublayer";  // "sublayer" | "transform" | "dense1"
  int seeds_per_cell = 3;
  int width_lo = 1;
  int width_hi = 32;
  double coupling = 0.1;
  FitConfig fit;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
};

/// Binary search for the smallest sublayer width whose best-of-seeds
/// supervised fit reaches sup error <= eps against the reference.
ScalingRecord minimal_width(const InterconnectedSystem& sys,
                            const ComposedLyapunov& reference,
                            const ExperimentConfig& cfg, int n);

struct PowerLawFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;

  nlohmann::json to_json() const;
};

/// Least squares of log y = slope * log x + intercept.
PowerLawFit fit_power_law(const std::vector<double>& x,
                          const std::vector<double>& y);

struct SweepResult {
  std::vector<ScalingRecord> records;
  PowerLawFit fit;
  std::vector<int> excluded;  // dimensions with verdict not_found

  std::string csv(bool mask_wall_ms = false) const;
  nlohmann::json to_json() const;
};

/// Full N-vs-n sweep on the chain benchmark: per dimension, build the
/// system and normalized reference, locate the minimal width, then fit
/// log N against log n over the successful cells.
SweepResult scaling_sweep(const ExperimentConfig& cfg);

struct TransformRecoveryReport {
  double representation_gap = 0.0;  // max |TransformNet - SublayerNet|
  double assigned_sup_error = 0.0;  // fit error through assign_transform
  double f1_sup_error = 0.0;        // same budget on the F1 system
  double trained_sup_error = 0.0;   // trained from scratch on the F2 system
  std::vector<double> principal_angles;  // learned rows vs rows of T
  nlohmann::json to_json() const;
};

struct TransformRecoveryConfig {
  int n = 2;
  double coupling = 0.1;
  int width = 20;
  FitConfig fit;
  std::uint64_t seed = 0;
  int check_points = 1000;

  nlohmann::json to_json() const;
  static TransformRecoveryConfig from_json(const nlohmann::json& j);
};

TransformRecoveryReport transform_recovery(const TransformRecoveryConfig& cfg);

/// Principal angles (radians) between the column spans of two matrices.
std::vector<double> principal_angles(const Eigen::MatrixXd& a,
                                     const Eigen::MatrixXd& b);

}  // namespace lyapnet
