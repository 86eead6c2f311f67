#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lyapnet/box.hpp"
#include "lyapnet/network.hpp"
#include "lyapnet/systems.hpp"

namespace lyapnet {

struct TrainingConfig {
  double box_half_width = 1.0;  // K = [-C, C]^n
  int batch = 256;
  int steps = 5000;
  double lr0 = 1e-3;
  double lr_final = 1e-3;  // linear decay from lr0
  double w_dec = 1.0;
  double w_pos = 1.0;
  double w_zero = 1.0;
  double kappa = 0.05;       // decrease margin h(x) = kappa |x|^2
  double kappa_pos = 0.01;   // positivity margin
  double exclusion_radius = 1e-3;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  nlohmann::json to_json() const;
  static TrainingConfig from_json(const nlohmann::json& j);
};

struct LossBreakdown {
  double total = 0.0;
  double decrease = 0.0;
  double positivity = 0.0;
  double zero = 0.0;
};

struct TrainReport {
  double final_loss = 0.0;
  std::vector<std::array<double, 4>> curve;  // total, dec, pos, zero
  double wall_seconds = 0.0;
  bool aborted = false;
  std::string abort_reason;

  std::string curve_csv() const;  // step,total,dec,pos,zero
};

struct FitReport {
  double sup_error = 0.0;
  double rms_error = 0.0;
  double final_train_mse = 0.0;
  double wall_seconds = 0.0;
  std::vector<double> curve;  // train MSE per logging step
  bool aborted = false;
};

/// Uniform collocation batch on [-C, C]^n with |x|_inf >= r0, plus the
/// origin appended once.
std::vector<Eigen::VectorXd> sample_collocation(const TrainingConfig& cfg,
                                                int n, int count,
                                                std::uint64_t seed);

/// Residual loss over a batch:
///   w_dec  * mean relu(DW(x).f(x) + h(x))^2
/// + w_pos  * mean relu(kappa_pos |x|^2 - (W(x) - W(0)))^2
/// + w_zero * W(0)^2.
LossBreakdown loss_value(const LyapunovNetwork& net,
                         const InterconnectedSystem& sys,
                         const std::vector<Eigen::VectorXd>& batch,
                         const TrainingConfig& cfg);

std::pair<LossBreakdown, Eigen::VectorXd> loss_and_grad(
    const LyapunovNetwork& net, const InterconnectedSystem& sys,
    const std::vector<Eigen::VectorXd>& batch, const TrainingConfig& cfg);

/// Adaptive-moment collocation training; deterministic given the seed.
TrainReport train(LyapunovNetwork& net, const InterconnectedSystem& sys,
                  const TrainingConfig& cfg);

struct FitConfig {
  int samples = 4096;
  int holdout = 2048;
  int steps = 1500;
  int batch = 256;
  double lr0 = 5e-2;
  double lr_final = 1e-4;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  nlohmann::json to_json() const;
  static FitConfig from_json(const nlohmann::json& j);
};

/// Supervised regression of the network onto a reference function on
/// the box; reports sup and RMS error on a held-out sample.
FitReport fit_to_reference(LyapunovNetwork& net,
                           const std::function<double(const Eigen::VectorXd&)>&
                               reference,
                           const Box& box, const FitConfig& cfg);

}  // namespace lyapnet
