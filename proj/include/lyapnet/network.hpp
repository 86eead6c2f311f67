#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace lyapnet {

enum class ActivationKind { Softplus, Tanh, Identity };

/// Scalar activation with first and second derivative.
struct Activation {
  ActivationKind kind = ActivationKind::Softplus;

  double value(double x) const;
  double d1(double x) const;
  double d2(double x) const;

  std::string name() const;
  static Activation from_name(const std::string& name);
};

/// Scalar-output network W(x; theta) with closed-form derivatives with
/// respect to both the input and the parameters. Parameters live in a
/// single flat vector whose layout is fixed per architecture (the
/// checkpoint format serializes exactly this vector).
class LyapunovNetwork {
 public:
  virtual ~LyapunovNetwork() = default;

  virtual int input_dim() const = 0;
  int param_count() const { return static_cast<int>(theta_.size()); }
  Eigen::VectorXd& params() { return theta_; }
  const Eigen::VectorXd& params() const { return theta_; }

  virtual double forward(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd grad_x(const Eigen::VectorXd& x) const = 0;

  /// Parameter gradient of u * W(x) + v * (DW(x) . f), exact.
  virtual Eigen::VectorXd grad_theta(const Eigen::VectorXd& x, double u,
                                     double v,
                                     const Eigen::VectorXd& f) const = 0;

  Eigen::VectorXd grad_theta_value(const Eigen::VectorXd& x) const {
    return grad_theta(x, 1.0, 0.0, Eigen::VectorXd::Zero(input_dim()));
  }

  /// Total hidden neurons and the per-layer breakdown, output layer
  /// excluded.
  virtual std::pair<int, std::vector<int>> neuron_count() const = 0;

  /// Flat-theta indices in which W is linear (output weights and the
  /// bias); W(x) restricted to them is a dot product with fixed
  /// features.
  virtual std::vector<int> output_linear_indices() const = 0;

  virtual std::unique_ptr<LyapunovNetwork> clone() const = 0;
  virtual nlohmann::json metadata() const = 0;

 protected:
  Eigen::VectorXd theta_;
};

/// Dense one-hidden-layer baseline:
///   W(x) = sum_k a_k sigma(w_k . x + b_k) + c.
/// Layout: w_1..w_N (each length n), b (N), a (N), c.
class DenseNet1 final : public LyapunovNetwork {
 public:
  DenseNet1(int n, int width, ActivationKind act, std::uint64_t seed);

  int input_dim() const override { return n_; }
  int width() const { return width_; }
  const Activation& activation() const { return act_; }

  double forward(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd grad_x(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd grad_theta(const Eigen::VectorXd& x, double u, double v,
                             const Eigen::VectorXd& f) const override;
  std::pair<int, std::vector<int>> neuron_count() const override;
  std::vector<int> output_linear_indices() const override;
  std::unique_ptr<LyapunovNetwork> clone() const override;
  nlohmann::json metadata() const override;

  // Flat-vector offsets.
  int w_offset(int k) const { return k * n_; }
  int b_offset() const { return width_ * n_; }
  int a_offset() const { return width_ * (n_ + 1); }
  int c_offset() const { return width_ * (n_ + 2); }

 private:
  int n_;
  int width_;
  Activation act_;
};

/// One hidden layer split into per-subsystem sublayers: sublayer i has
/// M neurons wired only to the state block z_i.
/// Layout: per sublayer i: what (M x d_i row-major), bhat (M), ahat (M);
/// then c.
class SublayerNet final : public LyapunovNetwork {
 public:
  SublayerNet(std::vector<int> dims, int width, ActivationKind act,
              std::uint64_t seed);

  int input_dim() const override { return n_; }
  int width() const { return width_; }
  int sublayers() const { return static_cast<int>(dims_.size()); }
  const std::vector<int>& dims() const { return dims_; }
  const Activation& activation() const { return act_; }

  double forward(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd grad_x(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd grad_theta(const Eigen::VectorXd& x, double u, double v,
                             const Eigen::VectorXd& f) const override;
  std::pair<int, std::vector<int>> neuron_count() const override;
  std::vector<int> output_linear_indices() const override;
  std::unique_ptr<LyapunovNetwork> clone() const override;
  nlohmann::json metadata() const override;

  /// Equivalent dense network with block-sparse first-layer weights.
  DenseNet1 to_dense() const;

  int block_offset(int i) const { return block_offsets_[i]; }
  int sub_param_offset(int i) const { return sub_offsets_[i]; }
  int c_offset() const { return static_cast<int>(theta_.size()) - 1; }

 private:
  int n_;
  int width_;
  std::vector<int> dims_;
  std::vector<int> block_offsets_;  // into the state vector
  std::vector<int> sub_offsets_;    // into theta
  Activation act_;
};

/// Two hidden layers: an identity-activation transform layer of
/// n * d_max neurons computing y2 = W2 x + b2, feeding n sublayers of
/// width M that each read a d_max-slice of y2.
/// Layout: W2 row-major (n*d_max x n), b2 (n*d_max), then per sublayer
/// what (M x d_max row-major), bhat (M), ahat (M), then c.
class TransformNet final : public LyapunovNetwork {
 public:
  TransformNet(int n, int d_max, int width, ActivationKind act,
               std::uint64_t seed);

  int input_dim() const override { return n_; }
  int width() const { return width_; }
  int d_max() const { return d_max_; }
  const Activation& activation() const { return act_; }

  double forward(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd grad_x(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd grad_theta(const Eigen::VectorXd& x, double u, double v,
                             const Eigen::VectorXd& f) const override;
  std::pair<int, std::vector<int>> neuron_count() const override;
  std::vector<int> output_linear_indices() const override;
  std::unique_ptr<LyapunovNetwork> clone() const override;
  nlohmann::json metadata() const override;

  /// Sets the transform layer so that slice i of y2 carries the base
  /// subsystem coordinates: rows of to_base are assigned to the first
  /// dims[i] neurons of slice i (biases 0), remaining transform rows
  /// are zeroed. to_base maps the observed state to base coordinates
  /// (for a rotated system, the matrix T with xtilde = T x).
  void assign_transform(const Eigen::MatrixXd& to_base,
                        const std::vector<int>& dims);

  /// Current transform-layer weight matrix (n*d_max x n) and biases.
  Eigen::MatrixXd transform_weights() const;
  Eigen::VectorXd transform_biases() const;

  int w2_size() const { return n_ * d_max_ * n_; }
  int b2_offset() const { return w2_size(); }
  int upper_offset() const { return w2_size() + n_ * d_max_; }
  int sub_param_offset(int i) const {
    return upper_offset() + i * width_ * (d_max_ + 2);
  }
  int c_offset() const { return static_cast<int>(theta_.size()) - 1; }

 private:
  Eigen::VectorXd layer2(const Eigen::VectorXd& x) const;

  int n_;
  int d_max_;
  int width_;
  Activation act_;
};

/// Writes theta as a flat array of little-endian f64 plus a JSON
/// sidecar (path + ".json") with the architecture metadata.
void save_checkpoint(const LyapunovNetwork& net, const std::string& path);

/// Rebuilds a network from a checkpoint written by save_checkpoint.
std::unique_ptr<LyapunovNetwork> load_checkpoint(const std::string& path);

/// Network factory from metadata JSON (fresh parameters, given seed).
std::unique_ptr<LyapunovNetwork> make_network(const nlohmann::json& meta,
                                              std::uint64_t seed);

}  // namespace lyapnet
