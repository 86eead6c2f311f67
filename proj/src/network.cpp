#include "lyapnet/network.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

namespace lyapnet {

double Activation::value(double x) const {
  switch (kind) {
    case ActivationKind::Softplus:
      return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    case ActivationKind::Tanh:
      return std::tanh(x);
    case ActivationKind::Identity:
      return x;
  }
  throw std::logic_error("unreachable");
}

double Activation::d1(double x) const {
  switch (kind) {
    case ActivationKind::Softplus:
      return 1.0 / (1.0 + std::exp(-x));
    case ActivationKind::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case ActivationKind::Identity:
      return 1.0;
  }
  throw std::logic_error("unreachable");
}

double Activation::d2(double x) const {
  switch (kind) {
    case ActivationKind::Softplus: {
      const double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 - s);
    }
    case ActivationKind::Tanh: {
      const double t = std::tanh(x);
      return -2.0 * t * (1.0 - t * t);
    }
    case ActivationKind::Identity:
      return 0.0;
  }
  throw std::logic_error("unreachable");
}

std::string Activation::name() const {
  switch (kind) {
    case ActivationKind::Softplus:
      return "softplus";
    case ActivationKind::Tanh:
      return "tanh";
    case ActivationKind::Identity:
      return "identity";
  }
  throw std::logic_error("unreachable");
}

Activation Activation::from_name(const std::string& name) {
  if (name == "softplus") {
    return {ActivationKind::Softplus};
  }
  if (name == "tanh") {
    return {ActivationKind::Tanh};
  }
  if (name == "identity") {
    return {ActivationKind::Identity};
  }
  throw std::invalid_argument("unknown activation: " + name);
}

namespace {

void check_hidden_activation(ActivationKind act) {
  // The hidden-layer activation must be smooth and non-polynomial;
  // identity is reserved for the transform layer.
  if (act == ActivationKind::Identity) {
    throw std::invalid_argument("identity activation is only allowed in the "
                                "transform layer");
  }
}

void init_uniform(Eigen::Ref<Eigen::VectorXd> block, double scale,
                  std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (int k = 0; k < block.size(); ++k) {
    block[k] = dist(rng);
  }
}

void check_dim(const Eigen::VectorXd& x, int n, const char* what) {
  if (x.size() != n) {
    throw std::invalid_argument(std::string(what) + " dimension mismatch");
  }
}

}  // namespace

DenseNet1::DenseNet1(int n, int width, ActivationKind act, std::uint64_t seed)
    : n_(n), width_(width), act_{act} {
  if (n < 1 || width < 1) {
    throw std::invalid_argument("network needs positive dimensions");
  }
  check_hidden_activation(act);
  theta_ = Eigen::VectorXd::Zero(width * (n + 2) + 1);
  std::mt19937_64 rng(seed);
  init_uniform(theta_.segment(0, width * n), 1.0 / std::sqrt(double(n)), rng);
  init_uniform(theta_.segment(a_offset(), width),
               1.0 / std::sqrt(double(width)), rng);
}

double DenseNet1::forward(const Eigen::VectorXd& x) const {
  check_dim(x, n_, "input");
  double out = theta_[c_offset()];
  for (int k = 0; k < width_; ++k) {
    const double s = theta_.segment(w_offset(k), n_).dot(x) +
                     theta_[b_offset() + k];
    out += theta_[a_offset() + k] * act_.value(s);
  }
  return out;
}

Eigen::VectorXd DenseNet1::grad_x(const Eigen::VectorXd& x) const {
  check_dim(x, n_, "input");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n_);
  for (int k = 0; k < width_; ++k) {
    const auto w = theta_.segment(w_offset(k), n_);
    const double s = w.dot(x) + theta_[b_offset() + k];
    g += theta_[a_offset() + k] * act_.d1(s) * w;
  }
  return g;
}

Eigen::VectorXd DenseNet1::grad_theta(const Eigen::VectorXd& x, double u,
                                      double v,
                                      const Eigen::VectorXd& f) const {
  check_dim(x, n_, "input");
  check_dim(f, n_, "direction");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(theta_.size());
  for (int k = 0; k < width_; ++k) {
    const auto w = theta_.segment(w_offset(k), n_);
    const double a = theta_[a_offset() + k];
    const double s = w.dot(x) + theta_[b_offset() + k];
    const double s1 = act_.d1(s);
    const double s2 = act_.d2(s);
    const double q = w.dot(f);
    g.segment(w_offset(k), n_) =
        u * a * s1 * x + v * a * (s2 * q * x + s1 * f);
    g[b_offset() + k] = u * a * s1 + v * a * s2 * q;
    g[a_offset() + k] = u * act_.value(s) + v * s1 * q;
  }
  g[c_offset()] = u;
  return g;
}

std::pair<int, std::vector<int>> DenseNet1::neuron_count() const {
  return {width_, {width_}};
}

std::vector<int> DenseNet1::output_linear_indices() const {
  std::vector<int> idx;
  idx.reserve(width_ + 1);
  for (int k = 0; k < width_; ++k) {
    idx.push_back(a_offset() + k);
  }
  idx.push_back(c_offset());
  return idx;
}

std::unique_ptr<LyapunovNetwork> DenseNet1::clone() const {
  return std::make_unique<DenseNet1>(*this);
}

nlohmann::json DenseNet1::metadata() const {
  return {{"arch", "dense1"},
          {"n", n_},
          {"width", width_},
          {"activation", act_.name()}};
}

SublayerNet::SublayerNet(std::vector<int> dims, int width, ActivationKind act,
                         std::uint64_t seed)
    : width_(width), dims_(std::move(dims)), act_{act} {
  if (dims_.empty() || width < 1) {
    throw std::invalid_argument("network needs positive dimensions");
  }
  check_hidden_activation(act);
  n_ = 0;
  int p = 0;
  for (int d : dims_) {
    if (d < 1) {
      throw std::invalid_argument("subsystem dimensions must be positive");
    }
    block_offsets_.push_back(n_);
    sub_offsets_.push_back(p);
    n_ += d;
    p += width * (d + 2);
  }
  theta_ = Eigen::VectorXd::Zero(p + 1);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const int d = dims_[i];
    const int o = sub_offsets_[i];
    init_uniform(theta_.segment(o, width * d), 1.0 / std::sqrt(double(d)),
                 rng);
    init_uniform(theta_.segment(o + width * (d + 1), width),
                 1.0 / std::sqrt(double(width)), rng);
  }
}

double SublayerNet::forward(const Eigen::VectorXd& x) const {
  check_dim(x, n_, "input");
  double out = theta_[c_offset()];
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const int d = dims_[i];
    const int o = sub_offsets_[i];
    const auto z = x.segment(block_offsets_[i], d);
    for (int k = 0; k < width_; ++k) {
      const double s = theta_.segment(o + k * d, d).dot(z) +
                       theta_[o + width_ * d + k];
      out += theta_[o + width_ * (d + 1) + k] * act_.value(s);
    }
  }
  return out;
}

Eigen::VectorXd SublayerNet::grad_x(const Eigen::VectorXd& x) const {
  check_dim(x, n_, "input");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n_);
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const int d = dims_[i];
    const int o = sub_offsets_[i];
    const auto z = x.segment(block_offsets_[i], d);
    for (int k = 0; k < width_; ++k) {
      const auto w = theta_.segment(o + k * d, d);
      const double s = w.dot(z) + theta_[o + width_ * d + k];
      g.segment(block_offsets_[i], d) +=
          theta_[o + width_ * (d + 1) + k] * act_.d1(s) * w;
    }
  }
  return g;
}

Eigen::VectorXd SublayerNet::grad_theta(const Eigen::VectorXd& x, double u,
                                        double v,
                                        const Eigen::VectorXd& f) const {
  check_dim(x, n_, "input");
  check_dim(f, n_, "direction");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(theta_.size());
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const int d = dims_[i];
    const int o = sub_offsets_[i];
    const auto z = x.segment(block_offsets_[i], d);
    const auto fz = f.segment(block_offsets_[i], d);
    for (int k = 0; k < width_; ++k) {
      const auto w = theta_.segment(o + k * d, d);
      const double a = theta_[o + width_ * (d + 1) + k];
      const double s = w.dot(z) + theta_[o + width_ * d + k];
      const double s1 = act_.d1(s);
      const double s2 = act_.d2(s);
      const double q = w.dot(fz);
      g.segment(o + k * d, d) =
          u * a * s1 * z + v * a * (s2 * q * z + s1 * fz);
      g[o + width_ * d + k] = u * a * s1 + v * a * s2 * q;
      g[o + width_ * (d + 1) + k] = u * act_.value(s) + v * s1 * q;
    }
  }
  g[c_offset()] = u;
  return g;
}

std::pair<int, std::vector<int>> SublayerNet::neuron_count() const {
  const int total = width_ * static_cast<int>(dims_.size());
  return {total, {total}};
}

std::vector<int> SublayerNet::output_linear_indices() const {
  std::vector<int> idx;
  idx.reserve(width_ * dims_.size() + 1);
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const int ahat = sub_offsets_[i] + width_ * (dims_[i] + 1);
    for (int k = 0; k < width_; ++k) {
      idx.push_back(ahat + k);
    }
  }
  idx.push_back(c_offset());
  return idx;
}

std::unique_ptr<LyapunovNetwork> SublayerNet::clone() const {
  return std::make_unique<SublayerNet>(*this);
}

nlohmann::json SublayerNet::metadata() const {
  return {{"arch", "sublayer"},
          {"dims", dims_},
          {"width", width_},
          {"activation", act_.name()}};
}

DenseNet1 SublayerNet::to_dense() const {
  DenseNet1 dense(n_, width_ * sublayers(), act_.kind, 0);
  dense.params().setZero();
  int neuron = 0;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const int d = dims_[i];
    const int o = sub_offsets_[i];
    for (int k = 0; k < width_; ++k, ++neuron) {
      dense.params().segment(dense.w_offset(neuron) + block_offsets_[i], d) =
          theta_.segment(o + k * d, d);
      dense.params()[dense.b_offset() + neuron] = theta_[o + width_ * d + k];
      dense.params()[dense.a_offset() + neuron] =
          theta_[o + width_ * (d + 1) + k];
    }
  }
  dense.params()[dense.c_offset()] = theta_[c_offset()];
  return dense;
}

TransformNet::TransformNet(int n, int d_max, int width, ActivationKind act,
                           std::uint64_t seed)
    : n_(n), d_max_(d_max), width_(width), act_{act} {
  if (n < 1 || d_max < 1 || width < 1) {
    throw std::invalid_argument("network needs positive dimensions");
  }
  check_hidden_activation(act);
  const int p = w2_size() + n * d_max + n * width * (d_max + 2) + 1;
  theta_ = Eigen::VectorXd::Zero(p);
  std::mt19937_64 rng(seed);
  init_uniform(theta_.segment(0, w2_size()), 1.0 / std::sqrt(double(n)), rng);
  for (int i = 0; i < n_; ++i) {
    const int o = sub_param_offset(i);
    init_uniform(theta_.segment(o, width * d_max),
                 1.0 / std::sqrt(double(d_max)), rng);
    init_uniform(theta_.segment(o + width * (d_max + 1), width),
                 1.0 / std::sqrt(double(width)), rng);
  }
}

Eigen::VectorXd TransformNet::layer2(const Eigen::VectorXd& x) const {
  const int rows = n_ * d_max_;
  Eigen::VectorXd y2(rows);
  for (int j = 0; j < rows; ++j) {
    y2[j] = theta_.segment(j * n_, n_).dot(x) + theta_[b2_offset() + j];
  }
  return y2;
}

double TransformNet::forward(const Eigen::VectorXd& x) const {
  check_dim(x, n_, "input");
  const Eigen::VectorXd y2 = layer2(x);
  double out = theta_[c_offset()];
  for (int i = 0; i < n_; ++i) {
    const int o = sub_param_offset(i);
    const auto slice = y2.segment(i * d_max_, d_max_);
    for (int k = 0; k < width_; ++k) {
      const double s = theta_.segment(o + k * d_max_, d_max_).dot(slice) +
                       theta_[o + width_ * d_max_ + k];
      out += theta_[o + width_ * (d_max_ + 1) + k] * act_.value(s);
    }
  }
  return out;
}

Eigen::VectorXd TransformNet::grad_x(const Eigen::VectorXd& x) const {
  check_dim(x, n_, "input");
  const Eigen::VectorXd y2 = layer2(x);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n_);
  for (int i = 0; i < n_; ++i) {
    const int o = sub_param_offset(i);
    const auto slice = y2.segment(i * d_max_, d_max_);
    for (int k = 0; k < width_; ++k) {
      const auto w = theta_.segment(o + k * d_max_, d_max_);
      const double s = w.dot(slice) + theta_[o + width_ * d_max_ + k];
      const double coeff =
          theta_[o + width_ * (d_max_ + 1) + k] * act_.d1(s);
      for (int m = 0; m < d_max_; ++m) {
        g += coeff * w[m] * theta_.segment((i * d_max_ + m) * n_, n_);
      }
    }
  }
  return g;
}

Eigen::VectorXd TransformNet::grad_theta(const Eigen::VectorXd& x, double u,
                                         double v,
                                         const Eigen::VectorXd& f) const {
  check_dim(x, n_, "input");
  check_dim(f, n_, "direction");
  const Eigen::VectorXd y2 = layer2(x);
  // y2 directional derivatives along f (transform layer is affine).
  const int rows = n_ * d_max_;
  Eigen::VectorXd y2f(rows);
  for (int j = 0; j < rows; ++j) {
    y2f[j] = theta_.segment(j * n_, n_).dot(f);
  }
  Eigen::VectorXd g = Eigen::VectorXd::Zero(theta_.size());
  for (int i = 0; i < n_; ++i) {
    const int o = sub_param_offset(i);
    const auto slice = y2.segment(i * d_max_, d_max_);
    const auto slice_f = y2f.segment(i * d_max_, d_max_);
    for (int k = 0; k < width_; ++k) {
      const auto w = theta_.segment(o + k * d_max_, d_max_);
      const double a = theta_[o + width_ * (d_max_ + 1) + k];
      const double s = w.dot(slice) + theta_[o + width_ * d_max_ + k];
      const double s1 = act_.d1(s);
      const double s2 = act_.d2(s);
      const double q = w.dot(slice_f);  // g_k . f
      // Upper-layer parameters.
      g.segment(o + k * d_max_, d_max_) +=
          u * a * s1 * slice + v * a * (s2 * q * slice + s1 * slice_f);
      g[o + width_ * d_max_ + k] += u * a * s1 + v * a * s2 * q;
      g[o + width_ * (d_max_ + 1) + k] += u * act_.value(s) + v * s1 * q;
      // Transform-layer parameters feeding this neuron.
      for (int m = 0; m < d_max_; ++m) {
        const int row = i * d_max_ + m;
        g.segment(row * n_, n_) +=
            u * a * s1 * w[m] * x +
            v * a * (s2 * q * w[m] * x + s1 * w[m] * f);
        g[b2_offset() + row] += u * a * s1 * w[m] + v * a * s2 * q * w[m];
      }
    }
  }
  g[c_offset()] = u;
  return g;
}

std::pair<int, std::vector<int>> TransformNet::neuron_count() const {
  const int upper = n_ * width_;
  const int lower = n_ * d_max_;
  return {upper + lower, {upper, lower}};
}

std::vector<int> TransformNet::output_linear_indices() const {
  std::vector<int> idx;
  idx.reserve(n_ * width_ + 1);
  for (int i = 0; i < n_; ++i) {
    const int ahat = sub_param_offset(i) + width_ * (d_max_ + 1);
    for (int k = 0; k < width_; ++k) {
      idx.push_back(ahat + k);
    }
  }
  idx.push_back(c_offset());
  return idx;
}

std::unique_ptr<LyapunovNetwork> TransformNet::clone() const {
  return std::make_unique<TransformNet>(*this);
}

nlohmann::json TransformNet::metadata() const {
  return {{"arch", "transform"},
          {"n", n_},
          {"d_max", d_max_},
          {"width", width_},
          {"activation", act_.name()}};
}

void TransformNet::assign_transform(const Eigen::MatrixXd& to_base,
                                    const std::vector<int>& dims) {
  if (to_base.rows() != n_ || to_base.cols() != n_) {
    throw std::invalid_argument("transform matrix must be n x n");
  }
  int total = 0;
  for (int d : dims) {
    if (d < 1 || d > d_max_) {
      throw std::invalid_argument("subsystem dimension exceeds d_max");
    }
    total += d;
  }
  if (total > n_) {
    throw std::invalid_argument("partition dimensions exceed n");
  }
  theta_.segment(0, w2_size()).setZero();
  theta_.segment(b2_offset(), n_ * d_max_).setZero();
  int p = 0;  // first base coordinate of block i
  for (std::size_t i = 0; i < dims.size(); ++i) {
    for (int m = 0; m < dims[i]; ++m) {
      const int row = static_cast<int>(i) * d_max_ + m;
      theta_.segment(row * n_, n_) = to_base.row(p + m).transpose();
    }
    p += dims[i];
  }
}

Eigen::MatrixXd TransformNet::transform_weights() const {
  Eigen::MatrixXd w(n_ * d_max_, n_);
  for (int j = 0; j < n_ * d_max_; ++j) {
    w.row(j) = theta_.segment(j * n_, n_).transpose();
  }
  return w;
}

Eigen::VectorXd TransformNet::transform_biases() const {
  return theta_.segment(b2_offset(), n_ * d_max_);
}

std::unique_ptr<LyapunovNetwork> make_network(const nlohmann::json& meta,
                                              std::uint64_t seed) {
  const std::string arch = meta.at("arch").get<std::string>();
  const auto act =
      Activation::from_name(meta.value("activation", "softplus")).kind;
  if (arch == "dense1") {
    return std::make_unique<DenseNet1>(meta.at("n").get<int>(),
                                       meta.at("width").get<int>(), act, seed);
  }
  if (arch == "sublayer") {
    return std::make_unique<SublayerNet>(
        meta.at("dims").get<std::vector<int>>(), meta.at("width").get<int>(),
        act, seed);
  }
  if (arch == "transform") {
    return std::make_unique<TransformNet>(meta.at("n").get<int>(),
                                          meta.at("d_max").get<int>(),
                                          meta.at("width").get<int>(), act,
                                          seed);
  }
  throw std::invalid_argument("unknown architecture: " + arch);
}

void save_checkpoint(const LyapunovNetwork& net, const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::filesystem::create_directories(parent);
  }
  std::ofstream bin(path, std::ios::binary);
  if (!bin) {
    throw std::runtime_error("cannot open checkpoint file: " + path);
  }
  bin.write(reinterpret_cast<const char*>(net.params().data()),
            static_cast<std::streamsize>(net.param_count() * sizeof(double)));
  std::ofstream meta(path + ".json");
  nlohmann::json j = net.metadata();
  j["param_count"] = net.param_count();
  meta << j.dump(2) << "\n";
}

std::unique_ptr<LyapunovNetwork> load_checkpoint(const std::string& path) {
  std::ifstream meta(path + ".json");
  if (!meta) {
    throw std::runtime_error("cannot open checkpoint sidecar: " + path +
                             ".json");
  }
  nlohmann::json j;
  meta >> j;
  auto net = make_network(j, 0);
  const int expected = j.at("param_count").get<int>();
  if (expected != net->param_count()) {
    throw std::runtime_error("checkpoint parameter count mismatch");
  }
  std::ifstream bin(path, std::ios::binary);
  if (!bin) {
    throw std::runtime_error("cannot open checkpoint file: " + path);
  }
  bin.read(reinterpret_cast<char*>(net->params().data()),
           static_cast<std::streamsize>(expected * sizeof(double)));
  if (bin.gcount() != static_cast<std::streamsize>(expected * sizeof(double))) {
    throw std::runtime_error("checkpoint file truncated");
  }
  return net;
}

}  // namespace lyapnet
