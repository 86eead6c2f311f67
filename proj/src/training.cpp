#include "lyapnet/training.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "lyapnet/sampling.hpp"

namespace lyapnet {

nlohmann::json TrainingConfig::to_json() const {
  return {{"box_half_width", box_half_width},
          {"batch", batch},
          {"steps", steps},
          {"lr0", lr0},
          {"lr_final", lr_final},
          {"w_dec", w_dec},
          {"w_pos", w_pos},
          {"w_zero", w_zero},
          {"kappa", kappa},
          {"kappa_pos", kappa_pos},
          {"exclusion_radius", exclusion_radius},
          {"seed", seed},
          {"beta1", beta1},
          {"beta2", beta2},
          {"adam_eps", adam_eps}};
}

TrainingConfig TrainingConfig::from_json(const nlohmann::json& j) {
  TrainingConfig c;
  c.box_half_width = j.value("box_half_width", c.box_half_width);
  c.batch = j.value("batch", c.batch);
  c.steps = j.value("steps", c.steps);
  c.lr0 = j.value("lr0", c.lr0);
  c.lr_final = j.value("lr_final", c.lr_final);
  c.w_dec = j.value("w_dec", c.w_dec);
  c.w_pos = j.value("w_pos", c.w_pos);
  c.w_zero = j.value("w_zero", c.w_zero);
  c.kappa = j.value("kappa", c.kappa);
  c.kappa_pos = j.value("kappa_pos", c.kappa_pos);
  c.exclusion_radius = j.value("exclusion_radius", c.exclusion_radius);
  c.seed = j.value("seed", c.seed);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.adam_eps = j.value("adam_eps", c.adam_eps);
  if (!(c.w_dec > 0.0 && c.w_pos > 0.0 && c.w_zero > 0.0)) {
    throw std::invalid_argument("loss weights must be positive");
  }
  if (!(c.exclusion_radius < c.box_half_width)) {
    throw std::invalid_argument("exclusion radius must be smaller than the "
                                "box half width");
  }
  return c;
}

nlohmann::json FitConfig::to_json() const {
  return {{"samples", samples}, {"holdout", holdout}, {"steps", steps},
          {"batch", batch},     {"lr0", lr0},         {"lr_final", lr_final},
          {"seed", seed},       {"beta1", beta1},     {"beta2", beta2},
          {"adam_eps", adam_eps}};
}

FitConfig FitConfig::from_json(const nlohmann::json& j) {
  FitConfig c;
  c.samples = j.value("samples", c.samples);
  c.holdout = j.value("holdout", c.holdout);
  c.steps = j.value("steps", c.steps);
  c.batch = j.value("batch", c.batch);
  c.lr0 = j.value("lr0", c.lr0);
  c.lr_final = j.value("lr_final", c.lr_final);
  c.seed = j.value("seed", c.seed);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.adam_eps = j.value("adam_eps", c.adam_eps);
  return c;
}

std::string TrainReport::curve_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "step,total,dec,pos,zero\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << i << "," << curve[i][0] << "," << curve[i][1] << "," << curve[i][2]
        << "," << curve[i][3] << "\n";
  }
  return out.str();
}

std::vector<Eigen::VectorXd> sample_collocation(const TrainingConfig& cfg,
                                                int n, int count,
                                                std::uint64_t seed) {
  if (count <= 0) {
    throw std::invalid_argument("batch count must be positive");
  }
  const Box box = Box::centered(n, cfg.box_half_width);
  std::mt19937_64 rng(seed);
  std::vector<Eigen::VectorXd> batch;
  batch.reserve(count + 1);
  while (static_cast<int>(batch.size()) < count) {
    Eigen::VectorXd x = uniform_in_box(box, rng);
    if (x.lpNorm<Eigen::Infinity>() >= cfg.exclusion_radius) {
      batch.push_back(std::move(x));
    }
  }
  batch.push_back(Eigen::VectorXd::Zero(n));
  return batch;
}

namespace {

double relu(double x) { return x > 0.0 ? x : 0.0; }

struct Adam {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  double beta1, beta2, eps;
  int t = 0;

  Adam(int dim, double b1, double b2, double e)
      : m(Eigen::VectorXd::Zero(dim)), v(Eigen::VectorXd::Zero(dim)),
        beta1(b1), beta2(b2), eps(e) {}

  void step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, double lr) {
    ++t;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double mc = 1.0 - std::pow(beta1, t);
    const double vc = 1.0 - std::pow(beta2, t);
    theta -= lr * (m / mc).cwiseQuotient(
                      ((v / vc).cwiseSqrt().array() + eps).matrix());
  }
};

double schedule(double lr0, double lr_final, int step, int steps) {
  if (steps <= 1) {
    return lr0;
  }
  const double a = static_cast<double>(step) / (steps - 1);
  return lr0 + (lr_final - lr0) * a;
}

}  // namespace

LossBreakdown loss_value(const LyapunovNetwork& net,
                         const InterconnectedSystem& sys,
                         const std::vector<Eigen::VectorXd>& batch,
                         const TrainingConfig& cfg) {
  if (batch.empty()) {
    throw std::invalid_argument("empty batch");
  }
  const double w0 = net.forward(Eigen::VectorXd::Zero(net.input_dim()));
  double dec = 0.0;
  double pos = 0.0;
  for (const auto& x : batch) {
    const double h = cfg.kappa * x.squaredNorm();
    const double r_dec = relu(net.grad_x(x).dot(sys.field(x)) + h);
    const double r_pos =
        relu(cfg.kappa_pos * x.squaredNorm() - (net.forward(x) - w0));
    dec += r_dec * r_dec;
    pos += r_pos * r_pos;
  }
  const double m = static_cast<double>(batch.size());
  LossBreakdown out;
  out.decrease = cfg.w_dec * dec / m;
  out.positivity = cfg.w_pos * pos / m;
  out.zero = cfg.w_zero * w0 * w0;
  out.total = out.decrease + out.positivity + out.zero;
  return out;
}

std::pair<LossBreakdown, Eigen::VectorXd> loss_and_grad(
    const LyapunovNetwork& net, const InterconnectedSystem& sys,
    const std::vector<Eigen::VectorXd>& batch, const TrainingConfig& cfg) {
  if (batch.empty()) {
    throw std::invalid_argument("empty batch");
  }
  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(net.input_dim());
  const double w0 = net.forward(origin);
  const double m = static_cast<double>(batch.size());

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.param_count());
  double dec = 0.0;
  double pos = 0.0;
  double pos_coeff_at_zero = 0.0;  // accumulated d(loss)/dW(0)
  for (const auto& x : batch) {
    const Eigen::VectorXd f = sys.field(x);
    const double h = cfg.kappa * x.squaredNorm();
    const double r_dec = relu(net.grad_x(x).dot(f) + h);
    const double r_pos =
        relu(cfg.kappa_pos * x.squaredNorm() - (net.forward(x) - w0));
    dec += r_dec * r_dec;
    pos += r_pos * r_pos;
    const double u = cfg.w_pos * 2.0 * r_pos * (-1.0) / m;
    const double v = cfg.w_dec * 2.0 * r_dec / m;
    if (u != 0.0 || v != 0.0) {
      grad += net.grad_theta(x, u, v, f);
    }
    pos_coeff_at_zero += cfg.w_pos * 2.0 * r_pos / m;
  }
  const double zero_coeff = cfg.w_zero * 2.0 * w0;
  if (pos_coeff_at_zero != 0.0 || zero_coeff != 0.0) {
    grad += (pos_coeff_at_zero + zero_coeff) * net.grad_theta_value(origin);
  }

  LossBreakdown out;
  out.decrease = cfg.w_dec * dec / m;
  out.positivity = cfg.w_pos * pos / m;
  out.zero = cfg.w_zero * w0 * w0;
  out.total = out.decrease + out.positivity + out.zero;
  return {out, std::move(grad)};
}

TrainReport train(LyapunovNetwork& net, const InterconnectedSystem& sys,
                  const TrainingConfig& cfg) {
  if (sys.n != net.input_dim()) {
    throw std::invalid_argument("system and network dimensions differ");
  }
  const auto start = std::chrono::steady_clock::now();
  TrainReport report;
  report.curve.reserve(cfg.steps);
  Adam opt(net.param_count(), cfg.beta1, cfg.beta2, cfg.adam_eps);
  std::mt19937_64 batch_seeds(cfg.seed);
  for (int step = 0; step < cfg.steps; ++step) {
    const auto batch =
        sample_collocation(cfg, net.input_dim(), cfg.batch, batch_seeds());
    auto [loss, grad] = loss_and_grad(net, sys, batch, cfg);
    report.curve.push_back(
        {loss.total, loss.decrease, loss.positivity, loss.zero});
    if (!std::isfinite(loss.total) || loss.total > 1e12) {
      report.aborted = true;
      report.abort_reason = "training diverged at step " +
                            std::to_string(step) + " (loss " +
                            std::to_string(loss.total) + ")";
      break;
    }
    opt.step(net.params(), grad, schedule(cfg.lr0, cfg.lr_final, step,
                                          cfg.steps));
  }
  report.final_loss = report.curve.empty() ? 0.0 : report.curve.back()[0];
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

FitReport fit_to_reference(LyapunovNetwork& net,
                           const std::function<double(const Eigen::VectorXd&)>&
                               reference,
                           const Box& box, const FitConfig& cfg) {
  if (box.dim() != net.input_dim()) {
    throw std::invalid_argument("box and network dimensions differ");
  }
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(cfg.seed);

  std::vector<Eigen::VectorXd> xs;
  std::vector<double> ys;
  xs.reserve(cfg.samples);
  ys.reserve(cfg.samples);
  for (int i = 0; i < cfg.samples; ++i) {
    xs.push_back(uniform_in_box(box, rng));
    ys.push_back(reference(xs.back()));
  }
  std::vector<Eigen::VectorXd> hx;
  std::vector<double> hy;
  hx.reserve(cfg.holdout);
  hy.reserve(cfg.holdout);
  for (int i = 0; i < cfg.holdout; ++i) {
    hx.push_back(uniform_in_box(box, rng));
    hy.push_back(reference(hx.back()));
  }

  FitReport report;
  Adam opt(net.param_count(), cfg.beta1, cfg.beta2, cfg.adam_eps);
  const Eigen::VectorXd zero_dir = Eigen::VectorXd::Zero(net.input_dim());
  std::uniform_int_distribution<int> pick(0, cfg.samples - 1);
  for (int step = 0; step < cfg.steps; ++step) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.param_count());
    double mse = 0.0;
    const int b = std::min(cfg.batch, cfg.samples);
    for (int k = 0; k < b; ++k) {
      const int idx = b == cfg.samples ? k : pick(rng);
      const double r = net.forward(xs[idx]) - ys[idx];
      mse += r * r;
      grad += net.grad_theta(xs[idx], 2.0 * r / b, 0.0, zero_dir);
    }
    mse /= b;
    if (!std::isfinite(mse) || mse > 1e12) {
      report.aborted = true;
      break;
    }
    report.curve.push_back(mse);
    opt.step(net.params(), grad, schedule(cfg.lr0, cfg.lr_final, step,
                                          cfg.steps));
  }
  report.final_train_mse = report.curve.empty() ? 0.0 : report.curve.back();

  // W is linear in the output weights, so finish with an exact ridge
  // solve for them on the full training set.
  if (!report.aborted) {
    const std::vector<int> lin = net.output_linear_indices();
    const int p = static_cast<int>(lin.size());
    if (p > 0 && cfg.samples >= p) {
      Eigen::MatrixXd phi(cfg.samples, p);
      Eigen::VectorXd target(cfg.samples);
      for (int i = 0; i < cfg.samples; ++i) {
        const Eigen::VectorXd g = net.grad_theta(xs[i], 1.0, 0.0, zero_dir);
        for (int k = 0; k < p; ++k) {
          phi(i, k) = g[lin[k]];
        }
        target[i] = ys[i];
      }
      Eigen::MatrixXd gram = phi.transpose() * phi;
      gram.diagonal().array() += 1e-10 * gram.trace() / p + 1e-12;
      const Eigen::VectorXd coef =
          gram.ldlt().solve(phi.transpose() * target);
      for (int k = 0; k < p; ++k) {
        net.params()[lin[k]] = coef[k];
      }
      report.final_train_mse =
          (phi * coef - target).squaredNorm() / cfg.samples;
    }
  }

  double sup = 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < hx.size(); ++i) {
    const double err = std::abs(net.forward(hx[i]) - hy[i]);
    sup = std::max(sup, err);
    sq += err * err;
  }
  report.sup_error = sup;
  report.rms_error = hx.empty() ? 0.0 : std::sqrt(sq / hx.size());
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

}  // namespace lyapnet
