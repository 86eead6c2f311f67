// End-to-end acceptance gate. Each criterion prints one PASS/FAIL line;
// the process exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lyapnet/experiments.hpp"
#include "lyapnet/network.hpp"
#include "lyapnet/small_gain.hpp"
#include "lyapnet/systems.hpp"
#include "lyapnet/training.hpp"
#include "lyapnet/verification.hpp"

namespace fs = std::filesystem;
using namespace lyapnet;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool ok, double seconds,
            const std::string& detail) {
  std::printf("[%s] criterion %d: %-28s (%.1fs) %s\n", ok ? "PASS" : "FAIL",
              id, name.c_str(), seconds, detail.c_str());
  std::fflush(stdout);
  if (!ok) {
    ++g_failures;
  }
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------- 1
// Closed-form derivatives vs central finite differences.

struct GradStats {
  double worst_x = 0.0;
  double worst_theta = 0.0;
  int cases = 0;
};

void fd_case(const LyapunovNetwork& net, std::mt19937_64& rng,
             GradStats& stats) {
  const int n = net.input_dim();
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd x(n), f(n);
  for (int i = 0; i < n; ++i) {
    x[i] = dist(rng);
    f[i] = dist(rng);
  }
  const double u = 0.7, v = 0.4;

  const Eigen::VectorXd gx = net.grad_x(x);
  for (int i = 0; i < n; ++i) {
    const double h = 1e-5;
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double fd = (net.forward(xp) - net.forward(xm)) / (2.0 * h);
    stats.worst_x = std::max(
        stats.worst_x, std::abs(gx[i] - fd) / std::max(1.0, std::abs(fd)));
  }

  const Eigen::VectorXd gt = net.grad_theta(x, u, v, f);
  auto objective = [&](const LyapunovNetwork& m) {
    return u * m.forward(x) + v * m.grad_x(x).dot(f);
  };
  auto pert = net.clone();
  for (int i = 0; i < net.param_count(); ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(net.params()[i]));
    const double saved = pert->params()[i];
    pert->params()[i] = saved + h;
    const double hi = objective(*pert);
    pert->params()[i] = saved - h;
    const double lo = objective(*pert);
    pert->params()[i] = saved;
    const double fd = (hi - lo) / (2.0 * h);
    stats.worst_theta = std::max(
        stats.worst_theta, std::abs(gt[i] - fd) / std::max(1.0, std::abs(fd)));
  }
  ++stats.cases;
}

void criterion_gradients() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> pick_n(1, 8);
  std::uniform_int_distribution<int> pick_m(1, 8);
  GradStats stats;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = pick_n(rng);
    const int m = pick_m(rng);
    const auto act =
        trial % 2 == 0 ? ActivationKind::Softplus : ActivationKind::Tanh;
    const std::uint64_t seed = rng();
    switch (trial % 3) {
      case 0: {
        DenseNet1 net(n, m, act, seed);
        fd_case(net, rng, stats);
        break;
      }
      case 1: {
        SublayerNet net(std::vector<int>(n, 1), m, act, seed);
        fd_case(net, rng, stats);
        break;
      }
      default: {
        const int d_max = 1 + static_cast<int>(rng() % 2);
        TransformNet net(std::max(n, d_max), d_max, m, act, seed);
        fd_case(net, rng, stats);
        break;
      }
    }
  }
  std::ostringstream detail;
  detail << "worst grad_x rel " << stats.worst_x << " (tol 1e-6), "
         << "worst grad_theta rel " << stats.worst_theta << " (tol 1e-5), "
         << stats.cases << " cases";
  report(1, "gradient suite", stats.worst_x <= 1e-6 && stats.worst_theta <= 1e-5,
         seconds_since(t0), detail.str());
}

// ---------------------------------------------------------------- 2
// Small-gain verdicts with an independently revalidated witness.

void criterion_small_gain() {
  const auto t0 = Clock::now();
  auto [sys, iss] = make_chain({3, 0.1, Topology::Chain});
  const auto pass_cert = check_small_gain(iss, GridSpec{});
  const bool pass_ok =
      pass_cert.verdict == SmallGainCertificate::Verdict::PassOnGrid &&
      pass_cert.min_margin > 0.0;

  std::vector<SubsystemISSData> strong(2);
  for (int i = 0; i < 2; ++i) {
    strong[i].index = i;
    strong[i].dim = 1;
    strong[i].value = [](const Eigen::VectorXd& z) {
      return 0.5 * z.squaredNorm();
    };
    strong[i].gradient = [](const Eigen::VectorXd& z) { return z; };
    strong[i].alpha = KinfFn::linear(1.0);
    strong[i].eta = PositiveDefiniteFn::sat_linear(1.0, 1.0);
    strong[i].gains.assign(2, std::nullopt);
    strong[i].gains[1 - i] = KinfFn::linear(2.0);
  }
  const auto fail_cert = check_small_gain(strong, GridSpec{});
  bool fail_ok = fail_cert.verdict == SmallGainCertificate::Verdict::Fail;
  if (fail_ok) {
    const GainOperators ops(strong);
    const Eigen::VectorXd r = fail_cert.witness;
    const Eigen::VectorXd eta = ops.eta_of(r);
    fail_ok = r.minCoeff() >= 0.0 && !r.isZero() &&
              eta.dot(ops.gamma_of(ops.a_of(r))) >= eta.dot(r);
  }

  std::ostringstream detail;
  detail << "chain margin " << pass_cert.min_margin << ", strong-gain verdict "
         << (fail_cert.verdict == SmallGainCertificate::Verdict::Fail
                 ? "fail + sound witness"
                 : "unexpected pass");
  report(2, "small-gain checker", pass_ok && fail_ok, seconds_since(t0),
         detail.str());
}

// ---------------------------------------------------------------- 3
// Quadrature composer against the closed-form chain oracle.

void criterion_composer() {
  const auto t0 = Clock::now();
  const double c = 0.1;
  auto [sys4, iss4] = make_chain({4, c, Topology::Chain});
  const auto v4 = compose_lyapunov(iss4);

  // Unsaturated closed form: Vhat(z) = (1 - c) (z^2/2)^2 on [-1, 1].
  double worst_quad = 0.0;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    Eigen::VectorXd z(1);
    z[0] = unit(rng);
    const double a = 0.5 * z[0] * z[0];
    const double closed = (1.0 - c) * a * a;
    worst_quad = std::max(worst_quad,
                          std::abs(v4.subsystem_value(0, z) - closed));
  }

  auto decrease_everywhere = [&rng, c](int n) {
    auto [sys, iss] = make_chain({n, c, Topology::Chain});
    const auto v = compose_lyapunov(iss);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    int bad = 0, checked = 0;
    while (checked < 10000) {
      Eigen::VectorXd x(n);
      for (int i = 0; i < n; ++i) {
        x[i] = unit(rng);
      }
      const double norm = x.lpNorm<Eigen::Infinity>();
      if (norm < 1e-3 || norm > 1.0) {
        continue;
      }
      ++checked;
      if (v.gradient(x).dot(sys.field(x)) >= 0.0) {
        ++bad;
      }
    }
    return bad;
  };
  const int bad4 = decrease_everywhere(4);
  const int bad8 = decrease_everywhere(8);

  std::ostringstream detail;
  detail << "worst |quadrature - closed form| " << worst_quad
         << " (tol 1e-8), decrease violations n=4: " << bad4
         << ", n=8: " << bad8 << " of 10000 each";
  report(3, "composer oracle", worst_quad <= 1e-8 && bad4 == 0 && bad8 == 0,
         seconds_since(t0), detail.str());
}

// ---------------------------------------------------------------- 4
// assign_transform reproduces the base-coordinate network exactly.

void criterion_transform() {
  const auto t0 = Clock::now();
  auto [base, iss] = make_chain({4, 0.1, Topology::Chain});
  const auto rotated = make_rotated(base, 99);
  const Eigen::MatrixXd& t = *rotated.transform;

  SublayerNet f1net(base.dims, 5, ActivationKind::Softplus, 17);
  TransformNet tnet(4, 1, 5, ActivationKind::Softplus, 18);
  for (int i = 0; i < f1net.sublayers(); ++i) {
    const int len = 5 * (1 + 2);
    tnet.params().segment(tnet.sub_param_offset(i), len) =
        f1net.params().segment(f1net.sub_param_offset(i), len);
  }
  tnet.params()[tnet.c_offset()] = f1net.params()[f1net.c_offset()];
  tnet.assign_transform(t, base.dims);

  double worst = 0.0;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    Eigen::VectorXd x(4);
    for (int i = 0; i < 4; ++i) {
      x[i] = unit(rng);
    }
    worst = std::max(worst,
                     std::abs(tnet.forward(x) - f1net.forward(t * x)));
  }
  std::ostringstream detail;
  detail << "max |TransformNet(x) - SublayerNet(Tx)| " << worst
         << " (tol 1e-12) at 1000 points";
  report(4, "transform representation", worst <= 1e-12, seconds_since(t0),
         detail.str());
}

// ---------------------------------------------------------------- 5
// Integral verifier on the solvable linear benchmark; RK4 order.

void criterion_integral_verifier() {
  const auto t0 = Clock::now();
  InterconnectedSystem sys;
  sys.n = 1;
  sys.dims = {1};
  sys.field = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); };

  const ScalarField w{
      [](const Eigen::VectorXd& x) { return 0.5 * x.squaredNorm(); },
      [](const Eigen::VectorXd& x) { return x; }};
  const MarginFn h = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
  const auto rep = verify_integral(w, sys, Box::centered(1, 1.0), 1000, 1.0,
                                   1e-3, h, 1e-6, 5);

  Eigen::VectorXd x0(1);
  x0 << 1.0;
  const double e1 = std::abs(
      integrate_rk4(sys, x0, 1.0, 0.1).final_state()[0] - std::exp(-1.0));
  const double e2 = std::abs(
      integrate_rk4(sys, x0, 1.0, 0.05).final_state()[0] - std::exp(-1.0));
  const double order = std::log2(e1 / e2);

  std::ostringstream detail;
  detail << rep.violations << " violations of 1000 (tol 1e-6), RK4 order "
         << order << " (need [3.8, 4.2])";
  report(5, "integral verifier", rep.violations == 0 && order >= 3.8 &&
                                     order <= 4.2,
         seconds_since(t0), detail.str());
}

// ---------------------------------------------------------------- 6
// Desk-scale residual training plus supervised expressivity fit.

void criterion_training() {
  const auto t0 = Clock::now();
  auto [sys, iss] = make_chain({2, 0.1, Topology::Chain});

  TrainingConfig cfg;
  cfg.steps = 5000;
  cfg.batch = 256;
  cfg.lr0 = 1e-2;
  cfg.lr_final = 1e-3;
  cfg.seed = 1;
  SublayerNet net(sys.dims, 20, ActivationKind::Softplus, 1);
  const auto train_rep = train(net, sys, cfg);

  // Fresh validation points, relative tolerance 1e-3 of each margin.
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double w0 = net.forward(Eigen::VectorXd::Zero(2));
  int dec_bad = 0, pos_bad = 0, checked = 0;
  while (checked < 10000) {
    Eigen::VectorXd x(2);
    x << unit(rng), unit(rng);
    if (x.lpNorm<Eigen::Infinity>() < cfg.exclusion_radius) {
      continue;
    }
    ++checked;
    const double q = x.squaredNorm();
    if (net.grad_x(x).dot(sys.field(x)) + cfg.kappa * q >
        1e-3 * cfg.kappa * q) {
      ++dec_bad;
    }
    if (net.forward(x) - w0 < cfg.kappa_pos * q * (1.0 - 1e-3)) {
      ++pos_bad;
    }
  }
  const double dec_rate = dec_bad / 10000.0;
  const double pos_rate = pos_bad / 10000.0;

  const auto reference =
      normalize_to_w1(compose_lyapunov(iss), Box::centered(2, 1.0), 4096, 0);
  SublayerNet fit_net(sys.dims, 20, ActivationKind::Tanh, 2);
  FitConfig fit_cfg;
  fit_cfg.seed = 2;
  const auto fit_rep = fit_to_reference(
      fit_net,
      [&reference](const Eigen::VectorXd& x) { return reference.value(x); },
      Box::centered(2, 1.0), fit_cfg);

  const bool ok = dec_rate <= 0.01 && pos_rate <= 0.01 &&
                  fit_rep.sup_error <= 0.05 && !train_rep.aborted;
  std::ostringstream detail;
  detail << "decrease rate " << dec_rate << ", positivity rate " << pos_rate
         << " (both need <= 0.01), fit sup " << fit_rep.sup_error
         << " (need <= 0.05)";
  report(6, "desk-scale training", ok, seconds_since(t0), detail.str());
  if (!ok) {
    std::printf("  final loss %.6g; last curve entries:\n",
                train_rep.final_loss);
    const std::size_t from =
        train_rep.curve.size() > 5 ? train_rep.curve.size() - 5 : 0;
    for (std::size_t i = from; i < train_rep.curve.size(); ++i) {
      std::printf("    total %.6g dec %.6g pos %.6g zero %.6g\n",
                  train_rep.curve[i][0], train_rep.curve[i][1],
                  train_rep.curve[i][2], train_rep.curve[i][3]);
    }
  }
}

// ---------------------------------------------------------------- 7
// Network size grows at most polynomially (slope <= 2.5) with n.

void criterion_scaling() {
  const auto t0 = Clock::now();
  ExperimentConfig cfg;  // n in {2,4,6,8}, eps 0.1, 3 seeds per cell
  const auto sweep = scaling_sweep(cfg);

  bool all_ok = sweep.excluded.empty();
  std::ostringstream cells;
  for (const auto& rec : sweep.records) {
    all_ok = all_ok && rec.verdict == "ok";
    cells << " n=" << rec.n << ":N=" << rec.total_neurons;
  }
  std::ostringstream detail;
  detail << "slope " << sweep.fit.slope << " (need <= 2.5), r^2 "
         << sweep.fit.r_squared << "," << cells.str();
  report(7, "scaling sweep", all_ok && sweep.fit.slope <= 2.5,
         seconds_since(t0), detail.str());
}

// ---------------------------------------------------------------- 8
// CSV outputs of the CLI are byte-identical across reruns.

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

bool rerun_identical(const std::string& cli, const std::string& sub,
                     const std::string& config_json,
                     const std::string& csv_name, std::string& note) {
  const fs::path root =
      fs::temp_directory_path() / ("lyapnet_acc_" + sub);
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path cfg = root / "config.json";
  std::ofstream(cfg) << config_json;

  for (const char* run : {"a", "b"}) {
    const std::string cmd = cli + " " + sub + " --config " + cfg.string() +
                            " --out " + (root / run).string() +
                            " --seed 3 > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) {
      note += sub + ": nonzero exit; ";
      return false;
    }
  }
  const std::string a = slurp(root / "a" / csv_name);
  const std::string b = slurp(root / "b" / csv_name);
  if (a.empty() || a != b) {
    note += sub + ": CSV mismatch; ";
    return false;
  }
  note += sub + " ok; ";
  return true;
}

void criterion_determinism() {
  const auto t0 = Clock::now();
  const std::string cli = LYAPNET_CLI_PATH;
  std::string note;
  bool ok = true;

  ok &= rerun_identical(
      cli, "compose-eval",
      R"({"system":{"family":"chain","n":2,"c":0.1,"topology":"chain"},
          "points":[[0.5,0.5],[1.0,-1.0],[0.1,0.2],[0.0,0.0]]})",
      "compose_eval.csv", note);

  ok &= rerun_identical(
      cli, "train",
      R"({"system":{"family":"chain","n":2,"c":0.1,"topology":"chain"},
          "net":{"arch":"sublayer","dims":[1,1],"width":4,
                 "activation":"softplus"},
          "train":{"steps":40,"batch":32}})",
      "loss_curve.csv", note);

  ok &= rerun_identical(
      cli, "scale",
      R"({"dimensions":[2,3,4],"eps":1000.0,"arch":"sublayer",
          "seeds_per_cell":1,"width_lo":1,"width_hi":2,"c":0.1,
          "fit":{"samples":128,"holdout":64,"steps":5,"batch":64}})",
      "scaling.csv", note);

  report(8, "CSV determinism", ok, seconds_since(t0), note);
}

}  // namespace

int main() {
  criterion_gradients();
  criterion_small_gain();
  criterion_composer();
  criterion_transform();
  criterion_integral_verifier();
  criterion_training();
  criterion_scaling();
  criterion_determinism();
  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all 8 criteria passed\n");
  return 0;
}
