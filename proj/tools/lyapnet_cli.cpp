#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lyapnet/experiments.hpp"
#include "lyapnet/network.hpp"
#include "lyapnet/small_gain.hpp"
#include "lyapnet/systems.hpp"
#include "lyapnet/training.hpp"
#include "lyapnet/verification.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitGateFailed = 2;
constexpr int kExitUsage = 64;

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config: " + path);
  }
  json j;
  in >> j;
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? "." :
                         path.parent_path());
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << text;
}

void write_json(const fs::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

struct SystemBundle {
  lyapnet::InterconnectedSystem sys;
  std::vector<lyapnet::SubsystemISSData> iss;  // of the F1 base
};

SystemBundle build_system(const json& j) {
  const std::string family = j.at("family").get<std::string>();
  if (family == "chain") {
    auto [sys, iss] = lyapnet::make_chain(
        lyapnet::ChainSystemConfig::from_json(j));
    return {std::move(sys), std::move(iss)};
  }
  if (family == "planar_chain") {
    auto [sys, iss] = lyapnet::make_planar_chain(
        j.at("nodes").get<int>(), j.at("c").get<double>(),
        j.value("omega", 1.0));
    return {std::move(sys), std::move(iss)};
  }
  if (family == "rotated") {
    SystemBundle base = build_system(j.at("base"));
    auto rotated =
        lyapnet::make_rotated(base.sys, j.at("seed").get<std::uint64_t>());
    return {std::move(rotated), std::move(base.iss)};
  }
  throw std::invalid_argument("unknown system family: " + family);
}

lyapnet::ComposedLyapunov build_reference(const SystemBundle& bundle,
                                          const json& cfg,
                                          std::uint64_t seed) {
  const double c = cfg.value("box_half_width", 1.0);
  const int samples = cfg.value("normalize_samples", 4096);
  return lyapnet::normalize_to_w1(
      lyapnet::compose_lyapunov(bundle.iss),
      lyapnet::Box::centered(bundle.sys.n, c), samples, seed);
}

struct CommonOpts {
  std::string config;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::optional<double> fail_on_violation_rate;
};

int cmd_smallgain_check(const CommonOpts& opts) {
  const json cfg = load_config(opts.config);
  SystemBundle bundle = build_system(cfg.at("system"));
  lyapnet::GridSpec grid;
  if (cfg.contains("grid")) {
    grid = lyapnet::GridSpec::from_json(cfg.at("grid"));
  }
  if (opts.seed) {
    grid.seed = *opts.seed;
  }
  const auto cert = lyapnet::check_small_gain(bundle.iss, grid);
  json out = cert.to_json();
  out["config"] = cfg;
  write_json(fs::path(opts.out_dir) / "certificate.json", out);
  std::cout << out["verdict"].get<std::string>() << " min_margin="
            << cert.min_margin << "\n";
  return cert.verdict == lyapnet::SmallGainCertificate::Verdict::PassOnGrid
             ? kExitOk
             : kExitGateFailed;
}

int cmd_compose_eval(const CommonOpts& opts) {
  const json cfg = load_config(opts.config);
  SystemBundle bundle = build_system(cfg.at("system"));
  const std::uint64_t seed = opts.seed.value_or(cfg.value("seed", 0));
  const auto reference = build_reference(bundle, cfg, seed);

  std::ostringstream csv;
  csv.precision(17);
  csv << "idx,V";
  for (int k = 1; k <= bundle.sys.n; ++k) {
    csv << ",dV" << k;
  }
  csv << "\n";
  int idx = 0;
  for (const auto& pt : cfg.at("points")) {
    Eigen::VectorXd x(bundle.sys.n);
    for (int k = 0; k < bundle.sys.n; ++k) {
      x[k] = pt.at(k).get<double>();
    }
    const Eigen::VectorXd g = reference.gradient(x);
    csv << idx++ << "," << reference.value(x);
    for (int k = 0; k < bundle.sys.n; ++k) {
      csv << "," << g[k];
    }
    csv << "\n";
  }
  write_text(fs::path(opts.out_dir) / "compose_eval.csv", csv.str());
  write_json(fs::path(opts.out_dir) / "compose_eval.json",
             {{"config", cfg}, {"mu", reference.mu()}});
  std::cout << "mu=" << reference.mu() << " points=" << idx << "\n";
  return kExitOk;
}

int cmd_train(const CommonOpts& opts) {
  const json cfg = load_config(opts.config);
  SystemBundle bundle = build_system(cfg.at("system"));
  auto train_cfg = lyapnet::TrainingConfig::from_json(cfg.value("train",
                                                                json::object()));
  if (opts.seed) {
    train_cfg.seed = *opts.seed;
  }
  auto net = lyapnet::make_network(cfg.at("net"), train_cfg.seed);
  const auto report = lyapnet::train(*net, bundle.sys, train_cfg);

  const fs::path out(opts.out_dir);
  write_text(out / "loss_curve.csv", report.curve_csv());
  lyapnet::save_checkpoint(*net, (out / "checkpoint.bin").string());
  write_json(out / "train_report.json",
             {{"config", cfg},
              {"final_loss", report.final_loss},
              {"steps", report.curve.size()},
              {"aborted", report.aborted},
              {"abort_reason", report.abort_reason},
              {"wall_seconds", report.wall_seconds}});
  std::cout << "final_loss=" << report.final_loss
            << (report.aborted ? " (aborted)" : "") << "\n";
  return report.aborted ? kExitError : kExitOk;
}

int cmd_fit(const CommonOpts& opts) {
  const json cfg = load_config(opts.config);
  SystemBundle bundle = build_system(cfg.at("system"));
  auto fit_cfg = lyapnet::FitConfig::from_json(cfg.value("fit",
                                                         json::object()));
  if (opts.seed) {
    fit_cfg.seed = *opts.seed;
  }
  const auto reference = build_reference(bundle, cfg, fit_cfg.seed);
  auto net = lyapnet::make_network(cfg.at("net"), fit_cfg.seed);
  const auto report = lyapnet::fit_to_reference(
      *net,
      [&reference](const Eigen::VectorXd& x) { return reference.value(x); },
      lyapnet::Box::centered(bundle.sys.n, cfg.value("box_half_width", 1.0)),
      fit_cfg);

  const fs::path out(opts.out_dir);
  lyapnet::save_checkpoint(*net, (out / "checkpoint.bin").string());
  write_json(out / "fit_report.json",
             {{"config", cfg},
              {"sup_error", report.sup_error},
              {"rms_error", report.rms_error},
              {"final_train_mse", report.final_train_mse},
              {"aborted", report.aborted},
              {"wall_seconds", report.wall_seconds}});
  std::cout << "sup_error=" << report.sup_error << " rms=" << report.rms_error
            << "\n";
  return report.aborted ? kExitError : kExitOk;
}

int cmd_verify(const CommonOpts& opts) {
  const json cfg = load_config(opts.config);
  SystemBundle bundle = build_system(cfg.at("system"));
  const std::uint64_t seed = opts.seed.value_or(cfg.value("seed", 0));
  const double c = cfg.value("box_half_width", 1.0);
  const lyapnet::Box box = lyapnet::Box::centered(bundle.sys.n, c);

  lyapnet::ScalarField w;
  std::unique_ptr<lyapnet::LyapunovNetwork> net;
  const std::string candidate = cfg.value("candidate", "analytic");
  if (candidate == "analytic") {
    w = lyapnet::as_scalar_field(build_reference(bundle, cfg, seed));
  } else {
    net = lyapnet::load_checkpoint(candidate);
    w = lyapnet::as_scalar_field(*net);
  }

  const double kappa = cfg.value("kappa", 0.05);
  const auto h = [kappa](const Eigen::VectorXd& x) {
    return kappa * x.squaredNorm();
  };
  const int samples = cfg.value("samples", 10000);
  const double tol = cfg.value("tol", 0.0);

  lyapnet::VerificationReport report;
  const std::string mode = cfg.value("mode", "pointwise");
  if (mode == "pointwise") {
    report = lyapnet::verify_pointwise(w, bundle.sys, box, samples, h, tol,
                                       cfg.value("r0", 1e-3), seed);
  } else if (mode == "integral") {
    report = lyapnet::verify_integral(w, bundle.sys, box, samples,
                                      cfg.value("horizon", 1.0),
                                      cfg.value("step", 1e-3), h, tol, seed);
  } else {
    throw std::invalid_argument("unknown verification mode: " + mode);
  }

  json out = report.to_json();
  out["config"] = cfg;
  write_json(fs::path(opts.out_dir) / "verify_report.json", out);
  std::cout << "violation_rate=" << report.violation_rate << "\n";
  if (opts.fail_on_violation_rate &&
      report.violation_rate > *opts.fail_on_violation_rate) {
    return kExitGateFailed;
  }
  return kExitOk;
}

int cmd_scale(const CommonOpts& opts) {
  const json cfg = load_config(opts.config);
  auto exp_cfg = lyapnet::ExperimentConfig::from_json(cfg);
  if (opts.seed) {
    exp_cfg.seed = *opts.seed;
  }
  const auto result = lyapnet::scaling_sweep(exp_cfg);
  const fs::path out(opts.out_dir);
  // The CSV is the reproducible record: timings go to scaling.json only.
  write_text(out / "scaling.csv", result.csv(/*mask_wall_ms=*/true));
  json j = result.to_json();
  j["config"] = exp_cfg.to_json();
  write_json(out / "scaling.json", j);
  std::cout << "slope=" << result.fit.slope << " r2=" << result.fit.r_squared
            << "\n";
  for (int n : result.excluded) {
    std::cout << "warning: no width reached eps at n=" << n << "\n";
  }
  return kExitOk;
}

int cmd_transform_test(const CommonOpts& opts) {
  const json cfg = load_config(opts.config);
  auto tr_cfg = lyapnet::TransformRecoveryConfig::from_json(cfg);
  if (opts.seed) {
    tr_cfg.seed = *opts.seed;
  }
  const auto report = lyapnet::transform_recovery(tr_cfg);
  json j = report.to_json();
  j["config"] = tr_cfg.to_json();
  write_json(fs::path(opts.out_dir) / "transform_report.json", j);
  std::cout << "representation_gap=" << report.representation_gap
            << " trained_sup_error=" << report.trained_sup_error << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compositional neural Lyapunov toolbox"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string command;
  const auto add_common = [&](CLI::App* sub, bool needs_config = true) {
    if (needs_config) {
      sub->add_option("--config", opts.config, "JSON config path")
          ->required();
    }
    sub->add_option("--out", opts.out_dir, "output directory");
    sub->add_option("--seed", opts.seed, "override config seed");
    sub->add_option("--threads", opts.threads, "worker threads");
  };

  add_common(app.add_subcommand("smallgain-check",
                                "grid check of the small-gain inequality"));
  add_common(app.add_subcommand("compose-eval",
                                "evaluate the composed Lyapunov function"));
  add_common(app.add_subcommand("train", "collocation training"));
  add_common(app.add_subcommand("fit", "supervised fit to the analytic V"));
  auto* verify = app.add_subcommand("verify", "decrease verification");
  add_common(verify);
  verify->add_option("--fail-on-violation-rate", opts.fail_on_violation_rate,
                     "exit 2 if the violation rate exceeds this");
  add_common(app.add_subcommand("scale", "N-vs-n scaling sweep"));
  add_common(app.add_subcommand("transform-test",
                                "transform representation and recovery"));

  if (argc <= 1) {
    std::cerr << app.help();
    return kExitUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    if (app.got_subcommand("smallgain-check")) {
      return cmd_smallgain_check(opts);
    }
    if (app.got_subcommand("compose-eval")) {
      return cmd_compose_eval(opts);
    }
    if (app.got_subcommand("train")) {
      return cmd_train(opts);
    }
    if (app.got_subcommand("fit")) {
      return cmd_fit(opts);
    }
    if (app.got_subcommand("verify")) {
      return cmd_verify(opts);
    }
    if (app.got_subcommand("scale")) {
      return cmd_scale(opts);
    }
    if (app.got_subcommand("transform-test")) {
      return cmd_transform_test(opts);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitUsage;
}
