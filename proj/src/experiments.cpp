#include "lyapnet/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>

#include "lyapnet/sampling.hpp"

namespace lyapnet {

namespace {

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

std::string ScalingRecord::csv_header() {
  return "n,d_max,arch,eps,M,N,sup_err,seed,wall_ms,verdict";
}

std::string ScalingRecord::csv_row(bool mask_wall_ms) const {
  std::ostringstream out;
  out << n << "," << d_max << "," << arch << "," << fmt(eps) << ","
      << minimal_width << "," << total_neurons << ","
      << fmt(achieved_sup_error) << "," << best_seed << ","
      << (mask_wall_ms ? std::string("0") : fmt(wall_ms)) << "," << verdict;
  return out.str();
}

nlohmann::json ScalingRecord::to_json() const {
  return {{"n", n},
          {"d_max", d_max},
          {"arch", arch},
          {"eps", eps},
          {"M", minimal_width},
          {"N", total_neurons},
          {"sup_err", achieved_sup_error},
          {"seeds", seeds},
          {"seed", best_seed},
          {"wall_ms", wall_ms},
          {"verdict", verdict}};
}

nlohmann::json ExperimentConfig::to_json() const {
  return {{"dimensions", dimensions},
          {"eps", eps},
          {"arch", arch},
          {"seeds_per_cell", seeds_per_cell},
          {"width_lo", width_lo},
          {"width_hi", width_hi},
          {"c", coupling},
          {"fit", fit.to_json()},
          {"seed", seed}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.dimensions = j.value("dimensions", c.dimensions);
  c.eps = j.value("eps", c.eps);
  c.arch = j.value("arch", c.arch);
  c.seeds_per_cell = j.value("seeds_per_cell", c.seeds_per_cell);
  c.width_lo = j.value("width_lo", c.width_lo);
  c.width_hi = j.value("width_hi", c.width_hi);
  c.coupling = j.value("c", c.coupling);
  if (j.contains("fit")) {
    c.fit = FitConfig::from_json(j.at("fit"));
  }
  c.seed = j.value("seed", c.seed);
  if (c.dimensions.empty() || !(c.eps > 0.0)) {
    throw std::invalid_argument("experiment needs dimensions and eps > 0");
  }
  if (c.arch != "dense1" && c.arch != "sublayer" && c.arch != "transform") {
    throw std::invalid_argument("unknown architecture: " + c.arch);
  }
  return c;
}

namespace {

std::unique_ptr<LyapunovNetwork> build_net(const std::string& arch,
                                           const InterconnectedSystem& sys,
                                           int width, std::uint64_t seed) {
  if (arch == "sublayer") {
    return std::make_unique<SublayerNet>(sys.dims, width,
                                         ActivationKind::Tanh, seed);
  }
  if (arch == "transform") {
    return std::make_unique<TransformNet>(sys.n, sys.d_max, width,
                                          ActivationKind::Tanh, seed);
  }
  if (arch == "dense1") {
    return std::make_unique<DenseNet1>(sys.n, width,
                                       ActivationKind::Tanh, seed);
  }
  throw std::invalid_argument("unknown architecture: " + arch);
}

}  // namespace

ScalingRecord minimal_width(const InterconnectedSystem& sys,
                            const ComposedLyapunov& reference,
                            const ExperimentConfig& cfg, int n) {
  if (cfg.width_lo < 1 || cfg.width_hi < cfg.width_lo) {
    throw std::invalid_argument("invalid width search bounds");
  }
  const auto start = std::chrono::steady_clock::now();
  const Box box = Box::centered(sys.n, 1.0);
  const auto ref_fn = [&reference](const Eigen::VectorXd& x) {
    return reference.value(x);
  };

  ScalingRecord rec;
  rec.n = n;
  rec.d_max = sys.d_max;
  rec.arch = cfg.arch;
  rec.eps = cfg.eps;
  for (int j = 0; j < cfg.seeds_per_cell; ++j) {
    rec.seeds.push_back(cfg.seed + static_cast<std::uint64_t>(j));
  }

  struct Trial {
    double sup;
    std::uint64_t seed;
  };
  std::map<int, Trial> cache;
  const auto best_at = [&](int width) -> Trial {
    const auto found = cache.find(width);
    if (found != cache.end()) {
      return found->second;
    }
    Trial best{std::numeric_limits<double>::infinity(), 0};
    for (std::uint64_t seed : rec.seeds) {
      auto net = build_net(cfg.arch, sys, width, seed);
      FitConfig fit = cfg.fit;
      fit.seed = seed;
      const FitReport rep = fit_to_reference(*net, ref_fn, box, fit);
      if (rep.sup_error < best.sup) {
        best = {rep.sup_error, seed};
      }
    }
    cache[width] = best;
    return best;
  };

  const Trial at_hi = best_at(cfg.width_hi);
  if (at_hi.sup <= cfg.eps) {
    int lo = cfg.width_lo;
    int hi = cfg.width_hi;
    while (lo < hi) {
      const int mid = lo + (hi - lo) / 2;
      if (best_at(mid).sup <= cfg.eps) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    const Trial winner = best_at(lo);
    rec.minimal_width = lo;
    rec.achieved_sup_error = winner.sup;
    rec.best_seed = winner.seed;
    rec.verdict = "ok";
    rec.total_neurons =
        build_net(cfg.arch, sys, lo, winner.seed)->neuron_count().first;
  } else {
    rec.minimal_width = cfg.width_hi;
    rec.achieved_sup_error = at_hi.sup;
    rec.best_seed = at_hi.seed;
    rec.verdict = "not_found";
    rec.total_neurons =
        build_net(cfg.arch, sys, cfg.width_hi, at_hi.seed)
            ->neuron_count()
            .first;
  }
  rec.wall_ms =
      std::chrono::duration<double, std::milli>(
          std::chrono::steady_clock::now() - start)
          .count();
  return rec;
}

PowerLawFit fit_power_law(const std::vector<double>& x,
                          const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("power-law fit needs >= 2 points");
  }
  const int m = static_cast<int>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::vector<double> lx(m), ly(m);
  for (int i = 0; i < m; ++i) {
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  PowerLawFit fit;
  const double denom = m * sxx - sx * sx;
  fit.slope = (m * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / m;
  double ss_res = 0.0, ss_tot = 0.0;
  const double mean_y = sy / m;
  for (int i = 0; i < m; ++i) {
    const double pred = fit.slope * lx[i] + fit.intercept;
    ss_res += (ly[i] - pred) * (ly[i] - pred);
    ss_tot += (ly[i] - mean_y) * (ly[i] - mean_y);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

nlohmann::json PowerLawFit::to_json() const {
  return {{"slope", slope}, {"intercept", intercept}, {"r2", r_squared}};
}

std::string SweepResult::csv(bool mask_wall_ms) const {
  std::ostringstream out;
  out << ScalingRecord::csv_header() << "\n";
  for (const auto& rec : records) {
    out << rec.csv_row(mask_wall_ms) << "\n";
  }
  return out.str();
}

nlohmann::json SweepResult::to_json() const {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& rec : records) {
    recs.push_back(rec.to_json());
  }
  return {{"records", recs}, {"fit", fit.to_json()}, {"excluded", excluded}};
}

SweepResult scaling_sweep(const ExperimentConfig& cfg) {
  if (cfg.dimensions.size() < 3) {
    throw std::invalid_argument("sweep needs at least 3 dimensions");
  }
  SweepResult result;
  std::vector<double> xs, ys;
  for (int n : cfg.dimensions) {
    ChainSystemConfig chain;
    chain.n = n;
    chain.coupling = cfg.coupling;
    auto [sys, iss] = make_chain(chain);
    const ComposedLyapunov reference = normalize_to_w1(
        compose_lyapunov(iss), Box::centered(n, 1.0), 4096, cfg.seed);
    ScalingRecord rec = minimal_width(sys, reference, cfg, n);
    if (rec.verdict == "ok") {
      xs.push_back(static_cast<double>(n));
      ys.push_back(static_cast<double>(rec.total_neurons));
    } else {
      result.excluded.push_back(n);
    }
    result.records.push_back(std::move(rec));
  }
  if (xs.size() >= 2) {
    result.fit = fit_power_law(xs, ys);
  }
  return result;
}

std::vector<double> principal_angles(const Eigen::MatrixXd& a,
                                     const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("subspace ambient dimensions differ");
  }
  const auto orth = [](const Eigen::MatrixXd& m) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    Eigen::MatrixXd q = qr.householderQ();
    return Eigen::MatrixXd(q.leftCols(std::min(m.rows(), m.cols())));
  };
  const Eigen::MatrixXd qa = orth(a);
  const Eigen::MatrixXd qb = orth(b);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(qa.transpose() * qb);
  std::vector<double> angles;
  for (int i = 0; i < svd.singularValues().size(); ++i) {
    const double s = std::clamp(svd.singularValues()[i], -1.0, 1.0);
    angles.push_back(std::acos(s));
  }
  return angles;
}

nlohmann::json TransformRecoveryReport::to_json() const {
  return {{"representation_gap", representation_gap},
          {"assigned_sup_error", assigned_sup_error},
          {"f1_sup_error", f1_sup_error},
          {"trained_sup_error", trained_sup_error},
          {"principal_angles", principal_angles}};
}

nlohmann::json TransformRecoveryConfig::to_json() const {
  return {{"n", n},
          {"c", coupling},
          {"width", width},
          {"fit", fit.to_json()},
          {"seed", seed},
          {"check_points", check_points}};
}

TransformRecoveryConfig TransformRecoveryConfig::from_json(
    const nlohmann::json& j) {
  TransformRecoveryConfig c;
  c.n = j.value("n", c.n);
  c.coupling = j.value("c", c.coupling);
  c.width = j.value("width", c.width);
  if (j.contains("fit")) {
    c.fit = FitConfig::from_json(j.at("fit"));
  }
  c.seed = j.value("seed", c.seed);
  c.check_points = j.value("check_points", c.check_points);
  return c;
}

TransformRecoveryReport transform_recovery(
    const TransformRecoveryConfig& cfg) {
  ChainSystemConfig chain;
  chain.n = cfg.n;
  chain.coupling = cfg.coupling;
  auto [base, iss] = make_chain(chain);
  const InterconnectedSystem rotated = make_rotated(base, cfg.seed);
  const Eigen::MatrixXd t = *rotated.transform;
  const Box box = Box::centered(cfg.n, 1.0);

  const ComposedLyapunov reference =
      normalize_to_w1(compose_lyapunov(iss), box, 4096, cfg.seed);

  // Fit the F1 sublayer network to the base reference.
  SublayerNet f1_net(base.dims, cfg.width, ActivationKind::Tanh,
                     cfg.seed);
  FitConfig fit = cfg.fit;
  fit.seed = cfg.seed;
  fit_to_reference(
      f1_net,
      [&reference](const Eigen::VectorXd& x) { return reference.value(x); },
      box, fit);

  // Transfer the fitted upper layer into a TransformNet and wire the
  // transform layer to T, so the whole net realizes W1(T x).
  TransformNet assigned(cfg.n, base.d_max, cfg.width,
                        ActivationKind::Tanh, cfg.seed);
  assigned.assign_transform(t, base.dims);
  for (int i = 0; i < cfg.n; ++i) {
    const int per_sub = cfg.width * (base.dims[i] + 2);
    assigned.params().segment(assigned.sub_param_offset(i), per_sub) =
        f1_net.params().segment(f1_net.sub_param_offset(i), per_sub);
  }
  assigned.params()[assigned.c_offset()] =
      f1_net.params()[f1_net.c_offset()];

  TransformRecoveryReport report;

  // Representation gap and the paired sup errors on shared points.
  std::mt19937_64 rng(cfg.seed + 17);
  double gap = 0.0, sup_assigned = 0.0, sup_f1 = 0.0;
  for (int k = 0; k < cfg.check_points; ++k) {
    const Eigen::VectorXd x = uniform_in_box(box, rng);
    const Eigen::VectorXd xt = t * x;
    const double wa = assigned.forward(x);
    const double wf = f1_net.forward(xt);
    gap = std::max(gap, std::abs(wa - wf));
    const double ref = reference.value(xt);
    sup_assigned = std::max(sup_assigned, std::abs(wa - ref));
    sup_f1 = std::max(sup_f1, std::abs(wf - ref));
  }
  report.representation_gap = gap;
  report.assigned_sup_error = sup_assigned;
  report.f1_sup_error = sup_f1;

  // Training from scratch on the rotated system.
  TransformNet trained(cfg.n, base.d_max, cfg.width,
                       ActivationKind::Tanh, cfg.seed + 1);
  FitConfig fit2 = cfg.fit;
  fit2.seed = cfg.seed + 1;
  const FitReport trained_rep = fit_to_reference(
      trained,
      [&reference, &t](const Eigen::VectorXd& x) {
        return reference.value(t * x);
      },
      box, fit2);
  report.trained_sup_error = trained_rep.sup_error;

  // Per-sublayer alignment of learned transform rows with rows of T.
  const Eigen::MatrixXd learned = trained.transform_weights();
  int p = 0;
  for (std::size_t i = 0; i < base.dims.size(); ++i) {
    const int d = base.dims[i];
    const Eigen::MatrixXd block =
        learned.middleRows(static_cast<int>(i) * base.d_max, d).transpose();
    const Eigen::MatrixXd target = t.middleRows(p, d).transpose();
    for (double angle : principal_angles(block, target)) {
      report.principal_angles.push_back(angle);
    }
    p += d;
  }
  return report;
}

}  // namespace lyapnet
