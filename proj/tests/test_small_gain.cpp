#include <doctest.h>

#include <cmath>
#include <random>

#include "lyapnet/small_gain.hpp"
#include "lyapnet/systems.hpp"

using namespace lyapnet;

namespace {

// Two symmetric scalar subsystems with configurable cross gain.
std::vector<SubsystemISSData> two_subsystems(double alpha_slope,
                                             double gain_slope) {
  std::vector<SubsystemISSData> spec(2);
  for (int i = 0; i < 2; ++i) {
    spec[i].index = i;
    spec[i].dim = 1;
    spec[i].value = [](const Eigen::VectorXd& z) {
      return 0.5 * z.squaredNorm();
    };
    spec[i].gradient = [](const Eigen::VectorXd& z) { return z; };
    spec[i].alpha = KinfFn::linear(alpha_slope);
    spec[i].eta = PositiveDefiniteFn::sat_linear(1.0, 1.0);
    spec[i].gains.assign(2, std::nullopt);
    spec[i].gains[1 - i] = KinfFn::linear(gain_slope);
  }
  return spec;
}

}  // namespace

TEST_CASE("gain operator Gamma") {
  const auto spec = two_subsystems(1.0, 0.5);
  const GainOperators ops(spec);

  Eigen::VectorXd r(2);
  r << 0.0, 0.0;
  CHECK(ops.gamma_of(r).isZero());
  r << 2.0, 4.0;
  const Eigen::VectorXd g = ops.gamma_of(r);
  CHECK(g[0] == doctest::Approx(2.0));
  CHECK(g[1] == doctest::Approx(1.0));

  Eigen::VectorXd bad(3);
  bad.setZero();
  CHECK_THROWS_AS(ops.gamma_of(bad), std::invalid_argument);
}

TEST_CASE("gain operator on a 3-chain") {
  auto [sys, iss] = make_chain({3, 0.1, Topology::Chain});
  const GainOperators ops(iss);
  Eigen::VectorXd r = Eigen::VectorXd::Ones(3);
  const Eigen::VectorXd g = ops.gamma_of(r);
  CHECK(g[0] == doctest::Approx(0.1));
  CHECK(g[1] == doctest::Approx(0.2));
  CHECK(g[2] == doctest::Approx(0.1));
}

TEST_CASE("operators are componentwise monotone") {
  auto [sys, iss] = make_chain({3, 0.12, Topology::Ring});
  const GainOperators ops(iss);
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> dist(0.0, 10.0);
  for (int k = 0; k < 100; ++k) {
    Eigen::VectorXd a(3), b(3);
    for (int i = 0; i < 3; ++i) {
      a[i] = dist(rng);
      b[i] = a[i] + dist(rng);
    }
    CHECK((ops.gamma_of(a).array() <= ops.gamma_of(b).array() + 1e-15).all());
    CHECK((ops.a_of(a).array() <= ops.a_of(b).array() + 1e-15).all());
  }
}

TEST_CASE("small-gain checker verdicts") {
  GridSpec grid;

  SUBCASE("weakly coupled pair passes") {
    const auto cert = check_small_gain(two_subsystems(1.0, 0.5), grid);
    CHECK(cert.verdict == SmallGainCertificate::Verdict::PassOnGrid);
    CHECK(cert.min_margin > 0.0);
  }

  SUBCASE("strong gain fails with a sound witness") {
    const auto spec = two_subsystems(1.0, 2.0);
    const auto cert = check_small_gain(spec, grid);
    REQUIRE(cert.verdict == SmallGainCertificate::Verdict::Fail);
    // Re-evaluate the witness independently of the checker.
    const GainOperators ops(spec);
    const Eigen::VectorXd r = cert.witness;
    const Eigen::VectorXd eta = ops.eta_of(r);
    CHECK(eta.dot(ops.gamma_of(ops.a_of(r))) >= eta.dot(r));
  }

  SUBCASE("single subsystem always passes") {
    std::vector<SubsystemISSData> solo(1);
    solo[0].index = 0;
    solo[0].dim = 1;
    solo[0].value = [](const Eigen::VectorXd& z) {
      return 0.5 * z.squaredNorm();
    };
    solo[0].gradient = [](const Eigen::VectorXd& z) { return z; };
    solo[0].alpha = KinfFn::linear(1.0);
    solo[0].eta = PositiveDefiniteFn::sat_linear(1.0, 1.0);
    solo[0].gains.assign(1, std::nullopt);
    const auto cert = check_small_gain(solo, grid);
    CHECK(cert.verdict == SmallGainCertificate::Verdict::PassOnGrid);
  }

  SUBCASE("grid containing the origin is rejected") {
    GridSpec bad = grid;
    bad.r_min = 0.0;
    CHECK_THROWS_AS(check_small_gain(two_subsystems(1.0, 0.5), bad),
                    std::invalid_argument);
  }

  SUBCASE("ray grid for many subsystems") {
    auto [sys, iss] = make_chain({5, 0.1, Topology::Chain});
    GridSpec rays = grid;
    rays.rays = 100;
    const auto cert = check_small_gain(iss, rays);
    CHECK(cert.verdict == SmallGainCertificate::Verdict::PassOnGrid);
    CHECK(cert.points_checked > 0);
  }
}

TEST_CASE("certificate JSON carries verdict and margin") {
  const auto cert = check_small_gain(two_subsystems(1.0, 0.5), GridSpec{});
  const auto j = cert.to_json();
  CHECK(j["verdict"] == "pass_on_grid");
  CHECK(j["min_margin"].get<double>() > 0.0);
  CHECK(j["points_checked"].get<int>() > 100);
}

TEST_CASE("composed Lyapunov function values") {
  // V_i = z^2/2, alpha = 1.8 r, eta = min(r, 1):
  // within the unsaturated region Vhat(z) = 0.9 (z^2/2)^2.
  const auto spec = two_subsystems(1.8, 0.1);
  const auto v = compose_lyapunov(spec);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
  CHECK(v.value(x) == doctest::Approx(0.0));

  x << 0.8, 0.0;
  const double a = 0.5 * 0.8 * 0.8;
  CHECK(v.value(x) == doctest::Approx(0.9 * a * a).epsilon(1e-9));

  Eigen::VectorXd xs(2);
  xs << 0.6, 0.6;
  Eigen::VectorXd half(2);
  half << 0.6, 0.0;
  CHECK(v.value(xs) == doctest::Approx(2.0 * v.value(half)).epsilon(1e-9));
}

TEST_CASE("composed gradient matches finite differences") {
  auto [sys, iss] = make_chain({4, 0.1, Topology::Chain});
  const auto v = compose_lyapunov(iss);
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x(4);
    for (int i = 0; i < 4; ++i) {
      x[i] = dist(rng);
    }
    if (x.norm() < 0.1) {
      continue;
    }
    const Eigen::VectorXd g = v.gradient(x);
    for (int i = 0; i < 4; ++i) {
      // Closed form for the c = 0.1 chain in the unsaturated region:
      // dV/dz_i = min(1.8 z_i^2 / 2, 1) z_i = 0.9 z_i^3 on [-1, 1].
      const double exact = 0.9 * x[i] * x[i] * x[i];
      CHECK(std::abs(g[i] - exact) <= 1e-9);

      const double hstep = 1e-5;
      Eigen::VectorXd xp = x, xm = x;
      xp[i] += hstep;
      xm[i] -= hstep;
      const double fd = (v.value(xp) - v.value(xm)) / (2.0 * hstep);
      CHECK(std::abs(g[i] - fd) <= 1e-5);
    }
  }
}

TEST_CASE("decrease along the chain benchmark") {
  auto [sys, iss] = make_chain({6, 0.1, Topology::Chain});
  const auto v = compose_lyapunov(iss);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    Eigen::VectorXd x(6);
    for (int i = 0; i < 6; ++i) {
      x[i] = dist(rng);
    }
    const double norm = x.lpNorm<Eigen::Infinity>();
    if (norm < 1e-3 || norm > 1.0) {
      continue;
    }
    ++checked;
    CHECK(v.gradient(x).dot(sys.field(x)) < 0.0);
  }
  CHECK(checked > 1000);
}

TEST_CASE("normalization to the unit-gradient class") {
  const Box box = Box::centered(1, 1.0);

  SUBCASE("identity-slope function keeps mu = 1") {
    std::vector<SubsystemISSData> spec(1);
    spec[0].index = 0;
    spec[0].dim = 1;
    // Vhat ends up with derivative lambda(V) * V' = 1 * z only if we
    // pick alpha/eta to keep lambda = 1; use V = z directly instead.
    spec[0].value = [](const Eigen::VectorXd& z) { return std::abs(z[0]); };
    spec[0].gradient = [](const Eigen::VectorXd& z) {
      Eigen::VectorXd g(1);
      g[0] = z[0] >= 0.0 ? 1.0 : -1.0;
      return g;
    };
    spec[0].alpha = KinfFn::linear(1e6);  // saturates eta immediately
    spec[0].eta = PositiveDefiniteFn::sat_linear(1.0, 1.0);
    spec[0].gains.assign(1, std::nullopt);
    const auto v = compose_lyapunov(spec);
    const auto normalized = normalize_to_w1(v, box, 4096, 0);
    CHECK(normalized.mu() == doctest::Approx(1.0).epsilon(1e-6));
  }

  SUBCASE("quadratic 2 z^2 gets mu = 0.25") {
    std::vector<SubsystemISSData> spec(1);
    spec[0].index = 0;
    spec[0].dim = 1;
    spec[0].value = [](const Eigen::VectorXd& z) { return 2.0 * z[0] * z[0]; };
    spec[0].gradient = [](const Eigen::VectorXd& z) {
      Eigen::VectorXd g(1);
      g[0] = 4.0 * z[0];
      return g;
    };
    spec[0].alpha = KinfFn::linear(1e6);
    spec[0].eta = PositiveDefiniteFn::sat_linear(1.0, 1.0);
    spec[0].gains.assign(1, std::nullopt);
    const auto v = compose_lyapunov(spec);
    const auto normalized = normalize_to_w1(v, box, 4096, 0);
    CHECK(normalized.mu() == doctest::Approx(0.25).epsilon(1e-6));
  }

  SUBCASE("idempotent within sampling noise") {
    auto [sys, iss] = make_chain({2, 0.1, Topology::Chain});
    const Box box2 = Box::centered(2, 1.0);
    const auto once = normalize_to_w1(compose_lyapunov(iss), box2, 4096, 0);
    const auto twice = normalize_to_w1(once, box2, 4096, 1);
    CHECK(std::abs(twice.mu() / once.mu() - 1.0) <= 0.01);
  }
}
