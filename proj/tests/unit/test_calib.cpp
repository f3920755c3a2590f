#include <doctest.h>

#include <random>

#include "spinflow/calib.hpp"

using namespace spinflow;
using namespace spinflow::calib;

namespace {

struct Scan {
  std::vector<double> t, p;
};

Scan rabi_scan(const RabiFit& truth, double t0, double t_end, int n, double noise = 0.0, std::uint64_t seed = 0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, noise > 0.0 ? noise : 1.0);
  Scan s;
  for (int i = 0; i < n; ++i) {
    const double t = t0 + (t_end - t0) * i / (n - 1);
    s.t.push_back(t);
    s.p.push_back(rabi_probability(t, truth) + (noise > 0.0 ? g(rng) : 0.0));
  }
  return s;
}

RabiFit truth(double omega, double t1) {
  RabiFit f;
  f.omega_mhz = omega;
  f.t1_ns = t1;
  return f;
}

std::vector<double> phases(int n) {
  std::vector<double> p;
  for (int i = 0; i < n; ++i) p.push_back(2.0 * std::numbers::pi * i / n);
  return p;
}

} // namespace

TEST_SUITE("calib") {

TEST_CASE("Rabi probability closed forms") {
  const auto ideal = truth(10.0, 1e15);
  CHECK(rabi_probability(0.0, ideal) == doctest::Approx(0.0));
  CHECK(rabi_probability(50.0, ideal) == doctest::Approx(1.0));
  const auto damped = truth(10.0, 1000.0);
  CHECK(rabi_probability(1000.0, damped) == doctest::Approx((1.0 - std::exp(-1.0)) / 2.0));
}

TEST_CASE("Rabi fit") {
  SUBCASE("noiseless round trip") {
    const auto s = rabi_scan(truth(10.0, 30000.0), 0.0, 1000.0, 201);
    const auto fit = fit_rabi(s.t, s.p);
    CHECK(fit.omega_mhz == doctest::Approx(10.0).epsilon(1e-3));
    CHECK(fit.t1_ns == doctest::Approx(30000.0).epsilon(1e-3));
    CHECK(fit.amplitude == doctest::Approx(-0.5).epsilon(1e-6));
    CHECK(fit.offset == doctest::Approx(0.5).epsilon(1e-6));
  }
  SUBCASE("1% noise over 100 trials") {
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
      const auto s = rabi_scan(truth(10.0, 30000.0), 0.0, 1000.0, 201, 0.01, trial);
      CHECK(fit_rabi(s.t, s.p).omega_mhz == doctest::Approx(10.0).epsilon(0.01));
    }
  }
  SUBCASE("whole-period time offset and amplitude miscalibration") {
    const auto base = rabi_scan(truth(7.0, 20000.0), 0.0, 1200.0, 241);
    auto shifted = rabi_scan(truth(7.0, 20000.0), 0.0, 1200.0, 241);
    const double offset = 1000.0 / 7.0 * 5.0;
    for (std::size_t i = 0; i < shifted.t.size(); ++i)
      shifted.p[i] = rabi_probability(shifted.t[i] + offset, truth(7.0, 20000.0));
    CHECK(fit_rabi(shifted.t, shifted.p).omega_mhz == doctest::Approx(fit_rabi(base.t, base.p).omega_mhz).epsilon(1e-3));

    auto mis = truth(7.0, 20000.0);
    mis.amplitude = -0.475;
    const auto s = rabi_scan(mis, 0.0, 1200.0, 241);
    CHECK(fit_rabi(s.t, s.p).omega_mhz == doctest::Approx(7.0).epsilon(1e-3));
  }
  SUBCASE("degenerate inputs") {
    std::vector<double> t(50), p(50, 0.5);
    for (int i = 0; i < 50; ++i) t[i] = i * 10.0;
    CHECK_THROWS_AS(fit_rabi(t, p), FitError);
    const auto few = rabi_scan(truth(10.0, 30000.0), 0.0, 100.0, 8);
    CHECK_THROWS_AS(fit_rabi(few.t, few.p), FitError);
    const auto short_scan = rabi_scan(truth(10.0, 30000.0), 0.0, 150.0, 60);
    CHECK_THROWS_AS(fit_rabi(short_scan.t, short_scan.p), FitError);
  }
}

TEST_CASE("effective Rabi frequency") {
  CHECK(effective_rabi(0.0, 4.0, 0.0, 0.3, 1.0) == doctest::Approx(4.0));
  CHECK(effective_rabi(3.0, 4.0, 0.0, 0.0, 0.0) == doctest::Approx(5.0));
  CHECK(effective_rabi(2.0, 6.0, 0.0, 0.0, 0.0) == doctest::Approx(std::sqrt(40.0)));
  CHECK(effective_rabi(0.0, 5.0, 5.0, std::numbers::pi, 0.0) == doctest::Approx(0.0).epsilon(1e-7));
  for (double d : {-2.0, -0.4, 0.3, 1.7}) {
    CHECK(effective_rabi(1.0, 5.0, 0.4, d, 0.0) == doctest::Approx(effective_rabi(1.0, 5.0, 0.4, -d, 0.0)));
    CHECK(effective_rabi(1.0, 5.0, 0.4, d + 2.0 * std::numbers::pi, 0.0) ==
          doctest::Approx(effective_rabi(1.0, 5.0, 0.4, d, 0.0)));
  }
}

TEST_CASE("crosstalk extraction") {
  const double delta = 0.0, omega_i = 10.0, omega_j = 10.0;
  const auto phi = phases(24);
  SUBCASE("synthetic round trip") {
    std::vector<double> scan;
    for (double p : phi) scan.push_back(effective_rabi(delta, omega_i, 0.05 * omega_j, 0.7, p));
    const auto est = extract_crosstalk(phi, scan, delta, omega_i, omega_j);
    CHECK(est.identifiable);
    CHECK(est.c_ij == doctest::Approx(0.05).epsilon(0.02));
    CHECK(std::abs(est.phi_ij - 0.7) < 0.02);
  }
  SUBCASE("capacitive-floor magnitude with detuning") {
    std::vector<double> scan;
    for (double p : phi) scan.push_back(effective_rabi(1.5, omega_i, 0.003 * omega_j, -2.0, p));
    const auto est = extract_crosstalk(phi, scan, 1.5, omega_i, omega_j);
    CHECK(est.c_ij == doctest::Approx(0.003).epsilon(0.02));
    CHECK(std::abs(est.phi_ij + 2.0) < 0.02);
  }
  SUBCASE("flat scan is flagged") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 0.01);
    std::vector<double> scan;
    for (std::size_t i = 0; i < phi.size(); ++i) scan.push_back(omega_i + g(rng));
    const auto est = extract_crosstalk(phi, scan, delta, omega_i, omega_j);
    CHECK_FALSE(est.identifiable);
    CHECK(est.c_ij == 0.0);
  }
  SUBCASE("insufficient scans") {
    const std::vector<double> half = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6};
    std::vector<double> scan(half.size(), 10.0);
    CHECK_THROWS_AS(extract_crosstalk(half, scan, delta, omega_i, omega_j), FitError);
    const std::vector<double> few = {0.0, 1.0, 2.0};
    CHECK_THROWS_AS(extract_crosstalk(few, std::vector<double>(3, 10.0), delta, omega_i, omega_j), FitError);
  }
}

TEST_CASE("mixer map") {
  const MixerMap map{20.0, 0.5, 16.0};
  CHECK(amp_to_rabi(0.3, map) == doctest::Approx(6.0));
  CHECK(amp_to_rabi(0.5, map) == doctest::Approx(10.0));
  const double h = 1e-7;
  const double left = (amp_to_rabi(0.5, map) - amp_to_rabi(0.5 - h, map)) / h;
  const double right = (amp_to_rabi(0.5 + h, map) - amp_to_rabi(0.5, map)) / h;
  CHECK(left == doctest::Approx(20.0).epsilon(1e-5));
  CHECK(right == doctest::Approx(20.0).epsilon(1e-5));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  double previous = -1.0;
  std::vector<double> vs;
  for (int i = 0; i < 1000; ++i) vs.push_back(u(rng));
  std::sort(vs.begin(), vs.end());
  for (double v : vs) {
    const double w = amp_to_rabi(v, map);
    CHECK(w > previous);
    CHECK(w < 16.0);
    previous = w;
    CHECK(std::abs(rabi_to_amp(w, map) - v) < 1e-12);
  }
  CHECK_THROWS_AS(rabi_to_amp(16.0, map), std::domain_error);
  CHECK_THROWS_AS((MixerMap{20.0, 0.5, 10.0}).validate(), std::invalid_argument);
}

TEST_CASE("crosstalk correction") {
  const std::vector<double> eta2 = {1.0, 1.0};
  Eigen::VectorXcd desired(2);
  desired << cplx(1.0, 0.2), cplx(-0.4, 0.9);
  SUBCASE("identity leaves the drive unchanged") {
    const auto out = correct_crosstalk(CrosstalkMatrix(2), eta2, desired);
    CHECK((out.drive - desired).norm() == 0.0);
    CHECK(out.condition_number == doctest::Approx(1.0));
  }
  SUBCASE("2x2 round trip") {
    CrosstalkMatrix m(2);
    m.set(0, 1, 0.05, 0.3);
    m.set(1, 0, 0.05, 0.3);
    const std::vector<double> eta = {18.0, 23.0};
    const auto out = correct_crosstalk(m, eta, desired);
    CHECK((apply_crosstalk(m, eta, out.drive) - desired).norm() / desired.norm() < 1e-12);
  }
  SUBCASE("device-scale matrix stays well conditioned") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> c(0.0, 0.04), ph(-std::numbers::pi, std::numbers::pi), e(15.0, 25.0);
    const int n = 24;
    CrosstalkMatrix m(n);
    std::vector<double> eta(n);
    for (int i = 0; i < n; ++i) {
      eta[i] = e(rng);
      for (int j = 0; j < n; ++j)
        if (i != j) m.set(i, j, c(rng) / (1 + std::abs(i - j)), ph(rng));
    }
    Eigen::VectorXcd want = Eigen::VectorXcd::Random(n);
    const auto out = correct_crosstalk(m, eta, want);
    CHECK(out.condition_number < 1e6);
    CHECK((apply_crosstalk(m, eta, out.drive) - want).norm() / want.norm() < 1e-12);
  }
  SUBCASE("singular matrices are rejected") {
    Eigen::MatrixXcd raw(2, 2);
    raw << 1.0, 1.0, 1.0, 1.0;
    CHECK_THROWS_AS(correct_crosstalk(CrosstalkMatrix(raw), eta2, desired), std::domain_error);
    Eigen::MatrixXcd bad = Eigen::MatrixXcd::Identity(2, 2);
    bad(0, 0) = 2.0;
    CHECK_THROWS_AS(CrosstalkMatrix{bad}, std::invalid_argument);
    CrosstalkMatrix m(2);
    CHECK_THROWS_AS(m.set(1, 1, 0.1, 0.0), std::invalid_argument);
  }
}

} // TEST_SUITE
