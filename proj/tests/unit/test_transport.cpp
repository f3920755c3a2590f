#include <doctest.h>

#include <random>

#include "../oracle.hpp"
#include "spinflow/transport.hpp"

using namespace spinflow;

namespace {

std::vector<double> grid(double t_max, double dt) {
  std::vector<double> t;
  for (double x = 0.0; x <= t_max + 1e-9; x += dt) t.push_back(x);
  return t;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> t;
  for (int i = 0; i < n; ++i) t.push_back(lo * std::pow(hi / lo, double(i) / (n - 1)));
  return t;
}

} // namespace

TEST_SUITE("transport") {

TEST_CASE("exact trace matches the dense Heisenberg oracle at N = 8") {
  const auto spec = device_ladder(4, 11, true);
  const auto field = sample_disorder(15.0, 3, spec.n_sites());
  const std::vector<double> times = {0.0, 13.0, 50.0, 120.0, 200.0};
  const auto exact = exact_autocorrelation(spec, field, times);
  const auto lat = spec.lattice();
  const oracle::Mat h = oracle::hopping(lat) + oracle::onsite(lat, field.w_mhz);
  for (std::size_t i = 0; i < times.size(); ++i) {
    double c11 = 0.0;
    for (int mu = 0; mu < 2; ++mu)
      for (int nu = 0; nu < 2; ++nu) {
        const double ref = oracle::heisenberg_correlator(h, oracle::sigma_z(mu, 8), oracle::sigma_z(nu, 8), times[i]);
        CHECK(std::abs(exact.c[mu * 2 + nu][i] - ref) < 1e-10);
        c11 += 0.25 * ref;
      }
    CHECK(std::abs(exact.c11[i] - c11) < 1e-10);
  }
}

TEST_CASE("exact trace at t = 0 and for H = 0") {
  const std::vector<double> times = {0.0, 40.0, 400.0};
  const auto c = exact_autocorrelation(uniform_ladder(4, 7.3, 6.6), {}, times);
  CHECK(std::abs(c.c11[0] - 0.5) < 1e-12);
  CHECK(std::abs(c.c[0][0] - 1.0) < 1e-12);
  CHECK(std::abs(c.c[1][0]) < 1e-12);

  const auto flat = exact_autocorrelation(uniform_ladder(3, 0.0, 0.0), {}, times);
  for (std::size_t i = 0; i < times.size(); ++i) CHECK(std::abs(flat.c11[i] - 0.5) < 1e-12);

  CHECK_THROWS_AS(exact_autocorrelation(uniform_ladder(7, 1.0, 1.0), {}, times), DimensionError);
}

TEST_CASE("expansion identity: basis-state average equals the trace") {
  const auto spec = device_ladder(4, 5, true);
  const auto field = sample_disorder(20.0, 9, spec.n_sites());
  const std::vector<double> times = {0.0, 30.0, 100.0};
  const auto exact = exact_autocorrelation(spec, field, times);
  std::vector<double> avg(times.size(), 0.0);
  for (Basis k = 0; k < spec.dim(); ++k) {
    const auto c = product_state_autocorrelation(spec, field, k, times);
    for (std::size_t i = 0; i < times.size(); ++i) avg[i] += c[i] / static_cast<double>(spec.dim());
  }
  for (std::size_t i = 0; i < times.size(); ++i) CHECK(std::abs(avg[i] - exact.c11[i]) < 1e-10);
}

TEST_CASE("product-state correlator at t = 0") {
  const auto spec = uniform_ladder(3, 7.3, 6.6);
  const std::vector<double> t0 = {0.0};
  const int both[] = {1, 1, 0, 0, 1, 0};
  const int split[] = {1, 0, 0, 1, 1, 0};
  const int none[] = {0, 0, 1, 1, 1, 0};
  CHECK(product_state_autocorrelation(spec, {}, product_state(both), t0)[0] == doctest::Approx(1.0));
  CHECK(product_state_autocorrelation(spec, {}, product_state(split), t0)[0] == 0.0);
  CHECK(product_state_autocorrelation(spec, {}, product_state(none), t0)[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(product_state_autocorrelation(spec, {}, 64, t0), std::invalid_argument);
}

TEST_CASE("typicality at t = 0") {
  const auto spec = ladder_preset("hardcore", 4);
  TypicalityConfig cfg;
  const std::vector<double> t0 = {0.0};
  const std::uint64_t seed[] = {42};
  const auto c = measure_autocorrelation(spec, {}, cfg, t0, seed);
  const double tol = 3.0 * std::pow(2.0, -3.5);
  CHECK(std::abs(c.c[0][0] - 1.0) < tol);
  CHECK(std::abs(c.c[3][0] - 1.0) < tol);
  CHECK(std::abs(c.c[1][0]) < tol);
  CHECK(std::abs(c.c[2][0]) < tol);
  CHECK(std::abs(c.c11[0] - 0.5) < tol);
  CHECK(c.n_realizations == 1);
  CHECK_THROWS_AS(measure_autocorrelation(spec, {}, cfg, t0, std::span<const std::uint64_t>{}),
                  std::invalid_argument);
}

TEST_CASE("typicality tracks the exact trace at N = 8") {
  const auto spec = ladder_preset("hardcore", 4);
  const auto times = grid(200.0, 20.0);
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 10; ++s) seeds.push_back(1000 + s);
  const auto typ = measure_autocorrelation(spec, {}, TypicalityConfig{}, times, seeds);
  const auto exact = exact_autocorrelation(spec, {}, times);
  CHECK(typ.n_realizations == 10);
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(std::abs(typ.c11[i] - exact.c11[i]) < 0.1);
    CHECK(std::abs(typ.c11[i] - 0.25 * (typ.c[0][i] + typ.c[1][i] + typ.c[2][i] + typ.c[3][i])) < 1e-15);
    CHECK(typ.stderr_c11[i] >= 0.0);
  }
}

TEST_CASE("domain-wall states") {
  for (int rungs : {4, 6}) {
    for (int walls = 0; walls <= 2 * (rungs - 1); ++walls) {
      Basis s = 0;
      try {
        s = domain_wall_state(rungs, walls);
      } catch (const std::invalid_argument&) {
        continue;
      }
      CHECK(count_domain_walls(s, rungs) == walls);
      CHECK(std::popcount(s) == rungs);
      CHECK(((s >> 0) & 1u) == ((s >> 1) & 1u));
    }
  }
  CHECK(count_domain_walls(domain_wall_state(6, 2), 6) == 2);
  const int middle[] = {1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
  CHECK(domain_wall_state(6, 2) == product_state(middle));
  CHECK(count_domain_walls(domain_wall_state(6, 10), 6) == 10);
  CHECK_THROWS_AS(domain_wall_state(4, 7), std::invalid_argument);
}

TEST_CASE("tilted ladder: few domain walls barely decay") {
  const auto spec = ladder_preset("hardcore", 6);
  const auto field = tilt_potential(60.0, 6);
  const std::vector<double> times = {0.0, 100.0, 200.0};
  const auto few = product_state_autocorrelation(spec, field, domain_wall_state(6, 2), times);
  const auto many = product_state_autocorrelation(spec, field, domain_wall_state(6, 10), times);
  CHECK(few[0] == doctest::Approx(1.0));
  CHECK(many[0] == doctest::Approx(1.0));
  INFO("C(200 ns): 2 walls ", few[2], ", 10 walls ", many[2]);
  CHECK(few[2] > 0.9);
  CHECK(many[2] < few[2] - 0.2);
}

TEST_CASE("power-law fit") {
  SUBCASE("exact power law") {
    const auto t = log_grid(10.0, 300.0, 30);
    std::vector<double> c;
    for (double x : t) c.push_back(std::pow(x, -0.5));
    const auto fit = fit_power_law(t, c, {}, {50.0, 200.0});
    CHECK(fit.alpha == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(fit.alpha_stderr < 1e-10);
    CHECK(fit.r_squared == doctest::Approx(1.0));
    CHECK(fit.window_ns == std::pair{50.0, 200.0});
  }
  SUBCASE("scale equivariance") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> noise(0.0, 0.02);
    const auto t = grid(200.0, 4.0);
    std::vector<double> c, ck, tk;
    for (double x : t) {
      c.push_back(std::pow(std::max(x, 1.0), -0.37) * (1.0 + noise(rng)));
      ck.push_back(7.5 * c.back());
      tk.push_back(3.0 * x);
    }
    const double a = fit_power_law(t, c, {}, {50.0, 200.0}).alpha;
    CHECK(fit_power_law(t, ck, {}, {50.0, 200.0}).alpha == doctest::Approx(a).epsilon(1e-12));
    CHECK(fit_power_law(tk, c, {}, {150.0, 600.0}).alpha == doctest::Approx(a).epsilon(1e-12));
  }
  SUBCASE("1% noise on t^-0.3, 20 points, 100 trials") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> noise(0.0, 0.01);
    const auto t = log_grid(50.0, 200.0, 20);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> c;
      for (double x : t) c.push_back(std::pow(x, -0.3) * (1.0 + noise(rng)));
      CHECK(std::abs(fit_power_law(t, c, {}, {50.0, 200.0}).alpha - 0.3) < 0.02);
    }
  }
  SUBCASE("non-positive points are dropped, too few survivors is an error") {
    const auto t = grid(200.0, 10.0);
    std::vector<double> c;
    for (double x : t) c.push_back(std::pow(std::max(x, 1.0), -0.5));
    c[10] = -0.01;
    c[12] = 0.0;
    const auto fit = fit_power_law(t, c, {}, {50.0, 200.0});
    CHECK(fit.n_points == 14);
    CHECK(fit.alpha == doctest::Approx(0.5));
    for (std::size_t i = 5; i < c.size(); ++i) c[i] = i < 8 ? c[i] : -1.0;
    CHECK_THROWS_AS(fit_power_law(t, c, {}, {50.0, 200.0}), FitError);
    CHECK_THROWS_AS(fit_power_law(t, c, {}, {200.0, 50.0}), std::invalid_argument);
  }
  SUBCASE("per-point errors propagate into alpha_stderr") {
    const auto t = grid(200.0, 10.0);
    std::vector<double> c, e;
    for (double x : t) {
      c.push_back(std::pow(std::max(x, 1.0), -0.5));
      e.push_back(0.01 * c.back());
    }
    const auto fit = fit_power_law(t, c, e, {50.0, 200.0});
    double xm = 0.0, sxx = 0.0;
    std::vector<double> x;
    for (double v : t)
      if (v >= 50.0 && v <= 200.0) x.push_back(std::log(v));
    for (double v : x) xm += v / x.size();
    for (double v : x) sxx += (v - xm) * (v - xm);
    CHECK(fit.alpha_stderr == doctest::Approx(0.01 / std::sqrt(sxx)).epsilon(1e-9));
  }
}

TEST_CASE("classification") {
  auto fit_with = [](double a) {
    PowerLawFit f;
    f.alpha = a;
    return f;
  };
  CHECK(classify_transport(fit_with(0.5067)) == TransportClass::diffusive);
  CHECK(classify_transport(fit_with(0.02)) == TransportClass::frozen);
  CHECK(classify_transport(fit_with(0.25)) == TransportClass::subdiffusive);
  CHECK(classify_transport(fit_with(0.4)) == TransportClass::diffusive);
  ClassifyThresholds th;
  th.frozen_below = 0.3;
  CHECK(classify_transport(fit_with(0.25), th) == TransportClass::frozen);
  CHECK(to_string(TransportClass::subdiffusive) == "subdiffusive");
}

TEST_CASE("averaging realizations") {
  CorrelationSeries a, b;
  for (auto* s : {&a, &b}) {
    s->times_ns = {0.0, 1.0};
    for (auto& c : s->c) c = {1.0, 0.5};
    s->c11 = {1.0, 0.5};
    s->stderr_c11 = {0.0, 0.0};
  }
  for (auto& c : b.c) c[1] = 0.3;
  b.c11[1] = 0.3;
  const std::vector<CorrelationSeries> both = {a, b};
  const auto avg = average_series(both);
  CHECK(avg.n_realizations == 2);
  CHECK(avg.c11[1] == doctest::Approx(0.4));
  CHECK(avg.stderr_c11[1] == doctest::Approx(0.1));
  CHECK(avg.stderr_c11[0] == 0.0);
  const std::vector<CorrelationSeries> one = {b};
  CHECK(average_series(one).c11 == b.c11);
  b.times_ns[1] = 2.0;
  const std::vector<CorrelationSeries> mismatched = {a, b};
  CHECK_THROWS_AS(average_series(mismatched), std::invalid_argument);
}

} // TEST_SUITE
