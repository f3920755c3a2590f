#include <doctest.h>

#include <algorithm>
#include <random>

#include "spinflow/haar.hpp"

using namespace spinflow;

namespace {

Lattice ladder_lattice(int rungs) { return ladder_preset("hardcore", rungs).lattice(); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

TEST_SUITE("haar") {

TEST_CASE("entropy target") {
  CHECK(haar_entropy_target(12) == doctest::Approx(12 * std::log(2.0) - 1.0 + 0.5772156649).epsilon(1e-12));
  CHECK(haar_entropy_target(23) == doctest::Approx(15.519).epsilon(1e-4));
}

TEST_CASE("participation entropy of simple states") {
  const auto r = participation_entropy(StateVector::basis(64, 17));
  CHECK(r.s_pe == 0.0);
  CHECK(r.n_qubits == 6);
  CHECK(r.estimator == EntropyEstimator::exact);

  StateVector uniform(std::vector<cplx>(256, cplx(1.0, 0.0)));
  uniform.normalize();
  CHECK(participation_entropy(uniform).s_pe == doctest::Approx(std::log(256.0)).epsilon(1e-13));
}

TEST_CASE("entropy is invariant under permutations and global phase") {
  auto psi = haar_reference_state(512, 4);
  const double s = participation_entropy(psi).s_pe;
  std::vector<cplx> amp(psi.amplitudes().begin(), psi.amplitudes().end());
  std::mt19937_64 rng(3);
  std::shuffle(amp.begin(), amp.end(), rng);
  for (auto& a : amp) a *= std::polar(1.0, 1.234);
  const double s2 = participation_entropy(StateVector(amp)).s_pe;
  CHECK(std::abs(s - s2) < 1e-12);
  CHECK(s >= 0.0);
  CHECK(s <= 9 * std::log(2.0));
}

TEST_CASE("Gaussian Haar draws reach the target at N = 12") {
  double mean = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    mean += participation_entropy(haar_reference_state(4096, 100 + seed)).s_pe / 20.0;
  CHECK(std::abs(mean - haar_entropy_target(12)) < 0.05);
}

TEST_CASE("Porter-Thomas KS statistic") {
  SUBCASE("basis state is maximally far") {
    std::vector<double> p(4096, 0.0);
    p[5] = 1.0;
    CHECK(porter_thomas_ks(p) > 0.99);
    CHECK(porter_thomas_ks(p) <= 1.0);
  }
  SUBCASE("sorted and unsorted inputs agree") {
    auto p = haar_reference_state(1024, 9).probabilities();
    const double a = porter_thomas_ks(p);
    std::sort(p.begin(), p.end());
    CHECK(a == porter_thomas_ks(p));
  }
  SUBCASE("i.i.d. exponential draws pass at D = 4096") {
    std::mt19937_64 rng(77);
    std::exponential_distribution<double> e(1.0);
    int below = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
      std::vector<double> p(4096);
      double sum = 0.0;
      for (auto& x : p) sum += (x = e(rng));
      for (auto& x : p) x /= sum;
      const double ks = porter_thomas_ks(p);
      CHECK(ks >= 0.0);
      if (ks < 0.035) ++below;
    }
    CHECK(below >= 0.95 * trials);
  }
  SUBCASE("critical value and errors") {
    CHECK(ks_critical_value(4096, 0.01) == doctest::Approx(1.6276 / 64.0).epsilon(1e-3));
    CHECK_THROWS_AS(porter_thomas_ks(std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(ks_critical_value(0, 0.01), std::invalid_argument);
  }
}

TEST_CASE("sampled entropy") {
  CHECK(sampled_participation_entropy(StateVector::basis(32, 3), 1000, 1).s_pe == 0.0);
  CHECK_THROWS_AS(sampled_participation_entropy(StateVector::basis(32, 3), 0, 1), std::invalid_argument);

  const auto psi = haar_reference_state(1024, 55);
  const double exact = participation_entropy(psi).s_pe;
  const auto r = sampled_participation_entropy(psi, 10'000'000, 8);
  CHECK(r.estimator == EntropyEstimator::sampled);
  CHECK(r.n_samples == 10'000'000u);
  CHECK(std::abs(r.s_pe - exact) < 0.05);
  CHECK(std::abs(r.s_pe_miller_madow - exact) <= std::abs(r.s_pe - exact));
  CHECK(r.s_pe == sampled_participation_entropy(psi, 10'000'000, 8).s_pe);
}

TEST_CASE("drive sampling") {
  const auto plan = sample_drive(20000, 200.0, {}, 12);
  double mean = 0.0, var = 0.0;
  for (double w : plan.omega_mhz) mean += w / 20000.0;
  for (double w : plan.omega_mhz) var += (w - mean) * (w - mean) / 19999.0;
  CHECK(std::abs(mean - 10.4) < 3 * 1.6 / std::sqrt(20000.0));
  CHECK(std::sqrt(var) == doctest::Approx(1.6).epsilon(0.03));
  CHECK(std::all_of(plan.phi.begin(), plan.phi.end(),
                    [](double p) { return std::abs(p) <= std::numbers::pi / 10.0; }));
  CHECK(plan.duration_ns == 200.0);

  const auto wide = sample_drive(20000, 0.0, DriveDistribution::wide_phase(), 12);
  const auto [lo, hi] = std::minmax_element(wide.phi.begin(), wide.phi.end());
  CHECK(*lo < -3.0);
  CHECK(*hi > 3.0);
  CHECK(*lo > -std::numbers::pi);

  CHECK(sample_drive(8, 1.0, {}, 5).omega_mhz == sample_drive(8, 1.0, {}, 5).omega_mhz);
  CHECK(sample_drive(8, 1.0, {}, 5).omega_mhz != sample_drive(8, 1.0, {}, 6).omega_mhz);
}

TEST_CASE("zero drive keeps the vacuum") {
  const auto lat = ladder_lattice(4);
  DriveDistribution off;
  off.omega_mean_mhz = 0.0;
  off.omega_std_mhz = 0.0;
  for (double t : {0.0, 50.0, 200.0, 1000.0})
    CHECK(participation_entropy(generate_haar_state(lat, off, t, 3)).s_pe < 1e-12);
}

TEST_CASE("t_R = 0 returns the vacuum") {
  const auto psi = generate_haar_state(ladder_lattice(3), DriveDistribution{}, 0.0, 3);
  CHECK(psi[0] == cplx(1.0, 0.0));
}

TEST_CASE("generated states approach Porter-Thomas at N = 10") {
  const auto psi = generate_haar_state(ladder_lattice(5), DriveDistribution{}, 200.0, 21);
  CHECK(std::abs(psi.norm() - 1.0) < 1e-12);
  const auto r = participation_entropy(psi);
  CHECK(std::abs(r.s_pe - r.s_target) < 0.3);
  CHECK(porter_thomas_ks(psi.probabilities()) < ks_critical_value(1024, 0.01));

  const auto hist = porter_thomas_histogram(psi, 20, 5.0);
  double mass = 0.0;
  for (const auto& b : hist) mass += b.density * (b.hi - b.lo);
  CHECK(mass == doctest::Approx(1.0 - std::exp(-5.0)).epsilon(0.02));
  CHECK(hist.front().expected == doctest::Approx(std::exp(-0.125)));
}

TEST_CASE("median entropy grows with t_R") {
  const auto lat = ladder_lattice(4);
  double previous = -1.0;
  for (double t : {0.0, 25.0, 50.0, 100.0, 150.0, 200.0}) {
    std::vector<double> s;
    for (std::uint64_t seed = 0; seed < 5; ++seed)
      s.push_back(participation_entropy(generate_haar_state(lat, DriveDistribution{}, t, seed)).s_pe);
    const double m = median(s);
    CHECK(m >= previous - 0.1);
    previous = std::max(previous, m);
  }
  CHECK(previous > haar_entropy_target(8) - 0.3);
}

} // TEST_SUITE
