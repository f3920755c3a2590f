#include <doctest.h>

#include <random>

#include "../oracle.hpp"
#include "spinflow/haar.hpp"
#include "spinflow/propagator.hpp"

using namespace spinflow;

namespace {

SparseOperator random_hamiltonian(int rungs, std::uint64_t seed, bool with_drive) {
  const auto spec = device_ladder(rungs, seed, true);
  SparseOperator h = build_interaction(spec) + build_onsite(spec, sample_disorder(25.0, seed + 1, spec.n_sites()));
  if (with_drive) h = h + build_drive(spec.lattice(), sample_drive(spec.n_sites(), 0.0, {}, seed + 2));
  return h;
}

double distance(const StateVector& a, const StateVector& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.dim(); ++k) s += std::norm(a[k] - b[k]);
  return std::sqrt(s);
}

double energy(const SparseOperator& h, const StateVector& psi) {
  std::vector<cplx> hp(psi.dim());
  h.apply(psi.amplitudes(), hp);
  return dot(psi.amplitudes(), hp).real();
}

} // namespace

TEST_SUITE("propagator") {

TEST_CASE("t = 0 is the identity") {
  const auto h = random_hamiltonian(3, 1, true);
  const auto psi = haar_reference_state(h.dim(), 2);
  CHECK(distance(evolve(h, psi, 0.0), psi) == 0.0);
}

TEST_CASE("dimer swap: cos(wt) on |10>, -i sin(wt) on |01>") {
  const auto h = build_interaction(uniform_ladder(1, 0.0, 6.6));
  const double w = to_angular(6.6);
  for (double t : {3.0, 17.0, 40.0, 123.0}) {
    const auto psi = evolve(h, StateVector::basis(4, 1), t);
    CHECK(std::abs(psi[1] - cplx(std::cos(w * t), 0.0)) < 1e-12);
    CHECK(std::abs(psi[2] - cplx(0.0, -std::sin(w * t))) < 1e-12);
  }
}

TEST_CASE("Krylov agrees with the dense propagators") {
  const auto h = random_hamiltonian(4, 7, true);
  const auto psi = haar_reference_state(h.dim(), 3);
  const auto krylov = evolve(h, psi, 200.0);
  const auto dense = dense_evolve(h, psi, 200.0);
  CHECK(distance(krylov, dense) < 1e-10);
  const Eigen::VectorXcd ref = (cplx(0.0, -200.0) * h.to_dense()).exp() * oracle::to_eigen(psi);
  CHECK((oracle::to_eigen(krylov) - ref).norm() < 1e-10);
}

TEST_CASE("substep halving keeps accuracy when m_max is small") {
  const auto h = random_hamiltonian(3, 9, true);
  const auto psi = haar_reference_state(h.dim(), 4);
  KrylovConfig cfg;
  cfg.m_min = 3;
  cfg.m_max = 6;
  cfg.step_ns = 50.0;
  PropagationStats stats;
  const auto out = evolve(h, psi, 100.0, cfg, &stats);
  CHECK(stats.halvings > 0);
  CHECK(distance(out, dense_evolve(h, psi, 100.0)) < 1e-9);
}

TEST_CASE("unitarity, energy, composition and number conservation") {
  const auto h_driven = random_hamiltonian(4, 21, true);
  const auto h = random_hamiltonian(4, 22, false);
  const auto psi = haar_reference_state(h.dim(), 5);
  KrylovConfig cfg;
  PropagationStats stats;
  const auto a = evolve(h_driven, psi, 2000.0, cfg, &stats);
  CHECK(std::abs(a.norm() - 1.0) < 1e-10);
  CHECK(std::abs(energy(h_driven, a) - energy(h_driven, psi)) < 1e-8);

  const auto b = evolve(h_driven, evolve(h_driven, psi, 70.0), 130.0);
  CHECK(distance(b, evolve(h_driven, psi, 200.0)) < 2.0 * cfg.tol * 2.0 * stats.substeps + 1e-11);

  std::vector<double> number(h.dim());
  for (Basis k = 0; k < h.dim(); ++k) number[k] = std::popcount(k);
  const int occ[] = {1, 0, 0, 1, 1, 0, 1, 0};
  const auto start = StateVector::basis(h.dim(), product_state(occ));
  const auto later = evolve(h, start, 500.0);
  CHECK(std::abs(expect_diagonal(later, number) - 4.0) < 1e-8);
}

TEST_CASE("input validation") {
  const auto h = random_hamiltonian(2, 1, false);
  CHECK_THROWS_AS(evolve(h, StateVector::basis(8, 0), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(evolve(h, StateVector::basis(h.dim(), 0), -1.0), std::invalid_argument);
  CHECK_THROWS_AS(evolve(h.with_hermitian_flag(false), StateVector::basis(h.dim(), 0), 1.0), std::invalid_argument);
  KrylovConfig bad;
  bad.m_min = 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {};
  bad.m_max = 65;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {};
  bad.tol = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(dense_evolve(SparseOperator::zero(8192), StateVector(8192), 1.0), DimensionError);
}

TEST_CASE("dense_evolve special cases") {
  const auto psi = haar_reference_state(16, 8);
  CHECK(distance(dense_evolve(SparseOperator::zero(16), psi, 12.0), psi) < 1e-14);
  std::vector<double> e(16);
  for (std::size_t k = 0; k < 16; ++k) e[k] = 0.01 * k * k;
  const auto out = dense_evolve(SparseOperator::diagonal(e), psi, 7.0);
  for (std::size_t k = 0; k < 16; ++k) CHECK(std::abs(out[k] - psi[k] * std::polar(1.0, -e[k] * 7.0)) < 1e-13);
}

TEST_CASE("Arnoldi propagation of a non-Hermitian generator") {
  const auto h = random_hamiltonian(3, 31, true);
  std::vector<double> rates(h.dim());
  for (Basis k = 0; k < h.dim(); ++k) rates[k] = 0.002 * std::popcount(k);
  SparseOperator::Builder b(h.dim(), false);
  for (Basis k = 0; k < h.dim(); ++k) {
    b.add(k, cplx(0.0, -rates[k]));
    b.end_row();
  }
  const SparseOperator g = (h + std::move(b).finish()).with_hermitian_flag(false);
  const auto psi = haar_reference_state(h.dim(), 6);
  const auto out = evolve_general(g, psi, 150.0);
  const Eigen::VectorXcd ref = (cplx(0.0, -150.0) * g.to_dense()).exp() * oracle::to_eigen(psi);
  CHECK((oracle::to_eigen(out) - ref).norm() < 1e-10);
  CHECK(out.norm() < 1.0);
}

TEST_CASE("expect_z") {
  const std::size_t dim = 1 << 6;
  const auto vac = StateVector::basis(dim, 0);
  for (int s = 0; s < 6; ++s) CHECK(expect_z(vac, s) == 1.0);
  const auto one = StateVector::basis(dim, 1u << 3);
  CHECK(expect_z(one, 3) == -1.0);
  CHECK(expect_z(one, Site{2, Leg::down}) == -1.0);
  StateVector uniform(std::vector<cplx>(dim, cplx(1.0, 0.0)));
  uniform.normalize();
  for (int s = 0; s < 6; ++s) CHECK(std::abs(expect_z(uniform, s)) < 1e-15);
}

TEST_CASE("evolve_on_grid visits each time in order") {
  const auto h = random_hamiltonian(2, 3, false);
  const std::vector<double> times = {0.0, 10.0, 10.0, 35.0};
  std::vector<std::size_t> order;
  const auto psi = haar_reference_state(h.dim(), 1);
  evolve_on_grid(h, psi, times, {}, [&](std::size_t i, const StateVector& s) {
    order.push_back(i);
    CHECK(distance(s, dense_evolve(h, psi, times[i])) < 1e-11);
  });
  CHECK(order == std::vector<std::size_t>{0, 1, 2, 3});
  const std::vector<double> bad = {5.0, 1.0};
  CHECK_THROWS_AS(evolve_on_grid(h, psi, bad, {}, [](std::size_t, const StateVector&) {}), std::invalid_argument);
}

TEST_CASE("deterministic reductions do not depend on the thread count") {
  const auto h = random_hamiltonian(4, 5, true);
  const auto psi = haar_reference_state(h.dim(), 9);
  const auto a = evolve(h, psi, 100.0);
  for (std::size_t k = 0; k < a.dim(); ++k) CHECK(a[k] == evolve(h, psi, 100.0)[k]);
}

} // TEST_SUITE
