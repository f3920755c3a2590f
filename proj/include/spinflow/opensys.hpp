#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spinflow/propagator.hpp"
#include "spinflow/sparse.hpp"
#include "spinflow/state.hpp"

namespace spinflow {

/// Per-qubit energy relaxation, L_j = sigma^-_j / sqrt(T1_j).
struct RelaxationSpec {
  std::vector<double> t1_ns;

  static RelaxationSpec uniform(int n_sites, double t1_ns = 32100.0) {
    return {std::vector<double>(static_cast<std::size_t>(n_sites), t1_ns)};
  }
  int n_sites() const { return static_cast<int>(t1_ns.size()); }
  void validate() const;
};

/// Observable diagonal in the computational basis.
struct DiagonalObservable {
  std::string name;
  std::vector<double> diagonal;
};

DiagonalObservable sigma_z_observable(int n_sites, int site);
/// sum_i n_i for qubits. For qutrits only singly occupied sites count, so
/// leaked population lowers the total.
DiagonalObservable number_observable(int n_sites, int local_dim = 2);

struct ObservableSeries {
  std::vector<double> times_ns;
  std::vector<std::string> names;
  std::vector<std::vector<double>> mean;   // [observable][time]
  std::vector<std::vector<double>> std_error; // [observable][time], zero for dense
  std::size_t n_trajectories = 0;
};

/// Quantum-jump unravelling of the T1 master equation. Between jumps the
/// state follows H_eff = H - (i/2) sum_j L_j^dag L_j; a jump happens when
/// <psi|psi> falls below a uniform draw, located by bisection to 1e-3 ns.
/// Each trajectory uses its own seed substream derived from (seed, index).
/// The shared pre-jump path is computed once on the grid and reused.
ObservableSeries evolve_trajectories(const SparseOperator& h, const RelaxationSpec& relax,
                                     const StateVector& psi0, std::span<const double> times,
                                     std::span<const DiagonalObservable> observables,
                                     std::size_t n_traj, std::uint64_t seed,
                                     const KrylovConfig& cfg = {});

/// Fixed-step RK4 integration of d rho/dt = -i[H, rho] + D[rho]. D <= 64.
/// Throws ConvergenceError when the trace drifts more than 1e-8 or the
/// smallest eigenvalue drops below -1e-8.
ObservableSeries dense_lindblad(const SparseOperator& h, const RelaxationSpec& relax,
                                const Eigen::MatrixXcd& rho0, std::span<const double> times,
                                std::span<const DiagonalObservable> observables,
                                double dt_ns = 0.05);

/// Effective non-Hermitian generator H - (i/2) sum_j n_j / T1_j.
SparseOperator effective_generator(const SparseOperator& h, const RelaxationSpec& relax);

/// sum_i <n_i> on qubits.
double particle_number(const StateVector& psi, int n_sites);
double particle_number(const Eigen::MatrixXcd& rho, int n_sites);

} // namespace spinflow
