#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spinflow/sparse.hpp"
#include "spinflow/state.hpp"
#include "spinflow/types.hpp"

namespace spinflow {

enum class Leg : int { up = 0, down = 1 };

/// Qubit (j, m) of the ladder; rungs are 1-based.
struct Site {
  int rung = 1;
  Leg leg = Leg::up;

  /// (rung - 1) * 2 + leg offset.
  int index() const { return (rung - 1) * 2 + static_cast<int>(leg); }
  static Site from_index(int index) {
    return {index / 2 + 1, index % 2 == 0 ? Leg::up : Leg::down};
  }
  friend bool operator==(const Site&, const Site&) = default;
};

/// Hopping term J (a^dag_a a_b + h.c.) with J in MHz.
struct Bond {
  int a = 0;
  int b = 0;
  double j_mhz = 0.0;
};

/// Site graph the builders operate on. A LadderSpec lowers to one of these;
/// sub-lattices (the ladder with one qubit removed) are also Lattices.
struct Lattice {
  int n_sites = 0;
  int local_dim = 2;
  std::vector<Bond> bonds;
  std::vector<double> anharmonicity_mhz; // per site, qutrit only

  std::size_t dim() const;
  /// Drops `site` and its bonds; sites above it shift down by one.
  Lattice without_site(int site) const;
};

/// Geometry and couplings of the two-leg ladder. All couplings are ordinary
/// frequencies in MHz. Optional arrays may be left empty (all zero).
struct LadderSpec {
  int rungs = 1;
  std::vector<double> parallel_up;   // L-1, (j,up)-(j+1,up)
  std::vector<double> parallel_down; // L-1, (j,down)-(j+1,down)
  std::vector<double> rung;          // L,   (j,up)-(j,down)
  std::vector<double> diag_down;     // L-1, (j,up)-(j+1,down)
  std::vector<double> diag_up;       // L-1, (j,down)-(j+1,up)
  std::vector<double> nnn_up;        // L-2, (j,up)-(j+2,up)
  std::vector<double> nnn_down;      // L-2, (j,down)-(j+2,down)
  int local_dim = 2;
  std::vector<double> anharmonicity; // N, E_C/(2 pi hbar) in MHz, qutrit only

  int n_sites() const { return 2 * rungs; }
  std::size_t dim() const;

  /// Throws std::invalid_argument on malformed arrays and DimensionError
  /// when the Hilbert space is over budget.
  void validate() const;
  Lattice lattice() const;
};

/// Ladder with identical couplings on every bond.
LadderSpec uniform_ladder(int rungs, double j_parallel_mhz, double j_rung_mhz);

/// Device-like ladder: Gaussian scatter around the measured means
/// (J_par 7.3 +- 0.1, J_rung 6.6 +- 0.2 MHz). With `with_nnn`, diagonal
/// (1.5 +- 0.3) and same-leg next-nearest (0.7 +- 0.2) hoppings are added.
LadderSpec device_ladder(int rungs, std::uint64_t seed = 2024, bool with_nnn = false);

/// Named presets: "uniform", "hardcore", "device".
LadderSpec ladder_preset(const std::string& name, int rungs, std::uint64_t seed = 2024);

/// Same couplings, qutrit truncation with per-site anharmonicity
/// (222 +- 22 MHz scatter when `scatter` is set).
LadderSpec with_qutrits(LadderSpec spec, double anharmonicity_mhz, bool scatter = false,
                        std::uint64_t seed = 2024);

/// Per-site potential in MHz; an empty field means zero everywhere.
struct PotentialField {
  std::vector<double> w_mhz;
};

struct DrivePlan {
  std::vector<double> omega_mhz; // Rabi frequency per site
  std::vector<double> phi;       // phase per site, (-pi, pi]
  double duration_ns = 0.0;

  void validate(int n_sites) const;
};

/// Hopping Hamiltonian (nearest + optional next-nearest), rad/ns.
/// Requires local_dim == 2.
SparseOperator build_interaction(const LadderSpec& spec);
SparseOperator build_interaction(const Lattice& lattice);

/// Omega/2 (e^{-i phi} sigma^+ + h.c.) on the masked sites. An empty mask
/// means all sites.
SparseOperator build_drive(const Lattice& lattice, const DrivePlan& plan,
                           std::span<const int> mask = {});
SparseOperator build_drive(const LadderSpec& spec, const DrivePlan& plan,
                           std::span<const Site> mask = {});

/// Diagonal sum_s w_s n_s, rad/ns.
SparseOperator build_onsite(const Lattice& lattice, const PotentialField& field);
SparseOperator build_onsite(const LadderSpec& spec, const PotentialField& field);

/// Bose-Hubbard ladder truncated at two excitations per site: bosonic
/// hopping plus -(E_C/2) n (n-1). Requires local_dim == 3.
SparseOperator build_bose_hubbard(const LadderSpec& spec);
SparseOperator build_bose_hubbard(const Lattice& lattice);

/// i.i.d. uniform on [-W, W] per site. A fixed seed gives the same pattern
/// scaled linearly with W.
PotentialField sample_disorder(double w_mhz, std::uint64_t seed, int n_sites);

/// w_{j,m} = Delta * j with Delta = 2 W_S / (L - 1) on both legs.
PotentialField tilt_potential(double ws_mhz, int rungs);

/// Probability weight outside the hard-core subspace (any occupation > 1).
double leakage_probability(const StateVector& psi, const LadderSpec& spec);

/// Hard-core state re-expressed in the qutrit basis of the same sites.
StateVector hardcore_to_qutrit(const StateVector& psi, int n_sites);
/// Amplitudes of a qutrit state on the hard-core subspace (no renormalisation).
StateVector project_hardcore(const StateVector& psi, int n_sites);

/// Basis index of the product state with the given occupations.
Basis product_state(std::span<const int> occupations, int local_dim = 2);

} // namespace spinflow
