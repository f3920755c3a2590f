#include "spinflow/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace spinflow {

namespace {

std::vector<Basis> digit_powers(int n_sites, int local_dim) {
  std::vector<Basis> p(static_cast<std::size_t>(n_sites) + 1, 1);
  for (int s = 1; s <= n_sites; ++s) p[s] = p[s - 1] * static_cast<Basis>(local_dim);
  return p;
}

int digit(Basis k, int site, int local_dim, const std::vector<Basis>& pw) {
  if (local_dim == 2) return static_cast<int>((k >> site) & 1u);
  return static_cast<int>((k / pw[site]) % static_cast<Basis>(local_dim));
}

void check_lattice(const Lattice& lat, const char* what) {
  if (lat.n_sites < 1) throw std::invalid_argument(std::string(what) + ": empty lattice");
  if (lat.local_dim != 2 && lat.local_dim != 3)
    throw std::invalid_argument(std::string(what) + ": local_dim must be 2 or 3");
  check_dimension(lat.dim(), what);
}

void check_length(const std::vector<double>& v, std::size_t n, bool optional, const char* name) {
  if (optional && v.empty()) return;
  if (v.size() != n)
    throw std::invalid_argument(std::string("LadderSpec: ") + name + " has length " +
                                std::to_string(v.size()) + ", expected " + std::to_string(n));
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument(std::string("LadderSpec: non-finite ") + name);
}

std::size_t safe_pow(int base, int exp) {
  std::size_t d = 1;
  for (int i = 0; i < exp; ++i) {
    if (d > std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(base))
      return std::numeric_limits<std::size_t>::max();
    d *= static_cast<std::size_t>(base);
  }
  return d;
}

// Shared by the hard-core and Bose-Hubbard builders: bosonic hopping with
// sqrt factors (all 1 when local_dim == 2), plus an optional diagonal.
template <class Diag>
SparseOperator hopping_operator(const Lattice& lat, Diag&& diagonal) {
  const auto pw = digit_powers(lat.n_sites, lat.local_dim);
  const int d = lat.local_dim;
  const std::size_t dim = lat.dim();
  SparseOperator::Builder b(dim);
  for (Basis r = 0; r < dim; ++r) {
    const double diag = diagonal(r, pw);
    if (diag != 0.0) b.add(r, diag);
    for (const Bond& bond : lat.bonds) {
      const double j = to_angular(bond.j_mhz);
      const int na = digit(r, bond.a, d, pw);
      const int nb = digit(r, bond.b, d, pw);
      // <r| a^dag_a a_b |c>, c = r - e_a + e_b
      if (na >= 1 && nb <= d - 2) b.add(r - pw[bond.a] + pw[bond.b], j * std::sqrt(double(na) * (nb + 1)));
      // <r| a^dag_b a_a |c>, c = r + e_a - e_b
      if (nb >= 1 && na <= d - 2) b.add(r + pw[bond.a] - pw[bond.b], j * std::sqrt(double(nb) * (na + 1)));
    }
    b.end_row();
  }
  return std::move(b).finish();
}

} // namespace

std::size_t Lattice::dim() const { return safe_pow(local_dim, n_sites); }

Lattice Lattice::without_site(int site) const {
  if (site < 0 || site >= n_sites) throw std::out_of_range("Lattice::without_site: bad site");
  Lattice out;
  out.n_sites = n_sites - 1;
  out.local_dim = local_dim;
  auto remap = [site](int s) { return s > site ? s - 1 : s; };
  for (const Bond& b : bonds) {
    if (b.a == site || b.b == site) continue;
    out.bonds.push_back({remap(b.a), remap(b.b), b.j_mhz});
  }
  for (int s = 0; s < static_cast<int>(anharmonicity_mhz.size()); ++s)
    if (s != site) out.anharmonicity_mhz.push_back(anharmonicity_mhz[s]);
  return out;
}

std::size_t LadderSpec::dim() const { return safe_pow(local_dim, n_sites()); }

void LadderSpec::validate() const {
  if (rungs < 1) throw std::invalid_argument("LadderSpec: need at least one rung");
  if (local_dim != 2 && local_dim != 3) throw std::invalid_argument("LadderSpec: local_dim must be 2 or 3");
  const auto L = static_cast<std::size_t>(rungs);
  check_length(parallel_up, L - 1, false, "parallel_up");
  check_length(parallel_down, L - 1, false, "parallel_down");
  check_length(rung, L, false, "rung");
  check_length(diag_down, L - 1, true, "diag_down");
  check_length(diag_up, L - 1, true, "diag_up");
  check_length(nnn_up, L >= 2 ? L - 2 : 0, true, "nnn_up");
  check_length(nnn_down, L >= 2 ? L - 2 : 0, true, "nnn_down");
  if (local_dim == 3) {
    check_length(anharmonicity, 2 * L, false, "anharmonicity");
  } else if (!anharmonicity.empty()) {
    throw std::invalid_argument("LadderSpec: anharmonicity is only meaningful for local_dim = 3");
  }
  check_dimension(dim(), "LadderSpec");
}

Lattice LadderSpec::lattice() const {
  validate();
  Lattice lat;
  lat.n_sites = n_sites();
  lat.local_dim = local_dim;
  lat.anharmonicity_mhz = anharmonicity;
  auto idx = [](int j, Leg m) { return Site{j, m}.index(); };
  auto push = [&lat](int a, int b, double j) {
    if (j != 0.0) lat.bonds.push_back({a, b, j});
  };
  for (int j = 1; j < rungs; ++j) push(idx(j, Leg::up), idx(j + 1, Leg::up), parallel_up[j - 1]);
  for (int j = 1; j < rungs; ++j) push(idx(j, Leg::down), idx(j + 1, Leg::down), parallel_down[j - 1]);
  for (int j = 1; j <= rungs; ++j) push(idx(j, Leg::up), idx(j, Leg::down), rung[j - 1]);
  if (!diag_down.empty())
    for (int j = 1; j < rungs; ++j) push(idx(j, Leg::up), idx(j + 1, Leg::down), diag_down[j - 1]);
  if (!diag_up.empty())
    for (int j = 1; j < rungs; ++j) push(idx(j, Leg::down), idx(j + 1, Leg::up), diag_up[j - 1]);
  if (!nnn_up.empty())
    for (int j = 1; j + 2 <= rungs; ++j) push(idx(j, Leg::up), idx(j + 2, Leg::up), nnn_up[j - 1]);
  if (!nnn_down.empty())
    for (int j = 1; j + 2 <= rungs; ++j) push(idx(j, Leg::down), idx(j + 2, Leg::down), nnn_down[j - 1]);
  return lat;
}

LadderSpec uniform_ladder(int rungs, double j_parallel_mhz, double j_rung_mhz) {
  if (rungs < 1) throw std::invalid_argument("uniform_ladder: need at least one rung");
  LadderSpec s;
  s.rungs = rungs;
  s.parallel_up.assign(rungs - 1, j_parallel_mhz);
  s.parallel_down.assign(rungs - 1, j_parallel_mhz);
  s.rung.assign(rungs, j_rung_mhz);
  return s;
}

LadderSpec device_ladder(int rungs, std::uint64_t seed, bool with_nnn) {
  if (rungs < 1) throw std::invalid_argument("device_ladder: need at least one rung");
  std::mt19937_64 rng(seed);
  auto draw = [&rng](std::size_t n, double mean, double sd) {
    std::normal_distribution<double> g(mean, sd);
    std::vector<double> v(n);
    for (auto& x : v) x = g(rng);
    return v;
  };
  const auto L = static_cast<std::size_t>(rungs);
  LadderSpec s;
  s.rungs = rungs;
  s.parallel_up = draw(L - 1, 7.3, 0.1);
  s.parallel_down = draw(L - 1, 7.3, 0.1);
  s.rung = draw(L, 6.6, 0.2);
  if (with_nnn) {
    s.diag_down = draw(L - 1, 1.5, 0.3);
    s.diag_up = draw(L - 1, 1.5, 0.3);
    s.nnn_up = draw(L >= 2 ? L - 2 : 0, 0.7, 0.2);
    s.nnn_down = draw(L >= 2 ? L - 2 : 0, 0.7, 0.2);
  }
  return s;
}

LadderSpec ladder_preset(const std::string& name, int rungs, std::uint64_t seed) {
  if (name == "uniform") return uniform_ladder(rungs, 7.3, 6.6);
  if (name == "hardcore") return device_ladder(rungs, seed, false);
  if (name == "device") return device_ladder(rungs, seed, true);
  throw std::invalid_argument("unknown ladder preset '" + name + "' (uniform, hardcore, device)");
}

LadderSpec with_qutrits(LadderSpec spec, double anharmonicity_mhz, bool scatter, std::uint64_t seed) {
  spec.local_dim = 3;
  spec.anharmonicity.assign(static_cast<std::size_t>(spec.n_sites()), anharmonicity_mhz);
  if (scatter) {
    std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
    std::normal_distribution<double> g(anharmonicity_mhz, 0.1 * anharmonicity_mhz);
    for (auto& e : spec.anharmonicity) e = g(rng);
  }
  return spec;
}

void DrivePlan::validate(int n_sites) const {
  if (omega_mhz.size() != static_cast<std::size_t>(n_sites) || phi.size() != omega_mhz.size())
    throw std::invalid_argument("DrivePlan: omega/phi must have one entry per site");
  for (double o : omega_mhz)
    if (!(o >= 0.0) || !std::isfinite(o)) throw std::invalid_argument("DrivePlan: omega must be finite and >= 0");
  for (double p : phi)
    if (!(p > -std::numbers::pi && p <= std::numbers::pi))
      throw std::invalid_argument("DrivePlan: phi must lie in (-pi, pi]");
  if (!(duration_ns >= 0.0)) throw std::invalid_argument("DrivePlan: duration must be >= 0");
}

SparseOperator build_interaction(const Lattice& lattice) {
  check_lattice(lattice, "build_interaction");
  if (lattice.local_dim != 2)
    throw std::invalid_argument("build_interaction: hard-core model requires local_dim = 2");
  return hopping_operator(lattice, [](Basis, const std::vector<Basis>&) { return 0.0; });
}

SparseOperator build_interaction(const LadderSpec& spec) { return build_interaction(spec.lattice()); }

SparseOperator build_bose_hubbard(const Lattice& lattice) {
  check_lattice(lattice, "build_bose_hubbard");
  if (lattice.local_dim != 3) throw std::invalid_argument("build_bose_hubbard: requires local_dim = 3");
  if (lattice.anharmonicity_mhz.size() != static_cast<std::size_t>(lattice.n_sites))
    throw std::invalid_argument("build_bose_hubbard: anharmonicity required for every site");
  std::vector<double> ec(lattice.anharmonicity_mhz.size());
  for (std::size_t s = 0; s < ec.size(); ++s) ec[s] = to_angular(lattice.anharmonicity_mhz[s]);
  return hopping_operator(lattice, [&](Basis r, const std::vector<Basis>& pw) {
    double e = 0.0;
    for (int s = 0; s < lattice.n_sites; ++s) {
      const int n = digit(r, s, 3, pw);
      e -= 0.5 * ec[s] * n * (n - 1);
    }
    return e;
  });
}

SparseOperator build_bose_hubbard(const LadderSpec& spec) {
  if (spec.local_dim != 3) throw std::invalid_argument("build_bose_hubbard: requires local_dim = 3");
  return build_bose_hubbard(spec.lattice());
}

SparseOperator build_drive(const Lattice& lattice, const DrivePlan& plan, std::span<const int> mask) {
  check_lattice(lattice, "build_drive");
  plan.validate(lattice.n_sites);
  std::vector<int> sites(mask.begin(), mask.end());
  if (sites.empty())
    for (int s = 0; s < lattice.n_sites; ++s) sites.push_back(s);
  for (int s : sites)
    if (s < 0 || s >= lattice.n_sites) throw std::out_of_range("build_drive: mask site out of range");

  const auto pw = digit_powers(lattice.n_sites, lattice.local_dim);
  const int d = lattice.local_dim;
  const std::size_t dim = lattice.dim();
  SparseOperator::Builder b(dim);
  for (Basis r = 0; r < dim; ++r) {
    for (int s : sites) {
      const double half = 0.5 * to_angular(plan.omega_mhz[s]);
      if (half == 0.0) continue;
      const cplx up = std::polar(half, -plan.phi[s]); // coefficient of sigma^+
      const int n = digit(r, s, d, pw);
      if (n >= 1) b.add(r - pw[s], up * std::sqrt(double(n)));
      if (n <= d - 2) b.add(r + pw[s], std::conj(up) * std::sqrt(double(n + 1)));
    }
    b.end_row();
  }
  return std::move(b).finish();
}

SparseOperator build_drive(const LadderSpec& spec, const DrivePlan& plan, std::span<const Site> mask) {
  std::vector<int> idx;
  for (const Site& s : mask) {
    if (s.rung < 1 || s.rung > spec.rungs) throw std::out_of_range("build_drive: site outside ladder");
    idx.push_back(s.index());
  }
  return build_drive(spec.lattice(), plan, idx);
}

SparseOperator build_onsite(const Lattice& lattice, const PotentialField& field) {
  check_lattice(lattice, "build_onsite");
  if (field.w_mhz.empty()) return SparseOperator::zero(lattice.dim());
  if (field.w_mhz.size() != static_cast<std::size_t>(lattice.n_sites))
    throw std::invalid_argument("build_onsite: field length must equal the number of sites");
  const auto pw = digit_powers(lattice.n_sites, lattice.local_dim);
  std::vector<double> diag(lattice.dim(), 0.0);
  for (Basis r = 0; r < diag.size(); ++r) {
    double e = 0.0;
    for (int s = 0; s < lattice.n_sites; ++s) e += to_angular(field.w_mhz[s]) * digit(r, s, lattice.local_dim, pw);
    diag[r] = e;
  }
  return SparseOperator::diagonal(diag);
}

SparseOperator build_onsite(const LadderSpec& spec, const PotentialField& field) {
  return build_onsite(spec.lattice(), field);
}

PotentialField sample_disorder(double w_mhz, std::uint64_t seed, int n_sites) {
  if (!(w_mhz >= 0.0)) throw std::invalid_argument("sample_disorder: W must be >= 0");
  PotentialField f{std::vector<double>(static_cast<std::size_t>(n_sites), 0.0)};
  if (w_mhz == 0.0) return f;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-w_mhz, w_mhz);
  for (auto& w : f.w_mhz) w = u(rng);
  return f;
}

PotentialField tilt_potential(double ws_mhz, int rungs) {
  if (rungs < 2) throw std::invalid_argument("tilt_potential: need at least two rungs");
  const double slope = 2.0 * ws_mhz / (rungs - 1);
  PotentialField f{std::vector<double>(static_cast<std::size_t>(2 * rungs))};
  for (int j = 1; j <= rungs; ++j) {
    f.w_mhz[Site{j, Leg::up}.index()] = slope * j;
    f.w_mhz[Site{j, Leg::down}.index()] = slope * j;
  }
  return f;
}

double leakage_probability(const StateVector& psi, const LadderSpec& spec) {
  if (spec.local_dim != 3) throw std::invalid_argument("leakage_probability: requires a qutrit state");
  if (psi.dim() != spec.dim()) throw std::invalid_argument("leakage_probability: dimension mismatch");
  const auto pw = digit_powers(spec.n_sites(), 3);
  double kept = 0.0;
  for (Basis k = 0; k < psi.dim(); ++k) {
    bool hard_core = true;
    for (int s = 0; s < spec.n_sites() && hard_core; ++s) hard_core = digit(k, s, 3, pw) <= 1;
    if (hard_core) kept += std::norm(psi[k]);
  }
  return std::clamp(1.0 - kept / psi.norm_squared(), 0.0, 1.0);
}

namespace {

Basis qutrit_index(Basis hardcore, int n_sites) {
  Basis k = 0;
  Basis p = 1;
  for (int s = 0; s < n_sites; ++s) {
    k += p * ((hardcore >> s) & 1u);
    p *= 3;
  }
  return k;
}

} // namespace

StateVector hardcore_to_qutrit(const StateVector& psi, int n_sites) {
  if (psi.dim() != safe_pow(2, n_sites)) throw std::invalid_argument("hardcore_to_qutrit: dimension mismatch");
  StateVector out(safe_pow(3, n_sites));
  for (Basis k = 0; k < psi.dim(); ++k) out[qutrit_index(k, n_sites)] = psi[k];
  return out;
}

StateVector project_hardcore(const StateVector& psi, int n_sites) {
  if (psi.dim() != safe_pow(3, n_sites)) throw std::invalid_argument("project_hardcore: dimension mismatch");
  StateVector out(safe_pow(2, n_sites));
  for (Basis k = 0; k < out.dim(); ++k) out[k] = psi[qutrit_index(k, n_sites)];
  return out;
}

Basis product_state(std::span<const int> occupations, int local_dim) {
  Basis k = 0;
  Basis p = 1;
  for (int n : occupations) {
    if (n < 0 || n >= local_dim) throw std::invalid_argument("product_state: occupation out of range");
    k += p * static_cast<Basis>(n);
    p *= static_cast<Basis>(local_dim);
  }
  return k;
}

} // namespace spinflow
