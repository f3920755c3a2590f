#include "spinflow/opensys.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <stdexcept>

#include "spinflow/seed.hpp"

namespace spinflow {

namespace {

void check_register(std::size_t dim, int n_sites, const char* what) {
  if (n_sites < 1 || n_sites > 40 || dim != (std::size_t{1} << n_sites))
    throw std::invalid_argument(std::string(what) + ": relaxation spec does not match a qubit register");
}

double excitations(Basis k) { return static_cast<double>(std::popcount(k)); }

// Applies sigma^-_site (|1> -> |0>) to psi.
StateVector lower(const StateVector& psi, int site) {
  StateVector out(psi.dim());
  const Basis bit = Basis{1} << site;
  for (Basis k = 0; k < psi.dim(); ++k)
    if (k & bit) out[k ^ bit] = psi[k];
  return out;
}

double site_population(const StateVector& psi, int site) {
  const Basis bit = Basis{1} << site;
  double p = 0.0;
  for (Basis k = 0; k < psi.dim(); ++k)
    if (k & bit) p += std::norm(psi[k]);
  return p;
}

} // namespace

void RelaxationSpec::validate() const {
  if (t1_ns.empty()) throw std::invalid_argument("RelaxationSpec: no sites");
  for (double t : t1_ns)
    if (!(t > 0.0)) throw std::invalid_argument("RelaxationSpec: T1 must be > 0");
}

DiagonalObservable sigma_z_observable(int n_sites, int site) {
  if (site < 0 || site >= n_sites) throw std::out_of_range("sigma_z_observable: site out of range");
  const std::size_t dim = std::size_t{1} << n_sites;
  DiagonalObservable o{"sz_" + std::to_string(site), std::vector<double>(dim)};
  for (Basis k = 0; k < dim; ++k) o.diagonal[k] = ((k >> site) & 1u) ? -1.0 : 1.0;
  return o;
}

DiagonalObservable number_observable(int n_sites, int local_dim) {
  if (local_dim != 2 && local_dim != 3) throw std::invalid_argument("number_observable: local_dim must be 2 or 3");
  std::size_t dim = 1;
  for (int s = 0; s < n_sites; ++s) dim *= static_cast<std::size_t>(local_dim);
  check_dimension(dim, "number_observable");
  DiagonalObservable o{"n", std::vector<double>(dim)};
  for (Basis k = 0; k < dim; ++k) {
    int count = 0;
    Basis rest = k;
    for (int s = 0; s < n_sites; ++s) {
      count += (rest % static_cast<Basis>(local_dim)) == 1;
      rest /= static_cast<Basis>(local_dim);
    }
    o.diagonal[k] = count;
  }
  return o;
}

SparseOperator effective_generator(const SparseOperator& h, const RelaxationSpec& relax) {
  relax.validate();
  check_register(h.dim(), relax.n_sites(), "effective_generator");
  SparseOperator::Builder b(h.dim(), false);
  for (Basis k = 0; k < h.dim(); ++k) {
    double rate = 0.0;
    for (int s = 0; s < relax.n_sites(); ++s)
      if ((k >> s) & 1u) rate += 1.0 / relax.t1_ns[s];
    b.add(k, cplx(0.0, -0.5 * rate));
    b.end_row();
  }
  return (h + std::move(b).finish()).with_hermitian_flag(false);
}

namespace {

// No-jump propagation under H_eff. When the decay rates commute with H
// (uniform T1 and number-conserving H) the generator factorises into
// e^{-iHt} e^{-Gamma t / 2} and the Hermitian Lanczos path is used.
class NoJumpPropagator {
public:
  NoJumpPropagator(const SparseOperator& h, const RelaxationSpec& relax, const KrylovConfig& cfg)
      : h_(h), g_(effective_generator(h, relax)), cfg_(cfg), gamma_(h.dim(), 0.0) {
    for (Basis k = 0; k < h.dim(); ++k)
      for (int s = 0; s < relax.n_sites(); ++s)
        if ((k >> s) & 1u) gamma_[k] += 1.0 / relax.t1_ns[s];
    const double scale = *std::max_element(gamma_.begin(), gamma_.end());
    commuting_ = h.hermitian();
    for (std::size_t r = 0; r < h.dim() && commuting_; ++r)
      for (auto c : h.row_columns(r))
        if (std::abs(gamma_[r] - gamma_[c]) > 1e-14 * scale) {
          commuting_ = false;
          break;
        }
  }

  StateVector advance(const StateVector& psi, double dt) const {
    if (dt <= 0.0) return psi;
    if (!commuting_) return evolve_general(g_, psi, dt, cfg_);
    StateVector out = evolve(h_, psi, dt, cfg_);
    for (std::size_t k = 0; k < out.dim(); ++k) out[k] *= std::exp(-0.5 * gamma_[k] * dt);
    return out;
  }

  bool commuting() const { return commuting_; }

private:
  const SparseOperator& h_;
  SparseOperator g_;
  KrylovConfig cfg_;
  std::vector<double> gamma_;
  bool commuting_ = false;
};

constexpr std::size_t kPathCacheBytes = std::size_t{512} << 20;

} // namespace

ObservableSeries evolve_trajectories(const SparseOperator& h, const RelaxationSpec& relax,
                                     const StateVector& psi0, std::span<const double> times,
                                     std::span<const DiagonalObservable> observables, std::size_t n_traj,
                                     std::uint64_t seed, const KrylovConfig& cfg) {
  if (n_traj == 0) throw std::invalid_argument("evolve_trajectories: n_traj must be >= 1");
  if (psi0.dim() != h.dim()) throw std::invalid_argument("evolve_trajectories: dimension mismatch");
  for (const auto& o : observables)
    if (o.diagonal.size() != h.dim()) throw std::invalid_argument("evolve_trajectories: observable size mismatch");
  relax.validate();
  check_register(h.dim(), relax.n_sites(), "evolve_trajectories");
  for (std::size_t i = 0; i < times.size(); ++i)
    if (!(times[i] >= (i ? times[i - 1] : 0.0)))
      throw std::invalid_argument("evolve_trajectories: times must be non-negative and non-decreasing");
  const NoJumpPropagator prop(h, relax, cfg);
  const int n_sites = relax.n_sites();
  const std::size_t n_obs = observables.size();
  const std::size_t n_t = times.size();

  StateVector start = psi0;
  start.normalize();

  // Every trajectory follows the same path until its first jump, so that
  // path is computed once: norm^2 and observables at each grid time.
  const bool use_cache = n_traj > 1 && n_t * h.dim() * sizeof(cplx) <= kPathCacheBytes;
  std::vector<StateVector> path;
  std::vector<double> path_norm2;
  std::vector<double> path_values(n_obs * n_t);
  if (use_cache) {
    StateVector psi = start;
    double now = 0.0;
    for (std::size_t i = 0; i < n_t; ++i) {
      psi = prop.advance(psi, times[i] - now);
      now = times[i];
      path_norm2.push_back(psi.norm_squared());
      for (std::size_t o = 0; o < n_obs; ++o) path_values[o * n_t + i] = expect_diagonal(psi, observables[o].diagonal);
      path.push_back(psi);
    }
  }

  // values[traj][obs * n_t + i]
  std::vector<std::vector<double>> values(n_traj, std::vector<double>(n_obs * n_t));
  std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic)
  for (std::int64_t traj = 0; traj < static_cast<std::int64_t>(n_traj); ++traj) {
    try {
      std::mt19937_64 rng(derive_seed(seed, {static_cast<std::uint64_t>(traj)}));
      std::uniform_real_distribution<double> uni(0.0, 1.0);
      auto& out = values[static_cast<std::size_t>(traj)];
      StateVector psi = start;
      double threshold = uni(rng);
      double now = 0.0;
      std::size_t i = 0;
      if (use_cache) {
        while (i < n_t && path_norm2[i] > threshold) {
          for (std::size_t o = 0; o < n_obs; ++o) out[o * n_t + i] = path_values[o * n_t + i];
          ++i;
        }
        if (i > 0 && i < n_t) {
          psi = path[i - 1];
          now = times[i - 1];
        }
      }
      for (; i < n_t; ++i) {
        while (now < times[i]) {
          const double span = times[i] - now;
          StateVector next = prop.advance(psi, span);
          if (next.norm_squared() > threshold) {
            psi = std::move(next);
            now = times[i];
            break;
          }
          // Locate the crossing to 1e-3 ns, always stepping forward from
          // the latest state known to be above the threshold.
          double lo = 0.0, hi = span;
          while (hi - lo > 1e-3) {
            const double mid = 0.5 * (lo + hi);
            StateVector trial = prop.advance(psi, mid - lo);
            if (trial.norm_squared() > threshold) {
              psi = std::move(trial);
              lo = mid;
            } else {
              hi = mid;
            }
          }
          psi = prop.advance(psi, hi - lo);
          now += hi;

          std::vector<double> weight(static_cast<std::size_t>(n_sites));
          for (int s = 0; s < n_sites; ++s) weight[s] = site_population(psi, s) / relax.t1_ns[s];
          const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
          if (!(total > 0.0)) throw ConvergenceError("evolve_trajectories: jump requested from a zero-rate state");
          double pick = uni(rng) * total;
          int site = n_sites - 1;
          for (int s = 0; s < n_sites; ++s) {
            if (pick < weight[s]) {
              site = s;
              break;
            }
            pick -= weight[s];
          }
          psi = lower(psi, site);
          if (psi.normalize() == 0.0) throw ConvergenceError("evolve_trajectories: zero-norm state after jump");
          threshold = uni(rng);
        }
        for (std::size_t o = 0; o < n_obs; ++o) out[o * n_t + i] = expect_diagonal(psi, observables[o].diagonal);
      }
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  ObservableSeries out;
  out.times_ns.assign(times.begin(), times.end());
  out.n_trajectories = n_traj;
  const double m = static_cast<double>(n_traj);
  for (std::size_t o = 0; o < n_obs; ++o) {
    out.names.push_back(observables[o].name);
    std::vector<double> mean(n_t, 0.0), se(n_t, 0.0);
    for (std::size_t i = 0; i < n_t; ++i) {
      for (std::size_t t = 0; t < n_traj; ++t) mean[i] += values[t][o * n_t + i];
      mean[i] /= m;
      if (n_traj > 1) {
        double ss = 0.0;
        for (std::size_t t = 0; t < n_traj; ++t) {
          const double d = values[t][o * n_t + i] - mean[i];
          ss += d * d;
        }
        se[i] = std::sqrt(ss / (m - 1.0) / m);
      }
    }
    out.mean.push_back(std::move(mean));
    out.std_error.push_back(std::move(se));
  }
  return out;
}

ObservableSeries dense_lindblad(const SparseOperator& h, const RelaxationSpec& relax,
                                const Eigen::MatrixXcd& rho0, std::span<const double> times,
                                std::span<const DiagonalObservable> observables, double dt_ns) {
  relax.validate();
  if (h.dim() > 64) throw DimensionError("dense_lindblad: dimension above 64");
  check_register(h.dim(), relax.n_sites(), "dense_lindblad");
  const auto d = static_cast<Eigen::Index>(h.dim());
  if (rho0.rows() != d || rho0.cols() != d) throw std::invalid_argument("dense_lindblad: rho0 has the wrong shape");
  if (!(dt_ns > 0.0)) throw std::invalid_argument("dense_lindblad: dt must be > 0");
  for (const auto& o : observables)
    if (o.diagonal.size() != h.dim()) throw std::invalid_argument("dense_lindblad: observable size mismatch");

  const Eigen::MatrixXcd hd = h.to_dense();
  std::vector<Eigen::MatrixXcd> jumps;
  Eigen::MatrixXcd loss = Eigen::MatrixXcd::Zero(d, d); // sum_j L_j^dag L_j
  for (int s = 0; s < relax.n_sites(); ++s) {
    Eigen::MatrixXcd l = Eigen::MatrixXcd::Zero(d, d);
    const Basis bit = Basis{1} << s;
    const double amp = 1.0 / std::sqrt(relax.t1_ns[s]);
    for (Basis k = 0; k < h.dim(); ++k)
      if (k & bit) l(static_cast<Eigen::Index>(k ^ bit), static_cast<Eigen::Index>(k)) = amp;
    loss += l.adjoint() * l;
    jumps.push_back(std::move(l));
  }
  const Eigen::MatrixXcd heff = hd - cplx(0.0, 0.5) * loss;
  auto rhs = [&](const Eigen::MatrixXcd& r) {
    Eigen::MatrixXcd out = cplx(0.0, -1.0) * (heff * r - r * heff.adjoint());
    for (const auto& l : jumps) out += l * r * l.adjoint();
    return out;
  };

  ObservableSeries series;
  series.times_ns.assign(times.begin(), times.end());
  for (const auto& o : observables) {
    series.names.push_back(o.name);
    series.mean.emplace_back(times.size(), 0.0);
    series.std_error.emplace_back(times.size(), 0.0);
  }

  Eigen::MatrixXcd rho = rho0;
  const double trace0 = rho.trace().real();
  double now = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < now) throw std::invalid_argument("dense_lindblad: times must be non-decreasing");
    const double span = times[i] - now;
    const auto steps = static_cast<long>(std::ceil(span / dt_ns - 1e-9));
    const double dt = steps > 0 ? span / static_cast<double>(steps) : 0.0;
    for (long s = 0; s < steps; ++s) {
      const Eigen::MatrixXcd k1 = rhs(rho);
      const Eigen::MatrixXcd k2 = rhs(rho + 0.5 * dt * k1);
      const Eigen::MatrixXcd k3 = rhs(rho + 0.5 * dt * k2);
      const Eigen::MatrixXcd k4 = rhs(rho + dt * k3);
      rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    now = times[i];
    if (std::abs(rho.trace().real() - trace0) > 1e-8)
      throw ConvergenceError("dense_lindblad: trace drift above 1e-8, reduce dt");
    const Eigen::MatrixXcd herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-8)
      throw ConvergenceError("dense_lindblad: density matrix lost positivity, reduce dt");
    for (std::size_t o = 0; o < observables.size(); ++o) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) acc += rho(k, k).real() * observables[o].diagonal[k];
      series.mean[o][i] = acc / rho.trace().real();
    }
  }
  return series;
}

double particle_number(const StateVector& psi, int n_sites) {
  check_register(psi.dim(), n_sites, "particle_number");
  double acc = 0.0;
  for (Basis k = 0; k < psi.dim(); ++k) acc += excitations(k) * std::norm(psi[k]);
  return acc / psi.norm_squared();
}

double particle_number(const Eigen::MatrixXcd& rho, int n_sites) {
  check_register(static_cast<std::size_t>(rho.rows()), n_sites, "particle_number");
  double acc = 0.0;
  for (Eigen::Index k = 0; k < rho.rows(); ++k) acc += excitations(static_cast<Basis>(k)) * rho(k, k).real();
  return acc / rho.trace().real();
}

} // namespace spinflow
