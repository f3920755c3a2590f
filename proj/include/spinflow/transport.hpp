#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spinflow/haar.hpp"
#include "spinflow/model.hpp"
#include "spinflow/propagator.hpp"

namespace spinflow {

/// Equal-site autocorrelation of rho_1 = (sigma^z_{1,up} + sigma^z_{1,down}) / 2.
///
/// Component order is c_{mu;nu} with (mu, nu) =
/// (up, up), (up, down), (down, up), (down, down); c11 is their mean.
struct CorrelationSeries {
  std::vector<double> times_ns;
  std::array<std::vector<double>, 4> c;
  std::vector<double> c11;
  std::vector<double> stderr_c11; // standard error of the mean; zeros if n == 1
  std::size_t n_realizations = 1;

  std::size_t size() const { return times_ns.size(); }
};

/// Index into CorrelationSeries::c for (mu, nu).
constexpr std::size_t component_index(Leg mu, Leg nu) {
  return static_cast<std::size_t>(mu) * 2 + static_cast<std::size_t>(nu);
}

/// Settings for the random-state (typicality) estimator.
struct TypicalityConfig {
  double t_r_ns = 200.0;
  DriveDistribution drive;
  KrylovConfig krylov;
};

/// Typicality estimate: for nu in {(1,up), (1,down)} and every seed, prepare
/// |0>_nu (x) |psi_R> with psi_R generated on the ladder minus nu, evolve
/// under H_I + H_Z(field), and record <sigma^z_mu>. Averaged over seeds.
CorrelationSeries measure_autocorrelation(const LadderSpec& spec, const PotentialField& field,
                                          const TypicalityConfig& cfg,
                                          std::span<const double> times,
                                          std::span<const std::uint64_t> seeds);

/// Exact trace (1/D) sum_k <k| sigma^z_mu(t) sigma^z_nu |k>. D <= 4096.
CorrelationSeries exact_autocorrelation(const LadderSpec& spec, const PotentialField& field,
                                        std::span<const double> times,
                                        const KrylovConfig& cfg = {});

/// <psi0| rho_1(t) rho_1 |psi0> for a computational basis state.
std::vector<double> product_state_autocorrelation(const LadderSpec& spec,
                                                  const PotentialField& field, Basis psi0,
                                                  std::span<const double> times,
                                                  const KrylovConfig& cfg = {});

/// Half-filled product state with `walls` domain walls split over the two
/// legs (along-leg neighbours with different occupation). Rung 1 is equally
/// occupied on both legs so that rho_1 |psi0> is non-zero, and the walls
/// are placed as far from rung 1 as the count allows.
Basis domain_wall_state(int rungs, int walls);
int count_domain_walls(Basis state, int rungs);

/// Pointwise mean over realizations; stderr is the standard error of c11
/// across realizations. A single realization is returned unchanged.
CorrelationSeries average_series(std::span<const CorrelationSeries> realizations);

struct PowerLawFit {
  double alpha = 0.0;
  double alpha_stderr = 0.0;
  std::pair<double, double> window_ns{0.0, 0.0};
  double r_squared = 0.0;
  std::size_t n_points = 0;
};

/// OLS on (ln t, ln C) over t in [lo, hi]; alpha = -slope. Points with
/// C <= 0 are dropped; at least 4 must survive (FitError otherwise).
/// With per-point stderr the slope error is propagated from it, otherwise
/// the residual-based OLS standard error is reported.
PowerLawFit fit_power_law(std::span<const double> times, std::span<const double> values,
                          std::span<const double> stderr_values,
                          std::pair<double, double> window_ns);
PowerLawFit fit_power_law(const CorrelationSeries& series, std::pair<double, double> window_ns);

enum class TransportClass { diffusive, subdiffusive, frozen };

struct ClassifyThresholds {
  double frozen_below = 0.05;
  double diffusive_center = 0.5;
  double diffusive_halfwidth = 0.1;
};

TransportClass classify_transport(const PowerLawFit& fit, const ClassifyThresholds& th = {});
std::string to_string(TransportClass c);

} // namespace spinflow
