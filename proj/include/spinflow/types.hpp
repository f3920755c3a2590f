#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace spinflow {

using cplx = std::complex<double>;
using Basis = std::uint64_t;

// User-facing frequencies are ordinary MHz (X/2pi); Hamiltonians are rad/ns.
inline constexpr double kAngularPerMHz = 2.0 * std::numbers::pi * 1e-3;

inline constexpr double kEulerGamma = 0.57721566490153286061;

constexpr double to_angular(double mhz) { return kAngularPerMHz * mhz; }

/// Hilbert dimension exceeds the configured memory budget.
class DimensionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Krylov/ODE integration could not meet its error target.
class ConvergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A fit could not be performed on the supplied data.
class FitError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Largest full-vector dimension the builders and propagators accept.
/// Defaults to 2^22; the CLI exposes `--max-dim`.
std::size_t memory_budget();
void set_memory_budget(std::size_t max_dim);

/// Throws DimensionError with a hint when `dim` is over budget.
void check_dimension(std::size_t dim, const std::string& what);

} // namespace spinflow
