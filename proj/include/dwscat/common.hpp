// Shared aliases, constants and error types for the dwscat library.
#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace dwscat {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr cplx iu{0.0, 1.0};  // imaginary unit

// Requested spectral data sits on (or too close to) a band edge E^2 = beta_n^2,
// where the group velocity vanishes and current normalization is ill-defined.
class band_edge_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A leaf collocation system is singular or ill-conditioned, or a merge factor
// (I - R R) could not be inverted reliably.
class solver_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dwscat
