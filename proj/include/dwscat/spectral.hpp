// Spectral branches of the block Hamiltonians and mode enumeration at a
// fixed energy.
//
// After separating the y-direction in Hermite functions, each h block reduces
// to the fiber matrix
//   h_p(xi) - E = [[xi - E, beta_n], [beta_n, -(xi + E)]]
// acting on the Hermite-level pair (n-p, n), with beta_n^2 = 2^p n!/(n-p)!.
// Dispersive branches satisfy E^2 = xi^2 + beta_n^2; levels n < p carry a
// single linear branch (E = -xi on h blocks, E = +xi on conjugate blocks).
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "dwscat/common.hpp"
#include "dwscat/model.hpp"

namespace dwscat {

// beta_n for ladder power p; zero when n < p. Computed by iterative products
// (no factorials are formed).
inline double ladder_coeff(int n, int p) {
  if (n < 0 || p < 1) throw std::invalid_argument("ladder_coeff: bad n or p");
  if (n < p) return 0.0;
  double beta2 = 1.0;
  for (int k = n - p + 1; k <= n; ++k) beta2 *= 2.0 * k;
  return std::sqrt(beta2);
}

// Wavenumber of branch (n, eps) at energy E.
//   n >= p: xi = eps sqrt(E^2 - beta_n^2), principal root with positive
//           imaginary part for eps = +1 in the evanescent regime, so that
//           e^{i xi x} decays as x -> +infinity.
//   n <  p: xi = eps E (linear branch).
inline cplx branch_xi(double E, int n, int p, int eps) {
  if (eps != 1 && eps != -1) throw std::invalid_argument("branch_xi: eps");
  if (n < 0 || p < 1) throw std::invalid_argument("branch_xi: bad n or p");
  if (n < p) return cplx(eps * E, 0.0);
  const double beta = ladder_coeff(n, p);
  const double d = E * E - beta * beta;
  if (std::abs(d) <= 1e-12)
    throw band_edge_error("branch_xi: E^2 - beta_n^2 = " + std::to_string(d) +
                          " at n = " + std::to_string(n));
  if (d > 0.0) return cplx(eps * std::sqrt(d), 0.0);
  return cplx(0.0, eps * std::sqrt(-d));
}

// Normalized spinor profile (upper on level n-p, lower on level n).
// h blocks:        (beta_n, E - xi) / norm
// conjugate blocks: (beta_n, E + xi) / norm
struct ModeProfile {
  cplx upper;
  cplx lower;
};

inline ModeProfile mode_profile(double E, int n, int p, int eps,
                                bool conjugated) {
  const cplx xi = branch_xi(E, n, p, eps);
  if (n < p) {
    // Single linear branch per level: E = -xi on h, E = +xi on conjugate
    // blocks; the other sign is not in the spectrum.
    const int valid_eps = conjugated ? +1 : -1;
    if (eps != valid_eps)
      throw std::invalid_argument(
          "mode_profile: linear branch carries only eps = " +
          std::to_string(valid_eps) + " on this block type");
    return {cplx(0.0, 0.0), cplx(1.0, 0.0)};
  }
  const double beta = ladder_coeff(n, p);
  const cplx second = conjugated ? (E + xi) : (E - xi);
  const double norm = std::sqrt(beta * beta + std::norm(second));
  return {beta / norm, second / norm};
}

enum class ModeKind { PropRight, PropLeft, EvanRight, EvanLeft };

struct Mode {
  int block = 0;  // 0-based; blocks >= M are conjugate blocks
  bool conjugated = false;
  int n = 0;    // Hermite level of the lower component
  int eps = 1;  // branch sign
  cplx xi;
  double current = 0.0;  // zero for evanescent modes
  cplx upper_coeff;      // lives on Hermite level n - p
  cplx lower_coeff;      // lives on Hermite level n
  ModeKind kind = ModeKind::PropRight;

  bool propagating() const {
    return kind == ModeKind::PropRight || kind == ModeKind::PropLeft;
  }
  bool right_going() const {
    return kind == ModeKind::PropRight || kind == ModeKind::EvanRight;
  }
};

// Analytic current dE/dxi of a propagating mode: xi/E on dispersive
// branches, -1 (h) / +1 (conjugate) on linear branches. Zero for evanescent
// input by convention.
inline double mode_current(const Mode& mode, double E) {
  if (mode.xi.imag() != 0.0) return 0.0;
  if (mode.upper_coeff == cplx(0.0, 0.0))  // linear branch (n < p)
    return mode.conjugated ? 1.0 : -1.0;
  return mode.xi.real() / E;
}

struct ModeBasis {
  double energy = 0.0;
  std::vector<Mode> modes;  // propagating (right, then left), then evanescent
  int n_plus = 0;           // right-propagating count
  int n_minus = 0;          // left-propagating count
  int n_evan = 0;

  // Index maps into `modes` for the two travel directions, propagating first.
  std::vector<int> right_list;
  std::vector<int> left_list;
};

// Every mode (block, n <= n_mode_max, eps) admitted by the index-set rules:
// levels n >= p carry both signs; n < p carries eps = -1 on h blocks and
// eps = +1 on conjugate blocks.
inline ModeBasis enumerate_modes(const BlockModel& model, double E,
                                 int n_mode_max) {
  if (n_mode_max < model.p)
    throw std::invalid_argument("enumerate_modes: n_mode_max below p");
  for (int n = model.p; n <= n_mode_max; ++n)
    if (std::abs(std::abs(E) - ladder_coeff(n, model.p)) <= 1e-9)
      throw band_edge_error("enumerate_modes: E within 1e-9 of band edge n = " +
                            std::to_string(n));
  if (ladder_coeff(n_mode_max + 1, model.p) < std::abs(E))
    throw std::invalid_argument(
        "enumerate_modes: n_mode_max misses propagating levels");

  ModeBasis basis;
  basis.energy = E;
  for (int b = 0; b < model.blocks(); ++b) {
    const bool conj = model.conjugated(b);
    for (int n = 0; n <= n_mode_max; ++n) {
      std::vector<int> signs;
      if (n < model.p)
        signs = {conj ? +1 : -1};
      else
        signs = {+1, -1};
      for (int eps : signs) {
        Mode mode;
        mode.block = b;
        mode.conjugated = conj;
        mode.n = n;
        mode.eps = eps;
        mode.xi = branch_xi(E, n, model.p, eps);
        const ModeProfile prof = mode_profile(E, n, model.p, eps, conj);
        mode.upper_coeff = prof.upper;
        mode.lower_coeff = prof.lower;
        if (mode.xi.imag() == 0.0) {
          mode.current = mode_current(mode, E);
          mode.kind = mode.current > 0.0 ? ModeKind::PropRight
                                         : ModeKind::PropLeft;
        } else {
          mode.current = 0.0;
          mode.kind = mode.xi.imag() > 0.0 ? ModeKind::EvanRight
                                           : ModeKind::EvanLeft;
        }
        basis.modes.push_back(mode);
      }
    }
  }

  // Deterministic ordering: propagating right-movers, propagating
  // left-movers, then evanescent by increasing decay rate; ties and groups
  // ordered by (block, n, eps).
  auto group = [](const Mode& m) {
    if (m.kind == ModeKind::PropRight) return 0;
    if (m.kind == ModeKind::PropLeft) return 1;
    return 2;
  };
  std::sort(basis.modes.begin(), basis.modes.end(),
            [&](const Mode& a, const Mode& b) {
              if (group(a) != group(b)) return group(a) < group(b);
              const double da = std::abs(a.xi.imag()), db = std::abs(b.xi.imag());
              if (group(a) == 2 && da != db) return da < db;
              if (a.block != b.block) return a.block < b.block;
              if (a.n != b.n) return a.n < b.n;
              return a.eps > b.eps;
            });

  for (int i = 0; i < static_cast<int>(basis.modes.size()); ++i) {
    const Mode& m = basis.modes[i];
    switch (m.kind) {
      case ModeKind::PropRight:
        ++basis.n_plus;
        basis.right_list.push_back(i);
        break;
      case ModeKind::PropLeft:
        ++basis.n_minus;
        basis.left_list.push_back(i);
        break;
      case ModeKind::EvanRight:
        ++basis.n_evan;
        basis.right_list.push_back(i);
        break;
      case ModeKind::EvanLeft:
        ++basis.n_evan;
        basis.left_list.push_back(i);
        break;
    }
  }
  return basis;
}

// Kramers partner of mode index i in an M = N model: block s <-> s + M at
// frequency -conj(xi).  Propagating partners travel the opposite way
// (branch sign flips); evanescent partners decay the same way (sign kept).
inline int kramers_partner(const ModeBasis& basis, const BlockModel& model,
                           int i) {
  if (!model.ftr_symmetric)
    throw std::invalid_argument("kramers_partner: requires M == N");
  const Mode& m = basis.modes[i];
  const int pb = m.conjugated ? m.block - model.M : m.block + model.M;
  const int peps = (m.xi.imag() == 0.0) ? -m.eps : m.eps;
  for (int j = 0; j < static_cast<int>(basis.modes.size()); ++j) {
    const Mode& c = basis.modes[j];
    if (c.block == pb && c.n == m.n && c.eps == peps) return j;
  }
  throw std::logic_error("kramers_partner: partner not found");
}

}  // namespace dwscat
