#pragma once
// Band-data classification: spectral flow of dispersion branches through an
// energy window, the conductivity and parity invariants derived from the
// flows, and the explicit two-branch coupling that opens a gap in the window
// without changing any flow.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dwscat/spectral.hpp"

namespace dwscat {

// One connected piece of a dispersion branch restricted to the energy window
// [window_lo, window_hi]; its endpoint energies must sit on the window edges.
struct BranchCurve {
  double xi_lo = 0.0;
  double xi_hi = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::function<double(double)> energy;
  std::string label;
};

// +1 for an upward crossing of the window, -1 downward, 0 when the curve
// enters and leaves through the same edge.
inline int spectral_flow(const BranchCurve& branch) {
  auto edge = [&](double e) -> int {
    if (std::abs(e - branch.window_hi) <= 1e-9) return +1;
    if (std::abs(e - branch.window_lo) <= 1e-9) return -1;
    std::ostringstream msg;
    msg << "spectral_flow: endpoint energy " << e
        << " lies on neither window edge of " << branch.label;
    throw std::invalid_argument(msg.str());
  };
  return (edge(branch.energy(branch.xi_hi)) -
          edge(branch.energy(branch.xi_lo))) /
         2;
}

inline int sigma_from_flows(const std::vector<BranchCurve>& branches) {
  int sum = 0;
  for (const BranchCurve& b : branches) sum += spectral_flow(b);
  return sum;
}

inline int index2_from_flows(const std::vector<BranchCurve>& branches) {
  const int flow = sigma_from_flows(branches);
  return (flow % 2 == 0) ? +1 : -1;
}

// Window restriction of the closed-form branches of one generalized Dirac
// block: p linear families (one sign per block type) and the upper sheets
// E = sqrt(xi^2 + beta_n^2) of the dispersive families.
inline std::vector<BranchCurve> dirac_block_branches(int p, bool conjugated,
                                                     int n_max, double e_lo,
                                                     double e_hi) {
  if (!(0.0 < e_lo && e_lo < e_hi))
    throw std::invalid_argument(
        "dirac_block_branches: window must satisfy 0 < E- < E+");
  std::vector<BranchCurve> out;
  auto curve = [&](double a, double b, std::function<double(double)> f,
                   const std::string& label) {
    BranchCurve c;
    c.xi_lo = a;
    c.xi_hi = b;
    c.window_lo = e_lo;
    c.window_hi = e_hi;
    c.energy = std::move(f);
    c.label = label;
    out.push_back(std::move(c));
  };
  for (int n = 0; n < p; ++n) {
    std::ostringstream label;
    label << (conjugated ? "conj-linear n=" : "linear n=") << n;
    if (conjugated)
      curve(e_lo, e_hi, [](double xi) { return xi; }, label.str());
    else
      curve(-e_hi, -e_lo, [](double xi) { return -xi; }, label.str());
  }
  for (int n = p; n <= n_max; ++n) {
    const double beta = ladder_coeff(n, p);
    if (std::abs(beta - e_lo) <= 1e-9 || std::abs(beta - e_hi) <= 1e-9)
      throw band_edge_error(
          "dirac_block_branches: window edge touches a band edge");
    if (beta >= e_hi) continue;
    auto disp = [beta](double xi) { return std::hypot(xi, beta); };
    std::ostringstream label;
    label << (conjugated ? "conj-dispersive n=" : "dispersive n=") << n;
    const double xi_out = std::sqrt(e_hi * e_hi - beta * beta);
    if (beta > e_lo) {
      curve(-xi_out, xi_out, disp, label.str());
    } else {
      const double xi_in = std::sqrt(e_lo * e_lo - beta * beta);
      curve(xi_in, xi_out, disp, label.str() + " right");
      curve(-xi_out, -xi_in, disp, label.str() + " left");
    }
  }
  return out;
}

// All branches of a block model through the window.
inline std::vector<BranchCurve> model_branches(const BlockModel& model,
                                               int n_max, double e_lo,
                                               double e_hi) {
  std::vector<BranchCurve> out;
  for (int b = 0; b < model.blocks(); ++b) {
    std::vector<BranchCurve> blk = dirac_block_branches(
        model.p, model.conjugated(b), n_max, e_lo, e_hi);
    out.insert(out.end(), std::make_move_iterator(blk.begin()),
               std::make_move_iterator(blk.end()));
  }
  return out;
}

// One representative per time-reversal pair: the direct (non-conjugate)
// blocks.  For balanced models the invariant parity is read off this half.
inline std::vector<BranchCurve> selection_branches(const BlockModel& model,
                                                   int n_max, double e_lo,
                                                   double e_hi) {
  std::vector<BranchCurve> out;
  for (int b = 0; b < model.M; ++b) {
    std::vector<BranchCurve> blk =
        dirac_block_branches(model.p, false, n_max, e_lo, e_hi);
    out.insert(out.end(), std::make_move_iterator(blk.begin()),
               std::make_move_iterator(blk.end()));
  }
  return out;
}

// Coupling profile that expels the two-branch spectrum from the inner window
// (E- + delta, E+ - delta): |alpha|^2 = ((E+ - E- - 2 delta)/2)^2 (1 -
// xi^2/delta^2) on |xi| <= delta, vanishing at the ends.
inline double gap_alpha(double xi, double e_minus, double e_plus,
                        double delta) {
  if (!(delta > 0.0) || !(e_plus - e_minus > 2.0 * delta))
    throw std::invalid_argument(
        "gap_alpha: requires E+ - E- > 2 delta > 0");
  if (std::abs(xi) > delta)
    throw std::invalid_argument("gap_alpha: |xi| exceeds delta");
  return 0.5 * (e_plus - e_minus - 2.0 * delta) *
         std::sqrt(std::max(0.0, 1.0 - (xi * xi) / (delta * delta)));
}

// The doubled two-level coupling block: branch energies E1, E2 and their
// time-reversal partners, coupled antisymmetrically so the whole matrix
// stays symmetric under the antiunitary pairing.
inline Eigen::Matrix4cd coupling_matrix(double e1, double e2, cplx alpha) {
  Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
  m(0, 0) = e1;
  m(1, 1) = e2;
  m(2, 2) = e1;
  m(3, 3) = e2;
  m(0, 3) = alpha;
  m(3, 0) = std::conj(alpha);
  m(1, 2) = -alpha;
  m(2, 1) = -std::conj(alpha);
  return m;
}

struct CoupledLevels {
  double lam_minus = 0.0;
  double lam_plus = 0.0;
};

// Numerical eigenvalues of the coupling block, checked against the closed
// form (E1+E2)/2 -+/+ sqrt(|alpha|^2 + (E1-E2)^2/4) with double degeneracy.
inline CoupledLevels coupled_spectrum(double e1, double e2, double alpha) {
  const Eigen::Matrix4cd m = coupling_matrix(e1, e2, cplx(alpha, 0.0));
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(m);
  const Eigen::Vector4d ev = es.eigenvalues();
  const double mid = 0.5 * (e1 + e2);
  const double rad = std::hypot(alpha, 0.5 * (e1 - e2));
  const double scale =
      std::max({1.0, std::abs(e1), std::abs(e2), std::abs(alpha)});
  const double defect =
      std::max({std::abs(ev(0) - (mid - rad)), std::abs(ev(1) - (mid - rad)),
                std::abs(ev(2) - (mid + rad)),
                std::abs(ev(3) - (mid + rad))});
  if (defect > 1e-12 * scale)
    throw solver_error(
        "coupled_spectrum: eigenvalues depart from the closed form");
  CoupledLevels lv;
  lv.lam_minus = 0.5 * (ev(0) + ev(1));
  lv.lam_plus = 0.5 * (ev(2) + ev(3));
  return lv;
}

// Pairing reduction on a multiset of flows: non-crossing branches are
// removed, crossing ones are paired off, and only the leftover count mod 2
// survives.  The parity always agrees with the flow-sum parity because each
// crossing contributes an odd unit.
struct GapPairing {
  int residual_parity = 0;
  int index2 = +1;
};

inline GapPairing gap_pairing(const std::vector<int>& flows) {
  int crossing = 0, total = 0;
  for (int f : flows) {
    if (f < -1 || f > 1)
      throw std::invalid_argument("gap_pairing: flows must lie in {-1,0,1}");
    crossing += (f != 0) ? 1 : 0;
    total += f;
  }
  GapPairing g;
  g.residual_parity = crossing % 2;
  g.index2 = (g.residual_parity == 0) ? +1 : -1;
  if (((total % 2) + 2) % 2 != g.residual_parity)
    throw std::logic_error("gap_pairing: parity bookkeeping failure");
  return g;
}

}  // namespace dwscat
