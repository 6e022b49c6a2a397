// Band-data classification: spectral flows through an energy window, the
// flow-sum and parity invariants, the coupled two-branch gap construction,
// and the pairing reduction with its exhaustive oracle.
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "dwscat/theory.hpp"

using namespace dwscat;

namespace {

// Leftover parity of one explicit pairing order: repeatedly remove the two
// lowest-index crossing entries according to the given priority permutation.
int pairing_leftover(std::vector<int> crossing, const std::vector<int>& order) {
  std::vector<int> queue;
  for (int idx : order)
    if (crossing[idx] != 0) queue.push_back(idx);
  return static_cast<int>(queue.size()) % 2;
}

}  // namespace

TEST(SpectralFlow, WindowRestrictedDiracBranches) {
  // Direct block, p = 1, window [1.5, 2.1]: one downward linear crossing, a
  // dispersive pair below the window bottom, one non-crossing arc inside.
  const std::vector<BranchCurve> h = dirac_block_branches(1, false, 8, 1.5,
                                                          2.1);
  ASSERT_EQ(h.size(), 4u);
  EXPECT_EQ(spectral_flow(h[0]), -1);  // linear E = -xi
  EXPECT_EQ(spectral_flow(h[1]) + spectral_flow(h[2]), 0);  // n = 1 pair
  EXPECT_EQ(std::abs(spectral_flow(h[1])), 1);
  EXPECT_EQ(spectral_flow(h[3]), 0);  // n = 2 arc, both ends at the top
  EXPECT_EQ(sigma_from_flows(h), -1);

  // Conjugate block: mirrored linear branch, opposite total flow.
  const std::vector<BranchCurve> hb = dirac_block_branches(1, true, 8, 1.5,
                                                           2.1);
  EXPECT_EQ(spectral_flow(hb[0]), +1);
  EXPECT_EQ(sigma_from_flows(hb), +1);

  // Every generated endpoint hits a window edge; a detached curve throws.
  for (const BranchCurve& b : h) EXPECT_NO_THROW(spectral_flow(b));
  BranchCurve bad = h[0];
  bad.xi_hi -= 0.05;
  EXPECT_THROW(spectral_flow(bad), std::invalid_argument);

  EXPECT_THROW(dirac_block_branches(1, false, 8, -0.5, 2.1),
               std::invalid_argument);
  EXPECT_THROW(dirac_block_branches(1, false, 8, 1.5, 2.0),
               band_edge_error);
}

TEST(SpectralFlow, SelectionAndModelSums) {
  // Balanced families: the selection half carries the invariant.
  for (const auto& [M, sigma, idx] :
       std::vector<std::tuple<int, int, int>>{{1, -1, -1},
                                              {2, -2, +1},
                                              {3, -3, -1}}) {
    const BlockModel model = build_model(M, M, 1);
    const std::vector<BranchCurve> sel =
        selection_branches(model, 8, 1.7, 1.9);
    EXPECT_EQ(sigma_from_flows(sel), sigma) << "M = " << M;
    EXPECT_EQ(index2_from_flows(sel), idx) << "M = " << M;
    // The full branch set is flow-neutral.
    EXPECT_EQ(sigma_from_flows(model_branches(model, 8, 1.7, 1.9)), 0);
  }

  // Chiral model: two downward linear families, the quantized difference.
  const BlockModel chiral = build_model(1, 0, 2);
  const std::vector<BranchCurve> all = model_branches(chiral, 8, 2.9, 3.1);
  EXPECT_EQ(sigma_from_flows(all), -2);
  EXPECT_EQ(index2_from_flows(all), +1);
}

TEST(GapAlpha, ClosedFormValuesAndGuards) {
  EXPECT_NEAR(gap_alpha(0.0, -1.0, 1.0, 0.1), 0.9, 1e-15);
  EXPECT_NEAR(gap_alpha(0.1, -1.0, 1.0, 0.1), 0.0, 1e-15);
  EXPECT_NEAR(gap_alpha(-0.1, -1.0, 1.0, 0.1), 0.0, 1e-15);
  const double e_minus = 1.5, e_plus = 2.1, delta = 0.12, xi = 0.07;
  const double alpha = gap_alpha(xi, e_minus, e_plus, delta);
  EXPECT_NEAR(alpha * alpha,
              std::pow(0.5 * (e_plus - e_minus - 2 * delta), 2) *
                  (1.0 - xi * xi / (delta * delta)),
              1e-15);
  EXPECT_GE(alpha, 0.0);
  EXPECT_THROW(gap_alpha(0.2, -1.0, 1.0, 0.1), std::invalid_argument);
  EXPECT_THROW(gap_alpha(0.0, -1.0, 1.0, 1.5), std::invalid_argument);
  EXPECT_THROW(gap_alpha(0.0, 1.0, -1.0, 0.1), std::invalid_argument);
}

TEST(CoupledSpectrum, ClosedFormWithDoubleDegeneracy) {
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double e1 = unif(gen), e2 = unif(gen),
                 alpha = std::abs(unif(gen));
    const CoupledLevels lv = coupled_spectrum(e1, e2, alpha);
    const double mid = 0.5 * (e1 + e2);
    const double rad = std::hypot(alpha, 0.5 * (e1 - e2));
    EXPECT_NEAR(lv.lam_minus, mid - rad, 1e-12);
    EXPECT_NEAR(lv.lam_plus, mid + rad, 1e-12);
  }
  const CoupledLevels free = coupled_spectrum(-0.4, 1.3, 0.0);
  EXPECT_NEAR(free.lam_minus, -0.4, 1e-14);
  EXPECT_NEAR(free.lam_plus, 1.3, 1e-14);
}

TEST(CoupledSpectrum, AffineConstructionPinsTheGapEdges) {
  // Affine branches crossing in the middle of the window, coupled with the
  // closed-form profile: the levels sit exactly delta inside the window on
  // the whole grid.
  const double e_minus = 1.5, e_plus = 2.1, delta = 0.12;
  const double slope = (e_plus - e_minus - 2.0 * delta) / (2.0 * delta);
  const double mid = 0.5 * (e_plus + e_minus);
  for (int i = 0; i <= 100; ++i) {
    const double xi = -delta + 2.0 * delta * i / 100.0;
    const double e1 = -slope * xi + mid;
    const double e2 = +slope * xi + mid;
    const CoupledLevels lv =
        coupled_spectrum(e1, e2, gap_alpha(xi, e_minus, e_plus, delta));
    EXPECT_NEAR(lv.lam_plus, e_plus - delta, 1e-12);
    EXPECT_NEAR(lv.lam_minus, e_minus + delta, 1e-12);
    // Spectrum expelled from the inner window.
    EXPECT_GE(lv.lam_plus - (e_plus - delta), -1e-12);
    EXPECT_GE((e_minus + delta) - lv.lam_minus, -1e-12);
  }
}

TEST(CoupledSpectrum, EigenvectorsFormPairedOrthogonalDoublets) {
  const double e1 = 1.62, e2 = 1.98, alpha = 0.23;
  const Eigen::Matrix4cd m = coupling_matrix(e1, e2, cplx(alpha, 0.0));
  // The block commutes with the antiunitary pairing J conj.
  Eigen::Matrix4cd J = Eigen::Matrix4cd::Zero();
  J.topRightCorner(2, 2) = -Eigen::Matrix2cd::Identity();
  J.bottomLeftCorner(2, 2) = Eigen::Matrix2cd::Identity();
  EXPECT_NEAR((J * m.conjugate() * J.inverse() - m).norm(), 0.0, 1e-14);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(m);
  for (int k = 0; k < 4; ++k) {
    const Eigen::Vector4cd v = es.eigenvectors().col(k);
    const Eigen::Vector4cd w = J * v.conjugate();
    // Partner stays an eigenvector at the same level, orthogonal to v.
    EXPECT_NEAR((m * w - es.eigenvalues()(k) * w).norm(), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(v.dot(w)), 0.0, 1e-12);
  }
}

TEST(GapPairing, ReductionExamplesAndFlowParity) {
  EXPECT_EQ(gap_pairing({+1}).residual_parity, 1);
  EXPECT_EQ(gap_pairing({+1}).index2, -1);
  EXPECT_EQ(gap_pairing({+1, -1}).residual_parity, 0);
  EXPECT_EQ(gap_pairing({+1, -1}).index2, +1);
  EXPECT_EQ(gap_pairing({+1, +1, -1}).residual_parity, 1);
  EXPECT_EQ(gap_pairing({+1, +1, -1}).index2, -1);
  EXPECT_EQ(gap_pairing({}).index2, +1);
  EXPECT_EQ(gap_pairing({0, 0, 0}).index2, +1);
  EXPECT_THROW(gap_pairing({2}), std::invalid_argument);

  // Randomized agreement with the flow-sum parity.
  std::mt19937 gen(20260814);
  std::uniform_int_distribution<int> flow(-1, 1);
  std::uniform_int_distribution<int> size(0, 12);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<int> flows(size(gen));
    int total = 0;
    for (int& f : flows) {
      f = flow(gen);
      total += f;
    }
    const GapPairing g = gap_pairing(flows);
    EXPECT_EQ(g.index2, (total % 2 == 0) ? +1 : -1);
  }
}

TEST(GapPairing, LeftoverParityIsPairingOrderIndependent) {
  // Exhaustive check on small multisets: every removal priority leaves the
  // same leftover parity.
  std::mt19937 gen(5);
  std::uniform_int_distribution<int> flow(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> flows(6);
    for (int& f : flows) f = flow(gen);
    std::vector<int> order = {0, 1, 2, 3, 4, 5};
    const int reference = pairing_leftover(flows, order);
    do {
      EXPECT_EQ(pairing_leftover(flows, order), reference);
    } while (std::next_permutation(order.begin(), order.end()));
    EXPECT_EQ(gap_pairing(flows).residual_parity, reference);
  }
}

TEST(GapPairing, CouplingScaleNeverChangesCrossingParity) {
  // Discretized homotopy: scale the coupling profile and count strict sign
  // changes of the two levels against the window midline.
  const double e_minus = 1.5, e_plus = 2.1, delta = 0.12;
  const double slope = (e_plus - e_minus - 2.0 * delta) / (2.0 * delta);
  const double mid = 0.5 * (e_plus + e_minus);
  for (const double mu : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    int crossings = 0;
    double prev_lo = 0.0, prev_hi = 0.0;
    for (int i = 0; i <= 100; ++i) {
      const double xi = -delta + 2.0 * delta * i / 100.0;
      const double e1 = -slope * xi + mid;
      const double e2 = +slope * xi + mid;
      const CoupledLevels lv = coupled_spectrum(
          e1, e2, mu * gap_alpha(xi, e_minus, e_plus, delta));
      if (i > 0) {
        if ((lv.lam_minus - mid) * prev_lo < 0.0) ++crossings;
        if ((lv.lam_plus - mid) * prev_hi < 0.0) ++crossings;
      }
      prev_lo = lv.lam_minus - mid;
      prev_hi = lv.lam_plus - mid;
    }
    EXPECT_EQ(crossings % 2, 0) << "mu = " << mu;
  }
}
