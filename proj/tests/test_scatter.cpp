// Slab scattering data: free-slab diagonals, composition of adjacent slabs
// against a direct solve, associativity, the physical scattering matrix with
// its unitarity and trace identities, and the time-reversal constraints with
// their signed pairing permutation.
#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "dwscat/scatter.hpp"

using namespace dwscat;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;

TEST(FreeSlab, DiagonalPhasesAndContractions) {
  const BlockModel model = build_model(1, 1, 1);
  const double E = 1.8;
  const ModeBasis basis = enumerate_modes(model, E, 12);
  const TRMatrix tr = free_tr(basis, 0.25, 1.5);
  EXPECT_EQ(tr.Rp.norm(), 0.0);
  EXPECT_EQ(tr.Rm.norm(), 0.0);
  for (int k = 0; k < static_cast<int>(basis.right_list.size()); ++k) {
    const Mode& m = basis.modes[basis.right_list[k]];
    EXPECT_NEAR(std::abs(tr.Tp(k, k) - std::exp(iu * m.xi * 1.25)), 0.0,
                1e-15);
    // Propagating entries are phases, evanescent ones decay.
    if (m.propagating())
      EXPECT_NEAR(std::abs(tr.Tp(k, k)), 1.0, 1e-14);
    else
      EXPECT_LT(std::abs(tr.Tp(k, k)), 1.0);
  }
  for (int k = 0; k < static_cast<int>(basis.left_list.size()); ++k) {
    const Mode& m = basis.modes[basis.left_list[k]];
    EXPECT_NEAR(std::abs(tr.Tm(k, k) - std::exp(-iu * m.xi * 1.25)), 0.0,
                1e-15);
    EXPECT_LE(std::abs(tr.Tm(k, k)), 1.0 + 1e-14);
  }

  // A solved slab with a vanishing perturbation reduces to the free one.
  LeafOptions opts;
  opts.n_x = 8;
  opts.n_y = 11;
  const ModeBasis small = enumerate_modes(model, E, opts.n_y + model.p);
  const TRMatrix solved = leaf_tr(model, E, zero_perturbation(4, 1.0), 0.25,
                                  1.5, small, opts);
  const TRMatrix free_ref = free_tr(small, 0.25, 1.5);
  EXPECT_NEAR((solved.Tp - free_ref.Tp).cwiseAbs().maxCoeff(), 0.0, 1e-13);
  EXPECT_NEAR((solved.Tm - free_ref.Tm).cwiseAbs().maxCoeff(), 0.0, 1e-13);
  EXPECT_EQ(solved.Rp.norm(), 0.0);
  EXPECT_EQ(solved.Rm.norm(), 0.0);
}

TEST(MergeTr, FreeSlabsComposeAndAdjacencyIsChecked) {
  const BlockModel model = build_model(1, 1, 1);
  const ModeBasis basis = enumerate_modes(model, 1.8, 10);
  const TRMatrix left = free_tr(basis, 0.0, 0.3);
  const TRMatrix right = free_tr(basis, 0.3, 1.0);
  const TRMatrix whole = free_tr(basis, 0.0, 1.0);
  const TRMatrix merged = merge_tr(left, right);
  EXPECT_NEAR((merged.Tp - whole.Tp).cwiseAbs().maxCoeff(), 0.0, 1e-15);
  EXPECT_NEAR((merged.Tm - whole.Tm).cwiseAbs().maxCoeff(), 0.0, 1e-15);
  EXPECT_EQ(merged.Rp.norm(), 0.0);
  EXPECT_EQ(merged.Rm.norm(), 0.0);
  EXPECT_EQ(merged.a, 0.0);
  EXPECT_EQ(merged.b, 1.0);
  EXPECT_THROW(merge_tr(left, free_tr(basis, 0.5, 1.0)),
               std::invalid_argument);
}

TEST(MergeTr, DirectSolveEqualsComposedHalves) {
  // One slab solved whole versus the composition of its two halves: the
  // multiple-scattering resummation must reproduce the direct solve.
  const BlockModel model = build_model(1, 1, 1);
  const double E = 1.8;
  const PerturbationSpec V = perturbation_library("V_TR", E, 1.0);
  const int n_y = 16;
  const ModeBasis basis = enumerate_modes(model, E, n_y + model.p);
  LeafOptions od;
  od.n_x = 20;
  od.n_y = n_y;
  const TRMatrix direct = leaf_tr(model, E, V, 0.0, 1.0, basis, od);
  LeafOptions oh;
  oh.n_x = 16;
  oh.n_y = n_y;
  const TRMatrix merged =
      merge_tr(leaf_tr(model, E, V, 0.0, 0.5, basis, oh),
               leaf_tr(model, E, V, 0.5, 1.0, basis, oh));
  EXPECT_NEAR((extract_smatrix(direct, basis) - extract_smatrix(merged, basis))
                  .cwiseAbs()
                  .maxCoeff(),
              0.0, 1e-12);
  EXPECT_NEAR((direct.Tp - merged.Tp).cwiseAbs().maxCoeff(), 0.0, 1e-11);
  EXPECT_NEAR((direct.Rp - merged.Rp).cwiseAbs().maxCoeff(), 0.0, 1e-11);
  EXPECT_NEAR((direct.Tm - merged.Tm).cwiseAbs().maxCoeff(), 0.0, 1e-11);
  EXPECT_NEAR((direct.Rm - merged.Rm).cwiseAbs().maxCoeff(), 0.0, 1e-11);
}

TEST(MergeTr, CompositionIsAssociative) {
  const BlockModel model = build_model(1, 1, 1);
  const double E = 1.8;
  const PerturbationSpec V = perturbation_library("V_TR", E, 1.0);
  LeafOptions opts;
  opts.n_x = 10;
  opts.n_y = 12;
  const ModeBasis basis = enumerate_modes(model, E, opts.n_y + model.p);
  std::vector<TRMatrix> leaves;
  for (int k = 0; k < 3; ++k)
    leaves.push_back(
        leaf_tr(model, E, V, 0.25 * k, 0.25 * (k + 1), basis, opts));
  const TRMatrix left_first =
      merge_tr(merge_tr(leaves[0], leaves[1]), leaves[2]);
  const TRMatrix right_first =
      merge_tr(leaves[0], merge_tr(leaves[1], leaves[2]));
  EXPECT_NEAR((left_first.Tp - right_first.Tp).cwiseAbs().maxCoeff(), 0.0,
              1e-13);
  EXPECT_NEAR((left_first.Rp - right_first.Rp).cwiseAbs().maxCoeff(), 0.0,
              1e-13);
  EXPECT_NEAR((left_first.Tm - right_first.Tm).cwiseAbs().maxCoeff(), 0.0,
              1e-13);
  EXPECT_NEAR((left_first.Rm - right_first.Rm).cwiseAbs().maxCoeff(), 0.0,
              1e-13);
}

TEST(ChainTr, PrefixSweepMatchesChainAndPairMerges) {
  const BlockModel model = build_model(1, 1, 1);
  const double E = 1.8;
  const PerturbationSpec V = perturbation_library("V_TR", E, 1.0);
  ChainOptions copts;
  copts.max_leaf_len = 0.25;
  copts.leaf.n_x = 10;
  copts.leaf.n_y = 12;
  const ModeBasis basis =
      enumerate_modes(model, E, copts.leaf.n_y + model.p);
  std::vector<TRMatrix> leaves;
  for (int k = 0; k < 4; ++k)
    leaves.push_back(leaf_tr(model, E, V, 0.25 * k, 0.25 * (k + 1), basis,
                             copts.leaf));
  const std::vector<TRMatrix> sweep = prefix_sweep(
      model, E, V, 0.0, 0.25, std::vector<int>{2, 4}, basis, copts);
  ASSERT_EQ(sweep.size(), 2u);
  EXPECT_NEAR((sweep[0].Tp - merge_tr(leaves[0], leaves[1]).Tp)
                  .cwiseAbs()
                  .maxCoeff(),
              0.0, 1e-13);
  const TRMatrix chain = chain_tr(model, E, V, 0.0, 1.0, basis, copts);
  EXPECT_NEAR((sweep[1].Tp - chain.Tp).cwiseAbs().maxCoeff(), 0.0, 1e-13);
  EXPECT_NEAR(chain.a, 0.0, 0.0);
  EXPECT_NEAR(chain.b, 1.0, 1e-15);

  // The worker-pool path must produce the same leaves as the serial one.
  ChainOptions pooled = copts;
  pooled.workers = 3;
  const TRMatrix chain_pooled =
      chain_tr(model, E, V, 0.0, 1.0, basis, pooled);
  EXPECT_EQ((chain.Tp - chain_pooled.Tp).norm(), 0.0);
  EXPECT_EQ((chain.Rm - chain_pooled.Rm).norm(), 0.0);
}

TEST(SMatrix, UnitaryWithFrozenObservables) {
  // Single perturbed slab; the reference numbers are pinned at this exact
  // resolution.
  const BlockModel model = build_model(1, 1, 1);
  const double E = 1.8;
  const PerturbationSpec V = perturbation_library("V_TR", E, 1.0);
  LeafOptions opts;
  opts.n_x = 12;
  opts.n_y = 24;
  const ModeBasis basis = enumerate_modes(model, E, opts.n_y + model.p);
  const TRMatrix tr = leaf_tr(model, E, V, 0.0, 1.0, basis, opts);
  const MatrixXcd S = extract_smatrix(tr, basis);
  ASSERT_EQ(S.rows(), 6);
  const ScatterObservables obs = observables(S, basis);
  EXPECT_LE(obs.unitarity_defect, 1e-9);
  EXPECT_LE(obs.trace_defect, 1e-9);
  EXPECT_LE(std::abs(obs.sigma2pi), 1e-9);
  EXPECT_NEAR(obs.trans_plus, 2.402538706553, 1e-8);
  EXPECT_NEAR(obs.trans_minus, 2.402538706539, 1e-8);
  EXPECT_NEAR(std::abs(S(0, 0) - cplx(0.1873056272161, 0.7896961415259)),
              0.0, 1e-8);
  EXPECT_NEAR(std::abs(S(0, 1) - cplx(-0.2212203472768, 0.1700227748146)),
              0.0, 1e-8);
}

TEST(SMatrix, MultichannelChainIsUnitary) {
  const BlockModel model = build_model(2, 2, 1);
  const double E = 1.8;
  const PerturbationSpec V = perturbation_library("V1_M2", E, 1.0);
  ChainOptions copts;
  copts.max_leaf_len = 0.25;
  copts.leaf.n_x = 10;
  copts.leaf.n_y = 16;
  const ModeBasis basis =
      enumerate_modes(model, E, copts.leaf.n_y + model.p);
  ASSERT_EQ(basis.n_plus, 6);
  ASSERT_EQ(basis.n_minus, 6);
  const TRMatrix tr = chain_tr(model, E, V, 0.0, 1.0, basis, copts);
  const MatrixXcd S = extract_smatrix(tr, basis);
  ASSERT_EQ(S.rows(), 12);
  const ScatterObservables obs = observables(S, basis);
  EXPECT_LE(obs.unitarity_defect, 1e-12);
  EXPECT_LE(std::abs(obs.sigma2pi), 1e-12);
  EXPECT_NEAR(obs.trans_plus, 4.830130409948, 1e-7);
}

TEST(Ftr, CovarianceForSymmetricPerturbations) {
  const BlockModel model = build_model(1, 1, 1);
  const double E = 1.8;
  LeafOptions opts;
  opts.n_x = 12;
  opts.n_y = 24;
  const ModeBasis basis = enumerate_modes(model, E, opts.n_y + model.p);
  const KramersPairing pairing = kramers_pairing(model, basis);
  const MatrixXd Pi = kramers_sign_matrix(basis, pairing);
  EXPECT_EQ((Pi * Pi + MatrixXd::Identity(6, 6)).norm(), 0.0);
  EXPECT_NEAR((Pi * Pi.transpose() - MatrixXd::Identity(6, 6)).norm(), 0.0,
              1e-15);

  const std::vector<PerturbationSpec> entries = {
      perturbation_library("V_TR", E, 1.0),
      random_ftr(17, model, perturbation_library("v1_scalar", E, 1.0))};
  for (const PerturbationSpec& V : entries) {
    const TRMatrix tr = leaf_tr(model, E, V, 0.0, 1.0, basis, opts);
    const MatrixXcd S = extract_smatrix(tr, basis);
    const FtrDefects d = ftr_defects(S, basis, pairing);
    EXPECT_LE(d.smatrix, 1e-9) << V.name;
    EXPECT_LE(d.rp_skew, 1e-9) << V.name;
    EXPECT_LE(d.rm_skew, 1e-9) << V.name;
    EXPECT_LE(d.transmission, 1e-9) << V.name;
  }
}

TEST(Ftr, ViolatedForAsymmetricPerturbation) {
  const BlockModel model = build_model(1, 1, 1);
  const double E = 1.8;
  LeafOptions opts;
  opts.n_x = 12;
  opts.n_y = 24;
  const ModeBasis basis = enumerate_modes(model, E, opts.n_y + model.p);
  const KramersPairing pairing = kramers_pairing(model, basis);
  const TRMatrix tr = leaf_tr(model, E, perturbation_library("V_NTR", E, 1.0),
                              0.0, 1.0, basis, opts);
  const FtrDefects d =
      ftr_defects(extract_smatrix(tr, basis), basis, pairing);
  EXPECT_GT(d.smatrix, 0.5);
}

TEST(Chiral, TransmissionDifferenceIsQuantized) {
  // Unbalanced model: the difference of the one-sided transmissions locks to
  // the propagating-channel imbalance, independently of the perturbation.
  const BlockModel model = build_model(1, 0, 2);
  const double E = 3.0;
  const ModeBasis probe = enumerate_modes(model, E, 8);
  EXPECT_EQ(probe.n_plus, 1);
  EXPECT_EQ(probe.n_minus, 3);

  LeafOptions opts;
  opts.n_x = 14;
  opts.n_y = 24;
  const ModeBasis basis = enumerate_modes(model, E, opts.n_y + model.p);
  const PerturbationSpec V = perturbation_library("V_P2_SIGMA3", E, 1.0);
  const TRMatrix tr = leaf_tr(model, E, V, 0.0, 1.0, basis, opts);
  const ScatterObservables obs =
      observables(extract_smatrix(tr, basis), basis);
  EXPECT_NEAR(obs.sigma2pi, -2.0, 1e-8);
  EXPECT_LE(obs.trace_defect, 1e-8);
  EXPECT_LE(obs.unitarity_defect, 1e-8);
  EXPECT_EQ(index2(model, basis, obs.sigma2pi), +1);
}

TEST(Index2, ParityAcrossBalancedFamilies) {
  const double E = 1.8;
  for (const auto& [M, expected] :
       std::vector<std::pair<int, int>>{{1, -1}, {2, +1}, {3, -1}}) {
    const BlockModel model = build_model(M, M, 1);
    const ModeBasis basis = enumerate_modes(model, E, 8);
    EXPECT_EQ(basis.n_plus, 3 * M);
    EXPECT_EQ(index2(model, basis, 0.0), expected) << "M = " << M;
  }
}
