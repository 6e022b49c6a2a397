#pragma once
// One-sided transmission/reflection matrices for perturbed slabs, their
// composition across adjacent intervals, the physical scattering matrix on
// the propagating channels, and derived observables (one-sided transmissions,
// their difference, unitarity and trace defects, and the binary invariant).
//
// Amplitude conventions: right-moving amplitudes are referenced at the left
// edge on entry and the right edge on exit; left-moving amplitudes mirror
// this.  With that referencing every evanescent factor is a decay, so deep
// slabs stay well conditioned.

#include <Eigen/Dense>
#include <Eigen/LU>
#include <atomic>
#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "dwscat/solver.hpp"

namespace dwscat {

// Scattering blocks over [a, b] in the retained mode basis.  Row/column
// indices follow ModeBasis::right_list / left_list ordering (propagating
// first).  Tp: out right at b <- in right at a.  Rp: out left at a <- in
// right at a.  Tm: out left at a <- in left at b.  Rm: out right at b <- in
// left at b.
struct TRMatrix {
  double a = 0.0;
  double b = 0.0;
  Eigen::MatrixXcd Tp, Rp, Tm, Rm;
};

// Identity slab: free propagation across [a, b] (diagonal phases/decays).
inline TRMatrix free_tr(const ModeBasis& basis, double a, double b) {
  const int n_r = static_cast<int>(basis.right_list.size());
  const int n_l = static_cast<int>(basis.left_list.size());
  TRMatrix tr;
  tr.a = a;
  tr.b = b;
  tr.Tp = Eigen::MatrixXcd::Zero(n_r, n_r);
  tr.Rp = Eigen::MatrixXcd::Zero(n_l, n_r);
  tr.Tm = Eigen::MatrixXcd::Zero(n_l, n_l);
  tr.Rm = Eigen::MatrixXcd::Zero(n_r, n_l);
  for (int k = 0; k < n_r; ++k) {
    const Mode& m = basis.modes[basis.right_list[k]];
    tr.Tp(k, k) = std::exp(iu * m.xi * (b - a));
  }
  for (int k = 0; k < n_l; ++k) {
    const Mode& m = basis.modes[basis.left_list[k]];
    tr.Tm(k, k) = std::exp(iu * m.xi * (a - b));
  }
  return tr;
}

// Full scattering data of a single leaf: one factorization, one solve per
// retained incident direction.  The basis must be enumerated with mode
// families up to n_y + p so that everything the interval can radiate is
// carried to its neighbours.
inline TRMatrix leaf_tr(const BlockModel& model, double energy,
                        const PerturbationSpec& V, double a, double b,
                        const ModeBasis& basis, const LeafOptions& opts) {
  const LeafContext ctx = build_leaf(model, energy, V, a, b, opts);
  const int n_r = static_cast<int>(basis.right_list.size());
  const int n_l = static_cast<int>(basis.left_list.size());

  Eigen::MatrixXcd rhs(ctx.size(), n_r + n_l);
  for (int k = 0; k < n_r; ++k)
    rhs.col(k) = incident_rhs(ctx, basis.modes[basis.right_list[k]]);
  for (int k = 0; k < n_l; ++k)
    rhs.col(n_r + k) = incident_rhs(ctx, basis.modes[basis.left_list[k]]);
  const Eigen::MatrixXcd rho = ctx.lu.solve(rhs);

  TRMatrix tr = free_tr(basis, a, b);
  for (int k = 0; k < n_r; ++k) {
    tr.Tp.col(k) += outgoing_amplitudes(ctx, basis, rho.col(k), true);
    tr.Rp.col(k) = outgoing_amplitudes(ctx, basis, rho.col(k), false);
  }
  for (int k = 0; k < n_l; ++k) {
    tr.Tm.col(k) += outgoing_amplitudes(ctx, basis, rho.col(n_r + k), false);
    tr.Rm.col(k) = outgoing_amplitudes(ctx, basis, rho.col(n_r + k), true);
  }
  return tr;
}

// Composition of two adjacent slabs, resumming all multiple scattering
// between them.
inline TRMatrix merge_tr(const TRMatrix& s1, const TRMatrix& s2) {
  if (std::abs(s1.b - s2.a) > 1e-12 * std::max(1.0, std::abs(s1.b)))
    throw std::invalid_argument("merge_tr: slabs are not adjacent");
  const int n_r = static_cast<int>(s1.Tp.rows());
  const int n_l = static_cast<int>(s1.Tm.rows());

  const Eigen::MatrixXcd loop_r =
      Eigen::MatrixXcd::Identity(n_r, n_r) - s1.Rm * s2.Rp;
  const Eigen::MatrixXcd loop_l =
      Eigen::MatrixXcd::Identity(n_l, n_l) - s2.Rp * s1.Rm;
  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu_r(loop_r);
  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu_l(loop_l);
  if (lu_r.rcond() < 1e-14 || lu_l.rcond() < 1e-14) {
    std::ostringstream msg;
    msg << "merge_tr: near-singular multiple-scattering factor over ["
        << s1.a << ", " << s2.b << "]";
    throw solver_error(msg.str());
  }

  TRMatrix out;
  out.a = s1.a;
  out.b = s2.b;
  out.Tp = s2.Tp * lu_r.solve(s1.Tp);
  out.Rm = s2.Rm + s2.Tp * lu_r.solve(s1.Rm * s2.Tm);
  out.Rp = s1.Rp + s1.Tm * lu_l.solve(s2.Rp * s1.Tp);
  out.Tm = s1.Tm * lu_l.solve(s2.Tm);
  return out;
}

// Pairwise (balanced-tree) composition of an ordered chain of slabs.
inline TRMatrix binary_merge(std::vector<TRMatrix> chain) {
  if (chain.empty()) throw std::invalid_argument("binary_merge: empty chain");
  while (chain.size() > 1) {
    std::vector<TRMatrix> next;
    next.reserve((chain.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < chain.size(); i += 2)
      next.push_back(merge_tr(chain[i], chain[i + 1]));
    if (chain.size() % 2 == 1) next.push_back(chain.back());
    chain.swap(next);
  }
  return chain.front();
}

// Chain driver: partition [a, b] into equal leaves no longer than
// max_leaf_len, solve the leaves (optionally on a small worker pool), and
// compose them.
struct ChainOptions {
  double max_leaf_len = 1.0 / 16.0;
  int workers = 1;
  LeafOptions leaf;
};

inline std::vector<TRMatrix> solve_leaves(const BlockModel& model,
                                          double energy,
                                          const PerturbationSpec& V, double a,
                                          double b, int n_leaves,
                                          const ModeBasis& basis,
                                          const ChainOptions& opts) {
  std::vector<TRMatrix> leaves(n_leaves);
  const double h = (b - a) / n_leaves;
  auto work = [&](int k) {
    LeafOptions lopts = opts.leaf;
    std::ostringstream label;
    label << "leaf [" << a + k * h << ", " << a + (k + 1) * h << "]";
    lopts.label = label.str();
    leaves[k] =
        leaf_tr(model, energy, V, a + k * h, a + (k + 1) * h, basis, lopts);
  };
  const int pool = std::max(1, std::min(opts.workers, n_leaves));
  if (pool == 1) {
    for (int k = 0; k < n_leaves; ++k) work(k);
  } else {
    std::atomic<int> cursor{0};
    std::vector<std::thread> threads;
    threads.reserve(pool);
    for (int t = 0; t < pool; ++t)
      threads.emplace_back([&] {
        for (int k = cursor.fetch_add(1); k < n_leaves;
             k = cursor.fetch_add(1))
          work(k);
      });
    for (std::thread& t : threads) t.join();
  }
  return leaves;
}

inline TRMatrix chain_tr(const BlockModel& model, double energy,
                         const PerturbationSpec& V, double a, double b,
                         const ModeBasis& basis, const ChainOptions& opts) {
  const int n_leaves =
      std::max(1, static_cast<int>(std::ceil((b - a) / opts.max_leaf_len -
                                             1e-12)));
  return binary_merge(
      solve_leaves(model, energy, V, a, b, n_leaves, basis, opts));
}

// Left-to-right sweep over a growing interval [a, a + counts[i] * leaf_len].
// Every leaf is solved exactly once (in worker-pool chunks) and folded into
// a running composition; the composition state is recorded at each requested
// prefix.
inline std::vector<TRMatrix> prefix_sweep(const BlockModel& model,
                                          double energy,
                                          const PerturbationSpec& V, double a,
                                          double leaf_len,
                                          const std::vector<int>& counts,
                                          const ModeBasis& basis,
                                          const ChainOptions& opts) {
  if (counts.empty()) return {};
  for (std::size_t i = 1; i < counts.size(); ++i)
    if (counts[i] <= counts[i - 1])
      throw std::invalid_argument("prefix_sweep: counts must increase");
  const int total = counts.back();
  const int chunk = std::max(1, opts.workers);
  std::vector<TRMatrix> out;
  out.reserve(counts.size());
  TRMatrix acc;
  std::size_t next = 0;
  for (int k0 = 0; k0 < total; k0 += chunk) {
    const int n_chunk = std::min(chunk, total - k0);
    const std::vector<TRMatrix> leaves =
        solve_leaves(model, energy, V, a + k0 * leaf_len,
                     a + (k0 + n_chunk) * leaf_len, n_chunk, basis, opts);
    for (int j = 0; j < n_chunk; ++j) {
      const int k = k0 + j;
      acc = (k == 0) ? leaves[j] : merge_tr(acc, leaves[j]);
      if (next < counts.size() && k + 1 == counts[next]) {
        out.push_back(acc);
        ++next;
      }
    }
  }
  return out;
}

// Physical scattering matrix on the propagating channels, with amplitudes
// rescaled to unit flux.  Layout: the first n_plus rows/columns are the
// right-moving channels, the remaining n_minus the left-moving ones, i.e.
// S = [[t_plus, r_minus], [r_plus, t_minus]].
inline Eigen::MatrixXcd extract_smatrix(const TRMatrix& tr,
                                        const ModeBasis& basis) {
  const int np = basis.n_plus, nm = basis.n_minus;
  Eigen::VectorXd jr(np), jl(nm);
  for (int k = 0; k < np; ++k)
    jr(k) = std::abs(basis.modes[basis.right_list[k]].current);
  for (int k = 0; k < nm; ++k)
    jl(k) = std::abs(basis.modes[basis.left_list[k]].current);

  Eigen::MatrixXcd S(np + nm, np + nm);
  for (int o = 0; o < np; ++o)
    for (int in = 0; in < np; ++in)
      S(o, in) = std::sqrt(jr(o) / jr(in)) * tr.Tp(o, in);
  for (int o = 0; o < np; ++o)
    for (int in = 0; in < nm; ++in)
      S(o, np + in) = std::sqrt(jr(o) / jl(in)) * tr.Rm(o, in);
  for (int o = 0; o < nm; ++o)
    for (int in = 0; in < np; ++in)
      S(np + o, in) = std::sqrt(jl(o) / jr(in)) * tr.Rp(o, in);
  for (int o = 0; o < nm; ++o)
    for (int in = 0; in < nm; ++in)
      S(np + o, np + in) = std::sqrt(jl(o) / jl(in)) * tr.Tm(o, in);
  return S;
}

struct ScatterObservables {
  int n_plus = 0;
  int n_minus = 0;
  double trans_plus = 0.0;   // tr t+^* t+
  double trans_minus = 0.0;  // tr t-^* t-
  double sigma2pi = 0.0;     // trans_plus - trans_minus
  double unitarity_defect = 0.0;  // || S^* S - I ||_F
  double trace_defect = 0.0;      // | sigma2pi - (n_plus - n_minus) |
};

inline ScatterObservables observables(const Eigen::MatrixXcd& S,
                                      const ModeBasis& basis) {
  ScatterObservables obs;
  obs.n_plus = basis.n_plus;
  obs.n_minus = basis.n_minus;
  const int np = basis.n_plus, nm = basis.n_minus;
  obs.trans_plus = S.topLeftCorner(np, np).squaredNorm();
  obs.trans_minus = S.bottomRightCorner(nm, nm).squaredNorm();
  obs.sigma2pi = obs.trans_plus - obs.trans_minus;
  obs.unitarity_defect =
      (S.adjoint() * S -
       Eigen::MatrixXcd::Identity(np + nm, np + nm))
          .norm();
  obs.trace_defect = std::abs(obs.sigma2pi - (obs.n_plus - obs.n_minus));
  return obs;
}

// Binary invariant.  For balanced models it is the parity of the propagating
// right-movers; for chiral models (N = 0) it is the parity of the quantized
// transmission difference.
inline int index2(const BlockModel& model, const ModeBasis& basis,
                  double sigma2pi) {
  if (model.N == 0) {
    const long q = std::lround(sigma2pi);
    return (q % 2 == 0) ? +1 : -1;
  }
  return (basis.n_plus % 2 == 0) ? +1 : -1;
}

// Pairing permutations between the propagating right- and left-moving
// channels: entry k of right_to_left is the left-list position of the
// time-reversal partner of right-list mode k (and vice versa).
struct KramersPairing {
  Eigen::VectorXi right_to_left;
  Eigen::VectorXi left_to_right;
};

inline KramersPairing kramers_pairing(const BlockModel& model,
                                      const ModeBasis& basis) {
  KramersPairing pairing;
  pairing.right_to_left = Eigen::VectorXi::Constant(basis.n_plus, -1);
  pairing.left_to_right = Eigen::VectorXi::Constant(basis.n_minus, -1);
  for (int k = 0; k < basis.n_plus; ++k) {
    const int partner = kramers_partner(basis, model, basis.right_list[k]);
    for (int j = 0; j < basis.n_minus; ++j)
      if (basis.left_list[j] == partner) pairing.right_to_left(k) = j;
    if (pairing.right_to_left(k) < 0)
      throw std::logic_error("kramers_pairing: unmatched right mode");
  }
  for (int j = 0; j < basis.n_minus; ++j) {
    const int partner = kramers_partner(basis, model, basis.left_list[j]);
    for (int k = 0; k < basis.n_plus; ++k)
      if (basis.right_list[k] == partner) pairing.left_to_right(j) = k;
    if (pairing.left_to_right(j) < 0)
      throw std::logic_error("kramers_pairing: unmatched left mode");
  }
  return pairing;
}

// Signed pairing matrix Pi on the propagating channels: column k carries its
// time-reversal partner row with sign +1 for direct-block modes and -1 for
// conjugate-block ones.  Pi is real orthogonal and squares to minus the
// identity; a symmetric perturbation forces S^T = -Pi S Pi.
inline Eigen::MatrixXd kramers_sign_matrix(const ModeBasis& basis,
                                           const KramersPairing& pairing) {
  const int np = basis.n_plus, nm = basis.n_minus;
  Eigen::MatrixXd Pi = Eigen::MatrixXd::Zero(np + nm, np + nm);
  for (int k = 0; k < np; ++k) {
    const Mode& m = basis.modes[basis.right_list[k]];
    Pi(np + pairing.right_to_left(k), k) = m.conjugated ? -1.0 : 1.0;
  }
  for (int j = 0; j < nm; ++j) {
    const Mode& m = basis.modes[basis.left_list[j]];
    Pi(pairing.left_to_right(j), np + j) = m.conjugated ? -1.0 : 1.0;
  }
  return Pi;
}

// Residuals of the time-reversal constraints on the scattering matrix: the
// full relation, the antisymmetry of both reflection blocks after signed
// reindexing, and the transposition relation between the transmissions.
struct FtrDefects {
  double smatrix = 0.0;
  double rp_skew = 0.0;
  double rm_skew = 0.0;
  double transmission = 0.0;
};

inline FtrDefects ftr_defects(const Eigen::MatrixXcd& S,
                              const ModeBasis& basis,
                              const KramersPairing& pairing) {
  const int np = basis.n_plus, nm = basis.n_minus;
  const Eigen::MatrixXd Pi = kramers_sign_matrix(basis, pairing);
  const Eigen::MatrixXd Pi_rl = Pi.topRightCorner(np, nm);
  const Eigen::MatrixXd Pi_lr = Pi.bottomLeftCorner(nm, np);
  FtrDefects d;
  d.smatrix = (S.transpose() + Pi * S * Pi).norm();
  const Eigen::MatrixXcd xp = S.bottomLeftCorner(nm, np) * Pi_rl;
  const Eigen::MatrixXcd xm = S.topRightCorner(np, nm) * Pi_lr;
  d.rp_skew = (xp + xp.transpose()).norm();
  d.rm_skew = (xm + xm.transpose()).norm();
  d.transmission = (Pi_rl * S.bottomRightCorner(nm, nm) * Pi_lr +
                    S.topLeftCorner(np, np).transpose())
                       .norm();
  return d;
}

// Plain-text matrix block: dimensions, then one row per line as
// "re im re im ...".
inline void write_matrix_text(std::ostream& os, const Eigen::MatrixXcd& m) {
  os << m.rows() << " " << m.cols() << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) os << " ";
      os << m(i, j).real() << " " << m(i, j).imag();
    }
    os << "\n";
  }
}

}  // namespace dwscat
