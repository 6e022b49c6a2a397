// Block Hamiltonian metadata, the anti-unitary symmetry structure, and the
// catalogue of compactly supported matrix perturbations.
//
// A model is H = h^{(+)M} (+) conj(h)^{(+)N}, each block a 2-spinor operator,
// laid out h-blocks first: components [h_1 .. h_M, conj h_1 .. conj h_N].
// For M = N the fermionic time-reversal operator is theta = K J with
// J = [[0, -I_{2M}], [I_{2M}, 0]], so theta^2 = -I, and a Hermitian V is
// FTR-symmetric iff V = [[V1, -conj(V2)], [V2, conj(V1)]] with V1 Hermitian
// and V2 antisymmetric.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dwscat/common.hpp"

namespace dwscat {

struct BlockModel {
  int M = 0;           // number of h blocks
  int N = 0;           // number of conjugate blocks
  int p = 1;           // ladder power
  int spinor_dim = 0;  // = 2(M+N)
  bool ftr_symmetric = false;

  int blocks() const { return M + N; }
  // true if 0-based block index b is a conjugate block
  bool conjugated(int b) const { return b >= M; }
};

inline BlockModel build_model(int M, int N, int p) {
  if (M < 0 || N < 0 || M + N < 1)
    throw std::invalid_argument("build_model: need M,N >= 0 and M+N >= 1");
  if (p < 1) throw std::invalid_argument("build_model: need p >= 1");
  BlockModel model;
  model.M = M;
  model.N = N;
  model.p = p;
  model.spinor_dim = 2 * (M + N);
  model.ftr_symmetric = (M == N);
  return model;
}

// ---------------------------------------------------------------------------
// Matrix-valued perturbation V(x, y), supported in x on [0, l].
// ---------------------------------------------------------------------------
struct PerturbationSpec {
  std::string name;
  int dim = 1;                  // size of the returned matrix
  double support_length = 1.0;  // support in x is [0, support_length]
  bool declared_ftr = false;
  std::function<Eigen::MatrixXcd(double x, double y)> evaluate;
};

// ---------------------------------------------------------------------------
// Time-reversal structure for M = N models.
// ---------------------------------------------------------------------------
struct ThetaStructure {
  int M = 0;
  int spinor_dim = 0;
  Eigen::MatrixXd J;  // real, orthogonal, J^2 = -I

  static ThetaStructure build(const BlockModel& model) {
    if (!model.ftr_symmetric)
      throw std::invalid_argument(
          "ThetaStructure: theta pairing requires M == N");
    ThetaStructure theta;
    theta.M = model.M;
    theta.spinor_dim = model.spinor_dim;
    const int half = 2 * model.M;
    theta.J = Eigen::MatrixXd::Zero(2 * half, 2 * half);
    theta.J.topRightCorner(half, half) = -Eigen::MatrixXd::Identity(half, half);
    theta.J.bottomLeftCorner(half, half) = Eigen::MatrixXd::Identity(half, half);
    return theta;
  }

  // theta applied to a spinor sample: theta psi = J conj(psi).
  Eigen::VectorXcd apply(const Eigen::VectorXcd& psi) const {
    return J * psi.conjugate();
  }

  // theta* A theta = -J conj(A) J for a matrix sample.
  Eigen::MatrixXcd conjugate(const Eigen::MatrixXcd& A) const {
    return -J * A.conjugate() * J;
  }
};

// Max over the grid of ||theta* V theta - V||_F / (1 + ||V||_F).
inline double ftr_residual(const PerturbationSpec& V, const BlockModel& model,
                           const std::vector<std::pair<double, double>>& grid) {
  if (grid.empty()) throw std::invalid_argument("ftr_residual: empty grid");
  if (V.dim != model.spinor_dim)
    throw std::invalid_argument("ftr_residual: dimension mismatch");
  ThetaStructure theta = ThetaStructure::build(model);
  double worst = 0.0;
  for (const auto& [x, y] : grid) {
    const Eigen::MatrixXcd A = V.evaluate(x, y);
    const double r = (theta.conjugate(A) - A).norm() / (1.0 + A.norm());
    worst = std::max(worst, r);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Scalar envelopes. Both are built from the oscillation frequencies of the
// propagating modes at energy E so that channels couple strongly.
// ---------------------------------------------------------------------------
namespace detail {

inline double envelope_v1(double x, double y, double E) {
  const double s = std::sqrt(E * E - 2.0);
  return std::exp(-y * y) *
         (y * std::cos((-E - s) * x) + y * std::cos((-E + s) * x) +
          std::cos(2.0 * s * x) + std::cos(2.0 * E * x));
}

inline double envelope_v2(double x, double y, double E) {
  const double s = std::sqrt(E * E - 8.0);
  return (1.0 + y) * std::exp(-y * y) *
         (std::cos((-E - s) * x) + std::cos((-E + s) * x) +
          std::cos(2.0 * s * x) + std::cos(2.0 * E * x));
}

inline const Eigen::Matrix2cd& sigma1() {
  static const Eigen::Matrix2cd m = [] {
    Eigen::Matrix2cd s;
    s << 0, 1, 1, 0;
    return s;
  }();
  return m;
}

inline const Eigen::Matrix2cd& sigma2() {
  static const Eigen::Matrix2cd m = [] {
    Eigen::Matrix2cd s;
    s << 0, -iu, iu, 0;
    return s;
  }();
  return m;
}

inline const Eigen::Matrix2cd& sigma3() {
  static const Eigen::Matrix2cd m = [] {
    Eigen::Matrix2cd s;
    s << 1, 0, 0, -1;
    return s;
  }();
  return m;
}

inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& A,
                             const Eigen::MatrixXcd& B) {
  Eigen::MatrixXcd K(A.rows() * B.rows(), A.cols() * B.cols());
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j)
      K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}

// Assemble [[V1, -conj(V2)], [V2, conj(V1)]].
inline Eigen::MatrixXcd ftr_form(const Eigen::MatrixXcd& V1,
                                 const Eigen::MatrixXcd& V2) {
  const int h = static_cast<int>(V1.rows());
  Eigen::MatrixXcd V(2 * h, 2 * h);
  V.topLeftCorner(h, h) = V1;
  V.topRightCorner(h, h) = -V2.conjugate();
  V.bottomLeftCorner(h, h) = V2;
  V.bottomRightCorner(h, h) = V1.conjugate();
  return V;
}

inline PerturbationSpec from_constant_matrix(
    std::string name, double E, double l, bool declared_ftr,
    std::function<double(double, double, double)> envelope,
    Eigen::MatrixXcd matrix) {
  PerturbationSpec spec;
  spec.name = std::move(name);
  spec.dim = static_cast<int>(matrix.rows());
  spec.support_length = l;
  spec.declared_ftr = declared_ftr;
  auto mat = std::make_shared<Eigen::MatrixXcd>(std::move(matrix));
  spec.evaluate = [E, l, env = std::move(envelope), mat](double x, double y) {
    if (x < 0.0 || x > l) return Eigen::MatrixXcd::Zero(mat->rows(), mat->cols()).eval();
    return (env(x, y, E) * (*mat)).eval();
  };
  return spec;
}

}  // namespace detail

// Zero perturbation of a given spinor dimension.
inline PerturbationSpec zero_perturbation(int dim, double l = 1.0) {
  PerturbationSpec spec;
  spec.name = "zero";
  spec.dim = dim;
  spec.support_length = l;
  spec.declared_ftr = true;
  spec.evaluate = [dim](double, double) {
    return Eigen::MatrixXcd::Zero(dim, dim).eval();
  };
  return spec;
}

// ---------------------------------------------------------------------------
// Catalogue of closed-form perturbations.
//
//   v1_scalar     scalar envelope v1 (p = 1 energies, needs E^2 > 2)
//   v2_scalar     scalar envelope v2 (p = 2 energies, needs E^2 > 8)
//   V_TR          dim 4, FTR:   v1 [[I2, (1-i)s2], [(1+i)s2,  I2]]
//   V_NTR         dim 4, broken: v1 [[I2, (1-i)s2], [(1+i)s2, -I2]]
//   V1_M2         dim 8, FTR:   v1 (I8 + s1 x ones2 x s2)
//   V_TRS_M2      dim 8, FTR:   v1 x the block matrix with (1+-i)s2 corners
//   V_P2_V2ONLY   dim 4, FTR:   V1 = 0,        V2 = (1+i) v2 s2
//   V_P2_V1V2     dim 4, FTR:   V1 = v2 s3,    V2 = (1+i) v2 s2
//   V_P2_SIGMA3   dim 2, single block: v2 s3
//   V_M3_EXCHANGE dim 12, FTR:  V1 = v1 I6,            V2 = v1 ones3 x s2
//   V_M3_GENERIC  dim 12, FTR:  V1 = v1 diag(1,-1,2) x I2, same V2
// ---------------------------------------------------------------------------
inline PerturbationSpec perturbation_library(const std::string& name, double E,
                                             double l) {
  using namespace detail;
  if (l <= 0.0)
    throw std::invalid_argument("perturbation_library: need support l > 0");
  const bool needs_v2 = name.rfind("V_P2", 0) == 0 || name == "v2_scalar";
  if (!needs_v2 && E * E <= 2.0)
    throw std::invalid_argument("perturbation_library: v1 requires E^2 > 2");
  if (needs_v2 && E * E <= 8.0)
    throw std::invalid_argument("perturbation_library: v2 requires E^2 > 8");

  const Eigen::Matrix2cd I2 = Eigen::Matrix2cd::Identity();
  const Eigen::Matrix2cd s2p = (1.0 + iu) * sigma2();  // (1+i) sigma_2
  const Eigen::Matrix2cd s2m = (1.0 - iu) * sigma2();  // (1-i) sigma_2

  if (name == "v1_scalar")
    return from_constant_matrix(name, E, l, false, envelope_v1,
                                Eigen::MatrixXcd::Identity(1, 1));
  if (name == "v2_scalar")
    return from_constant_matrix(name, E, l, false, envelope_v2,
                                Eigen::MatrixXcd::Identity(1, 1));
  if (name == "V_TR" || name == "V_NTR") {
    Eigen::MatrixXcd m(4, 4);
    m.topLeftCorner(2, 2) = I2;
    m.topRightCorner(2, 2) = s2m;
    m.bottomLeftCorner(2, 2) = s2p;
    m.bottomRightCorner(2, 2) = (name == "V_TR") ? I2 : (-I2).eval();
    return from_constant_matrix(name, E, l, name == "V_TR", envelope_v1, m);
  }
  if (name == "V1_M2") {
    Eigen::MatrixXcd ones2 = Eigen::MatrixXcd::Ones(2, 2);
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(8, 8) +
                         kron(sigma1(), kron(ones2, sigma2()));
    return from_constant_matrix(name, E, l, true, envelope_v1, m);
  }
  if (name == "V_TRS_M2") {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(8, 8);
    m.block(0, 0, 2, 2) = I2;
    m.block(0, 6, 2, 2) = s2m;
    m.block(2, 2, 2, 2) = -I2;
    m.block(2, 4, 2, 2) = s2m;
    m.block(4, 2, 2, 2) = s2p;
    m.block(4, 4, 2, 2) = I2;
    m.block(6, 0, 2, 2) = s2p;
    m.block(6, 6, 2, 2) = -I2;
    return from_constant_matrix(name, E, l, true, envelope_v1, m);
  }
  if (name == "V_P2_V2ONLY")
    return from_constant_matrix(
        name, E, l, true, envelope_v2,
        ftr_form(Eigen::MatrixXcd::Zero(2, 2), s2p));
  if (name == "V_P2_V1V2")
    return from_constant_matrix(name, E, l, true, envelope_v2,
                                ftr_form(sigma3(), s2p));
  if (name == "V_P2_SIGMA3")
    return from_constant_matrix(name, E, l, false, envelope_v2, sigma3());
  if (name == "V_M3_EXCHANGE" || name == "V_M3_GENERIC") {
    Eigen::MatrixXcd V1;
    if (name == "V_M3_EXCHANGE") {
      V1 = Eigen::MatrixXcd::Identity(6, 6);
    } else {
      Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(3, 3);
      d(0, 0) = 1.0;
      d(1, 1) = -1.0;
      d(2, 2) = 2.0;
      V1 = kron(d, Eigen::MatrixXcd::Identity(2, 2));
    }
    Eigen::MatrixXcd V2 = kron(Eigen::MatrixXcd::Ones(3, 3), sigma2());
    return from_constant_matrix(name, E, l, true, envelope_v1,
                                ftr_form(V1, V2));
  }
  throw std::invalid_argument("perturbation_library: unknown name " + name);
}

// ---------------------------------------------------------------------------
// Seeded random FTR-symmetric perturbation.
//
// Entries are drawn from a counter-based splitmix64 generator (documented
// constants below), so samples are reproducible bit-for-bit across platforms:
// draw k of seed s is mix(s + (k+1) * 0x9E3779B97F4A7C15).
// ---------------------------------------------------------------------------
namespace detail {

inline std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// k-th draw of the stream with the given seed, uniform on [-1, 1).
inline double random_pm1(std::uint64_t seed, std::uint64_t k) {
  const std::uint64_t z =
      splitmix64_mix(seed + (k + 1) * 0x9E3779B97F4A7C15ULL);
  return 2.0 * ((z >> 11) * 0x1.0p-53) - 1.0;
}

}  // namespace detail

inline PerturbationSpec random_ftr(std::uint64_t seed, const BlockModel& model,
                                   const PerturbationSpec& envelope) {
  if (!model.ftr_symmetric)
    throw std::invalid_argument("random_ftr: requires M == N");
  if (envelope.dim != 1)
    throw std::invalid_argument("random_ftr: envelope must be scalar-valued");
  const int h = 2 * model.M;
  std::uint64_t k = 0;
  auto draw = [&] { return detail::random_pm1(seed, k++); };

  // V1 Hermitian: real diagonal, conjugate-mirrored off-diagonal.
  Eigen::MatrixXcd V1(h, h);
  for (int i = 0; i < h; ++i) {
    V1(i, i) = draw();
    for (int j = i + 1; j < h; ++j) {
      const double re = draw(), im = draw();
      V1(i, j) = cplx(re, im);
      V1(j, i) = cplx(re, -im);
    }
  }
  // V2 antisymmetric: zero diagonal, sign-mirrored off-diagonal.
  Eigen::MatrixXcd V2 = Eigen::MatrixXcd::Zero(h, h);
  for (int i = 0; i < h; ++i)
    for (int j = i + 1; j < h; ++j) {
      const double re = draw(), im = draw();
      V2(i, j) = cplx(re, im);
      V2(j, i) = -V2(i, j);
    }

  PerturbationSpec spec;
  spec.name = "random_ftr_" + std::to_string(seed);
  spec.dim = model.spinor_dim;
  spec.support_length = envelope.support_length;
  spec.declared_ftr = true;
  auto mat = std::make_shared<Eigen::MatrixXcd>(detail::ftr_form(V1, V2));
  spec.evaluate = [env = envelope.evaluate, mat](double x, double y) {
    return (env(x, y)(0, 0) * (*mat)).eval();
  };
  return spec;
}

}  // namespace dwscat
