// Integral-equation solver on a single perturbation interval ("leaf").
//
// The scattering density rho = V psi is expanded per spinor component in
// Legendre polynomials (x) times Hermite functions (y) and determined from
//   rho + V G rho = V psi_in        (total field psi = psi_in - G rho)
// by collocation at Gauss nodes in x and Galerkin projection in y.  The
// outgoing Green kernel acts level by level: Hermite level m carries the
// rate theta_m = i xi(E, m, +1), and the x-integrals against the Legendre
// basis are evaluated exactly by composite Gauss panels, so the scattered
// field outside the interval is available in closed form per mode channel.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "dwscat/common.hpp"
#include "dwscat/model.hpp"
#include "dwscat/quadrature.hpp"
#include "dwscat/spectral.hpp"

namespace dwscat {

// Exponential moments of the mapped Legendre basis on [a, b]:
//   A_j = int_a^b P_j(t(x0)) e^{theta |x - x0|} dx0
//   B_j = int_a^b P_j(t(x0)) sgn(x - x0) e^{theta |x - x0|} dx0
// with t(x0) = 2(x0 - a)/(b - a) - 1 and Re theta <= 0.  Each smooth side of
// the kink is integrated by composite Gauss panels sized to the phase speed.
struct ExpMoments {
  Eigen::VectorXcd A;
  Eigen::VectorXcd B;
};

inline ExpMoments legendre_exp_moments(double a, double b, int n_j,
                                       cplx theta, double x) {
  if (!(b > a) || n_j < 1)
    throw std::invalid_argument("legendre_exp_moments: bad interval or order");
  ExpMoments out;
  out.A = Eigen::VectorXcd::Zero(n_j);
  out.B = Eigen::VectorXcd::Zero(n_j);

  const int order = std::max(n_j + 6, 24);
  auto accumulate = [&](double lo, double hi, double side) {
    // side = +1: x0 < x (weight e^{theta (x - x0)}), -1: x0 > x.
    if (hi - lo <= 0.0) return;
    const int panels =
        1 + static_cast<int>(std::abs(theta) * (hi - lo) / 6.0);
    const QuadRule base = gauss_legendre(order);
    const double step = (hi - lo) / panels;
    for (int pnl = 0; pnl < panels; ++pnl) {
      const double pa = lo + pnl * step;
      for (int q = 0; q < order; ++q) {
        const double x0 = pa + 0.5 * step * (base.nodes(q) + 1.0);
        const double wq = 0.5 * step * base.weights(q);
        const cplx ker = wq * std::exp(theta * side * (x - x0));
        const Eigen::VectorXd pj =
            legendre_eval(2.0 * (x0 - a) / (b - a) - 1.0, n_j - 1);
        out.A += ker * pj;
        out.B += side * ker * pj;
      }
    }
  };
  accumulate(a, std::min(x, b), +1.0);
  accumulate(std::max(x, a), b, -1.0);
  return out;
}

// Channel rate of Hermite level m (labeled by the lower component):
// theta_m = i xi(E, m, +1), with Re theta <= 0 so e^{theta |x - x0|} is
// outgoing (oscillatory when propagating, decaying when evanescent).
inline cplx channel_rate(double E, int m, int p) {
  return iu * branch_xi(E, m, p, +1);
}

// Direct series evaluation of one Green kernel entry
// G[c_out, c_src](x, y; x0, y0) of a single block (h for conj = false),
// truncated at Hermite level n_series.  Reference implementation for tests
// and point probes; the solver itself never sums this series.
inline cplx green_point(double E, int p, bool conj, int c_out, int c_src,
                        double x, double y, double x0, double y0,
                        int n_series) {
  if (c_out < 0 || c_out > 1 || c_src < 0 || c_src > 1)
    throw std::invalid_argument("green_point: component index");
  const double sB = conj ? -1.0 : 1.0;
  const double sg = (x > x0) ? 1.0 : (x < x0 ? -1.0 : 0.0);
  const Eigen::VectorXd phi_y = hermite_eval(y, n_series + p);
  const Eigen::VectorXd phi_y0 = hermite_eval(y0, n_series + p);
  cplx total(0.0, 0.0);
  for (int nu = 0; nu <= n_series; ++nu) {
    if (c_src == 0) {
      // Upper source on level nu: channel nu + p.
      const cplx theta = channel_rate(E, nu + p, p);
      const cplx pref = -0.5 / theta * std::exp(theta * std::abs(x - x0));
      if (c_out == 0)
        total += pref * (E - sB * iu * theta * sg) * phi_y(nu) * phi_y0(nu);
      else
        total += pref * ladder_coeff(nu + p, p) * phi_y(nu + p) * phi_y0(nu);
    } else {
      // Lower source on level nu: channel nu.
      const cplx theta = channel_rate(E, nu, p);
      const cplx pref = -0.5 / theta * std::exp(theta * std::abs(x - x0));
      if (c_out == 1)
        total += pref * (E + sB * iu * theta * sg) * phi_y(nu) * phi_y0(nu);
      else if (nu >= p)
        total += pref * ladder_coeff(nu, p) * phi_y(nu - p) * phi_y0(nu);
    }
  }
  return total;
}

struct LeafOptions {
  int n_x = 12;            // Legendre order / collocation nodes per level
  int n_y = 24;            // highest Hermite level of the density expansion
  int quad_pad = 8;        // extra y-quadrature nodes beyond n_y + 1
  double rcond_min = 1e-13;
  bool keep_matrix = false;  // retain the assembled system (tests only)
  std::string label = "leaf";
};

// Discretized Lippmann-Schwinger operator for one interval, with the LU
// factorization shared across all incident right-hand sides.
struct LeafContext {
  BlockModel model;
  double energy = 0.0;
  double a = 0.0;
  double b = 0.0;
  int n_x = 0;
  int n_levels = 0;  // Hermite levels 0..n_y
  LeafOptions opts;

  HermiteBasis ybasis;
  Eigen::VectorXd xnodes;  // collocation nodes (Gauss points on [a, b])
  Eigen::MatrixXd pleg;    // pleg(i, j) = P_j(t(x_i))

  // W[i](c*n_levels + m, c'*n_levels + mu)
  //   = sum_q w_q phi_m(y_q) V_{c c'}(x_i, y_q) phi_mu(y_q).
  std::vector<Eigen::MatrixXcd> W;

  // Per channel m: exponential moments at the collocation nodes (rows
  // 0..n_x-1) and at the edges a (row n_x) and b (row n_x + 1).
  struct ChannelMoments {
    cplx theta;
    Eigen::MatrixXcd A;
    Eigen::MatrixXcd B;
  };
  std::vector<ChannelMoments> chan;  // size n_levels + p

  Eigen::MatrixXcd system;  // kept only when opts.keep_matrix
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu;
  double rcond = 0.0;

  int size() const { return model.spinor_dim * n_levels * n_x; }
  int index(int c, int m, int j) const {
    return (c * n_levels + m) * n_x + j;
  }
};

inline LeafContext build_leaf(const BlockModel& model, double E,
                              const PerturbationSpec& V, double a, double b,
                              const LeafOptions& opts = {}) {
  if (V.dim != model.spinor_dim)
    throw std::invalid_argument("build_leaf: perturbation dimension " +
                                std::to_string(V.dim) + " != spinor dim " +
                                std::to_string(model.spinor_dim));
  if (!(b > a)) throw std::invalid_argument("build_leaf: empty interval");
  if (opts.n_x < 4 || opts.n_y < model.p)
    throw std::invalid_argument("build_leaf: resolution too small");

  LeafContext ctx;
  ctx.model = model;
  ctx.energy = E;
  ctx.a = a;
  ctx.b = b;
  ctx.n_x = opts.n_x;
  ctx.n_levels = opts.n_y + 1;
  ctx.opts = opts;

  ctx.ybasis = HermiteBasis::build(
      opts.n_y, std::max(ctx.n_levels + opts.quad_pad, 24));
  ctx.xnodes = gauss_legendre(opts.n_x, a, b).nodes;
  ctx.pleg.resize(opts.n_x, opts.n_x);
  for (int i = 0; i < opts.n_x; ++i)
    ctx.pleg.row(i) =
        legendre_eval(2.0 * (ctx.xnodes(i) - a) / (b - a) - 1.0, opts.n_x - 1)
            .transpose();

  const int ncomp = model.spinor_dim;
  const int nlev = ctx.n_levels;
  const int wdim = ncomp * nlev;

  // Perturbation projections per collocation node.
  ctx.W.assign(opts.n_x, Eigen::MatrixXcd::Zero(wdim, wdim));
  for (int i = 0; i < opts.n_x; ++i) {
    for (int q = 0; q < ctx.ybasis.n_quad; ++q) {
      const Eigen::MatrixXcd vq =
          V.evaluate(ctx.xnodes(i), ctx.ybasis.y(q));
      if (vq.rows() != ncomp || vq.cols() != ncomp)
        throw std::invalid_argument("build_leaf: perturbation sample shape");
      if (vq.isZero(0.0)) continue;
      const Eigen::VectorXd phi_q =
          ctx.ybasis.phi.row(q).head(nlev).transpose();
      const Eigen::MatrixXd outer =
          ctx.ybasis.w(q) * (phi_q * phi_q.transpose());
      for (int c = 0; c < ncomp; ++c)
        for (int cp = 0; cp < ncomp; ++cp)
          if (vq(c, cp) != cplx(0.0, 0.0))
            ctx.W[i].block(c * nlev, cp * nlev, nlev, nlev) +=
                vq(c, cp) * outer;
    }
  }

  // Exponential moments for every channel at nodes and edges.
  ctx.chan.resize(nlev + model.p);
  for (int m = 0; m < nlev + model.p; ++m) {
    auto& ch = ctx.chan[m];
    ch.theta = channel_rate(E, m, model.p);
    ch.A.resize(opts.n_x + 2, opts.n_x);
    ch.B.resize(opts.n_x + 2, opts.n_x);
    for (int r = 0; r < opts.n_x + 2; ++r) {
      const double x =
          r < opts.n_x ? ctx.xnodes(r) : (r == opts.n_x ? a : b);
      const ExpMoments mom = legendre_exp_moments(a, b, opts.n_x, ch.theta, x);
      ch.A.row(r) = mom.A.transpose();
      ch.B.row(r) = mom.B.transpose();
    }
  }

  // Assemble I + V G in coefficient space.
  const int n_x = opts.n_x;
  Eigen::MatrixXcd sys = Eigen::MatrixXcd::Zero(ctx.size(), ctx.size());
  for (int c = 0; c < ncomp; ++c)
    for (int m = 0; m < nlev; ++m)
      sys.block((c * nlev + m) * n_x, (c * nlev + m) * n_x, n_x, n_x) =
          ctx.pleg;

  // F(i, j) is the x-part of one Green output against source column j at
  // node i; rows over all (c, m) at that node pick up the W weights.
  auto add_output = [&](int c_src, int nu, int c_out, int mu,
                        const Eigen::MatrixXcd& F) {
    const int colbase = (c_src * nlev + nu) * n_x;
    const int wcol = c_out * nlev + mu;
    for (int i = 0; i < n_x; ++i)
      for (int r = 0; r < wdim; ++r) {
        const cplx wv = ctx.W[i](r, wcol);
        if (wv == cplx(0.0, 0.0)) continue;
        sys.row(r * n_x + i).segment(colbase, n_x) += wv * F.row(i);
      }
  };

  for (int blk = 0; blk < model.blocks(); ++blk) {
    const bool conj = model.conjugated(blk);
    const double sB = conj ? -1.0 : 1.0;
    const int cu = 2 * blk;
    const int cl = 2 * blk + 1;
    for (int nu = 0; nu < nlev; ++nu) {
      {  // Upper source on level nu: channel nu + p.
        const auto& ch = ctx.chan[nu + model.p];
        const cplx pref = -0.5 / ch.theta;
        const auto An = ch.A.topRows(n_x);
        const auto Bn = ch.B.topRows(n_x);
        add_output(cu, nu, cu, nu,
                   pref * (E * An - sB * iu * ch.theta * Bn));
        if (nu + model.p < nlev)
          add_output(cu, nu, cl, nu + model.p,
                     pref * ladder_coeff(nu + model.p, model.p) * An);
      }
      {  // Lower source on level nu: channel nu.
        const auto& ch = ctx.chan[nu];
        const cplx pref = -0.5 / ch.theta;
        const auto An = ch.A.topRows(n_x);
        const auto Bn = ch.B.topRows(n_x);
        add_output(cl, nu, cl, nu,
                   pref * (E * An + sB * iu * ch.theta * Bn));
        if (nu >= model.p)
          add_output(cl, nu, cu, nu - model.p,
                     pref * ladder_coeff(nu, model.p) * An);
      }
    }
  }

  ctx.lu.compute(sys);
  ctx.rcond = ctx.lu.rcond();
  if (!(ctx.rcond >= opts.rcond_min))
    throw solver_error(opts.label + ": ill-conditioned system, rcond = " +
                       std::to_string(ctx.rcond));
  if (opts.keep_matrix)
    ctx.system = std::move(sys);
  return ctx;
}

// Incident mode field, edge-referenced: right-going modes are normalized at
// x = a, left-going modes at x = b, so evanescent incidents stay bounded.
inline cplx incident_phase(const LeafContext& ctx, const Mode& mode,
                           double x) {
  const double x_ref = mode.right_going() ? ctx.a : ctx.b;
  return std::exp(iu * mode.xi * (x - x_ref));
}

inline Eigen::VectorXcd incident_field(const LeafContext& ctx,
                                       const Mode& mode, double x, double y) {
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(ctx.model.spinor_dim);
  const cplx e = incident_phase(ctx, mode, x);
  const Eigen::VectorXd phi_y = hermite_eval(y, mode.n);
  if (mode.n >= ctx.model.p)
    psi(2 * mode.block) = mode.upper_coeff * phi_y(mode.n - ctx.model.p) * e;
  psi(2 * mode.block + 1) = mode.lower_coeff * phi_y(mode.n) * e;
  return psi;
}

// Right-hand side V psi_in projected on the collocation/Galerkin grid.  The
// effective potential is the level truncation P V P, so components of the
// incident above n_y are annihilated; mode families up to n_y + p are
// admissible because their upper component still lies in the retained space.
inline Eigen::VectorXcd incident_rhs(const LeafContext& ctx,
                                     const Mode& mode) {
  const int nlev = ctx.n_levels;
  if (mode.n >= nlev + ctx.model.p)
    throw std::invalid_argument("incident_rhs: mode level above n_y + p");
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(ctx.size());
  const int col_u = 2 * mode.block * nlev + (mode.n - ctx.model.p);
  const int col_l = (2 * mode.block + 1) * nlev + mode.n;
  for (int i = 0; i < ctx.n_x; ++i) {
    const cplx e = incident_phase(ctx, mode, ctx.xnodes(i));
    Eigen::VectorXcd wsum =
        Eigen::VectorXcd::Zero(ctx.model.spinor_dim * nlev);
    if (mode.n < nlev) wsum += ctx.W[i].col(col_l) * (mode.lower_coeff * e);
    if (mode.n >= ctx.model.p)
      wsum += ctx.W[i].col(col_u) * (mode.upper_coeff * e);
    for (int r = 0; r < ctx.model.spinor_dim * nlev; ++r)
      rhs(r * ctx.n_x + i) += wsum(r);
  }
  return rhs;
}

// Density value at an arbitrary point from its coefficient vector.
inline Eigen::VectorXcd density_value(const LeafContext& ctx,
                                      const Eigen::VectorXcd& rho, double x,
                                      double y) {
  const Eigen::VectorXd phi_y = hermite_eval(y, ctx.opts.n_y);
  const Eigen::VectorXd pj =
      legendre_eval(2.0 * (x - ctx.a) / (ctx.b - ctx.a) - 1.0, ctx.n_x - 1);
  Eigen::VectorXcd val = Eigen::VectorXcd::Zero(ctx.model.spinor_dim);
  for (int c = 0; c < ctx.model.spinor_dim; ++c)
    for (int m = 0; m < ctx.n_levels; ++m)
      val(c) += phi_y(m) *
                rho.segment(ctx.index(c, m, 0), ctx.n_x)
                    .cwiseProduct(pj.cast<cplx>())
                    .sum();
  return val;
}

// Scattered field psi_sc = -(G rho) at an arbitrary point.
inline Eigen::VectorXcd scattered_field(const LeafContext& ctx,
                                        const Eigen::VectorXcd& rho, double x,
                                        double y) {
  const int nlev = ctx.n_levels;
  const int p = ctx.model.p;
  const double E = ctx.energy;
  std::vector<ExpMoments> mom(nlev + p);
  for (int m = 0; m < nlev + p; ++m)
    mom[m] = legendre_exp_moments(ctx.a, ctx.b, ctx.n_x,
                                  channel_rate(E, m, p), x);
  const Eigen::VectorXd phi_y = hermite_eval(y, ctx.opts.n_y + p);

  Eigen::VectorXcd field = Eigen::VectorXcd::Zero(ctx.model.spinor_dim);
  for (int blk = 0; blk < ctx.model.blocks(); ++blk) {
    const bool conj = ctx.model.conjugated(blk);
    const double sB = conj ? -1.0 : 1.0;
    const int cu = 2 * blk;
    const int cl = 2 * blk + 1;
    for (int nu = 0; nu < nlev; ++nu) {
      const auto rho_u = rho.segment(ctx.index(cu, nu, 0), ctx.n_x);
      const auto rho_l = rho.segment(ctx.index(cl, nu, 0), ctx.n_x);
      {  // Upper source, channel nu + p.
        const cplx theta = channel_rate(E, nu + p, p);
        const cplx pref = -0.5 / theta;
        const Eigen::VectorXcd fu =
            pref * (E * mom[nu + p].A - sB * iu * theta * mom[nu + p].B);
        field(cu) += fu.cwiseProduct(rho_u).sum() * phi_y(nu);
        field(cl) += pref * ladder_coeff(nu + p, p) *
                     mom[nu + p].A.cwiseProduct(rho_u).sum() * phi_y(nu + p);
      }
      {  // Lower source, channel nu.
        const cplx theta = channel_rate(E, nu, p);
        const cplx pref = -0.5 / theta;
        const Eigen::VectorXcd fl =
            pref * (E * mom[nu].A + sB * iu * theta * mom[nu].B);
        field(cl) += fl.cwiseProduct(rho_l).sum() * phi_y(nu);
        if (nu >= p)
          field(cu) += pref * ladder_coeff(nu, p) *
                       mom[nu].A.cwiseProduct(rho_l).sum() * phi_y(nu - p);
      }
    }
  }
  return -field;
}

inline Eigen::VectorXcd total_field(const LeafContext& ctx, const Mode& mode,
                                    const Eigen::VectorXcd& rho, double x,
                                    double y) {
  return incident_field(ctx, mode, x, y) + scattered_field(ctx, rho, x, y);
}

// Outgoing scattered amplitudes on the retained mode list, referenced at the
// requested edge.  The level-n output family is exactly proportional to the
// branch profile, so a unit-norm profile projection recovers the amplitude.
inline Eigen::VectorXcd outgoing_amplitudes(const LeafContext& ctx,
                                            const ModeBasis& basis,
                                            const Eigen::VectorXcd& rho,
                                            bool right_edge) {
  const std::vector<int>& list =
      right_edge ? basis.right_list : basis.left_list;
  const int row = right_edge ? ctx.n_x + 1 : ctx.n_x;
  const int nlev = ctx.n_levels;
  const int p = ctx.model.p;
  const double E = ctx.energy;

  Eigen::VectorXcd amps(list.size());
  for (std::size_t k = 0; k < list.size(); ++k) {
    const Mode& mode = basis.modes[list[k]];
    const int n = mode.n;
    if (n >= nlev + p)
      throw std::invalid_argument(
          "outgoing_amplitudes: basis level above n_y + p");
    const auto& ch = ctx.chan[n];
    const cplx pref = -0.5 / ch.theta;
    const double sB = mode.conjugated ? -1.0 : 1.0;
    const int cu = 2 * mode.block;
    const int cl = 2 * mode.block + 1;
    const Eigen::VectorXcd Ae = ch.A.row(row).transpose();
    const Eigen::VectorXcd Be = ch.B.row(row).transpose();
    const double beta = ladder_coeff(n, p);

    cplx up(0.0, 0.0), low(0.0, 0.0);
    if (n < nlev) {  // lower sources exist on this level
      const auto rho_l = rho.segment(ctx.index(cl, n, 0), ctx.n_x);
      const Eigen::VectorXcd fl = pref * (E * Ae + sB * iu * ch.theta * Be);
      low += fl.cwiseProduct(rho_l).sum();
      if (n >= p) up += pref * beta * Ae.cwiseProduct(rho_l).sum();
    }
    if (n >= p) {  // upper sources on level n - p feed the same channel
      const auto rho_u = rho.segment(ctx.index(cu, n - p, 0), ctx.n_x);
      const Eigen::VectorXcd fu = pref * (E * Ae - sB * iu * ch.theta * Be);
      up += fu.cwiseProduct(rho_u).sum();
      low += pref * beta * Ae.cwiseProduct(rho_u).sum();
    }
    amps(k) = -(std::conj(mode.upper_coeff) * up +
                std::conj(mode.lower_coeff) * low);
  }
  return amps;
}

}  // namespace dwscat
