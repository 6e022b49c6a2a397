// cli.hpp
//
// Run configuration and the operations behind the command-line driver.
// Every operation is a pure function from a RunConfig to output streams so
// the driver binary and the test suite share one code path:
//
//   cmd_branches  - dispersion-branch samples for plotting,
//   cmd_verify    - invariant checks with a pass/fail report,
//   cmd_converge  - self-convergence studies in n_x, n_y, or merge depth,
//   cmd_scatter   - a single scattering-matrix dump with observables,
//   cmd_sweep     - one-sided transmissions against support length,
//   cmd_index     - spectral flows and the Z2 index from band data.
//
// Configuration comes from flat `key = value` text files; the driver applies
// per-flag overrides through the same key/value entry point so both paths
// validate identically.  CSV outputs carry a versioned header comment and a
// fixed column row; numeric fields are printed with 17 significant digits so
// identical configurations reproduce bitwise-identical files (the runtime
// column is the documented exception).

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dwscat/common.hpp"
#include "dwscat/model.hpp"
#include "dwscat/scatter.hpp"
#include "dwscat/solver.hpp"
#include "dwscat/spectral.hpp"
#include "dwscat/theory.hpp"

namespace dwscat {

// ---------------------------------------------------------------------------
// Run configuration.  Field defaults double as the documented schema; every
// key accepted by set_config_value can appear in a config file or as a flag.
// ---------------------------------------------------------------------------
struct RunConfig {
  // model.*
  int model_m = 1;
  int model_n = 1;
  int model_p = 1;
  // energy
  double energy = 1.8;
  // perturbation.*  (catalogue name, "zero", or "random")
  std::string perturbation = "V_TR";
  double length = 1.0;
  std::uint64_t seed = 1;
  // disc.*
  int n_x = 12;
  int n_y = 24;
  int n_chan = -1;  // mode-basis level cutoff; -1 means n_y + p
  double leaf_max_length = 1.0 / 16.0;
  // workers
  int workers = 1;
  // sweep.*
  std::vector<double> sweep_lengths = {1, 2, 4, 8, 16, 32};
  // converge.*
  std::string converge_target = "nx";  // "nx", "ny", or "L"
  std::vector<int> converge_values = {2, 4, 6, 8, 10, 12};
  int converge_reference = 20;
  // window.*  (0, 0 means derive energy -+ 0.1)
  double window_lo = 0.0;
  double window_hi = 0.0;
  // branches.*
  double branches_xi_max = 4.0;
  int branches_samples = 129;
  int branches_n_max = 6;
  // out.*
  std::string out_dir = ".";
  std::string out_prefix = "";
  // tol.*
  double tol_unitarity = 1e-8;
  double tol_trace = 1e-8;
  double tol_skew = 1e-8;
  double tol_merge = 1e-9;
  double tol_flag = 1e-6;  // sweep rows above this unitarity defect are flagged
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty())
    throw std::invalid_argument("config key " + key + ": bad number '" + v +
                                "'");
  return out;
}

inline long long to_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty())
    throw std::invalid_argument("config key " + key + ": bad integer '" + v +
                                "'");
  return out;
}

template <typename T, typename Parse>
std::vector<T> to_list(const std::string& key, const std::string& v,
                       Parse parse) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty())
      throw std::invalid_argument("config key " + key + ": empty list entry");
    out.push_back(parse(key, item));
  }
  if (out.empty())
    throw std::invalid_argument("config key " + key + ": empty list");
  return out;
}

}  // namespace detail

// Single entry point for configuration values; both config files and driver
// flags funnel through here so validation and typing stay identical.
inline void set_config_value(RunConfig& cfg, const std::string& key,
                             const std::string& value) {
  using detail::to_double;
  using detail::to_int;
  auto as_int = [&](int lo) {
    const long long v = to_int(key, value);
    if (v < lo)
      throw std::invalid_argument("config key " + key + ": must be >= " +
                                  std::to_string(lo));
    return static_cast<int>(v);
  };
  if (key == "model.M")
    cfg.model_m = as_int(0);
  else if (key == "model.N")
    cfg.model_n = as_int(0);
  else if (key == "model.p")
    cfg.model_p = as_int(1);
  else if (key == "energy")
    cfg.energy = to_double(key, value);
  else if (key == "perturbation.name")
    cfg.perturbation = detail::trim(value);
  else if (key == "perturbation.length")
    cfg.length = to_double(key, value);
  else if (key == "perturbation.seed")
    cfg.seed = static_cast<std::uint64_t>(to_int(key, value));
  else if (key == "disc.n_x")
    cfg.n_x = as_int(2);
  else if (key == "disc.n_y")
    cfg.n_y = as_int(1);
  else if (key == "disc.n_chan")
    cfg.n_chan = as_int(-1);
  else if (key == "disc.leaf_max_length")
    cfg.leaf_max_length = to_double(key, value);
  else if (key == "workers")
    cfg.workers = as_int(1);
  else if (key == "sweep.lengths")
    cfg.sweep_lengths = detail::to_list<double>(key, value, to_double);
  else if (key == "converge.target")
    cfg.converge_target = detail::trim(value);
  else if (key == "converge.values")
    cfg.converge_values = detail::to_list<int>(
        key, value,
        [](const std::string& k, const std::string& v) {
          return static_cast<int>(detail::to_int(k, v));
        });
  else if (key == "converge.reference")
    cfg.converge_reference = as_int(1);
  else if (key == "window.lo")
    cfg.window_lo = to_double(key, value);
  else if (key == "window.hi")
    cfg.window_hi = to_double(key, value);
  else if (key == "branches.xi_max")
    cfg.branches_xi_max = to_double(key, value);
  else if (key == "branches.samples")
    cfg.branches_samples = as_int(2);
  else if (key == "branches.n_max")
    cfg.branches_n_max = as_int(1);
  else if (key == "out.dir")
    cfg.out_dir = detail::trim(value);
  else if (key == "out.prefix")
    cfg.out_prefix = detail::trim(value);
  else if (key == "tol.unitarity")
    cfg.tol_unitarity = to_double(key, value);
  else if (key == "tol.trace")
    cfg.tol_trace = to_double(key, value);
  else if (key == "tol.skew")
    cfg.tol_skew = to_double(key, value);
  else if (key == "tol.merge")
    cfg.tol_merge = to_double(key, value);
  else if (key == "tol.flag")
    cfg.tol_flag = to_double(key, value);
  else
    throw std::invalid_argument("unknown config key '" + key + "'");
}

// Flat `key = value` text: one assignment per line, `#` starts a comment,
// blank lines ignored.
inline void load_config_text(RunConfig& cfg, std::istream& in,
                             const std::string& origin) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
    set_config_value(cfg, detail::trim(line.substr(0, eq)),
                     detail::trim(line.substr(eq + 1)));
  }
}

inline void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path);
  load_config_text(cfg, in, path);
}

// ---------------------------------------------------------------------------
// Shared construction helpers.
// ---------------------------------------------------------------------------
inline BlockModel config_model(const RunConfig& cfg) {
  return build_model(cfg.model_m, cfg.model_n, cfg.model_p);
}

// "zero" and "random" are synthesized; everything else is a catalogue name.
// `length` overrides the configured support length when >= 0 (the sweep uses
// one perturbation whose support covers its largest length).
inline PerturbationSpec config_perturbation(const RunConfig& cfg,
                                            const BlockModel& model,
                                            double length = -1.0) {
  const double l = length >= 0.0 ? length : cfg.length;
  PerturbationSpec V;
  if (cfg.perturbation == "zero")
    V = zero_perturbation(model.spinor_dim, l);
  else if (cfg.perturbation == "random")
    V = random_ftr(cfg.seed, model,
                   perturbation_library("v1_scalar", cfg.energy, l));
  else
    V = perturbation_library(cfg.perturbation, cfg.energy, l);
  if (V.dim != model.spinor_dim)
    throw std::invalid_argument(
        "perturbation " + V.name + " acts on " + std::to_string(V.dim) +
        " spinor components but the model has " +
        std::to_string(model.spinor_dim));
  return V;
}

inline int config_n_chan(const RunConfig& cfg) {
  return cfg.n_chan >= 0 ? cfg.n_chan : cfg.n_y + cfg.model_p;
}

inline ChainOptions config_chain(const RunConfig& cfg) {
  ChainOptions copts;
  copts.max_leaf_len = cfg.leaf_max_length;
  copts.workers = cfg.workers;
  copts.leaf.n_x = cfg.n_x;
  copts.leaf.n_y = cfg.n_y;
  return copts;
}

inline std::pair<double, double> config_window(const RunConfig& cfg) {
  double lo = cfg.window_lo, hi = cfg.window_hi;
  if (lo == 0.0 && hi == 0.0) {
    lo = cfg.energy - 0.1;
    hi = cfg.energy + 0.1;
  }
  if (!(0.0 < lo && lo < hi))
    throw std::invalid_argument("window must satisfy 0 < lo < hi");
  return {lo, hi};
}

// ---------------------------------------------------------------------------
// CSV plumbing.
// ---------------------------------------------------------------------------
inline std::string csv_num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline void csv_header(std::ostream& os, const std::string& command,
                       const std::string& columns) {
  os << "# dwscat-csv v1 " << command << "\n" << columns << "\n";
}

// ---------------------------------------------------------------------------
// branches: per-branch (id, xi, E(xi)) samples on a uniform xi grid.  Each
// block contributes p linear branches (sign fixed by the block type) and the
// two sheets +-sqrt(xi^2 + beta_n^2) for each dispersive family.
// ---------------------------------------------------------------------------
inline int cmd_branches(const RunConfig& cfg, std::ostream& csv) {
  const BlockModel model = config_model(cfg);
  if (cfg.branches_xi_max <= 0.0)
    throw std::invalid_argument("branches.xi_max must be positive");
  csv_header(csv, "branches", "block,branch,xi,energy");
  const int samples = cfg.branches_samples;
  auto emit = [&](int block, const std::string& label, auto&& energy_of) {
    for (int i = 0; i < samples; ++i) {
      const double xi = -cfg.branches_xi_max +
                        2.0 * cfg.branches_xi_max * i / (samples - 1);
      csv << block << "," << label << "," << csv_num(xi) << ","
          << csv_num(energy_of(xi)) << "\n";
    }
  };
  for (int b = 0; b < model.blocks(); ++b) {
    const double sgn = model.conjugated(b) ? +1.0 : -1.0;
    for (int copy = 0; copy < model.p; ++copy)
      emit(b, "lin" + std::to_string(copy),
           [sgn](double xi) { return sgn * xi; });
    for (int n = model.p; n <= cfg.branches_n_max; ++n) {
      const double beta = ladder_coeff(n, model.p);
      emit(b, "n" + std::to_string(n) + "+",
           [beta](double xi) { return std::hypot(xi, beta); });
      emit(b, "n" + std::to_string(n) + "-",
           [beta](double xi) { return -std::hypot(xi, beta); });
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// index: spectral flows over an energy window and the resulting invariant.
// Balanced models use the selection branches (one flow copy per direct
// block); chiral models use the full branch set.
// ---------------------------------------------------------------------------
inline int cmd_index(const RunConfig& cfg, std::ostream& csv,
                     std::ostream& report) {
  const BlockModel model = config_model(cfg);
  const auto [lo, hi] = config_window(cfg);
  if (model.N != 0 && model.M != model.N)
    throw std::invalid_argument(
        "index requires a balanced (M = N) or chiral (N = 0) model");
  int n_max = model.p;
  while (n_max < 400 && ladder_coeff(n_max, model.p) < hi) ++n_max;
  const bool chiral = (model.N == 0);
  const std::vector<BranchCurve> curves =
      chiral ? model_branches(model, n_max, lo, hi)
             : selection_branches(model, n_max, lo, hi);
  csv_header(csv, "index", "row,label,value");
  int sigma = 0;
  for (const BranchCurve& c : curves) {
    const int f = spectral_flow(c);
    sigma += f;
    csv << "flow," << c.label << "," << f << "\n";
  }
  const int idx = (sigma % 2 == 0) ? +1 : -1;
  csv << "sigma," << (chiral ? "full" : "selection") << "," << sigma << "\n";
  csv << "index2,," << (idx > 0 ? "+1" : "-1") << "\n";
  report << "window [" << csv_num(lo) << ", " << csv_num(hi) << "]: "
         << curves.size() << (chiral ? " branches" : " selection branches")
         << ", sigma = " << sigma << ", index2 = " << (idx > 0 ? "+1" : "-1")
         << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// scatter: one full solve, one observables row, and a structured-text
// sidecar holding the channel maps and the complex matrix.
// ---------------------------------------------------------------------------
inline void write_smatrix_sidecar(std::ostream& os, const BlockModel& model,
                                  const RunConfig& cfg,
                                  const PerturbationSpec& V,
                                  const ModeBasis& basis,
                                  const Eigen::MatrixXcd& S) {
  os << "smatrix v1\n";
  os << "model " << model.M << " " << model.N << " " << model.p << "\n";
  os << "energy " << csv_num(cfg.energy) << "\n";
  os << "perturbation " << V.name << " length " << csv_num(V.support_length)
     << "\n";
  os << "layout rows=[right,left] cols=[right,left] blocks=[[t+,r-],[r+,t-]]"
     << "\n";
  auto dump = [&](const char* tag, const std::vector<int>& list, int count) {
    os << "modes " << tag << " " << count << "\n";
    for (int k = 0; k < count; ++k) {
      const Mode& m = basis.modes[list[k]];
      os << k << " block=" << m.block << " conj=" << (m.conjugated ? 1 : 0)
         << " n=" << m.n << " eps=" << m.eps << " xi=" << csv_num(m.xi.real())
         << " " << csv_num(m.xi.imag()) << " current=" << csv_num(m.current)
         << "\n";
    }
  };
  dump("right", basis.right_list, basis.n_plus);
  dump("left", basis.left_list, basis.n_minus);
  os << "matrix\n";
  const std::streamsize keep = os.precision(17);
  write_matrix_text(os, S);
  os.precision(keep);
}

inline int cmd_scatter(const RunConfig& cfg, std::ostream& csv,
                       std::ostream& sidecar) {
  const BlockModel model = config_model(cfg);
  const PerturbationSpec V = config_perturbation(cfg, model);
  const ModeBasis basis = enumerate_modes(model, cfg.energy, config_n_chan(cfg));
  const ChainOptions copts = config_chain(cfg);
  const int n_leaves = std::max(
      1, static_cast<int>(std::ceil(cfg.length / copts.max_leaf_len - 1e-12)));
  const auto t0 = std::chrono::steady_clock::now();
  const TRMatrix tr =
      chain_tr(model, cfg.energy, V, 0.0, cfg.length, basis, copts);
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                t0)
          .count();
  const Eigen::MatrixXcd S = extract_smatrix(tr, basis);
  const ScatterObservables obs = observables(S, basis);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  double rp = nan, rm = nan, smx = nan;
  if (model.ftr_symmetric && V.declared_ftr) {
    const KramersPairing pairing = kramers_pairing(model, basis);
    const FtrDefects d = ftr_defects(S, basis, pairing);
    rp = d.rp_skew;
    rm = d.rm_skew;
    smx = d.smatrix;
  }
  csv_header(csv, "scatter",
             "M,N,p,energy,perturbation,length,n_x,n_y,n_chan,n_leaves,"
             "n_plus,n_minus,trans_plus,trans_minus,sigma2pi,"
             "unitarity_residual,trace_residual,rp_skew,rm_skew,"
             "ftr_smatrix_residual,index2,runtime_ms");
  csv << model.M << "," << model.N << "," << model.p << ","
      << csv_num(cfg.energy) << "," << V.name << "," << csv_num(cfg.length)
      << "," << cfg.n_x << "," << cfg.n_y << "," << config_n_chan(cfg) << ","
      << n_leaves << "," << obs.n_plus << "," << obs.n_minus << ","
      << csv_num(obs.trans_plus) << "," << csv_num(obs.trans_minus) << ","
      << csv_num(obs.sigma2pi) << "," << csv_num(obs.unitarity_defect) << ","
      << csv_num(obs.trace_defect) << "," << csv_num(rp) << "," << csv_num(rm)
      << "," << csv_num(smx) << ","
      << index2(model, basis, obs.sigma2pi) << "," << csv_num(ms) << "\n";
  write_smatrix_sidecar(sidecar, model, cfg, V, basis, S);
  return 0;
}

// ---------------------------------------------------------------------------
// verify: invariant suite with one PASS/FAIL/SKIP line per check; the return
// value counts failures.
// ---------------------------------------------------------------------------
inline int cmd_verify(const RunConfig& cfg, std::ostream& report) {
  const BlockModel model = config_model(cfg);
  const PerturbationSpec V = config_perturbation(cfg, model);
  const ModeBasis basis = enumerate_modes(model, cfg.energy, config_n_chan(cfg));
  const ChainOptions copts = config_chain(cfg);
  int fails = 0;
  auto check = [&](const std::string& name, bool pass, double value,
                   double tol) {
    report << "check " << name << ": " << (pass ? "PASS" : "FAIL") << " ("
           << csv_num(value) << " vs tol " << csv_num(tol) << ")\n";
    if (!pass) ++fails;
  };
  auto failed = [&](const std::string& name, const std::string& why) {
    report << "check " << name << ": FAIL (" << why << ")\n";
    ++fails;
  };
  auto skip = [&](const std::string& name, const std::string& why) {
    report << "check " << name << ": SKIP (" << why << ")\n";
  };

  Eigen::MatrixXcd S;
  bool solved = false;
  try {
    const TRMatrix tr =
        chain_tr(model, cfg.energy, V, 0.0, cfg.length, basis, copts);
    S = extract_smatrix(tr, basis);
    solved = true;
    const ScatterObservables obs = observables(S, basis);
    check("unitarity", obs.unitarity_defect <= cfg.tol_unitarity,
          obs.unitarity_defect, cfg.tol_unitarity);
    check("trace-identity", obs.trace_defect <= cfg.tol_trace, obs.trace_defect,
          cfg.tol_trace);
  } catch (const std::exception& e) {
    failed("unitarity", e.what());
    failed("trace-identity", e.what());
  }

  const bool ftr_case = model.ftr_symmetric && V.declared_ftr;
  if (!model.ftr_symmetric) {
    skip("skewness", "model is not balanced (M != N)");
  } else if (!V.declared_ftr) {
    skip("skewness", "perturbation is not time-reversal symmetric");
  } else if (!solved) {
    failed("skewness", "scattering solve failed");
  } else {
    const KramersPairing pairing = kramers_pairing(model, basis);
    const FtrDefects d = ftr_defects(S, basis, pairing);
    const double skew = std::max(d.rp_skew, d.rm_skew);
    check("skewness", skew <= cfg.tol_skew, skew, cfg.tol_skew);
  }

  if (ftr_case) {
    std::vector<std::pair<double, double>> grid;
    for (double fx : {0.15, 0.45, 0.85})
      for (double y : {-1.2, 0.3, 0.9})
        grid.emplace_back(fx * V.support_length, y);
    const double r = ftr_residual(V, model, grid);
    check("ftr-residual", r <= 1e-10, r, 1e-10);
  } else {
    skip("ftr-residual", "not a declared time-reversal symmetric case");
  }

  // Partition invariance: splitting the same window into two or four leaves
  // must give the same scattering matrix.  Leaf sizes stay at or below the
  // configured maximum so both partitions sit at matched resolution and the
  // difference isolates the composition algebra.
  try {
    const double w = std::min(cfg.length, 2.0 * copts.max_leaf_len);
    const TRMatrix two = binary_merge(
        solve_leaves(model, cfg.energy, V, 0.0, w, 2, basis, copts));
    const TRMatrix four = binary_merge(
        solve_leaves(model, cfg.energy, V, 0.0, w, 4, basis, copts));
    const double err =
        (extract_smatrix(two, basis) - extract_smatrix(four, basis)).norm();
    check("merge-consistency", err <= cfg.tol_merge, err, cfg.tol_merge);
  } catch (const std::exception& e) {
    failed("merge-consistency", e.what());
  }

  if (V.name == "zero") {
    if (solved) {
      const double err =
          (S - extract_smatrix(free_tr(basis, 0.0, cfg.length), basis)).norm();
      check("free-identity", err <= 1e-12, err, 1e-12);
    } else {
      failed("free-identity", "scattering solve failed");
    }
  } else {
    skip("free-identity", "perturbation is not zero");
  }

  report << (fails == 0 ? "verify: all checks passed"
                        : "verify: " + std::to_string(fails) +
                              " check(s) failed")
         << "\n";
  return fails;
}

// ---------------------------------------------------------------------------
// converge: relative Frobenius error of the scattering matrix against a
// strictly finer reference, varying one knob (nx, ny, or merge depth L).
// Rows whose error reaches the 1e-12 floor are flagged converged so
// non-monotone rounding tails read as success, not divergence.
// ---------------------------------------------------------------------------
inline int cmd_converge(const RunConfig& cfg, std::ostream& csv) {
  const BlockModel model = config_model(cfg);
  const PerturbationSpec V = config_perturbation(cfg, model);
  const std::string& target = cfg.converge_target;
  if (target != "nx" && target != "ny" && target != "L")
    throw std::invalid_argument("converge.target must be nx, ny, or L");
  if (cfg.converge_values.empty())
    throw std::invalid_argument("converge.values must be nonempty");
  for (std::size_t i = 1; i < cfg.converge_values.size(); ++i)
    if (cfg.converge_values[i] <= cfg.converge_values[i - 1])
      throw std::invalid_argument("converge.values must increase");
  const int vmax = cfg.converge_values.back();
  if (target == "nx" && cfg.converge_reference <= vmax)
    throw std::invalid_argument("converge.reference must exceed the largest n_x");
  if (target == "ny" && cfg.converge_reference <= vmax)
    throw std::invalid_argument("converge.reference must exceed the largest n_y");
  if (target == "L" && cfg.converge_reference <= cfg.n_x)
    throw std::invalid_argument(
        "converge.reference (direct-solve n_x) must exceed disc.n_x");

  // One solve per requested point; `knob` returns the flux-normalized
  // scattering matrix for the given parameter value.
  auto direct = [&](int nx, int ny, const ModeBasis& basis) {
    LeafOptions lopts;
    lopts.n_x = nx;
    lopts.n_y = ny;
    lopts.label = "converge direct";
    return extract_smatrix(
        leaf_tr(model, cfg.energy, V, 0.0, cfg.length, basis, lopts), basis);
  };
  const ModeBasis base_basis =
      enumerate_modes(model, cfg.energy, config_n_chan(cfg));

  Eigen::MatrixXcd S_ref;
  std::vector<std::pair<int, Eigen::MatrixXcd>> points;
  try {
    if (target == "nx") {
      S_ref = direct(cfg.converge_reference, cfg.n_y, base_basis);
      for (int v : cfg.converge_values)
        points.emplace_back(v, direct(v, cfg.n_y, base_basis));
    } else if (target == "ny") {
      const ModeBasis ref_basis = enumerate_modes(
          model, cfg.energy, cfg.converge_reference + model.p);
      S_ref = direct(cfg.n_x, cfg.converge_reference, ref_basis);
      for (int v : cfg.converge_values) {
        const ModeBasis b = enumerate_modes(model, cfg.energy, v + model.p);
        points.emplace_back(v, direct(cfg.n_x, v, b));
      }
    } else {
      S_ref = direct(cfg.converge_reference, cfg.n_y, base_basis);
      ChainOptions copts = config_chain(cfg);
      for (int v : cfg.converge_values) {
        if (v > 16)
          throw std::invalid_argument("merge depth L is limited to 16");
        const int n_leaves = 1 << v;
        copts.leaf.label = "converge depth " + std::to_string(v);
        const TRMatrix tr = binary_merge(solve_leaves(
            model, cfg.energy, V, 0.0, cfg.length, n_leaves, base_basis,
            copts));
        points.emplace_back(v, extract_smatrix(tr, base_basis));
      }
    }
  } catch (const band_edge_error&) {
    throw;
  } catch (const std::exception& e) {
    throw solver_error(std::string("convergence reference or point failed: ") +
                       e.what());
  }

  csv_header(csv, "converge", "param,value,frobenius_error,converged");
  const double ref_norm = S_ref.norm();
  const char* param =
      target == "nx" ? "n_x" : (target == "ny" ? "n_y" : "L");
  for (const auto& [v, S] : points) {
    const double err = (S - S_ref).norm() / ref_norm;
    csv << param << "," << v << "," << csv_num(err) << ","
        << (err <= 1e-12 ? 1 : 0) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// sweep: transmissions against perturbation support length.  One
// perturbation, supported on [0, max length], is consumed leaf by leaf; each
// requested length is a recorded prefix of the same left-to-right
// composition, so every leaf is solved exactly once.  Failures mark the
// remaining rows instead of aborting the sweep.
// ---------------------------------------------------------------------------
inline int cmd_sweep(const RunConfig& cfg, std::ostream& csv) {
  const BlockModel model = config_model(cfg);
  if (cfg.sweep_lengths.empty())
    throw std::invalid_argument("sweep.lengths must be nonempty");
  const double leaf_len = cfg.leaf_max_length;
  if (!(leaf_len > 0.0))
    throw std::invalid_argument("disc.leaf_max_length must be positive");
  std::vector<int> counts;
  for (std::size_t i = 0; i < cfg.sweep_lengths.size(); ++i) {
    const double l = cfg.sweep_lengths[i];
    if (i > 0 && l <= cfg.sweep_lengths[i - 1])
      throw std::invalid_argument("sweep.lengths must increase");
    const double q = l / leaf_len;
    const int c = static_cast<int>(std::llround(q));
    if (c < 1 || std::abs(q - c) > 1e-9)
      throw std::invalid_argument(
          "sweep lengths must be positive multiples of the leaf length");
    counts.push_back(c);
  }
  const PerturbationSpec V =
      config_perturbation(cfg, model, cfg.sweep_lengths.back());
  const ModeBasis basis =
      enumerate_modes(model, cfg.energy, config_n_chan(cfg));
  const ChainOptions copts = config_chain(cfg);
  const bool ftr_case = model.ftr_symmetric && V.declared_ftr;
  KramersPairing pairing;
  if (ftr_case) pairing = kramers_pairing(model, basis);

  csv_header(csv, "sweep",
             "l,trans_plus,neg_trans_minus,sigma2pi,unitarity_residual,"
             "skew_residual,runtime_ms,status");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto t_prev = std::chrono::steady_clock::now();
  auto emit_row = [&](double l, const TRMatrix& tr) {
    const Eigen::MatrixXcd S = extract_smatrix(tr, basis);
    const ScatterObservables obs = observables(S, basis);
    double skew = nan;
    if (ftr_case) {
      const FtrDefects d = ftr_defects(S, basis, pairing);
      skew = std::max(d.rp_skew, d.rm_skew);
    }
    const auto now = std::chrono::steady_clock::now();
    const double ms =
        std::chrono::duration<double, std::milli>(now - t_prev).count();
    t_prev = now;
    csv << csv_num(l) << "," << csv_num(obs.trans_plus) << ","
        << csv_num(-obs.trans_minus) << "," << csv_num(obs.sigma2pi) << ","
        << csv_num(obs.unitarity_defect) << "," << csv_num(skew) << ","
        << csv_num(ms) << ","
        << (obs.unitarity_defect > cfg.tol_flag ? "flagged" : "ok") << "\n";
  };

  const int total = counts.back();
  const int chunk = std::max(1, cfg.workers);
  TRMatrix acc;
  std::size_t next = 0;
  std::string failure;
  for (int k0 = 0; k0 < total && failure.empty(); k0 += chunk) {
    const int nc = std::min(chunk, total - k0);
    std::vector<TRMatrix> leaves;
    try {
      leaves = solve_leaves(model, cfg.energy, V, k0 * leaf_len,
                            (k0 + nc) * leaf_len, nc, basis, copts);
    } catch (const std::exception& e) {
      failure = e.what();
      break;
    }
    for (int j = 0; j < nc && failure.empty(); ++j) {
      const int k = k0 + j;
      try {
        acc = (k == 0) ? leaves[j] : merge_tr(acc, leaves[j]);
      } catch (const std::exception& e) {
        failure = e.what();
        break;
      }
      if (next < counts.size() && k + 1 == counts[next]) {
        emit_row(cfg.sweep_lengths[next], acc);
        ++next;
      }
    }
  }
  int failed_rows = 0;
  if (next < counts.size()) {
    std::string why = failure.empty() ? "sweep aborted" : failure;
    std::replace(why.begin(), why.end(), ',', ';');
    std::replace(why.begin(), why.end(), '\n', ' ');
    for (; next < counts.size(); ++next, ++failed_rows)
      csv << csv_num(cfg.sweep_lengths[next])
          << ",nan,nan,nan,nan,nan,nan,failed:" << why << "\n";
  }
  return failed_rows == 0 ? 0 : 1;
}

}  // namespace dwscat
