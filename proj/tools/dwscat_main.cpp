// dwscat_main.cpp
//
// Command-line driver.  Subcommands: branches, verify, converge, scatter,
// sweep, index.  `--config <path>` loads a flat `key = value` file first;
// any flags given on the command line override the file.  Flags are plumbed
// through the same key/value entry point as config files, so both paths
// share one validation layer.  The only environment variable honored is
// DWSCAT_OUT_DIR, which overrides the output directory.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "dwscat/cli.hpp"

namespace {

// Per-subcommand flag bundle.  Values are held as raw strings and applied
// through set_config_value only for flags the user actually passed, so
// precedence is: defaults < config file < DWSCAT_OUT_DIR < flags.
struct FlagSet {
  CLI::App* sub = nullptr;
  std::string config_path;
  std::map<std::string, std::string> holder;
  std::vector<std::pair<CLI::Option*, std::string>> opts;

  void add(const std::string& flag, const std::string& key,
           const std::string& desc) {
    opts.emplace_back(sub->add_option(flag, holder[key], desc), key);
  }

  void add_common() {
    sub->add_option("--config", config_path,
                    "flat `key = value` config file; flags override");
    add("--M", "model.M", "number of direct Dirac blocks");
    add("--N", "model.N", "number of conjugate Dirac blocks");
    add("--p", "model.p", "ladder order of the blocks");
    add("--energy", "energy", "scattering energy E");
    add("--perturbation", "perturbation.name",
        "catalogue name, 'zero', or 'random'");
    add("--length", "perturbation.length", "perturbation support length");
    add("--seed", "perturbation.seed", "seed for the random perturbation");
    add("--nx", "disc.n_x", "Legendre/collocation order per leaf");
    add("--ny", "disc.n_y", "highest retained Hermite level");
    add("--nchan", "disc.n_chan", "channel level cutoff (-1: n_y + p)");
    add("--leaf-len", "disc.leaf_max_length", "maximum leaf interval length");
    add("--workers", "workers", "worker threads for leaf solves");
    add("--out-dir", "out.dir", "output directory");
    add("--prefix", "out.prefix", "output filename prefix");
    add("--tol-unitarity", "tol.unitarity", "unitarity check tolerance");
    add("--tol-trace", "tol.trace", "trace-identity check tolerance");
    add("--tol-skew", "tol.skew", "reflection skewness check tolerance");
    add("--tol-merge", "tol.merge", "merge-consistency check tolerance");
    add("--tol-flag", "tol.flag", "sweep row flagging threshold");
  }

  dwscat::RunConfig build() const {
    dwscat::RunConfig cfg;
    if (!config_path.empty()) dwscat::load_config_file(cfg, config_path);
    if (const char* dir = std::getenv("DWSCAT_OUT_DIR"))
      dwscat::set_config_value(cfg, "out.dir", dir);
    for (const auto& [opt, key] : opts)
      if (opt->count() > 0)
        dwscat::set_config_value(cfg, key, holder.at(key));
    return cfg;
  }
};

std::ofstream open_output(const dwscat::RunConfig& cfg,
                          const std::string& name, std::string* path_out) {
  std::filesystem::create_directories(cfg.out_dir);
  const std::filesystem::path path =
      std::filesystem::path(cfg.out_dir) / (cfg.out_prefix + name);
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open output file " + path.string());
  *path_out = path.string();
  return os;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "dwscat: scattering matrices, transmissions, and Z2 indices for "
      "domain-wall Dirac interfaces"};
  app.require_subcommand(1);

  FlagSet branches, verify, converge, scatter, sweep, index;

  branches.sub = app.add_subcommand(
      "branches", "sample the dispersion branches of every block");
  branches.add_common();
  branches.add("--xi-max", "branches.xi_max", "half-width of the xi grid");
  branches.add("--samples", "branches.samples", "samples per branch");
  branches.add("--branch-n-max", "branches.n_max",
               "highest dispersive family to emit");

  verify.sub = app.add_subcommand(
      "verify", "run the invariant checks; nonzero exit on any failure");
  verify.add_common();

  converge.sub = app.add_subcommand(
      "converge", "self-convergence study against a finer reference");
  converge.add_common();
  converge.add("--target", "converge.target", "knob to vary: nx, ny, or L");
  converge.add("--values", "converge.values",
               "comma-separated increasing knob values");
  converge.add("--reference", "converge.reference",
               "reference resolution (strictly finer)");

  scatter.sub = app.add_subcommand(
      "scatter", "solve once and dump the scattering matrix + observables");
  scatter.add_common();

  sweep.sub = app.add_subcommand(
      "sweep", "transmissions against perturbation support length");
  sweep.add_common();
  sweep.add("--lengths", "sweep.lengths",
            "comma-separated increasing support lengths");

  index.sub = app.add_subcommand(
      "index", "spectral flows and the Z2 index over an energy window");
  index.add_common();
  index.add("--window-lo", "window.lo", "lower window edge (0: energy - 0.1)");
  index.add("--window-hi", "window.hi", "upper window edge (0: energy + 0.1)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (branches.sub->parsed()) {
      const dwscat::RunConfig cfg = branches.build();
      std::string path;
      std::ofstream csv = open_output(cfg, "branches.csv", &path);
      dwscat::cmd_branches(cfg, csv);
      std::cout << "wrote " << path << "\n";
      return 0;
    }
    if (verify.sub->parsed()) {
      const int fails = dwscat::cmd_verify(verify.build(), std::cout);
      return fails == 0 ? 0 : 1;
    }
    if (converge.sub->parsed()) {
      const dwscat::RunConfig cfg = converge.build();
      std::string path;
      std::ofstream csv = open_output(cfg, "converge.csv", &path);
      dwscat::cmd_converge(cfg, csv);
      std::cout << "wrote " << path << "\n";
      return 0;
    }
    if (scatter.sub->parsed()) {
      const dwscat::RunConfig cfg = scatter.build();
      std::string csv_path, mat_path;
      std::ofstream csv = open_output(cfg, "scatter.csv", &csv_path);
      std::ofstream mat = open_output(cfg, "smatrix.txt", &mat_path);
      dwscat::cmd_scatter(cfg, csv, mat);
      std::cout << "wrote " << csv_path << "\nwrote " << mat_path << "\n";
      return 0;
    }
    if (sweep.sub->parsed()) {
      const dwscat::RunConfig cfg = sweep.build();
      std::string path;
      std::ofstream csv = open_output(cfg, "sweep.csv", &path);
      const int status = dwscat::cmd_sweep(cfg, csv);
      std::cout << "wrote " << path << "\n";
      return status;
    }
    if (index.sub->parsed()) {
      const dwscat::RunConfig cfg = index.build();
      std::string path;
      std::ofstream csv = open_output(cfg, "index.csv", &path);
      dwscat::cmd_index(cfg, csv, std::cout);
      std::cout << "wrote " << path << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
