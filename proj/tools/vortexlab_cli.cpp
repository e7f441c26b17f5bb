// vortexlab: command-line front end.
//
//   vortexlab <converge|mv-check|solve-spde|simulate-particles|kernel-table>
//             --config FILE [--out-dir DIR] [--threads N] [--seed-override S]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <omp.h>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "vortexlab/config.hpp"
#include "vortexlab/errors.hpp"
#include "vortexlab/experiments.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

struct Options {
  std::string config;
  std::string out_dir;
  int threads = 0;
  std::optional<std::uint64_t> seed;
};

void report(const std::string& command, const vortex::experiments::ConvergeResult& r) {
  std::cout << command << ": " << r.counts.size() << " particle counts\n";
  for (std::size_t a = 0; a < r.errors.size(); ++a) {
    std::cout << "  N=" << r.counts[a] << "  sup_t E|h_-s|^2 = " << r.errors[a] << '\n';
  }
  if (r.fit) std::cout << "  slope " << r.fit->slope << "  r2 " << r.fit->r2 << '\n';
  std::cout << "  fingerprints coherent: " << (r.fingerprints.coherent() ? "yes" : "no") << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic point vortices and the stochastic vorticity equation"};
  app.require_subcommand(1);
  Options opts;
  const std::map<std::string, std::string> about = {
      {"converge", "particle-number sweep against the SPDE reference"},
      {"mv-check", "McKean-Vlasov copies against the SPDE field"},
      {"solve-spde", "integrate the stochastic vorticity equation"},
      {"simulate-particles", "integrate one regularized particle system"},
      {"kernel-table", "tabulate G and K on a grid"},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, text] : about) {
    CLI::App* sub = app.add_subcommand(name, text);
    sub->add_option("--config", opts.config, "JSON config or a run manifest")->required();
    sub->add_option("--out-dir", opts.out_dir, "output directory (default out/<command>)");
    sub->add_option("--threads", opts.threads, "worker threads (default: OpenMP default)")->check(CLI::PositiveNumber);
    sub->add_option("--seed-override", opts.seed, "replace the config's master seed");
    subs[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  std::string command;
  for (const auto& [name, sub] : subs) {
    if (sub->parsed()) command = name;
  }
  if (opts.out_dir.empty()) opts.out_dir = "out/" + command;
  if (opts.threads > 0) omp_set_num_threads(opts.threads);

  namespace ex = vortex::experiments;
  try {
    const vortex::config::RunConfig cfg = vortex::config::load_config(opts.config, opts.seed);
    if (command == "converge") {
      report(command, ex::converge(cfg, opts.out_dir));
    } else if (command == "mv-check") {
      const auto r = ex::mv_check(cfg, opts.out_dir);
      for (std::size_t k = 0; k < r.copies.size(); ++k) {
        std::cout << "copies " << r.copies[k] << "  tv " << r.tv[k] << '\n';
      }
      for (double q : r.ratios) std::cout << "ratio " << q << '\n';
    } else if (command == "solve-spde") {
      const auto run = ex::solve_spde(cfg, opts.out_dir);
      std::cout << "solve-spde: " << run.steps << " steps, " << run.snapshots.size() << " snapshots\n";
    } else if (command == "simulate-particles") {
      const auto run = ex::simulate_particles(cfg, opts.out_dir);
      std::cout << "simulate-particles: " << run.steps << " steps, " << run.snapshots.size() << " snapshots\n";
    } else {
      ex::kernel_table(cfg, opts.out_dir);
      std::cout << "kernel-table written to " << opts.out_dir << '\n';
    }
  } catch (const vortex::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const vortex::ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kConfigError;
  } catch (const vortex::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const vortex::RangeError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "cannot prepare output: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}
