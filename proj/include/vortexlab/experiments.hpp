#pragma once

// Orchestration behind the command-line subcommands. Every experiment writes
// manifest.json into its output directory; the manifest embeds the effective
// configuration, so passing it back as --config reproduces the run.
//
// Layout: manifest.json, metrics.csv, rates.json, fields/, particles/.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vortexlab/config.hpp"
#include "vortexlab/metrics.hpp"
#include "vortexlab/particles.hpp"
#include "vortexlab/spde.hpp"

namespace vortex::experiments {

inline constexpr const char* kVersion = "0.1.0";

/// Level index of the McKean-Vlasov copy streams, disjoint from any particle count.
inline constexpr std::uint64_t kCopiesLevel = 1ULL << 40;

struct Fingerprints {
  std::uint64_t fine_common = 0;
  std::uint64_t spde_consumed = 0;
  std::uint64_t coarse_common = 0;
  std::uint64_t coarse_source = 0;
  /// Source fingerprints seen by particle runs (all must equal fine_common).
  std::vector<std::uint64_t> particle_sources;
  std::vector<std::uint64_t> particle_consumed;
  bool coarse_sums_exact = false;

  bool coherent() const;
};

struct ConvergeResult {
  std::vector<int> counts;
  std::vector<std::vector<metrics::MetricReport>> reports;
  /// sup over output times of the replica-mean squared H^{-s} distance, per N.
  std::vector<double> errors;
  std::optional<metrics::RateFit> fit;
  Fingerprints fingerprints;
};

ConvergeResult converge(const config::RunConfig& cfg, const std::string& out_dir);

struct MvResult {
  std::vector<int> copies;
  std::vector<double> tv;
  std::vector<double> relative_entropy;
  /// tv[k + 1] / tv[k].
  std::vector<double> ratios;
};

MvResult mv_check(const config::RunConfig& cfg, const std::string& out_dir);

spde::SpdeRun solve_spde(const config::RunConfig& cfg, const std::string& out_dir);

particles::ParticleRun simulate_particles(const config::RunConfig& cfg, const std::string& out_dir);

void kernel_table(const config::RunConfig& cfg, const std::string& out_dir);

/// Initial vorticity E[xi] rho_0 on the SPDE grid.
spectral::SpectralField initial_vorticity(const config::RunConfig& cfg);

/// True when each coarse increment is the left-to-right sum of its fine increments.
bool coarse_sums_exact(const noise::NoisePaths& fine, const noise::NoisePaths& coarse, int factor);

}  // namespace vortex::experiments
