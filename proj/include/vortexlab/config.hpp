#pragma once

// Run configuration. JSON with nested objects; every key is optional, unknown
// keys are rejected. A run manifest is accepted in place of a config and yields
// the configuration it embeds.

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vortexlab/noise.hpp"
#include "vortexlab/sigma.hpp"
#include "vortexlab/spde.hpp"

namespace vortex::config {

struct DensityTerm {
  Eigen::Vector2i m = Eigen::Vector2i::Zero();
  double cos = 0.0;
  double sin = 0.0;
};

/// rho(x) = (offset + sum_t (a_t cos(m_t.x) + b_t sin(m_t.x))) / (offset (2 pi)^2).
struct InitialDensity {
  double offset = 1.0;
  std::vector<DensityTerm> terms = {{Eigen::Vector2i(1, 0), 0.2, 0.0}, {Eigen::Vector2i(0, 1), 0.0, 0.1}};

  double value(const Vec2& x) const;
  /// Values at the n x n grid points.
  Eigen::ArrayXXd grid(int n) const;
  /// Throws ConfigError unless strictly positive on the grid.
  void validate(int n) const;
};

struct MetricParams {
  double s = 2.75;
  int cutoff = 16;
  /// Defaults to 2 (2 pi) / sqrt(N).
  std::optional<double> bandwidth;
  int kde_grid = 64;

  double bandwidth_for(int n) const;
};

struct MvParams {
  std::vector<int> copies = {1000, 4000, 16000};
  double time = 0.25;
  double bandwidth = 0.3;
  int synthesis_cutoff = 16;
};

struct KernelTableParams {
  int points = 64;
  std::optional<int> mode_cutoff;
  std::optional<double> epsilon;
};

sigma::SigmaBasis default_basis();

struct RunConfig {
  std::uint64_t master_seed = 20240601;
  int grid = 128;
  double dt = 1e-4;
  double horizon = 0.5;
  std::vector<double> output_times = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};

  std::vector<int> counts = {64, 128, 256, 512, 1024};
  int replicas = 64;
  double particle_dt = 1e-3;
  int mode_cutoff = 16;
  /// Defaults to 2 pi / (4 grid).
  std::optional<double> epsilon;
  std::optional<double> warning_radius;

  bool common_noise = true;
  sigma::SigmaBasis basis = default_basis();

  noise::IntensityLaw intensity = noise::IntensityLaw::uniform(0.5, 1.5);
  InitialDensity density;

  double viscosity = 1.0;
  bool nonlinear = true;
  spde::NoiseMode noise_mode = spde::NoiseMode::ItoCorrected;
  spde::Splitting splitting = spde::Splitting::Lie;
  double biot_savart_scale = kTorusArea;
  double cfl = 0.5;

  MetricParams metrics;
  MvParams mv;
  KernelTableParams kernel_table;

  /// The JSON the config was parsed from, with any seed override applied.
  nlohmann::json source;

  double effective_epsilon() const { return epsilon.value_or(kTwoPi / (4.0 * grid)); }
  /// Number of fine steps per particle step.
  int coarsening() const;
  int fine_steps(double horizon_value) const;
  /// The basis actually driving the runs: empty when common noise is off.
  sigma::SigmaBasis active_basis() const { return common_noise ? basis : sigma::SigmaBasis{}; }
  spde::SpdeConfig spde_config() const;

  void validate() const;
};

RunConfig parse_config(const nlohmann::json& doc);
/// Reads a config or a manifest file; applies the optional seed override.
RunConfig load_config(const std::string& file, std::optional<std::uint64_t> seed_override = std::nullopt);

}  // namespace vortex::config
