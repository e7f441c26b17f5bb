#pragma once

// Time stepper for the stochastic vorticity equation
//
//   dv = (nu Lap v - u . grad v) dt - sum_k (sigma_k . grad v) o dW^k,   u = scale * (K * v),
//
// on the spectral grid, one Lie (or Strang) split per step: integrating-factor
// heat semigroup with explicit dealiased advection, then the transport noise,
// either in Ito form with the Stratonovich correction or, for constant sigma, as
// an exact translation of the field.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vortexlab/noise.hpp"
#include "vortexlab/sigma.hpp"
#include "vortexlab/spectral.hpp"

namespace vortex::spde {

using spectral::SpectralField;

enum class NoiseMode { ItoCorrected, ExactTranslation };
enum class Splitting { Lie, Strang };

struct SpdeConfig {
  int n = 128;
  double dt = 1e-4;
  double viscosity = 1.0;
  bool nonlinear = true;
  bool noise = true;
  NoiseMode noise_mode = NoiseMode::ItoCorrected;
  Splitting splitting = Splitting::Lie;
  /// Multiplier on K * v in the advecting velocity. 1 keeps the unit-coefficient
  /// series; (2 pi)^2 turns it into the convolution against the density dx, which
  /// is what the particle system's mean-field limit produces.
  double biot_savart_scale = 1.0;
  double cfl = 0.5;

  void validate() const;
};

/// 1/2 sum_k sigma_k . grad (sigma_k . grad v).
SpectralField strat_correction(const SpectralField& v, const sigma::SigmaBasis& basis);

/// sigma_k . grad v, dealiased.
SpectralField transport_term(const SpectralField& v, const sigma::SigmaField& field);

class Stepper {
 public:
  Stepper(SpdeConfig config, sigma::SigmaBasis basis);

  const SpdeConfig& config() const { return config_; }
  const sigma::SigmaBasis& basis() const { return basis_; }

  /// Advance v by dt with common increments dW (one per basis field).
  SpectralField step(const SpectralField& v, std::span<const double> dW, double dt) const;

  /// Largest |u| on the grid seen by the last deterministic sub-step.
  double last_max_speed() const { return last_max_speed_; }

 private:
  void deterministic(SpectralField& v, double dt) const;
  void noise(SpectralField& v, std::span<const double> dW, double dt) const;

  SpdeConfig config_;
  sigma::SigmaBasis basis_;
  std::vector<std::array<Eigen::ArrayXXd, 2>> sigma_grid_;
  Eigen::ArrayXXd wave_number2_;
  mutable double last_max_speed_ = 0.0;
  // exp(-nu dt |m|^2) for the most recent dt.
  mutable double heat_dt_ = -1.0;
  mutable Eigen::ArrayXXd heat_;
};

/// Single step with a throwaway stepper; convenient for tests.
SpectralField step(const SpectralField& v, std::span<const double> dW, const SpdeConfig& config,
                   const sigma::SigmaBasis& basis = {});

struct DiagnosticsRow {
  double t = 0.0;
  double min = 0.0;
  double max = 0.0;
  /// ||v||_{H^k}, k = 0..4 (k = 0 is the L2 norm).
  std::array<double, 5> h{};
};

struct SpdeRun {
  std::vector<SpectralField> snapshots;
  std::vector<DiagnosticsRow> diagnostics;
  std::uint64_t path_fingerprint = 0;
  int steps = 0;
};

/// Integrate over the whole grid of `paths`, keeping snapshots at `output_times`
/// (each must be a grid instant).
SpdeRun run(const SpectralField& v0, const noise::NoisePaths& paths, const SpdeConfig& config,
            const sigma::SigmaBasis& basis, const std::vector<double>& output_times);

DiagnosticsRow diagnose(const SpectralField& v);

/// Columns t,min,max,l2,h1,h2,h3,h4.
void write_diagnostics_csv(const std::vector<DiagnosticsRow>& rows, const std::string& file);

}  // namespace vortex::spde
