#pragma once

// Regularized stochastic point vortices
//
//   dX_i = (1/N) sum_{j != i} xi_j K_eps(X_i - X_j) dt + sqrt(2) dB_i + sum_k sigma_k(X_i) o dW^k
//
// stepped by Euler-Maruyama in Ito form. The pair sum is split into the smooth
// truncated series, evaluated through the empirical Fourier coefficients in
// O(N M^2), and the cap correction K_eps - K, which is nonzero only for pairs
// closer than eps and is found with a cell list.

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vortexlab/kernels.hpp"
#include "vortexlab/noise.hpp"
#include "vortexlab/sigma.hpp"

namespace vortex::particles {

struct ParticleEnsemble {
  Eigen::Matrix2Xd positions;
  Eigen::VectorXd intensities;
  double t = 0.0;

  int size() const { return static_cast<int>(positions.cols()); }
  Vec2 position(int i) const { return positions.col(i); }
};

ParticleEnsemble make_ensemble(Eigen::Matrix2Xd positions, Eigen::VectorXd intensities, double t = 0.0);

struct ParticleConfig {
  double epsilon = kTwoPi / (4.0 * 128);
  double dt = 1e-3;
  int mode_cutoff = 16;
  /// Pairs closer than this are counted in the diagnostics; defaults to eps.
  std::optional<double> warning_radius;

  void validate() const;
  kernels::KernelSpec kernel() const { return {mode_cutoff, epsilon}; }
};

/// Velocities (1/N) sum_{j != i} xi_j K_eps(X_i - X_j).
Eigen::Matrix2Xd drift(const ParticleEnsemble& e, const ParticleConfig& cfg);
/// Same sum, pair by pair through the point kernel. Reference for tests.
Eigen::Matrix2Xd drift_direct(const ParticleEnsemble& e, const ParticleConfig& cfg);

/// Index pairs (i < j) with torus distance below `radius`, in increasing (i, j) order.
std::vector<std::pair<int, int>> close_pairs(const Eigen::Matrix2Xd& positions, double radius);

/// One Euler-Maruyama step. dB is 2 x N, column i the increment of B_i.
ParticleEnsemble step(const ParticleEnsemble& e, std::span<const double> dW,
                      const Eigen::Ref<const Eigen::Matrix2Xd>& dB, double dt, const ParticleConfig& cfg,
                      const sigma::SigmaBasis& basis);

double min_pairwise_distance(const ParticleEnsemble& e);
/// Phi_eps = sum_{i != j} G_eps(X_i - X_j), unweighted.
double interaction_potential(const ParticleEnsemble& e, const ParticleConfig& cfg);
/// phi = sum over distinct i, j, l with j, l != i of 1 / (|X_i - X_l| |X_i - X_j|).
double singular_functional(const ParticleEnsemble& e);

struct ParticleDiagnostics {
  double t = 0.0;
  double min_distance = 0.0;
  double phi_eps = 0.0;
  double phi_singular = 0.0;
  int close_pairs = 0;
};

ParticleDiagnostics diagnose(const ParticleEnsemble& e, const ParticleConfig& cfg);

struct ParticleRun {
  std::vector<ParticleEnsemble> snapshots;
  std::vector<ParticleDiagnostics> diagnostics;
  std::uint64_t path_fingerprint = 0;
  int steps = 0;
};

struct RunOptions {
  bool diagnostics = true;
  /// Where the last finite state goes if a step produces NaN.
  std::string dump_file;
};

/// Integrate across the grid of `paths`, snapshots (and diagnostics) at `output_times`.
ParticleRun run(const ParticleEnsemble& e0, const noise::NoisePaths& paths, const ParticleConfig& cfg,
                const sigma::SigmaBasis& basis, const std::vector<double>& output_times,
                const RunOptions& options = {});

/// Columns t,i,x1,x2,xi.
void write_trajectory_csv(const std::vector<ParticleEnsemble>& snapshots, const std::string& file);
/// u64 N, f64 t, then (x1, x2, xi) per particle, little-endian.
void save_snapshot(const ParticleEnsemble& e, const std::string& file);
ParticleEnsemble load_snapshot(const std::string& file);
/// Columns t,min_dist,phi_eps,phi_singular,close_pairs.
void write_diagnostics_csv(const std::vector<ParticleDiagnostics>& rows, const std::string& file);

}  // namespace vortex::particles
