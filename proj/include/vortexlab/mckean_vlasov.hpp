#pragma once

// Conditional McKean-Vlasov copies
//
//   dY_i = (K * v_t)(Y_i) dt + sqrt(2) dB_i + sum_k sigma_k(Y_i) o dW^k,
//
// driven by a stored SPDE trajectory. The velocity is synthesized mode by mode
// at the exact copy positions and blended linearly between snapshots.

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "vortexlab/noise.hpp"
#include "vortexlab/sigma.hpp"
#include "vortexlab/spectral.hpp"

namespace vortex::mv {

class FieldTrajectory {
 public:
  /// Keeps the velocity coefficients scale * i m^perp / |m|^2 c(m) for 0 < |m| <= cutoff.
  FieldTrajectory(const std::vector<spectral::SpectralField>& snapshots, int cutoff, double biot_savart_scale,
                  std::uint64_t path_fingerprint = 0);

  double t_begin() const { return times_.front(); }
  double t_end() const { return times_.back(); }
  int cutoff() const { return cutoff_; }
  std::size_t size() const { return times_.size(); }
  std::uint64_t path_fingerprint() const { return path_fingerprint_; }

  /// Throws RangeError outside [t_begin, t_end].
  Vec2 velocity_at(double t, const Vec2& x) const;
  /// Column i is the velocity at column i of `points`.
  Eigen::Matrix2Xd velocities_at(double t, const Eigen::Ref<const Eigen::Matrix2Xd>& points) const;

 private:
  std::vector<Eigen::MatrixXcd> blended(double t) const;

  int cutoff_;
  std::uint64_t path_fingerprint_;
  std::vector<double> times_;
  std::vector<std::array<Eigen::MatrixXcd, 2>> velocity_;
};

struct CopiesRun {
  /// Positions at each requested output time.
  std::vector<Eigen::Matrix2Xd> snapshots;
  std::vector<double> times;
};

/// Euler-Maruyama for the copies over the grid of `paths`, which must share the
/// common path the trajectory was computed from.
CopiesRun run_copies(const FieldTrajectory& traj, const noise::NoisePaths& paths, const Eigen::Matrix2Xd& y0,
                     const sigma::SigmaBasis& basis, const std::vector<double>& output_times);

}  // namespace vortex::mv
