#include "vortexlab/mckean_vlasov.hpp"

#include <algorithm>
#include <cmath>

#include "vortexlab/errors.hpp"
#include "vortexlab/mode_sums.hpp"

namespace vortex::mv {

using spectral::Complex;

namespace {

// Copies are advanced in blocks of this many columns. Fixed block sizes keep the
// dense products, and so every rounding, independent of the thread count.
constexpr Eigen::Index kBlock = 512;

}  // namespace

FieldTrajectory::FieldTrajectory(const std::vector<spectral::SpectralField>& snapshots, int cutoff,
                                 double biot_savart_scale, std::uint64_t path_fingerprint)
    : cutoff_(cutoff), path_fingerprint_(path_fingerprint) {
  if (snapshots.empty()) throw ConfigError("field trajectory needs at least one snapshot");
  if (cutoff < 1) throw ConfigError("synthesis cutoff must be at least 1");
  const int n = snapshots.front().n();
  if (cutoff >= n / 2) throw ConfigError("synthesis cutoff exceeds the snapshot grid");
  const int w = 2 * cutoff + 1;
  for (const auto& s : snapshots) {
    if (s.n() != n) throw ConfigError("trajectory snapshots live on different grids");
    if (!times_.empty() && !(s.time() > times_.back())) throw ConfigError("snapshot times must increase strictly");
    if (!s.is_real()) throw ValidationError("trajectory snapshots must be real");
    times_.push_back(s.time());
    std::array<Eigen::MatrixXcd, 2> u{Eigen::MatrixXcd::Zero(w, w), Eigen::MatrixXcd::Zero(w, w)};
    for (int m1 = -cutoff; m1 <= cutoff; ++m1) {
      for (int m2 = -cutoff; m2 <= cutoff; ++m2) {
        const int r2 = m1 * m1 + m2 * m2;
        if (r2 == 0 || r2 > cutoff * cutoff) continue;
        const Complex c = biot_savart_scale * s.mode(m1, m2) / static_cast<double>(r2);
        u[0](m1 + cutoff, m2 + cutoff) = spectral::times_i(m2, c);
        u[1](m1 + cutoff, m2 + cutoff) = spectral::times_i(-m1, c);
      }
    }
    velocity_.push_back(std::move(u));
  }
}

std::vector<Eigen::MatrixXcd> FieldTrajectory::blended(double t) const {
  const double tol = 1e-12 * std::max(1.0, std::abs(t_end()));
  if (t < t_begin() - tol || t > t_end() + tol) {
    throw RangeError("time " + std::to_string(t) + " outside the trajectory span");
  }
  const auto upper = std::lower_bound(times_.begin(), times_.end(), t - tol);
  const auto b = static_cast<std::size_t>(upper - times_.begin());
  if (b < times_.size() && std::abs(times_[b] - t) <= tol) return {velocity_[b][0], velocity_[b][1]};
  const std::size_t a = b - 1;
  const double theta = (t - times_[a]) / (times_[b] - times_[a]);
  return {(1.0 - theta) * velocity_[a][0] + theta * velocity_[b][0],
          (1.0 - theta) * velocity_[a][1] + theta * velocity_[b][1]};
}

Vec2 FieldTrajectory::velocity_at(double t, const Vec2& x) const {
  Eigen::Matrix2Xd p(2, 1);
  p.col(0) = x;
  return velocities_at(t, p).col(0);
}

Eigen::Matrix2Xd FieldTrajectory::velocities_at(double t, const Eigen::Ref<const Eigen::Matrix2Xd>& points) const {
  const std::vector<Eigen::MatrixXcd> coeffs = blended(t);
  const Eigen::Index n = points.cols();
  Eigen::Matrix2Xd out(2, n);
  const Eigen::Index blocks = (n + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index start = b * kBlock;
    const Eigen::Index len = std::min(kBlock, n - start);
    out.middleCols(start, len) = modesums::synthesize(points.middleCols(start, len), coeffs, cutoff_).transpose();
  }
  return out;
}

CopiesRun run_copies(const FieldTrajectory& traj, const noise::NoisePaths& paths, const Eigen::Matrix2Xd& y0,
                     const sigma::SigmaBasis& basis, const std::vector<double>& output_times) {
  const Eigen::Index n = y0.cols();
  if (paths.particles() != n) throw ConfigError("noise paths carry a different number of copies");
  if (paths.dimension() != basis.size()) throw ConfigError("common path dimension does not match the sigma basis");
  if (traj.path_fingerprint() != 0 && paths.source_fingerprint != traj.path_fingerprint()) {
    throw ConfigError("copies and field trajectory were driven by different common paths");
  }
  if (paths.grid[0] < traj.t_begin() || paths.grid.horizon() > traj.t_end() + 1e-12) {
    throw ConfigError("noise grid extends beyond the field trajectory");
  }
  std::vector<int> wanted;
  for (double t : output_times) wanted.push_back(paths.grid.index_of(t));

  CopiesRun result;
  Eigen::Matrix2Xd y = y0;
  for (Eigen::Index i = 0; i < n; ++i) y.col(i) = wrap(y.col(i));
  auto keep = [&](int j) {
    for (int w : wanted) {
      if (w != j) continue;
      result.snapshots.push_back(y);
      result.times.push_back(paths.grid[j]);
    }
  };
  keep(0);
  const bool correction = !basis.all_constant();
  const double root2 = std::sqrt(2.0);
  for (int j = 0; j < paths.steps(); ++j) {
    const double dt = paths.grid.dt(j);
    const Eigen::Matrix2Xd u = traj.velocities_at(paths.grid[j], y);
    const Eigen::Map<const Eigen::Matrix2Xd> dB(paths.individual.row(j).data(), 2, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec2 x = y.col(i);
      Vec2 dx = u.col(i) * dt + root2 * dB.col(i);
      for (int k = 0; k < basis.size(); ++k) dx += basis[k].value(x) * paths.common(j, k);
      if (correction) dx += basis.ito_drift(x) * dt;
      y.col(i) = wrap(x + dx);
    }
    if (!y.allFinite()) throw NumericalError("non-finite copy position at t = " + std::to_string(paths.grid[j + 1]));
    keep(j + 1);
  }
  return result;
}

}  // namespace vortex::mv
