#include "vortexlab/particles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>

#include "vortexlab/binary_io.hpp"
#include "vortexlab/errors.hpp"
#include "vortexlab/mode_sums.hpp"

namespace vortex::particles {

using Complex = std::complex<double>;

ParticleEnsemble make_ensemble(Eigen::Matrix2Xd positions, Eigen::VectorXd intensities, double t) {
  if (positions.cols() != intensities.size()) throw ConfigError("one intensity per particle required");
  ParticleEnsemble e;
  for (Eigen::Index i = 0; i < positions.cols(); ++i) positions.col(i) = wrap(positions.col(i));
  e.positions = std::move(positions);
  e.intensities = std::move(intensities);
  e.t = t;
  return e;
}

void ParticleConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("particle regularization radius must lie in (0, 1)");
  if (!(dt > 0.0)) throw ConfigError("particle dt must be positive");
  if (mode_cutoff < 1) throw ConfigError("kernel mode cutoff must be at least 1");
  if (warning_radius && !(*warning_radius > 0.0)) throw ConfigError("warning radius must be positive");
}

namespace {

struct Multipliers {
  Eigen::MatrixXcd k1;  // i m2 / |m|^2 on 0 < |m| <= M
  Eigen::MatrixXcd k2;  // -i m1 / |m|^2
  Eigen::MatrixXd green;  // 1 / |m|^2
};

const Multipliers& multipliers(int cutoff) {
  static std::mutex lock;
  static std::map<int, Multipliers> cache;
  std::lock_guard<std::mutex> guard(lock);
  auto it = cache.find(cutoff);
  if (it != cache.end()) return it->second;
  const int w = 2 * cutoff + 1;
  Multipliers m{Eigen::MatrixXcd::Zero(w, w), Eigen::MatrixXcd::Zero(w, w), Eigen::MatrixXd::Zero(w, w)};
  for (int m1 = -cutoff; m1 <= cutoff; ++m1) {
    for (int m2 = -cutoff; m2 <= cutoff; ++m2) {
      const int r2 = m1 * m1 + m2 * m2;
      if (r2 == 0 || r2 > cutoff * cutoff) continue;
      const double inv = 1.0 / r2;
      m.k1(m1 + cutoff, m2 + cutoff) = Complex(0.0, m2 * inv);
      m.k2(m1 + cutoff, m2 + cutoff) = Complex(0.0, -m1 * inv);
      m.green(m1 + cutoff, m2 + cutoff) = inv;
    }
  }
  return cache.emplace(cutoff, std::move(m)).first->second;
}

int cell_of(double x, int cells) {
  const int c = static_cast<int>(std::floor((x + kPi) / kTwoPi * cells));
  return std::clamp(c, 0, cells - 1);
}

}  // namespace

std::vector<std::pair<int, int>> close_pairs(const Eigen::Matrix2Xd& positions, double radius) {
  const int n = static_cast<int>(positions.cols());
  std::vector<std::pair<int, int>> pairs;
  const int cells = static_cast<int>(std::floor(kTwoPi / radius));
  if (cells < 3 || n < 64) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (torus_distance(positions.col(i), positions.col(j)) < radius) pairs.emplace_back(i, j);
      }
    }
    return pairs;
  }
  // Cells at least as wide as the radius; about one particle per cell.
  const int side = std::min(cells, std::max(3, static_cast<int>(std::sqrt(static_cast<double>(n)))));
  std::vector<std::pair<std::int64_t, int>> keyed(static_cast<std::size_t>(n));
  std::vector<std::array<int, 2>> cell(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    cell[i] = {cell_of(positions(0, i), side), cell_of(positions(1, i), side)};
    keyed[i] = {static_cast<std::int64_t>(cell[i][0]) * side + cell[i][1], i};
  }
  std::sort(keyed.begin(), keyed.end());
  for (int i = 0; i < n; ++i) {
    for (int d1 = -1; d1 <= 1; ++d1) {
      for (int d2 = -1; d2 <= 1; ++d2) {
        const int c1 = (cell[i][0] + d1 + side) % side;
        const int c2 = (cell[i][1] + d2 + side) % side;
        const std::int64_t key = static_cast<std::int64_t>(c1) * side + c2;
        auto lo = std::lower_bound(keyed.begin(), keyed.end(), std::make_pair(key, 0));
        for (auto it = lo; it != keyed.end() && it->first == key; ++it) {
          const int j = it->second;
          if (j <= i) continue;
          if (torus_distance(positions.col(i), positions.col(j)) < radius) pairs.emplace_back(i, j);
        }
      }
    }
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

Eigen::Matrix2Xd drift(const ParticleEnsemble& e, const ParticleConfig& cfg) {
  const int n = e.size();
  Eigen::Matrix2Xd out = Eigen::Matrix2Xd::Zero(2, n);
  if (n < 2) return out;
  const int cutoff = cfg.mode_cutoff;
  const Multipliers& mult = multipliers(cutoff);
  const Eigen::MatrixXcd mu = modesums::weighted_mode_sums(e.positions, e.intensities, cutoff) / static_cast<double>(n);
  // sum_j xi_j K(X_i - X_j) / N = sum_m i m^perp / |m|^2 mu(m) e^{i m.X_i}; the j = i
  // term is K(0) = 0.
  const std::vector<Eigen::MatrixXcd> coeffs = {mult.k1.cwiseProduct(mu), mult.k2.cwiseProduct(mu)};
  out = modesums::synthesize(e.positions, coeffs, cutoff).transpose();

  const kernels::KernelSpec spec = cfg.kernel();
  for (const auto& [i, j] : close_pairs(e.positions, cfg.epsilon)) {
    const Vec2 c = kernels::biot_savart_cap_correction(e.position(i) - e.position(j), spec) / static_cast<double>(n);
    out.col(i) += e.intensities[j] * c;
    out.col(j) -= e.intensities[i] * c;
  }
  return out;
}

Eigen::Matrix2Xd drift_direct(const ParticleEnsemble& e, const ParticleConfig& cfg) {
  const int n = e.size();
  const kernels::KernelSpec spec = cfg.kernel();
  Eigen::Matrix2Xd out = Eigen::Matrix2Xd::Zero(2, n);
  for (int i = 0; i < n; ++i) {
    Vec2 acc = Vec2::Zero();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      acc += e.intensities[j] * kernels::biot_savart_regularized(e.position(i) - e.position(j), spec);
    }
    out.col(i) = acc / static_cast<double>(n);
  }
  return out;
}

ParticleEnsemble step(const ParticleEnsemble& e, std::span<const double> dW,
                      const Eigen::Ref<const Eigen::Matrix2Xd>& dB, double dt, const ParticleConfig& cfg,
                      const sigma::SigmaBasis& basis) {
  const int n = e.size();
  if (dB.cols() != n) throw ConfigError("individual increments do not match the particle count");
  if (static_cast<int>(dW.size()) != basis.size()) throw ConfigError("common increments do not match the sigma basis");
  const Eigen::Matrix2Xd velocity = drift(e, cfg);
  const bool correction = !basis.all_constant();
  const double root2 = std::sqrt(2.0);
  ParticleEnsemble next = e;
  for (int i = 0; i < n; ++i) {
    const Vec2 x = e.position(i);
    Vec2 dx = velocity.col(i) * dt + root2 * dB.col(i);
    for (int k = 0; k < basis.size(); ++k) dx += basis[k].value(x) * dW[k];
    if (correction) dx += basis.ito_drift(x) * dt;
    next.positions.col(i) = wrap(x + dx);
  }
  next.t = e.t + dt;
  if (!next.positions.allFinite()) {
    throw NumericalError("non-finite particle position at t = " + std::to_string(next.t));
  }
  return next;
}

double min_pairwise_distance(const ParticleEnsemble& e) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < e.size(); ++i) {
    for (int j = i + 1; j < e.size(); ++j) best = std::min(best, torus_distance(e.position(i), e.position(j)));
  }
  return best;
}

double interaction_potential(const ParticleEnsemble& e, const ParticleConfig& cfg) {
  const int n = e.size();
  if (n < 2) return 0.0;
  const int cutoff = cfg.mode_cutoff;
  const Multipliers& mult = multipliers(cutoff);
  const Eigen::MatrixXcd s = modesums::weighted_mode_sums(e.positions, Eigen::VectorXd::Ones(n), cutoff);
  // sum_{i,j} G(X_i - X_j) = sum_m |S(m)|^2 / |m|^2; drop the diagonal N G(0).
  double total = (mult.green.array() * s.array().abs2()).sum();
  total -= n * kernels::mode_table(cutoff).green_at_origin();
  const kernels::KernelSpec spec = cfg.kernel();
  for (const auto& [i, j] : close_pairs(e.positions, cfg.epsilon)) {
    total += 2.0 * kernels::green_cap_correction(e.position(i) - e.position(j), spec);
  }
  return total;
}

double singular_functional(const ParticleEnsemble& e) {
  const int n = e.size();
  if (n < 3) return 0.0;
  // sum_{i} sum_{j != l} 1/(r_ij r_il) = sum_i (S_i^2 - Q_i), S_i = sum_j 1/r_ij, Q_i = sum_j 1/r_ij^2.
  Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double inv = 1.0 / torus_distance(e.position(i), e.position(j));
      s[i] += inv;
      s[j] += inv;
      q[i] += inv * inv;
      q[j] += inv * inv;
    }
  }
  return (s.array().square() - q.array()).sum();
}

ParticleDiagnostics diagnose(const ParticleEnsemble& e, const ParticleConfig& cfg) {
  ParticleDiagnostics d;
  d.t = e.t;
  d.min_distance = min_pairwise_distance(e);
  d.phi_eps = interaction_potential(e, cfg);
  d.phi_singular = singular_functional(e);
  d.close_pairs = static_cast<int>(close_pairs(e.positions, cfg.warning_radius.value_or(cfg.epsilon)).size());
  return d;
}

ParticleRun run(const ParticleEnsemble& e0, const noise::NoisePaths& paths, const ParticleConfig& cfg,
                const sigma::SigmaBasis& basis, const std::vector<double>& output_times, const RunOptions& options) {
  cfg.validate();
  const int n = e0.size();
  if (paths.particles() != n) throw ConfigError("noise paths carry a different number of individual streams");
  if (paths.dimension() != basis.size()) throw ConfigError("common path dimension does not match the sigma basis");
  std::vector<int> wanted;
  for (double t : output_times) wanted.push_back(paths.grid.index_of(t));

  ParticleRun result;
  result.path_fingerprint = paths.common_fingerprint();
  ParticleEnsemble e = e0;
  e.t = 0.0;
  auto keep = [&](int j) {
    for (int w : wanted) {
      if (w != j) continue;
      result.snapshots.push_back(e);
      if (options.diagnostics) result.diagnostics.push_back(diagnose(e, cfg));
    }
  };
  keep(0);
  std::vector<double> dW(static_cast<std::size_t>(basis.size()));
  for (int j = 0; j < paths.steps(); ++j) {
    for (int k = 0; k < basis.size(); ++k) dW[k] = paths.common(j, k);
    const Eigen::Map<const Eigen::Matrix2Xd> dB(paths.individual.row(j).data(), 2, n);
    try {
      e = step(e, dW, dB, paths.grid.dt(j), cfg, basis);
    } catch (const NumericalError&) {
      if (!options.dump_file.empty()) save_snapshot(e, options.dump_file);
      throw;
    }
    e.t = paths.grid[j + 1];
    keep(j + 1);
  }
  result.steps = paths.steps();
  return result;
}

void write_trajectory_csv(const std::vector<ParticleEnsemble>& snapshots, const std::string& file) {
  std::ofstream out(file);
  if (!out) throw ValidationError("cannot write " + file);
  out << "t,i,x1,x2,xi\n" << std::setprecision(17);
  for (const auto& e : snapshots) {
    for (int i = 0; i < e.size(); ++i) {
      out << e.t << ',' << i << ',' << e.positions(0, i) << ',' << e.positions(1, i) << ',' << e.intensities[i] << '\n';
    }
  }
}

void save_snapshot(const ParticleEnsemble& e, const std::string& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + file);
  io::write_u64(out, static_cast<std::uint64_t>(e.size()));
  io::write_f64(out, e.t);
  for (int i = 0; i < e.size(); ++i) {
    io::write_f64(out, e.positions(0, i));
    io::write_f64(out, e.positions(1, i));
    io::write_f64(out, e.intensities[i]);
  }
}

ParticleEnsemble load_snapshot(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + file);
  const auto n = static_cast<Eigen::Index>(io::read_u64(in));
  ParticleEnsemble e;
  e.t = io::read_f64(in);
  e.positions.resize(2, n);
  e.intensities.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    e.positions(0, i) = io::read_f64(in);
    e.positions(1, i) = io::read_f64(in);
    e.intensities[i] = io::read_f64(in);
  }
  return e;
}

void write_diagnostics_csv(const std::vector<ParticleDiagnostics>& rows, const std::string& file) {
  std::ofstream out(file);
  if (!out) throw ValidationError("cannot write " + file);
  out << "t,min_dist,phi_eps,phi_singular,close_pairs\n" << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.t << ',' << r.min_distance << ',' << r.phi_eps << ',' << r.phi_singular << ',' << r.close_pairs << '\n';
  }
}

}  // namespace vortex::particles
