#include "vortexlab/spde.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "vortexlab/errors.hpp"

namespace vortex::spde {

using spectral::Complex;
using spectral::mode_of;

void SpdeConfig::validate() const {
  spectral::require_power_of_two(n);
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(viscosity >= 0.0)) throw ConfigError("viscosity must be non-negative");
  if (!(cfl > 0.0)) throw ConfigError("CFL constant must be positive");
  if (!std::isfinite(biot_savart_scale)) throw ConfigError("Biot-Savart scale must be finite");
}

namespace {

// sigma . grad v for a constant sigma is the exact multiplier i (m . sigma).
SpectralField constant_transport(const SpectralField& v, const Vec2& s) {
  const int n = v.n();
  SpectralField out(n, v.time(), true);
  for (int k2 = 0; k2 < n; ++k2) {
    for (int k1 = 0; k1 < n; ++k1) {
      if (k1 == n / 2 || k2 == n / 2) continue;
      const double ms = mode_of(k1, n) * s.x() + mode_of(k2, n) * s.y();
      out.coeffs()(k1, k2) = spectral::times_i(ms, v.coeffs()(k1, k2));
    }
  }
  spectral::dealias(out);
  return out;
}

SpectralField grid_transport(const SpectralField& v, const Eigen::ArrayXXd& s1, const Eigen::ArrayXXd& s2) {
  auto g = spectral::gradient(v);
  spectral::dealias(g.x);
  spectral::dealias(g.y);
  auto [d1, d2] = spectral::to_physical(g.x, g.y);
  SpectralField out = spectral::to_spectral(s1 * d1 + s2 * d2, v.time());
  spectral::dealias(out);
  return out;
}

Eigen::ArrayXXd wave_numbers_squared(int n) {
  Eigen::ArrayXXd w(n, n);
  for (int k2 = 0; k2 < n; ++k2) {
    for (int k1 = 0; k1 < n; ++k1) {
      const int m1 = mode_of(k1, n);
      const int m2 = mode_of(k2, n);
      w(k1, k2) = static_cast<double>(m1 * m1 + m2 * m2);
    }
  }
  return w;
}

}  // namespace

SpectralField transport_term(const SpectralField& v, const sigma::SigmaField& field) {
  if (field.is_constant()) return constant_transport(v, field.constant_value());
  const int n = v.n();
  sigma::SigmaBasis single({field});
  return grid_transport(v, single.grid_component(0, 0, n), single.grid_component(0, 1, n));
}

SpectralField strat_correction(const SpectralField& v, const sigma::SigmaBasis& basis) {
  SpectralField out(v.n(), v.time(), true);
  for (int k = 0; k < basis.size(); ++k) {
    const SpectralField once = transport_term(v, basis[k]);
    out += transport_term(once, basis[k]);
  }
  out *= 0.5;
  out.coeffs()(0, 0) = 0.0;
  return out;
}

Stepper::Stepper(SpdeConfig config, sigma::SigmaBasis basis) : config_(config), basis_(std::move(basis)) {
  config_.validate();
  if (config_.noise && config_.noise_mode == NoiseMode::ExactTranslation && !basis_.all_constant()) {
    throw ConfigError("exact-translation noise handling requires every sigma_k to be constant");
  }
  for (int k = 0; k < basis_.size(); ++k) {
    if (basis_[k].is_constant()) {
      sigma_grid_.push_back({});
    } else {
      sigma_grid_.push_back({basis_.grid_component(k, 0, config_.n), basis_.grid_component(k, 1, config_.n)});
    }
  }
  wave_number2_ = wave_numbers_squared(config_.n);
}

void Stepper::deterministic(SpectralField& v, double dt) const {
  if (config_.nonlinear) {
    auto u = spectral::biot_savart_convolve(v);
    u.x *= config_.biot_savart_scale;
    u.y *= config_.biot_savart_scale;
    spectral::dealias(u.x);
    spectral::dealias(u.y);
    auto g = spectral::gradient(v);
    spectral::dealias(g.x);
    spectral::dealias(g.y);
    auto [vel1, vel2] = spectral::to_physical(u.x, u.y);
    auto [d1, d2] = spectral::to_physical(g.x, g.y);
    last_max_speed_ = (vel1.square() + vel2.square()).sqrt().maxCoeff();
    if (last_max_speed_ > 0.0) {
      const double bound = config_.cfl / (config_.n * last_max_speed_);
      if (dt > bound) {
        throw StepSizeError("CFL violation: dt = " + std::to_string(dt) + " exceeds " + std::to_string(bound), bound);
      }
    }
    SpectralField adv = spectral::to_spectral(vel1 * d1 + vel2 * d2, v.time());
    spectral::dealias(adv);
    // u is divergence-free, so the advection term has zero mean analytically.
    adv.coeffs()(0, 0) = 0.0;
    v.coeffs() -= dt * adv.coeffs();
  }
  if (dt != heat_dt_) {
    heat_ = (-config_.viscosity * dt * wave_number2_).exp();
    heat_dt_ = dt;
  }
  v.coeffs() *= heat_;
}

void Stepper::noise(SpectralField& v, std::span<const double> dW, double dt) const {
  if (static_cast<int>(dW.size()) != basis_.size()) {
    throw ConfigError("noise increment count does not match the sigma basis");
  }
  const int n = config_.n;
  if (config_.noise_mode == NoiseMode::ExactTranslation) {
    Vec2 shift = Vec2::Zero();
    for (int k = 0; k < basis_.size(); ++k) shift += basis_[k].constant_value() * dW[k];
    for (int k2 = 0; k2 < n; ++k2) {
      const int m2 = mode_of(k2, n);
      for (int k1 = 0; k1 < n; ++k1) {
        if (k1 == 0 && k2 == 0) continue;
        const int m1 = mode_of(k1, n);
        // A Nyquist mode is its own conjugate partner; keep only the real part
        // of its phase so the field stays real.
        const double a1 = m1 * shift.x();
        const double a2 = m2 * shift.y();
        Complex phase = std::polar(1.0, -((k1 == n / 2 ? 0.0 : a1) + (k2 == n / 2 ? 0.0 : a2)));
        if (k1 == n / 2) phase *= std::cos(a1);
        if (k2 == n / 2) phase *= std::cos(a2);
        v.coeffs()(k1, k2) *= phase;
      }
    }
    return;
  }

  const Complex mean = v.coeffs()(0, 0);
  SpectralField increment(n, v.time(), true);
  for (int k = 0; k < basis_.size(); ++k) {
    const SpectralField once = basis_[k].is_constant()
                                   ? constant_transport(v, basis_[k].constant_value())
                                   : grid_transport(v, sigma_grid_[k][0], sigma_grid_[k][1]);
    const SpectralField twice = basis_[k].is_constant()
                                    ? constant_transport(once, basis_[k].constant_value())
                                    : grid_transport(once, sigma_grid_[k][0], sigma_grid_[k][1]);
    increment.coeffs() += -dW[k] * once.coeffs() + (0.5 * dt) * twice.coeffs();
  }
  v.coeffs() += increment.coeffs();
  v.coeffs()(0, 0) = mean;
}

SpectralField Stepper::step(const SpectralField& v, std::span<const double> dW, double dt) const {
  if (v.n() != config_.n) throw ConfigError("field grid does not match the solver grid");
  if (!v.is_real()) throw ValidationError("SPDE step requires a real field");
  SpectralField next = v;
  const Complex mean = v.coeffs()(0, 0);
  const bool with_noise = config_.noise && !basis_.empty();
  if (config_.splitting == Splitting::Strang) {
    deterministic(next, 0.5 * dt);
    if (with_noise) noise(next, dW, dt);
    deterministic(next, 0.5 * dt);
  } else {
    deterministic(next, dt);
    if (with_noise) noise(next, dW, dt);
  }
  next.coeffs()(0, 0) = mean;
  // Viscous decay drives high modes into subnormal range, where arithmetic is
  // two orders of magnitude slower. Nothing below 1e-200 matters.
  double* raw = reinterpret_cast<double*>(next.coeffs().data());
  for (Eigen::Index i = 0; i < 2 * next.coeffs().size(); ++i) {
    if (std::abs(raw[i]) < 1e-200) raw[i] = 0.0;
  }
  next.set_time(v.time() + dt);
  if (!next.coeffs().allFinite()) {
    throw NumericalError("non-finite vorticity at t = " + std::to_string(next.time()));
  }
  return next;
}

SpectralField step(const SpectralField& v, std::span<const double> dW, const SpdeConfig& config,
                   const sigma::SigmaBasis& basis) {
  return Stepper(config, basis).step(v, dW, config.dt);
}

DiagnosticsRow diagnose(const SpectralField& v) {
  DiagnosticsRow row;
  row.t = v.time();
  const Eigen::ArrayXXd phys = spectral::to_physical(v);
  row.min = phys.minCoeff();
  row.max = phys.maxCoeff();
  const Eigen::ArrayXd norms = spectral::sobolev_norms_integer(v, 4);
  for (int k = 0; k <= 4; ++k) row.h[k] = norms[k];
  return row;
}

SpdeRun run(const SpectralField& v0, const noise::NoisePaths& paths, const SpdeConfig& config,
            const sigma::SigmaBasis& basis, const std::vector<double>& output_times) {
  if (!v0.is_real()) throw ValidationError("initial vorticity must be real");
  if (config.noise && paths.dimension() != basis.size()) {
    throw ConfigError("common path dimension does not match the sigma basis");
  }
  Stepper stepper(config, basis);
  std::vector<int> wanted;
  for (double t : output_times) wanted.push_back(paths.grid.index_of(t));

  SpdeRun result;
  result.path_fingerprint = paths.common_fingerprint();
  SpectralField v = v0;
  v.set_time(0.0);
  auto keep = [&](int j) {
    for (int w : wanted) {
      if (w == j) result.snapshots.push_back(v);
    }
  };
  result.diagnostics.push_back(diagnose(v));
  keep(0);
  std::vector<double> dW(static_cast<std::size_t>(basis.size()), 0.0);
  for (int j = 0; j < paths.steps(); ++j) {
    if (config.noise) {
      for (int k = 0; k < basis.size(); ++k) dW[k] = paths.common(j, k);
    }
    const double dt = paths.grid.dt(j);
    v = stepper.step(v, dW, dt);
    v.set_time(paths.grid[j + 1]);
    result.diagnostics.push_back(diagnose(v));
    keep(j + 1);
  }
  result.steps = paths.steps();
  return result;
}

void write_diagnostics_csv(const std::vector<DiagnosticsRow>& rows, const std::string& file) {
  std::ofstream out(file);
  if (!out) throw ValidationError("cannot write " + file);
  out << "t,min,max,l2,h1,h2,h3,h4\n" << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.t << ',' << r.min << ',' << r.max;
    for (double h : r.h) out << ',' << h;
    out << '\n';
  }
}

}  // namespace vortex::spde
