#include <cmath>
#include <random>

#include "doctest.h"
#include "vortexlab/errors.hpp"
#include "vortexlab/spde.hpp"

using namespace vortex;
using namespace vortex::spde;
using spectral::Complex;

namespace {

Eigen::ArrayXXd grid_of(int n, auto f) {
  Eigen::ArrayXXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = f(spectral::grid_coordinate(i, n), spectral::grid_coordinate(j, n));
  }
  return a;
}

SpectralField bump(int n) {
  return spectral::to_spectral(grid_of(n, [](double x1, double x2) {
    return 1.0 + 0.4 * std::cos(x1) * std::sin(2 * x2) + 0.3 * std::sin(x1 + x2) + 0.2 * std::cos(3 * x2);
  }));
}

sigma::SigmaBasis mixed_basis() {
  return sigma::SigmaBasis({sigma::SigmaField::constant(Vec2(0.7, -0.3)),
                            sigma::SigmaField::stream({{Eigen::Vector2i(1, 0), 0.5, 0.0}})});
}

double h1_distance(const SpectralField& a, const SpectralField& b) {
  return spectral::sobolev_norm(a - b, {1.0, std::nullopt});
}

}  // namespace

TEST_CASE("Stratonovich correction for a constant field") {
  const int n = 32;
  const SpectralField v = spectral::to_spectral(grid_of(n, [](double x1, double) { return std::sin(x1); }));
  const sigma::SigmaBasis basis({sigma::SigmaField::constant(Vec2(1.0, 0.0))});
  const Eigen::ArrayXXd got = spectral::to_physical(strat_correction(v, basis));
  CHECK((got + 0.5 * grid_of(n, [](double x1, double) { return std::sin(x1); })).abs().maxCoeff() < 1e-14);

  const SpectralField c = spectral::to_spectral(Eigen::ArrayXXd::Constant(n, n, 2.0));
  CHECK(strat_correction(c, mixed_basis()).coeffs().abs().maxCoeff() == 0.0);
}

TEST_CASE("transport along a stream field matches the grid product") {
  const int n = 64;
  const SpectralField v = bump(n);
  const auto field = sigma::SigmaField::stream({{Eigen::Vector2i(1, 0), 0.5, 0.0}});
  const Eigen::ArrayXXd got = spectral::to_physical(transport_term(v, field));
  const auto [d1, d2] = spectral::to_physical(spectral::partial(v, 0), spectral::partial(v, 1));
  Eigen::ArrayXXd expect(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Vec2 s = field.value(Vec2(spectral::grid_coordinate(i, n), spectral::grid_coordinate(j, n)));
      expect(i, j) = s.x() * d1(i, j) + s.y() * d2(i, j);
    }
  }
  CHECK((got - expect).abs().maxCoeff() < 1e-12);
}

TEST_CASE("pure heat flow is exact per mode") {
  SpdeConfig cfg;
  cfg.n = 64;
  cfg.nonlinear = false;
  cfg.noise = false;
  SpectralField v(cfg.n);
  v.mode(1, 0) = 1.0;
  v.mode(-1, 0) = 1.0;
  v.mode(2, -3) = Complex(0.3, 0.1);
  v.mode(-2, 3) = Complex(0.3, -0.1);
  const Stepper stepper(cfg, {});
  const double dt = 0.01;
  for (int j = 0; j < 100; ++j) v = stepper.step(v, {}, dt);
  CHECK(v.mode(1, 0).real() == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(v.mode(1, 0).real() == doctest::Approx(0.367879).epsilon(1e-6));
  CHECK(std::abs(v.mode(2, -3) - Complex(0.3, 0.1) * std::exp(-13.0)) < 1e-12 * std::exp(-13.0));
}

TEST_CASE("constant noise without advection is a translation of the heat flow") {
  SpdeConfig cfg;
  cfg.n = 64;
  cfg.nonlinear = false;
  cfg.noise_mode = NoiseMode::ExactTranslation;
  const sigma::SigmaBasis basis({sigma::SigmaField::constant(Vec2(0.7, -0.3)),
                                 sigma::SigmaField::constant(Vec2(0.1, 0.4))});
  const auto paths = noise::make_paths(noise::SeedTree(3), noise::TimeGrid::uniform(0.2, 200), {2, 0, 0, 0, 0});
  const SpectralField v0 = bump(cfg.n);
  const SpdeRun r = run(v0, paths, cfg, basis, {0.2});

  Vec2 shift = Vec2::Zero();
  for (int j = 0; j < paths.steps(); ++j) {
    shift += basis[0].constant_value() * paths.common(j, 0) + basis[1].constant_value() * paths.common(j, 1);
  }
  SpectralField oracle(cfg.n);
  for (int k1 = 0; k1 < cfg.n; ++k1) {
    for (int k2 = 0; k2 < cfg.n; ++k2) {
      const int m1 = spectral::mode_of(k1, cfg.n), m2 = spectral::mode_of(k2, cfg.n);
      oracle.coeffs()(k1, k2) = v0.coeffs()(k1, k2) * std::exp(-0.2 * (m1 * m1 + m2 * m2)) *
                                std::polar(1.0, -(m1 * shift.x() + m2 * shift.y()));
    }
  }
  CHECK(h1_distance(r.snapshots.front(), oracle) < 1e-10);
}

TEST_CASE("Ito-corrected constant noise converges to the translation") {
  SpdeConfig cfg;
  cfg.n = 32;
  cfg.nonlinear = false;
  const sigma::SigmaBasis basis({sigma::SigmaField::constant(Vec2(0.7, -0.3))});
  const SpectralField v0 = bump(cfg.n);
  auto error = [&](int steps) {
    const auto paths = noise::make_paths(noise::SeedTree(4), noise::TimeGrid::uniform(0.1, 1000), {1, 0, 0, 0, 0});
    const auto used = noise::derive_coarse(paths, 1000 / steps);
    cfg.noise_mode = NoiseMode::ItoCorrected;
    const SpectralField ito = run(v0, used, cfg, basis, {0.1}).snapshots.front();
    cfg.noise_mode = NoiseMode::ExactTranslation;
    const SpectralField exact = run(v0, used, cfg, basis, {0.1}).snapshots.front();
    return h1_distance(ito, exact);
  };
  const double coarse = error(100), fine = error(1000);
  CHECK(fine < 0.3 * coarse);
  CHECK(fine < 1e-2);
}

TEST_CASE("the mean mode is preserved to the last bit") {
  SpdeConfig cfg;
  cfg.n = 32;
  cfg.biot_savart_scale = kTorusArea;
  const Stepper stepper(cfg, mixed_basis());
  SpectralField v = bump(cfg.n);
  const Complex mean = v.mode(0, 0);
  std::mt19937_64 gen(1);
  std::normal_distribution<double> z(0.0, 0.01);
  for (int j = 0; j < 200; ++j) {
    const std::vector<double> dW = {z(gen), z(gen)};
    v = stepper.step(v, dW, 1e-4);
    REQUIRE(v.mode(0, 0) == mean);
  }
}

TEST_CASE("deterministic L2 norm does not grow") {
  SpdeConfig cfg;
  cfg.n = 64;
  cfg.noise = false;
  cfg.biot_savart_scale = kTorusArea;
  const Stepper stepper(cfg, {});
  SpectralField v = bump(cfg.n);
  double last = spectral::sobolev_norm(v, {0.0, std::nullopt});
  for (int j = 0; j < 1000; ++j) {
    v = stepper.step(v, {}, 2e-4);
    const double now = spectral::sobolev_norm(v, {0.0, std::nullopt});
    CHECK(now <= last + 1e-8);
    last = now;
  }
}

TEST_CASE("transport noise keeps the L2 norm bounded") {
  SpdeConfig cfg;
  cfg.n = 64;
  cfg.biot_savart_scale = kTorusArea;
  const auto paths = noise::make_paths(noise::SeedTree(8), noise::TimeGrid::uniform(0.2, 2000), {2, 0, 0, 0, 0});
  const SpectralField v0 = bump(cfg.n);
  const SpdeRun r = run(v0, paths, cfg, mixed_basis(), {0.0, 0.1, 0.2});
  const double l0 = r.diagnostics.front().h[0];
  for (const auto& row : r.diagnostics) CHECK(row.h[0] <= l0 * (1.0 + 1e-6 * row.t));
}

TEST_CASE("identical paths give identical trajectories") {
  SpdeConfig cfg;
  cfg.n = 32;
  cfg.biot_savart_scale = kTorusArea;
  const auto paths = noise::make_paths(noise::SeedTree(5), noise::TimeGrid::uniform(0.01, 100), {2, 0, 0, 0, 0});
  const SpdeRun a = run(bump(32), paths, cfg, mixed_basis(), {0.005, 0.01});
  const SpdeRun b = run(bump(32), paths, cfg, mixed_basis(), {0.005, 0.01});
  REQUIRE(a.snapshots.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) CHECK((a.snapshots[k].coeffs() == b.snapshots[k].coeffs()).all());
  CHECK(a.path_fingerprint == paths.common_fingerprint());
}

TEST_CASE("step-size and configuration errors") {
  SpdeConfig cfg;
  cfg.n = 32;
  cfg.noise = false;
  cfg.biot_savart_scale = 1000.0;
  SpectralField v = bump(32);
  try {
    step(v, {}, SpdeConfig{cfg}, {});
    (void)Stepper(cfg, {}).step(v, {}, 0.5);
    FAIL("expected a step-size error");
  } catch (const StepSizeError& e) {
    CHECK(e.bound() > 0.0);
    CHECK(e.bound() < 0.5);
  }
  cfg.noise_mode = NoiseMode::ExactTranslation;
  cfg.noise = true;
  CHECK_THROWS_AS(Stepper(cfg, mixed_basis()), ConfigError);
  cfg.n = 48;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("diagnostics report extrema and norms") {
  const SpectralField v = bump(32);
  const DiagnosticsRow row = diagnose(v);
  const Eigen::ArrayXXd phys = spectral::to_physical(v);
  CHECK(row.min == phys.minCoeff());
  CHECK(row.max == phys.maxCoeff());
  CHECK(row.h[0] == doctest::Approx(spectral::l2_quadrature(phys)));
  for (int k = 1; k < 5; ++k) CHECK(row.h[k] >= row.h[k - 1]);
}
