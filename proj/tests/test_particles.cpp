#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <random>

#include "doctest.h"
#include "vortexlab/errors.hpp"
#include "vortexlab/particles.hpp"

using namespace vortex;
using namespace vortex::particles;

namespace {

ParticleEnsemble random_ensemble(int n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-kPi, kPi), xi(0.5, 1.5);
  Eigen::Matrix2Xd x(2, n);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    x.col(i) = Vec2(u(gen), u(gen));
    w[i] = xi(gen);
  }
  return make_ensemble(x, w);
}

sigma::SigmaBasis mixed_basis() {
  return sigma::SigmaBasis({sigma::SigmaField::constant(Vec2(0.7, -0.3)),
                            sigma::SigmaField::stream({{Eigen::Vector2i(1, 0), 0.5, 0.0}})});
}

}  // namespace

TEST_CASE("a lone vortex has no drift") {
  const ParticleEnsemble e = make_ensemble(Eigen::Matrix2Xd::Constant(2, 1, 0.3), Eigen::VectorXd::Ones(1));
  CHECK(drift(e, ParticleConfig{}).norm() == 0.0);
}

TEST_CASE("two vortices with four modes") {
  Eigen::Matrix2Xd x(2, 2);
  x << kPi / 2, 0.0, 0.1, 0.1;
  const ParticleEnsemble e = make_ensemble(x, Eigen::VectorXd::Ones(2));
  ParticleConfig cfg;
  cfg.mode_cutoff = 1;
  cfg.epsilon = 0.01;
  const Eigen::Matrix2Xd u = drift(e, cfg);
  CHECK(u(0, 0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(u(1, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK((drift_direct(e, cfg) - u).norm() < 1e-14);
}

TEST_CASE("spectral drift equals the pairwise sum") {
  ParticleConfig cfg;
  cfg.epsilon = 0.05;
  ParticleEnsemble e = random_ensemble(300, 1);
  // Force a few pairs inside the cap.
  for (int i = 0; i < 10; ++i) e.positions.col(2 * i + 1) = wrap(e.position(2 * i) + Vec2(0.01 * (i + 1) / 3.0, 0.003));
  REQUIRE(!close_pairs(e.positions, cfg.epsilon).empty());
  const Eigen::Matrix2Xd fast = drift(e, cfg);
  const Eigen::Matrix2Xd slow = drift_direct(e, cfg);
  CHECK((fast - slow).cwiseAbs().maxCoeff() < 1e-11 * (1.0 + slow.cwiseAbs().maxCoeff()));
}

TEST_CASE("cell list finds exactly the close pairs") {
  const ParticleEnsemble e = random_ensemble(2000, 2);
  for (double r : {0.02, 0.1, 0.7}) {
    std::vector<std::pair<int, int>> brute;
    for (int i = 0; i < e.size(); ++i) {
      for (int j = i + 1; j < e.size(); ++j) {
        if (torus_distance(e.position(i), e.position(j)) < r) brute.emplace_back(i, j);
      }
    }
    CHECK(close_pairs(e.positions, r) == brute);
  }
}

TEST_CASE("constant noise translates every particle") {
  const ParticleEnsemble e = make_ensemble(random_ensemble(20, 3).positions, Eigen::VectorXd::Zero(20));
  const sigma::SigmaBasis basis({sigma::SigmaField::constant(Vec2(0.7, -0.3))});
  const std::vector<double> dW = {0.37};
  const ParticleEnsemble next = step(e, dW, Eigen::Matrix2Xd::Zero(2, 20), 1e-3, ParticleConfig{}, basis);
  for (int i = 0; i < 20; ++i) CHECK(next.position(i) == wrap(e.position(i) + Vec2(0.7, -0.3) * 0.37));
}

TEST_CASE("Stratonovich drift of a particle") {
  // psi = cos x1 - cos x2 gives sigma = (sin x2, sin x1).
  const auto field = sigma::SigmaField::stream({{Eigen::Vector2i(1, 0), 1.0, 0.0}, {Eigen::Vector2i(0, 1), -1.0, 0.0}});
  const Vec2 x(kPi / 2, 0.0);
  CHECK((field.value(x) - Vec2(0.0, 1.0)).norm() < 1e-15);
  const sigma::SigmaBasis basis({field});
  CHECK((basis.ito_drift(x) - Vec2(0.5, 0.0)).norm() < 1e-15);
  const ParticleEnsemble e = make_ensemble(Eigen::Matrix2Xd(x), Eigen::VectorXd::Ones(1));
  const double dt = 1e-3;
  const std::vector<double> dW = {0.0};
  const ParticleEnsemble next = step(e, dW, Eigen::Matrix2Xd::Zero(2, 1), dt, ParticleConfig{}, basis);
  CHECK((next.position(0) - x - Vec2(0.5 * dt, 0.0)).norm() < 1e-15);
}

TEST_CASE("distances and interaction functionals") {
  Eigen::Matrix2Xd x(2, 3);
  x << 0.0, 1.0, 0.0, 0.0, 0.0, 2.0;
  CHECK(min_pairwise_distance(make_ensemble(x, Eigen::VectorXd::Ones(3))) == doctest::Approx(1.0));

  Eigen::Matrix2Xd anti(2, 2);
  anti << 0.0, kPi - 1e-15, 0.0, kPi - 1e-15;
  ParticleConfig cfg;
  cfg.mode_cutoff = 1;
  cfg.epsilon = 0.01;
  CHECK(interaction_potential(make_ensemble(anti, Eigen::VectorXd::Ones(2)), cfg) == doctest::Approx(-8.0));

  Eigen::Matrix2Xd line(2, 3);
  line << -1.0, 0.0, 1.0, 0.0, 0.0, 0.0;
  const ParticleEnsemble e = make_ensemble(line, Eigen::VectorXd::Ones(3));
  double brute = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      for (int l = 0; l < 3; ++l) {
        if (i == j || i == l || j == l) continue;
        brute += 1.0 / (torus_distance(e.position(i), e.position(l)) * torus_distance(e.position(i), e.position(j)));
      }
    }
  }
  CHECK(singular_functional(e) == doctest::Approx(brute).epsilon(1e-14));
  // Ordered triples: 2 * (1/(1*2) + 1/(1*1) + 1/(1*2)) = 4.
  CHECK(brute == doctest::Approx(4.0));
}

TEST_CASE("interaction potential equals the pairwise sum") {
  ParticleConfig cfg;
  cfg.epsilon = 0.05;
  cfg.mode_cutoff = 8;
  ParticleEnsemble e = random_ensemble(60, 4);
  e.positions.col(1) = wrap(e.position(0) + Vec2(0.02, 0.01));
  double brute = 0.0;
  for (int i = 0; i < e.size(); ++i) {
    for (int j = 0; j < e.size(); ++j) {
      if (i != j) brute += kernels::green_regularized(e.position(i) - e.position(j), cfg.kernel());
    }
  }
  CHECK(interaction_potential(e, cfg) == doctest::Approx(brute).epsilon(1e-10));
}

TEST_CASE("runs are deterministic and exchangeable") {
  const int n = 40;
  ParticleConfig cfg;
  const ParticleEnsemble e0 = random_ensemble(n, 5);
  const auto paths = noise::make_paths(noise::SeedTree(6), noise::TimeGrid::uniform(0.05, 50), {2, n, 0, 0, 0});
  const ParticleRun a = run(e0, paths, cfg, mixed_basis(), {0.05});
  const ParticleRun b = run(e0, paths, cfg, mixed_basis(), {0.05});
  CHECK(a.snapshots.back().positions == b.snapshots.back().positions);

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(7));
  ParticleEnsemble p0 = e0;
  noise::NoisePaths q = paths;
  for (int i = 0; i < n; ++i) {
    p0.positions.col(i) = e0.position(perm[i]);
    p0.intensities[i] = e0.intensities[perm[i]];
    q.individual.col(2 * i) = paths.individual.col(2 * perm[i]);
    q.individual.col(2 * i + 1) = paths.individual.col(2 * perm[i] + 1);
  }
  const ParticleRun c = run(p0, q, cfg, mixed_basis(), {0.05});
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    worst = std::max(worst, torus_distance(c.snapshots.back().position(i), a.snapshots.back().position(perm[i])));
  }
  // The Fourier sums are reordered, so agreement is to rounding.
  CHECK(worst < 1e-12);
}

TEST_CASE("shrinking the cap changes well-separated trajectories less and less") {
  const int n = 16;
  // A lattice keeps every pair far from the cap.
  Eigen::Matrix2Xd x(2, n);
  for (int i = 0; i < n; ++i) x.col(i) = Vec2(-kPi + kTwoPi * (i % 4) / 4 + 0.3, -kPi + kTwoPi * (i / 4) / 4 + 0.2);
  const ParticleEnsemble e0 = make_ensemble(x, Eigen::VectorXd::Ones(n));
  const auto paths = noise::make_paths(noise::SeedTree(9), noise::TimeGrid::uniform(0.1, 100), {0, n, 0, 0, 0});
  auto final_state = [&](double eps) {
    ParticleConfig cfg;
    cfg.epsilon = eps;
    return run(e0, paths, cfg, {}, {0.1}).snapshots.back();
  };
  const auto ref = final_state(0.01);
  double last = std::numeric_limits<double>::infinity();
  for (double eps : {0.08, 0.04, 0.02}) {
    const auto s = final_state(eps);
    double gap = 0.0;
    for (int i = 0; i < n; ++i) gap = std::max(gap, torus_distance(s.position(i), ref.position(i)));
    CHECK(gap <= last);
    last = gap;
  }
}

TEST_CASE("non-finite state aborts with a dump") {
  ParticleEnsemble e0 = random_ensemble(4, 10);
  e0.intensities[2] = std::numeric_limits<double>::quiet_NaN();
  const auto paths = noise::make_paths(noise::SeedTree(1), noise::TimeGrid::uniform(0.01, 10), {0, 4, 0, 0, 0});
  const auto dump = (std::filesystem::temp_directory_path() / "vortexlab_dump.bin").string();
  std::filesystem::remove(dump);
  CHECK_THROWS_AS(run(e0, paths, ParticleConfig{}, {}, {0.01}, {false, dump}), NumericalError);
  REQUIRE(std::filesystem::exists(dump));
  const ParticleEnsemble back = load_snapshot(dump);
  CHECK(back.positions == e0.positions);
  std::filesystem::remove(dump);
}

TEST_CASE("snapshot files round-trip") {
  const ParticleEnsemble e = random_ensemble(7, 11);
  const auto file = (std::filesystem::temp_directory_path() / "vortexlab_particles.bin").string();
  save_snapshot(e, file);
  const ParticleEnsemble back = load_snapshot(file);
  CHECK(back.positions == e.positions);
  CHECK(back.intensities == e.intensities);
  std::filesystem::remove(file);
}

TEST_CASE("configuration errors") {
  ParticleConfig cfg;
  cfg.epsilon = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ParticleConfig{};
  cfg.mode_cutoff = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  const auto paths = noise::make_paths(noise::SeedTree(1), noise::TimeGrid::uniform(0.01, 10), {0, 3, 0, 0, 0});
  CHECK_THROWS_AS(run(random_ensemble(4, 1), paths, ParticleConfig{}, {}, {0.01}), ConfigError);
}
