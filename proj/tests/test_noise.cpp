#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "doctest.h"
#include "vortexlab/errors.hpp"
#include "vortexlab/noise.hpp"
#include "vortexlab/torus.hpp"

using namespace vortex;
using namespace vortex::noise;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("philox matches the published known-answer vectors") {
  // Random123 kat_vectors, philox4x32 with 10 rounds.
  auto zero = philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(zero == std::array<std::uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  auto ones = philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff});
  CHECK(ones == std::array<std::uint32_t, 4>{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  auto pi = philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0});
  CHECK(pi == std::array<std::uint32_t, 4>{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("same seed gives identical increments") {
  const SeedTree seeds(7);
  const auto grid = TimeGrid::uniform(1.0, 50);
  const auto a = make_paths(seeds, grid, {3, 10, 0, 2, 1});
  const auto b = make_paths(seeds, grid, {3, 10, 0, 2, 1});
  CHECK(a.common == b.common);
  CHECK(a.individual == b.individual);
  CHECK(a.common_fingerprint() == b.common_fingerprint());
  const auto c = make_paths(SeedTree(8), grid, {3, 10, 0, 2, 1});
  CHECK(c.common != a.common);
}

TEST_CASE("coarse increments are exact sums of fine ones") {
  const SeedTree seeds(11);
  const auto fine = make_paths(seeds, TimeGrid::uniform(1.0, 200), {2, 4, 0, 0, 0});
  const auto coarse = derive_coarse(fine, 10);
  REQUIRE(coarse.steps() == 20);
  for (int j = 0; j < coarse.steps(); ++j) {
    for (int k = 0; k < 2; ++k) {
      double sum = 0.0;
      for (int q = 0; q < 10; ++q) sum += fine.common(10 * j + q, k);
      CHECK(coarse.common(j, k) == sum);
    }
    CHECK(coarse.grid[j + 1] == fine.grid[10 * (j + 1)]);
  }
  CHECK(coarse.source_fingerprint == fine.common_fingerprint());
  CHECK_THROWS_AS(derive_coarse(fine, 7), ConfigError);
}

TEST_CASE("no common dimensions leaves the individual streams alone") {
  const SeedTree seeds(3);
  const auto grid = TimeGrid::uniform(0.5, 20);
  const auto none = make_paths(seeds, grid, {0, 5, 0, 1, 0});
  const auto two = make_paths(seeds, grid, {2, 5, 0, 1, 0});
  CHECK(none.common.size() == 0);
  CHECK(none.individual == two.individual);
}

TEST_CASE("time grids must increase") {
  CHECK_THROWS_AS(TimeGrid({0.0, 0.2, 0.1}), ConfigError);
  CHECK_THROWS_AS(TimeGrid({0.0, 0.1, 0.1}), ConfigError);
  CHECK_THROWS_AS(TimeGrid::uniform(1.0, 0), ConfigError);
  const TimeGrid g({0.0, 0.1, 0.3});
  CHECK(g.index_of(0.3) == 2);
  CHECK_THROWS_AS(g.index_of(0.2), RangeError);
}

TEST_CASE("increments are standard normal after scaling") {
  const SeedTree seeds(2024);
  const double dt = 1e-3;
  const auto paths = make_paths(seeds, TimeGrid::uniform(100.0, 100000), {1, 0, 0, 0, 0});
  std::vector<double> z(100000);
  for (int j = 0; j < 100000; ++j) z[j] = paths.common(j, 0) / std::sqrt(dt);
  std::sort(z.begin(), z.end());
  double ks = 0.0;
  const double n = static_cast<double>(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double f = normal_cdf(z[i]);
    ks = std::max({ks, std::abs(f - i / n), std::abs((i + 1) / n - f)});
  }
  // 1% critical value of the one-sample KS statistic.
  CHECK(ks < 1.628 / std::sqrt(n));
}

TEST_CASE("distinct replicas are uncorrelated") {
  const SeedTree seeds(5);
  const auto grid = TimeGrid::uniform(1.0, 50000);
  const auto a = make_paths(seeds, grid, {0, 1, 0, 4, 0});
  const auto b = make_paths(seeds, grid, {0, 1, 0, 4, 1});
  Eigen::VectorXd x = a.individual.col(0);
  Eigen::VectorXd y = b.individual.col(1);
  x.array() -= x.mean();
  y.array() -= y.mean();
  const double corr = x.dot(y) / std::sqrt(x.squaredNorm() * y.squaredNorm());
  CHECK(std::abs(corr) < 0.02);
  // Two components of one particle are independent too.
  Eigen::VectorXd u = a.individual.col(0), v = a.individual.col(1);
  u.array() -= u.mean();
  v.array() -= v.mean();
  CHECK(std::abs(u.dot(v) / std::sqrt(u.squaredNorm() * v.squaredNorm())) < 0.02);
}

TEST_CASE("streams are addressable at random") {
  const SeedTree seeds(99);
  Stream s = seeds.stream({StreamTag::Test, 1, 2, 3});
  std::vector<double> seq;
  for (int k = 0; k < 9; ++k) seq.push_back(s.normal());
  for (int k = 8; k >= 0; --k) CHECK(seeds.stream({StreamTag::Test, 1, 2, 3}).normal_at(k) == seq[k]);
  Stream u = seeds.stream({StreamTag::Test, 1, 2, 3});
  for (int k = 0; k < 100; ++k) {
    const double x = u.uniform();
    CHECK(x > 0.0);
    CHECK(x < 1.0);
  }
}

TEST_CASE("paths round-trip through a file bit for bit") {
  const SeedTree seeds(1);
  const auto p = make_paths(seeds, TimeGrid::uniform(0.3, 30), {2, 3, 0, 0, 0});
  const auto file = std::filesystem::temp_directory_path() / "vortexlab_paths.bin";
  save_paths(p, file.string());
  const auto q = load_paths(file.string());
  CHECK(q.grid.points() == p.grid.points());
  CHECK(q.common == p.common);
  CHECK(q.individual == p.individual);
  CHECK(q.master_seed == p.master_seed);
  std::filesystem::remove(file);
}

TEST_CASE("initial positions follow the gridded density") {
  const SeedTree seeds(17);
  const int n = 8;
  const double cell = (kTwoPi / n) * (kTwoPi / n);
  SUBCASE("uniform density fills cells multinomially") {
    const Eigen::ArrayXXd density = Eigen::ArrayXXd::Constant(n, n, 1.0 / kTorusArea);
    const int count = 100000;
    const Eigen::Matrix2Xd x = sample_initial(seeds, density, count);
    Eigen::ArrayXXd hits = Eigen::ArrayXXd::Zero(n, n);
    const double h = kTwoPi / n;
    for (int i = 0; i < count; ++i) {
      // Cell (a, b) is centred at the grid point -pi + a h.
      const int a = static_cast<int>(std::floor((x(0, i) + kPi + 0.5 * h) / h)) % n;
      const int b = static_cast<int>(std::floor((x(1, i) + kPi + 0.5 * h) / h)) % n;
      hits(a, b) += 1.0;
    }
    const double p = 1.0 / (n * n);
    const double sd = std::sqrt(count * p * (1.0 - p));
    CHECK(((hits - count * p).abs() < 4.0 * sd).all());
  }
  SUBCASE("a single loaded cell") {
    Eigen::ArrayXXd density = Eigen::ArrayXXd::Zero(n, n);
    density(3, 5) = 1.0 / cell;
    const Eigen::Matrix2Xd x = sample_initial(seeds, density, 500);
    const double h = kTwoPi / n;
    for (int i = 0; i < 500; ++i) {
      CHECK(std::abs(torus_delta(Vec2(x(0, i), 0.0), Vec2(-kPi + 3 * h, 0.0)).x()) <= 0.5 * h + 1e-12);
      CHECK(std::abs(torus_delta(Vec2(0.0, x(1, i)), Vec2(0.0, -kPi + 5 * h)).y()) <= 0.5 * h + 1e-12);
    }
  }
  SUBCASE("empty sample") {
    const Eigen::ArrayXXd density = Eigen::ArrayXXd::Constant(n, n, 1.0 / kTorusArea);
    CHECK(sample_initial(seeds, density, 0).cols() == 0);
  }
  SUBCASE("negative cells are rejected") {
    Eigen::ArrayXXd density = Eigen::ArrayXXd::Constant(n, n, 1.0 / kTorusArea);
    density(0, 0) = -1e-3;
    density(1, 1) += 1e-3;
    CHECK_THROWS_AS(sample_initial(seeds, density, 10), ValidationError);
  }
}

TEST_CASE("intensity laws") {
  const SeedTree seeds(23);
  const auto u = sample_intensities(seeds, IntensityLaw::uniform(0.5, 1.5), 1000000).values;
  CHECK(std::abs(u.mean() - 1.0) < 0.004);
  CHECK(u.minCoeff() >= 0.5);
  CHECK(u.maxCoeff() <= 1.5);
  const auto one = sample_intensities(seeds, IntensityLaw::single_atom(1.0), 100).values;
  CHECK((one.array() == 1.0).all());
  CHECK_THROWS_AS(IntensityLaw::uniform(-1.0, 0.5).validate(), ConfigError);
  CHECK_THROWS_AS(sample_intensities(seeds, IntensityLaw::uniform(-1.0, 0.5), 10), ConfigError);
  const auto d = IntensityLaw::discrete({1.0, 3.0}, {0.75, 0.25});
  CHECK(d.mean() == doctest::Approx(1.5));
  const auto s = sample_intensities(seeds, d, 20000).values;
  CHECK(((s.array() == 1.0) || (s.array() == 3.0)).all());
  CHECK(std::abs(s.mean() - 1.5) < 0.04);
}
