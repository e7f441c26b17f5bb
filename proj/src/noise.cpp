#include "vortexlab/noise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "vortexlab/binary_io.hpp"
#include "vortexlab/errors.hpp"
#include "vortexlab/torus.hpp"

namespace vortex::noise {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53U;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57U;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9U;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85U;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Open interval (0, 1) from the top 53 bits.
double to_unit(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53; }

std::array<double, 2> unit_pair(std::array<std::uint32_t, 2> key, std::uint64_t block, std::uint32_t domain) {
  const auto r = philox4x32({static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32), domain, 0U},
                            key);
  const std::uint64_t a = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
  const std::uint64_t b = (static_cast<std::uint64_t>(r[2]) << 32) | r[3];
  return {to_unit(a), to_unit(b)};
}

std::array<double, 2> normal_pair(std::array<std::uint32_t, 2> key, std::uint64_t block) {
  const auto u = unit_pair(key, block, 0U);
  const double radius = std::sqrt(-2.0 * std::log(u[0]));
  const double angle = kTwoPi * u[1];
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kPhiloxW0;
    k[1] += kPhiloxW1;
  }
  return c;
}

double Stream::uniform() { return uniform_at(next_uniform_++); }

double Stream::normal() { return normal_at(next_normal_++); }

double Stream::normal_at(std::uint64_t k) const { return normal_pair(key_, k / 2)[k % 2]; }

double Stream::uniform_at(std::uint64_t k) const { return unit_pair(key_, k / 2, 1U)[k % 2]; }

std::array<std::uint32_t, 2> SeedTree::key(const StreamKey& k) const {
  std::uint64_t h = splitmix64(master_seed_);
  h = splitmix64(h ^ static_cast<std::uint64_t>(k.tag));
  h = splitmix64(h ^ k.level);
  h = splitmix64(h ^ k.replica);
  h = splitmix64(h ^ k.index);
  return {static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
}

TimeGrid::TimeGrid(std::vector<double> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw ConfigError("time grid needs at least two instants");
  if (points_.front() != 0.0) throw ConfigError("time grid must start at t = 0");
  for (std::size_t j = 1; j < points_.size(); ++j) {
    if (!(points_[j] > points_[j - 1])) throw ConfigError("time grid is not strictly increasing");
  }
}

TimeGrid TimeGrid::uniform(double horizon, int steps) {
  if (steps < 1 || !(horizon > 0.0)) throw ConfigError("uniform time grid needs steps >= 1 and horizon > 0");
  std::vector<double> pts(static_cast<std::size_t>(steps) + 1);
  for (int j = 0; j <= steps; ++j) pts[j] = horizon * static_cast<double>(j) / steps;
  return TimeGrid(std::move(pts));
}

int TimeGrid::index_of(double t, double tol) const {
  const auto it = std::lower_bound(points_.begin(), points_.end(), t - tol);
  if (it == points_.end() || std::abs(*it - t) > tol) {
    throw RangeError("time " + std::to_string(t) + " is not a grid instant");
  }
  return static_cast<int>(it - points_.begin());
}

std::uint64_t NoisePaths::common_fingerprint() const {
  std::uint64_t h = io::fnv1a(std::span<const double>());
  const double dims[2] = {static_cast<double>(common.rows()), static_cast<double>(common.cols())};
  h = io::fnv1a(std::span<const double>(dims, 2), h);
  return io::fnv1a(std::span<const double>(common.data(), static_cast<std::size_t>(common.size())), h);
}

namespace {

void fill_individual(NoisePaths& paths, const SeedTree& seeds, int n, std::uint64_t level, std::uint64_t replica) {
  const int steps = paths.grid.steps();
  paths.individual.resize(steps, 2 * n);
  std::vector<double> sqrt_dt(static_cast<std::size_t>(steps));
  for (int j = 0; j < steps; ++j) sqrt_dt[j] = std::sqrt(paths.grid.dt(j));
  for (int i = 0; i < n; ++i) {
    const auto key = seeds.key({StreamTag::Individual, level, replica, static_cast<std::uint64_t>(i)});
    for (int j = 0; j < steps; ++j) {
      const auto z = normal_pair(key, static_cast<std::uint64_t>(j));
      paths.individual(j, 2 * i) = sqrt_dt[j] * z[0];
      paths.individual(j, 2 * i + 1) = sqrt_dt[j] * z[1];
    }
  }
}

}  // namespace

NoisePaths make_paths(const SeedTree& seeds, const TimeGrid& grid, const PathRequest& request) {
  if (request.d < 0 || request.n < 0) throw ConfigError("noise dimensions must be non-negative");
  if (grid.steps() < 1) throw ConfigError("empty time grid");
  NoisePaths paths;
  paths.grid = grid;
  paths.master_seed = seeds.master_seed();
  const int steps = grid.steps();
  paths.common.resize(steps, request.d);
  for (int k = 0; k < request.d; ++k) {
    Stream s = seeds.stream({StreamTag::Common, 0, request.common_index, static_cast<std::uint64_t>(k)});
    for (int j = 0; j < steps; ++j) paths.common(j, k) = std::sqrt(grid.dt(j)) * s.normal();
  }
  fill_individual(paths, seeds, request.n, request.level, request.replica);
  paths.source_fingerprint = paths.common_fingerprint();
  return paths;
}

NoisePaths derive_coarse(const NoisePaths& fine, int factor) {
  if (factor < 1 || fine.steps() % factor != 0) {
    throw ConfigError("coarsening factor must divide the number of fine steps");
  }
  const int coarse_steps = fine.steps() / factor;
  std::vector<double> pts(static_cast<std::size_t>(coarse_steps) + 1);
  for (int j = 0; j <= coarse_steps; ++j) pts[j] = fine.grid[j * factor];

  NoisePaths coarse;
  coarse.grid = TimeGrid(std::move(pts));
  coarse.master_seed = fine.master_seed;
  coarse.source_fingerprint = fine.source_fingerprint;
  coarse.common = RowMatrix::Zero(coarse_steps, fine.common.cols());
  coarse.individual = RowMatrix::Zero(coarse_steps, fine.individual.cols());
  for (int j = 0; j < coarse_steps; ++j) {
    for (int r = 0; r < factor; ++r) {
      coarse.common.row(j) += fine.common.row(j * factor + r);
      coarse.individual.row(j) += fine.individual.row(j * factor + r);
    }
  }
  return coarse;
}

NoisePaths attach_individual(const NoisePaths& paths, const SeedTree& seeds, int n, std::uint64_t level,
                             std::uint64_t replica) {
  if (n < 0) throw ConfigError("particle count must be non-negative");
  NoisePaths out;
  out.grid = paths.grid;
  out.common = paths.common;
  out.master_seed = paths.master_seed;
  out.source_fingerprint = paths.source_fingerprint;
  fill_individual(out, seeds, n, level, replica);
  return out;
}

void save_paths(const NoisePaths& paths, const std::string& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + file);
  io::write_u64(out, static_cast<std::uint64_t>(paths.steps()));
  io::write_u64(out, static_cast<std::uint64_t>(paths.dimension()));
  io::write_u64(out, static_cast<std::uint64_t>(paths.particles()));
  io::write_u64(out, paths.master_seed);
  io::write_f64s(out, paths.grid.points());
  io::write_f64s(out, std::span<const double>(paths.common.data(), static_cast<std::size_t>(paths.common.size())));
  io::write_f64s(out,
                 std::span<const double>(paths.individual.data(), static_cast<std::size_t>(paths.individual.size())));
}

NoisePaths load_paths(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + file);
  const auto steps = static_cast<Eigen::Index>(io::read_u64(in));
  const auto d = static_cast<Eigen::Index>(io::read_u64(in));
  const auto n = static_cast<Eigen::Index>(io::read_u64(in));
  NoisePaths paths;
  paths.master_seed = io::read_u64(in);
  std::vector<double> pts(static_cast<std::size_t>(steps) + 1);
  io::read_f64s(in, pts);
  paths.grid = TimeGrid(std::move(pts));
  paths.common.resize(steps, d);
  io::read_f64s(in, std::span<double>(paths.common.data(), static_cast<std::size_t>(paths.common.size())));
  paths.individual.resize(steps, 2 * n);
  io::read_f64s(in, std::span<double>(paths.individual.data(), static_cast<std::size_t>(paths.individual.size())));
  paths.source_fingerprint = paths.common_fingerprint();
  return paths;
}

IntensityLaw IntensityLaw::uniform(double lo, double hi) {
  IntensityLaw law;
  law.kind = Kind::Uniform;
  law.a = lo;
  law.b = hi;
  return law;
}

IntensityLaw IntensityLaw::single_atom(double value) { return discrete({value}, {1.0}); }

IntensityLaw IntensityLaw::discrete(std::vector<double> values, std::vector<double> probabilities) {
  IntensityLaw law;
  law.kind = Kind::Atoms;
  law.atoms = std::move(values);
  law.weights = std::move(probabilities);
  return law;
}

double IntensityLaw::mean() const {
  if (kind == Kind::Uniform) return 0.5 * (a + b);
  double m = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) m += weights[i] * atoms[i];
  return m;
}

double IntensityLaw::second_moment() const {
  if (kind == Kind::Uniform) return (a * a + a * b + b * b) / 3.0;
  double m = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) m += weights[i] * atoms[i] * atoms[i];
  return m;
}

double IntensityLaw::support_min() const {
  return kind == Kind::Uniform ? a : *std::min_element(atoms.begin(), atoms.end());
}

double IntensityLaw::support_max() const {
  return kind == Kind::Uniform ? b : *std::max_element(atoms.begin(), atoms.end());
}

void IntensityLaw::validate() const {
  if (kind == Kind::Uniform) {
    if (!std::isfinite(a) || !std::isfinite(b) || !(b > a)) throw ConfigError("uniform intensity law needs a < b");
  } else {
    if (atoms.empty() || atoms.size() != weights.size()) throw ConfigError("atoms and weights must match");
    double total = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (!std::isfinite(atoms[i]) || !(weights[i] >= 0.0)) throw ConfigError("invalid intensity atom");
      total += weights[i];
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("atom weights must sum to 1");
  }
  if (!(mean() > 0.0)) {
    throw ConfigError("intensity law must have positive mean (got " + std::to_string(mean()) + ")");
  }
}

IntensitySample sample_intensities(const SeedTree& seeds, const IntensityLaw& law, int n, std::uint64_t level,
                                   std::uint64_t replica) {
  law.validate();
  if (n < 0) throw ConfigError("sample size must be non-negative");
  IntensitySample sample{Eigen::VectorXd(n)};
  Stream s = seeds.stream({StreamTag::Intensities, level, replica, 0});
  if (law.kind == IntensityLaw::Kind::Uniform) {
    for (int i = 0; i < n; ++i) sample.values[i] = law.a + (law.b - law.a) * s.uniform();
  } else {
    std::vector<double> cdf(law.weights.size());
    std::partial_sum(law.weights.begin(), law.weights.end(), cdf.begin());
    for (int i = 0; i < n; ++i) {
      const double u = s.uniform() * cdf.back();
      auto idx = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      idx = std::min(idx, cdf.size() - 1);
      sample.values[i] = law.atoms[idx];
    }
  }
  return sample;
}

Eigen::Matrix2Xd sample_initial(const SeedTree& seeds, const Eigen::ArrayXXd& density, int count,
                                std::uint64_t level, std::uint64_t replica) {
  const auto n = density.rows();
  if (n < 1 || density.cols() != n) throw ValidationError("density must be a square grid");
  if (count < 0) throw ConfigError("sample size must be non-negative");
  const double h = kTwoPi / static_cast<double>(n);
  if ((density < 0.0).any()) throw ValidationError("density has a negative cell");
  if (!density.allFinite()) throw ValidationError("density has a non-finite cell");
  const double integral = density.sum() * h * h;
  if (std::abs(integral - 1.0) > 1e-10) {
    throw ValidationError("density integrates to " + std::to_string(integral) + ", expected 1");
  }

  // Row-major flattening: cell index = i * n + j, i along x1.
  std::vector<double> cdf(static_cast<std::size_t>(n * n));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      acc += density(i, j);
      cdf[static_cast<std::size_t>(i * n + j)] = acc;
    }
  }

  Eigen::Matrix2Xd points(2, count);
  Stream s = seeds.stream({StreamTag::InitialPositions, level, replica, 0});
  for (int p = 0; p < count; ++p) {
    const double u = s.uniform() * acc;
    auto cell = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    cell = std::min(cell, cdf.size() - 1);
    // Skip zero-mass cells that upper_bound can land on only through rounding.
    while (density(static_cast<Eigen::Index>(cell) / n, static_cast<Eigen::Index>(cell) % n) == 0.0 && cell > 0) --cell;
    const auto i = static_cast<Eigen::Index>(cell) / n;
    const auto j = static_cast<Eigen::Index>(cell) % n;
    const double x1 = -kPi + (static_cast<double>(i) + s.uniform() - 0.5) * h;
    const double x2 = -kPi + (static_cast<double>(j) + s.uniform() - 0.5) * h;
    points(0, p) = wrap_coordinate(x1);
    points(1, p) = wrap_coordinate(x2);
  }
  return points;
}

}  // namespace vortex::noise
