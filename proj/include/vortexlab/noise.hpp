#pragma once

// Seeded noise for every solver in the library.
//
// Randomness is drawn from keyed Philox4x32-10 streams: a stream is addressed by
// (master seed, tag, level, replica, index) and the k-th variate of a stream is a
// pure function of that address and k. Nothing is sequentially shared between
// streams, so replicas can be generated in any order or in parallel and still
// reproduce bit-for-bit.

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace vortex::noise {

enum class StreamTag : std::uint64_t {
  Common = 1,
  Individual = 2,
  InitialPositions = 3,
  Intensities = 4,
  Test = 99,
};

struct StreamKey {
  StreamTag tag = StreamTag::Test;
  std::uint64_t level = 0;
  std::uint64_t replica = 0;
  std::uint64_t index = 0;
};

/// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Sequential reader over one keyed stream. Cheap to construct, no shared state.
class Stream {
 public:
  Stream(std::array<std::uint32_t, 2> key) : key_(key) {}

  /// Uniform in the open interval (0, 1), 53 bits.
  double uniform();
  /// Standard normal via Box-Muller on one Philox block.
  double normal();

  /// Random access: the k-th normal of this stream, independent of any reads.
  double normal_at(std::uint64_t k) const;
  double uniform_at(std::uint64_t k) const;

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t next_uniform_ = 0;
  std::uint64_t next_normal_ = 0;
};

class SeedTree {
 public:
  explicit SeedTree(std::uint64_t master_seed) : master_seed_(master_seed) {}

  std::uint64_t master_seed() const { return master_seed_; }
  std::array<std::uint32_t, 2> key(const StreamKey& k) const;
  Stream stream(const StreamKey& k) const { return Stream(key(k)); }

 private:
  std::uint64_t master_seed_;
};

/// Strictly increasing instants t_0 = 0 < ... < t_L.
class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(std::vector<double> points);
  static TimeGrid uniform(double horizon, int steps);

  int steps() const { return static_cast<int>(points_.size()) - 1; }
  double operator[](int j) const { return points_[static_cast<std::size_t>(j)]; }
  double dt(int j) const { return points_[j + 1] - points_[j]; }
  double horizon() const { return points_.back(); }
  const std::vector<double>& points() const { return points_; }

  /// Index j with t_j == t to within `tol`; throws RangeError otherwise.
  int index_of(double t, double tol = 1e-9) const;

 private:
  std::vector<double> points_;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct NoisePaths {
  TimeGrid grid;
  RowMatrix common;      // steps x d, increments of W^k
  RowMatrix individual;  // steps x 2N, row j = (dB_1, dB_2, ...) over [t_j, t_{j+1}]
  std::uint64_t master_seed = 0;
  /// Fingerprint of the finest common path this one was derived from.
  std::uint64_t source_fingerprint = 0;

  int steps() const { return grid.steps(); }
  int dimension() const { return static_cast<int>(common.cols()); }
  int particles() const { return static_cast<int>(individual.cols() / 2); }

  Eigen::Vector2d individual_increment(int step, int particle) const {
    return {individual(step, 2 * particle), individual(step, 2 * particle + 1)};
  }

  /// FNV-1a over (steps, d, common increments). Identical bytes <=> identical fingerprint.
  std::uint64_t common_fingerprint() const;
};

struct PathRequest {
  int d = 0;
  int n = 0;
  std::uint64_t common_index = 0;  // selects the W path
  std::uint64_t level = 0;         // e.g. the particle count of a sweep entry
  std::uint64_t replica = 0;
};

NoisePaths make_paths(const SeedTree& seeds, const TimeGrid& grid, const PathRequest& request);

/// Sum consecutive blocks of `factor` increments. The coarse increment is, by
/// construction, the left-to-right floating-point sum of its fine increments.
NoisePaths derive_coarse(const NoisePaths& fine, int factor);

/// Copy of `paths` with freshly generated individual increments for n particles
/// on the same grid; the common path is untouched.
NoisePaths attach_individual(const NoisePaths& paths, const SeedTree& seeds, int n, std::uint64_t level,
                             std::uint64_t replica);

/// Binary layout: u64 L, u64 d, u64 N, u64 master_seed, then (L+1) grid points,
/// L*d common increments and L*N*2 individual increments, all little-endian f64.
void save_paths(const NoisePaths& paths, const std::string& file);
NoisePaths load_paths(const std::string& file);

/// Law of the vortex intensities: uniform on [a, b] or finitely many atoms.
struct IntensityLaw {
  enum class Kind { Uniform, Atoms };
  Kind kind = Kind::Uniform;
  double a = 0.5;
  double b = 1.5;
  std::vector<double> atoms;
  std::vector<double> weights;

  static IntensityLaw uniform(double lo, double hi);
  static IntensityLaw single_atom(double value);
  static IntensityLaw discrete(std::vector<double> values, std::vector<double> probabilities);

  double mean() const;
  double second_moment() const;
  double support_min() const;
  double support_max() const;
  /// Throws ConfigError unless the law has compact support and positive mean.
  void validate() const;
};

struct IntensitySample {
  Eigen::VectorXd values;
};

IntensitySample sample_intensities(const SeedTree& seeds, const IntensityLaw& law, int n, std::uint64_t level = 0,
                                   std::uint64_t replica = 0);

/// I.i.d. draws from the piecewise-constant density whose cell (i, j) is centred at
/// the grid point (-pi + i h, -pi + j h), h = 2 pi / n. Returns a 2 x count matrix.
Eigen::Matrix2Xd sample_initial(const SeedTree& seeds, const Eigen::ArrayXXd& density, int count,
                                std::uint64_t level = 0, std::uint64_t replica = 0);

}  // namespace vortex::noise
