#pragma once

#include <Eigen/Core>
#include <vector>

#include "vortexlab/torus.hpp"

namespace vortex::sigma {

/// One term a cos(k.x + phase) of a trigonometric stream function.
struct StreamTerm {
  Eigen::Vector2i k = Eigen::Vector2i::Zero();
  double amplitude = 0.0;
  double phase = 0.0;
};

/// A transport-noise field sigma_k: either a constant vector or the
/// perpendicular gradient (d2 psi, -d1 psi) of a trigonometric stream function,
/// which makes it smooth and exactly divergence-free.
class SigmaField {
 public:
  static SigmaField constant(const Vec2& value);
  static SigmaField stream(std::vector<StreamTerm> terms);

  bool is_constant() const { return constant_; }
  const Vec2& constant_value() const { return value_; }
  const std::vector<StreamTerm>& terms() const { return terms_; }

  Vec2 value(const Vec2& x) const;
  /// J(i, j) = d_j sigma_i.
  Eigen::Matrix2d jacobian(const Vec2& x) const;
  /// (sigma . grad) sigma.
  Vec2 self_advection(const Vec2& x) const { return jacobian(x) * value(x); }
  double divergence(const Vec2& x) const { return jacobian(x).trace(); }

 private:
  bool constant_ = true;
  Vec2 value_ = Vec2::Zero();
  std::vector<StreamTerm> terms_;
};

class SigmaBasis {
 public:
  SigmaBasis() = default;
  explicit SigmaBasis(std::vector<SigmaField> fields) : fields_(std::move(fields)) {}

  int size() const { return static_cast<int>(fields_.size()); }
  bool empty() const { return fields_.empty(); }
  const SigmaField& operator[](int k) const { return fields_[static_cast<std::size_t>(k)]; }
  bool all_constant() const;

  /// Stratonovich-to-Ito drift for a particle: 1/2 sum_k (sigma_k . grad) sigma_k.
  Vec2 ito_drift(const Vec2& x) const;

  /// Grid values of component `axis` of sigma_k on the n x n grid.
  Eigen::ArrayXXd grid_component(int k, int axis, int n) const;

 private:
  std::vector<SigmaField> fields_;
};

}  // namespace vortex::sigma
