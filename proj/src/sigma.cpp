#include "vortexlab/sigma.hpp"

#include <cmath>

#include "vortexlab/spectral.hpp"

namespace vortex::sigma {

SigmaField SigmaField::constant(const Vec2& value) {
  SigmaField f;
  f.constant_ = true;
  f.value_ = value;
  return f;
}

SigmaField SigmaField::stream(std::vector<StreamTerm> terms) {
  SigmaField f;
  f.constant_ = false;
  f.terms_ = std::move(terms);
  return f;
}

Vec2 SigmaField::value(const Vec2& x) const {
  if (constant_) return value_;
  Vec2 v = Vec2::Zero();
  for (const auto& t : terms_) {
    const double s = t.amplitude * std::sin(t.k.x() * x.x() + t.k.y() * x.y() + t.phase);
    v.x() -= t.k.y() * s;
    v.y() += t.k.x() * s;
  }
  return v;
}

Eigen::Matrix2d SigmaField::jacobian(const Vec2& x) const {
  Eigen::Matrix2d j = Eigen::Matrix2d::Zero();
  if (constant_) return j;
  for (const auto& t : terms_) {
    const double c = t.amplitude * std::cos(t.k.x() * x.x() + t.k.y() * x.y() + t.phase);
    const Eigen::Vector2d k = t.k.cast<double>();
    j.row(0) -= k.y() * c * k.transpose();
    j.row(1) += k.x() * c * k.transpose();
  }
  return j;
}

bool SigmaBasis::all_constant() const {
  for (const auto& f : fields_) {
    if (!f.is_constant()) return false;
  }
  return true;
}

Vec2 SigmaBasis::ito_drift(const Vec2& x) const {
  Vec2 d = Vec2::Zero();
  for (const auto& f : fields_) {
    if (!f.is_constant()) d += f.self_advection(x);
  }
  return 0.5 * d;
}

Eigen::ArrayXXd SigmaBasis::grid_component(int k, int axis, int n) const {
  Eigen::ArrayXXd out(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      out(i, j) = (*this)[k].value({spectral::grid_coordinate(i, n), spectral::grid_coordinate(j, n)})[axis];
    }
  }
  return out;
}

}  // namespace vortex::sigma
