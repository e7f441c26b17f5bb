#include "vortexlab/mode_sums.hpp"

#include <complex>

#include "vortexlab/errors.hpp"

namespace vortex::modesums {

using Complex = std::complex<double>;

Eigen::MatrixXcd axis_phases(const Eigen::Ref<const Eigen::RowVectorXd>& x, int cutoff) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXcd e(n, 2 * cutoff + 1);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Complex base = std::polar(1.0, x[j]);
    Complex p(1.0, 0.0);
    e(j, cutoff) = p;
    // Repeated multiplication drifts by about m ulps, far below anything we
    // compare against; re-anchoring every 8 steps keeps it there for large M.
    for (int m = 1; m <= cutoff; ++m) {
      p = (m % 8 == 0) ? std::polar(1.0, m * x[j]) : p * base;
      e(j, cutoff + m) = p;
      e(j, cutoff - m) = std::conj(p);
    }
  }
  return e;
}

Eigen::MatrixXcd weighted_mode_sums(const Eigen::Ref<const Eigen::Matrix2Xd>& points, const Eigen::VectorXd& weights,
                                    int cutoff) {
  if (weights.size() != points.cols()) throw ConfigError("one weight per point required");
  const int w = 2 * cutoff + 1;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(w, w);
  if (points.cols() == 0) return out;
  // Real weights make S(-m) = conj S(m): compute the rows m1 >= 0 and mirror.
  const Eigen::MatrixXcd e1 = axis_phases(points.row(0), cutoff).rightCols(cutoff + 1);
  Eigen::MatrixXcd e2 = axis_phases(points.row(1), cutoff).conjugate();
  e2 = weights.cast<Complex>().asDiagonal() * e2;
  out.bottomRows(cutoff + 1) = e1.adjoint() * e2;
  for (int m1 = 1; m1 <= cutoff; ++m1) {
    for (int m2 = -cutoff; m2 <= cutoff; ++m2) {
      out(cutoff - m1, cutoff - m2) = std::conj(out(cutoff + m1, cutoff + m2));
    }
  }
  return out;
}

Eigen::MatrixXd synthesize(const Eigen::Ref<const Eigen::Matrix2Xd>& points,
                           const std::vector<Eigen::MatrixXcd>& coefficients, int cutoff) {
  const int w = 2 * cutoff + 1;
  const int h = cutoff + 1;
  const Eigen::Index n = points.cols();
  const auto fields = static_cast<Eigen::Index>(coefficients.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, fields);
  if (n == 0 || fields == 0) return out;
  // Re[C(m) e^{im.x} + C(-m) e^{-im.x}] = Re[(C(m) + conj C(-m)) e^{im.x}], so only
  // the rows m1 >= 0 are needed, with m1 = 0 kept as is.
  Eigen::MatrixXcd stacked(w, h * fields);
  for (Eigen::Index k = 0; k < fields; ++k) {
    const auto& c = coefficients[static_cast<std::size_t>(k)];
    if (c.rows() != w || c.cols() != w) throw ConfigError("coefficient array does not match the cutoff");
    for (int m1 = 0; m1 <= cutoff; ++m1) {
      for (int m2 = -cutoff; m2 <= cutoff; ++m2) {
        Complex d = c(cutoff + m1, cutoff + m2);
        if (m1 > 0) d += std::conj(c(cutoff - m1, cutoff - m2));
        stacked(cutoff + m2, k * h + m1) = d;
      }
    }
  }
  const Eigen::MatrixXcd e1 = axis_phases(points.row(0), cutoff).rightCols(h);
  const Eigen::MatrixXcd e2 = axis_phases(points.row(1), cutoff);
  const Eigen::MatrixXcd b = e2 * stacked;
  for (Eigen::Index k = 0; k < fields; ++k) {
    out.col(k) = (e1.cwiseProduct(b.middleCols(k * h, h))).real().rowwise().sum();
  }
  return out;
}

}  // namespace vortex::modesums
