#pragma once

// Fourier sums over point clouds, evaluated as dense products of per-axis phase
// tables. With E_a(j, m) = e^{i m x_a(j)} for |m| <= M,
//
//   sum_j w_j e^{-i m.X_j}        = (E_1^H diag(w) conj(E_2))(m1, m2)
//   sum_m C(m) e^{i m.X_j}        = row sums of E_1 .* (E_2 C^T)
//
// so both directions cost O(N M^2) and run through the BLAS-3 kernels.
// Square arrays are indexed (m1 + M, m2 + M).

#include <Eigen/Core>
#include <vector>

namespace vortex::modesums {

/// N x (2M + 1) table of e^{i m x_j}, column m + M.
Eigen::MatrixXcd axis_phases(const Eigen::Ref<const Eigen::RowVectorXd>& x, int cutoff);

/// S(m) = sum_j w_j e^{-i m.X_j} on the square |m1|, |m2| <= M.
Eigen::MatrixXcd weighted_mode_sums(const Eigen::Ref<const Eigen::Matrix2Xd>& points, const Eigen::VectorXd& weights,
                                    int cutoff);

/// Real parts of sum_m C_k(m) e^{i m.X_j}; column k of the result is field k.
Eigen::MatrixXd synthesize(const Eigen::Ref<const Eigen::Matrix2Xd>& points,
                           const std::vector<Eigen::MatrixXcd>& coefficients, int cutoff);

}  // namespace vortex::modesums
