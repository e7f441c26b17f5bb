#pragma once

// Green function and Biot-Savart kernel of the torus [-pi, pi)^2, truncated to the
// Fourier modes 0 < |m| <= M with unit coefficients:
//
//   G(x) = sum_m e^{i m.x} / |m|^2,     K(x) = grad^perp G = (d2 G, -d1 G).
//
// The regularized pair (G_eps, K_eps) agrees with (G, K) outside the torus ball of
// radius eps. Inside, along every ray from the origin G_eps is the polynomial
// a + B u + C u^2 + D u^3 in u = |x|^2 / eps^2 whose value and first two radial
// derivatives match G on the circle |x| = eps, with a = G(0). Value and the
// tangential derivatives then match too, so G_eps is C^2 across the circle, and
// the cap is even with zero gradient at the origin.

#include <Eigen/Core>
#include <array>
#include <optional>
#include <vector>

#include "vortexlab/torus.hpp"

namespace vortex::kernels {

struct KernelSpec {
  int mode_cutoff = 16;
  std::optional<double> epsilon;

  /// Throws ConfigError on M < 1 or eps outside (0, 1).
  void validate() const;
  /// True when eps is below the smallest scale the modes resolve, 2 pi / M.
  bool resolution_warning() const;
};

/// Half-plane listing of the retained modes: m2 > 0, or m2 == 0 and m1 > 0.
/// Each entry stands for the pair {m, -m}.
struct ModeTable {
  int cutoff = 0;
  std::vector<int> m1;
  std::vector<int> m2;
  std::vector<double> inv_norm2;

  std::size_t size() const { return m1.size(); }
  /// G(0) = sum over all retained modes of 1/|m|^2.
  double green_at_origin() const;
};

/// Cached, thread-safe access to the table for cutoff M.
const ModeTable& mode_table(int cutoff);

/// Derivatives of the truncated series at one point, up to third order.
struct GreenJet {
  double value = 0.0;
  Vec2 grad = Vec2::Zero();
  Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
  /// Third derivatives d111, d112, d122, d222.
  std::array<double, 4> third{};

  double third_contract(const Vec2& a, const Vec2& b, const Vec2& c) const;
};

GreenJet green_jet(const Vec2& x, int cutoff, int order = 3);

double green(const Vec2& x, const KernelSpec& spec);
Vec2 biot_savart(const Vec2& x, const KernelSpec& spec);

double green_regularized(const Vec2& x, const KernelSpec& spec);
Vec2 grad_green_regularized(const Vec2& x, const KernelSpec& spec);
Vec2 biot_savart_regularized(const Vec2& x, const KernelSpec& spec);

/// K_eps(x) - K(x); exactly zero outside the cap.
Vec2 biot_savart_cap_correction(const Vec2& x, const KernelSpec& spec);
/// G_eps(x) - G(x); exactly zero outside the cap.
double green_cap_correction(const Vec2& x, const KernelSpec& spec);

}  // namespace vortex::kernels
