#ifndef GMRF_SMOOTHNESS_HPP_
#define GMRF_SMOOTHNESS_HPP_

#include <cmath>
#include <span>
#include <vector>

#include "gmrf/error.hpp"

namespace gmrf {

/// Symmetric 2x2 coefficient matrix [[xx, xy], [xy, yy]].
struct Sym2 {
  double xx = 1.0;
  double xy = 0.0;
  double yy = 1.0;

  /// Closed-form smallest eigenvalue.
  double min_eigenvalue() const {
    const double mid = 0.5 * (xx + yy);
    const double half_gap = 0.5 * (xx - yy);
    return mid - std::sqrt(half_gap * half_gap + xy * xy);
  }
};

/// Per-pixel coefficient field a(x) of the divergence-form operator
/// sum_ij d_i(a_ij d_j u), with ellipticity margin epsilon.
struct SmoothnessField {
  int width = 0;
  int height = 0;
  std::vector<Sym2> coeffs;
  double epsilon = 1e-3;

  static SmoothnessField uniform(int width, int height, Sym2 a = {}, double epsilon = 1e-3) {
    detail::require(width > 0 && height > 0, "smooth.shape", "field dimensions must be positive");
    return {width, height, std::vector<Sym2>(static_cast<std::size_t>(width) * height, a), epsilon};
  }

  const Sym2& at(int x, int y) const { return coeffs[static_cast<std::size_t>(y) * width + x]; }
};

/// True iff xi^T a xi >= epsilon |xi|^2 for every pixel and every xi, i.e.
/// every coefficient matrix has smallest eigenvalue >= epsilon.
inline bool ellipticity_check(const SmoothnessField& field) {
  for (const Sym2& a : field.coeffs) {
    if (!(a.min_eigenvalue() >= field.epsilon)) return false;
  }
  return true;
}

/// Discrete sum_ij d_i(a_ij d_j u) on the 3x3 stencil. Diagonal terms use
/// the compact form a_{x+1/2}(u_{x+1} - u_x) - a_{x-1/2}(u_x - u_{x-1}) with
/// face coefficients averaged from the two pixels; cross terms use central
/// differences of a_xy * central derivative. Border pixels get 0.
inline std::vector<double> smoothness_residual(const SmoothnessField& field, std::span<const double> u) {
  detail::require(u.size() == static_cast<std::size_t>(field.width) * field.height &&
                      field.coeffs.size() == u.size(),
                  "smooth.size", "field and u differ in size");
  if (!ellipticity_check(field)) {
    throw InvalidArgument("smooth.ellipticity", "coefficient field violates the ellipticity bound");
  }
  const int w = field.width, h = field.height;
  auto U = [&](int x, int y) { return u[static_cast<std::size_t>(y) * w + x]; };
  std::vector<double> out(u.size(), 0.0);
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      const Sym2& c = field.at(x, y);
      const double ax_plus = 0.5 * (c.xx + field.at(x + 1, y).xx);
      const double ax_minus = 0.5 * (c.xx + field.at(x - 1, y).xx);
      const double ay_plus = 0.5 * (c.yy + field.at(x, y + 1).yy);
      const double ay_minus = 0.5 * (c.yy + field.at(x, y - 1).yy);
      const double diag = ax_plus * (U(x + 1, y) - U(x, y)) - ax_minus * (U(x, y) - U(x - 1, y)) +
                          ay_plus * (U(x, y + 1) - U(x, y)) - ay_minus * (U(x, y) - U(x, y - 1));
      // d_x(a_xy d_y u) + d_y(a_xy d_x u)
      auto dy_at = [&](int xx) { return 0.5 * (U(xx, y + 1) - U(xx, y - 1)); };
      auto dx_at = [&](int yy) { return 0.5 * (U(x + 1, yy) - U(x - 1, yy)); };
      const double cross = 0.5 * (field.at(x + 1, y).xy * dy_at(x + 1) - field.at(x - 1, y).xy * dy_at(x - 1)) +
                           0.5 * (field.at(x, y + 1).xy * dx_at(y + 1) - field.at(x, y - 1).xy * dx_at(y - 1));
      out[static_cast<std::size_t>(y) * w + x] = diag + cross;
    }
  }
  return out;
}

}  // namespace gmrf

#endif  // GMRF_SMOOTHNESS_HPP_
