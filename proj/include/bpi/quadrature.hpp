#pragma once

#include <cmath>

#include "bpi/errors.hpp"

namespace bpi {

namespace detail {

template <class F>
double simpson_step(F& f, double a, double fa, double m, double fm, double b, double fb, double whole,
                    double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double refined = left + right;
  if (!std::isfinite(refined)) return refined;
  const double diff = refined - whole;
  // Relative floor keeps large partial integrals from chasing round-off.
  const double eff_tol = std::fmax(tol, 1e-13 * std::fabs(refined));
  if (std::fabs(diff) <= 15.0 * eff_tol) return refined + diff / 15.0;
  if (depth <= 0) throw QuadratureError("adaptive Simpson: tolerance not met at maximum depth");
  return simpson_step(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b] (b < a gives the signed
/// integral) with absolute tolerance `tol`. Non-finite values propagate
/// without refinement; QuadratureError when max_depth is exhausted.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol, int max_depth = 40) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  if (!std::isfinite(whole)) return whole;
  return detail::simpson_step(f, a, fa, m, fm, b, fb, whole, tol, max_depth);
}

}  // namespace bpi
