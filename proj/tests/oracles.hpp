#pragma once

// Test-side reference computations, kept independent of the library code.

#include <cmath>
#include <complex>
#include <functional>

namespace oracle {

using cd = std::complex<double>;

inline cd simpson_step(const std::function<cd(double)>& f, double a, double b, cd fa, cd fm,
                       cd fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline cd adaptive(const std::function<cd(double)>& f, double a, double b, cd fa, cd fm, cd fb,
                   cd whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const cd flm = f(lm);
  const cd frm = f(rm);
  const cd left = simpson_step(f, a, m, fa, flm, fm);
  const cd right = simpson_step(f, m, b, fm, frm, fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

/// Adaptive Simpson quadrature of a complex integrand on [a, b].
inline cd integrate(const std::function<cd(double)>& f, double a, double b, double tol = 1e-13) {
  const cd fa = f(a);
  const cd fb = f(b);
  const cd fm = f(0.5 * (a + b));
  return adaptive(f, a, b, fa, fm, fb, simpson_step(f, a, b, fa, fm, fb), tol, 50);
}

}  // namespace oracle
