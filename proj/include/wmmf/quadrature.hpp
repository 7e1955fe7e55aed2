#ifndef WMMF_QUADRATURE_HPP
#define WMMF_QUADRATURE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace wmmf {

struct QuadratureFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

template <typename F>
double adaptive_simpson_rec(const F& f, double a, double b, double fa, double fm, double fb,
                            double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol || b - a < 1e-14) return left + right + delta / 15.0;
  if (depth <= 0) throw QuadratureFailure("adaptive_simpson: tolerance not met");
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson with absolute tolerance.
template <typename F>
double adaptive_simpson(const F& f, double a, double b, double abs_tol = 1e-10,
                        int max_depth = 48) {
  if (!(b > a)) return 0.0;
  double m = 0.5 * (a + b);
  double fa = f(a), fm = f(m), fb = f(b);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, abs_tol, max_depth);
}

// Integrate over [a, b] splitting at interior breakpoints (integrand kinks).
template <typename F>
double integrate_with_breakpoints(const F& f, double a, double b, std::vector<double> pts,
                                  double abs_tol = 1e-10) {
  if (!(b > a)) return 0.0;
  pts.push_back(a);
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  double total = 0.0;
  double prev = a;
  for (double p : pts) {
    if (p <= a || p > b) {
      continue;
    }
    total += adaptive_simpson(f, prev, p, abs_tol);
    prev = p;
  }
  if (prev < b) total += adaptive_simpson(f, prev, b, abs_tol);
  return total;
}

}  // namespace wmmf

#endif  // WMMF_QUADRATURE_HPP
