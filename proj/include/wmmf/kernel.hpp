#ifndef WMMF_KERNEL_HPP
#define WMMF_KERNEL_HPP

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "wmmf/quadrature.hpp"
#include "wmmf/rng.hpp"

namespace wmmf {

// Smoothing kernel: linear ramp on (0, 1/b], exponential tail beyond. The two
// branches meet continuously at 1/b with value 2b/3; total mass is 1 and the
// mean is 14/(9b).
inline double phi(int b, double s) {
  if (s <= 0) return 0.0;
  double bd = static_cast<double>(b);
  if (s <= 1.0 / bd) return (2.0 / 3.0) * bd * bd * s;
  return (2.0 / 3.0) * bd * std::exp(1.0 - bd * s);
}

// CDF of phi: (1/3) b^2 s^2 on the ramp, 1 - (2/3) e^{1-bs} beyond.
inline double Phi(int b, double s) {
  if (s <= 0) return 0.0;
  double bd = static_cast<double>(b);
  if (s <= 1.0 / bd) return bd * bd * s * s / 3.0;
  return 1.0 - (2.0 / 3.0) * std::exp(1.0 - bd * s);
}

inline double Phi_bar(int b, double s) { return s <= 0 ? 1.0 : 1.0 - Phi(b, s); }

// Analytic derivative away from the branch point.
inline double phi_derivative(int b, double s) {
  if (s <= 0) return 0.0;
  double bd = static_cast<double>(b);
  if (s < 1.0 / bd) return (2.0 / 3.0) * bd * bd;
  return -(2.0 / 3.0) * bd * bd * std::exp(1.0 - bd * s);
}

namespace detail {

// b * integral of t^k e^{-bt} over [u, v]; v may be +inf.
inline double exp_poly_integral(int b, int k, double u, double v) {
  double bd = static_cast<double>(b);
  auto anti = [&](double t) {  // -b*int t^k e^{-bt} evaluated
    double e = std::exp(-bd * t);
    switch (k) {
      case 0:
        return e;
      case 1:
        return e * (t + 1.0 / bd);
      default:
        return e * (t * t + 2.0 * t / bd + 2.0 / (bd * bd));
    }
  };
  double upper = std::isinf(v) ? 0.0 : anti(v);
  return anti(u) - upper;
}

}  // namespace detail

// Closed form for int_{max(lo,0)}^{hi} t^k phi(t) dt, k in {0,1,2}.
inline double kernel_moment_integral(int b, int k, double lo, double hi) {
  if (k < 0 || k > 2) throw std::invalid_argument("kernel_moment_integral: k in {0,1,2}");
  lo = std::max(lo, 0.0);
  if (!(hi > lo)) return 0.0;
  double bd = static_cast<double>(b);
  double knee = 1.0 / bd;
  double total = 0.0;
  if (lo < knee) {
    double u = lo, v = std::min(hi, knee);
    // (2/3) b^2 t^{k+1} integrated
    total += (2.0 / 3.0) * bd * bd * (std::pow(v, k + 2) - std::pow(u, k + 2)) /
             static_cast<double>(k + 2);
  }
  if (hi > knee) {
    double u = std::max(lo, knee);
    total += (2.0 / 3.0) * std::exp(1.0) * detail::exp_poly_integral(b, k, u, hi);
  }
  return total;
}

// int_alpha^beta s^k phi(s - shift) ds in closed form; beta may be +inf.
inline double kernel_shifted_moment(int b, int k, double alpha, double beta, double shift) {
  double lo = alpha - shift;
  double hi = std::isinf(beta) ? beta : beta - shift;
  switch (k) {
    case 0:
      return kernel_moment_integral(b, 0, lo, hi);
    case 1:
      return kernel_moment_integral(b, 1, lo, hi) + shift * kernel_moment_integral(b, 0, lo, hi);
    case 2:
      return kernel_moment_integral(b, 2, lo, hi) +
             2.0 * shift * kernel_moment_integral(b, 1, lo, hi) +
             shift * shift * kernel_moment_integral(b, 0, lo, hi);
    default:
      throw std::invalid_argument("kernel_shifted_moment: k in {0,1,2}");
  }
}

struct KernelCheckFailure {
  std::string name;      // "mass", "mean", "derivative", "ratio"
  double location = 0.0; // offending s (0 for integral checks)
  double value = 0.0;
};

struct KernelCheckReport {
  double mass = 0.0;   // numeric integral of the density
  double mean = 0.0;   // numeric first moment
  std::vector<KernelCheckFailure> failures;
  bool ok() const { return failures.empty(); }
};

// Numeric verification of the kernel identities: unit mass, mean 14/(9b),
// derivative bound b^2, and the exponential-tail ratio phi(s+s')/phi(s) >=
// e^{-b s'}. A custom density can be passed to exercise the failure paths.
inline KernelCheckReport kernel_checks(int b, RandomStream& rng,
                                       const std::function<double(double)>& density = {},
                                       std::size_t grid_points = 1000) {
  auto f = density ? density : [b](double s) { return phi(b, s); };
  KernelCheckReport rep;
  double knee = 1.0 / static_cast<double>(b);
  double tail_end = knee + 45.0 / static_cast<double>(b);  // phi < 1e-18 beyond
  rep.mass = adaptive_simpson(f, 0.0, knee, 1e-11) + adaptive_simpson(f, knee, tail_end, 1e-11);
  auto sf = [&](double s) { return s * f(s); };
  rep.mean = adaptive_simpson(sf, 0.0, knee, 1e-11) + adaptive_simpson(sf, knee, tail_end, 1e-11);

  if (std::abs(rep.mass - 1.0) > 1e-8) rep.failures.push_back({"mass", 0.0, rep.mass});
  double expect_mean = 14.0 / (9.0 * static_cast<double>(b));
  if (std::abs(rep.mean - expect_mean) > 1e-8) rep.failures.push_back({"mean", 0.0, rep.mean});

  double b2 = static_cast<double>(b) * static_cast<double>(b);
  const double h = 1e-7;
  for (std::size_t i = 0; i < grid_points; ++i) {
    double s = rng.uniform01() * (knee + 5.0);
    if (s <= h) continue;
    double slope = (f(s + h) - f(s - h)) / (2.0 * h);
    if (slope > b2 * (1.0 + 1e-6) + 1e-9) {
      rep.failures.push_back({"derivative", s, slope});
      break;
    }
  }
  for (std::size_t i = 0; i < grid_points; ++i) {
    double s = rng.uniform01() * (knee + 5.0) + 1e-9;
    double sp = rng.uniform01() * (knee + 5.0) + 1e-9;
    double lhs = f(s + sp), rhs = f(s) * std::exp(-static_cast<double>(b) * sp);
    if (lhs < rhs * (1.0 - 1e-9)) {
      rep.failures.push_back({"ratio", s, lhs / rhs});
      break;
    }
  }
  return rep;
}

}  // namespace wmmf

#endif  // WMMF_KERNEL_HPP
