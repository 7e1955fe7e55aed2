#ifndef WMMF_DISTRIBUTIONS_HPP
#define WMMF_DISTRIBUTIONS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "wmmf/rng.hpp"

namespace wmmf {

// Distribution families for interarrival and service times. Moments and tail
// functions are analytic per family; nothing here is estimated.

struct Exponential {
  double mean = 1.0;
};

struct Deterministic {
  double value = 1.0;
};

struct UniformDist {
  double lo = 0.0;
  double hi = 1.0;
};

// Support [scale, inf); all moments of order >= shape diverge.
struct Pareto {
  double shape = 2.0;
  double scale = 1.0;
};

struct Hyperexponential {
  std::vector<double> probs;
  std::vector<double> means;
};

struct Weibull {
  double shape = 1.0;
  double scale = 1.0;
};

using DistributionSpec =
    std::variant<Exponential, Deterministic, UniformDist, Pareto, Hyperexponential, Weibull>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline std::string family_name(const DistributionSpec& spec) {
  struct V {
    std::string operator()(const Exponential&) const { return "Exponential"; }
    std::string operator()(const Deterministic&) const { return "Deterministic"; }
    std::string operator()(const UniformDist&) const { return "Uniform"; }
    std::string operator()(const Pareto&) const { return "Pareto"; }
    std::string operator()(const Hyperexponential&) const { return "Hyperexponential"; }
    std::string operator()(const Weibull&) const { return "Weibull"; }
  };
  return std::visit(V{}, spec);
}

// Parameter-region and finite-mean validation; returns human-readable
// violations, empty when the spec is usable.
inline std::vector<std::string> validate_spec(const DistributionSpec& spec) {
  std::vector<std::string> errs;
  auto bad = [&](const std::string& m) { errs.push_back(family_name(spec) + ": " + m); };
  if (const auto* e = std::get_if<Exponential>(&spec)) {
    if (!(e->mean > 0)) bad("mean must be > 0");
  } else if (const auto* d = std::get_if<Deterministic>(&spec)) {
    if (!(d->value > 0)) bad("value must be > 0");
  } else if (const auto* u = std::get_if<UniformDist>(&spec)) {
    if (!(u->lo >= 0)) bad("lo must be >= 0");
    if (!(u->hi > u->lo)) bad("hi must be > lo");
  } else if (const auto* p = std::get_if<Pareto>(&spec)) {
    if (!(p->shape > 0)) bad("shape must be > 0");
    if (!(p->scale > 0)) bad("scale must be > 0");
    if (p->shape > 0 && !(p->shape > 1)) bad("shape must be > 1 for a finite mean");
  } else if (const auto* h = std::get_if<Hyperexponential>(&spec)) {
    if (h->probs.empty() || h->probs.size() != h->means.size()) {
      bad("probs and means must be nonempty and of equal length");
    } else {
      double sum = std::accumulate(h->probs.begin(), h->probs.end(), 0.0);
      if (std::abs(sum - 1.0) > 1e-12) bad("probs must sum to 1");
      for (double p : h->probs)
        if (!(p > 0)) bad("every branch probability must be > 0");
      for (double m : h->means)
        if (!(m > 0)) bad("every branch mean must be > 0");
    }
  } else if (const auto* w = std::get_if<Weibull>(&spec)) {
    if (!(w->shape > 0)) bad("shape must be > 0");
    if (!(w->scale > 0)) bad("scale must be > 0");
  }
  return errs;
}

// p-th raw moment; +inf marker when divergent.
inline double moment(const DistributionSpec& spec, double p) {
  if (!(p >= 0)) throw std::invalid_argument("moment order must be >= 0");
  struct V {
    double p;
    double operator()(const Exponential& e) const {
      return std::exp(std::lgamma(p + 1.0) + p * std::log(e.mean));
    }
    double operator()(const Deterministic& d) const { return std::pow(d.value, p); }
    double operator()(const UniformDist& u) const {
      return (std::pow(u.hi, p + 1.0) - std::pow(u.lo, p + 1.0)) / ((p + 1.0) * (u.hi - u.lo));
    }
    double operator()(const Pareto& pa) const {
      if (p >= pa.shape) return kInf;
      return pa.shape * std::pow(pa.scale, p) / (pa.shape - p);
    }
    double operator()(const Hyperexponential& h) const {
      double s = 0.0;
      for (std::size_t i = 0; i < h.probs.size(); ++i)
        s += h.probs[i] * std::exp(std::lgamma(p + 1.0) + p * std::log(h.means[i]));
      return s;
    }
    double operator()(const Weibull& w) const {
      return std::pow(w.scale, p) * std::tgamma(1.0 + p / w.shape);
    }
  };
  return std::visit(V{p}, spec);
}

inline double dist_mean(const DistributionSpec& spec) { return moment(spec, 1.0); }

// Complementary CDF, exact per family; 1 for s <= 0.
inline double ccdf(const DistributionSpec& spec, double s) {
  if (s <= 0) return 1.0;
  struct V {
    double s;
    double operator()(const Exponential& e) const { return std::exp(-s / e.mean); }
    double operator()(const Deterministic& d) const { return s < d.value ? 1.0 : 0.0; }
    double operator()(const UniformDist& u) const {
      if (s <= u.lo) return 1.0;
      if (s >= u.hi) return 0.0;
      return (u.hi - s) / (u.hi - u.lo);
    }
    double operator()(const Pareto& p) const {
      if (s < p.scale) return 1.0;
      return std::pow(p.scale / s, p.shape);
    }
    double operator()(const Hyperexponential& h) const {
      double v = 0.0;
      for (std::size_t i = 0; i < h.probs.size(); ++i) v += h.probs[i] * std::exp(-s / h.means[i]);
      return v;
    }
    double operator()(const Weibull& w) const { return std::exp(-std::pow(s / w.scale, w.shape)); }
  };
  return std::visit(V{s}, spec);
}

// Density where it exists (Deterministic has none; callers short-circuit it).
// Right-continuous at support boundaries so quadrature endpoint samples see
// the interior value.
inline double density(const DistributionSpec& spec, double s) {
  if (s < 0) return 0.0;
  struct V {
    double s;
    double operator()(const Exponential& e) const { return std::exp(-s / e.mean) / e.mean; }
    double operator()(const Deterministic&) const {
      throw std::logic_error("Deterministic has no density");
    }
    double operator()(const UniformDist& u) const {
      return (s >= u.lo && s < u.hi) ? 1.0 / (u.hi - u.lo) : 0.0;
    }
    double operator()(const Pareto& p) const {
      if (s < p.scale) return 0.0;
      return p.shape * std::pow(p.scale, p.shape) / std::pow(s, p.shape + 1.0);
    }
    double operator()(const Hyperexponential& h) const {
      double v = 0.0;
      for (std::size_t i = 0; i < h.probs.size(); ++i)
        v += h.probs[i] * std::exp(-s / h.means[i]) / h.means[i];
      return v;
    }
    double operator()(const Weibull& w) const {
      if (s <= 0) return 0.0;  // shape < 1 diverges at the origin
      double t = s / w.scale;
      return w.shape / w.scale * std::pow(t, w.shape - 1.0) * std::exp(-std::pow(t, w.shape));
    }
  };
  return std::visit(V{s}, spec);
}

inline bool has_density(const DistributionSpec& spec) {
  return !std::holds_alternative<Deterministic>(spec);
}

// Points where the density is discontinuous; quadrature splits on these.
inline std::vector<double> density_breakpoints(const DistributionSpec& spec) {
  if (const auto* u = std::get_if<UniformDist>(&spec)) return {u->lo, u->hi};
  if (const auto* p = std::get_if<Pareto>(&spec)) return {p->scale};
  return {};
}

// Upper end of the support; +inf for unbounded families.
inline double support_upper(const DistributionSpec& spec) {
  if (const auto* d = std::get_if<Deterministic>(&spec)) return d->value;
  if (const auto* u = std::get_if<UniformDist>(&spec)) return u->hi;
  return kInf;
}

// Inverse-CDF sampling from a deterministic stream.
inline double sample(const DistributionSpec& spec, RandomStream& rng) {
  struct V {
    RandomStream& rng;
    double operator()(const Exponential& e) const { return -e.mean * std::log(rng.uniform01()); }
    double operator()(const Deterministic& d) const { return d.value; }
    double operator()(const UniformDist& u) const {
      return u.lo + (u.hi - u.lo) * rng.uniform01();
    }
    double operator()(const Pareto& p) const {
      return p.scale * std::pow(rng.uniform01(), -1.0 / p.shape);
    }
    double operator()(const Hyperexponential& h) const {
      double u = rng.uniform01();
      double acc = 0.0;
      std::size_t pick = h.probs.size() - 1;
      for (std::size_t i = 0; i < h.probs.size(); ++i) {
        acc += h.probs[i];
        if (u <= acc) {
          pick = i;
          break;
        }
      }
      return -h.means[pick] * std::log(rng.uniform01());
    }
    double operator()(const Weibull& w) const {
      return w.scale * std::pow(-std::log(rng.uniform01()), 1.0 / w.shape);
    }
  };
  return std::visit(V{rng}, spec);
}

// True iff the (2+delta1)-th moment is finite.
inline bool check_moment_condition(const DistributionSpec& spec, double delta1) {
  if (!(delta1 > 0)) throw std::invalid_argument("delta1 must be > 0");
  return std::isfinite(moment(spec, 2.0 + delta1));
}

// Regularity of the interarrival law for the communication structure of the
// process: unbounded support, and some convolution power with an absolutely
// continuous component. Documented per family.
struct SpreadOutReport {
  bool unbounded_support = false;
  bool convolution_nonsingular = false;
};

inline SpreadOutReport check_spreadout(const DistributionSpec& spec) {
  struct V {
    SpreadOutReport operator()(const Exponential&) const { return {true, true}; }
    SpreadOutReport operator()(const Deterministic&) const { return {false, false}; }
    SpreadOutReport operator()(const UniformDist&) const { return {false, true}; }
    SpreadOutReport operator()(const Pareto&) const { return {true, true}; }
    SpreadOutReport operator()(const Hyperexponential&) const { return {true, true}; }
    SpreadOutReport operator()(const Weibull&) const { return {true, true}; }
  };
  return std::visit(V{}, spec);
}

}  // namespace wmmf

#endif  // WMMF_DISTRIBUTIONS_HPP
