#ifndef WMMF_ALLOCATION_HPP
#define WMMF_ALLOCATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "wmmf/model.hpp"

namespace wmmf {

struct InstanceTooLarge : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Weighted max-min fair allocation for a document count vector z. A route's
// documents all receive the per-document rate lambda_r; Lambda_r = lambda_r *
// z_r is the route total. min_weighted_rate is min over nonempty routes of
// lambda_r / w_r, reported as +inf for the empty system.
struct Allocation {
  std::vector<double> per_document_rate;  // lambda_r, 0 when z_r == 0
  std::vector<double> route_total;        // Lambda_r = lambda_r * z_r
  double min_weighted_rate = kInf;        // lambda^w
  std::vector<double> frozen_level;       // water-filling level fixing route r (0 if empty)
  std::vector<std::size_t> saturated_links;

  bool empty_system() const { return min_weighted_rate == kInf; }
};

inline bool check_feasible(const NetworkTopology& t, const Allocation& alloc, double tolerance) {
  return check_feasible(t, alloc.route_total, tolerance);
}

namespace detail {
// Relative tolerance for simultaneous link saturation; ties are frozen in the
// same round so the result is independent of link order.
inline constexpr double kLevelTie = 1e-12;
}  // namespace detail

// Progressive filling. Raise a common level t with lambda_r = w_r * t on
// active routes; when a link exhausts, freeze every active route crossing it;
// repeat. Returns the lexicographically maximal representative, which is
// unique for this construction.
inline Allocation wmmf_allocate(const ValidatedTopology& topo,
                                const std::vector<std::int64_t>& z) {
  const NetworkTopology& t = topo.get();
  if (z.size() != t.num_routes) throw DimensionMismatch("wmmf_allocate: z size");
  for (auto c : z)
    if (c < 0) throw std::invalid_argument("wmmf_allocate: negative count");

  const std::size_t L = t.num_links, R = t.num_routes;
  Allocation out;
  out.per_document_rate.assign(R, 0.0);
  out.route_total.assign(R, 0.0);
  out.frozen_level.assign(R, 0.0);

  std::vector<bool> active(R);
  std::size_t num_active = 0;
  for (std::size_t r = 0; r < R; ++r) {
    active[r] = z[r] > 0;
    if (active[r]) ++num_active;
  }
  if (num_active == 0) return out;  // empty system, lambda^w = +inf

  std::vector<bool> saturated(L, false);
  std::vector<double> fixed_load(L), slope(L);
  double first_level = kInf;

  while (num_active > 0) {
    // Recompute frozen contributions from scratch each round; cheap and keeps
    // the saturation levels free of accumulated rounding.
    for (std::size_t l = 0; l < L; ++l) {
      double fixed = 0.0, sl = 0.0;
      for (std::size_t r = 0; r < R; ++r) {
        if (z[r] == 0) continue;
        double coef = t.a(l, r) * t.weight[r] * static_cast<double>(z[r]);
        if (active[r])
          sl += coef;
        else
          fixed += coef * out.frozen_level[r];
      }
      fixed_load[l] = fixed;
      slope[l] = sl;
    }

    double level = kInf;
    for (std::size_t l = 0; l < L; ++l) {
      if (slope[l] <= 0) continue;
      double tl = (t.capacity[l] - fixed_load[l]) / slope[l];
      level = std::min(level, tl);
    }
    // Validation guarantees every active route crosses a capacitated link,
    // so some slope is positive and the level is finite.
    if (!(level < kInf)) throw std::logic_error("wmmf_allocate: no exhausting link");
    level = std::max(level, 0.0);
    first_level = std::min(first_level, level);

    for (std::size_t l = 0; l < L; ++l) {
      if (slope[l] <= 0) continue;
      double tl = (t.capacity[l] - fixed_load[l]) / slope[l];
      if (tl <= level * (1.0 + detail::kLevelTie) + detail::kLevelTie) saturated[l] = true;
    }
    std::size_t frozen_this_round = 0;
    for (std::size_t r = 0; r < R; ++r) {
      if (!active[r]) continue;
      bool hits_saturated = false;
      for (std::size_t l = 0; l < L; ++l)
        if (saturated[l] && t.a(l, r) > 0) {
          hits_saturated = true;
          break;
        }
      if (hits_saturated) {
        active[r] = false;
        out.frozen_level[r] = level;
        out.per_document_rate[r] = t.weight[r] * level;
        ++frozen_this_round;
      }
    }
    if (frozen_this_round == 0) throw std::logic_error("wmmf_allocate: stalled round");
    num_active -= frozen_this_round;
  }

  for (std::size_t r = 0; r < R; ++r)
    out.route_total[r] = out.per_document_rate[r] * static_cast<double>(z[r]);
  out.min_weighted_rate = first_level;
  for (std::size_t l = 0; l < L; ++l)
    if (saturated[l]) out.saturated_links.push_back(l);
  return out;
}

namespace detail {

// Feasibility of assigning per-document rate require[r] to every nonempty
// route: since A >= 0, the cheapest allocation meeting the lower bounds sets
// each rate exactly to its requirement.
inline bool rates_feasible(const NetworkTopology& t, const std::vector<std::int64_t>& z,
                           const std::vector<double>& require) {
  for (std::size_t l = 0; l < t.num_links; ++l) {
    double load = 0.0;
    for (std::size_t r = 0; r < t.num_routes; ++r)
      if (z[r] > 0) load += t.a(l, r) * require[r] * static_cast<double>(z[r]);
    if (load > t.capacity[l]) return false;
  }
  return true;
}

}  // namespace detail

// Reference solver for small instances. Bisects the common weighted level,
// fixes the binding routes (those whose rate cannot be raised above
// w_r*t*(1+1e-9) in any feasible solution) and recurses on the rest.
// Independent of the progressive-filling code path on purpose.
inline Allocation oracle_allocate(const ValidatedTopology& topo,
                                  const std::vector<std::int64_t>& z) {
  const NetworkTopology& t = topo.get();
  if (t.num_links > 6 || t.num_routes > 8)
    throw InstanceTooLarge("oracle_allocate supports <= 6 links and <= 8 routes");
  if (z.size() != t.num_routes) throw DimensionMismatch("oracle_allocate: z size");

  const std::size_t R = t.num_routes;
  Allocation out;
  out.per_document_rate.assign(R, 0.0);
  out.route_total.assign(R, 0.0);
  out.frozen_level.assign(R, 0.0);

  std::vector<bool> free_route(R);
  std::size_t num_free = 0;
  for (std::size_t r = 0; r < R; ++r) {
    free_route[r] = z[r] > 0;
    if (free_route[r]) ++num_free;
  }
  if (num_free == 0) return out;

  double min_slope = kInf, max_cap = 0.0;
  for (std::size_t l = 0; l < t.num_links; ++l) {
    max_cap = std::max(max_cap, t.capacity[l]);
    for (std::size_t r = 0; r < R; ++r)
      if (z[r] > 0 && t.a(l, r) > 0)
        min_slope = std::min(min_slope, t.a(l, r) * t.weight[r] * static_cast<double>(z[r]));
  }
  const double hi_bound = 1.0 + max_cap / min_slope;

  std::vector<double> require(R, 0.0);
  double first_level = kInf;

  while (num_free > 0) {
    auto feasible_at = [&](double level) {
      for (std::size_t r = 0; r < R; ++r)
        if (free_route[r]) require[r] = t.weight[r] * level;
      return detail::rates_feasible(t, z, require);
    };

    double lo = 0.0, hi = hi_bound;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      if (feasible_at(mid))
        lo = mid;
      else
        hi = mid;
    }
    const double level = lo;
    first_level = std::min(first_level, level);

    std::vector<std::size_t> binding;
    for (std::size_t r = 0; r < R; ++r) {
      if (!free_route[r]) continue;
      for (std::size_t q = 0; q < R; ++q)
        if (free_route[q]) require[q] = t.weight[q] * level;
      require[r] = t.weight[r] * level * (1.0 + 1e-9);
      if (!detail::rates_feasible(t, z, require)) binding.push_back(r);
    }
    if (binding.empty()) {
      // All remaining routes sit at a common unconstrained optimum; freeze
      // them together.
      for (std::size_t r = 0; r < R; ++r)
        if (free_route[r]) binding.push_back(r);
    }
    for (std::size_t r : binding) {
      free_route[r] = false;
      out.per_document_rate[r] = t.weight[r] * level;
      out.frozen_level[r] = level;
      --num_free;
    }
    for (std::size_t r = 0; r < R; ++r)
      require[r] = free_route[r] ? 0.0 : out.per_document_rate[r];
  }

  for (std::size_t r = 0; r < R; ++r)
    out.route_total[r] = out.per_document_rate[r] * static_cast<double>(z[r]);
  out.min_weighted_rate = first_level;
  for (std::size_t l = 0; l < t.num_links; ++l) {
    double load = 0.0;
    for (std::size_t r = 0; r < R; ++r) load += t.a(l, r) * out.route_total[r];
    if (load >= t.capacity[l] * (1.0 - 1e-9)) out.saturated_links.push_back(l);
  }
  return out;
}

// Necessary optimality condition for the minimum level: the allocation is
// feasible and every route at the minimum weighted rate crosses a saturated
// link. Saturation is recomputed from the allocation itself so tampered
// inputs are caught.
inline bool bottleneck_certificate(const ValidatedTopology& topo,
                                   const std::vector<std::int64_t>& z, const Allocation& alloc,
                                   double tolerance = 1e-9) {
  const NetworkTopology& t = topo.get();
  if (alloc.route_total.size() != t.num_routes || z.size() != t.num_routes)
    throw DimensionMismatch("bottleneck_certificate: dimensions");
  if (!check_feasible(t, alloc.route_total, tolerance)) return false;

  bool any_nonempty = false;
  double min_level = kInf;
  for (std::size_t r = 0; r < t.num_routes; ++r)
    if (z[r] > 0) {
      any_nonempty = true;
      min_level = std::min(min_level, alloc.per_document_rate[r] / t.weight[r]);
    }
  if (!any_nonempty) return true;  // vacuous

  std::vector<bool> saturated(t.num_links, false);
  for (std::size_t l = 0; l < t.num_links; ++l) {
    double load = 0.0;
    for (std::size_t r = 0; r < t.num_routes; ++r) load += t.a(l, r) * alloc.route_total[r];
    saturated[l] = load >= t.capacity[l] - tolerance * std::max(1.0, t.capacity[l]);
  }
  for (std::size_t r = 0; r < t.num_routes; ++r) {
    if (z[r] == 0) continue;
    double level = alloc.per_document_rate[r] / t.weight[r];
    if (level > min_level + tolerance * std::max(1.0, min_level)) continue;
    bool ok = false;
    for (std::size_t l = 0; l < t.num_links; ++l)
      if (saturated[l] && t.a(l, r) > 0) {
        ok = true;
        break;
      }
    if (!ok) return false;
  }
  return true;
}

}  // namespace wmmf

#endif  // WMMF_ALLOCATION_HPP
