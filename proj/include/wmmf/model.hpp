#ifndef WMMF_MODEL_HPP
#define WMMF_MODEL_HPP

#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wmmf/distributions.hpp"

namespace wmmf {

struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Static network description: links with capacities, routes with weights, and
// a nonnegative incidence matrix coupling route totals to link constraints.
// Entries may exceed 1; only nonnegativity is required.
struct NetworkTopology {
  std::size_t num_links = 0;
  std::size_t num_routes = 0;
  std::vector<double> incidence;  // row-major, [link * num_routes + route]
  std::vector<double> capacity;   // per link, > 0
  std::vector<double> weight;     // per route, > 0

  double a(std::size_t l, std::size_t r) const { return incidence[l * num_routes + r]; }
  double& a(std::size_t l, std::size_t r) { return incidence[l * num_routes + r]; }

  static NetworkTopology make(std::vector<std::vector<double>> rows, std::vector<double> cap,
                              std::vector<double> w) {
    NetworkTopology t;
    t.num_links = rows.size();
    t.num_routes = rows.empty() ? w.size() : rows.front().size();
    t.capacity = std::move(cap);
    t.weight = std::move(w);
    t.incidence.reserve(t.num_links * t.num_routes);
    for (const auto& row : rows) {
      if (row.size() != t.num_routes) throw DimensionMismatch("ragged incidence matrix");
      t.incidence.insert(t.incidence.end(), row.begin(), row.end());
    }
    return t;
  }
};

enum class TopologyViolationKind {
  zero_capacity,
  zero_weight,
  negative_incidence,
  disconnected_route,
  dimension_mismatch,
};

struct TopologyViolation {
  TopologyViolationKind kind;
  std::size_t link = 0;
  std::size_t route = 0;

  std::string describe() const {
    std::ostringstream os;
    switch (kind) {
      case TopologyViolationKind::zero_capacity:
        os << "ZeroCapacity(link " << link << ")";
        break;
      case TopologyViolationKind::zero_weight:
        os << "ZeroWeight(route " << route << ")";
        break;
      case TopologyViolationKind::negative_incidence:
        os << "NegativeIncidence(link " << link << ", route " << route << ")";
        break;
      case TopologyViolationKind::disconnected_route:
        os << "DisconnectedRoute(route " << route << ")";
        break;
      case TopologyViolationKind::dimension_mismatch:
        os << "DimensionMismatch";
        break;
    }
    return os.str();
  }
};

// Structural validation. Routes that cross no link are rejected here so the
// allocator stays total.
inline std::vector<TopologyViolation> validate_topology(const NetworkTopology& t) {
  std::vector<TopologyViolation> out;
  if (t.incidence.size() != t.num_links * t.num_routes || t.capacity.size() != t.num_links ||
      t.weight.size() != t.num_routes) {
    out.push_back({TopologyViolationKind::dimension_mismatch, 0, 0});
    return out;
  }
  for (std::size_t l = 0; l < t.num_links; ++l)
    if (!(t.capacity[l] > 0)) out.push_back({TopologyViolationKind::zero_capacity, l, 0});
  for (std::size_t r = 0; r < t.num_routes; ++r)
    if (!(t.weight[r] > 0)) out.push_back({TopologyViolationKind::zero_weight, 0, r});
  for (std::size_t l = 0; l < t.num_links; ++l)
    for (std::size_t r = 0; r < t.num_routes; ++r)
      if (t.a(l, r) < 0) out.push_back({TopologyViolationKind::negative_incidence, l, r});
  for (std::size_t r = 0; r < t.num_routes; ++r) {
    bool connected = false;
    for (std::size_t l = 0; l < t.num_links; ++l)
      if (t.a(l, r) > 0) {
        connected = true;
        break;
      }
    if (!connected) out.push_back({TopologyViolationKind::disconnected_route, 0, r});
  }
  return out;
}

struct InvalidTopology : std::invalid_argument {
  explicit InvalidTopology(const std::vector<TopologyViolation>& vs)
      : std::invalid_argument(format(vs)), violations(vs) {}
  std::vector<TopologyViolation> violations;

  static std::string format(const std::vector<TopologyViolation>& vs) {
    std::string s = "invalid topology:";
    for (const auto& v : vs) s += " " + v.describe();
    return s;
  }
};

// Witness that validation passed. Immutable afterwards; safe to share across
// threads.
class ValidatedTopology {
 public:
  explicit ValidatedTopology(NetworkTopology t) : t_(std::move(t)) {
    auto vs = validate_topology(t_);
    if (!vs.empty()) throw InvalidTopology(vs);
  }

  const NetworkTopology& get() const { return t_; }
  std::size_t num_links() const { return t_.num_links; }
  std::size_t num_routes() const { return t_.num_routes; }
  double a(std::size_t l, std::size_t r) const { return t_.a(l, r); }
  double capacity(std::size_t l) const { return t_.capacity[l]; }
  double weight(std::size_t r) const { return t_.weight[r]; }

 private:
  NetworkTopology t_;
};

// Per-route interarrival and service laws. Arrival rate nu_r is the
// reciprocal interarrival mean; rho_r = nu_r * m_r.
struct TrafficSpec {
  std::vector<DistributionSpec> interarrival;
  std::vector<DistributionSpec> service;

  std::size_t num_routes() const { return interarrival.size(); }
  double arrival_rate(std::size_t r) const { return 1.0 / dist_mean(interarrival[r]); }
  double mean_service(std::size_t r) const { return dist_mean(service[r]); }
};

inline std::vector<std::string> validate_traffic(const TrafficSpec& spec) {
  std::vector<std::string> errs;
  if (spec.interarrival.size() != spec.service.size())
    errs.push_back("interarrival/service route counts differ");
  for (std::size_t r = 0; r < spec.interarrival.size(); ++r) {
    for (auto& e : validate_spec(spec.interarrival[r]))
      errs.push_back("route " + std::to_string(r) + " interarrival " + e);
    if (r < spec.service.size())
      for (auto& e : validate_spec(spec.service[r]))
        errs.push_back("route " + std::to_string(r) + " service " + e);
  }
  return errs;
}

// rho_r = nu_r * m_r, the average rate at which work enters route r.
inline std::vector<double> traffic_intensity(const TrafficSpec& spec) {
  std::vector<double> rho(spec.num_routes());
  for (std::size_t r = 0; r < rho.size(); ++r)
    rho[r] = spec.arrival_rate(r) * spec.mean_service(r);
  return rho;
}

// Subcriticality A*rho < c, reported with the per-link slack so callers can
// derive the margin eps7 = min_l sqrt(c_l / (A rho)_l) - 1.
struct SubcriticalityReport {
  std::vector<double> slack;  // c_l - sum_r A[l][r] rho_r
  bool subcritical = false;
  // Largest margin with (1+eps)^2 * A rho <= c; +inf if the network carries
  // no load at all.
  double margin = 0.0;
};

inline SubcriticalityReport check_subcritical(const NetworkTopology& t,
                                              const std::vector<double>& rho) {
  if (rho.size() != t.num_routes || t.capacity.size() != t.num_links)
    throw DimensionMismatch("check_subcritical: dimensions disagree");
  SubcriticalityReport rep;
  rep.slack.resize(t.num_links);
  rep.subcritical = true;
  rep.margin = kInf;
  for (std::size_t l = 0; l < t.num_links; ++l) {
    double load = 0.0;
    for (std::size_t r = 0; r < t.num_routes; ++r) load += t.a(l, r) * rho[r];
    rep.slack[l] = t.capacity[l] - load;
    if (!(rep.slack[l] > 0)) rep.subcritical = false;
    if (load > 0) rep.margin = std::min(rep.margin, std::sqrt(t.capacity[l] / load) - 1.0);
  }
  if (!rep.subcritical) rep.margin = 0.0;
  return rep;
}

// Capacity constraint on route totals: sum_r A[l][r] Lambda_r <= c_l + tol.
inline bool check_feasible(const NetworkTopology& t, const std::vector<double>& route_total,
                           double tolerance) {
  if (route_total.size() != t.num_routes) throw DimensionMismatch("check_feasible: route totals");
  for (std::size_t l = 0; l < t.num_links; ++l) {
    double load = 0.0;
    for (std::size_t r = 0; r < t.num_routes; ++r) load += t.a(l, r) * route_total[r];
    if (load > t.capacity[l] + tolerance) return false;
  }
  return true;
}

}  // namespace wmmf

#endif  // WMMF_MODEL_HPP
