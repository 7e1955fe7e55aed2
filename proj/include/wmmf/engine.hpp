#ifndef WMMF_ENGINE_HPP
#define WMMF_ENGINE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wmmf/allocation.hpp"
#include "wmmf/model.hpp"
#include "wmmf/rng.hpp"

namespace wmmf {

struct NonpositiveResidual : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct EventSkipped : std::logic_error {
  using std::logic_error::logic_error;
};
struct NoDueEvent : std::logic_error {
  using std::logic_error::logic_error;
};
struct NoEvent : std::logic_error {
  using std::logic_error::logic_error;
};
struct InvariantViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Residuals at or below this threshold count as departed; converts
// floating-point dust from event-time division into clean departures.
inline constexpr double kResidualTol = 1e-12;

enum class DocumentOrigin { original, arrived };

struct Document {
  double residual = 0.0;         // remaining work, > 0 while in system
  double initial_service = 0.0;  // residual at entry
  DocumentOrigin origin = DocumentOrigin::original;
  double arrival_time = 0.0;  // 0 for originals
};

// The Markov state x = (z(.), u): per-route residual service times with
// origin tags, residual interarrival times, cumulative per-route service
// Delta_r and arrival/departure counters.
struct NetworkState {
  double time = 0.0;
  std::vector<std::vector<Document>> documents;
  std::vector<double> residual_interarrival;  // u_r, > 0 between events
  std::vector<double> cumulative_service;     // Delta_r(t)
  std::vector<std::int64_t> arrivals;         // A_r(t)
  std::vector<std::int64_t> departures;
  std::vector<std::int64_t> initial_count;

  std::size_t num_routes() const { return documents.size(); }

  std::vector<std::int64_t> counts() const {
    std::vector<std::int64_t> z(documents.size());
    for (std::size_t r = 0; r < documents.size(); ++r)
      z[r] = static_cast<std::int64_t>(documents[r].size());
    return z;
  }

  std::int64_t total_count() const {
    std::int64_t n = 0;
    for (const auto& d : documents) n += static_cast<std::int64_t>(d.size());
    return n;
  }
};

struct InitialCondition {
  std::vector<std::vector<double>> residuals;  // per-route initial residual services
  // Residual interarrival times; empty means draw each from the route's
  // interarrival law (these draws consume the interarrival streams).
  std::vector<double> residual_interarrival;
};

inline NetworkState init_state(const ValidatedTopology& topo, const TrafficSpec& traffic,
                               const InitialCondition& init, StreamSet& streams) {
  const std::size_t R = topo.num_routes();
  if (traffic.num_routes() != R) throw DimensionMismatch("init_state: traffic route count");
  if (init.residuals.size() != R) throw DimensionMismatch("init_state: residual lists");
  if (!init.residual_interarrival.empty() && init.residual_interarrival.size() != R)
    throw DimensionMismatch("init_state: interarrival residuals");

  NetworkState st;
  st.documents.resize(R);
  st.residual_interarrival.resize(R);
  st.cumulative_service.assign(R, 0.0);
  st.arrivals.assign(R, 0);
  st.departures.assign(R, 0);
  st.initial_count.assign(R, 0);
  for (std::size_t r = 0; r < R; ++r) {
    for (double s : init.residuals[r]) {
      if (!(s > 0)) {
        std::ostringstream os;
        os << "NonpositiveResidual: route " << r << " residual " << s;
        throw NonpositiveResidual(os.str());
      }
      st.documents[r].push_back({s, s, DocumentOrigin::original, 0.0});
    }
    st.initial_count[r] = static_cast<std::int64_t>(st.documents[r].size());
    if (init.residual_interarrival.empty()) {
      st.residual_interarrival[r] = sample(traffic.interarrival[r], streams.interarrival(r));
    } else {
      double u = init.residual_interarrival[r];
      if (!(u > 0)) throw NonpositiveResidual("init_state: nonpositive interarrival residual");
      st.residual_interarrival[r] = u;
    }
  }
  return st;
}

enum class EventKind { arrival, departure };

struct PendingEvent {
  double dt = 0.0;
  EventKind kind = EventKind::arrival;
  std::size_t route = 0;
  double residual = 0.0;  // departing document's residual (departures only)
};

// Earliest event under the current allocation. Ties break deterministically:
// departures before arrivals, then lowest route id, then smallest residual.
inline PendingEvent next_event(const NetworkState& st, const Allocation& alloc) {
  std::optional<PendingEvent> best;
  for (std::size_t r = 0; r < st.num_routes(); ++r) {
    if (st.documents[r].empty()) continue;
    double rate = alloc.per_document_rate[r];
    if (!(rate > 0)) continue;  // stalled route; arrivals still make progress
    double min_res = kInf;
    for (const auto& d : st.documents[r]) min_res = std::min(min_res, d.residual);
    double dt = std::max(min_res, 0.0) / rate;
    if (!best || dt < best->dt) best = PendingEvent{dt, EventKind::departure, r, min_res};
  }
  for (std::size_t r = 0; r < st.num_routes(); ++r) {
    double dt = st.residual_interarrival[r];
    if (!best || dt < best->dt) best = PendingEvent{dt, EventKind::arrival, r, 0.0};
  }
  if (!best) throw NoEvent("next_event: no pending event");
  return *best;
}

// Deterministic flow between events: every document on route r loses
// rate_r * dt of residual work, u_r decreases by dt, Delta_r grows by
// rate_r * dt. dt must not cross the next event.
inline void advance(NetworkState& st, double dt, const Allocation& alloc) {
  if (dt < 0) throw std::invalid_argument("advance: negative dt");
  for (std::size_t r = 0; r < st.num_routes(); ++r) {
    double d = alloc.per_document_rate[r] * dt;
    for (const auto& doc : st.documents[r])
      if (doc.residual - d < -kResidualTol)
        throw EventSkipped("advance: departure skipped on route " + std::to_string(r));
    if (st.residual_interarrival[r] - dt < -kResidualTol)
      throw EventSkipped("advance: arrival skipped on route " + std::to_string(r));
  }
  for (std::size_t r = 0; r < st.num_routes(); ++r) {
    double d = alloc.per_document_rate[r] * dt;
    for (auto& doc : st.documents[r]) doc.residual -= d;
    st.residual_interarrival[r] -= dt;
    st.cumulative_service[r] += d;
  }
  st.time += dt;
}

struct AppliedEvent {
  EventKind kind;
  std::size_t route;
  double service_drawn = 0.0;  // arrivals only
};

// State jump at an event instant. Arrivals draw a service time and a fresh
// interarrival; departures remove the exhausted document. The caller
// recomputes the allocation afterwards.
inline AppliedEvent apply_event(NetworkState& st, const PendingEvent& ev,
                                const TrafficSpec& traffic, StreamSet& streams) {
  const std::size_t r = ev.route;
  if (ev.kind == EventKind::arrival) {
    if (st.residual_interarrival[r] > kResidualTol)
      throw NoDueEvent("apply_event: arrival not due");
    double service = sample(traffic.service[r], streams.service(r));
    st.documents[r].push_back({service, service, DocumentOrigin::arrived, st.time});
    st.residual_interarrival[r] = sample(traffic.interarrival[r], streams.interarrival(r));
    st.arrivals[r] += 1;
    return {EventKind::arrival, r, service};
  }
  std::size_t idx = st.documents[r].size();
  double min_res = kInf;
  for (std::size_t i = 0; i < st.documents[r].size(); ++i)
    if (st.documents[r][i].residual < min_res) {
      min_res = st.documents[r][i].residual;
      idx = i;
    }
  if (idx == st.documents[r].size() || min_res > kResidualTol)
    throw NoDueEvent("apply_event: departure not due");
  st.documents[r].erase(st.documents[r].begin() + static_cast<std::ptrdiff_t>(idx));
  st.departures[r] += 1;
  return {EventKind::departure, r, 0.0};
}

// Original/arrived decomposition X = X~ + X^A. Documents are partitioned by
// origin tag; time, u and Delta are carried on both parts (the decomposition
// concerns the service configuration only).
inline std::pair<NetworkState, NetworkState> decompose(const NetworkState& st) {
  NetworkState orig = st, arr = st;
  for (std::size_t r = 0; r < st.num_routes(); ++r) {
    orig.documents[r].clear();
    arr.documents[r].clear();
    for (const auto& d : st.documents[r])
      (d.origin == DocumentOrigin::original ? orig : arr).documents[r].push_back(d);
    orig.arrivals[r] = 0;
    arr.initial_count[r] = 0;
  }
  return {std::move(orig), std::move(arr)};
}

struct EventRecord {
  double time;
  EventKind kind;
  std::size_t route;
  double service_drawn;             // arrivals only
  double lambda_w;                  // post-event, +inf when system empty
  std::vector<double> route_total;  // post-event allocation
  std::vector<std::int64_t> counts;
};

struct SampleRecord {
  double time;
  std::vector<std::int64_t> counts;
};

struct Trajectory {
  std::vector<EventRecord> events;
  std::vector<SampleRecord> samples;
  std::vector<NetworkState> event_states;   // post-event, if recorded
  std::vector<NetworkState> sample_states;  // if recorded
};

struct RunOptions {
  double horizon = 0.0;
  std::vector<double> sample_times;  // strictly increasing, within [0, horizon]
  bool log_events = true;
  bool record_event_states = false;
  bool record_sample_states = false;
  // Online engine invariants: allocation feasibility at every event,
  // conservation counters, and the original-documents translation identity at
  // sample epochs. Violations throw InvariantViolation.
  bool verify_invariants = true;
  double feasibility_tol = 1e-9;
};

struct RunResult {
  NetworkState state;
  Trajectory trajectory;
  std::uint64_t num_events = 0;
  double time_avg_count = 0.0;  // time average of |X(t)| over [0, horizon]
  // Events after which some nonempty route had zero rate (cannot happen for
  // WMMF on a validated topology; nonzero values flag a custom policy stall).
  std::uint64_t stalled_route_events = 0;
};

using AllocationPolicy =
    std::function<Allocation(const ValidatedTopology&, const std::vector<std::int64_t>&)>;

inline AllocationPolicy wmmf_policy() {
  return [](const ValidatedTopology& t, const std::vector<std::int64_t>& z) {
    return wmmf_allocate(t, z);
  };
}

using EventObserver = std::function<void(const NetworkState&, const AppliedEvent&, const Allocation&)>;

namespace detail {

inline void verify_conservation(const NetworkState& st) {
  for (std::size_t r = 0; r < st.num_routes(); ++r) {
    auto expect = st.initial_count[r] + st.arrivals[r] - st.departures[r];
    if (expect != static_cast<std::int64_t>(st.documents[r].size()))
      throw InvariantViolation("conservation violated on route " + std::to_string(r));
  }
}

// Original documents still present satisfy residual = initial - Delta_r
// exactly (up to the absorbing tolerance).
inline void verify_translation_identity(const NetworkState& st, double tol = 1e-9) {
  for (std::size_t r = 0; r < st.num_routes(); ++r)
    for (const auto& d : st.documents[r]) {
      if (d.origin != DocumentOrigin::original) continue;
      double expect = d.initial_service - st.cumulative_service[r];
      if (std::abs(d.residual - expect) > tol)
        throw InvariantViolation("translation identity violated on route " + std::to_string(r));
    }
}

}  // namespace detail

// Event loop: alternate next_event / advance / apply_event with reallocation
// after every event. Fully deterministic given the stream set.
inline RunResult run(const ValidatedTopology& topo, const TrafficSpec& traffic,
                     const AllocationPolicy& policy, NetworkState initial, const RunOptions& opt,
                     StreamSet& streams, const EventObserver& observer = {}) {
  if (!(opt.horizon > 0)) throw std::invalid_argument("run: horizon must be > 0");
  RunResult res;
  res.state = std::move(initial);
  NetworkState& st = res.state;

  Allocation alloc = policy(topo, st.counts());
  auto check_alloc = [&](const Allocation& a) {
    if (opt.verify_invariants && !check_feasible(topo.get(), a, opt.feasibility_tol))
      throw InvariantViolation("infeasible allocation at t=" + std::to_string(st.time));
  };
  check_alloc(alloc);

  std::size_t next_sample = 0;
  while (next_sample < opt.sample_times.size() && opt.sample_times[next_sample] < st.time)
    ++next_sample;

  auto record_sample = [&]() {
    if (opt.verify_invariants) {
      detail::verify_conservation(st);
      detail::verify_translation_identity(st);
    }
    res.trajectory.samples.push_back({st.time, st.counts()});
    if (opt.record_sample_states) res.trajectory.sample_states.push_back(st);
  };
  auto advance_by = [&](double step) {
    if (step <= 0) return;
    res.time_avg_count += static_cast<double>(st.total_count()) * step;
    advance(st, step, alloc);
  };
  // Advance to the sample epochs strictly before `target` (or up to it when
  // inclusive). Samples landing exactly on an event instant are taken after
  // the jump, matching the right-continuity convention. Returns the portion
  // of the advance already consumed, measured in relative time so the
  // accumulated dust stays far below the residual tolerance even when the
  // absolute clock is large.
  auto take_samples = [&](double target, bool inclusive) {
    double consumed = 0.0;
    while (next_sample < opt.sample_times.size() &&
           (inclusive ? opt.sample_times[next_sample] <= target
                      : opt.sample_times[next_sample] < target)) {
      double step = opt.sample_times[next_sample] - st.time;
      consumed += step;
      advance_by(step);
      record_sample();
      ++next_sample;
    }
    return consumed;
  };

  while (st.time < opt.horizon) {
    PendingEvent ev = next_event(st, alloc);
    if (st.time + ev.dt > opt.horizon) {
      double total = opt.horizon - st.time;
      double consumed = take_samples(opt.horizon, true);
      advance_by(total - consumed);
      break;
    }
    double consumed = take_samples(st.time + ev.dt, false);
    advance_by(ev.dt - consumed);
    AppliedEvent applied = apply_event(st, ev, traffic, streams);
    alloc = policy(topo, st.counts());
    check_alloc(alloc);
    if (opt.verify_invariants) detail::verify_conservation(st);
    for (std::size_t r = 0; r < st.num_routes(); ++r)
      if (!st.documents[r].empty() && !(alloc.per_document_rate[r] > 0)) {
        ++res.stalled_route_events;
        break;
      }
    ++res.num_events;
    if (opt.log_events) {
      res.trajectory.events.push_back({st.time, applied.kind, applied.route,
                                       applied.service_drawn, alloc.min_weighted_rate,
                                       alloc.route_total, st.counts()});
      if (opt.record_event_states) res.trajectory.event_states.push_back(st);
    }
    while (next_sample < opt.sample_times.size() &&
           opt.sample_times[next_sample] <= st.time) {
      record_sample();
      ++next_sample;
    }
    if (observer) observer(st, applied, alloc);
  }
  res.time_avg_count /= opt.horizon;
  if (opt.verify_invariants) {
    detail::verify_conservation(st);
    detail::verify_translation_identity(st);
  }
  return res;
}

}  // namespace wmmf

#endif  // WMMF_ENGINE_HPP
