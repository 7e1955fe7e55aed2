#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "wmmf/harness.hpp"

using namespace wmmf;

namespace {

ValidatedTopology single_link() {
  return ValidatedTopology(NetworkTopology::make({{1.0}}, {1.0}, {1.0}));
}

TrafficSpec mm1_traffic(double rho) {
  TrafficSpec t;
  t.interarrival = {Exponential{1.0 / rho}};
  t.service = {Exponential{1.0}};
  return t;
}

LyapunovParams desk_params() {
  LyapunovParams p;
  p.b = 2;
  p.a = 0.25;
  p.gamma = 1.0 / 24.0;
  p.delta1 = 1.0;
  p.N = 4;
  p.beta = 0.5;
  return p;
}

}  // namespace

TEST_CASE("estimate_drift is deterministic and order-free") {
  auto topo = single_link();
  auto traffic = mm1_traffic(0.5);
  auto ctx = make_context(topo, traffic, desk_params());
  std::vector<NetworkState> states = {
      make_drift_initial_state(topo, traffic, 0, 20, 42, 0)};
  auto a = estimate_drift(topo, traffic, ctx, states, 8, 42, 1);
  auto b = estimate_drift(topo, traffic, ctx, states, 8, 42, 1);
  REQUIRE(a.states[0].mean_diff == b.states[0].mean_diff);
  REQUIRE(a.states[0].stderr_ == b.states[0].stderr_);
  // independent of the parallel degree
  auto c = estimate_drift(topo, traffic, ctx, states, 8, 42, 4);
  REQUIRE(a.states[0].mean_diff == c.states[0].mean_diff);
  REQUIRE(a.states[0].ci_lo == c.states[0].ci_lo);
  REQUIRE(a.states[0].replications == 8);
  REQUIRE(a.horizon == 64.0);
}

TEST_CASE("estimate_drift from the empty state is report-only") {
  auto topo = single_link();
  auto traffic = mm1_traffic(0.5);
  auto ctx = make_context(topo, traffic, desk_params());
  StreamSet streams(5, 0, 1);
  InitialCondition empty;
  empty.residuals.resize(1);
  std::vector<NetworkState> states = {init_state(topo, traffic, empty, streams)};
  auto rep = estimate_drift(topo, traffic, ctx, states, 16, 5, 2);
  // possibly positive near the bottom of the state space: reported, not asserted
  REQUIRE(rep.states.size() == 1);
  REQUIRE(std::isfinite(rep.states[0].mean_diff));
  REQUIRE(rep.states[0].ci_hi - rep.states[0].ci_lo ==
          Catch::Approx(2.0 * 1.96 * rep.states[0].stderr_));
}

TEST_CASE("estimate_drift refuses supercritical configurations") {
  auto topo = single_link();
  auto traffic = mm1_traffic(1.5);
  auto ctx = make_context(topo, traffic, desk_params());
  std::vector<NetworkState> states = {
      make_drift_initial_state(topo, traffic, 0, 10, 1, 0)};
  REQUIRE_THROWS_AS(estimate_drift(topo, traffic, ctx, states, 4, 1, 1), SupercriticalConfig);
}

TEST_CASE("drift from a large state is negative with CI excluding zero") {
  auto topo = single_link();
  auto traffic = mm1_traffic(0.5);
  auto ctx = make_context(topo, traffic, desk_params());
  std::vector<NetworkState> states = {
      make_drift_initial_state(topo, traffic, 0, 200, 7, 0)};
  auto rep = estimate_drift(topo, traffic, ctx, states, 60, 7, 4);
  REQUIRE(rep.states[0].mean_diff < 0.0);
  REQUIRE(rep.states[0].ci_hi < 0.0);
}

TEST_CASE("event set indicator: no arrivals puts the path in both sets") {
  auto topo = single_link();
  auto traffic = mm1_traffic(0.5);
  auto ctx = make_context(topo, traffic, desk_params());
  Trajectory empty_traj;
  auto ind = event_set_indicator(empty_traj, traffic, ctx, EventSetConfig{}, 100.0);
  REQUIRE(ind.in_a1);
  REQUIRE(ind.in_a2);
  REQUIRE(ind.violations.empty());
}

TEST_CASE("event set indicator flags a synthetic arrival burst") {
  auto topo = single_link();
  auto traffic = mm1_traffic(0.5);
  auto ctx = make_context(topo, traffic, desk_params());
  const double t = 100.0;
  Trajectory traj;
  // 10 * nu * t arrivals, all with enormous service times: the Phi_bar sums
  // at the top of the grid exceed 2 nu (H*bar t v t^eta)
  auto count = static_cast<std::size_t>(10.0 * ctx.nu[0] * t);
  for (std::size_t k = 0; k < count; ++k)
    traj.events.push_back({t * double(k + 1) / double(count + 1), EventKind::arrival, 0, 1e6,
                           1.0, {1.0}, {1}});
  auto ind = event_set_indicator(traj, traffic, ctx, EventSetConfig{}, t);
  REQUIRE_FALSE(ind.in_a1);
  bool top_grid_violated = false;
  const auto J = static_cast<std::size_t>(2 * 2 * 2 * 5);
  for (const auto& v : ind.violations)
    if (v.which == 1 && v.j == J) top_grid_violated = true;
  REQUIRE(top_grid_violated);
}

TEST_CASE("A1 holds with high frequency on the reference configuration") {
  auto topo = single_link();
  auto traffic = mm1_traffic(0.5);
  auto ctx = make_context(topo, traffic, desk_params());
  int in_a1 = 0;
  const int reps = 100;
  for (int rep = 0; rep < reps; ++rep) {
    StreamSet streams(999, static_cast<std::uint64_t>(rep), 1);
    InitialCondition empty;
    empty.residuals.resize(1);
    NetworkState st = init_state(topo, traffic, empty, streams);
    RunOptions opt;
    opt.horizon = 1000.0;
    auto res = run(topo, traffic, wmmf_policy(), std::move(st), opt, streams);
    auto ind = event_set_indicator(res.trajectory, traffic, ctx, EventSetConfig{}, 1000.0);
    in_a1 += ind.in_a1 ? 1 : 0;
  }
  REQUIRE(in_a1 >= 99);
}

TEST_CASE("event set complement frequency decays between horizons") {
  auto topo = single_link();
  auto traffic = mm1_traffic(0.5);
  auto ctx = make_context(topo, traffic, desk_params());
  auto rep = estimate_eventset_prob(topo, traffic, ctx, EventSetConfig{}, {100.0, 10000.0}, 40,
                                    2024, 4);
  REQUIRE(rep.points.size() == 2);
  bool both_zero = rep.points[0].complement_freq == 0.0 && rep.points[1].complement_freq == 0.0;
  REQUIRE((both_zero || rep.points[1].complement_freq <= rep.points[0].complement_freq));
  // deterministic under reruns and parallelism
  auto rep2 = estimate_eventset_prob(topo, traffic, ctx, EventSetConfig{}, {100.0, 10000.0}, 40,
                                     2024, 1);
  REQUIRE(rep.points[1].complement_freq == rep2.points[1].complement_freq);
}

TEST_CASE("check_rate_bound reports the minimum product behind the admissibility gate") {
  auto topo = single_link();
  auto traffic = mm1_traffic(0.5);
  auto ctx = make_context(topo, traffic, desk_params());
  StreamSet streams(17, 0, 1);
  InitialCondition init;
  init.residuals = {{1.0, 0.5}};
  NetworkState st = init_state(topo, traffic, init, streams);
  RunOptions opt;
  opt.horizon = 50.0;
  opt.record_event_states = true;
  auto res = run(topo, traffic, wmmf_policy(), std::move(st), opt, streams);

  bool admissible = gamma_checks(ctx).all_ok();  // desk params: outside the regime
  auto rep = check_rate_bound(res.trajectory, ctx, admissible, true);
  REQUIRE(rep.skipped == !admissible);
  REQUIRE(rep.epochs_checked > 0);
  REQUIRE(rep.min_product > 0.0);
  REQUIRE(rep.min_product < kInf);

  // empty epochs are excluded from the product
  std::size_t nonempty = 0;
  for (const auto& s : res.trajectory.event_states)
    if (s.total_count() > 0) ++nonempty;
  REQUIRE(rep.epochs_checked == nonempty);

  auto sup = check_rate_bound(res.trajectory, ctx, true, false);
  REQUIRE(sup.skipped);
  REQUIRE(sup.skip_reason.find("Supercritical") != std::string::npos);

  Trajectory no_states;
  no_states.events = res.trajectory.events;
  REQUIRE_THROWS_AS(check_rate_bound(no_states, ctx, true, true), IncompleteLog);
}

TEST_CASE("stability: subcritical slope straddles zero, supercritical grows") {
  auto topo = single_link();
  auto sub = stability_experiment(topo, mm1_traffic(0.5), 4000.0, 10, 99, 100, 4);
  REQUIRE(sub.slope_ci_lo <= 0.0);
  REQUIRE(sub.slope_ci_hi >= 0.0);
  REQUIRE(sub.tail_mean == Catch::Approx(1.0).margin(0.4));

  auto super = stability_experiment(topo, mm1_traffic(1.5), 2000.0, 10, 99, 100, 4);
  REQUIRE(super.slope_ci_lo > 0.0);
  // fluid rate: documents accumulate at nu (rho - 1)/rho = 0.5 per time unit
  REQUIRE(super.slope == Catch::Approx(0.5).margin(0.15));
}

TEST_CASE("pure drain: zero-arrival network empties monotonically") {
  auto topo = single_link();
  TrafficSpec traffic;
  traffic.interarrival = {Deterministic{1e9}};
  traffic.service = {Exponential{1.0}};
  StreamSet streams(3, 0, 1);
  InitialCondition init;
  init.residuals = {{0.7, 1.1, 2.0}};
  init.residual_interarrival = {1e9};
  NetworkState st = init_state(topo, traffic, init, streams);
  RunOptions opt;
  opt.horizon = 100.0;
  opt.sample_times = {0.5, 1.0, 2.0, 3.0, 4.0, 10.0};
  auto res = run(topo, traffic, wmmf_policy(), std::move(st), opt, streams);
  std::int64_t prev = 3;
  for (const auto& s : res.trajectory.samples) {
    REQUIRE(s.counts[0] <= prev);
    prev = s.counts[0];
  }
  REQUIRE(res.state.total_count() == 0);
}

TEST_CASE("ps benchmark matches rho/(1-rho) with insensitivity") {
  auto exp_rep = ps_benchmark(Exponential{1.0}, 0.5, 20000.0, 10, 5, 4);
  REQUIRE(exp_rep.analytic == 1.0);
  REQUIRE(exp_rep.relative_error < 0.1);
  auto par_rep = ps_benchmark(Pareto{3.0, 2.0 / 3.0}, 0.5, 20000.0, 10, 5, 4);
  REQUIRE(par_rep.relative_error < 0.1);
  // overlapping CIs between the two service laws
  REQUIRE(exp_rep.ci_lo <= par_rep.ci_hi);
  REQUIRE(par_rep.ci_lo <= exp_rep.ci_hi);
  REQUIRE_THROWS_AS(ps_benchmark(Exponential{1.0}, 1.2, 100.0, 4, 1, 1),
                    std::invalid_argument);
}
