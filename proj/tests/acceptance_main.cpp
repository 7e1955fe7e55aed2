// Acceptance suite: runs every shipping criterion at its pinned tolerance and
// prints one PASS/FAIL line each. Exit status is the number of failures.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "wmmf/dispatch.hpp"
#include "wmmf/harness.hpp"

using namespace wmmf;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %2d. %s — %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const auto start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

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

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// --- 1. allocator vs oracle on the exhaustive 0/1 sweep ---------------------
void criterion_allocator_oracle() {
  double t0 = now_seconds();
  const double caps[3] = {1.0, 2.0, 1.5};
  struct Block {
    std::size_t links, routes;
    int mask;
  };
  std::vector<Block> blocks;
  for (std::size_t L = 2; L <= 3; ++L)
    for (std::size_t R = 2; R <= 4; ++R)
      for (int mask = 0; mask < (1 << (L * R)); ++mask) blocks.push_back({L, R, mask});

  std::atomic<std::uint64_t> instances{0}, mismatches{0};
  parallel_for(blocks.size(), 8, [&](std::size_t bi) {
    const auto [L, R, mask] = blocks[bi];
    NetworkTopology t;
    t.num_links = L;
    t.num_routes = R;
    t.capacity.assign(caps, caps + L);
    t.weight.assign(R, 1.0);
    t.incidence.resize(L * R);
    for (std::size_t i = 0; i < L * R; ++i) t.incidence[i] = (mask >> i) & 1;
    if (!validate_topology(t).empty()) return;
    std::uint64_t local_n = 0, local_bad = 0;
    std::vector<std::int64_t> z(R);
    const int zmax = 1 << (2 * static_cast<int>(R));
    const int wmax = 1 << static_cast<int>(R);
    for (int wc = 0; wc < wmax; ++wc) {
      NetworkTopology tw = t;
      for (std::size_t r = 0; r < R; ++r) tw.weight[r] = ((wc >> r) & 1) ? 2.0 : 1.0;
      ValidatedTopology vw(tw);
      for (int zc = 0; zc < zmax; ++zc) {
        for (std::size_t r = 0; r < R; ++r) z[r] = (zc >> (2 * r)) & 3;
        auto fast = wmmf_allocate(vw, z);
        auto ref = oracle_allocate(vw, z);
        ++local_n;
        bool ok = fast.empty_system() == ref.empty_system();
        if (ok && !fast.empty_system())
          ok = std::abs(fast.min_weighted_rate - ref.min_weighted_rate) <= 1e-9;
        for (std::size_t r = 0; ok && r < R; ++r)
          ok = std::abs(fast.route_total[r] - ref.route_total[r]) <= 1e-9;
        if (!ok) ++local_bad;
      }
    }
    instances += local_n;
    mismatches += local_bad;
  });
  double dt = now_seconds() - t0;
  std::ostringstream d;
  d << instances.load() << " instances, " << mismatches.load() << " mismatches, " << dt << " s";
  report(1, "allocator matches the hierarchy oracle on the exhaustive sweep",
         mismatches.load() == 0 && dt < 120.0, d.str());
}

// --- 2. feasibility invariant ------------------------------------------------
void criterion_feasibility() {
  RandomStream rng(424242);
  std::uint64_t violations = 0;
  for (int it = 0; it < 10000; ++it) {
    std::size_t L = 1 + rng.next_u64() % 5;
    std::size_t R = 1 + rng.next_u64() % 6;
    NetworkTopology t;
    t.num_links = L;
    t.num_routes = R;
    t.capacity.resize(L);
    t.weight.resize(R);
    t.incidence.resize(L * R);
    for (auto& c : t.capacity) c = 0.5 + rng.uniform01() * 2.0;
    for (auto& w : t.weight) w = 1.0 + double(rng.next_u64() % 3);
    double choices[3] = {0.0, 0.5, 1.0};
    for (auto& a : t.incidence) a = choices[rng.next_u64() % 3];
    if (!validate_topology(t).empty()) continue;
    ValidatedTopology v(t);
    std::vector<std::int64_t> z(R);
    for (auto& c : z) c = static_cast<std::int64_t>(rng.next_u64() % 11);
    auto alloc = wmmf_allocate(v, z);
    if (!check_feasible(t, alloc, 1e-9)) ++violations;
  }
  // every event of seeded simulations, rechecked from the logged snapshots
  ValidatedTopology topo(
      NetworkTopology::make({{1, 1, 0}, {1, 0, 1}}, {1.0, 1.5}, {1.0, 2.0, 1.0}));
  TrafficSpec traffic;
  for (int r = 0; r < 3; ++r) {
    traffic.interarrival.push_back(Exponential{4.0});
    traffic.service.push_back(Exponential{1.0});
  }
  std::uint64_t events = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    StreamSet streams(1000 + seed, 0, 3);
    InitialCondition init;
    init.residuals = {{1.0, 0.4}, {0.7}, {}};
    NetworkState st = init_state(topo, traffic, init, streams);
    RunOptions opt;
    opt.horizon = 500.0;
    auto res = run(topo, traffic, wmmf_policy(), std::move(st), opt, streams);
    for (const auto& ev : res.trajectory.events) {
      ++events;
      if (!check_feasible(topo.get(), ev.route_total, 1e-9)) ++violations;
    }
  }
  std::ostringstream d;
  d << "10^4 random instances + " << events << " simulated events, " << violations
    << " violations";
  report(2, "capacity constraint holds at 1e-9 everywhere", violations == 0, d.str());
}

// --- 3/4. processor-sharing reduction and insensitivity ----------------------
PsBenchReport criterion_ps() {
  double t0 = now_seconds();
  auto exp05 = ps_benchmark(Exponential{1.0}, 0.5, 1e5, 20, 90210, 4);
  auto exp08 = ps_benchmark(Exponential{1.0}, 0.8, 1e5, 20, 90211, 4);
  double dt = now_seconds() - t0;
  bool ok = exp05.relative_error <= 0.05 && exp08.relative_error <= 0.08 && dt < 300.0;
  std::ostringstream d;
  d << "rho=0.5: " << exp05.estimate << " (err " << exp05.relative_error << "), rho=0.8: "
    << exp08.estimate << " (err " << exp08.relative_error << "), " << dt << " s";
  report(3, "single-link PS matches rho/(1-rho) within 5%/8%", ok, d.str());
  return exp05;
}

void criterion_insensitivity(const PsBenchReport& exp05) {
  // Pareto with shape 3 scaled to unit mean at the same load
  auto par = ps_benchmark(Pareto{3.0, 2.0 / 3.0}, 0.5, 1e5, 20, 90212, 4);
  bool overlap = exp05.ci_lo <= par.ci_hi && par.ci_lo <= exp05.ci_hi;
  std::ostringstream d;
  d << "exponential [" << exp05.ci_lo << ", " << exp05.ci_hi << "] vs pareto(3) [" << par.ci_lo
    << ", " << par.ci_hi << "]";
  report(4, "PS mean count is insensitive to the service law", overlap, d.str());
}

// --- 5. original-documents translation identity ------------------------------
void criterion_decomposition() {
  auto topo = single_link();
  auto traffic = mm1_traffic(0.5);
  std::uint64_t checked = 0, failures = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    StreamSet streams(7000 + seed, 0, 1);
    RandomStream init_draws(combine_seed({7000 + seed, 1}));
    InitialCondition init;
    init.residuals.resize(1);
    auto docs = 1 + init_draws.next_u64() % 8;
    for (std::uint64_t k = 0; k < docs; ++k)
      init.residuals[0].push_back(sample(traffic.service[0], init_draws));
    std::vector<double> initial_residuals = init.residuals[0];
    NetworkState st = init_state(topo, traffic, init, streams);
    RunOptions opt;
    opt.horizon = 40.0;
    for (int i = 1; i <= 10; ++i) opt.sample_times.push_back(4.0 * i);
    opt.record_sample_states = true;
    auto res = run(topo, traffic, wmmf_policy(), std::move(st), opt, streams);
    for (const auto& snap : res.trajectory.sample_states) {
      double delta = snap.cumulative_service[0];
      // predicted multiset of original residuals: {s - Delta : s > Delta}
      std::vector<double> predicted;
      for (double s : initial_residuals)
        if (s - delta > kResidualTol) predicted.push_back(s - delta);
      std::vector<double> actual;
      for (const auto& doc : snap.documents[0])
        if (doc.origin == DocumentOrigin::original) actual.push_back(doc.residual);
      std::sort(predicted.begin(), predicted.end());
      std::sort(actual.begin(), actual.end());
      ++checked;
      if (predicted.size() != actual.size()) {
        ++failures;
        continue;
      }
      for (std::size_t i = 0; i < actual.size(); ++i)
        if (std::abs(predicted[i] - actual[i]) > 1e-9) {
          ++failures;
          break;
        }
    }
  }
  std::ostringstream d;
  d << checked << " sampled epochs over 100 seeded runs, " << failures << " mismatches";
  report(5, "original residuals equal initial minus Delta_r exactly", failures == 0, d.str());
}

// --- 6. kernel identities -----------------------------------------------------
void criterion_kernel() {
  bool ok = true;
  std::ostringstream d;
  for (int b = 2; b <= 10; ++b) {
    RandomStream rng(combine_seed({0xacceULL, static_cast<std::uint64_t>(b)}));
    auto rep = kernel_checks(b, rng, {}, 1000);
    if (!rep.ok()) {
      ok = false;
      d << "b=" << b << " failed " << rep.failures.front().name << "; ";
    }
  }
  if (ok) d << "b in {2..10}: mass, mean 14/(9b), derivative and tail-ratio bounds hold";
  report(6, "kernel suite", ok, d.str());
}

// --- 7. ledger suite (admissibility of the pinned parameter point) -----------
void criterion_ledger() {
  LyapunovParams p;
  p.b = 8;
  p.a = 0.05;
  p.gamma = 0.02;
  p.delta1 = 0.5;
  p.N = 20;  // smallest integer with N*a >= 1
  p.beta = 0.5;
  auto topo = single_link();
  auto traffic = mm1_traffic(0.5);  // Exponential(1) service; eps7 from the margin
  auto ctx = make_context(topo, traffic, p);
  auto rep = gamma_checks(ctx);
  const auto& r = rep.routes[0];
  std::ostringstream d;
  d << "slope condition: " << (r.slope_ok ? "holds" : "violated")
    << "; normalizer integral: " << r.integral_lower << " vs bound " << r.bound
    << " (C2=" << ctx.params.C2 << ", eps7=" << ctx.params.eps7 << ")";
  report(7, "Gamma admissibility at b=8, a=0.05, gamma=0.02, delta1=0.5", rep.all_ok(), d.str());
}

// --- 8. smoothed-density continuity ------------------------------------------
void criterion_continuity() {
  RandomStream rng(31415);
  std::uint64_t violations = 0;
  const int b = 2;
  for (int it = 0; it < 1000; ++it) {
    NetworkState st;
    st.documents.resize(1);
    auto n = 1 + rng.next_u64() % 10;
    for (std::uint64_t k = 0; k < n; ++k) {
      double s = 0.05 + rng.uniform01() * 5.0;
      st.documents[0].push_back({s, s, DocumentOrigin::original, 0.0});
    }
    st.residual_interarrival = {1.0};
    st.cumulative_service = {0.0};
    st.arrivals = {0};
    st.departures = {0};
    st.initial_count = {static_cast<std::int64_t>(n)};
    double eps = 1e-4 + rng.uniform01() * 0.99;
    auto pert = st;
    auto idx = rng.next_u64() % n;
    pert.documents[0][idx].residual += eps * (rng.uniform01() < 0.5 ? 1.0 : -1.0);
    if (pert.documents[0][idx].residual <= 0) continue;
    for (double s = 0.03125; s <= 6.0; s += 0.03125) {
      double dz = std::abs(z_star(pert, 0, s, b) - z_star(st, 0, s, b));
      if (dz > double(b) * double(b) * eps * (1.0 + 1e-9)) {
        ++violations;
        break;
      }
    }
  }
  std::ostringstream d;
  d << "1000 perturbation pairs on the 1/(4b^3) grid, " << violations << " violations";
  report(8, "|z*'(s) - z*(s)| <= b^2 eps under residual perturbations", violations == 0,
         d.str());
}

// --- 9. drift directionality ---------------------------------------------------
void criterion_drift() {
  double t0 = now_seconds();
  auto topo = single_link();
  auto traffic = mm1_traffic(0.5);
  auto ctx = make_context(topo, traffic, desk_params());
  std::vector<NetworkState> states;
  std::vector<std::size_t> sizes = {50, 100, 200};
  for (std::size_t i = 0; i < sizes.size(); ++i)
    states.push_back(make_drift_initial_state(topo, traffic, 0, sizes[i], 20240901, i));
  auto rep = estimate_drift(topo, traffic, ctx, states, 200, 20240901, 4);
  double dt = now_seconds() - t0;
  const auto& big = rep.states[2];
  bool ok = big.mean_diff < 0.0 && big.ci_hi < 0.0 && dt < 600.0;
  std::ostringstream d;
  d << "z=200: diff " << big.mean_diff << " [" << big.ci_lo << ", " << big.ci_hi
    << "], z=100: " << rep.states[1].mean_diff << ", z=50: " << rep.states[0].mean_diff << ", "
    << dt << " s";
  report(9, "norm drift over N^3 is negative with CI excluding 0 at z=200", ok, d.str());
}

// --- 10. stability contrast ----------------------------------------------------
void criterion_stability() {
  double t0 = now_seconds();
  auto topo = single_link();
  auto sub = stability_experiment(topo, mm1_traffic(0.5), 4000.0, 12, 555, 150, 4);
  auto super = stability_experiment(topo, mm1_traffic(1.5), 2000.0, 12, 556, 150, 4);
  double dt = now_seconds() - t0;
  bool ok = sub.slope_ci_lo <= 0.0 && sub.slope_ci_hi >= 0.0 && super.slope_ci_lo > 0.0 &&
            super.slope > 0.0 && dt < 300.0;
  std::ostringstream d;
  d << "rho=0.5 slope [" << sub.slope_ci_lo << ", " << sub.slope_ci_hi << "], rho=1.5 slope ["
    << super.slope_ci_lo << ", " << super.slope_ci_hi << "], " << dt << " s";
  report(10, "subcritical slope straddles 0; supercritical slope is positive", ok, d.str());
}

// --- 11. event-set decay ---------------------------------------------------------
void criterion_eventset() {
  auto topo = single_link();
  auto traffic = mm1_traffic(0.5);
  auto ctx = make_context(topo, traffic, desk_params());
  auto rep = estimate_eventset_prob(topo, traffic, ctx, EventSetConfig{}, {100.0, 10000.0}, 100,
                                    777, 4);
  const auto& lo = rep.points[0];
  const auto& hi = rep.points[1];
  bool both_zero = lo.complement_freq == 0.0 && hi.complement_freq == 0.0;
  bool separated = hi.ci_hi < lo.ci_lo;
  std::ostringstream d;
  d << "P(complement) t=100: " << lo.complement_freq << " [" << lo.ci_lo << ", " << lo.ci_hi
    << "], t=10^4: " << hi.complement_freq << " [" << hi.ci_lo << ", " << hi.ci_hi << "]";
  report(11, "event-set complement frequency decays from t=10^2 to t=10^4",
         both_zero || separated, d.str());
}

// --- 12. artifact determinism ----------------------------------------------------
void criterion_determinism() {
  ordered_json base = ordered_json::parse(R"({
    "schema_version": 1,
    "seed": 31337,
    "replications": 16,
    "horizon": 64.0,
    "topology": {"capacities": [1.0], "weights": [1.0], "incidence": [[1.0]]},
    "traffic": {"routes": [
      {"interarrival": {"family": "exponential", "mean": 2.0},
       "service": {"family": "exponential", "mean": 1.0}}]},
    "experiment": {"kind": "drift", "initial_documents": [20, 60], "route": 0}
  })");
  auto cfg = parse_config(base);
  validate_config(cfg);
  cfg.quiet = true;

  auto dir1 = fs::temp_directory_path() / "wmmf_acc_det1";
  auto dir2 = fs::temp_directory_path() / "wmmf_acc_det2";
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  cfg.out_dir = dir1.string();
  cfg.parallel = 1;
  int rc1 = dispatch_guarded(cfg);
  cfg.out_dir = dir2.string();
  cfg.parallel = 6;  // degree must not change any result byte
  int rc2 = dispatch_guarded(cfg);
  bool ok = rc1 == kExitOk && rc2 == kExitOk;
  for (const char* name : {"drift.csv", "drift.json"})
    ok = ok && slurp(dir1 / name) == slurp(dir2 / name);
  // config echoes agree except for the execution metadata they record
  auto e1 = ordered_json::parse(slurp(dir1 / "effective_config.json"));
  auto e2 = ordered_json::parse(slurp(dir2 / "effective_config.json"));
  e1["parallel"] = e2["parallel"] = 0;
  e1["output"]["dir"] = e2["output"]["dir"] = "";
  ok = ok && e1 == e2;

  auto dir3 = fs::temp_directory_path() / "wmmf_acc_det3";
  fs::remove_all(dir3);
  cfg.out_dir = dir3.string();
  int rc3 = dispatch_guarded(cfg);
  ok = ok && rc3 == kExitOk && slurp(dir2 / "drift.csv") == slurp(dir3 / "drift.csv") &&
       slurp(dir2 / "drift.json") == slurp(dir3 / "drift.json");
  report(12, "artifacts are byte-identical across reruns and thread counts", ok,
         ok ? "drift artifacts identical at parallel degrees 1 and 6 and across reruns"
            : "byte mismatch");
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  criterion_allocator_oracle();
  criterion_feasibility();
  PsBenchReport exp05 = criterion_ps();
  criterion_insensitivity(exp05);
  criterion_decomposition();
  criterion_kernel();
  criterion_ledger();
  criterion_continuity();
  criterion_drift();
  criterion_stability();
  criterion_eventset();
  criterion_determinism();
  std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
