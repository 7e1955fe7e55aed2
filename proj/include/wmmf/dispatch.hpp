#ifndef WMMF_DISPATCH_HPP
#define WMMF_DISPATCH_HPP

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "wmmf/config.hpp"
#include "wmmf/harness.hpp"
#include "wmmf/metric.hpp"
#include "wmmf/report.hpp"

namespace wmmf {

// Exit codes: 0 success, 1 check failures, 2 configuration errors.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigError = 2;

namespace detail {

inline ordered_json param_ledger_json(const LyapunovContext& ctx) {
  ordered_json j;
  j["b"] = ctx.params.b;
  j["a"] = ctx.params.a;
  j["gamma"] = ctx.params.gamma;
  j["delta1"] = ctx.params.delta1;
  j["C1"] = ctx.params.C1;
  j["C2"] = ctx.params.C2;
  j["C3"] = ctx.params.C3;
  j["N"] = ctx.params.N;
  j["beta"] = ctx.params.beta;
  j["eps7"] = ctx.params.eps7;
  j["C1_fit"] = ctx.c1_fit;
  j["M1"] = ctx.m1();
  j["kappa_N"] = ctx.kappa_n();
  ordered_json routes = ordered_json::array();
  for (std::size_t r = 0; r < ctx.conv.size(); ++r) {
    ordered_json rj;
    rj["route"] = r;
    rj["N_H"] = ctx.conv[r].n_h;
    rj["kappa"] = ctx.conv[r].kappa;
    routes.push_back(rj);
  }
  j["routes"] = routes;
  return j;
}

inline ordered_json checks_json(const std::vector<ParamCheck>& checks) {
  ordered_json arr = ordered_json::array();
  for (const auto& c : checks) {
    ordered_json j;
    j["name"] = c.name;
    j["ok"] = c.ok;
    if (!c.detail.empty()) j["detail"] = c.detail;
    arr.push_back(j);
  }
  return arr;
}

inline ordered_json gamma_checks_json(const GammaCheckReport& rep) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : rep.routes) {
    ordered_json j;
    j["route"] = r.route;
    j["slope_ok"] = r.slope_ok;
    if (!r.slope_ok) j["slope_violation_s"] = r.slope_violation_s;
    j["integral_grid"] = r.integral_lower;
    j["integral_with_tail_envelope"] = r.integral_upper;
    j["bound"] = r.bound;
    j["integral_ok"] = r.integral_ok;
    arr.push_back(j);
  }
  return arr;
}

inline std::string event_kind_name(EventKind k) {
  return k == EventKind::arrival ? "arrival" : "departure";
}

// Tabulation sanity: these failing means the numerics are broken, not that
// the parameters sit outside the asymptotic regime.
inline std::vector<ParamCheck> tabulation_checks(const LyapunovContext& ctx) {
  std::vector<ParamCheck> out;
  for (std::size_t r = 0; r < ctx.conv.size(); ++r) {
    const auto& cv = ctx.conv[r];
    std::string tag = "route " + std::to_string(r) + ": ";
    bool monotone = true, nonneg = true;
    for (std::size_t i = 1; i < cv.ccdf.size(); ++i) {
      if (cv.ccdf[i] > cv.ccdf[i - 1] + 1e-9) monotone = false;
      if (cv.density[i] < 0) nonneg = false;
    }
    out.push_back({tag + "H*bar(0) == 1", std::abs(cv.ccdf.front() - 1.0) < 1e-9, ""});
    out.push_back({tag + "H*bar nonincreasing", monotone, ""});
    out.push_back({tag + "h* >= 0", nonneg, ""});
    double trapz = 0.0;
    for (std::size_t i = 0; i + 1 < cv.density.size(); ++i)
      trapz += 0.5 * (cv.density[i] + cv.density[i + 1]) * cv.grid_step;
    // trapezoid tolerance: the kernel kink limits the rule to O(step^2)
    // locally, worst for unsmoothed point-mass services
    out.push_back({tag + "h* mass + tail == 1",
                   std::abs(trapz + cv.ccdf.back() - 1.0) < 1e-3, fmt_g17(trapz + cv.ccdf.back())});
    bool inverse_ok = true;
    double n4 = 1.0 / std::pow(static_cast<double>(ctx.params.N), 4);
    if (cv.n_h < static_cast<double>(ctx.params.N))
      inverse_ok = cv.ccdf_at(cv.n_h) >= n4 * (1.0 - 1e-6);
    out.push_back({tag + "1/N^4 <= H*bar(N_H) when N_H < N", inverse_ok, ""});
  }
  return out;
}

}  // namespace detail

inline int dispatch(const RunConfig& cfg) {
  const std::filesystem::path out(cfg.out_dir);
  std::filesystem::create_directories(out);
  write_json(out / "effective_config.json", effective_config(cfg));

  ValidatedTopology topo(cfg.topology);
  const TrafficSpec& traffic = cfg.traffic;
  const std::string& kind = cfg.experiment.kind;

  if (kind == "validate") {
    LyapunovContext ctx = make_context(topo, traffic, cfg.lyapunov);
    RandomStream rng(combine_seed({cfg.seed, 0x6b65726eULL}));
    auto kernels = kernel_checks(cfg.lyapunov.b, rng);
    auto tab = detail::tabulation_checks(ctx);
    auto ledger = derive_constants(topo, traffic, ctx);
    auto sub = check_subcritical(cfg.topology, traffic_intensity(traffic));

    bool hard_ok = kernels.ok();
    for (const auto& c : tab) hard_ok = hard_ok && c.ok;
    for (const auto& c : ledger.structural) hard_ok = hard_ok && c.ok;

    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["seed"] = cfg.seed;
    j["config"] = replay_config(cfg);
    j["params"] = detail::param_ledger_json(ctx);
    j["subcritical"] = sub.subcritical;
    j["slack"] = sub.slack;
    j["margin"] = sub.margin;
    ordered_json kj;
    kj["ok"] = kernels.ok();
    kj["mass"] = kernels.mass;
    kj["mean"] = kernels.mean;
    ordered_json fails = ordered_json::array();
    for (const auto& f : kernels.failures) {
      ordered_json fj;
      fj["name"] = f.name;
      fj["location"] = f.location;
      fj["value"] = f.value;
      fails.push_back(fj);
    }
    kj["failures"] = fails;
    j["kernel_checks"] = kj;
    j["tabulation_checks"] = detail::checks_json(tab);
    j["structural_checks"] = detail::checks_json(ledger.structural);
    j["regime_checks"] = detail::checks_json(ledger.regime);
    j["gamma_checks"] = detail::gamma_checks_json(ledger.gamma);
    ordered_json consts;
    auto centry = [](const ConstantEntry& e) {
      ordered_json c;
      c["value"] = e.value;
      c["feasible"] = e.feasible;
      if (!e.reason.empty()) c["reason"] = e.reason;
      return c;
    };
    consts["C1_fit"] = ledger.c1_fit;
    consts["C2_used"] = ledger.c2_used;
    consts["C2_asymptotic_floor"] = ledger.c2_asymptotic_floor;
    consts["l1"] = centry(ledger.l1);
    consts["L1"] = centry(ledger.big_l1);
    consts["L"] = centry(ledger.big_l);
    j["constants"] = consts;
    ordered_json spread = ordered_json::array();
    for (std::size_t r = 0; r < traffic.num_routes(); ++r) {
      auto rep = check_spreadout(traffic.interarrival[r]);
      ordered_json sj;
      sj["route"] = r;
      sj["unbounded_support"] = rep.unbounded_support;
      sj["convolution_nonsingular"] = rep.convolution_nonsingular;
      spread.push_back(sj);
    }
    j["interarrival_spreadout"] = spread;
    write_json(out / "ledger.json", j);

    if (!cfg.quiet)
      std::cout << "validate: " << (hard_ok ? "ok" : "FAILED") << "\n"
              << "  subcritical: " << (sub.subcritical ? "yes" : "no")
              << " (margin " << sub.margin << ")\n"
              << "  C1_fit=" << ledger.c1_fit << " C2=" << ledger.c2_used
              << " kappa_N=" << ledger.kappa_n << " M1=" << ledger.m1 << "\n"
              << "  gamma checks: "
              << (ledger.gamma.all_ok() ? "pass" : "fail (outside the admissible regime)")
              << "\n  ledger: " << (out / "ledger.json").string() << "\n";
    return hard_ok ? kExitOk : kExitCheckFailed;
  }

  if (kind == "run") {
    StreamSet streams(cfg.seed, 0, topo.num_routes());
    InitialCondition empty;
    empty.residuals.resize(topo.num_routes());
    NetworkState st = init_state(topo, traffic, empty, streams);
    RunOptions opt;
    opt.horizon = cfg.horizon;
    for (std::size_t i = 1; i <= cfg.experiment.samples; ++i)
      opt.sample_times.push_back(cfg.horizon * static_cast<double>(i) /
                                 static_cast<double>(cfg.experiment.samples));
    RunResult res = run(topo, traffic, wmmf_policy(), std::move(st), opt, streams);

    std::vector<std::string> header = {"time", "event_kind", "route", "lambda_w"};
    for (std::size_t r = 0; r < topo.num_routes(); ++r)
      header.push_back("count_r" + std::to_string(r));
    CsvWriter csv(header);
    for (const auto& ev : res.trajectory.events) {
      std::vector<std::string> row = {fmt_g17(ev.time), detail::event_kind_name(ev.kind),
                                      std::to_string(ev.route), fmt_g17(ev.lambda_w)};
      for (auto c : ev.counts) row.push_back(std::to_string(c));
      csv.append_row(row);
    }
    csv.write(out / "trajectory.csv");

    ordered_json events = ordered_json::array();
    for (const auto& ev : res.trajectory.events) {
      ordered_json ej;
      ej["time"] = ev.time;
      ej["kind"] = detail::event_kind_name(ev.kind);
      ej["route"] = ev.route;
      if (ev.kind == EventKind::arrival) ej["service_drawn"] = ev.service_drawn;
      ej["lambda_w"] = std::isinf(ev.lambda_w) ? ordered_json() : ordered_json(ev.lambda_w);
      ej["route_total"] = ev.route_total;
      ej["counts"] = ev.counts;
      events.push_back(ej);
    }
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["seed"] = cfg.seed;
    j["horizon"] = cfg.horizon;
    j["num_events"] = res.num_events;
    j["time_avg_count"] = res.time_avg_count;
    j["final_counts"] = res.state.counts();
    j["events"] = events;
    write_json(out / "events.json", j);

    ordered_json summary;
    summary["schema_version"] = kSchemaVersion;
    summary["seed"] = cfg.seed;
    summary["config"] = replay_config(cfg);
    summary["num_events"] = res.num_events;
    summary["time_avg_count"] = res.time_avg_count;
    summary["final_counts"] = res.state.counts();
    summary["stalled_route_events"] = res.stalled_route_events;
    write_json(out / "summary.json", summary);

    if (!cfg.quiet) {
      std::cout << "run: " << res.num_events << " events over horizon " << cfg.horizon
                << ", time-average count " << res.time_avg_count << "\n  artifacts: "
                << (out / "trajectory.csv").string() << "\n";
      if (res.stalled_route_events > 0)
        std::cout << "  warning: " << res.stalled_route_events
                  << " events left a nonempty route with zero rate\n";
    }
    return kExitOk;
  }

  if (kind == "drift") {
    LyapunovContext ctx = make_context(topo, traffic, cfg.lyapunov);
    std::vector<NetworkState> states;
    for (std::size_t i = 0; i < cfg.experiment.initial_documents.size(); ++i)
      states.push_back(make_drift_initial_state(topo, traffic, cfg.experiment.route,
                                                cfg.experiment.initial_documents[i], cfg.seed, i));
    DriftReport rep =
        estimate_drift(topo, traffic, ctx, states, cfg.replications, cfg.seed, cfg.parallel);

    CsvWriter csv({"state_id", "documents", "norm_x", "mean_diff", "stderr", "ci_lo", "ci_hi",
                   "replications"});
    for (std::size_t i = 0; i < rep.states.size(); ++i) {
      const auto& s = rep.states[i];
      csv.append_row({std::to_string(s.state_id),
                      std::to_string(cfg.experiment.initial_documents[i]), fmt_g17(s.norm_x),
                      fmt_g17(s.mean_diff), fmt_g17(s.stderr_), fmt_g17(s.ci_lo),
                      fmt_g17(s.ci_hi), std::to_string(s.replications)});
    }
    csv.write(out / "drift.csv");

    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["seed"] = cfg.seed;
    j["horizon"] = rep.horizon;
    j["config"] = replay_config(cfg);
    j["params"] = detail::param_ledger_json(ctx);
    ordered_json states_j = ordered_json::array();
    for (std::size_t i = 0; i < rep.states.size(); ++i) {
      const auto& s = rep.states[i];
      ordered_json sj;
      sj["state_id"] = s.state_id;
      sj["documents"] = cfg.experiment.initial_documents[i];
      sj["norm_x"] = s.norm_x;
      sj["mean_diff"] = s.mean_diff;
      sj["stderr"] = s.stderr_;
      sj["ci"] = {s.ci_lo, s.ci_hi};
      sj["replications"] = s.replications;
      states_j.push_back(sj);
    }
    j["states"] = states_j;
    write_json(out / "drift.json", j);

    if (!cfg.quiet) {
      std::cout << "drift over horizon N^3 = " << rep.horizon << ":\n";
      for (std::size_t i = 0; i < rep.states.size(); ++i) {
        const auto& s = rep.states[i];
        std::cout << "  z=" << cfg.experiment.initial_documents[i] << " |x|=" << s.norm_x
                  << " mean diff " << s.mean_diff << " [" << s.ci_lo << ", " << s.ci_hi << "]\n";
      }
    }
    return kExitOk;
  }

  if (kind == "eventset") {
    LyapunovContext ctx = make_context(topo, traffic, cfg.lyapunov);
    EventSetConfig esc{cfg.experiment.eta, cfg.experiment.eps5};
    EventSetProbReport rep = estimate_eventset_prob(topo, traffic, ctx, esc,
                                                    cfg.experiment.t_values, cfg.replications,
                                                    cfg.seed, cfg.parallel);
    CsvWriter csv({"t", "complement_freq", "ci_lo", "ci_hi", "replications", "decay_shape"});
    for (const auto& pt : rep.points)
      csv.append_row({fmt_g17(pt.t), fmt_g17(pt.complement_freq), fmt_g17(pt.ci_lo),
                      fmt_g17(pt.ci_hi), std::to_string(pt.replications),
                      fmt_g17(pt.decay_shape)});
    csv.write(out / "eventset.csv");

    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["seed"] = cfg.seed;
    j["config"] = replay_config(cfg);
    j["eta"] = esc.eta;
    j["eps5"] = esc.eps5 > 0 ? esc.eps5 : ctx.params.eps7 / 4.0;
    j["params"] = detail::param_ledger_json(ctx);
    ordered_json pts = ordered_json::array();
    for (const auto& pt : rep.points) {
      ordered_json pj;
      pj["t"] = pt.t;
      pj["complement_freq"] = pt.complement_freq;
      pj["ci"] = {pt.ci_lo, pt.ci_hi};
      pj["replications"] = pt.replications;
      pj["decay_shape"] = pt.decay_shape;
      pts.push_back(pj);
    }
    j["points"] = pts;
    write_json(out / "eventset.json", j);

    if (!cfg.quiet) {
      std::cout << "eventset complement frequency:\n";
      for (const auto& pt : rep.points)
        std::cout << "  t=" << pt.t << " freq=" << pt.complement_freq << " [" << pt.ci_lo
                  << ", " << pt.ci_hi << "]\n";
    }
    return kExitOk;
  }

  if (kind == "stability") {
    StabilityReport rep = stability_experiment(topo, traffic, cfg.horizon, cfg.replications,
                                               cfg.seed, cfg.experiment.samples, cfg.parallel);
    CsvWriter csv({"time", "mean_count"});
    for (std::size_t i = 0; i < rep.sample_times.size(); ++i)
      csv.append_row({fmt_g17(rep.sample_times[i]), fmt_g17(rep.mean_counts[i])});
    csv.write(out / "stability.csv");

    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["seed"] = cfg.seed;
    j["config"] = replay_config(cfg);
    j["horizon"] = cfg.horizon;
    j["replications"] = rep.replications;
    j["tail_mean"] = rep.tail_mean;
    j["slope"] = rep.slope;
    j["slope_ci"] = {rep.slope_ci_lo, rep.slope_ci_hi};
    write_json(out / "stability.json", j);

    if (!cfg.quiet)
      std::cout << "stability: tail mean " << rep.tail_mean << ", slope " << rep.slope << " ["
                << rep.slope_ci_lo << ", " << rep.slope_ci_hi << "]\n";
    return kExitOk;
  }

  if (kind == "ps-bench") {
    CsvWriter csv({"rho", "analytic", "estimate", "ci_lo", "ci_hi", "relative_error",
                   "replications"});
    ordered_json pts = ordered_json::array();
    for (std::size_t i = 0; i < cfg.experiment.rho_values.size(); ++i) {
      double rho = cfg.experiment.rho_values[i];
      PsBenchReport rep = ps_benchmark(traffic.service[0], rho, cfg.horizon, cfg.replications,
                                       combine_seed({cfg.seed, i}), cfg.parallel);
      csv.append_row({fmt_g17(rep.rho), fmt_g17(rep.analytic), fmt_g17(rep.estimate),
                      fmt_g17(rep.ci_lo), fmt_g17(rep.ci_hi), fmt_g17(rep.relative_error),
                      std::to_string(rep.replications)});
      ordered_json pj;
      pj["rho"] = rep.rho;
      pj["analytic"] = rep.analytic;
      pj["estimate"] = rep.estimate;
      pj["ci"] = {rep.ci_lo, rep.ci_hi};
      pj["relative_error"] = rep.relative_error;
      pts.push_back(pj);
      if (!cfg.quiet)
        std::cout << "ps-bench rho=" << rho << ": estimate " << rep.estimate << " vs "
                  << rep.analytic << " (rel err " << rep.relative_error << ")\n";
    }
    csv.write(out / "ps_bench.csv");
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["seed"] = cfg.seed;
    j["config"] = replay_config(cfg);
    j["horizon"] = cfg.horizon;
    j["points"] = pts;
    write_json(out / "ps_bench.json", j);
    return kExitOk;
  }

  std::cerr << "unknown experiment kind: " << kind << "\n";
  return kExitConfigError;
}

// Exception-mapping wrapper used by the CLI.
inline int dispatch_guarded(const RunConfig& cfg) {
  try {
    return dispatch(cfg);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfigError;
  } catch (const SupercriticalConfig& e) {
    std::cerr << "SupercriticalConfig: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return kExitCheckFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
}

}  // namespace wmmf

#endif  // WMMF_DISPATCH_HPP
