#ifndef WMMF_CONFIG_HPP
#define WMMF_CONFIG_HPP

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wmmf/harness.hpp"
#include "wmmf/lyapunov.hpp"
#include "wmmf/model.hpp"
#include "wmmf/report.hpp"

namespace wmmf {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::vector<std::string>& errs)
      : std::runtime_error(join(errs)), errors(errs) {}
  std::vector<std::string> errors;

  static std::string join(const std::vector<std::string>& errs) {
    std::string s = "configuration invalid:";
    for (const auto& e : errs) s += "\n  - " + e;
    return s;
  }
};

struct ExperimentConfig {
  std::string kind = "validate";
  // drift
  std::vector<std::size_t> initial_documents = {50, 100, 200};
  std::size_t route = 0;
  // eventset
  std::vector<double> t_values = {100.0, 10000.0};
  double eta = 1.0 / 12.0;
  double eps5 = 0.0;  // 0 -> eps7/4
  // run / stability
  std::size_t samples = 200;
  // ps-bench
  std::vector<double> rho_values = {0.5, 0.8};
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::size_t replications = 20;
  std::size_t parallel = 1;
  double horizon = 1000.0;
  NetworkTopology topology;
  TrafficSpec traffic;
  std::string policy = "wmmf";
  LyapunovParams lyapunov;
  bool c1_auto = true;
  bool c2_auto = true;
  bool eps7_auto = true;
  ExperimentConfig experiment;
  std::string out_dir = "out";
  bool quiet = false;  // suppress the stdout summary (not part of the schema)
};

namespace detail {

inline void require_keys(const ordered_json& j, const std::string& where,
                         const std::vector<std::string>& allowed,
                         std::vector<std::string>& errs) {
  if (!j.is_object()) {
    errs.push_back(where + ": expected an object");
    return;
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      errs.push_back(where + ": unknown key '" + it.key() + "'");
  }
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline double num_at(const ordered_json& j, const std::string& key, const std::string& where,
                     std::vector<std::string>& errs, double fallback = 0.0) {
  if (!j.contains(key)) {
    errs.push_back(where + ": missing key '" + key + "'");
    return fallback;
  }
  if (!j.at(key).is_number()) {
    errs.push_back(where + ": '" + key + "' must be a number");
    return fallback;
  }
  return j.at(key).get<double>();
}

inline DistributionSpec parse_distribution(const ordered_json& j, const std::string& where,
                                           std::vector<std::string>& errs) {
  DistributionSpec spec = Exponential{1.0};
  if (!j.is_object() || !j.contains("family") || !j.at("family").is_string()) {
    errs.push_back(where + ": expected {\"family\": ..., params}");
    return spec;
  }
  std::string family = lower(j.at("family").get<std::string>());
  if (family == "exponential") {
    require_keys(j, where, {"family", "mean"}, errs);
    spec = Exponential{num_at(j, "mean", where, errs, 1.0)};
  } else if (family == "deterministic") {
    require_keys(j, where, {"family", "value"}, errs);
    spec = Deterministic{num_at(j, "value", where, errs, 1.0)};
  } else if (family == "uniform") {
    require_keys(j, where, {"family", "lo", "hi"}, errs);
    spec = UniformDist{num_at(j, "lo", where, errs, 0.0), num_at(j, "hi", where, errs, 1.0)};
  } else if (family == "pareto") {
    require_keys(j, where, {"family", "shape", "scale"}, errs);
    spec = Pareto{num_at(j, "shape", where, errs, 2.0), num_at(j, "scale", where, errs, 1.0)};
  } else if (family == "hyperexponential") {
    require_keys(j, where, {"family", "probs", "means"}, errs);
    Hyperexponential h;
    if (j.contains("probs") && j.at("probs").is_array())
      h.probs = j.at("probs").get<std::vector<double>>();
    else
      errs.push_back(where + ": 'probs' must be an array");
    if (j.contains("means") && j.at("means").is_array())
      h.means = j.at("means").get<std::vector<double>>();
    else
      errs.push_back(where + ": 'means' must be an array");
    spec = h;
  } else if (family == "weibull") {
    require_keys(j, where, {"family", "shape", "scale"}, errs);
    spec = Weibull{num_at(j, "shape", where, errs, 1.0), num_at(j, "scale", where, errs, 1.0)};
  } else {
    errs.push_back(where + ": unknown family '" + family + "'");
  }
  return spec;
}

inline ordered_json distribution_to_json(const DistributionSpec& spec) {
  ordered_json j;
  j["family"] = family_name(spec);
  if (const auto* e = std::get_if<Exponential>(&spec)) {
    j["mean"] = e->mean;
  } else if (const auto* d = std::get_if<Deterministic>(&spec)) {
    j["value"] = d->value;
  } else if (const auto* u = std::get_if<UniformDist>(&spec)) {
    j["lo"] = u->lo;
    j["hi"] = u->hi;
  } else if (const auto* p = std::get_if<Pareto>(&spec)) {
    j["shape"] = p->shape;
    j["scale"] = p->scale;
  } else if (const auto* h = std::get_if<Hyperexponential>(&spec)) {
    j["probs"] = h->probs;
    j["means"] = h->means;
  } else if (const auto* w = std::get_if<Weibull>(&spec)) {
    j["shape"] = w->shape;
    j["scale"] = w->scale;
  }
  return j;
}

// "auto" or a positive number.
inline double parse_auto(const ordered_json& j, const std::string& key, const std::string& where,
                         double auto_sentinel, bool& is_auto, std::vector<std::string>& errs) {
  if (!j.contains(key)) {
    is_auto = true;
    return auto_sentinel;
  }
  const auto& v = j.at(key);
  if (v.is_string()) {
    if (lower(v.get<std::string>()) != "auto")
      errs.push_back(where + ": '" + key + "' must be a number or \"auto\"");
    is_auto = true;
    return auto_sentinel;
  }
  if (!v.is_number()) {
    errs.push_back(where + ": '" + key + "' must be a number or \"auto\"");
    is_auto = true;
    return auto_sentinel;
  }
  is_auto = false;
  return v.get<double>();
}

}  // namespace detail

inline RunConfig parse_config(const ordered_json& j) {
  std::vector<std::string> errs;
  RunConfig cfg;
  detail::require_keys(j, "$",
                       {"schema_version", "seed", "replications", "parallel", "horizon",
                        "topology", "traffic", "policy", "lyapunov", "experiment", "output"},
                       errs);
  if (j.contains("schema_version") && j.at("schema_version").is_number_integer() &&
      j.at("schema_version").get<int>() != kSchemaVersion)
    errs.push_back("$: unsupported schema_version");
  if (j.contains("seed")) {
    if (j.at("seed").is_number_unsigned() || j.at("seed").is_number_integer())
      cfg.seed = j.at("seed").get<std::uint64_t>();
    else
      errs.push_back("$: 'seed' must be an unsigned integer");
  }
  if (j.contains("replications")) cfg.replications = j.at("replications").get<std::size_t>();
  if (j.contains("parallel")) cfg.parallel = std::max<std::size_t>(1, j.at("parallel").get<std::size_t>());
  if (j.contains("horizon")) cfg.horizon = j.at("horizon").get<double>();

  if (!j.contains("topology")) {
    errs.push_back("$: missing 'topology'");
  } else {
    const auto& t = j.at("topology");
    detail::require_keys(t, "topology", {"capacities", "weights", "incidence"}, errs);
    try {
      std::vector<std::vector<double>> rows;
      if (t.contains("incidence")) rows = t.at("incidence").get<std::vector<std::vector<double>>>();
      std::vector<double> caps, weights;
      if (t.contains("capacities")) caps = t.at("capacities").get<std::vector<double>>();
      if (t.contains("weights")) weights = t.at("weights").get<std::vector<double>>();
      cfg.topology = NetworkTopology::make(rows, caps, weights);
    } catch (const std::exception& e) {
      errs.push_back(std::string("topology: ") + e.what());
    }
  }

  if (!j.contains("traffic")) {
    errs.push_back("$: missing 'traffic'");
  } else {
    const auto& t = j.at("traffic");
    detail::require_keys(t, "traffic", {"routes"}, errs);
    if (!t.contains("routes") || !t.at("routes").is_array()) {
      errs.push_back("traffic: missing 'routes' array");
    } else {
      std::size_t r = 0;
      for (const auto& route : t.at("routes")) {
        std::string where = "traffic.routes[" + std::to_string(r) + "]";
        detail::require_keys(route, where, {"interarrival", "service"}, errs);
        if (route.contains("interarrival"))
          cfg.traffic.interarrival.push_back(
              detail::parse_distribution(route.at("interarrival"), where + ".interarrival", errs));
        else
          errs.push_back(where + ": missing 'interarrival'");
        if (route.contains("service"))
          cfg.traffic.service.push_back(
              detail::parse_distribution(route.at("service"), where + ".service", errs));
        else
          errs.push_back(where + ": missing 'service'");
        ++r;
      }
    }
  }

  if (j.contains("policy")) {
    detail::require_keys(j.at("policy"), "policy", {"kind"}, errs);
    if (j.at("policy").contains("kind")) cfg.policy = detail::lower(j.at("policy").at("kind").get<std::string>());
    if (cfg.policy != "wmmf") errs.push_back("policy: only 'wmmf' is supported");
  }

  if (j.contains("lyapunov")) {
    const auto& l = j.at("lyapunov");
    detail::require_keys(
        l, "lyapunov", {"b", "a", "gamma", "delta1", "C1", "C2", "C3", "N", "beta", "eps7"}, errs);
    if (l.contains("b")) cfg.lyapunov.b = l.at("b").get<int>();
    if (l.contains("a")) cfg.lyapunov.a = l.at("a").get<double>();
    if (l.contains("gamma")) cfg.lyapunov.gamma = l.at("gamma").get<double>();
    if (l.contains("delta1")) cfg.lyapunov.delta1 = l.at("delta1").get<double>();
    if (l.contains("C3")) cfg.lyapunov.C3 = l.at("C3").get<double>();
    if (l.contains("N")) cfg.lyapunov.N = l.at("N").get<int>();
    if (l.contains("beta")) cfg.lyapunov.beta = l.at("beta").get<double>();
    cfg.lyapunov.C1 = detail::parse_auto(l, "C1", "lyapunov", 0.0, cfg.c1_auto, errs);
    cfg.lyapunov.C2 = detail::parse_auto(l, "C2", "lyapunov", 0.0, cfg.c2_auto, errs);
    cfg.lyapunov.eps7 = detail::parse_auto(l, "eps7", "lyapunov", -1.0, cfg.eps7_auto, errs);
  }

  if (j.contains("experiment")) {
    const auto& e = j.at("experiment");
    if (!e.is_object() || !e.contains("kind") || !e.at("kind").is_string()) {
      errs.push_back("experiment: missing 'kind'");
    } else {
      cfg.experiment.kind = detail::lower(e.at("kind").get<std::string>());
      const std::string k = cfg.experiment.kind;
      if (k == "validate") {
        detail::require_keys(e, "experiment", {"kind"}, errs);
      } else if (k == "run") {
        detail::require_keys(e, "experiment", {"kind", "samples"}, errs);
        if (e.contains("samples")) cfg.experiment.samples = e.at("samples").get<std::size_t>();
      } else if (k == "drift") {
        detail::require_keys(e, "experiment", {"kind", "initial_documents", "route"}, errs);
        if (e.contains("initial_documents"))
          cfg.experiment.initial_documents =
              e.at("initial_documents").get<std::vector<std::size_t>>();
        if (e.contains("route")) cfg.experiment.route = e.at("route").get<std::size_t>();
      } else if (k == "eventset") {
        detail::require_keys(e, "experiment", {"kind", "t_values", "eta", "eps5"}, errs);
        if (e.contains("t_values")) cfg.experiment.t_values = e.at("t_values").get<std::vector<double>>();
        if (e.contains("eta")) cfg.experiment.eta = e.at("eta").get<double>();
        if (e.contains("eps5")) cfg.experiment.eps5 = e.at("eps5").get<double>();
      } else if (k == "stability") {
        detail::require_keys(e, "experiment", {"kind", "samples"}, errs);
        if (e.contains("samples")) cfg.experiment.samples = e.at("samples").get<std::size_t>();
      } else if (k == "ps-bench") {
        detail::require_keys(e, "experiment", {"kind", "rho"}, errs);
        if (e.contains("rho")) cfg.experiment.rho_values = e.at("rho").get<std::vector<double>>();
      } else {
        errs.push_back("experiment: unknown kind '" + k + "'");
      }
    }
  } else {
    errs.push_back("$: missing 'experiment'");
  }

  if (j.contains("output")) {
    detail::require_keys(j.at("output"), "output", {"dir"}, errs);
    if (j.at("output").contains("dir")) cfg.out_dir = j.at("output").at("dir").get<std::string>();
  }

  if (!errs.empty()) throw ConfigError(errs);
  return cfg;
}

// Cross-validation beyond shape: model, distribution and ledger rules.
inline void validate_config(const RunConfig& cfg) {
  std::vector<std::string> errs;
  for (const auto& v : validate_topology(cfg.topology)) errs.push_back("topology: " + v.describe());
  for (const auto& e : validate_traffic(cfg.traffic)) errs.push_back("traffic: " + e);
  if (cfg.traffic.num_routes() != cfg.topology.num_routes &&
      errs.empty())  // shape errors already reported otherwise
    errs.push_back("traffic: route count differs from topology");
  for (const auto& c : check_params_structural(cfg.lyapunov))
    if (!c.ok) errs.push_back("lyapunov: failed '" + c.name + "'");
  if (!cfg.c1_auto && cfg.lyapunov.C1 < 1.0) errs.push_back("lyapunov: C1 must be >= 1");
  if (!cfg.c2_auto && !(cfg.lyapunov.C2 > 0.0)) errs.push_back("lyapunov: C2 must be > 0");
  if (!cfg.eps7_auto && !(cfg.lyapunov.eps7 >= 0.0)) errs.push_back("lyapunov: eps7 must be >= 0");
  for (std::size_t r = 0; r < cfg.traffic.num_routes(); ++r) {
    if (!check_moment_condition(cfg.traffic.service[r], cfg.lyapunov.delta1))
      errs.push_back("traffic.routes[" + std::to_string(r) +
                     "].service: (2+delta1)-th moment is infinite");
    if (!std::isfinite(moment(cfg.traffic.interarrival[r], 1.0 + cfg.lyapunov.beta)))
      errs.push_back("traffic.routes[" + std::to_string(r) +
                     "].interarrival: (1+beta)-th moment is infinite (theta integrability)");
  }
  if (cfg.replications < 2) errs.push_back("$: replications must be >= 2");
  if (!(cfg.horizon > 0)) errs.push_back("$: horizon must be > 0");
  if (cfg.experiment.kind == "eventset") {
    if (!(cfg.experiment.eta > 0 && cfg.experiment.eta <= 1.0 / 12.0))
      errs.push_back("experiment: eta must lie in (0, 1/12]");
    for (std::size_t i = 1; i < cfg.experiment.t_values.size(); ++i)
      if (!(cfg.experiment.t_values[i] > cfg.experiment.t_values[i - 1]))
        errs.push_back("experiment: t_values must be strictly increasing");
  }
  if (cfg.experiment.kind == "ps-bench") {
    if (cfg.topology.num_routes != 1 || cfg.topology.num_links != 1)
      errs.push_back("experiment: ps-bench needs the single-link single-route topology");
    for (double rho : cfg.experiment.rho_values)
      if (!(rho > 0 && rho < 1)) errs.push_back("experiment: ps-bench rho must lie in (0,1)");
  }
  if (cfg.experiment.kind == "drift" && cfg.experiment.route >= cfg.topology.num_routes)
    errs.push_back("experiment: drift route out of range");
  if (!errs.empty()) throw ConfigError(errs);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file: " + path});
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({std::string("parse error: ") + e.what()});
  }
  RunConfig cfg = parse_config(j);
  validate_config(cfg);
  return cfg;
}

// The materialized configuration: loading it back reproduces the run.
inline ordered_json effective_config(const RunConfig& cfg) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["seed"] = cfg.seed;
  j["replications"] = cfg.replications;
  j["parallel"] = cfg.parallel;
  j["horizon"] = cfg.horizon;
  ordered_json topo;
  topo["capacities"] = cfg.topology.capacity;
  topo["weights"] = cfg.topology.weight;
  std::vector<std::vector<double>> rows;
  for (std::size_t l = 0; l < cfg.topology.num_links; ++l) {
    std::vector<double> row(cfg.topology.num_routes);
    for (std::size_t r = 0; r < cfg.topology.num_routes; ++r) row[r] = cfg.topology.a(l, r);
    rows.push_back(row);
  }
  topo["incidence"] = rows;
  j["topology"] = topo;
  ordered_json routes = ordered_json::array();
  for (std::size_t r = 0; r < cfg.traffic.num_routes(); ++r) {
    ordered_json route;
    route["interarrival"] = detail::distribution_to_json(cfg.traffic.interarrival[r]);
    route["service"] = detail::distribution_to_json(cfg.traffic.service[r]);
    routes.push_back(route);
  }
  j["traffic"]["routes"] = routes;
  j["policy"]["kind"] = cfg.policy;
  ordered_json lyap;
  lyap["b"] = cfg.lyapunov.b;
  lyap["a"] = cfg.lyapunov.a;
  lyap["gamma"] = cfg.lyapunov.gamma;
  lyap["delta1"] = cfg.lyapunov.delta1;
  if (cfg.c1_auto)
    lyap["C1"] = "auto";
  else
    lyap["C1"] = cfg.lyapunov.C1;
  if (cfg.c2_auto)
    lyap["C2"] = "auto";
  else
    lyap["C2"] = cfg.lyapunov.C2;
  lyap["C3"] = cfg.lyapunov.C3;
  lyap["N"] = cfg.lyapunov.N;
  lyap["beta"] = cfg.lyapunov.beta;
  if (cfg.eps7_auto)
    lyap["eps7"] = "auto";
  else
    lyap["eps7"] = cfg.lyapunov.eps7;
  j["lyapunov"] = lyap;
  ordered_json exp;
  exp["kind"] = cfg.experiment.kind;
  if (cfg.experiment.kind == "run" || cfg.experiment.kind == "stability")
    exp["samples"] = cfg.experiment.samples;
  if (cfg.experiment.kind == "drift") {
    exp["initial_documents"] = cfg.experiment.initial_documents;
    exp["route"] = cfg.experiment.route;
  }
  if (cfg.experiment.kind == "eventset") {
    exp["t_values"] = cfg.experiment.t_values;
    exp["eta"] = cfg.experiment.eta;
    exp["eps5"] = cfg.experiment.eps5;
  }
  if (cfg.experiment.kind == "ps-bench") exp["rho"] = cfg.experiment.rho_values;
  j["experiment"] = exp;
  j["output"]["dir"] = cfg.out_dir;
  return j;
}

// Configuration as embedded in result artifacts: execution metadata (worker
// count, output directory) is stripped so results stay byte-identical across
// execution environments.
inline ordered_json replay_config(const RunConfig& cfg) {
  ordered_json j = effective_config(cfg);
  j.erase("parallel");
  j.erase("output");
  return j;
}

}  // namespace wmmf

#endif  // WMMF_CONFIG_HPP
