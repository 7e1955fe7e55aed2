#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "wmmf/dispatch.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t replications = 0;
  std::size_t parallel = 0;
  std::string out_dir;
};

int run_subcommand(const std::string& kind, const Overrides& ov) {
  wmmf::RunConfig cfg;
  try {
    cfg = wmmf::load_config(ov.config_path);
  } catch (const wmmf::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return wmmf::kExitConfigError;
  }
  // `validate` inspects any config; the experiment subcommands must match the
  // experiment section they parameterize.
  if (kind == "validate") {
    cfg.experiment.kind = "validate";
  } else if (cfg.experiment.kind != kind) {
    std::cerr << "config experiment.kind is '" << cfg.experiment.kind
              << "' but the subcommand is '" << kind << "'\n";
    return wmmf::kExitConfigError;
  }
  if (ov.seed_set) cfg.seed = ov.seed;
  if (ov.replications > 0) cfg.replications = ov.replications;
  if (ov.parallel > 0) cfg.parallel = ov.parallel;
  if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
  return wmmf::dispatch_guarded(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flow-level simulator and analysis toolkit for weighted max-min fair "
               "bandwidth sharing"};
  app.require_subcommand(1);

  Overrides ov;
  const char* kinds[] = {"validate", "run", "drift", "eventset", "stability", "ps-bench"};
  const char* descs[] = {
      "validate a configuration and write the constants ledger",
      "simulate one trajectory and export it",
      "estimate the norm drift over the horizon N^3",
      "estimate arrival-regularity event-set complement probabilities",
      "estimate count growth and tail behavior",
      "single-link processor-sharing benchmark against rho/(1-rho)",
  };
  for (int i = 0; i < 6; ++i) {
    auto* sub = app.add_subcommand(kinds[i], descs[i]);
    sub->add_option("--config", ov.config_path, "configuration file (JSON)")->required();
    sub->add_option("--seed", ov.seed, "override the configured seed")
        ->each([&ov](const std::string&) { ov.seed_set = true; });
    sub->add_option("--replications", ov.replications, "override the replication count");
    sub->add_option("--parallel", ov.parallel, "worker threads (results are degree-independent)");
    sub->add_option("--out", ov.out_dir, "override the output directory");
  }

  CLI11_PARSE(app, argc, argv);
  for (int i = 0; i < 6; ++i)
    if (app.get_subcommand(kinds[i])->parsed()) return run_subcommand(kinds[i], ov);
  return wmmf::kExitConfigError;
}
