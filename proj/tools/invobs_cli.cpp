// Command-line front end: config-driven synthesis, reconstruction and
// tracking experiments, plus the built-in demo cases.
#include <CLI11.hpp>

#include <cstdio>
#include <optional>
#include <string>

#include "invobs/config.hpp"
#include "invobs/demo_cases.hpp"
#include "invobs/experiment.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::int64_t> n_d, n_c, steps;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required = true) {
  auto* opt = cmd->add_option("-c,--config", flags.config_path, "experiment config file");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--nd", flags.n_d, "reconstruction delay n_d");
  cmd->add_option("--nc", flags.n_c, "controller order n_c");
  cmd->add_option("--seed", flags.seed, "seed for random_seeded signals");
  cmd->add_option("--steps", flags.steps, "trace length");
  cmd->add_option("-o,--out", flags.output_dir, "output directory");
}

invobs::ExperimentConfig apply_overrides(invobs::ExperimentConfig cfg, const CommonFlags& flags,
                                         invobs::RunMode mode) {
  cfg.mode = mode;
  if (flags.n_d) cfg.n_d = *flags.n_d;
  if (flags.n_c) cfg.n_c = *flags.n_c;
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.steps) cfg.steps = *flags.steps;
  if (flags.output_dir) cfg.output_dir = *flags.output_dir;
  return cfg;
}

int execute(const invobs::ExperimentConfig& cfg) {
  const invobs::RunReport rep = invobs::run_experiment(cfg);
  for (const auto& [k, v] : rep.metrics) std::printf("%s = %.12g\n", k.c_str(), v);
  for (const auto& f : rep.files) std::printf("wrote %s/%s\n", cfg.output_dir.c_str(), f.c_str());
  std::printf("passed = %s\n", rep.passed ? "true" : "false");
  return rep.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unknown-input observer synthesis, state/input reconstruction and "
               "preview output tracking for square discrete-time LTI systems"};
  app.require_subcommand(1);

  CommonFlags synth_f, rec_f, track_f, uc_f, curve_f, demo_f;
  auto* synth = app.add_subcommand("synthesize", "observer gains and zero dynamics");
  add_common(synth, synth_f);
  auto* rec = app.add_subcommand("reconstruct", "estimate states and unknown input from outputs");
  add_common(rec, rec_f);
  auto* track = app.add_subcommand("track", "preview-based output tracking");
  add_common(track, track_f);
  auto* uc = app.add_subcommand("track-uc", "tracking with unit-circle zeros factored out");
  add_common(uc, uc_f);
  auto* curve = app.add_subcommand("bound-curve", "error bound versus delay sweep");
  add_common(curve, curve_f);

  std::string demo_case;
  auto* demo = app.add_subcommand("demo", "run a built-in study case");
  demo->add_option("case", demo_case, "case1|case2|case3|case4")->required();
  add_common(demo, demo_f, /*config_required=*/false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed())
      return execute(apply_overrides(invobs::load_config(synth_f.config_path), synth_f,
                                     invobs::RunMode::Synthesize));
    if (rec->parsed())
      return execute(apply_overrides(invobs::load_config(rec_f.config_path), rec_f,
                                     invobs::RunMode::Reconstruct));
    if (track->parsed())
      return execute(apply_overrides(invobs::load_config(track_f.config_path), track_f,
                                     invobs::RunMode::Track));
    if (uc->parsed())
      return execute(apply_overrides(invobs::load_config(uc_f.config_path), uc_f,
                                     invobs::RunMode::TrackUc));
    if (curve->parsed())
      return execute(apply_overrides(invobs::load_config(curve_f.config_path), curve_f,
                                     invobs::RunMode::BoundCurve));
    if (demo->parsed()) {
      int id = 0;
      if (demo_case == "case1") id = 1;
      else if (demo_case == "case2") id = 2;
      else if (demo_case == "case3") id = 3;
      else if (demo_case == "case4") id = 4;
      else invobs::fail(invobs::errc::bad_config, "demo cases are case1..case4");
      invobs::ExperimentConfig cfg =
          invobs::demo_config(id, demo_f.output_dir.value_or("out/" + demo_case));
      if (demo_f.n_d) cfg.n_d = *demo_f.n_d;
      if (demo_f.n_c) cfg.n_c = *demo_f.n_c;
      if (demo_f.seed) cfg.seed = *demo_f.seed;
      if (demo_f.steps) cfg.steps = *demo_f.steps;
      return execute(cfg);
    }
  } catch (const invobs::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
