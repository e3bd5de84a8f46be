#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "phasekit/bench.hpp"

namespace fs = std::filesystem;
using namespace phasekit;

namespace {

struct Options {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::string out = "phasekit_out";
};

ExperimentConfig resolve(const Options& opt, Experiment experiment) {
  ExperimentConfig cfg = opt.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(opt.config);
  if (!opt.preset.empty()) {
    apply_preset(cfg, opt.preset);
  } else if (opt.config.empty() && experiment == Experiment::Image) {
    // Bare `image` runs the synthetic test image with its tuned schedule.
    apply_preset(cfg, "synthetic_image");
  }
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.trials) cfg.trials = *opt.trials;
  cfg.experiment = experiment;
  cfg.validate();
  return cfg;
}

std::ofstream open_output(const Options& opt, const std::string& name) {
  fs::create_directories(opt.out);
  const fs::path path = fs::path(opt.out) / name;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  std::cerr << "writing " << path.string() << '\n';
  return os;
}

void note_wf_convention() {
  std::cerr << "note: the Wirtinger flow baseline steps z -= (mu / theta^2) * grad_G / 4 "
               "(reference normalization)\n";
}

int cmd_phase_transition(const Options& opt) {
  const ExperimentConfig cfg = resolve(opt, Experiment::PhaseTransition);
  if (cfg.solver == SolverKind::WirtingerFlow) note_wf_convention();
  const PhaseTransitionResult r = run_phase_transition(cfg);
  auto os = open_output(opt, "phase_transition.csv");
  write_phase_transition_csv(os, r);
  write_phase_transition_csv(std::cout, r);
  std::fprintf(stderr, "wall time %.2f s\n", r.wall_seconds);
  return 0;
}

int cmd_converge(const Options& opt) {
  const ExperimentConfig cfg = resolve(opt, Experiment::Converge);
  note_wf_convention();
  const ConvergenceResult r = run_convergence_curve(cfg);
  auto os = open_output(opt, "convergence.csv");
  write_convergence_csv(os, r);
  std::printf("init_rel_error=%.3e alternating=%.3e wf=%.3e (iterations %d each)\n", r.init_rel_error,
              r.alt_final_rel_error, r.wf_final_rel_error, cfg.iterations);
  std::fprintf(stderr, "wall time %.2f s\n", r.wall_seconds);
  return 0;
}

int cmd_image(const Options& opt) {
  const ExperimentConfig cfg = resolve(opt, Experiment::Image);
  note_wf_convention();
  const ImageResult r = run_image_experiment(cfg);
  {
    auto os = open_output(opt, "image.csv");
    write_image_csv(os, r);
  }
  write_image_csv(std::cout, r);
  const char* ext = r.channels == 1 ? ".pgm" : ".ppm";
  fs::create_directories(opt.out);
  save_image(r.recovered_alt, fs::path(opt.out) / (std::string("recovered_alternating") + ext));
  save_image(r.recovered_wf, fs::path(opt.out) / (std::string("recovered_wf") + ext));
  std::fprintf(stderr, "wall time %.2f s\n", r.wall_seconds);
  return 0;
}

int cmd_check(const Options& opt, bool write_file) {
  const ExperimentConfig cfg = resolve(opt, Experiment::Check);
  const CheckSummary s = run_checks(cfg);
  for (const auto& item : s.items) {
    std::printf("%-24s %s  measured=%.3e  tolerance=%.3e\n", item.name.c_str(), item.passed ? "PASS" : "FAIL",
                item.measured, item.tolerance);
  }
  if (write_file) {
    auto os = open_output(opt, "checks.json");
    write_check_json(os, s);
  }
  std::printf("%s\n", s.all_passed() ? "all checks passed" : "some checks FAILED");
  return s.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phase retrieval experiments: alternating gradient descent vs Wirtinger flow"};
  app.require_subcommand(1);

  Options opt;
  bool out_given = false;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "key=value config file")->check(CLI::ExistingFile);
    sub->add_option("--preset", opt.preset, "built-in parameter preset");
    sub->add_option("--seed", opt.seed, "base seed");
    sub->add_option("--trials", opt.trials, "trials per grid point")->check(CLI::PositiveNumber);
    sub->add_option_function<std::string>(
        "--out", [&](const std::string& v) { opt.out = v; out_given = true; }, "output directory");
  };
  CLI::App* pt = app.add_subcommand("phase-transition", "success rate against oversampling");
  CLI::App* cv = app.add_subcommand("converge", "relative error against iteration count");
  CLI::App* im = app.add_subcommand("image", "per-channel CDP image recovery");
  CLI::App* ck = app.add_subcommand("check", "run the verification instruments");
  CLI::App* ps = app.add_subcommand("presets", "list built-in presets");
  for (CLI::App* sub : {pt, cv, im, ck}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    if (pt->parsed()) return cmd_phase_transition(opt);
    if (cv->parsed()) return cmd_converge(opt);
    if (im->parsed()) return cmd_image(opt);
    if (ck->parsed()) return cmd_check(opt, out_given);
    if (ps->parsed()) {
      for (const auto& name : preset_names()) std::printf("%s\n", name.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
