#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "phasekit/analysis.hpp"
#include "phasekit/core.hpp"
#include "phasekit/init.hpp"
#include "phasekit/measurement.hpp"
#include "phasekit/signals.hpp"
#include "phasekit/solvers.hpp"

namespace phasekit {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Experiment { PhaseTransition, Converge, Image, Check };
enum class SignalKind { Gaussian, Lowpass };
enum class SolverKind { Alternating, WirtingerFlow };

std::string to_string(Experiment e);
std::string to_string(SignalKind s);
std::string to_string(SolverKind s);

/// Flat key=value experiment description. See the README for the key list.
struct ExperimentConfig {
  Experiment experiment = Experiment::PhaseTransition;
  EnsembleKind model = EnsembleKind::GaussianComplex;
  SignalKind signal = SignalKind::Gaussian;
  std::string preset;
  Eigen::Index d = 128;
  int trials = 20;
  /// Total single-variable iterations: the alternating solver runs iterations / 2
  /// rounds, Wirtinger flow runs `iterations` steps.
  int iterations = 2500;
  SolverKind solver = SolverKind::Alternating;
  Schedules alt{330.0, 0.4, 300.0, 0.15 / 330.0};
  Schedules wf{330.0, 0.2, 0.0, 0.0};
  StepMode alt_mode = StepMode::FixedSchedule;
  /// Phase transition sweep: N/d for Gaussian models, L for CDP.
  std::vector<double> grid{3.0, 3.5, 4.0, 4.5, 5.0, 6.0};
  /// Single-instance N/d or L (converge).
  double ratio = 4.5;
  std::uint64_t seed = 1;
  int power_iterations = kDefaultPowerIterations;
  double success_threshold = 1e-5;
  double noise_sigma = 0.0;
  /// Image experiment.
  std::filesystem::path image;  // empty: synthetic gradient image
  int image_size = 16;
  int masks = 15;
  std::vector<int> image_rounds{100, 125, 150};
  /// Worker threads; 0 picks the hardware count. PHASEKIT_WORKERS caps either.
  int workers = 0;

  int alt_rounds() const { return iterations / 2; }
  int wf_iterations() const { return iterations; }

  /// Throws ConfigError on any inconsistency.
  void validate() const;

  /// Parses key=value lines; '#' starts a comment. A `preset` key is applied
  /// first, then the remaining keys override it. Unknown keys are errors.
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Canonical key=value text that parses back to an equal config.
  std::string to_text() const;
};

/// Applies a named preset to `cfg`. Throws ConfigError on unknown names.
void apply_preset(ExperimentConfig& cfg, const std::string& name);
std::vector<std::string> preset_names();

/// Worker count after applying PHASEKIT_WORKERS.
int effective_workers(int requested);

struct PhaseTransitionRow {
  double ratio = 0.0;
  int trials = 0;
  int successes = 0;
  double success_rate = 0.0;
  double mean_rel_error = 0.0;
};

struct PhaseTransitionResult {
  std::vector<PhaseTransitionRow> rows;
  double wall_seconds = 0.0;
};

PhaseTransitionResult run_phase_transition(const ExperimentConfig& cfg);
/// Header: ratio,trials,successes,success_rate,mean_rel_error.
void write_phase_transition_csv(std::ostream& os, const PhaseTransitionResult& result);

struct ConvergenceResult {
  SolveResult alternating;
  SolveResult wirtinger;
  double alt_final_rel_error = 0.0;
  double wf_final_rel_error = 0.0;
  double init_rel_error = 0.0;
  double wall_seconds = 0.0;
};

/// One seeded instance, both solvers from the same spectral start.
ConvergenceResult run_convergence_curve(const ExperimentConfig& cfg);
/// Header: iter,algo,objective,rel_error. Alternating round k is iter 2k.
void write_convergence_csv(std::ostream& os, const ConvergenceResult& result);

struct ImageRow {
  int rounds = 0;  // alternating rounds; WF ran 2 * rounds iterations
  double alt_rel_error = 0.0;
  double wf_rel_error = 0.0;
};

struct ImageResult {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<ImageRow> rows;
  ImageChannels recovered_alt;
  ImageChannels recovered_wf;
  double wall_seconds = 0.0;
};

/// 16x16-style test image: channel c holds (i + 2 j + c) / (3 (n - 1) + c) at row i, column j.
ImageChannels synthetic_image(int size, int channels = 1);

/// Per-channel CDP recovery. Errors aggregate over channels as
/// sqrt(sum_c dist_c^2) / ||x||, each channel aligned by its own global phase.
ImageResult run_image_experiment(const ExperimentConfig& cfg);
/// Header: rounds,wf_iterations,alt_rel_error,wf_rel_error.
void write_image_csv(std::ostream& os, const ImageResult& result);

struct CheckItem {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string report;  // JSON object from the instrument
};

struct CheckSummary {
  std::vector<CheckItem> items;
  bool all_passed() const;
};

/// Test hooks for confirming the checks can fail.
struct CheckOverrides {
  GradientFn grad_E_x;
};

/// Runs every verification instrument at small fixed sizes seeded from cfg.seed.
CheckSummary run_checks(const ExperimentConfig& cfg, const CheckOverrides& overrides = {});
void write_check_json(std::ostream& os, const CheckSummary& summary);

}  // namespace phasekit
