#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "phasekit/bench.hpp"

using namespace phasekit;
namespace fs = std::filesystem;

namespace {

std::string pt_csv(const ExperimentConfig& cfg) {
  std::ostringstream os;
  write_phase_transition_csv(os, run_phase_transition(cfg));
  return os.str();
}

ExperimentConfig small_sweep() {
  ExperimentConfig cfg;
  cfg.d = 32;
  cfg.trials = 4;
  cfg.iterations = 600;
  cfg.grid = {4.0, 6.0};
  return cfg;
}

}  // namespace

TEST_CASE("config parse, overrides and round trip") {
  const ExperimentConfig cfg = ExperimentConfig::parse(
      "# comment\n"
      "experiment = converge\n"
      "model=cdp\n"
      "signal=lowpass  # trailing comment\n"
      "d=64\n"
      "alt.xi=0.15/330\n"
      "grid=4,5,6,8\n"
      "ratio=6\n"
      "seed=99\n");
  CHECK(cfg.experiment == Experiment::Converge);
  CHECK(cfg.model == EnsembleKind::CDP);
  CHECK(cfg.signal == SignalKind::Lowpass);
  CHECK(cfg.d == 64);
  CHECK(cfg.alt.xi == doctest::Approx(0.15 / 330.0));
  CHECK(cfg.grid == std::vector<double>{4, 5, 6, 8});
  CHECK(cfg.seed == 99);

  const ExperimentConfig back = ExperimentConfig::parse(cfg.to_text());
  CHECK(back.to_text() == cfg.to_text());

  // A preset applies first wherever it appears; explicit keys win.
  const ExperimentConfig p = ExperimentConfig::parse("alt.lambda0=7\npreset=gaussian_lowpass\n");
  CHECK(p.signal == SignalKind::Lowpass);
  CHECK(p.alt.lambda0 == 7.0);
  CHECK(p.alt.xi == doctest::Approx(0.05 / 300.0));
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(ExperimentConfig::parse("bogus=1\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("d\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("d=abc\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("alt.xi=1/0\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("grid=5,4\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("trials=0\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("model=cdp\ngrid=4.5,6\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("iterations=301\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("preset=nope\n"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/phasekit.cfg"), ConfigError);
}

TEST_CASE("every preset validates") {
  for (const std::string& name : preset_names()) {
    ExperimentConfig cfg;
    apply_preset(cfg, name);
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.preset == name);
  }
  ExperimentConfig g;
  apply_preset(g, "gaussian_gaussian");
  CHECK(g.alt.lambda0 == 300.0);
  CHECK(g.alt.mu_max == 0.4);
  CHECK(g.wf.mu_max == 0.2);
  ExperimentConfig c;
  apply_preset(c, "cdp_lowpass");
  CHECK(c.alt.lambda0 == 0.05);
  CHECK(c.alt.xi == doctest::Approx(1.5 / 330.0));
}

TEST_CASE("PHASEKIT_WORKERS caps the worker count") {
  ::setenv("PHASEKIT_WORKERS", "2", 1);
  CHECK(effective_workers(8) == 2);
  CHECK(effective_workers(1) == 1);
  CHECK(effective_workers(0) <= 2);
  ::setenv("PHASEKIT_WORKERS", "junk", 1);
  CHECK(effective_workers(3) == 3);
  ::unsetenv("PHASEKIT_WORKERS");
  CHECK(effective_workers(0) >= 1);
}

TEST_CASE("phase transition is deterministic across worker counts") {
  ExperimentConfig cfg = small_sweep();
  cfg.workers = 1;
  const std::string a = pt_csv(cfg);
  cfg.workers = 3;
  const std::string b = pt_csv(cfg);
  CHECK(a == b);
  CHECK(a.substr(0, a.find('\n')) == "ratio,trials,successes,success_rate,mean_rel_error");
  cfg.seed = 2;
  CHECK(pt_csv(cfg) != a);
}

TEST_CASE("phase transition rows are consistent") {
  ExperimentConfig cfg = small_sweep();
  const PhaseTransitionResult r = run_phase_transition(cfg);
  REQUIRE(r.rows.size() == 2);
  for (const auto& row : r.rows) {
    CHECK(row.trials == 4);
    CHECK(row.success_rate == doctest::Approx(static_cast<double>(row.successes) / row.trials));
  }
}

TEST_CASE("below injectivity nothing is recovered") {
  ExperimentConfig cfg;
  cfg.d = 32;
  cfg.trials = 10;
  cfg.grid = {1.0};
  const PhaseTransitionResult r = run_phase_transition(cfg);
  CHECK(r.rows[0].successes == 0);
}

TEST_CASE("success rate at N/d = 8 is at least that at N/d = 3") {
  ExperimentConfig cfg;
  cfg.d = 64;
  cfg.trials = 20;
  cfg.grid = {3.0, 8.0};
  const PhaseTransitionResult r = run_phase_transition(cfg);
  CHECK(r.rows[1].success_rate >= r.rows[0].success_rate);
  CHECK(r.rows[1].success_rate == 1.0);
}

TEST_CASE("convergence curve: budget parity, populated errors, determinism") {
  ExperimentConfig cfg;
  cfg.experiment = Experiment::Converge;
  cfg.d = 64;
  cfg.iterations = 1000;
  const ConvergenceResult r = run_convergence_curve(cfg);
  CHECK(r.alternating.rounds_used * 2 == r.wirtinger.rounds_used);
  CHECK(r.alternating.rounds_used == cfg.alt_rounds());
  for (const auto& row : r.alternating.trace) CHECK(row.rel_error.has_value());
  for (const auto& row : r.wirtinger.trace) CHECK(row.rel_error.has_value());
  CHECK(r.alt_final_rel_error < r.wf_final_rel_error);

  std::ostringstream a, b;
  write_convergence_csv(a, r);
  write_convergence_csv(b, run_convergence_curve(cfg));
  CHECK(a.str() == b.str());
  CHECK(a.str().substr(0, a.str().find('\n')) == "iter,algo,objective,rel_error");
  CHECK(a.str().find("\n1000,alternating,") != std::string::npos);
  CHECK(a.str().find("\n1000,wf,") != std::string::npos);
}

TEST_CASE("image experiment on a synthetic and a grayscale file") {
  const ImageChannels syn = synthetic_image(4, 3);
  REQUIRE(syn.channels.size() == 3);
  CHECK(syn.channels[0][0] == 0.0);
  CHECK(syn.channels[0][15] == doctest::Approx(1.0));
  CHECK(syn.channels[1][0] == doctest::Approx(1.0 / 10.0));
  CHECK_THROWS(synthetic_image(4, 2));

  ExperimentConfig cfg;
  apply_preset(cfg, "synthetic_image");
  cfg.image_size = 8;
  cfg.masks = 8;
  cfg.image_rounds = {20, 40};
  const ImageResult r = run_image_experiment(cfg);
  CHECK(r.channels == 1);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[1].rounds == 40);
  CHECK(r.rows[1].alt_rel_error <= r.rows[0].alt_rel_error);
  std::ostringstream os;
  write_image_csv(os, r);
  CHECK(os.str().find("40,80,") != std::string::npos);

  const fs::path path = fs::temp_directory_path() / "phasekit_bench_gray.pgm";
  {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n4 4\n255\n";
    for (int i = 0; i < 16; ++i) out.put(static_cast<char>(16 * i));
  }
  cfg.image = path;
  const ImageResult g = run_image_experiment(cfg);
  CHECK(g.channels == 1);
  CHECK(g.recovered_alt.channels.size() == 1);
  CHECK(g.width == 4);
  fs::remove(path);
  cfg.image = fs::temp_directory_path() / "phasekit_missing.pgm";
  CHECK_THROWS(run_image_experiment(cfg));
}

TEST_CASE("run_checks passes by default and fails on a sign error") {
  const CheckSummary ok = run_checks(ExperimentConfig{});
  CHECK(ok.all_passed());
  for (const auto& item : ok.items) {
    INFO(item.name);
    CHECK(item.passed);
    CHECK_FALSE(item.report.empty());
  }
  std::ostringstream os;
  write_check_json(os, ok);
  CHECK(os.str().find("\"all_passed\": true") != std::string::npos);

  CheckOverrides bad;
  bad.grad_E_x = [](const Ensemble& e, const SplitPoint& p, const RVector& b, double lambda) {
    const Residuals res = Residuals::compute(e, p, b);
    return CVector(-grad_E_x(e, res, p, lambda));
  };
  const CheckSummary broken = run_checks(ExperimentConfig{}, bad);
  CHECK_FALSE(broken.all_passed());
  bool grad_failed = false;
  for (const auto& item : broken.items) {
    if (item.name.rfind("gradient_E_x", 0) == 0) grad_failed = grad_failed || !item.passed;
  }
  CHECK(grad_failed);
}
