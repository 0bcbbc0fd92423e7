#pragma once

#include "semidelay/analysis.hpp"
#include "semidelay/scenario.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace semidelay {

enum ExitCode : int {
  exit_ok = 0,
  exit_check_failure = 1,
  exit_input_error = 2,
  exit_numeric_failure = 3,
  exit_io_failure = 4,
};

/// Everything one scenario run produces.
struct RunArtifacts {
  Scenario scenario;
  DenseTrajectory trajectory;
  IntegrationStats stats;
  VerificationReport report;
  std::optional<double> residual_decay;
  std::vector<ExtremaSample> extrema;
  std::vector<TimeValue> conserved;
  /// Krasovskii functional at t0 and t_end; scalar single-delay constant runs only.
  std::optional<std::pair<double, double>> krasovskii;
  /// Multiplier applied to alpha_tol and drift_tol.
  double tolerance_scale = 1.0;
  /// Expectation checks that did not hold.
  std::vector<std::string> failures;

  bool meets_expectations() const noexcept { return failures.empty(); }
};

/// Integrates and analyses a validated scenario. Numeric failures propagate as Error.
RunArtifacts execute_scenario(const Scenario& s, double tolerance_scale = 1.0);

/// report.txt contents: one `key = value` line per metric.
std::string format_report(const RunArtifacts& run);

/// Writes trajectory.csv, report.txt, residual.csv, extrema.csv,
/// conserved.csv (when computed) and scenario.scn into `dir`. Throws IoError.
void write_run_outputs(const RunArtifacts& run, const std::filesystem::path& dir);

/// Scenario with a new step; record_every is rescaled to keep the CSV density.
Scenario with_step(const Scenario& s, double step);

// Command entry points. Each returns an ExitCode and writes diagnostics to `err`.

int command_run(const std::filesystem::path& scenario_path, const std::filesystem::path& out_dir,
                std::ostream& out, std::ostream& err);

int command_validate(const std::filesystem::path& scenario_path, std::ostream& out, std::ostream& err);

int command_corpus(const std::filesystem::path& out_dir, std::optional<double> step, unsigned jobs,
                   std::ostream& out, std::ostream& err);

struct SweepCommand {
  std::filesystem::path scenario_path;
  std::size_t count = 20;
  double amplitude = 1.0;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir;
  unsigned jobs = 1;
};

int command_sweep(const SweepCommand& cmd, std::ostream& out, std::ostream& err);

}  // namespace semidelay
