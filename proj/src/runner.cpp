#include "semidelay/runner.hpp"

#include "semidelay/error.hpp"

#include <fmt/format.h>

#include <atomic>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

namespace semidelay {

namespace fs = std::filesystem;

namespace {

std::string num(double v) { return fmt::format("{:.17g}", v); }

std::string num(const std::optional<double>& v) { return v ? num(*v) : "none"; }

std::string flag(bool b) { return b ? "true" : "false"; }

double reach_window(std::span<const DelayProfile> profiles) {
  const double w = max_delay_bound(profiles);
  return w > 0.0 ? w : 1.0;
}

std::vector<double> limits_of(std::span<const DelayProfile> profiles) {
  std::vector<double> out;
  for (const auto& p : profiles) out.push_back(p.limit());
  return out;
}

std::optional<double> gap_of(const VerificationReport& r) {
  if (!r.alpha_predicted || !r.alpha_observed) return std::nullopt;
  return std::abs(*r.alpha_observed - *r.alpha_predicted);
}

void check_expectations(RunArtifacts& run) {
  const Expectation& e = run.scenario.expect;
  const VerificationReport& r = run.report;
  auto fail = [&](std::string msg) { run.failures.push_back(std::move(msg)); };
  if (e.converged && *e.converged != r.converged) {
    fail(fmt::format("converged = {}, expected {}", flag(r.converged), flag(*e.converged)));
  }
  if (e.alpha_tol) {
    const double tol = *e.alpha_tol * run.tolerance_scale;
    const auto gap = gap_of(r);
    if (!gap) {
      fail("alpha gap unavailable");
    } else if (!(*gap <= tol)) {
      fail(fmt::format("alpha gap {} exceeds {}", num(*gap), num(tol)));
    }
  }
  if (e.drift_tol) {
    const double tol = *e.drift_tol * run.tolerance_scale;
    if (!r.conservation_drift) {
      fail("conservation drift unavailable");
    } else if (!(*r.conservation_drift <= tol)) {
      fail(fmt::format("conservation drift {} exceeds {}", num(*r.conservation_drift), num(tol)));
    }
  }
  if (e.residual_decay) {
    if (!run.residual_decay) {
      fail("residual decay factor unavailable");
    } else if (!(*run.residual_decay >= *e.residual_decay)) {
      fail(fmt::format("residual decay factor {} below {}", num(*run.residual_decay),
                       num(*e.residual_decay)));
    }
  }
  if (e.razumikhin_clean) {
    const bool clean = r.razumikhin_violations.empty();
    if (clean != *e.razumikhin_clean) {
      fail(fmt::format("razumikhin violations = {}, expected clean = {}",
                       r.razumikhin_violations.size(), flag(*e.razumikhin_clean)));
    }
  }
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError(fmt::format("cannot write '{}'", path.string()));
  return os;
}

void close_output(std::ofstream& os, const fs::path& path) {
  os.flush();
  if (!os) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError(fmt::format("cannot create directory '{}': {}", dir.string(), ec.message()));
  }
}

template <class Row>
void write_series(const fs::path& path, std::string_view header, std::size_t count, std::size_t every,
                  Row&& row) {
  std::ofstream os = open_output(path);
  os << header << '\n';
  every = std::max<std::size_t>(every, 1);
  for (std::size_t i = 0; i < count; ++i) {
    if (i % every != 0 && i + 1 != count) continue;
    os << row(i) << '\n';
  }
  close_output(os, path);
}

}  // namespace

Scenario with_step(const Scenario& s, double step) {
  Scenario out = s;
  const double ratio = s.integration.step / step;
  out.integration.step = step;
  out.integration.record_every = static_cast<std::size_t>(
      std::max(1.0, std::round(static_cast<double>(s.integration.record_every) * ratio)));
  return out;
}

RunArtifacts execute_scenario(const Scenario& s, double tolerance_scale) {
  s.validate();
  const SystemRHS sys = s.build_system();
  IntegrationStats stats;
  DenseTrajectory traj = integrate(sys, s.profiles, s.history, s.integration, &stats);

  RunArtifacts run{s, std::move(traj), stats, {}, {}, {}, {}, {}, tolerance_scale, {}};
  const DenseTrajectory& x = run.trajectory;
  VerificationReport& rep = run.report;
  const std::vector<double> limits = limits_of(s.profiles);
  const double window = reach_window(s.profiles);
  const bool constant = s.constant_delays();

  try {
    rep.alpha_predicted = sys.is_linear()
                              ? predicted_consensus_linear(s.history, sys.matrices().F, limits)
                              : predicted_consensus_nonlinear(s.history, sys, limits);
  } catch (const RootError& e) {
    rep.notes += fmt::format("no predicted consensus value: {}. ", e.what());
  }
  if (!constant) rep.notes += "alpha_predicted uses the history of this run with the limiting delays. ";

  const ConvergenceResult conv = convergence_check(x, s.analysis.convergence_tol, window);
  rep.converged = conv.converged;
  rep.alpha_observed = conv.alpha;
  rep.convergence_time = conv.time;

  rep.residual_series = residual_series(x, sys, s.profiles, limits);
  run.residual_decay = residual_decay_factor(rep.residual_series);

  RazumikhinResult raz = razumikhin_certificate(x, window, s.analysis.razumikhin_slack);
  run.extrema = std::move(raz.extrema);
  rep.razumikhin_violations = std::move(raz.violations);

  if (constant && sys.is_linear()) {
    run.conserved = conserved_series(x, sys.matrices().F, limits);
    rep.conservation_drift = relative_drift(run.conserved);
  }
  if (constant && s.n == 1 && s.profiles.size() == 1) {
    run.krasovskii = std::pair{krasovskii_functional(x, limits[0], x.t0()),
                               krasovskii_functional(x, limits[0], x.t_last())};
  }
  if (!rep.notes.empty() && rep.notes.back() == ' ') rep.notes.pop_back();
  check_expectations(run);
  return run;
}

std::string format_report(const RunArtifacts& run) {
  const Scenario& s = run.scenario;
  const VerificationReport& r = run.report;
  std::ostringstream os;
  auto line = [&](std::string_view key, const std::string& value) { os << key << " = " << value << '\n'; };
  line("scenario", s.name);
  line("system", std::string(to_string(s.system.kind)));
  line("n", std::to_string(s.n));
  line("delays", std::to_string(s.profiles.size()));
  line("constant_delays", flag(s.constant_delays()));
  line("step", num(s.integration.step));
  line("t0", num(s.integration.t0));
  line("t_end", num(s.integration.t_end));
  line("steps", std::to_string(run.stats.steps));
  line("implicit_steps", std::to_string(run.stats.implicit_steps));
  line("max_fixed_point_iterations", std::to_string(run.stats.max_iterations));
  line("alpha_predicted", num(r.alpha_predicted));
  line("alpha_observed", num(r.alpha_observed));
  line("alpha_gap", num(gap_of(r)));
  line("converged", flag(r.converged));
  line("convergence_time", num(r.convergence_time));
  const auto& x = run.trajectory;
  line("final_spread", num(x.state(x.size() - 1).maxCoeff() - x.state(x.size() - 1).minCoeff()));
  line("residual_initial", num(r.residual_series.empty() ? 0.0 : r.residual_series.front().value));
  line("residual_final", num(r.residual_series.empty() ? 0.0 : r.residual_series.back().value));
  line("residual_decay_factor", num(run.residual_decay));
  line("razumikhin_violations", std::to_string(r.razumikhin_violations.size()));
  line("razumikhin_max_violation",
       num(r.razumikhin_violations.empty()
               ? 0.0
               : std::max_element(r.razumikhin_violations.begin(), r.razumikhin_violations.end(),
                                  [](const auto& a, const auto& b) { return a.magnitude < b.magnitude; })
                     ->magnitude));
  line("conservation_drift", num(r.conservation_drift));
  if (run.krasovskii) {
    line("krasovskii_initial", num(run.krasovskii->first));
    line("krasovskii_final", num(run.krasovskii->second));
  }
  line("tolerance_scale", num(run.tolerance_scale));
  line("expectations", run.scenario.expect.empty() ? "none" : (run.meets_expectations() ? "pass" : "fail"));
  for (std::size_t i = 0; i < run.failures.size(); ++i) line(fmt::format("failure_{}", i + 1), run.failures[i]);
  line("notes", r.notes.empty() ? "none" : r.notes);
  return os.str();
}

void write_run_outputs(const RunArtifacts& run, const fs::path& dir) {
  ensure_directory(dir);
  const std::size_t every = run.scenario.integration.record_every;
  {
    const fs::path p = dir / "trajectory.csv";
    std::ofstream os = open_output(p);
    run.trajectory.write_csv(os, every);
    close_output(os, p);
  }
  {
    const fs::path p = dir / "report.txt";
    std::ofstream os = open_output(p);
    os << format_report(run);
    close_output(os, p);
  }
  {
    const fs::path p = dir / "scenario.scn";
    std::ofstream os = open_output(p);
    os << serialize_scenario(run.scenario);
    close_output(os, p);
  }
  const auto& res = run.report.residual_series;
  write_series(dir / "residual.csv", "t,residual", res.size(), every,
               [&](std::size_t i) { return fmt::format("{:.17g},{:.17g}", res[i].t, res[i].value); });
  write_series(dir / "extrema.csv", "t,max,min", run.extrema.size(), every, [&](std::size_t i) {
    const auto& e = run.extrema[i];
    return fmt::format("{:.17g},{:.17g},{:.17g}", e.t, e.max, e.min);
  });
  if (!run.conserved.empty()) {
    write_series(dir / "conserved.csv", "t,Q", run.conserved.size(), 1, [&](std::size_t i) {
      return fmt::format("{:.17g},{:.17g}", run.conserved[i].t, run.conserved[i].value);
    });
  }
}

// ---------------------------------------------------------------------------
// Commands

namespace {

int report_error(std::ostream& err, int code, const std::string& what) {
  err << "error: " << what << '\n';
  return code;
}

}  // namespace

int command_run(const fs::path& scenario_path, const fs::path& out_dir, std::ostream& out,
                std::ostream& err) {
  Scenario s;
  try {
    s = load_scenario(scenario_path);
    s.validate();
  } catch (const InputError& e) {
    return report_error(err, exit_input_error, e.what());
  }
  std::optional<RunArtifacts> run;
  try {
    run.emplace(execute_scenario(s));
  } catch (const InputError& e) {
    return report_error(err, exit_input_error, e.what());
  } catch (const Error& e) {
    return report_error(err, exit_numeric_failure, fmt::format("run '{}' failed: {}", s.name, e.what()));
  }
  try {
    write_run_outputs(*run, out_dir / s.name);
  } catch (const Error& e) {
    return report_error(err, exit_io_failure, e.what());
  }
  out << format_report(*run);
  if (s.expect.converged && *s.expect.converged != run->report.converged) {
    err << fmt::format("check failed: converged = {}, expected {}\n", flag(run->report.converged),
                       flag(*s.expect.converged));
    return exit_check_failure;
  }
  return exit_ok;
}

int command_validate(const fs::path& scenario_path, std::ostream& out, std::ostream& err) {
  Scenario s;
  try {
    s = load_scenario(scenario_path);
  } catch (const InputError& e) {
    return report_error(err, exit_input_error, e.what());
  }

  struct Check {
    std::string name;
    bool ok;
    std::string detail;
  };
  std::vector<Check> checks;

  std::optional<SystemRHS> sys;
  try {
    sys = s.build_system();
    checks.push_back({"system_build", true, std::string(to_string(s.system.kind))});
  } catch (const Error& e) {
    checks.push_back({"system_build", false, e.what()});
  }
  if (sys) {
    const LaplacianReport lap = validate_laplacian_structure(sys->matrices());
    checks.push_back({"row_sums_zero", lap.row_sums_zero, fmt::format("max |(E+F)1| = {:.3g}", lap.row_sum_error)});
    checks.push_back({"col_sums_zero", lap.col_sums_zero, fmt::format("max |(E+F)'1| = {:.3g}", lap.col_sum_error)});
    checks.push_back({"nonnegative_Fk", lap.nonnegative_Fk, ""});
    checks.push_back({"rank_n_minus_1", lap.rank_is_n_minus_1,
                      fmt::format("rank {} for n = {}", lap.rank, s.n)});
  }

  for (std::size_t k = 0; k < s.profiles.size(); ++k) {
    const DelayProfile& p = s.profiles[k];
    const std::string label = fmt::format("delay_{}", k + 1);
    try {
      const double limit = p.limit();
      const double bound = p.bound();
      bool within = limit >= 0.0 && limit <= bound;
      // Spot check on a log grid.
      for (int i = 0; i <= 600 && within; ++i) {
        const double t = i == 0 ? 0.0 : std::pow(10.0, -3.0 + i * 0.01);
        const double v = p.value(t);
        within = v >= 0.0 && v <= bound * (1.0 + 1e-12);
      }
      checks.push_back({label, within,
                        fmt::format("{} limit {:.6g} bound {:.6g}", to_string(p.kind()), limit, bound)});
    } catch (const Error& e) {
      checks.push_back({label, false, e.what()});
    }
  }

  const double reach = max_delay_bound(s.profiles);
  checks.push_back({"history_coverage", s.history.span() >= reach * (1.0 - 1e-12),
                    fmt::format("history span {:.6g}, delay bound {:.6g}", s.history.span(), reach)});

  bool all = true;
  out << fmt::format("{:<18} {:<6} {}\n", "check", "result", "detail");
  for (const auto& c : checks) {
    out << fmt::format("{:<18} {:<6} {}\n", c.name, c.ok ? "pass" : "FAIL", c.detail);
    all = all && c.ok;
  }
  out << (all ? "all checks passed\n" : "some checks failed\n");
  return all ? exit_ok : exit_check_failure;
}

int command_corpus(const fs::path& out_dir, std::optional<double> step, unsigned jobs,
                   std::ostream& out, std::ostream& err) {
  std::vector<Scenario> corpus = builtin_corpus();
  std::vector<double> scales(corpus.size(), 1.0);
  if (step) {
    if (!(*step > 0.0) || !std::isfinite(*step)) {
      return report_error(err, exit_input_error, "--step must be positive");
    }
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      scales[i] = std::max(1.0, *step / corpus[i].integration.step);
      corpus[i] = with_step(corpus[i], *step);
      try {
        corpus[i].integration.validate();
      } catch (const Error& e) {
        return report_error(err, exit_input_error, e.what());
      }
    }
  }

  const fs::path summary_path = out_dir / "summary.csv";
  try {
    ensure_directory(out_dir);
    std::ofstream probe = open_output(summary_path);
    probe << "";
    close_output(probe, summary_path);
  } catch (const Error& e) {
    return report_error(err, exit_io_failure, e.what());
  }

  struct Slot {
    std::optional<RunArtifacts> run;
    std::string error;
    int code = exit_ok;
  };
  std::vector<Slot> slots(corpus.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < corpus.size(); i = next++) {
      Slot& slot = slots[i];
      try {
        slot.run.emplace(execute_scenario(corpus[i], scales[i]));
      } catch (const Error& e) {
        slot.error = e.what();
        slot.code = exit_numeric_failure;
        continue;
      }
      try {
        write_run_outputs(*slot.run, out_dir / corpus[i].name);
      } catch (const Error& e) {
        slot.error = e.what();
        slot.code = exit_io_failure;
      }
    }
  };
  jobs = std::clamp<unsigned>(jobs, 1, static_cast<unsigned>(corpus.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  int code = exit_ok;
  std::ostringstream csv;
  csv << "scenario,alpha_predicted,alpha_observed,gap,residual_decay,razumikhin_violations,"
         "conservation_drift,status\n";
  out << fmt::format("{:<26} {:>12} {:>12} {:>10} {:>10} {:>5} {:>10}  {}\n", "scenario", "alpha_pred",
                     "alpha_obs", "gap", "decay", "viol", "drift", "status");
  auto short_num = [](const std::optional<double>& v) { return v ? fmt::format("{:.6g}", *v) : std::string("-"); };
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Slot& slot = slots[i];
    const std::string& name = corpus[i].name;
    if (!slot.run) {
      code = std::max(code, slot.code);
      csv << fmt::format("{},none,none,none,none,none,none,error\n", name);
      out << fmt::format("{:<26} error: {}\n", name, slot.error);
      continue;
    }
    const RunArtifacts& r = *slot.run;
    const bool ok = r.meets_expectations() && slot.code == exit_ok;
    if (!ok) code = std::max(code, slot.code == exit_ok ? int(exit_check_failure) : slot.code);
    const std::string status = slot.code != exit_ok ? "io_error" : (ok ? "pass" : "fail");
    csv << fmt::format("{},{},{},{},{},{},{},{}\n", name, num(r.report.alpha_predicted),
                       num(r.report.alpha_observed), num(gap_of(r.report)), num(r.residual_decay),
                       r.report.razumikhin_violations.size(), num(r.report.conservation_drift), status);
    out << fmt::format("{:<26} {:>12} {:>12} {:>10} {:>10} {:>5} {:>10}  {}\n", name,
                       short_num(r.report.alpha_predicted), short_num(r.report.alpha_observed),
                       short_num(gap_of(r.report)), short_num(r.residual_decay),
                       r.report.razumikhin_violations.size(), short_num(r.report.conservation_drift),
                       status);
    for (const auto& f : r.failures) out << "    " << f << '\n';
    if (slot.code != exit_ok) err << "error: " << slot.error << '\n';
  }
  try {
    std::ofstream os = open_output(summary_path);
    os << csv.str();
    close_output(os, summary_path);
  } catch (const Error& e) {
    return report_error(err, exit_io_failure, e.what());
  }
  return code;
}

int command_sweep(const SweepCommand& cmd, std::ostream& out, std::ostream& err) {
  if (cmd.count < 2) return report_error(err, exit_input_error, "--count must be at least 2");
  if (!(cmd.amplitude > 0.0) || !std::isfinite(cmd.amplitude)) {
    return report_error(err, exit_input_error, "--amplitude must be positive");
  }
  Scenario s;
  std::optional<SystemRHS> sys;
  try {
    s = load_scenario(cmd.scenario_path);
    s.validate();
    sys = s.build_system();
  } catch (const Error& e) {
    return report_error(err, exit_input_error, e.what());
  }

  SweepSettings settings;
  settings.count = cmd.count;
  settings.amplitude = cmd.amplitude;
  settings.seed = cmd.seed.value_or(s.seed);
  settings.convergence_tol = s.analysis.convergence_tol;
  settings.integration = s.integration;
  settings.jobs = cmd.jobs;
  SweepReport rep;
  try {
    rep = semistability_sweep(*sys, s.profiles, settings);
  } catch (const Error& e) {
    return report_error(err, exit_input_error, e.what());
  }

  std::ostringstream csv;
  csv << "run";
  for (Index i = 0; i < s.n; ++i) csv << ",phi_" << (i + 1);
  csv << ",ok,converged,alpha_observed,alpha_predicted,gap,excursion_ratio,error\n";
  for (const auto& r : rep.runs) {
    csv << r.index;
    for (Index i = 0; i < r.initial.size(); ++i) csv << ',' << num(r.initial[i]);
    std::optional<double> gap;
    if (r.alpha_observed && r.alpha_predicted) gap = std::abs(*r.alpha_observed - *r.alpha_predicted);
    csv << ',' << flag(r.ok) << ',' << flag(r.converged) << ',' << num(r.alpha_observed) << ','
        << num(r.alpha_predicted) << ',' << num(gap) << ',' << num(r.excursion_ratio) << ','
        << (r.error.empty() ? "" : "\"" + r.error + "\"") << '\n';
  }
  std::ostringstream summary;
  summary << "scenario = " << s.name << '\n'
          << "count = " << cmd.count << '\n'
          << "amplitude = " << num(cmd.amplitude) << '\n'
          << "seed = " << settings.seed << '\n'
          << "converged = " << rep.converged_count << '\n'
          << "failed = " << rep.failed_count << '\n'
          << "distinct_limits = " << rep.distinct_limits << '\n'
          << "limit_min = " << num(rep.limit_min) << '\n'
          << "limit_max = " << num(rep.limit_max) << '\n'
          << "max_excursion_ratio = " << num(rep.max_excursion_ratio) << '\n'
          << "excursion_note = numerical proxy for Lyapunov stability\n";

  try {
    const fs::path dir = cmd.out_dir / (s.name + "_sweep");
    ensure_directory(dir);
    for (const auto& [file, text] : {std::pair{"sweep.csv", csv.str()}, std::pair{"summary.txt", summary.str()}}) {
      std::ofstream os = open_output(dir / file);
      os << text;
      close_output(os, dir / file);
    }
  } catch (const Error& e) {
    return report_error(err, exit_io_failure, e.what());
  }
  out << summary.str();
  return rep.failed_count > 0 ? exit_numeric_failure : exit_ok;
}

}  // namespace semidelay
