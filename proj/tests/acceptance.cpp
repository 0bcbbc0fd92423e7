// Acceptance suite. Prints one PASS/FAIL line per criterion.
// Usage: acceptance [criterion number]; without an argument every criterion runs.

#include "euler_oracle.hpp"

#include "semidelay/analysis.hpp"
#include "semidelay/network.hpp"
#include "semidelay/runner.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

using namespace semidelay;
namespace fs = std::filesystem;

namespace {

// Tolerances and limits.
constexpr double tol_scalar_constant = 1e-4;
constexpr double tol_scalar = 1e-2;
constexpr double tol_twonode_const = 1e-4;
constexpr double tol_twonode_varying = 1e-2;
constexpr double tol_cubic = 1e-3;
constexpr double tol_neutral_conv = 1e-3;
constexpr double tol_drift = 1e-6;
constexpr double min_decay = 10.0;
constexpr double tol_oracle = 1e-3;
constexpr double oracle_step = 1e-5;
constexpr double oracle_horizon = 10.0;
constexpr double min_order_smooth = 3.5;
constexpr double min_order_constant_delay = 2.0;
constexpr double min_order_scalar = 1.5;
constexpr double tol_sweep_limit = 1e-3;
constexpr double max_excursion = 1.0 + 1e-6;
constexpr double budget_scalar_seconds = 5.0;
constexpr double budget_oracle_seconds = 60.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Scenario corpus_scenario(const std::string& name) {
  for (auto& s : builtin_corpus()) {
    if (s.name == name) return s;
  }
  throw std::runtime_error("no corpus scenario " + name);
}

double alpha_gap(const RunArtifacts& run, double target) {
  return run.report.alpha_observed ? std::abs(*run.report.alpha_observed - target)
                                   : std::numeric_limits<double>::infinity();
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt::format("{:.9g}", *v) : "none"; }

double cubic_root_oracle() {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mid * mid * mid + mid - 1.0 < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Outcome scalar_constant_limit() {
  const auto start = Clock::now();
  const auto run = execute_scenario(corpus_scenario("scalar_sinshift_limiting"));
  const double elapsed = seconds_since(start);
  const double gap = alpha_gap(run, 0.75);
  return {gap <= tol_scalar_constant && elapsed <= budget_scalar_seconds,
          fmt::format("alpha_obs={} gap={:.3g} (tol {:g}) runtime={:.2f}s (limit {:g}s)",
                      fmt_opt(run.report.alpha_observed), gap, tol_scalar_constant, elapsed, budget_scalar_seconds)};
}

Outcome scalar_varying() {
  auto s = corpus_scenario("scalar_sinshift");
  s.integration.t_end = 200.0;
  const auto run = execute_scenario(s);
  const double gap = alpha_gap(run, 0.75);
  return {run.report.converged && gap <= tol_scalar,
          fmt::format("converged={} alpha_obs={} gap={:.4g} (tol {:g})", run.report.converged,
                      fmt_opt(run.report.alpha_observed), gap, tol_scalar)};
}

Outcome twonode_linear() {
  const auto c = execute_scenario(corpus_scenario("twonode_linear_limiting"));
  const auto v = execute_scenario(corpus_scenario("twonode_linear"));
  const double gc = alpha_gap(c, 0.5), gv = alpha_gap(v, 0.5);
  return {gc <= tol_twonode_const && gv <= tol_twonode_varying,
          fmt::format("constant: alpha_obs={} gap={:.3g} (tol {:g}); varying: alpha_obs={} gap={:.4g} (tol {:g})",
                      fmt_opt(c.report.alpha_observed), gc, tol_twonode_const,
                      fmt_opt(v.report.alpha_observed), gv, tol_twonode_varying)};
}

Outcome twonode_cubic() {
  const double root = cubic_root_oracle();
  const auto run = execute_scenario(corpus_scenario("twonode_cubic_limiting"));
  const double gap = alpha_gap(run, root);
  return {gap <= tol_cubic, fmt::format("root={:.9f} alpha_obs={} gap={:.3g} (tol {:g})", root,
                                        fmt_opt(run.report.alpha_observed), gap, tol_cubic)};
}

Outcome neutral_m3() {
  auto s = corpus_scenario("neutral_m3");
  std::mt19937_64 rng(20240605);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double c = u(rng);
  s.history = HistoryFunction::constant(s.history.span(), Vector::Constant(1, c));
  s.expect = {};
  s.analysis.convergence_tol = tol_neutral_conv;
  const auto run = execute_scenario(s);
  const auto viol = run.report.razumikhin_violations.size();
  return {run.report.converged && viol == 0,
          fmt::format("history={:.9g} converged={} alpha_obs={} razumikhin_violations={}", c,
                      run.report.converged, fmt_opt(run.report.alpha_observed), viol)};
}

Outcome conservation() {
  bool ok = true;
  std::string detail;
  int checked = 0;
  for (const auto& s : builtin_corpus()) {
    if (!s.constant_delays() || s.system.kind == SystemKind::cubic) continue;
    const auto run = execute_scenario(s);
    const auto drift = run.report.conservation_drift;
    ok = ok && drift && *drift <= tol_drift;
    detail += fmt::format("{}={} ", s.name, drift ? fmt::format("{:.3g}", *drift) : "missing");
    ++checked;
  }
  return {ok && checked > 0, fmt::format("{}(tol {:g})", detail, tol_drift)};
}

Outcome residual_decay() {
  bool ok = true;
  std::string detail;
  int checked = 0;
  for (const auto& s : builtin_corpus()) {
    if (s.constant_delays()) continue;
    const auto run = execute_scenario(s);
    const auto f = run.residual_decay;
    ok = ok && f && *f >= min_decay;
    detail += fmt::format("{}={} ", s.name, f ? fmt::format("{:.3g}", *f) : "undefined");
    ++checked;
  }
  return {ok && checked > 0, fmt::format("{}(min {:g})", detail, min_decay)};
}

Outcome oracle_equivalence() {
  const auto start = Clock::now();
  bool ok = true;
  double worst = 0.0;
  std::string worst_name;
  for (auto s : builtin_corpus()) {
    s.integration.t_end = oracle_horizon;
    const auto sys = s.build_system();
    const auto traj = integrate(sys, s.profiles, s.history, s.integration);
    const auto ref = oracle::euler(sys, s.profiles, s.history, s.integration.t0, oracle_horizon, oracle_step);
    const auto stride = static_cast<std::size_t>(std::llround(s.integration.step / oracle_step));
    double sup = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
      sup = std::max(sup, (traj.state(i) - ref.at_node(i * stride)).cwiseAbs().maxCoeff());
    }
    if (sup > worst) {
      worst = sup;
      worst_name = s.name;
    }
    ok = ok && sup <= tol_oracle;
  }
  const double elapsed = seconds_since(start);
  return {ok && elapsed <= budget_oracle_seconds,
          fmt::format("worst sup-norm gap {:.3g} on {} (tol {:g}) runtime={:.1f}s (limit {:g}s)", worst,
                      worst_name, tol_oracle, elapsed, budget_oracle_seconds)};
}

Outcome order_study() {
  const std::vector<double> steps{0.1, 0.05, 0.025};
  SystemMatrices decay;
  decay.E = Matrix::Constant(1, 1, -1.0);
  decay.F = {Matrix::Zero(1, 1)};
  const std::vector<DelayProfile> one{DelayProfile::constant(1.0)};
  const auto ramp = HistoryFunction::affine(1.0, Vector::Constant(1, 1.0), Vector::Constant(1, 1.0));
  const double smooth =
      observed_order(SystemRHS::linear(decay), one, HistoryFunction::constant(1.0, Vector::Constant(1, 1.0)),
                     5.0, steps);
  const double ramp_order = observed_order(SystemRHS::neutral(1), one, ramp, 5.0, steps);
  const std::vector<DelayProfile> sinshift{DelayProfile::builtin(DelayProfile::Kind::sin_shift, 1.0)};
  const double scalar = observed_order(SystemRHS::neutral(1), sinshift, ramp, 5.0, steps);
  return {smooth >= min_order_smooth && ramp_order >= min_order_constant_delay && scalar >= min_order_scalar,
          fmt::format("smooth={:.3f} (min {:g}) constant-delay={:.3f} (min {:g}) sin_shift={:.3f} (min {:g})",
                      smooth, min_order_smooth, ramp_order, min_order_constant_delay, scalar, min_order_scalar)};
}

Outcome sweep() {
  const auto s = corpus_scenario("twonode_linear_limiting");
  SweepSettings cfg;
  cfg.count = 20;
  cfg.amplitude = 1.0;
  cfg.seed = 7;
  cfg.integration = s.integration;
  cfg.convergence_tol = s.analysis.convergence_tol;
  const auto sys = s.build_system();
  const auto rep = semistability_sweep(sys, s.profiles, cfg);
  const auto F = s.build_system().matrices().F;
  const auto delays = limiting_of(sys, s.profiles).delays;
  double worst = 0.0;
  bool all_match = true;
  for (const auto& r : rep.runs) {
    if (!r.alpha_observed) {
      all_match = false;
      continue;
    }
    const double expected = predicted_consensus_linear(HistoryFunction::constant(max_delay_bound(s.profiles), r.initial),
                                                  F, delays);
    const double gap = std::abs(*r.alpha_observed - expected);
    worst = std::max(worst, gap);
    all_match = all_match && gap <= tol_sweep_limit;
  }
  const bool ok = rep.converged_count == cfg.count && all_match && rep.distinct_limits >= 2 &&
                  rep.max_excursion_ratio <= max_excursion;
  return {ok, fmt::format("{}: converged {}/{} worst gap {:.3g} (tol {:g}) distinct_limits={} "
                          "max_excursion_ratio={:.9g} (max {:.7g})",
                          s.name, rep.converged_count, cfg.count, worst, tol_sweep_limit, rep.distinct_limits,
                          rep.max_excursion_ratio, max_excursion)};
}

Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

Outcome weight_conditions() {
  const auto sys = corpus_scenario("twonode_cubic_limiting").build_system();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<Vector> samples;
  for (int i = 0; i < 1000; ++i) {
    Vector x(2);
    x << u(rng), u(rng);
    samples.push_back(x);
  }
  const std::vector<Matrix> reference{diag2(1, 0), diag2(0, 1)};
  const auto good = diagonal_weight_conditions(sys, reference, samples);

  // Violating weights and witness found by a brute-force scan over small integer weights.
  const std::vector<Matrix> bad{diag2(1, 0), diag2(0, 2)};
  Vector witness(2);
  witness << -1.0, 0.0;
  const auto flagged = diagonal_weight_conditions(sys, bad, std::vector<Vector>{witness});
  const bool caught = !flagged.passed() && !flagged.results[0].coupling_bound;
  return {good.passed() && caught,
          fmt::format("reference weights: {} failures in {} samples; frozen violator flagged={}", good.failures(),
                      samples.size(), caught)};
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    files[fs::relative(e.path(), root).string()] =
        std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  return files;
}

Outcome determinism() {
  const auto base = fs::temp_directory_path() / fmt::format("semidelay_accept_{}", ::getpid());
  fs::remove_all(base);
  std::ostringstream sink;
  const int a = command_corpus(base / "a", std::nullopt, 1, sink, sink);
  const int b = command_corpus(base / "b", std::nullopt, 2, sink, sink);
  const auto sa = snapshot(base / "a");
  const auto sb = snapshot(base / "b");
  fs::remove_all(base);
  std::size_t bytes = 0;
  for (const auto& [k, v] : sa) bytes += v.size();
  return {a == exit_ok && b == exit_ok && !sa.empty() && sa == sb,
          fmt::format("exit codes {} and {}; {} files, {} bytes, identical={}", a, b, sa.size(), bytes, sa == sb)};
}

struct Criterion {
  const char* title;
  std::function<Outcome()> check;
};

const std::vector<Criterion> criteria{
    {"scalar constant-delay limit", scalar_constant_limit},
    {"scalar time-varying limit", scalar_varying},
    {"two-node linear limits", twonode_linear},
    {"two-node cubic limit", twonode_cubic},
    {"neutral three-delay convergence", neutral_m3},
    {"conservation on constant-delay linear runs", conservation},
    {"residual decay on time-varying runs", residual_decay},
    {"agreement with explicit Euler", oracle_equivalence},
    {"observed order", order_study},
    {"semistability sweep", sweep},
    {"nonlinear consensus conditions", weight_conditions},
    {"corpus determinism", determinism},
};

}  // namespace

int main(int argc, char** argv) {
  std::size_t only = 0;
  if (argc > 1) {
    only = static_cast<std::size_t>(std::stoul(argv[1]));
    if (only < 1 || only > criteria.size()) {
      std::cerr << "criterion must be between 1 and " << criteria.size() << "\n";
      return 2;
    }
  }
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && only != i + 1) continue;
    Outcome o;
    try {
      o = criteria[i].check();
    } catch (const std::exception& e) {
      o = {false, fmt::format("error: {}", e.what())};
    }
    fmt::print("[{:02}] {} {}: {}\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].title, o.detail);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
