#pragma once

#include "semidelay/delays.hpp"
#include "semidelay/history.hpp"
#include "semidelay/integrator.hpp"
#include "semidelay/systems.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace semidelay {

struct TimeValue {
  double t = 0.0;
  double value = 0.0;
};

struct Violation {
  double t = 0.0;
  double magnitude = 0.0;
};

/// Per-run summary of what the theory predicts and what the simulation shows.
struct VerificationReport {
  std::optional<double> alpha_predicted;
  std::optional<double> alpha_observed;
  bool converged = false;
  std::optional<double> convergence_time;
  std::vector<TimeValue> residual_series;
  std::vector<Violation> razumikhin_violations;
  /// Only for constant-delay linear runs.
  std::optional<double> conservation_drift;
  std::string notes;
};

// ---------------------------------------------------------------------------
// Quadrature

/// Integral of fn(phi(theta)) over [a, b] inside the history domain.
/// Split at sample abscissae; composite Simpson with panel doubling to `tol`.
double integrate_history(const HistoryFunction& history, double a, double b,
                         const std::function<double(const Vector&)>& fn, double tol = 1e-10);

/// Integral of fn(x(s)) over [a, b] for a dense trajectory, Simpson on every
/// node interval (and on short panels across the history part).
double integrate_trajectory(const DenseTrajectory& traj, double a, double b,
                            const std::function<double(const Vector&)>& fn);

// ---------------------------------------------------------------------------
// Predicted consensus values

/// alpha* = (1'phi(0) + sum_k int_{-h_k}^0 1'F_k phi) / (n + sum_k h_k 1'F_k 1).
double predicted_consensus_linear(const HistoryFunction& history, std::span<const Matrix> F,
                                  std::span<const double> delays);

/// Root of n a + sum_k h_k 1'g_k(a 1) = 1'phi(0) + sum_k int_{-h_k}^0 1'g_k(phi).
/// Bisection on a bracket, then one finite-difference Newton polish.
/// Throws RootError if the left side is not increasing or no bracket is found.
double predicted_consensus_nonlinear(const HistoryFunction& history, const SystemRHS& sys,
                                     std::span<const double> delays);

// ---------------------------------------------------------------------------
// Limiting residual X(t)

/// || sum_k g_k(x(t - tau_k(t))) - g_k(x(t - h_k)) ||_2.
double limiting_residual(const DenseTrajectory& traj, const SystemRHS& sys,
                         std::span<const DelayProfile> profiles, std::span<const double> delays,
                         double t);

/// X(t) at every node.
std::vector<TimeValue> residual_series(const DenseTrajectory& traj, const SystemRHS& sys,
                                       std::span<const DelayProfile> profiles,
                                       std::span<const double> delays);

/// Mean of the first tenth of the series divided by the mean of the last tenth.
/// Empty when the first-tenth mean is zero (nothing to decay).
std::optional<double> residual_decay_factor(std::span<const TimeValue> series);

// ---------------------------------------------------------------------------
// Certificates

struct ExtremaSample {
  double t = 0.0;
  double max = 0.0;
  double min = 0.0;
};

struct RazumikhinResult {
  std::vector<ExtremaSample> extrema;
  std::vector<Violation> violations;
};

/// Windowed extrema M(t) = max_{[t-h,t]} max_i x_i and m(t) = min_{[t-h,t]} min_i x_i
/// on the node grid. A violation is an increase of M or a decrease of m by
/// more than slack * (1 + ||x(t)||_inf) between consecutive nodes.
RazumikhinResult razumikhin_certificate(const DenseTrajectory& traj, double window,
                                        double slack = 1e-9);

/// Q(t) = 1'x(t) + sum_k int_{t-h_k}^t 1'F_k x(s) ds.
double conserved_quantity(const DenseTrajectory& traj, std::span<const Matrix> F,
                          std::span<const double> delays, double t);

/// Q at roughly `samples` evenly spread nodes (always including the first and last).
std::vector<TimeValue> conserved_series(const DenseTrajectory& traj, std::span<const Matrix> F,
                                        std::span<const double> delays, std::size_t samples = 500);

/// max_t |Q(t) - Q(t0)| / |Q(t0)| over a series (absolute drift if Q(t0) = 0).
double relative_drift(std::span<const TimeValue> series);

/// V = x(t)^2 + int_{t-h}^t x(s)^2 ds for a scalar trajectory.
double krasovskii_functional(const DenseTrajectory& traj, double window, double t);

// ---------------------------------------------------------------------------
// Convergence

struct WindowStats {
  double max = 0.0;
  double min = 0.0;
  double mean = 0.0;
  std::size_t samples = 0;
};

/// Extrema and mean over all agents and all grid points in [a, b].
/// History parts are sampled at the first step size.
WindowStats window_stats(const DenseTrajectory& traj, double a, double b);

struct ConvergenceResult {
  bool converged = false;
  std::optional<double> alpha;
  std::optional<double> time;
};

/// Converged iff the final window has spread <= tol and its mean moved by
/// <= tol/10 against the preceding window. The reported time is the first
/// window end t0 + k*window where the same test passes.
ConvergenceResult convergence_check(const DenseTrajectory& traj, double tol, double window);

// ---------------------------------------------------------------------------
// Semistability sweep

struct SweepSettings {
  std::size_t count = 20;
  double amplitude = 1.0;
  std::uint64_t seed = 0;
  double convergence_tol = 1e-3;
  /// Limits closer than this count as the same equilibrium.
  double distinct_tol = 1e-6;
  IntegrationConfig integration;
  unsigned jobs = 1;
};

struct SweepRun {
  std::size_t index = 0;
  Vector initial;
  bool ok = false;
  std::string error;
  bool converged = false;
  std::optional<double> alpha_observed;
  std::optional<double> alpha_predicted;
  /// max_t ||x(t) - a 1||_inf / ||phi - a 1||_inf; a numerical proxy for Lyapunov stability.
  double excursion_ratio = 0.0;
};

struct SweepReport {
  std::vector<SweepRun> runs;
  std::size_t converged_count = 0;
  std::size_t failed_count = 0;
  std::size_t distinct_limits = 0;
  double limit_min = 0.0;
  double limit_max = 0.0;
  double max_excursion_ratio = 0.0;
};

/// The constant history of run `index`, uniform in [-amplitude, amplitude]^n.
Vector sweep_history_value(std::uint64_t seed, std::size_t index, Index n, double amplitude);

/// Integrates `count` random constant histories and summarizes their limits.
SweepReport semistability_sweep(const SystemRHS& sys, std::span<const DelayProfile> profiles,
                                const SweepSettings& settings);

// ---------------------------------------------------------------------------
// Nonlinear consensus conditions

/// Entrywise Drazin inverse of a diagonal matrix. Throws ModelError otherwise.
Matrix drazin_diag(const Matrix& lambda);

struct WeightConditionSample {
  Vector x;
  bool mask_identity = false;  // P_k^D P_k g_k(x) = g_k(x) for all k
  bool coupling_bound = false; // sum_k g_k' P_k g_k <= f' P f
  bool drift_bound = false;    // sum_k f' P P_k^D P f <= f' P f
  bool zero_sum = false;       // 1'(f + sum_k g_k) = 0

  bool passed() const noexcept { return mask_identity && coupling_bound && drift_bound && zero_sum; }
};

struct WeightCertificate {
  std::vector<Matrix> P;
  Matrix P_total;
  std::vector<WeightConditionSample> results;

  bool passed() const noexcept;
  std::size_t failures() const noexcept;
};

/// Checks the diagonal-weight conditions for x' = f(x) + sum_k g_k(x(t - tau_k))
/// at every sample. Throws ModelError if a P_k is not diagonal nonnegative or
/// sum_k P_k is not positive definite.
WeightCertificate diagonal_weight_conditions(const SystemRHS& sys, std::span<const Matrix> P,
                                    std::span<const Vector> samples, double tol = 1e-12);

}  // namespace semidelay
