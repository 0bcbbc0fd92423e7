#pragma once

#include "semidelay/delays.hpp"
#include "semidelay/history.hpp"
#include "semidelay/systems.hpp"

#include <cstddef>
#include <span>

namespace semidelay {

struct IntegrationConfig {
  double step = 1e-3;
  double t0 = 0.0;
  double t_end = 10.0;
  int max_fixed_point_iters = 10;
  /// Relative to 1 + ||x||_inf, max norm.
  double fixed_point_tol = 1e-12;
  /// Output thinning for CSV export; the integration itself keeps every node.
  std::size_t record_every = 1;

  /// Throws ModelError when the invariants do not hold.
  void validate() const;
  /// Number of steps, the last one possibly shortened so that t_end is hit exactly.
  std::size_t step_count() const;
  /// Node time after `i` steps.
  double node_time(std::size_t i) const;

  friend bool operator==(const IntegrationConfig&, const IntegrationConfig&) = default;
};

struct StepResult {
  Vector x;
  Vector d;
  int iterations = 0;
};

struct IntegrationStats {
  std::size_t steps = 0;
  int max_iterations = 0;
  /// Steps whose stages needed values inside the step being computed.
  std::size_t implicit_steps = 0;
};

/// One classical RK4 step from traj.t_last() to traj.t_last() + dt.
///
/// Each stage at time s reads x(s - tau_k(s)). Reads at or before the last
/// node come from the trajectory. Reads inside the open step come from a
/// provisional Hermite segment built from the current iterate, and the whole
/// step is then repeated until the end state settles. Throws NonConvergentStep.
StepResult step_rk4_dde(const SystemRHS& sys, std::span<const DelayProfile> profiles,
                        const DenseTrajectory& traj, double dt, const IntegrationConfig& cfg,
                        std::size_t step_index = 0);

/// Integrates from the history over [cfg.t0, cfg.t_end] with fixed steps.
DenseTrajectory integrate(const SystemRHS& sys, std::span<const DelayProfile> profiles,
                          const HistoryFunction& history, const IntegrationConfig& cfg,
                          IntegrationStats* stats = nullptr);

/// Least-squares slope of log(error at t_probe) against log(step).
///
/// The reference solution uses min(steps) / 20. Every step must divide
/// t_probe - t0 and at least three are required.
double observed_order(const SystemRHS& sys, std::span<const DelayProfile> profiles,
                      const HistoryFunction& history, double t_probe,
                      std::span<const double> steps, double t0 = 0.0);

}  // namespace semidelay
