#include "semidelay/integrator.hpp"

#include "semidelay/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <vector>

namespace semidelay {

void IntegrationConfig::validate() const {
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw ModelError(fmt::format("integration step must be positive, got {}", step));
  }
  if (!std::isfinite(t0) || !std::isfinite(t_end) || !(t_end > t0)) {
    throw ModelError(fmt::format("integration needs t_end > t0, got t0={} t_end={}", t0, t_end));
  }
  if (step > t_end - t0) {
    throw ModelError(fmt::format("step {} exceeds the horizon {}", step, t_end - t0));
  }
  if (max_fixed_point_iters < 1) {
    throw ModelError("max_fixed_point_iters must be >= 1");
  }
  if (!(fixed_point_tol > 0.0)) {
    throw ModelError("fixed_point_tol must be positive");
  }
}

std::size_t IntegrationConfig::step_count() const {
  const double ratio = (t_end - t0) / step;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, nearest)) {
    return static_cast<std::size_t>(nearest);
  }
  return static_cast<std::size_t>(std::ceil(ratio));
}

double IntegrationConfig::node_time(std::size_t i) const {
  if (i >= step_count()) return t_end;
  return t0 + static_cast<double>(i) * step;
}

namespace {

// Evaluates the right-hand side at stage time s, reading delayed states either
// from the finished trajectory or from the provisional segment of the open step.
class StageEvaluator {
 public:
  StageEvaluator(const SystemRHS& sys, std::span<const DelayProfile> profiles,
                 const DenseTrajectory& traj)
      : sys_(sys),
        profiles_(profiles),
        traj_(traj),
        delayed_(profiles.size(), Vector(sys.dimension())),
        t_(traj.t_last()),
        x_t_(traj.state(traj.size() - 1)),
        d_t_(traj.derivative(traj.size() - 1)) {}

  void set_provisional(double t_end, const Vector& x_end, const Vector& d_end) {
    t_end_ = t_end;
    x_end_ = &x_end;
    d_end_ = &d_end;
  }

  void operator()(double s, const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) {
    for (std::size_t k = 0; k < profiles_.size(); ++k) {
      const double q = s - profiles_[k].value(s);
      if (q <= t_) {
        traj_.evaluate(q, delayed_[k]);
      } else {
        used_provisional_ = true;
        hermite_interpolate(t_, x_t_, d_t_, t_end_, *x_end_, *d_end_, std::min(q, t_end_),
                            delayed_[k]);
      }
    }
    sys_.eval(x, delayed_, out);
  }

  bool used_provisional() const noexcept { return used_provisional_; }
  void reset_flag() noexcept { used_provisional_ = false; }

 private:
  const SystemRHS& sys_;
  std::span<const DelayProfile> profiles_;
  const DenseTrajectory& traj_;
  std::vector<Vector> delayed_;
  double t_;
  Vector x_t_;
  Vector d_t_;
  double t_end_ = 0.0;
  const Vector* x_end_ = nullptr;
  const Vector* d_end_ = nullptr;
  bool used_provisional_ = false;
};

void check_problem(const SystemRHS& sys, std::span<const DelayProfile> profiles,
                   const HistoryFunction& history) {
  if (profiles.size() != sys.delay_count()) {
    throw DimensionError(fmt::format("system has {} delays but {} profiles were given",
                                     sys.delay_count(), profiles.size()));
  }
  if (history.dimension() != sys.dimension()) {
    throw DimensionError(fmt::format("history has dimension {} but the system has {}",
                                     history.dimension(), sys.dimension()));
  }
  const double reach = max_delay_bound(profiles);
  if (history.span() < reach * (1.0 - 1e-12)) {
    throw OutOfRangeError(fmt::format(
        "history covers [-{:.17g}, 0] but delays reach back {:.17g}", history.span(), reach));
  }
}

}  // namespace

StepResult step_rk4_dde(const SystemRHS& sys, std::span<const DelayProfile> profiles,
                        const DenseTrajectory& traj, double dt, const IntegrationConfig& cfg,
                        std::size_t step_index) {
  if (profiles.size() != sys.delay_count()) {
    throw DimensionError("profile count does not match the system");
  }
  if (!traj.has_initial_derivative()) {
    throw std::logic_error("trajectory has no initial derivative");
  }
  const Index n = sys.dimension();
  const std::size_t last = traj.size() - 1;
  const double t = traj.t_last();
  const double t_new = t + dt;
  const Vector x_t = traj.state(last);
  const Vector d_t = traj.derivative(last);

  Vector x_end = x_t + dt * d_t;
  Vector d_end = d_t;
  Vector k1(n), k2(n), k3(n), k4(n), stage(n), x_new(n), d_new(n);

  StageEvaluator f(sys, profiles, traj);
  f.set_provisional(t_new, x_end, d_end);

  for (int it = 1; it <= cfg.max_fixed_point_iters; ++it) {
    f.reset_flag();
    f(t, x_t, k1);
    stage = x_t + (0.5 * dt) * k1;
    f(t + 0.5 * dt, stage, k2);
    stage = x_t + (0.5 * dt) * k2;
    f(t + 0.5 * dt, stage, k3);
    stage = x_t + dt * k3;
    f(t_new, stage, k4);
    x_new = x_t + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    const Vector x_prev = x_end;
    x_end = x_new;
    f(t_new, x_new, d_new);

    if (!f.used_provisional()) return {x_new, d_new, it};

    const double scale = 1.0 + x_new.cwiseAbs().maxCoeff();
    const double change = std::max((x_new - x_prev).cwiseAbs().maxCoeff(),
                                   dt * (d_new - d_end).cwiseAbs().maxCoeff());
    d_end = d_new;
    if (change <= cfg.fixed_point_tol * scale) return {x_new, d_new, it};
  }
  throw NonConvergentStep(
      step_index, fmt::format("fixed-point iteration did not settle within {} iterations at "
                              "step {} (t = {:.17g})",
                              cfg.max_fixed_point_iters, step_index, t));
}

DenseTrajectory integrate(const SystemRHS& sys, std::span<const DelayProfile> profiles,
                          const HistoryFunction& history, const IntegrationConfig& cfg,
                          IntegrationStats* stats) {
  cfg.validate();
  check_problem(sys, profiles, history);

  DenseTrajectory traj(history, cfg.t0, sys.dimension());
  {
    std::vector<Vector> delayed(profiles.size(), Vector(sys.dimension()));
    for (std::size_t k = 0; k < profiles.size(); ++k) {
      traj.evaluate(cfg.t0 - profiles[k].value(cfg.t0), delayed[k]);
    }
    traj.set_initial_derivative(sys(traj.state(0), delayed));
  }

  IntegrationStats local;
  const std::size_t count = cfg.step_count();
  for (std::size_t i = 0; i < count; ++i) {
    const double t_next = cfg.node_time(i + 1);
    const double dt = t_next - traj.t_last();
    StepResult res = step_rk4_dde(sys, profiles, traj, dt, cfg, i);
    traj.append(t_next, res.x, res.d);
    local.max_iterations = std::max(local.max_iterations, res.iterations);
    if (res.iterations > 1) ++local.implicit_steps;
  }
  local.steps = count;
  if (stats) *stats = local;
  return traj;
}

double observed_order(const SystemRHS& sys, std::span<const DelayProfile> profiles,
                      const HistoryFunction& history, double t_probe,
                      std::span<const double> steps, double t0) {
  if (steps.size() < 3) throw ModelError("observed_order needs at least three step sizes");
  const double horizon = t_probe - t0;
  for (double s : steps) {
    const double r = horizon / s;
    if (!(s > 0.0) || std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, r)) {
      throw ModelError(fmt::format("step {} does not divide the probe horizon {}", s, horizon));
    }
  }
  auto final_state = [&](double step) {
    IntegrationConfig cfg;
    cfg.step = step;
    cfg.t0 = t0;
    cfg.t_end = t_probe;
    const DenseTrajectory traj = integrate(sys, profiles, history, cfg);
    return Vector(traj.state(traj.size() - 1));
  };

  const double ref_step = *std::min_element(steps.begin(), steps.end()) / 20.0;
  const Vector reference = final_state(ref_step);

  std::vector<double> lx;
  std::vector<double> ly;
  for (double s : steps) {
    const double err = (final_state(s) - reference).cwiseAbs().maxCoeff();
    if (!(err > 0.0)) {
      throw Error(fmt::format("zero error at step {}; order is undefined", s));
    }
    lx.push_back(std::log(s));
    ly.push_back(std::log(err));
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace semidelay
