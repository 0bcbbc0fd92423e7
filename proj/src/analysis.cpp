#include "semidelay/analysis.hpp"

#include "semidelay/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <thread>

namespace semidelay {

namespace {

double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double composite_simpson(const std::function<double(double)>& g, double a, double b,
                         std::size_t panels) {
  const double h = (b - a) / static_cast<double>(panels);
  double sum = 0.0;
  double left = g(a);
  for (std::size_t i = 0; i < panels; ++i) {
    const double lo = a + static_cast<double>(i) * h;
    const double hi = (i + 1 == panels) ? b : lo + h;
    const double right = g(hi);
    sum += simpson(lo, hi, left, g(0.5 * (lo + hi)), right);
    left = right;
  }
  return sum;
}

double adaptive_simpson(const std::function<double(double)>& g, double a, double b, double tol) {
  if (b <= a) return 0.0;
  std::size_t panels = 1;
  double prev = composite_simpson(g, a, b, panels);
  for (int level = 0; level < 22; ++level) {
    panels *= 2;
    const double next = composite_simpson(g, a, b, panels);
    if (std::abs(next - prev) <= tol * (1.0 + std::abs(next))) return next;
    prev = next;
  }
  return prev;
}

double sum_entries(const Vector& v) { return v.sum(); }

double window_or_default(double w) { return w > 0.0 ? w : 1.0; }

}  // namespace

// ---------------------------------------------------------------------------
// Quadrature

double integrate_history(const HistoryFunction& history, double a, double b,
                         const std::function<double(const Vector&)>& fn, double tol) {
  if (a > b) return -integrate_history(history, b, a, fn, tol);
  if (a < -history.span() * (1.0 + 1e-14) - 1e-300 || b > 0.0) {
    throw OutOfRangeError(fmt::format("history integral over [{}, {}] leaves the domain [-{}, 0]",
                                      a, b, history.span()));
  }
  a = std::max(a, -history.span());
  std::vector<double> cuts{a};
  for (double bp : history.breakpoints()) {
    if (bp > a && bp < b) cuts.push_back(bp);
  }
  cuts.push_back(b);
  Vector buf(history.dimension());
  const std::function<double(double)> g = [&](double theta) {
    history.evaluate(theta, buf);
    return fn(buf);
  };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    total += adaptive_simpson(g, cuts[i], cuts[i + 1], tol);
  }
  return total;
}

double integrate_trajectory(const DenseTrajectory& traj, double a, double b,
                            const std::function<double(const Vector&)>& fn) {
  if (a > b) return -integrate_trajectory(traj, b, a, fn);
  const double t0 = traj.t0();
  double total = 0.0;
  if (a < t0) {
    const double hb = std::min(b, t0);
    total += integrate_history(traj.history(), std::max(a - t0, -traj.history().span()), hb - t0, fn);
  }
  if (b <= t0) return total;
  if (b > traj.t_last()) {
    throw OutOfRangeError(fmt::format("integral up to {} passes the last node {}", b, traj.t_last()));
  }
  const double ta = std::max(a, t0);
  Vector xa(traj.dimension()), xm(traj.dimension()), xb(traj.dimension());
  for (std::size_t seg = traj.segment_index(ta); seg + 1 < traj.size(); ++seg) {
    const double s0 = traj.time(seg);
    const double s1 = traj.time(seg + 1);
    if (s0 >= b) break;
    const double lo = std::max(ta, s0);
    const double hi = std::min(b, s1);
    if (hi <= lo) continue;
    const auto x0 = traj.state(seg);
    const auto d0 = traj.derivative(seg);
    const auto x1 = traj.state(seg + 1);
    const auto d1 = traj.derivative(seg + 1);
    if (lo == s0) xa = x0; else hermite_interpolate(s0, x0, d0, s1, x1, d1, lo, xa);
    if (hi == s1) xb = x1; else hermite_interpolate(s0, x0, d0, s1, x1, d1, hi, xb);
    hermite_interpolate(s0, x0, d0, s1, x1, d1, 0.5 * (lo + hi), xm);
    total += simpson(lo, hi, fn(xa), fn(xm), fn(xb));
  }
  return total;
}

// ---------------------------------------------------------------------------
// Predicted consensus values

double predicted_consensus_linear(const HistoryFunction& history, std::span<const Matrix> F,
                                  std::span<const double> delays) {
  if (F.size() != delays.size()) {
    throw DimensionError("one delay per coupling matrix is required");
  }
  const Index n = history.dimension();
  double numerator = history(0.0).sum();
  double denominator = static_cast<double>(n);
  for (std::size_t k = 0; k < F.size(); ++k) {
    const double h = delays[k];
    if (h < 0.0) throw ModelError("delays must be nonnegative");
    if (h > history.span() * (1.0 + 1e-12)) {
      throw OutOfRangeError(fmt::format("history covers [-{}, 0] but delay {} is {}",
                                        history.span(), k + 1, h));
    }
    if (F[k].rows() != n || F[k].cols() != n) throw DimensionError("coupling matrix size mismatch");
    const Eigen::RowVectorXd weights = F[k].colwise().sum();
    switch (history.kind()) {
      case HistoryFunction::Kind::constant:
        numerator += h * weights.dot(history.value());
        break;
      case HistoryFunction::Kind::affine:
        // int_{-h}^0 (a + b theta) dtheta = h a - h^2/2 b
        numerator += weights.dot(h * history.offset() - 0.5 * h * h * history.slope());
        break;
      case HistoryFunction::Kind::sampled:
        numerator += integrate_history(history, -h, 0.0,
                                       [&](const Vector& x) { return weights.dot(x); });
        break;
    }
    denominator += h * weights.sum();
  }
  if (!(denominator > 0.0)) {
    throw RootError(fmt::format("consensus denominator is {}, expected > 0", denominator));
  }
  return numerator / denominator;
}

double predicted_consensus_nonlinear(const HistoryFunction& history, const SystemRHS& sys,
                                     std::span<const double> delays) {
  if (delays.size() != sys.delay_count()) {
    throw DimensionError("one delay per coupling term is required");
  }
  if (history.dimension() != sys.dimension()) throw DimensionError("history dimension mismatch");
  const Index n = sys.dimension();

  double rhs = history(0.0).sum();
  for (std::size_t k = 0; k < delays.size(); ++k) {
    const double h = delays[k];
    if (h > history.span() * (1.0 + 1e-12)) {
      throw OutOfRangeError(fmt::format("history covers [-{}, 0] but delay {} is {}",
                                        history.span(), k + 1, h));
    }
    if (history.kind() == HistoryFunction::Kind::constant) {
      rhs += h * sum_entries(sys.coupling(k, history.value()));
    } else {
      rhs += integrate_history(history, -h, 0.0,
                               [&](const Vector& x) { return sum_entries(sys.coupling(k, x)); });
    }
  }

  const auto lhs = [&](double alpha) {
    const Vector line = Vector::Constant(n, alpha);
    double v = static_cast<double>(n) * alpha;
    for (std::size_t k = 0; k < delays.size(); ++k) v += delays[k] * sum_entries(sys.coupling(k, line));
    return v;
  };

  // Monotonicity sample.
  double prev = lhs(-10.0);
  for (int i = 1; i <= 200; ++i) {
    const double v = lhs(-10.0 + 0.1 * i);
    if (!(v > prev)) {
      throw RootError("consensus equation left side is not strictly increasing");
    }
    prev = v;
  }

  double lo = -1.0;
  double hi = 1.0;
  while (lhs(lo) > rhs) {
    lo *= 2.0;
    if (lo < -1e6) throw RootError("no bracket for the consensus root within |alpha| <= 1e6");
  }
  while (lhs(hi) < rhs) {
    hi *= 2.0;
    if (hi > 1e6) throw RootError("no bracket for the consensus root within |alpha| <= 1e6");
  }
  for (int it = 0; it < 400 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double v = lhs(mid);
    if (v == rhs) return mid;
    if (v < rhs) lo = mid; else hi = mid;
  }
  double alpha = 0.5 * (lo + hi);

  const double fd = 1e-6;
  const double slope = (lhs(alpha + fd) - lhs(alpha - fd)) / (2.0 * fd);
  if (slope > 0.0) {
    const double polished = alpha - (lhs(alpha) - rhs) / slope;
    if (std::abs(lhs(polished) - rhs) < std::abs(lhs(alpha) - rhs)) alpha = polished;
  }
  return alpha;
}

// ---------------------------------------------------------------------------
// Limiting residual

double limiting_residual(const DenseTrajectory& traj, const SystemRHS& sys,
                         std::span<const DelayProfile> profiles, std::span<const double> delays,
                         double t) {
  if (profiles.size() != sys.delay_count() || delays.size() != sys.delay_count()) {
    throw DimensionError("profiles and delays must match the system");
  }
  const Index n = sys.dimension();
  Vector xt(n), xh(n);
  Vector total = Vector::Zero(n);
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    traj.evaluate(t - profiles[k].value(t), xt);
    traj.evaluate(t - delays[k], xh);
    total += sys.coupling(k, xt) - sys.coupling(k, xh);
  }
  return total.norm();
}

std::vector<TimeValue> residual_series(const DenseTrajectory& traj, const SystemRHS& sys,
                                       std::span<const DelayProfile> profiles,
                                       std::span<const double> delays) {
  std::vector<TimeValue> out;
  out.reserve(traj.size());
  for (double t : traj.times()) out.push_back({t, limiting_residual(traj, sys, profiles, delays, t)});
  return out;
}

std::optional<double> residual_decay_factor(std::span<const TimeValue> series) {
  if (series.size() < 20) return std::nullopt;
  const std::size_t tenth = series.size() / 10;
  double first = 0.0;
  double last = 0.0;
  for (std::size_t i = 0; i < tenth; ++i) first += series[i].value;
  for (std::size_t i = series.size() - tenth; i < series.size(); ++i) last += series[i].value;
  first /= static_cast<double>(tenth);
  last /= static_cast<double>(tenth);
  if (!(first > 0.0)) return std::nullopt;
  if (last == 0.0) return std::numeric_limits<double>::infinity();
  return first / last;
}

// ---------------------------------------------------------------------------
// Certificates

namespace {

struct GridPoint {
  double t;
  double hi;
  double lo;
  double norm;
  bool node;
};

double history_spacing(const DenseTrajectory& traj, double window) {
  if (traj.size() > 1) return traj.time(1) - traj.t0();
  return window / 100.0;
}

// History samples at t0 - j*dt inside [a, t0), oldest first.
std::vector<double> history_grid(const DenseTrajectory& traj, double a, double dt) {
  std::vector<double> times;
  const double t0 = traj.t0();
  const double start = std::max(a, traj.lower_bound());
  const double tiny = 1e-12 * std::max(1.0, std::abs(t0) + dt);
  for (std::size_t j = 1;; ++j) {
    const double s = t0 - static_cast<double>(j) * dt;
    if (s < start - tiny) break;
    times.push_back(std::max(s, traj.lower_bound()));
  }
  std::reverse(times.begin(), times.end());
  return times;
}

}  // namespace

RazumikhinResult razumikhin_certificate(const DenseTrajectory& traj, double window, double slack) {
  RazumikhinResult res;
  const double dt = history_spacing(traj, window);
  std::vector<GridPoint> grid;
  Vector buf(traj.dimension());
  for (double s : history_grid(traj, traj.t0() - window, dt)) {
    traj.evaluate(s, buf);
    grid.push_back({s, buf.maxCoeff(), buf.minCoeff(), buf.cwiseAbs().maxCoeff(), false});
  }
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto x = traj.state(i);
    grid.push_back({traj.time(i), x.maxCoeff(), x.minCoeff(), x.cwiseAbs().maxCoeff(), true});
  }

  std::deque<std::size_t> maxq;
  std::deque<std::size_t> minq;
  res.extrema.reserve(traj.size());
  bool have_prev = false;
  ExtremaSample prev;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    while (!maxq.empty() && grid[maxq.back()].hi <= grid[i].hi) maxq.pop_back();
    maxq.push_back(i);
    while (!minq.empty() && grid[minq.back()].lo >= grid[i].lo) minq.pop_back();
    minq.push_back(i);
    if (!grid[i].node) continue;

    const double t = grid[i].t;
    const double left = t - window - 1e-12 * std::max(1.0, std::abs(t));
    while (grid[maxq.front()].t < left) maxq.pop_front();
    while (grid[minq.front()].t < left) minq.pop_front();
    const ExtremaSample cur{t, grid[maxq.front()].hi, grid[minq.front()].lo};
    res.extrema.push_back(cur);
    if (have_prev) {
      const double thr = slack * (1.0 + grid[i].norm);
      const double up = cur.max - prev.max;
      const double down = prev.min - cur.min;
      if (up > thr || down > thr) res.violations.push_back({t, std::max(up, down)});
    }
    prev = cur;
    have_prev = true;
  }
  return res;
}

double conserved_quantity(const DenseTrajectory& traj, std::span<const Matrix> F,
                          std::span<const double> delays, double t) {
  if (F.size() != delays.size()) throw DimensionError("one delay per coupling matrix is required");
  double q = traj.evaluate(t).sum();
  for (std::size_t k = 0; k < F.size(); ++k) {
    const Eigen::RowVectorXd weights = F[k].colwise().sum();
    q += integrate_trajectory(traj, t - delays[k], t,
                              [&](const Vector& x) { return weights.dot(x); });
  }
  return q;
}

std::vector<TimeValue> conserved_series(const DenseTrajectory& traj, std::span<const Matrix> F,
                                        std::span<const double> delays, std::size_t samples) {
  std::vector<TimeValue> out;
  const std::size_t nodes = traj.size();
  samples = std::clamp<std::size_t>(samples, 2, nodes);
  std::size_t last_index = nodes;
  for (std::size_t j = 0; j < samples; ++j) {
    const std::size_t i = (j * (nodes - 1)) / (samples - 1);
    if (i == last_index) continue;
    last_index = i;
    const double t = traj.time(i);
    out.push_back({t, conserved_quantity(traj, F, delays, t)});
  }
  return out;
}

double relative_drift(std::span<const TimeValue> series) {
  if (series.empty()) return 0.0;
  const double q0 = series.front().value;
  double worst = 0.0;
  for (const auto& s : series) worst = std::max(worst, std::abs(s.value - q0));
  return q0 != 0.0 ? worst / std::abs(q0) : worst;
}

double krasovskii_functional(const DenseTrajectory& traj, double window, double t) {
  if (traj.dimension() != 1) throw DimensionError("the Krasovskii functional here is scalar");
  const double x = traj.evaluate(t)[0];
  return x * x + integrate_trajectory(traj, t - window, t,
                                      [](const Vector& v) { return v[0] * v[0]; });
}

// ---------------------------------------------------------------------------
// Convergence

WindowStats window_stats(const DenseTrajectory& traj, double a, double b) {
  WindowStats st;
  st.max = -std::numeric_limits<double>::infinity();
  st.min = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  std::size_t count = 0;
  auto add = [&](const Eigen::Ref<const Vector>& x) {
    st.max = std::max(st.max, x.maxCoeff());
    st.min = std::min(st.min, x.minCoeff());
    sum += x.sum();
    count += static_cast<std::size_t>(x.size());
    ++st.samples;
  };
  if (a < traj.t0()) {
    const double dt = history_spacing(traj, b - a);
    Vector buf(traj.dimension());
    for (double s : history_grid(traj, a, dt)) {
      if (s > b) break;
      traj.evaluate(s, buf);
      add(buf);
    }
  }
  const auto times = traj.times();
  auto it = std::lower_bound(times.begin(), times.end(), a);
  for (; it != times.end() && *it <= b; ++it) {
    add(traj.state(static_cast<std::size_t>(it - times.begin())));
  }
  st.mean = count > 0 ? sum / static_cast<double>(count) : 0.0;
  return st;
}

ConvergenceResult convergence_check(const DenseTrajectory& traj, double tol, double window) {
  window = window_or_default(window);
  const double lower = traj.lower_bound();
  auto passes = [&](double end, double* mean) {
    const WindowStats cur = window_stats(traj, end - window, end);
    const WindowStats before = window_stats(traj, std::max(end - 2.0 * window, lower),
                                            std::max(end - window, lower));
    if (mean) *mean = cur.mean;
    if (cur.samples == 0 || before.samples == 0) return false;
    return cur.max - cur.min <= tol && std::abs(cur.mean - before.mean) <= tol / 10.0;
  };

  ConvergenceResult res;
  double final_mean = 0.0;
  if (!passes(traj.t_last(), &final_mean)) return res;
  res.converged = true;
  res.alpha = final_mean;
  for (std::size_t k = 1;; ++k) {
    const double end = traj.t0() + static_cast<double>(k) * window;
    if (end > traj.t_last()) break;
    if (passes(end, nullptr)) {
      res.time = end;
      return res;
    }
  }
  res.time = traj.t_last();
  return res;
}

// ---------------------------------------------------------------------------
// Sweep

Vector sweep_history_value(std::uint64_t seed, std::size_t index, Index n, double amplitude) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  // Map raw 53-bit draws by hand so values do not depend on the library's distributions.
  Vector v(n);
  for (Index i = 0; i < n; ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    v[i] = amplitude * (2.0 * u - 1.0);
  }
  return v;
}

namespace {

SweepRun sweep_one(const SystemRHS& sys, std::span<const DelayProfile> profiles,
                   const SweepSettings& s, std::size_t index) {
  SweepRun run;
  run.index = index;
  run.initial = sweep_history_value(s.seed, index, sys.dimension(), s.amplitude);
  try {
    const double reach = max_delay_bound(profiles);
    const HistoryFunction history = HistoryFunction::constant(reach, run.initial);
    const DenseTrajectory traj = integrate(sys, profiles, history, s.integration);
    const ConvergenceResult conv = convergence_check(traj, s.convergence_tol, window_or_default(reach));
    run.converged = conv.converged;
    run.alpha_observed = conv.alpha;

    std::vector<double> limits;
    for (const auto& p : profiles) limits.push_back(p.limit());
    try {
      run.alpha_predicted = sys.is_linear()
                                ? predicted_consensus_linear(history, sys.matrices().F, limits)
                                : predicted_consensus_nonlinear(history, sys, limits);
    } catch (const RootError&) {
    }

    const double alpha = conv.alpha.value_or(traj.state(traj.size() - 1).mean());
    const double base = (run.initial.array() - alpha).abs().maxCoeff();
    double excursion = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
      excursion = std::max(excursion, (traj.state(i).array() - alpha).abs().maxCoeff());
    }
    if (base > 0.0) {
      run.excursion_ratio = excursion / base;
    } else {
      run.excursion_ratio = excursion > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    run.ok = true;
  } catch (const Error& e) {
    run.ok = false;
    run.error = e.what();
  }
  return run;
}

}  // namespace

SweepReport semistability_sweep(const SystemRHS& sys, std::span<const DelayProfile> profiles,
                                const SweepSettings& settings) {
  if (settings.count < 2) throw ModelError("a sweep needs at least two runs");
  if (!(settings.amplitude > 0.0)) throw ModelError("sweep amplitude must be positive");

  SweepReport rep;
  rep.runs.resize(settings.count);
  const unsigned jobs = std::max(1u, std::min<unsigned>(settings.jobs,
                                                        static_cast<unsigned>(settings.count)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < settings.count; i = next++) {
      rep.runs[i] = sweep_one(sys, profiles, settings, i);
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<double> limits;
  for (const auto& r : rep.runs) {
    if (!r.ok) {
      ++rep.failed_count;
      continue;
    }
    rep.max_excursion_ratio = std::max(rep.max_excursion_ratio, r.excursion_ratio);
    if (r.converged) {
      ++rep.converged_count;
      limits.push_back(*r.alpha_observed);
    }
  }
  std::sort(limits.begin(), limits.end());
  if (!limits.empty()) {
    rep.limit_min = limits.front();
    rep.limit_max = limits.back();
    rep.distinct_limits = 1;
    for (std::size_t i = 1; i < limits.size(); ++i) {
      if (limits[i] - limits[i - 1] > settings.distinct_tol) ++rep.distinct_limits;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Drazin / nonlinear conditions

Matrix drazin_diag(const Matrix& lambda) {
  if (lambda.rows() != lambda.cols()) throw ModelError("Drazin inverse needs a square matrix");
  Matrix out = Matrix::Zero(lambda.rows(), lambda.cols());
  for (Index i = 0; i < lambda.rows(); ++i) {
    for (Index j = 0; j < lambda.cols(); ++j) {
      if (i != j && lambda(i, j) != 0.0) throw ModelError("matrix is not diagonal");
    }
    const double v = lambda(i, i);
    out(i, i) = v == 0.0 ? 0.0 : 1.0 / v;
  }
  return out;
}

bool WeightCertificate::passed() const noexcept { return failures() == 0; }

std::size_t WeightCertificate::failures() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.passed(); }));
}

WeightCertificate diagonal_weight_conditions(const SystemRHS& sys, std::span<const Matrix> P,
                                    std::span<const Vector> samples, double tol) {
  const Index n = sys.dimension();
  if (P.size() != sys.delay_count()) throw ModelError("one weight matrix per delay is required");
  WeightCertificate cert;
  cert.P_total = Matrix::Zero(n, n);
  std::vector<Matrix> masks;
  std::vector<Matrix> inv;
  for (const auto& pk : P) {
    if (pk.rows() != n || pk.cols() != n) throw DimensionError("weight matrix size mismatch");
    inv.push_back(drazin_diag(pk));
    if ((pk.diagonal().array() < 0.0).any()) throw ModelError("weight matrices must be nonnegative");
    masks.push_back(inv.back() * pk);
    cert.P.push_back(pk);
    cert.P_total += pk;
  }
  if ((cert.P_total.diagonal().array() <= 0.0).any()) {
    throw ModelError("sum of weight matrices is not positive definite");
  }
  const Matrix& Pt = cert.P_total;
  for (const auto& x : samples) {
    WeightConditionSample r;
    r.x = x;
    const Vector f = sys.drift(x);
    const double fpf = f.dot(Pt * f);
    const double bound_tol = tol * (1.0 + std::abs(fpf));
    double coupling_sum = 0.0;
    double drift_sum = 0.0;
    Vector total = f;
    r.mask_identity = true;
    for (std::size_t k = 0; k < P.size(); ++k) {
      const Vector g = sys.coupling(k, x);
      total += g;
      if ((masks[k] * g - g).cwiseAbs().maxCoeff() > tol * (1.0 + g.cwiseAbs().maxCoeff())) {
        r.mask_identity = false;
      }
      coupling_sum += g.dot(P[k] * g);
      drift_sum += f.dot(Pt * inv[k] * Pt * f);
    }
    r.coupling_bound = coupling_sum <= fpf + bound_tol;
    r.drift_bound = drift_sum <= fpf + bound_tol;
    r.zero_sum = std::abs(total.sum()) <= tol * (1.0 + total.cwiseAbs().maxCoeff());
    cert.results.push_back(std::move(r));
  }
  return cert;
}

}  // namespace semidelay
