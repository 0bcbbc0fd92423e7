#pragma once

// Explicit Euler with piecewise-linear lookups on its own grid. Used only as an
// independent reference for the main integrator.

#include "semidelay/delays.hpp"
#include "semidelay/history.hpp"
#include "semidelay/systems.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace oracle {

struct EulerSolution {
  double t0 = 0.0;
  double step = 0.0;
  semidelay::Index n = 0;
  std::vector<double> x;  // row-major: node i occupies [i*n, (i+1)*n)

  std::size_t nodes() const { return x.size() / static_cast<std::size_t>(n); }

  semidelay::Vector at_node(std::size_t i) const {
    semidelay::Vector v(n);
    for (semidelay::Index j = 0; j < n; ++j) v[j] = x[i * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)];
    return v;
  }
};

inline EulerSolution euler(const semidelay::SystemRHS& sys,
                           std::span<const semidelay::DelayProfile> profiles,
                           const semidelay::HistoryFunction& history, double t0, double t_end,
                           double step) {
  using semidelay::Index;
  using semidelay::Vector;
  EulerSolution sol;
  sol.t0 = t0;
  sol.step = step;
  sol.n = sys.dimension();
  const auto n = static_cast<std::size_t>(sol.n);
  const auto count = static_cast<std::size_t>(std::llround((t_end - t0) / step));
  sol.x.reserve((count + 1) * n);
  const Vector x0 = history(0.0);
  sol.x.assign(x0.data(), x0.data() + n);

  std::vector<Vector> delayed(profiles.size(), Vector(sol.n));
  Vector cur(sol.n), rate(sol.n);
  auto lookup = [&](double q, std::size_t last, Vector& out) {
    if (q < t0) {
      out = history(std::max(q - t0, -history.span()));
      return;
    }
    const double u = (q - t0) / step;
    auto i = static_cast<std::size_t>(std::floor(u));
    if (i >= last) {
      i = last;
      for (std::size_t j = 0; j < n; ++j) out[static_cast<Index>(j)] = sol.x[i * n + j];
      return;
    }
    const double w = u - static_cast<double>(i);
    for (std::size_t j = 0; j < n; ++j) {
      out[static_cast<Index>(j)] = (1.0 - w) * sol.x[i * n + j] + w * sol.x[(i + 1) * n + j];
    }
  };
  for (std::size_t i = 0; i < count; ++i) {
    const double t = t0 + static_cast<double>(i) * step;
    for (std::size_t j = 0; j < n; ++j) cur[static_cast<Index>(j)] = sol.x[i * n + j];
    for (std::size_t k = 0; k < profiles.size(); ++k) lookup(t - profiles[k].value(t), i, delayed[k]);
    sys.eval(cur, delayed, rate);
    for (std::size_t j = 0; j < n; ++j) sol.x.push_back(cur[static_cast<Index>(j)] + step * rate[static_cast<Index>(j)]);
  }
  return sol;
}

}  // namespace oracle
