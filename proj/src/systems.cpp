#include "semidelay/systems.hpp"

#include "semidelay/error.hpp"

#include <fmt/format.h>

namespace semidelay {

namespace {

double int_power(double v, int q) {
  double r = v;
  for (int i = 1; i < q; ++i) r *= v;
  return r;
}

void check_matrices(const SystemMatrices& m) {
  const Index n = m.E.rows();
  if (m.E.cols() != n || n < 1) throw DimensionError("E must be a non-empty square matrix");
  if (m.F.empty()) throw DimensionError("at least one delayed coupling matrix is required");
  for (const auto& fk : m.F) {
    if (fk.rows() != n || fk.cols() != n) {
      throw DimensionError("coupling matrices must match the size of E");
    }
  }
}

}  // namespace

std::string_view to_string(SystemRHS::Kind kind) {
  switch (kind) {
    case SystemRHS::Kind::linear:
      return "linear";
    case SystemRHS::Kind::cubic_consensus:
      return "cubic";
    case SystemRHS::Kind::scalar_neutral:
      return "neutral";
    case SystemRHS::Kind::odd_power:
      return "odd_power";
  }
  return "unknown";
}

SystemRHS SystemRHS::linear(SystemMatrices matrices) {
  check_matrices(matrices);
  SystemRHS s;
  s.kind_ = Kind::linear;
  s.exponent_ = 1;
  s.matrices_ = std::move(matrices);
  return s;
}

SystemRHS SystemRHS::cubic(SystemMatrices matrices) {
  SystemRHS s = odd_power(std::move(matrices), 1);
  s.kind_ = Kind::cubic_consensus;
  return s;
}

SystemRHS SystemRHS::odd_power(SystemMatrices matrices, int p) {
  if (p < 1) throw ModelError(fmt::format("odd power parameter p must be >= 1, got {}", p));
  check_matrices(matrices);
  SystemRHS s;
  s.kind_ = Kind::odd_power;
  s.exponent_ = 2 * p + 1;
  s.matrices_ = std::move(matrices);
  return s;
}

SystemRHS SystemRHS::neutral(int m) {
  if (m < 1) throw ModelError(fmt::format("neutral system needs m >= 1 delays, got {}", m));
  SystemMatrices mats;
  mats.E = Matrix::Constant(1, 1, -static_cast<double>(m));
  mats.F.assign(static_cast<std::size_t>(m), Matrix::Ones(1, 1));
  SystemRHS s;
  s.kind_ = Kind::scalar_neutral;
  s.exponent_ = 1;
  s.matrices_ = std::move(mats);
  return s;
}

Vector SystemRHS::power(const Vector& y) const {
  if (exponent_ == 1) return y;
  return y.unaryExpr([q = exponent_](double v) { return int_power(v, q); });
}

void SystemRHS::eval(const Eigen::Ref<const Vector>& x_now, std::span<const Vector> delayed,
                     Eigen::Ref<Vector> out) const {
  const Index n = dimension();
  if (x_now.size() != n || out.size() != n) {
    throw DimensionError(fmt::format("state has {} entries, system dimension is {}", x_now.size(), n));
  }
  if (delayed.size() != delay_count()) {
    throw DimensionError(fmt::format("{} delayed states supplied, system has {} delays",
                                     delayed.size(), delay_count()));
  }
  const auto& E = matrices_.E;
  // E is diagonal; the linear case keeps the plain product.
  if (exponent_ == 1) {
    out = E.diagonal().cwiseProduct(x_now);
    for (std::size_t k = 0; k < delayed.size(); ++k) {
      if (delayed[k].size() != n) throw DimensionError("delayed state has the wrong dimension");
      out.noalias() += matrices_.F[k] * delayed[k];
    }
    return;
  }
  const int q = exponent_;
  out = E.diagonal().cwiseProduct(x_now.unaryExpr([q](double v) { return int_power(v, q); }));
  for (std::size_t k = 0; k < delayed.size(); ++k) {
    if (delayed[k].size() != n) throw DimensionError("delayed state has the wrong dimension");
    out.noalias() +=
        matrices_.F[k] * delayed[k].unaryExpr([q](double v) { return int_power(v, q); });
  }
}

Vector SystemRHS::operator()(const Vector& x_now, std::span<const Vector> delayed) const {
  Vector out(dimension());
  eval(x_now, delayed, out);
  return out;
}

Vector SystemRHS::drift(const Vector& x) const {
  if (x.size() != dimension()) throw DimensionError("state has the wrong dimension");
  return matrices_.E.diagonal().cwiseProduct(power(x));
}

Vector SystemRHS::coupling(std::size_t k, const Vector& y) const {
  if (k >= delay_count()) throw DimensionError("coupling index out of range");
  if (y.size() != dimension()) throw DimensionError("state has the wrong dimension");
  return matrices_.F[k] * power(y);
}

std::vector<DelayProfile> LimitingSystem::profiles() const {
  std::vector<DelayProfile> out;
  out.reserve(delays.size());
  for (double h : delays) out.push_back(DelayProfile::constant(h));
  return out;
}

LimitingSystem limiting_of(const SystemRHS& sys, std::span<const DelayProfile> profiles) {
  if (profiles.size() != sys.delay_count()) {
    throw DimensionError(fmt::format("system has {} delays but {} profiles were given",
                                     sys.delay_count(), profiles.size()));
  }
  LimitingSystem lim{sys, {}};
  lim.delays.reserve(profiles.size());
  for (const auto& p : profiles) lim.delays.push_back(p.limit());
  return lim;
}

double equilibrium_residual(const SystemRHS& sys, const Vector& z) {
  const std::vector<Vector> delayed(sys.delay_count(), z);
  return sys(z, delayed).norm();
}

}  // namespace semidelay
