#pragma once

#include "semidelay/delays.hpp"
#include "semidelay/history.hpp"
#include "semidelay/network.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace semidelay {

/// Right-hand side x' = f(x) + sum_k g_k(x(t - tau_k)) with
///   f(x)   = E x^q,
///   g_k(y) = F_k y^q,
/// where y^q is the componentwise odd power q = 2p + 1 (q = 1 for the linear
/// kinds). The scalar neutral family x' = -m x + sum_k x(t - tau_k) is the
/// one-agent case E = [-m], F_k = [1].
class SystemRHS {
 public:
  enum class Kind { linear, cubic_consensus, scalar_neutral, odd_power };

  static SystemRHS linear(SystemMatrices matrices);
  static SystemRHS cubic(SystemMatrices matrices);
  /// Componentwise x^(2p+1); p = 1 is the cubic family.
  static SystemRHS odd_power(SystemMatrices matrices, int p);
  static SystemRHS neutral(int m);

  Kind kind() const noexcept { return kind_; }
  Index dimension() const noexcept { return matrices_.dimension(); }
  std::size_t delay_count() const noexcept { return matrices_.delay_count(); }
  /// Odd exponent q applied to states before the matrix action.
  int exponent() const noexcept { return exponent_; }
  bool is_linear() const noexcept { return exponent_ == 1; }
  const SystemMatrices& matrices() const noexcept { return matrices_; }

  /// out = f(x_now) + sum_k g_k(delayed[k]).
  void eval(const Eigen::Ref<const Vector>& x_now, std::span<const Vector> delayed,
            Eigen::Ref<Vector> out) const;
  Vector operator()(const Vector& x_now, std::span<const Vector> delayed) const;

  Vector drift(const Vector& x) const;
  Vector coupling(std::size_t k, const Vector& y) const;
  /// Componentwise y^q.
  Vector power(const Vector& y) const;

 private:
  SystemRHS() = default;

  Kind kind_ = Kind::linear;
  int exponent_ = 1;
  SystemMatrices matrices_;
};

std::string_view to_string(SystemRHS::Kind kind);

/// The constant-delay system obtained by freezing each tau_k at its limit.
struct LimitingSystem {
  SystemRHS base;
  std::vector<double> delays;

  /// Constant profiles tau_k = h_k, suitable for integrate().
  std::vector<DelayProfile> profiles() const;
};

/// Throws NoLimitError if a profile has no limit, DimensionError if counts differ.
LimitingSystem limiting_of(const SystemRHS& sys, std::span<const DelayProfile> profiles);

/// || rhs(z, z, ..., z) ||_2; zero exactly on the equilibrium set.
double equilibrium_residual(const SystemRHS& sys, const Vector& z);

}  // namespace semidelay
