#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace semidelay {

/// A bounded, continuous delay tau(t) >= 0 with an asymptotic limit.
///
/// Built-in kinds (h is the scale):
///   constant       tau(t) = h
///   sin_shift      tau(t) = h |sin(pi/2 + pi/(1+|t|))|
///   t_sin_inv      tau(t) = h |t sin(1/t)|,  tau(0) = h
///   exp_approach   tau(t) = h (1 - e^{-|t|})
///   exp_sin        tau(t) = h - h e^{-|t|} sin t
///   sin_inv_shift  tau(t) = h - h sin(1/(1+|t|))
/// A table profile interpolates (t, tau) samples linearly and returns a
/// declared tail value past the last sample.
///
/// There is deliberately no derivative accessor: none of these need be differentiable.
class DelayProfile {
 public:
  enum class Kind { constant, sin_shift, t_sin_inv, exp_approach, exp_sin, sin_inv_shift, table };

  /// Any built-in kind (everything except table). h must be finite and >= 0.
  static DelayProfile builtin(Kind kind, double h);
  static DelayProfile constant(double h) { return builtin(Kind::constant, h); }
  /// Samples must have strictly increasing times and nonnegative values.
  static DelayProfile table(std::vector<std::pair<double, double>> samples,
                            std::optional<double> tail);

  Kind kind() const noexcept { return kind_; }
  double scale() const noexcept { return h_; }
  std::span<const std::pair<double, double>> table_samples() const noexcept { return samples_; }
  std::optional<double> tail() const noexcept { return tail_; }

  /// tau(t); total on the real line.
  double value(double t) const;
  /// lim_{t->inf} tau(t). Throws NoLimitError for a table without a tail.
  double limit() const;
  /// Smallest constant bounding tau on the whole real line.
  double bound() const;

  bool is_constant() const noexcept { return kind_ == Kind::constant; }

  friend bool operator==(const DelayProfile&, const DelayProfile&) = default;

 private:
  DelayProfile() = default;

  Kind kind_ = Kind::constant;
  double h_ = 0.0;
  std::vector<std::pair<double, double>> samples_;
  std::optional<double> tail_;
};

std::string_view to_string(DelayProfile::Kind kind);
std::optional<DelayProfile::Kind> delay_kind_from_string(std::string_view name);

/// Largest bound over a set of profiles (0 for an empty set).
double max_delay_bound(std::span<const DelayProfile> profiles);

}  // namespace semidelay
