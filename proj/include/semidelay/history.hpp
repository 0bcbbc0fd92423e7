#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace semidelay {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Initial data phi on [-h, 0].
///
/// Three encodings are supported: a constant vector, an affine function
/// phi(theta) = a + b*theta, and linearly interpolated samples whose
/// abscissae run from exactly -h to exactly 0.
class HistoryFunction {
 public:
  enum class Kind { constant, affine, sampled };

  static HistoryFunction constant(double span, Vector value);
  static HistoryFunction affine(double span, Vector offset, Vector slope);
  static HistoryFunction sampled(std::vector<double> abscissae, std::vector<Vector> values);

  Kind kind() const noexcept { return kind_; }
  /// Length h of the domain [-h, 0].
  double span() const noexcept { return span_; }
  Index dimension() const noexcept { return a_.size(); }

  /// phi(theta). Throws OutOfRangeError outside [-h, 0].
  Vector operator()(double theta) const;
  void evaluate(double theta, Eigen::Ref<Vector> out) const;

  /// Interior points where phi may fail to be smooth (sample abscissae).
  std::span<const double> breakpoints() const noexcept { return abscissae_; }

  const Vector& value() const noexcept { return a_; }
  const Vector& offset() const noexcept { return a_; }
  const Vector& slope() const noexcept { return b_; }
  std::span<const double> abscissae() const noexcept { return abscissae_; }
  std::span<const Vector> samples() const noexcept { return samples_; }

  /// Multiplies every value by `factor` (used by scaling properties and sweeps).
  HistoryFunction scaled(double factor) const;

  friend bool operator==(const HistoryFunction& lhs, const HistoryFunction& rhs);

 private:
  HistoryFunction() = default;

  Kind kind_ = Kind::constant;
  double span_ = 0.0;
  Vector a_;
  Vector b_;
  std::vector<double> abscissae_;
  std::vector<Vector> samples_;
};

/// Cubic Hermite interpolation on [t_a, t_b] from end values and end derivatives.
void hermite_interpolate(double t_a, const Eigen::Ref<const Vector>& x_a,
                         const Eigen::Ref<const Vector>& d_a, double t_b,
                         const Eigen::Ref<const Vector>& x_b,
                         const Eigen::Ref<const Vector>& d_b, double s, Eigen::Ref<Vector> out);

/// Solution record of a delay equation over [t0 - h, t_last].
///
/// Before t0 queries go to the history function. On [t0, t_last] the
/// trajectory is the piecewise cubic Hermite interpolant of the stored
/// (t_i, x_i, d_i) nodes, where d_i is the right-hand side at t_i.
class DenseTrajectory {
 public:
  DenseTrajectory(HistoryFunction history, double t0, Index dimension);

  /// Fills the derivative slot of the first node. Must happen before the first append.
  void set_initial_derivative(const Eigen::Ref<const Vector>& d0);
  bool has_initial_derivative() const noexcept { return has_d0_; }

  /// Appends a node; `t_next` must exceed the last node time.
  void append(double t_next, const Eigen::Ref<const Vector>& x_next,
              const Eigen::Ref<const Vector>& d_next);

  Vector evaluate(double s) const;
  void evaluate(double s, Eigen::Ref<Vector> out) const;

  Index dimension() const noexcept { return n_; }
  std::size_t size() const noexcept { return times_.size(); }
  double t0() const noexcept { return times_.front(); }
  double t_last() const noexcept { return times_.back(); }
  /// Earliest admissible query time t0 - h.
  double lower_bound() const noexcept { return t0() - history_.span(); }
  const HistoryFunction& history() const noexcept { return history_; }

  double time(std::size_t i) const { return times_[i]; }
  std::span<const double> times() const noexcept { return times_; }
  Eigen::Map<const Vector> state(std::size_t i) const {
    return Eigen::Map<const Vector>(states_.data() + i * static_cast<std::size_t>(n_), n_);
  }
  Eigen::Map<const Vector> derivative(std::size_t i) const {
    return Eigen::Map<const Vector>(derivs_.data() + i * static_cast<std::size_t>(n_), n_);
  }

  /// Index of the last node with time <= s (s must be >= t0).
  std::size_t segment_index(double s) const;

  /// Writes `t,x_1,...,x_n` rows for every `every`-th node (and always the last one).
  void write_csv(std::ostream& os, std::size_t every = 1) const;

 private:
  HistoryFunction history_;
  Index n_;
  bool has_d0_ = false;
  std::vector<double> times_;
  std::vector<double> states_;
  std::vector<double> derivs_;
};

}  // namespace semidelay
