#include "semidelay/history.hpp"

#include "semidelay/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace semidelay {

namespace {

// Round-off allowance at the closed ends of a domain; values inside it are clamped.
double domain_slack(double scale) {
  return 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(scale));
}

}  // namespace

HistoryFunction HistoryFunction::constant(double span, Vector value) {
  if (!(span >= 0.0) || !std::isfinite(span)) {
    throw ModelError(fmt::format("history span must be finite and >= 0, got {}", span));
  }
  HistoryFunction h;
  h.kind_ = Kind::constant;
  h.span_ = span;
  h.b_ = Vector::Zero(value.size());
  h.a_ = std::move(value);
  return h;
}

HistoryFunction HistoryFunction::affine(double span, Vector offset, Vector slope) {
  if (!(span >= 0.0) || !std::isfinite(span)) {
    throw ModelError(fmt::format("history span must be finite and >= 0, got {}", span));
  }
  if (offset.size() != slope.size()) {
    throw DimensionError(fmt::format("affine history: offset has {} entries, slope has {}",
                                     offset.size(), slope.size()));
  }
  HistoryFunction h;
  h.kind_ = Kind::affine;
  h.span_ = span;
  h.a_ = std::move(offset);
  h.b_ = std::move(slope);
  return h;
}

HistoryFunction HistoryFunction::sampled(std::vector<double> abscissae, std::vector<Vector> values) {
  if (abscissae.size() < 2) {
    throw ModelError("sampled history needs at least two samples");
  }
  if (abscissae.size() != values.size()) {
    throw DimensionError(fmt::format("sampled history: {} abscissae but {} values",
                                     abscissae.size(), values.size()));
  }
  for (std::size_t i = 1; i < abscissae.size(); ++i) {
    if (!(abscissae[i] > abscissae[i - 1])) {
      throw ModelError("sampled history abscissae must be strictly increasing");
    }
  }
  if (abscissae.back() != 0.0) {
    throw ModelError("sampled history must end at theta = 0");
  }
  const Index n = values.front().size();
  for (const auto& v : values) {
    if (v.size() != n) {
      throw DimensionError("sampled history values have inconsistent dimensions");
    }
  }
  HistoryFunction h;
  h.kind_ = Kind::sampled;
  h.span_ = -abscissae.front();
  h.a_ = values.back();
  h.b_ = Vector::Zero(n);
  h.abscissae_ = std::move(abscissae);
  h.samples_ = std::move(values);
  return h;
}

Vector HistoryFunction::operator()(double theta) const {
  Vector out(dimension());
  evaluate(theta, out);
  return out;
}

void HistoryFunction::evaluate(double theta, Eigen::Ref<Vector> out) const {
  const double slack = domain_slack(span_);
  if (theta < -span_ - slack || theta > slack || std::isnan(theta)) {
    throw OutOfRangeError(
        fmt::format("history queried at theta = {:.17g}, outside [{:.17g}, 0]", theta, -span_));
  }
  theta = std::clamp(theta, -span_, 0.0);
  switch (kind_) {
    case Kind::constant:
      out = a_;
      return;
    case Kind::affine:
      out = a_ + theta * b_;
      return;
    case Kind::sampled: {
      auto it = std::upper_bound(abscissae_.begin(), abscissae_.end(), theta);
      if (it == abscissae_.end()) {
        out = samples_.back();
        return;
      }
      const auto hi = static_cast<std::size_t>(it - abscissae_.begin());
      const std::size_t lo = hi - 1;
      const double w = (theta - abscissae_[lo]) / (abscissae_[hi] - abscissae_[lo]);
      out = (1.0 - w) * samples_[lo] + w * samples_[hi];
      return;
    }
  }
}

HistoryFunction HistoryFunction::scaled(double factor) const {
  HistoryFunction h = *this;
  h.a_ *= factor;
  h.b_ *= factor;
  for (auto& v : h.samples_) v *= factor;
  return h;
}

bool operator==(const HistoryFunction& lhs, const HistoryFunction& rhs) {
  auto same = [](const Vector& x, const Vector& y) {
    return x.size() == y.size() && (x.array() == y.array()).all();
  };
  if (lhs.kind_ != rhs.kind_ || lhs.span_ != rhs.span_) return false;
  switch (lhs.kind_) {
    case HistoryFunction::Kind::constant:
      return same(lhs.a_, rhs.a_);
    case HistoryFunction::Kind::affine:
      return same(lhs.a_, rhs.a_) && same(lhs.b_, rhs.b_);
    case HistoryFunction::Kind::sampled:
      if (lhs.abscissae_ != rhs.abscissae_ || lhs.samples_.size() != rhs.samples_.size()) {
        return false;
      }
      for (std::size_t i = 0; i < lhs.samples_.size(); ++i) {
        if (!same(lhs.samples_[i], rhs.samples_[i])) return false;
      }
      return true;
  }
  return false;
}

void hermite_interpolate(double t_a, const Eigen::Ref<const Vector>& x_a,
                         const Eigen::Ref<const Vector>& d_a, double t_b,
                         const Eigen::Ref<const Vector>& x_b,
                         const Eigen::Ref<const Vector>& d_b, double s, Eigen::Ref<Vector> out) {
  const double h = t_b - t_a;
  const double u = (s - t_a) / h;
  const double u2 = u * u;
  const double u3 = u2 * u;
  // h00 = 1 - h01; written around x_a so constant data is reproduced exactly.
  const double h01 = -2.0 * u3 + 3.0 * u2;
  const double h10 = u3 - 2.0 * u2 + u;
  const double h11 = u3 - u2;
  out = x_a + h01 * (x_b - x_a) + (h10 * h) * d_a + (h11 * h) * d_b;
}

DenseTrajectory::DenseTrajectory(HistoryFunction history, double t0, Index dimension)
    : history_(std::move(history)), n_(dimension) {
  if (history_.dimension() != n_) {
    throw DimensionError(fmt::format("history has dimension {} but the trajectory needs {}",
                                     history_.dimension(), n_));
  }
  times_.push_back(t0);
  const Vector x0 = history_(0.0);
  states_.assign(x0.data(), x0.data() + n_);
  derivs_.assign(static_cast<std::size_t>(n_), 0.0);
}

void DenseTrajectory::set_initial_derivative(const Eigen::Ref<const Vector>& d0) {
  if (d0.size() != n_) {
    throw DimensionError("initial derivative has the wrong dimension");
  }
  if (times_.size() != 1) {
    throw std::logic_error("initial derivative must be set before any step is appended");
  }
  std::copy(d0.data(), d0.data() + n_, derivs_.begin());
  has_d0_ = true;
}

void DenseTrajectory::append(double t_next, const Eigen::Ref<const Vector>& x_next,
                             const Eigen::Ref<const Vector>& d_next) {
  if (x_next.size() != n_ || d_next.size() != n_) {
    throw DimensionError("appended node has the wrong dimension");
  }
  if (!(t_next > times_.back())) {
    throw OutOfRangeError(fmt::format("node time {:.17g} does not exceed the last node time {:.17g}",
                                      t_next, times_.back()));
  }
  times_.push_back(t_next);
  states_.insert(states_.end(), x_next.data(), x_next.data() + n_);
  derivs_.insert(derivs_.end(), d_next.data(), d_next.data() + n_);
}

std::size_t DenseTrajectory::segment_index(double s) const {
  auto it = std::upper_bound(times_.begin(), times_.end(), s);
  if (it == times_.begin()) return 0;
  return static_cast<std::size_t>(it - times_.begin()) - 1;
}

Vector DenseTrajectory::evaluate(double s) const {
  Vector out(n_);
  evaluate(s, out);
  return out;
}

void DenseTrajectory::evaluate(double s, Eigen::Ref<Vector> out) const {
  const double t_first = times_.front();
  if (s < t_first) {
    if (s < lower_bound() - domain_slack(lower_bound())) {
      throw OutOfRangeError(fmt::format("trajectory queried at {:.17g}, before its domain start {:.17g}",
                                        s, lower_bound()));
    }
    history_.evaluate(std::max(s - t_first, -history_.span()), out);
    return;
  }
  const double t_end = times_.back();
  if (s > t_end || std::isnan(s)) {
    throw OutOfRangeError(
        fmt::format("trajectory queried at {:.17g}, after its last node {:.17g}", s, t_end));
  }
  const std::size_t i = segment_index(s);
  if (times_[i] == s) {
    out = state(i);
    return;
  }
  if (i == 0 && !has_d0_) {
    throw std::logic_error("first segment queried before the initial derivative was set");
  }
  hermite_interpolate(times_[i], state(i), derivative(i), times_[i + 1], state(i + 1),
                      derivative(i + 1), s, out);
}

void DenseTrajectory::write_csv(std::ostream& os, std::size_t every) const {
  every = std::max<std::size_t>(every, 1);
  os << 't';
  for (Index j = 0; j < n_; ++j) os << ",x_" << (j + 1);
  os << '\n';
  fmt::memory_buffer buf;
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (i % every != 0 && i + 1 != times_.size()) continue;
    buf.clear();
    fmt::format_to(std::back_inserter(buf), "{:.17g}", times_[i]);
    const auto x = state(i);
    for (Index j = 0; j < n_; ++j) fmt::format_to(std::back_inserter(buf), ",{:.17g}", x[j]);
    buf.push_back('\n');
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
}

}  // namespace semidelay
