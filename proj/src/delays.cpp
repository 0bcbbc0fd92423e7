#include "semidelay/delays.hpp"

#include "semidelay/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace semidelay {

namespace {

constexpr std::array<std::pair<DelayProfile::Kind, std::string_view>, 7> kKindNames{{
    {DelayProfile::Kind::constant, "constant"},
    {DelayProfile::Kind::sin_shift, "sin_shift"},
    {DelayProfile::Kind::t_sin_inv, "t_sin_inv"},
    {DelayProfile::Kind::exp_approach, "exp_approach"},
    {DelayProfile::Kind::exp_sin, "exp_sin"},
    {DelayProfile::Kind::sin_inv_shift, "sin_inv_shift"},
    {DelayProfile::Kind::table, "table"},
}};

// sup over t of -e^{-|t|} sin t, attained at t = -pi/4.
const double kExpSinOvershoot = std::exp(-std::numbers::pi / 4.0) * std::numbers::sqrt2 / 2.0;

}  // namespace

std::string_view to_string(DelayProfile::Kind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<DelayProfile::Kind> delay_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

DelayProfile DelayProfile::builtin(Kind kind, double h) {
  if (kind == Kind::table) {
    throw ModelError("table profiles are built with DelayProfile::table");
  }
  if (!std::isfinite(h) || h < 0.0) {
    throw ModelError(fmt::format("delay scale h must be finite and >= 0, got {}", h));
  }
  DelayProfile p;
  p.kind_ = kind;
  p.h_ = h;
  return p;
}

DelayProfile DelayProfile::table(std::vector<std::pair<double, double>> samples,
                                 std::optional<double> tail) {
  if (samples.empty()) {
    throw ModelError("table delay profile needs at least one sample");
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i].first) || !std::isfinite(samples[i].second) ||
        samples[i].second < 0.0) {
      throw ModelError("table delay samples must be finite with tau >= 0");
    }
    if (i > 0 && !(samples[i].first > samples[i - 1].first)) {
      throw ModelError("table delay sample times must be strictly increasing");
    }
  }
  if (tail && (!std::isfinite(*tail) || *tail < 0.0)) {
    throw ModelError("table delay tail must be finite and >= 0");
  }
  DelayProfile p;
  p.kind_ = Kind::table;
  p.samples_ = std::move(samples);
  p.tail_ = tail;
  return p;
}

double DelayProfile::value(double t) const {
  using std::numbers::pi;
  const double at = std::abs(t);
  switch (kind_) {
    case Kind::constant:
      return h_;
    case Kind::sin_shift:
      return h_ * std::abs(std::sin(pi / 2.0 + pi / (1.0 + at)));
    case Kind::t_sin_inv:
      if (t == 0.0) return h_;
      return h_ * std::abs(t * std::sin(1.0 / t));
    case Kind::exp_approach:
      return h_ * (1.0 - std::exp(-at));
    case Kind::exp_sin:
      return h_ - h_ * std::exp(-at) * std::sin(t);
    case Kind::sin_inv_shift:
      return h_ - h_ * std::sin(1.0 / (1.0 + at));
    case Kind::table: {
      if (t <= samples_.front().first) return samples_.front().second;
      if (t > samples_.back().first) return tail_.value_or(samples_.back().second);
      auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                                 [](double v, const auto& s) { return v < s.first; });
      if (it == samples_.end()) return samples_.back().second;
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      const double w = (t - lo.first) / (hi.first - lo.first);
      return (1.0 - w) * lo.second + w * hi.second;
    }
  }
  return h_;
}

double DelayProfile::limit() const {
  if (kind_ == Kind::table) {
    if (!tail_) throw NoLimitError("table delay profile declares no tail limit");
    return *tail_;
  }
  return h_;
}

double DelayProfile::bound() const {
  switch (kind_) {
    case Kind::table: {
      double b = tail_.value_or(0.0);
      for (const auto& s : samples_) b = std::max(b, s.second);
      return b;
    }
    case Kind::exp_sin:
      // tau exceeds h for t < 0 (and slightly near t = 5pi/4).
      return h_ * (1.0 + kExpSinOvershoot);
    default:
      return h_;
  }
}

double max_delay_bound(std::span<const DelayProfile> profiles) {
  double b = 0.0;
  for (const auto& p : profiles) b = std::max(b, p.bound());
  return b;
}

}  // namespace semidelay
