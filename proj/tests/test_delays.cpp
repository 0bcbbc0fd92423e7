#include "semidelay/delays.hpp"
#include "semidelay/error.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace semidelay;
using DK = DelayProfile::Kind;

namespace {

const std::vector<DK> kBuiltins{DK::constant,     DK::sin_shift, DK::t_sin_inv,
                                DK::exp_approach, DK::exp_sin,   DK::sin_inv_shift};

std::vector<double> log_grid(std::size_t count, double hi_exp) {
  std::vector<double> t{0.0};
  for (std::size_t i = 1; i < count; ++i) {
    t.push_back(std::pow(10.0, -4.0 + (hi_exp + 4.0) * static_cast<double>(i) / (count - 1)));
  }
  return t;
}

}  // namespace

TEST_SUITE("delays") {

TEST_CASE("values of the built-in formulas") {
  CHECK(DelayProfile::builtin(DK::sin_shift, 1.0).value(0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(DelayProfile::builtin(DK::exp_approach, 2.0).value(0.0) == 0.0);
  CHECK(DelayProfile::builtin(DK::exp_sin, 1.0).value(0.0) == 1.0);
  CHECK(DelayProfile::builtin(DK::t_sin_inv, 1.0).value(0.0) == 1.0);
  CHECK(DelayProfile::builtin(DK::t_sin_inv, 2.0).value(2.0) ==
        doctest::Approx(2.0 * 2.0 * std::sin(0.5)));
  CHECK(DelayProfile::builtin(DK::sin_inv_shift, 1.0).value(0.0) == doctest::Approx(1.0 - std::sin(1.0)));
  CHECK(DelayProfile::constant(0.3).value(-5.0) == 0.3);
}

TEST_CASE("limits") {
  CHECK(DelayProfile::builtin(DK::t_sin_inv, 1.0).limit() == 1.0);
  CHECK(DelayProfile::constant(0.3).limit() == 0.3);
  CHECK(DelayProfile::builtin(DK::exp_approach, 2.0).limit() == 2.0);
  CHECK(DelayProfile::table({{0.0, 0.2}, {1.0, 0.7}}, 0.5).limit() == 0.5);
  CHECK_THROWS_AS(DelayProfile::table({{0.0, 0.2}}, std::nullopt).limit(), NoLimitError);
}

TEST_CASE("bounds") {
  CHECK(DelayProfile::builtin(DK::sin_shift, 1.0).bound() == 1.0);
  CHECK(DelayProfile::table({{0.0, 0.2}, {1.0, 0.7}, {2.0, 0.4}}, 0.5).bound() == 0.7);
  CHECK(DelayProfile::builtin(DK::t_sin_inv, 1.0).bound() == 1.0);
  // exp_sin overshoots h for negative t; the declared bound covers it.
  const auto es = DelayProfile::builtin(DK::exp_sin, 1.0);
  CHECK(es.value(-std::numbers::pi / 4.0) == doctest::Approx(es.bound()).epsilon(1e-14));
  CHECK(es.bound() > 1.0);
}

TEST_CASE("t_sin_inv bound by dense sampling") {
  const auto p = DelayProfile::builtin(DK::t_sin_inv, 1.0);
  double worst = 0.0;
  for (int i = 1; i <= 1000000; ++i) worst = std::max(worst, p.value(i * 1e-3));
  CHECK(worst <= 1.0);
  CHECK(worst > 0.999999);
}

TEST_CASE("nonnegative and bounded on a log grid") {
  const auto grid = log_grid(10000, 6.0);
  for (DK k : kBuiltins) {
    for (double h : {0.5, 1.0, 3.0}) {
      const auto p = DelayProfile::builtin(k, h);
      CAPTURE(to_string(k));
      bool ok = true;
      for (double t : grid) {
        const double v = p.value(t);
        ok = ok && v >= 0.0 && v <= p.bound();
        const double w = p.value(-std::min(t, p.bound()));
        ok = ok && w >= 0.0 && w <= p.bound();
      }
      CHECK(ok);
    }
  }
}

TEST_CASE("limit consistency with empirical settling time") {
  struct Case {
    DK kind;
    double settle;
  };
  // Settling times where |tau - limit| <= 1e-3 holds from then on (h = 1).
  for (const Case& c : {Case{DK::exp_approach, 7.0}, Case{DK::sin_shift, 100.0},
                        Case{DK::t_sin_inv, 13.0}, Case{DK::exp_sin, 7.0},
                        Case{DK::sin_inv_shift, 1000.0}}) {
    const auto p = DelayProfile::builtin(c.kind, 1.0);
    CAPTURE(to_string(c.kind));
    bool ok = true;
    for (int i = 0; i <= 10000; ++i) {
      const double t = c.settle * std::pow(1e3, i / 10000.0);
      ok = ok && std::abs(p.value(t) - p.limit()) <= 1e-3;
    }
    CHECK(ok);
    CHECK(std::abs(p.value(0.5 * c.settle) - p.limit()) > 1e-4);
  }
}

TEST_CASE("continuity at kinks") {
  // sin_shift and exp_approach have an |t| kink at 0; t_sin_inv has zeros at t = 1/(k pi).
  for (DK k : {DK::sin_shift, DK::exp_approach, DK::t_sin_inv, DK::sin_inv_shift, DK::exp_sin}) {
    const auto p = DelayProfile::builtin(k, 1.0);
    std::vector<double> kinks{0.0};
    if (k == DK::t_sin_inv) kinks = {1.0 / std::numbers::pi, 1.0 / (2.0 * std::numbers::pi)};
    for (double t : kinks) {
      if (k == DK::t_sin_inv && t == 0.0) continue;
      double prev = 1.0;
      for (double d : {1e-2, 1e-4, 1e-6, 1e-8}) {
        const double jump = std::abs(p.value(t + d) - p.value(t - d));
        CHECK(jump <= prev + 1e-15);
        prev = jump;
      }
      CHECK(prev <= 1e-6);
    }
  }
}

TEST_CASE("table profile") {
  const auto p = DelayProfile::table({{0.0, 0.2}, {1.0, 0.6}}, 0.5);
  CHECK(p.value(-1.0) == 0.2);
  CHECK(p.value(0.5) == doctest::Approx(0.4));
  CHECK(p.value(2.0) == 0.5);
  CHECK_THROWS_AS(DelayProfile::table({{0.0, 0.2}, {0.0, 0.3}}, 0.5), ModelError);
  CHECK_THROWS_AS(DelayProfile::table({{0.0, -0.2}}, 0.5), ModelError);
  CHECK_THROWS_AS(DelayProfile::builtin(DK::sin_shift, -1.0), ModelError);
}

TEST_CASE("kind names round-trip") {
  for (DK k : kBuiltins) CHECK(delay_kind_from_string(to_string(k)) == k);
  CHECK(delay_kind_from_string("table") == DK::table);
  CHECK_FALSE(delay_kind_from_string("sine"));
}

}
