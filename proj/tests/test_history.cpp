#include "semidelay/error.hpp"
#include "semidelay/history.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace semidelay;

namespace {

Vector v1(double a) { return Vector::Constant(1, a); }

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_SUITE("history") {

TEST_CASE("new trajectory starts at the history junction") {
  SUBCASE("constant") {
    DenseTrajectory tr(HistoryFunction::constant(1.0, v2(1.0, 0.0)), 0.0, 2);
    CHECK(tr.size() == 1);
    CHECK(tr.time(0) == 0.0);
    CHECK(tr.state(0)[0] == 1.0);
    CHECK(tr.state(0)[1] == 0.0);
    CHECK_FALSE(tr.has_initial_derivative());
  }
  SUBCASE("affine") {
    DenseTrajectory tr(HistoryFunction::affine(1.0, v1(1.0), v1(1.0)), 0.0, 1);
    CHECK(tr.state(0)[0] == 1.0);
  }
  SUBCASE("sampled") {
    DenseTrajectory tr(HistoryFunction::sampled({-1.0, 0.0}, {v1(2.0), v1(0.5)}), 0.0, 1);
    CHECK(tr.state(0)[0] == 0.5);
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(DenseTrajectory(HistoryFunction::constant(1.0, v2(1, 0)), 0.0, 3), DimensionError);
  }
}

TEST_CASE("history evaluation and domain") {
  const auto ramp = HistoryFunction::affine(1.0, v1(1.0), v1(1.0));
  CHECK(ramp(-0.5)[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(ramp(-1.0)[0] == 0.0);
  CHECK_THROWS_AS(ramp(-1.001), OutOfRangeError);
  CHECK_THROWS_AS(ramp(0.001), OutOfRangeError);

  const auto s = HistoryFunction::sampled({-2.0, -1.0, 0.0}, {v1(0.0), v1(4.0), v1(2.0)});
  CHECK(s.span() == 2.0);
  CHECK(s(-1.5)[0] == 2.0);
  CHECK(s(-0.25)[0] == doctest::Approx(2.5));
  CHECK(s(-1.0)[0] == 4.0);

  CHECK_THROWS_AS(HistoryFunction::sampled({-1.0, -1.0, 0.0}, {v1(0), v1(0), v1(0)}), ModelError);
  CHECK_THROWS_AS(HistoryFunction::sampled({-1.0, -0.1}, {v1(0), v1(0)}), ModelError);
  CHECK_THROWS_AS(HistoryFunction::constant(-1.0, v1(0)), ModelError);
}

TEST_CASE("append requires strictly increasing times") {
  DenseTrajectory tr(HistoryFunction::constant(1.0, v1(1.0)), 0.0, 1);
  tr.set_initial_derivative(v1(0.0));
  tr.append(0.001, v1(1.0), v1(0.0));
  CHECK(tr.size() == 2);
  CHECK_THROWS_AS(tr.append(0.001, v1(1.0), v1(0.0)), OutOfRangeError);
  CHECK_THROWS_AS(tr.append(0.0005, v1(1.0), v1(0.0)), OutOfRangeError);
  CHECK(tr.size() == 2);
  CHECK_THROWS_AS(tr.set_initial_derivative(v1(1.0)), std::logic_error);
}

TEST_CASE("exact exponential nodes interpolate within 1e-10") {
  DenseTrajectory tr(HistoryFunction::constant(1.0, v1(1.0)), 0.0, 1);
  tr.set_initial_derivative(v1(-1.0));
  const double h = 0.01;
  for (int i = 1; i <= 100; ++i) {
    const double t = i * h;
    tr.append(t, v1(std::exp(-t)), v1(-std::exp(-t)));
  }
  CHECK(std::abs(tr.evaluate(0.005)[0] - std::exp(-0.005)) <= 1e-10);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double s = 0.0005 + i * 0.000999;
    worst = std::max(worst, std::abs(tr.evaluate(s)[0] - std::exp(-s)));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("evaluate: nodes exact, junction continuous, range checked") {
  DenseTrajectory tr(HistoryFunction::affine(1.0, v1(1.0), v1(1.0)), 0.0, 1);
  tr.set_initial_derivative(v1(-1.0));
  tr.append(0.1, v1(0.123456789012345), v1(0.3));
  tr.append(0.2, v1(-7.25), v1(0.1));
  CHECK(tr.evaluate(0.1)[0] == 0.123456789012345);
  CHECK(tr.evaluate(0.2)[0] == -7.25);
  CHECK(tr.evaluate(0.0)[0] == 1.0);
  CHECK(tr.evaluate(-1e-13)[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(tr.evaluate(-0.5)[0] == doctest::Approx(0.5));
  CHECK(tr.evaluate(-1.0)[0] == 0.0);
  CHECK_THROWS_AS(tr.evaluate(-1.01), OutOfRangeError);
  CHECK_THROWS_AS(tr.evaluate(0.2001), OutOfRangeError);
}

TEST_CASE("Hermite reproduces cubics to round-off") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const double c0 = u(rng), c1 = u(rng), c2 = u(rng), c3 = u(rng);
  auto p = [&](double t) { return c0 + t * (c1 + t * (c2 + t * c3)); };
  auto dp = [&](double t) { return c1 + t * (2 * c2 + 3 * t * c3); };
  DenseTrajectory tr(HistoryFunction::constant(0.5, v1(p(0.0))), 0.0, 1);
  tr.set_initial_derivative(v1(dp(0.0)));
  for (int i = 1; i <= 10; ++i) tr.append(0.3 * i, v1(p(0.3 * i)), v1(dp(0.3 * i)));
  std::uniform_real_distribution<double> s(0.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const double t = s(rng);
    CHECK(std::abs(tr.evaluate(t)[0] - p(t)) <= 1e-12 * (1.0 + std::abs(p(t))));
  }
}

TEST_CASE("node count grows by one per append") {
  DenseTrajectory tr(HistoryFunction::constant(1.0, v2(0, 0)), 2.0, 2);
  tr.set_initial_derivative(v2(0, 0));
  for (std::size_t i = 1; i <= 50; ++i) {
    tr.append(2.0 + 0.01 * static_cast<double>(i), v2(0, 0), v2(0, 0));
    CHECK(tr.size() == i + 1);
  }
  CHECK(tr.t0() == 2.0);
  CHECK(tr.lower_bound() == 1.0);
}

TEST_CASE("CSV export uses 17 significant digits and keeps the last row") {
  DenseTrajectory tr(HistoryFunction::constant(1.0, v2(1.0 / 3.0, 0.0)), 0.0, 2);
  tr.set_initial_derivative(v2(0, 0));
  for (int i = 1; i <= 5; ++i) tr.append(0.1 * i, v2(0.1 * i, -1.0), v2(0, 0));
  std::ostringstream os;
  tr.write_csv(os, 2);
  const std::string text = os.str();
  CHECK(text.rfind("t,x_1,x_2\n", 0) == 0);
  CHECK(text.find("0,0.33333333333333331,0\n") != std::string::npos);
  std::size_t rows = 0;
  for (char c : text) rows += c == '\n';
  CHECK(rows == 1 + 4);  // header, nodes 0, 2, 4 and the last node 5
  CHECK(text.find("0.5,0.5,-1\n") != std::string::npos);
}

}
