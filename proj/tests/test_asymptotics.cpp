#include <cmath>

#include "doctest.h"
#include "neckstress/asymptotics.hpp"
#include "neckstress/error.hpp"

using namespace neckstress;
using Eigen::Vector2d;

namespace {
NeckProfile power(double m, double eps, int dim = 2) {
  return make_profile(ProfileKind::Power, dim, eps, 1.0, m, 0.0, 1.0, 5.0);
}
NeckProfile flat(double r0, double eps, int dim = 2) {
  return make_profile(ProfileKind::Flat, dim, eps, 1.0, 2.0, r0, 1.0, 5.0);
}
}  // namespace

TEST_CASE("rho laws") {
  CHECK(rho(1, 1, 2, 1e-4) == doctest::Approx(100.0));
  CHECK(rho(1, 3, 2, 1e-4) == 1.0);
  CHECK(rho(1, 2, 2, std::exp(-10.0)) == doctest::Approx(10.0));
  CHECK(rho(2, 2, 4, 1e-4) == doctest::Approx(std::pow(1e-4, -0.25)));
  CHECK(rho(2, 4, 4, 1e-3) == doctest::Approx(std::abs(std::log(1e-3))));
  CHECK_THROWS_AS(rho(1, 1, 2, 0.6), InvalidArgument);
  CHECK_THROWS_AS(rho(3, 1, 2, 0.1), InvalidArgument);
}

TEST_CASE("oracle matches arctan antiderivative") {
  for (double eps : {1e-2, 1e-4, 1e-6}) {
    for (double R : {0.5, 1.0, 2.0}) {
      const auto q = singular_integral_oracle(0, 2, 1, eps, R);
      const double exact = std::atan(R / std::sqrt(eps)) / std::sqrt(eps);
      CHECK(std::abs(q.value - exact) <= 1e-8 * exact);
    }
  }
  const auto q = singular_integral_oracle(0, 2, 1, 1e-4, 1.0, 4.0);
  CHECK(q.value == doctest::Approx(std::atan(2.0 / 1e-2) / 2e-2).epsilon(1e-9));
}

TEST_CASE("oracle exponent classification") {
  CHECK(singular_integral_exponent(0, 2, 1).first == doctest::Approx(-0.5));
  CHECK(singular_integral_exponent(1, 2, 1).second == 1);
  CHECK(singular_integral_exponent(3, 2, 1).first == 0.0);
  // p = 1 reproduces rho^1 with k + 1, p = 1/2 reproduces rho^2 with 2(k + 1)
  for (double m : {2.0, 3.0, 4.0, 6.0})
    for (double k : {0.0, 1.0, 2.0, 3.0, 4.0}) {
      CHECK(singular_integral_exponent(k, m, 1) == rho_exponent(1, k + 1, m));
      CHECK(singular_integral_exponent(k, m, 0.5) == rho_exponent(2, 2 * (k + 1), m));
    }
  CHECK_THROWS_AS(singular_integral_oracle(0, 1.5, 1, 1e-3, 1), InvalidArgument);
}

TEST_CASE("vbar and vtilde") {
  const auto p = power(2, 0.01);
  const Vector2d lo(0.2, p.h2(0.2)), hi(0.2, p.top(0.2)), mid(0.2, 0.5 * (p.h2(0.2) + p.top(0.2)));
  CHECK(vbar(p, lo) == doctest::Approx(0.0));
  CHECK(vbar(p, hi) == doctest::Approx(1.0));
  CHECK(vbar(p, mid) == doctest::Approx(0.5));
  CHECK(vbar_gradient(p, mid).y() == doctest::Approx(1.0 / gap(p, 0.2)));
  CHECK_THROWS_AS(vbar(p, Vector2d(0.2, 1.0)), ChartExceeded);
  CHECK_THROWS_AS(vbar(p, Vector2d(2.5, 0.0)), ChartExceeded);

  for (const auto& psi : rigid_basis(2)) {
    for (double x1 : {-1.5, -0.3, 0.0, 0.7, 1.9}) {
      const Vector2d up(x1, p.top(x1)), down(x1, p.h2(x1));
      CHECK((vtilde(p, psi, up) - psi(up)).norm() < 1e-14);
      CHECK(vtilde(p, psi, down).norm() < 1e-14);
    }
  }
  // analytic gradient against central differences
  const auto psi = rigid_basis(2)[2];
  const Vector2d x(0.31, 0.002);
  const double h = 1e-7;
  Eigen::Matrix2d fd;
  for (int j = 0; j < 2; ++j) {
    Vector2d e = Vector2d::Zero();
    e(j) = h;
    fd.col(j) = (vtilde(p, psi, x + e) - vtilde(p, psi, x - e)) / (2 * h);
  }
  CHECK((vtilde_gradient(p, psi, x) - fd).norm() < 1e-5 * fd.norm());
  const PlanarMap sq = [](const Vector2d& y) { return Vector2d(y.x() * y.x(), y.y()); };
  for (int j = 0; j < 2; ++j) {
    Vector2d e = Vector2d::Zero();
    e(j) = h;
    fd.col(j) = (vtilde(p, sq, x + e) - vtilde(p, sq, x - e)) / (2 * h);
  }
  CHECK((vtilde_gradient(p, sq, x) - fd).norm() < 1e-5 * fd.norm());
}

TEST_CASE("vbar is the minimal fiber energy") {
  const auto p = power(2, 0.01);
  const double x1 = 0.4, a = p.h2(x1), b = p.top(x1), d = b - a;
  const double linear = 1.0 / d;
  // competitors t + c sin(pi t) on the unit fiber have energy (1 + c^2 pi^2 / 2) / d
  for (double c : {-0.5, -0.1, 0.05, 0.3}) {
    const int n = 2000;
    double e = 0.0;
    for (int i = 0; i < n; ++i) {
      const double t = (i + 0.5) / n;
      const double dv = (1.0 + c * M_PI * std::cos(M_PI * t)) / d;
      e += dv * dv * d / n;
    }
    CHECK(e > linear);
  }
  const double dvbar = vbar_gradient(p, Vector2d(x1, 0.0)).y();
  CHECK(dvbar * dvbar * d == doctest::Approx(linear));
}

TEST_CASE("predicted rates") {
  CHECK(predicted_rate(2, 2).exponent == doctest::Approx(-0.5));
  const auto d3 = predicted_rate(3, 2);
  CHECK(d3.exponent == -1.0);
  CHECK(d3.log_power == -1);
  CHECK(d3.regime == "m=d-1");
  CHECK(predicted_rate_flat(2, 0.6).exponent == 0.0);
  CHECK(predicted_rate(4, 2).exponent == -1.0);
  CHECK(predicted_rate(2, 3).log_power == -1);
  CHECK(predicted_rate(2, 3).exponent == doctest::Approx(-2.0 / 3.0));
  CHECK(predicted_rate(2, 6).exponent == doctest::Approx(-1.0 / 3.0));
  CHECK(predicted_rate(2, 4).exponent == doctest::Approx(-0.5));
  CHECK(predicted_rate_flat(2, 0.0).exponent == doctest::Approx(-0.5));
  // continuity across the interior of each case, log factors only at the boundaries
  for (int d = 2; d <= 5; ++d) {
    const double lo = d - 1.0, hi = d + 1.0;
    if (lo >= 2.0) CHECK(predicted_rate(d, lo + 1e-9).exponent == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(predicted_rate(d, hi - 1e-9).exponent == doctest::Approx(-(1.0 - 1.0 / hi)).epsilon(1e-6));
    CHECK(predicted_rate(d, hi + 1e-9).exponent == doctest::Approx(-d / hi).epsilon(1e-6));
    CHECK(predicted_rate(d, hi).log_power == -1);
  }
}

TEST_CASE("entry scalings") {
  CHECK(flat_entry_oracle(2, 0.6, 1e-4, 1, 1) == doctest::Approx(0.6e4 + 100));
  CHECK(flat_entry_oracle(3, 0.6, 1e-4, 1, 1) == doctest::Approx(0.6e4 + std::abs(std::log(1e-4))));
  CHECK(flat_entry_oracle(4, 1.0, 1e-4, 5, 5) == doctest::Approx(1e4 + 1));
  CHECK(flat_entry_has_log(2, 1, 2));
  CHECK_FALSE(flat_entry_has_log(2, 3, 3));
  CHECK_THROWS_AS(flat_entry_oracle(2, 0.6, 1e-4, 4, 1), InvalidArgument);
  CHECK(power_entry_exponent(2, 2, 1, 1).first == doctest::Approx(-0.5));
  CHECK(power_entry_exponent(2, 2, 3, 3).first == 0.0);
  CHECK(power_entry_exponent(2, 2, 1, 2).second == 1);
  CHECK(power_entry_scaling(2, 4, 1e-4, 3, 3) == doctest::Approx(std::pow(1e-4, -0.25)));
}

TEST_CASE("pointwise envelopes") {
  // flat interior stays O(1) as eps -> 0
  const double e1 = pointwise_bound(flat(0.3, 1e-3), 0.1), e2 = pointwise_bound(flat(0.3, 1e-6), 0.1);
  CHECK(e2 < 1.5 * e1);
  CHECK(e2 < 3.0);
  // point contact m = 2 at x' = 0 scales like eps^{-1/2}
  const double s1 = pointwise_bound(power(2, 1e-4), 0.0), s2 = pointwise_bound(power(2, 1e-6), 0.0);
  CHECK(std::log(s2 / s1) / std::log(1e-2) == doctest::Approx(-0.5).epsilon(0.02));
  CHECK(pointwise_bound(power(2, 1e-4), 0.0, 2.0, 3.0) == doctest::Approx(6.0 * s1));
  // m > d + 1 peaks away from the origin, at the eps^{1/m} scale
  for (double eps : {1e-3, 1e-4, 1e-6}) {
    const double r = envelope_argmax(power(6, eps), 1.0);
    CHECK(r >= 0.5 * std::pow(eps, 1.0 / 6.0));
    CHECK(r <= 5.0 * std::pow(eps, 1.0 / 6.0));
  }
  CHECK(envelope_argmax(power(2, 1e-4), 1.0) < 1e-2);
  CHECK_THROWS_AS(pointwise_bound(power(2, 1e-4), 3.0), ChartExceeded);
}
