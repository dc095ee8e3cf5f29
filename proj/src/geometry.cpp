#include "neckstress/geometry.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "neckstress/error.hpp"

namespace neckstress {

namespace {

// Plateau-free radial coordinate: distance to the flat set for Flat, |x'| for Power.
double outside(const NeckProfile& p, double r) {
  return p.kind == ProfileKind::Flat ? std::max(r - p.r0, 0.0) : r;
}

void check_chart(const NeckProfile& p, double r) {
  if (!(r <= 2.0 * p.r_neck))
    throw ChartExceeded("|x'| = " + std::to_string(r) + " outside the neck chart |x'| <= " +
                        std::to_string(2.0 * p.r_neck));
}

}  // namespace

double NeckProfile::h1r(double r) const {
  const double t = outside(*this, r);
  if (kind == ProfileKind::Flat) return 0.5 * kappa0 * t * t;
  return 0.5 * kappa0 * std::pow(t, m);
}

double NeckProfile::dh1r(double r) const {
  const double t = outside(*this, r);
  if (kind == ProfileKind::Flat) return kappa0 * t;
  if (t == 0.0) return 0.0;
  return 0.5 * kappa0 * m * std::pow(t, m - 1.0);
}

double NeckProfile::d2h1r(double r) const {
  const double t = outside(*this, r);
  if (kind == ProfileKind::Flat) return r > r0 ? kappa0 : 0.0;
  if (t == 0.0) return m == 2.0 ? kappa0 : 0.0;
  return 0.5 * kappa0 * m * (m - 1.0) * std::pow(t, m - 2.0);
}

double NeckProfile::flat_area() const {
  if (kind != ProfileKind::Flat || r0 == 0.0) return 0.0;
  // volume of the (d-1)-ball of radius r0
  const double k = dim - 1;
  return std::pow(std::numbers::pi, 0.5 * k) / std::tgamma(0.5 * k + 1.0) * std::pow(r0, k);
}

double NeckProfile::neck_scale() const {
  const double order = kind == ProfileKind::Flat ? 2.0 : m;
  return std::pow(epsilon / kappa0, 1.0 / order);
}

NeckProfile make_profile(ProfileKind kind, int dim, double epsilon, double kappa0, double m,
                         double r0, double r_neck, double outer_radius) {
  if (dim < 2) throw InvalidArgument("dim must be >= 2");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidArgument("epsilon must be > 0");
  if (!(kappa0 > 0.0) || !std::isfinite(kappa0))
    throw InvalidArgument("kappa0 must be > 0 (h1 - h2 would not be convex)");
  if (!(r_neck > 0.0)) throw InvalidArgument("r_neck must be > 0");
  if (!(outer_radius >= 5.0 * r_neck)) throw InvalidArgument("outer_radius must be >= 5 r_neck");
  if (kind == ProfileKind::Power) {
    if (!(m >= 2.0) || !std::isfinite(m)) throw InvalidArgument("convexity order m must be >= 2");
    r0 = 0.0;
  } else {
    if (!(r0 >= 0.0)) throw InvalidArgument("r0 must be >= 0");
    if (!(r0 < r_neck)) throw InvalidArgument("r0 must be < r_neck");
    // r0 = 0 needs no special casing: the formulas reduce to the m = 2 point contact
    m = 2.0;
  }
  NeckProfile p;
  p.kind = kind;
  p.dim = dim;
  p.epsilon = epsilon;
  p.kappa0 = kappa0;
  p.m = m;
  p.r0 = r0;
  p.r_neck = r_neck;
  p.outer_radius = outer_radius;
  return p;
}

NeckProfile with_epsilon(const NeckProfile& p, double epsilon) {
  return make_profile(p.kind, p.dim, epsilon, p.kappa0, p.m, p.r0, p.r_neck, p.outer_radius);
}

double gap(const NeckProfile& p, double x1) {
  const double r = std::abs(x1);
  check_chart(p, r);
  return p.epsilon + 2.0 * p.h1r(r);
}

double gap(const NeckProfile& p, const Eigen::VectorXd& xprime) {
  const double r = xprime.norm();
  check_chart(p, r);
  return p.epsilon + 2.0 * p.h1r(r);
}

double dist_to_flat(const NeckProfile& p, double x1) {
  if (p.kind != ProfileKind::Flat) throw WrongKind("dist_to_flat needs a Flat profile");
  return std::max(std::abs(x1) - p.r0, 0.0);
}

double dist_to_flat(const NeckProfile& p, const Eigen::VectorXd& xprime) {
  return dist_to_flat(p, xprime.norm());
}

}  // namespace neckstress
