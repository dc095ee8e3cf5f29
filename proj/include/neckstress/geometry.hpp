#pragma once

#include <Eigen/Dense>

namespace neckstress {

enum class ProfileKind { Flat, Power };

// Neck geometry: D1 sits above x2 = eps + h1(x1), D2 below x2 = h2(x1).
// h1 - h2 is kappa0 |x'|^m (Power) or kappa0 dist(x', flat set)^2 (Flat);
// the split is symmetric, h2 = -h1.
struct NeckProfile {
  ProfileKind kind = ProfileKind::Power;
  int dim = 2;
  double epsilon = 0.01;
  double kappa0 = 1.0;
  double m = 2.0;
  double r0 = 0.0;
  double r_neck = 1.0;
  double outer_radius = 5.0;

  // Radial profile of h1 and its first two derivatives in r = |x'|.
  double h1r(double r) const;
  double dh1r(double r) const;
  double d2h1r(double r) const;

  // Signed abscissa versions for the planar case.
  double h1(double x1) const { return h1r(std::abs(x1)); }
  double h2(double x1) const { return -h1r(std::abs(x1)); }
  double dh1(double x1) const { return x1 < 0 ? -dh1r(-x1) : dh1r(x1); }
  double dh2(double x1) const { return -dh1(x1); }
  double top(double x1) const { return epsilon + h1(x1); }

  // Distance from the origin to where the gap starts opening.
  double contact_radius() const { return kind == ProfileKind::Flat ? r0 : 0.0; }
  // |Sigma'|, the (d-1)-volume of the flat set.
  double flat_area() const;
  // Horizontal scale over which the gap doubles from eps.
  double neck_scale() const;
};

NeckProfile make_profile(ProfileKind kind, int dim, double epsilon, double kappa0, double m,
                         double r0, double r_neck, double outer_radius);

// Copy of p with a different separation.
NeckProfile with_epsilon(const NeckProfile& p, double epsilon);

double gap(const NeckProfile& p, double x1);
double gap(const NeckProfile& p, const Eigen::VectorXd& xprime);
double dist_to_flat(const NeckProfile& p, double x1);
double dist_to_flat(const NeckProfile& p, const Eigen::VectorXd& xprime);

}  // namespace neckstress
