#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

#include "neckstress/elasticity.hpp"
#include "neckstress/geometry.hpp"

namespace neckstress {

// vbar = (x_d - h2(x')) / delta(x'), the gap-linear interpolant between the inclusions.
double vbar(const NeckProfile& p, const Eigen::Vector2d& x);
Eigen::Vector2d vbar_gradient(const NeckProfile& p, const Eigen::Vector2d& x);

// vtilde = psi(x1, eps + h1(x1)) vbar(x); equals psi on the upper graph and 0 on the lower one.
using PlanarMap = std::function<Eigen::Vector2d(const Eigen::Vector2d&)>;
Eigen::Vector2d vtilde(const NeckProfile& p, const PlanarMap& psi, const Eigen::Vector2d& x);
Eigen::Vector2d vtilde(const NeckProfile& p, const RigidMotion& psi, const Eigen::Vector2d& x);
// (grad vtilde)_ij = d vtilde_i / d x_j. The map version differentiates psi along the graph numerically.
Eigen::Matrix2d vtilde_gradient(const NeckProfile& p, const RigidMotion& psi, const Eigen::Vector2d& x);
Eigen::Matrix2d vtilde_gradient(const NeckProfile& p, const PlanarMap& psi, const Eigen::Vector2d& x);

// rho^1_{k,m}: 1 if m < k, |log eps| if m = k, eps^{(k-m)/m} if m > k.
// rho^2_{k,m}: same with eps^{(k-m)/(2m)}.
double rho(int kind, double k, double m, double epsilon);
// Exponent of eps and power of |log eps| in the rho law.
std::pair<double, int> rho_exponent(int kind, double k, double m);

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int evaluations = 0;
};

// int_0^R r^k / (eps + kappa0 r^m)^p dr, adaptive Gauss-Kronrod on panels refined
// geometrically toward r = 0 around the scale (eps/kappa0)^{1/m}.
QuadratureResult singular_integral_oracle(double k, double m, double p, double epsilon, double R,
                                          double kappa0 = 1.0, double rel_tol = 1e-8);

// Exponent and |log eps| power of the oracle integral as eps -> 0.
std::pair<double, int> singular_integral_exponent(double k, double m, double p);

// Upper-bound shape for an a11 entry of the flat-contact geometry; alpha, beta are 1-based
// indices into the rigid basis (translations first).
double flat_entry_oracle(int d, double sigma_area, double epsilon, int alpha, int beta);
// Log factor present in the flat entry shape.
bool flat_entry_has_log(int d, int alpha, int beta);
// rho-law scaling of an a11 entry for relative convexity of order m.
double power_entry_scaling(int d, double m, double epsilon, int alpha, int beta);
std::pair<double, int> power_entry_exponent(int d, double m, int alpha, int beta);

struct RatePrediction {
  int dim = 2;
  bool flat = false;
  double m = 2.0;
  double sigma_area = 0.0;
  std::string regime;
  double exponent = 0.0;  // of eps in the sup-norm of grad u
  int log_power = 0;      // power of |log eps| multiplying eps^exponent
};

RatePrediction predicted_rate(int d, double m);
RatePrediction predicted_rate_flat(int d, double sigma_area);

// Right-hand side envelope of the matching pointwise gradient bound at |x'| = r in
// dimension p.dim, times the caller's calibration constant.
double pointwise_bound(const NeckProfile& p, double r, double phi_norm = 1.0, double calibration = 1.0);

// Maximizer of the pointwise envelope over |x'| in [0, r_max].
double envelope_argmax(const NeckProfile& p, double r_max);

}  // namespace neckstress
