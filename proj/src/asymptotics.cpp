#include "neckstress/asymptotics.hpp"

#include <array>
#include <cmath>
#include <queue>
#include <string>

#include "neckstress/error.hpp"

namespace neckstress {

namespace {

bool same(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

void check_in_gap(const NeckProfile& p, const Eigen::Vector2d& x) {
  const double lo = p.h2(x.x()), hi = p.top(x.x());
  const double tol = 1e-12 * std::max(1.0, std::abs(hi));
  if (x.y() < lo - tol || x.y() > hi + tol)
    throw ChartExceeded("point (" + std::to_string(x.x()) + ", " + std::to_string(x.y()) + ") is not in the gap");
}

// Gauss-Kronrod 7/15 on [a, b].
struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <typename F>
Panel gk15(const F& f, double a, double b) {
  static constexpr std::array<double, 8> xk = {0.991455371120812639, 0.949107912342758525, 0.864864423359769073,
                                               0.741531185599394440, 0.586087235467691130, 0.405845151377397167,
                                               0.207784955007898468, 0.0};
  static constexpr std::array<double, 8> wk = {0.022935322010529225, 0.063092092629978553, 0.104790010322250184,
                                               0.140653259715525919, 0.169004726639267903, 0.190350578064785410,
                                               0.204432940075298892, 0.209482141084727828};
  static constexpr std::array<double, 4> wg = {0.129484966168869693, 0.279705391489276668, 0.381830050505118945,
                                               0.417959183673469388};
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double k = wk[7] * fc, g = wg[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double s = f(c - h * xk[i]) + f(c + h * xk[i]);
    k += wk[i] * s;
    if (i % 2 == 1) g += wg[i / 2] * s;
  }
  return {a, b, k * h, std::abs((k - g) * h)};
}

}  // namespace

double vbar(const NeckProfile& p, const Eigen::Vector2d& x) {
  const double d = gap(p, x.x());
  check_in_gap(p, x);
  return (x.y() - p.h2(x.x())) / d;
}

Eigen::Vector2d vbar_gradient(const NeckProfile& p, const Eigen::Vector2d& x) {
  const double d = gap(p, x.x());
  check_in_gap(p, x);
  const double v = (x.y() - p.h2(x.x())) / d;
  const double dd = p.dh1(x.x()) - p.dh2(x.x());
  return {(-p.dh2(x.x()) - v * dd) / d, 1.0 / d};
}

Eigen::Vector2d vtilde(const NeckProfile& p, const PlanarMap& psi, const Eigen::Vector2d& x) {
  return psi(Eigen::Vector2d(x.x(), p.top(x.x()))) * vbar(p, x);
}

Eigen::Vector2d vtilde(const NeckProfile& p, const RigidMotion& psi, const Eigen::Vector2d& x) {
  return vtilde(p, PlanarMap([&psi](const Eigen::Vector2d& y) -> Eigen::Vector2d { return psi(y); }), x);
}

Eigen::Matrix2d vtilde_gradient(const NeckProfile& p, const RigidMotion& psi, const Eigen::Vector2d& x) {
  const Eigen::Vector2d y(x.x(), p.top(x.x()));
  const Eigen::Matrix2d G = psi.gradient();
  // derivative of psi along the upper graph
  const Eigen::Vector2d dpsi = G.col(0) + p.dh1(x.x()) * G.col(1);
  Eigen::Matrix2d out = psi(y) * vbar_gradient(p, x).transpose();
  out.col(0) += vbar(p, x) * dpsi;
  return out;
}

Eigen::Matrix2d vtilde_gradient(const NeckProfile& p, const PlanarMap& psi, const Eigen::Vector2d& x) {
  const double h = 1e-6 * std::max(1.0, std::abs(x.x()));
  auto top = [&](double s) { return psi(Eigen::Vector2d(s, p.top(s))); };
  const Eigen::Vector2d dpsi = (top(x.x() + h) - top(x.x() - h)) / (2 * h);
  Eigen::Matrix2d out = top(x.x()) * vbar_gradient(p, x).transpose();
  out.col(0) += vbar(p, x) * dpsi;
  return out;
}

std::pair<double, int> rho_exponent(int kind, double k, double m) {
  if (kind != 1 && kind != 2) throw InvalidArgument("rho kind must be 1 or 2");
  if (!(k >= 1.0) || !(m >= 2.0)) throw InvalidArgument("rho needs k >= 1 and m >= 2");
  if (same(m, k)) return {0.0, 1};
  if (m < k) return {0.0, 0};
  return {(k - m) / (kind == 1 ? m : 2.0 * m), 0};
}

double rho(int kind, double k, double m, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw InvalidArgument("rho needs eps in (0, 1/2)");
  const auto [e, l] = rho_exponent(kind, k, m);
  return std::pow(epsilon, e) * std::pow(std::abs(std::log(epsilon)), l);
}

std::pair<double, int> singular_integral_exponent(double k, double m, double p) {
  const double e = (k + 1.0 - p * m) / m;
  if (std::abs(e) <= 1e-12) return {0.0, 1};
  if (e > 0.0) return {0.0, 0};
  return {e, 0};
}

QuadratureResult singular_integral_oracle(double k, double m, double p, double epsilon, double R, double kappa0,
                                          double rel_tol) {
  if (!(k >= 0.0) || !(m >= 2.0) || !(p > 0.0)) throw InvalidArgument("oracle needs k >= 0, m >= 2, p > 0");
  if (!(epsilon > 0.0) || !(R > 0.0) || !(kappa0 > 0.0)) throw InvalidArgument("oracle needs eps, R, kappa0 > 0");
  QuadratureResult res;
  auto f = [&](double r) {
    ++res.evaluations;
    return std::pow(r, k) / std::pow(epsilon + kappa0 * std::pow(r, m), p);
  };
  // panel breakpoints: geometric around the neck scale
  const double s = std::pow(epsilon / kappa0, 1.0 / m);
  std::vector<double> cuts{0.0};
  for (double t = s / 256.0; t < R; t *= 2.0) cuts.push_back(t);
  cuts.push_back(R);
  std::priority_queue<Panel> heap;
  double value = 0.0, error = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    const Panel q = gk15(f, cuts[i - 1], cuts[i]);
    heap.push(q);
    value += q.value;
    error += q.error;
  }
  const int max_evals = 2'000'000;
  while (error > rel_tol * std::abs(value) && res.evaluations < max_evals) {
    const Panel q = heap.top();
    heap.pop();
    const double mid = 0.5 * (q.a + q.b);
    const Panel l = gk15(f, q.a, mid), r = gk15(f, mid, q.b);
    value += l.value + r.value - q.value;
    error += l.error + r.error - q.error;
    heap.push(l);
    heap.push(r);
  }
  // recompute the sums to shed accumulated rounding
  value = error = 0.0;
  while (!heap.empty()) {
    value += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  if (!(error <= rel_tol * std::abs(value)) || !std::isfinite(value))
    throw QuadratureError("oracle quadrature did not reach relative tolerance " + std::to_string(rel_tol) +
                          " (k=" + std::to_string(k) + ", m=" + std::to_string(m) + ", p=" + std::to_string(p) +
                          ", eps=" + std::to_string(epsilon) + ")");
  res.value = value;
  res.error_estimate = error;
  return res;
}

namespace {

enum class Pair { TransDiag, RotDiag, TransTrans, TransRot, RotRot };

Pair classify(int d, int alpha, int beta) {
  const int n = rigid_count(d);
  if (alpha < 1 || beta < 1 || alpha > n || beta > n)
    throw InvalidArgument("entry index out of range for d = " + std::to_string(d));
  const bool ta = alpha <= d, tb = beta <= d;
  if (alpha == beta) return ta ? Pair::TransDiag : Pair::RotDiag;
  if (ta && tb) return Pair::TransTrans;
  if (ta != tb) return Pair::TransRot;
  return Pair::RotRot;
}

}  // namespace

double flat_entry_oracle(int d, double S, double eps, int alpha, int beta) {
  if (d < 2) throw InvalidArgument("flat_entry_oracle: d must be >= 2");
  if (!(S >= 0.0) || !(eps > 0.0 && eps < 1.0)) throw InvalidArgument("flat_entry_oracle: bad |Sigma'| or eps");
  const double L = std::abs(std::log(eps)), se = std::sqrt(eps);
  const Pair k = classify(d, alpha, beta);
  if (d == 2) {
    switch (k) {
      case Pair::TransDiag: return S / eps + 1.0 / se;
      case Pair::RotDiag: return S * S * S / eps + 1.0;
      case Pair::TransTrans: return S / se + L;
      case Pair::TransRot: return S * S / se + 1.0;
      case Pair::RotRot: break;
    }
    throw InvalidArgument("flat_entry_oracle: unsupported entry");
  }
  const double q = d - 1.0;
  switch (k) {
    case Pair::TransDiag: return S / eps + (d == 3 ? L : 1.0);
    case Pair::RotDiag: return std::pow(S, (d + 1) / q) / eps + 1.0;
    case Pair::TransTrans: return S / se + std::pow(S, (d - 2) / q) * L + 1.0;
    case Pair::TransRot: return std::pow(S, d / q) / se + S * L + 1.0;
    case Pair::RotRot: return std::pow(S, (d + 1) / q) / se + std::pow(S, d / q) * L + 1.0;
  }
  throw InvalidArgument("flat_entry_oracle: unsupported entry");
}

bool flat_entry_has_log(int d, int alpha, int beta) {
  const Pair k = classify(d, alpha, beta);
  if (d == 2) return k == Pair::TransTrans;
  return k == Pair::TransTrans || k == Pair::TransRot || k == Pair::RotRot || (d == 3 && k == Pair::TransDiag);
}

std::pair<double, int> power_entry_exponent(int d, double m, int alpha, int beta) {
  switch (classify(d, alpha, beta)) {
    case Pair::TransDiag: return rho_exponent(1, d - 1, m);
    case Pair::RotDiag: return rho_exponent(1, d + 1, m);
    case Pair::TransTrans: return rho_exponent(2, 2 * (d - 1), m);
    case Pair::TransRot: return rho_exponent(2, 2 * d, m);
    case Pair::RotRot: return rho_exponent(2, 2 * (d + 1), m);
  }
  return {0.0, 0};
}

double power_entry_scaling(int d, double m, double eps, int alpha, int beta) {
  if (!(eps > 0.0 && eps < 0.5)) throw InvalidArgument("power_entry_scaling needs eps in (0, 1/2)");
  const auto [e, l] = power_entry_exponent(d, m, alpha, beta);
  return std::pow(eps, e) * std::pow(std::abs(std::log(eps)), l);
}

RatePrediction predicted_rate(int d, double m) {
  if (d < 2 || !(m >= 2.0)) throw InvalidArgument("predicted_rate needs d >= 2 and m >= 2");
  RatePrediction r;
  r.dim = d;
  r.m = m;
  if (same(m, d - 1.0)) {
    r.regime = "m=d-1";
    r.exponent = -1.0;
    r.log_power = -1;
  } else if (m < d - 1.0) {
    r.regime = "m<d-1";
    r.exponent = -1.0;
  } else if (same(m, d + 1.0)) {
    r.regime = "m=d+1";
    r.exponent = -(1.0 - 1.0 / m);
    r.log_power = -1;
  } else if (m < d + 1.0) {
    // the larger of the two envelope terms decides the rate
    r.regime = "d-1<m<d+1";
    r.exponent = -std::max(1.0 - 1.0 / m, (d - 1.0) / m);
  } else {
    r.regime = "m>d+1";
    r.exponent = -d / m;
  }
  return r;
}

RatePrediction predicted_rate_flat(int d, double sigma_area) {
  if (!(sigma_area >= 0.0)) throw InvalidArgument("predicted_rate_flat: negative area");
  if (sigma_area == 0.0) return predicted_rate(d, 2.0);
  RatePrediction r;
  r.dim = d;
  r.flat = true;
  r.sigma_area = sigma_area;
  r.regime = "flat";
  return r;
}

double pointwise_bound(const NeckProfile& p, double r, double phi_norm, double calibration) {
  const int d = p.dim;
  const double eps = p.epsilon;
  if (!(r >= 0.0) || r > 2.0 * p.r_neck) throw ChartExceeded("pointwise_bound: |x'| outside the chart");
  double e;
  if (p.kind == ProfileKind::Flat) {
    const double S = p.flat_area(), t = std::max(r - p.r0, 0.0);
    const double den = eps + t * t;
    if (d == 2)
      e = eps / (S + std::sqrt(eps)) / den + eps / (S * S * S + eps) * r / den;
    else if (d == 3)
      e = eps / (S + eps * std::abs(std::log(eps))) / den + eps / (S * S + eps) * r / den;
    else
      e = eps / (S + eps) / den + eps / (std::pow(S, (d + 1.0) / (d - 1.0)) + eps) * r / den;
  } else {
    const double m = p.m, den = eps + p.kappa0 * std::pow(r, m), L = std::abs(std::log(eps));
    const double tr = std::pow(eps, 1.0 - (d - 1.0) / m) / den;
    if (same(m, d - 1.0))
      e = 1.0 / (L * den) + r / den + 1.0;
    else if (m < d - 1.0)
      e = 1.0 / den;
    else if (same(m, d + 1.0))
      e = tr + r / (L * den) + 1.0;
    else if (m < d + 1.0)
      e = tr + r / den + 1.0;
    else
      e = tr + std::pow(eps, 1.0 - (d + 1.0) / m) * r / den + 1.0;
  }
  return calibration * e * phi_norm;
}

double envelope_argmax(const NeckProfile& p, double r_max) {
  auto f = [&](double r) { return pointwise_bound(p, r); };
  // log-spaced scan from far below the neck scale, then golden-section refinement
  const int n = 2000;
  const double lo = std::min(1e-6, 1e-3 * p.neck_scale());
  double best_r = 0.0, best = f(0.0);
  std::vector<double> rs{0.0};
  for (int i = 0; i <= n; ++i) rs.push_back(lo * std::pow(r_max / lo, double(i) / n));
  std::size_t bi = 0;
  for (std::size_t i = 1; i < rs.size(); ++i)
    if (const double v = f(rs[i]); v > best) {
      best = v;
      best_r = rs[i];
      bi = i;
    }
  if (bi == 0 || bi + 1 >= rs.size()) return best_r;
  double a = rs[bi - 1], b = rs[bi + 1];
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 100; ++it) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (f(c) >= f(d)) b = d;
    else a = c;
  }
  return 0.5 * (a + b);
}

}  // namespace neckstress
