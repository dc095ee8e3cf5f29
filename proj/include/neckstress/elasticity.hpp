#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "neckstress/error.hpp"

namespace neckstress {

template <typename Scalar>
struct ElasticParams {
  Scalar lambda = Scalar(1);
  Scalar mu = Scalar(1);
  int dim = 2;

  bool valid() const { return mu > Scalar(0) && Scalar(dim) * lambda + Scalar(2) * mu > Scalar(0); }
  // Extreme eigenvalues of C acting on symmetric matrices.
  Scalar lower_bound() const { return std::min(Scalar(2) * mu, Scalar(dim) * lambda + Scalar(2) * mu); }
  Scalar upper_bound() const { return std::max(Scalar(2) * mu, Scalar(dim) * lambda + Scalar(2) * mu); }
};

using Params = ElasticParams<double>;

inline Params make_params(double lambda, double mu, int dim = 2) {
  Params p{lambda, mu, dim};
  if (dim < 2) throw InvalidArgument("dim must be >= 2");
  if (!p.valid()) throw InvalidArgument("Lame parameters must satisfy mu > 0 and d lambda + 2 mu > 0");
  return p;
}

template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& a, typename Derived::RealScalar tol = 1e-12) {
  using std::abs;
  const auto scale = std::max<typename Derived::RealScalar>(a.cwiseAbs().maxCoeff(), 1);
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

// Symmetric part of a gradient.
template <typename Derived>
auto strain(const Eigen::MatrixBase<Derived>& grad_u) {
  return (typename Derived::PlainObject(0.5 * (grad_u + grad_u.transpose())));
}

// C A = lambda tr(A) I + 2 mu A.
template <typename Scalar, typename Derived>
typename Derived::PlainObject lame_apply(const ElasticParams<Scalar>& p,
                                         const Eigen::MatrixBase<Derived>& a) {
  if (a.rows() != a.cols()) throw InvalidArgument("lame_apply: square matrix expected");
  if (!is_symmetric(a)) throw InvalidArgument("lame_apply: symmetric matrix expected");
  typename Derived::PlainObject out = Scalar(2) * p.mu * a;
  out.diagonal().array() += p.lambda * a.trace();
  return out;
}

// (C e_u) : e_v
template <typename Scalar, typename DerivedA, typename DerivedB>
Scalar energy_pairing(const ElasticParams<Scalar>& p, const Eigen::MatrixBase<DerivedA>& e_u,
                      const Eigen::MatrixBase<DerivedB>& e_v) {
  return p.lambda * e_u.trace() * e_v.trace() + Scalar(2) * p.mu * e_u.cwiseProduct(e_v).sum();
}

// Fourth-order tensor entry C_ijkl.
template <typename Scalar>
Scalar lame_tensor(const ElasticParams<Scalar>& p, int i, int j, int k, int l) {
  const auto d = [](int a, int b) { return a == b ? Scalar(1) : Scalar(0); };
  return p.lambda * d(i, j) * d(k, l) + p.mu * (d(i, k) * d(j, l) + d(i, l) * d(j, k));
}

// Rigid displacement: translation e_i, or rotation x_j e_k - x_k e_j (j < k).
struct RigidMotion {
  int index = 0;  // 0-based position in the basis
  int dim = 2;
  int j = -1, k = -1;  // rotation plane; j = -1 marks a translation along k

  bool is_translation() const { return j < 0; }

  template <typename Derived>
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> operator()(
      const Eigen::MatrixBase<Derived>& x) const {
    using V = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>;
    V out = V::Zero(dim);
    if (is_translation()) {
      out(k) = 1;
    } else {
      out(k) = x(j);
      out(j) = -x(k);
    }
    return out;
  }

  // Constant gradient, (grad psi)_ab = d psi_a / d x_b.
  Eigen::MatrixXd gradient() const {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(dim, dim);
    if (!is_translation()) {
      g(k, j) = 1;
      g(j, k) = -1;
    }
    return g;
  }
};

// d translations, then rotations in (j, k) lexicographic order.
inline std::vector<RigidMotion> rigid_basis(int d) {
  if (d < 2) throw InvalidArgument("rigid_basis: d must be >= 2");
  std::vector<RigidMotion> out;
  for (int i = 0; i < d; ++i) out.push_back({static_cast<int>(out.size()), d, -1, i});
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) out.push_back({static_cast<int>(out.size()), d, j, k});
  return out;
}

inline int rigid_count(int d) { return d * (d + 1) / 2; }

}  // namespace neckstress
