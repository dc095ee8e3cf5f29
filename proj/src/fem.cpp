#include "neckstress/fem.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "neckstress/error.hpp"

namespace neckstress {

namespace {

// Degree-2 rule on the reference triangle, barycentric points, weights sum to 1.
const std::array<Eigen::Vector3d, 3> kQuadPoints = {Eigen::Vector3d(2.0 / 3, 1.0 / 6, 1.0 / 6),
                                                    Eigen::Vector3d(1.0 / 6, 2.0 / 3, 1.0 / 6),
                                                    Eigen::Vector3d(1.0 / 6, 1.0 / 6, 2.0 / 3)};

// Gauss-Legendre on [0, 1].
void gauss3(std::array<double, 3>& t, std::array<double, 3>& w) {
  const double a = std::sqrt(0.6);
  t = {0.5 * (1 - a), 0.5, 0.5 * (1 + a)};
  w = {5.0 / 18, 8.0 / 18, 5.0 / 18};
}

Eigen::Matrix<double, 2, Eigen::Dynamic> cell_values(const DisplacementField& f, int cell) {
  const auto& sp = *f.space;
  const int n = sp.nodes_per_cell();
  Eigen::Matrix<double, 2, Eigen::Dynamic> u(2, n);
  for (int a = 0; a < n; ++a) u.col(a) = f.values.col(sp.cell_nodes[cell][a]);
  return u;
}

Eigen::Matrix<double, 2, 3> cell_dlam(const FeSpace& sp, int cell, double* area = nullptr) {
  const auto& t = sp.mesh->cells[cell];
  const auto& X = sp.mesh->nodes;
  return barycentric_gradients(X[t[0]], X[t[1]], X[t[2]], area);
}

Matrix2d gradient_in_cell(const DisplacementField& f, int cell, const Eigen::Vector3d& lam) {
  const auto dlam = cell_dlam(*f.space, cell);
  return cell_values(f, cell) * shape_gradients(f.space->order, lam, dlam).transpose();
}

void check_same_space(const DisplacementField& a, const DisplacementField& b) {
  if (a.space != b.space) throw InvalidArgument("fields live on different meshes");
}

}  // namespace

CellLocator::CellLocator(const Mesh& mesh) {
  const auto& X = mesh.nodes;
  Vector2d lo = X.front(), hi = X.front();
  for (const auto& x : X) {
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  const double side = std::max(1.0, std::sqrt(static_cast<double>(mesh.cells.size())));
  nx_ = ny_ = static_cast<int>(side);
  const Vector2d span = (hi - lo).cwiseMax(1e-300);
  lo_ = lo;
  inv_h_ = Vector2d(nx_ / span.x(), ny_ / span.y());
  auto bucket = [&](const Vector2d& x) {
    const Vector2d q = (x - lo_).cwiseProduct(inv_h_);
    return std::array<int, 2>{std::clamp(static_cast<int>(q.x()), 0, nx_ - 1),
                              std::clamp(static_cast<int>(q.y()), 0, ny_ - 1)};
  };
  std::vector<int> count(nx_ * ny_ + 1, 0);
  std::vector<std::array<int, 4>> range(mesh.cells.size());
  for (std::size_t e = 0; e < mesh.cells.size(); ++e) {
    const auto& t = mesh.cells[e];
    Vector2d a = X[t[0]].cwiseMin(X[t[1]]).cwiseMin(X[t[2]]);
    Vector2d b = X[t[0]].cwiseMax(X[t[1]]).cwiseMax(X[t[2]]);
    const auto p = bucket(a), q = bucket(b);
    range[e] = {p[0], p[1], q[0], q[1]};
    for (int i = p[0]; i <= q[0]; ++i)
      for (int j = p[1]; j <= q[1]; ++j) ++count[i * ny_ + j + 1];
  }
  for (std::size_t k = 1; k < count.size(); ++k) count[k] += count[k - 1];
  start_ = count;
  items_.resize(count.back());
  std::vector<int> fill(count.begin(), count.end() - 1);
  for (std::size_t e = 0; e < mesh.cells.size(); ++e) {
    const auto& r = range[e];
    for (int i = r[0]; i <= r[2]; ++i)
      for (int j = r[1]; j <= r[3]; ++j) items_[fill[i * ny_ + j]++] = static_cast<int>(e);
  }
}

std::optional<std::pair<int, Eigen::Vector3d>> CellLocator::find(const Mesh& mesh, const Vector2d& x) const {
  if (nx_ == 0) return std::nullopt;
  const Vector2d q = (x - lo_).cwiseProduct(inv_h_);
  if (q.x() < -1e-9 * nx_ || q.y() < -1e-9 * ny_ || q.x() > nx_ * (1 + 1e-9) || q.y() > ny_ * (1 + 1e-9))
    return std::nullopt;
  const int i = std::clamp(static_cast<int>(q.x()), 0, nx_ - 1);
  const int j = std::clamp(static_cast<int>(q.y()), 0, ny_ - 1);
  const int b = i * ny_ + j;
  int best = -1;
  Eigen::Vector3d best_lam;
  double best_min = -std::numeric_limits<double>::infinity();
  for (int k = start_[b]; k < start_[b + 1]; ++k) {
    const int e = items_[k];
    const auto& t = mesh.cells[e];
    const Vector2d &A = mesh.nodes[t[0]], &B = mesh.nodes[t[1]], &C = mesh.nodes[t[2]];
    const double area = triangle_area(A, B, C);
    Eigen::Vector3d lam(triangle_area(x, B, C), triangle_area(A, x, C), 0.0);
    lam.head<2>() /= area;
    lam(2) = 1.0 - lam(0) - lam(1);
    const double mn = lam.minCoeff();
    if (mn >= 0.0) return std::make_pair(e, lam);
    if (mn > best_min) {
      best_min = mn;
      best = e;
      best_lam = lam;
    }
  }
  // points on an edge may miss by rounding
  if (best >= 0 && best_min > -1e-10) return std::make_pair(best, best_lam);
  return std::nullopt;
}

std::shared_ptr<const FeSpace> make_space(std::shared_ptr<const Mesh> mesh, int order) {
  if (order != 1 && order != 2) throw InvalidArgument("element order must be 1 or 2");
  auto sp = std::make_shared<FeSpace>();
  sp->mesh = mesh;
  sp->order = order;
  sp->points = mesh->nodes;
  sp->node_tag.assign(mesh->nodes.size(), 0);
  std::map<std::pair<int, int>, BoundaryTag> tags;
  for (const auto& e : mesh->boundary) {
    sp->node_tag[e.nodes[0]] = sp->node_tag[e.nodes[1]] = static_cast<std::uint8_t>(e.tag);
    tags[{std::min(e.nodes[0], e.nodes[1]), std::max(e.nodes[0], e.nodes[1])}] = e.tag;
  }
  std::map<std::pair<int, int>, int> midpoint;
  sp->cell_nodes.resize(mesh->cells.size());
  for (std::size_t c = 0; c < mesh->cells.size(); ++c) {
    const auto& t = mesh->cells[c];
    auto& cn = sp->cell_nodes[c];
    cn.fill(-1);
    for (int k = 0; k < 3; ++k) cn[k] = t[k];
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      const auto key = std::make_pair(std::min(a, b), std::max(a, b));
      const auto tag = tags.find(key);
      if (tag != tags.end())
        sp->boundary_owner.push_back({static_cast<int>(c), k, tag->second});
      if (order == 1) continue;
      auto [it, fresh] = midpoint.try_emplace(key, static_cast<int>(sp->points.size()));
      if (fresh) {
        sp->points.push_back(0.5 * (mesh->nodes[a] + mesh->nodes[b]));
        sp->node_tag.push_back(tag != tags.end() ? static_cast<std::uint8_t>(tag->second) : 0);
      }
      cn[3 + k] = it->second;
    }
  }
  sp->locator = CellLocator(*mesh);
  return sp;
}

Eigen::Matrix<double, 2, 3> barycentric_gradients(const Vector2d& a, const Vector2d& b, const Vector2d& c,
                                                  double* area) {
  Matrix2d J;
  J.col(0) = b - a;
  J.col(1) = c - a;
  const double det = J.determinant();
  if (area) *area = 0.5 * det;
  // rows of J^{-1} are the gradients of lambda_1, lambda_2
  const Matrix2d Ji = J.inverse();
  Eigen::Matrix<double, 2, 3> g;
  g.col(1) = Ji.row(0).transpose();
  g.col(2) = Ji.row(1).transpose();
  g.col(0) = -g.col(1) - g.col(2);
  return g;
}

Eigen::VectorXd shape_values(int order, const Eigen::Vector3d& l) {
  if (order == 1) return l;
  Eigen::VectorXd n(6);
  for (int i = 0; i < 3; ++i) n(i) = l(i) * (2 * l(i) - 1);
  for (int k = 0; k < 3; ++k) n(3 + k) = 4 * l(k) * l((k + 1) % 3);
  return n;
}

Eigen::MatrixXd shape_gradients(int order, const Eigen::Vector3d& l, const Eigen::Matrix<double, 2, 3>& dl) {
  if (order == 1) return dl;
  Eigen::MatrixXd g(2, 6);
  for (int i = 0; i < 3; ++i) g.col(i) = (4 * l(i) - 1) * dl.col(i);
  for (int k = 0; k < 3; ++k) {
    const int j = (k + 1) % 3;
    g.col(3 + k) = 4 * (l(j) * dl.col(k) + l(k) * dl.col(j));
  }
  return g;
}

Eigen::MatrixXd element_stiffness(const FeSpace& sp, const Params& p, int cell) {
  double area;
  const auto dl = cell_dlam(sp, cell, &area);
  const int n = sp.nodes_per_cell();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  const int nq = sp.order == 1 ? 1 : 3;
  for (int q = 0; q < nq; ++q) {
    const Eigen::Vector3d lam = sp.order == 1 ? Eigen::Vector3d::Constant(1.0 / 3) : kQuadPoints[q];
    const double w = area / nq;
    const Eigen::MatrixXd G = shape_gradients(sp.order, lam, dl);
    const Eigen::MatrixXd GG = G.transpose() * G;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < 2; ++c)
          for (int d = 0; d < 2; ++d)
            K(2 * a + c, 2 * b + d) += w * (p.lambda * G(c, a) * G(d, b) + p.mu * G(d, a) * G(c, b) +
                                            (c == d ? p.mu * GG(a, b) : 0.0));
  }
  return K;
}

SparseMatrix assemble_stiffness(const FeSpace& sp, const Params& p) {
  const int n = sp.nodes_per_cell();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(sp.cell_nodes.size() * 4 * n * n);
  for (std::size_t c = 0; c < sp.cell_nodes.size(); ++c) {
    const Eigen::MatrixXd K = element_stiffness(sp, p, static_cast<int>(c));
    const auto& cn = sp.cell_nodes[c];
    for (int a = 0; a < 2 * n; ++a)
      for (int b = 0; b < 2 * n; ++b)
        trip.emplace_back(2 * cn[a / 2] + a % 2, 2 * cn[b / 2] + b % 2, K(a, b));
  }
  SparseMatrix K(sp.num_dofs(), sp.num_dofs());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

DisplacementField operator+(const DisplacementField& a, const DisplacementField& b) {
  check_same_space(a, b);
  return {a.space, a.values + b.values, a.label + "+" + b.label};
}

DisplacementField operator-(const DisplacementField& a, const DisplacementField& b) {
  check_same_space(a, b);
  return {a.space, a.values - b.values, a.label + "-" + b.label};
}

DisplacementField operator*(double s, const DisplacementField& a) { return {a.space, s * a.values, a.label}; }

DisplacementField interpolate(std::shared_ptr<const FeSpace> space, const Trace& f, std::string label) {
  DisplacementField out{space, Eigen::Matrix2Xd(2, space->num_nodes()), std::move(label)};
  for (Eigen::Index i = 0; i < space->num_nodes(); ++i) out.values.col(i) = f(space->points[i]);
  return out;
}

struct DirichletSolver::Impl {
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  bool direct_ready = false;
  bool pcg_failed = false;
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> pcg;
  bool pcg_ready = false;
};

DirichletSolver::DirichletSolver(std::shared_ptr<const FeSpace> space, const Params& params, SolverOptions opts)
    : space_(std::move(space)), params_(params), opts_(opts), impl_(std::make_unique<Impl>()) {
  if (params_.dim != 2) throw InvalidArgument("finite elements are planar: params.dim must be 2");
  k_ = assemble_stiffness(*space_, params_);
  const Eigen::Index ndof = space_->num_dofs();
  std::vector<int> pos(ndof);
  for (Eigen::Index i = 0; i < ndof; ++i) {
    auto& list = space_->node_tag[i / 2] ? fixed_ : free_;
    pos[i] = static_cast<int>(list.size());
    list.push_back(static_cast<int>(i));
  }
  std::vector<Eigen::Triplet<double>> ff, fd;
  for (int col = 0; col < k_.outerSize(); ++col) {
    const bool cfree = !space_->node_tag[col / 2];
    for (SparseMatrix::InnerIterator it(k_, col); it; ++it) {
      const int row = static_cast<int>(it.row());
      if (space_->node_tag[row / 2]) continue;
      (cfree ? ff : fd).emplace_back(pos[row], pos[col], it.value());
    }
  }
  kff_.resize(free_.size(), free_.size());
  kff_.setFromTriplets(ff.begin(), ff.end());
  kfd_.resize(free_.size(), fixed_.size());
  kfd_.setFromTriplets(fd.begin(), fd.end());

  if (opts_.kind == SolverKind::Direct) ensure_direct();
  if (opts_.kind != SolverKind::Direct && !free_.empty()) {
    impl_->pcg.setTolerance(opts_.tolerance);
    impl_->pcg.setMaxIterations(opts_.max_iterations);
    impl_->pcg.compute(kff_);
    impl_->pcg_ready = impl_->pcg.info() == Eigen::Success;
    if (!impl_->pcg_ready && opts_.kind == SolverKind::Pcg)
      throw SolverError("incomplete Cholesky preconditioner failed");
  }
}

DirichletSolver::~DirichletSolver() = default;

void DirichletSolver::ensure_direct() const {
  if (impl_->direct_ready || free_.empty()) return;
  impl_->ldlt.compute(kff_);
  if (impl_->ldlt.info() != Eigen::Success)
    throw SolverError("sparse LDLT factorization failed (matrix singular or not positive definite)");
  const Eigen::VectorXd D = impl_->ldlt.vectorD();
  const double cond = D.cwiseAbs().maxCoeff() / D.cwiseAbs().minCoeff();
  if (!(D.minCoeff() > 0.0)) throw SolverError("stiffness is not positive definite", cond);
  if (!(cond < 1e15)) throw SolverError("stiffness is numerically singular", cond);
  impl_->direct_ready = true;
}

std::pair<DisplacementField, SolveReport> DirichletSolver::solve(const BoundaryData& bc, std::string label) const {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& sp = *space_;
  Eigen::VectorXd g(fixed_.size());
  for (std::size_t k = 0; k < fixed_.size(); ++k) {
    const int node = fixed_[k] / 2;
    const auto it = bc.find(static_cast<BoundaryTag>(sp.node_tag[node]));
    if (it == bc.end())
      throw InvalidArgument(std::string("no boundary data for tag ") +
                            tag_name(static_cast<BoundaryTag>(sp.node_tag[node])));
    g(k) = it->second(sp.points[node])(fixed_[k] % 2);
  }
  const Eigen::VectorXd rhs = -(kfd_ * g);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(free_.size());
  SolveReport rep;
  rep.dofs = static_cast<Eigen::Index>(free_.size());
  const double rnorm = rhs.norm();
  if (!free_.empty() && rnorm > 0.0) {
    bool done = false;
    if (opts_.kind != SolverKind::Direct && impl_->pcg_ready) {
      bool skip;
      {
        std::lock_guard lock(mutex_);
        skip = impl_->pcg_failed && opts_.kind == SolverKind::Auto;
      }
      if (!skip) {
        {
          // the iterative solver keeps its iteration count in mutable members
          std::lock_guard lock(pcg_mutex_);
          x = impl_->pcg.solve(rhs);
          rep.iterations = static_cast<int>(impl_->pcg.iterations());
          done = impl_->pcg.info() == Eigen::Success;
        }
        rep.method = "pcg";
        if (!done) {
          if (opts_.kind == SolverKind::Pcg)
            throw SolverError("conjugate gradients did not converge within " +
                              std::to_string(opts_.max_iterations) + " iterations");
          std::lock_guard lock(mutex_);
          impl_->pcg_failed = true;
        }
      }
    }
    if (!done) {
      {
        std::lock_guard lock(mutex_);
        ensure_direct();
      }
      x = impl_->ldlt.solve(rhs);
      rep.method = rep.method.empty() ? "ldlt" : rep.method + "+ldlt";
    }
    rep.relative_residual = (kff_ * x - rhs).norm() / rnorm;
    if (!(rep.relative_residual <= std::max(opts_.tolerance, 1e-10)) || !x.allFinite())
      throw SolverError("relative residual " + std::to_string(rep.relative_residual) + " above tolerance");
  } else {
    rep.method = "trivial";
  }
  DisplacementField f{space_, Eigen::Matrix2Xd(2, sp.num_nodes()), std::move(label)};
  Eigen::Map<Eigen::VectorXd> u(f.values.data(), f.values.size());
  for (std::size_t k = 0; k < free_.size(); ++k) u(free_[k]) = x(k);
  for (std::size_t k = 0; k < fixed_.size(); ++k) u(fixed_[k]) = g(k);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(f), rep};
}

std::pair<DisplacementField, SolveReport> solve_dirichlet(std::shared_ptr<const FeSpace> space, const Params& params,
                                                          const BoundaryData& bc, const SolverOptions& opts) {
  return DirichletSolver(std::move(space), params, opts).solve(bc);
}

Matrix2d gradient_at(const DisplacementField& f, const Vector2d& x) {
  const auto hit = f.space->locator.find(*f.space->mesh, x);
  if (!hit) throw OutsideDomain("point (" + std::to_string(x.x()) + ", " + std::to_string(x.y()) + ") outside the mesh");
  return gradient_in_cell(f, hit->first, hit->second);
}

Vector2d value_at(const DisplacementField& f, const Vector2d& x) {
  const auto hit = f.space->locator.find(*f.space->mesh, x);
  if (!hit) throw OutsideDomain("point (" + std::to_string(x.x()) + ", " + std::to_string(x.y()) + ") outside the mesh");
  return cell_values(f, hit->first) * shape_values(f.space->order, hit->second);
}

bool Region::contains(const NeckProfile& p, const Vector2d& x) const {
  const bool in_chart = std::abs(x.x()) < r && std::abs(x.x()) <= p.r_neck;
  bool in = false;
  if (in_chart) {
    const double d = gap(p, x.x());
    in = x.y() > p.h2(x.x()) - 0.25 * d && x.y() < p.top(x.x()) + 0.25 * d;
  }
  return kind == Neck ? in : !in;
}

GradientMax max_gradient(const DisplacementField& f, const Region& region) {
  const auto& sp = *f.space;
  const auto& mesh = *sp.mesh;
  GradientMax best{-1.0, Vector2d::Zero()};
  auto consider = [&](int cell, const Eigen::Vector3d& lam) {
    const auto& t = mesh.cells[cell];
    const Vector2d x = lam(0) * mesh.nodes[t[0]] + lam(1) * mesh.nodes[t[1]] + lam(2) * mesh.nodes[t[2]];
    if (!region.contains(mesh.profile, x)) return;
    const double v = gradient_in_cell(f, cell, lam).norm();
    // ties resolved toward the earlier sample so results do not depend on scheduling
    if (v > best.value) best = {v, x};
  };
  const int nq = sp.order == 1 ? 1 : 3;
  for (int c = 0; c < mesh.num_cells(); ++c)
    for (int q = 0; q < nq; ++q) consider(c, sp.order == 1 ? Eigen::Vector3d::Constant(1.0 / 3) : kQuadPoints[q]);
  for (const auto& e : sp.boundary_owner) {
    if (e.tag == BoundaryTag::Outer) continue;
    Eigen::Vector3d lam = Eigen::Vector3d::Zero();
    lam(e.local) = lam((e.local + 1) % 3) = 0.5;
    consider(e.cell, lam);
  }
  if (best.value < 0.0) throw InvalidArgument("max_gradient: region contains no sample points");
  return best;
}

double energy_integral(const Params& p, const DisplacementField& a, const DisplacementField& b,
                       const std::function<bool(const Vector2d&)>& subregion) {
  check_same_space(a, b);
  const auto& sp = *a.space;
  const auto& mesh = *sp.mesh;
  double total = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    if (subregion) {
      const auto& t = mesh.cells[c];
      if (!subregion((mesh.nodes[t[0]] + mesh.nodes[t[1]] + mesh.nodes[t[2]]) / 3.0)) continue;
    }
    const Eigen::MatrixXd K = element_stiffness(sp, p, c);
    const auto ua = cell_values(a, c), ub = cell_values(b, c);
    total += Eigen::Map<const Eigen::VectorXd>(ua.data(), ua.size())
                 .dot(K * Eigen::Map<const Eigen::VectorXd>(ub.data(), ub.size()));
  }
  return total;
}

double boundary_traction_moment(const Params& p, const DisplacementField& u, BoundaryTag tag, const Trace& psi) {
  const auto& sp = *u.space;
  const auto want = static_cast<std::uint8_t>(tag);
  if (want < 1 || want > 3) throw InvalidArgument("unknown boundary tag");
  const int n = sp.nodes_per_cell();
  double total = 0.0;
  for (std::size_t c = 0; c < sp.cell_nodes.size(); ++c) {
    const auto& cn = sp.cell_nodes[c];
    Eigen::VectorXd w = Eigen::VectorXd::Zero(2 * n);
    bool touches = false;
    for (int a = 0; a < n; ++a)
      if (sp.node_tag[cn[a]] == want) {
        w.segment<2>(2 * a) = psi(sp.points[cn[a]]);
        touches = true;
      }
    if (!touches) continue;
    const auto uc = cell_values(u, static_cast<int>(c));
    total += w.dot(element_stiffness(sp, p, static_cast<int>(c)) * Eigen::Map<const Eigen::VectorXd>(uc.data(), uc.size()));
  }
  return tag == BoundaryTag::Outer ? total : -total;
}

double patch_gradient_energy(const DisplacementField& u, const std::function<Matrix2d(const Vector2d&)>& g, double z,
                             double s, int x_panels, int v_panels) {
  const auto& p = u.space->mesh->profile;
  std::array<double, 3> t, w;
  gauss3(t, w);
  const double a = z - s, hx = 2.0 * s / x_panels, hv = 1.0 / v_panels;
  double total = 0.0;
  for (int i = 0; i < x_panels; ++i)
    for (int qi = 0; qi < 3; ++qi) {
      const double x1 = a + hx * (i + t[qi]);
      const double d = gap(p, x1), lo = p.h2(x1);
      for (int j = 0; j < v_panels; ++j)
        for (int qj = 0; qj < 3; ++qj) {
          const Vector2d x(x1, lo + d * hv * (j + t[qj]));
          total += hx * w[qi] * hv * w[qj] * d * (gradient_at(u, x) - g(x)).squaredNorm();
        }
    }
  return total;
}

void write_field(std::ostream& os, const DisplacementField& f) {
  os << "# neckstress-field v1 " << f.label << "\n# id x y ux uy\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < f.space->num_nodes(); ++i)
    os << i << ' ' << f.space->points[i].x() << ' ' << f.space->points[i].y() << ' ' << f.values(0, i) << ' '
       << f.values(1, i) << '\n';
}

}  // namespace neckstress
