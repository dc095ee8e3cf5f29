#include "neckstress/decomposition.hpp"

#include <cmath>

#include "neckstress/error.hpp"

namespace neckstress {

namespace {

Trace rigid_trace(const RigidMotion& psi) {
  return [psi](const Vector2d& x) -> Vector2d { return psi(x); };
}

const Trace kZero = [](const Vector2d&) -> Vector2d { return Vector2d::Zero(); };

}  // namespace

CellProblems solve_cell_problems(const DirichletSolver& solver) {
  CellProblems out;
  out.space = solver.space();
  for (const auto& psi : rigid_basis(2)) {
    const auto a = std::to_string(psi.index + 1);
    auto [v1, r1] = solver.solve({{BoundaryTag::InclusionTop, rigid_trace(psi)},
                                  {BoundaryTag::InclusionBottom, kZero},
                                  {BoundaryTag::Outer, kZero}},
                                 "v1_" + a);
    auto [v2, r2] = solver.solve({{BoundaryTag::InclusionTop, kZero},
                                  {BoundaryTag::InclusionBottom, rigid_trace(psi)},
                                  {BoundaryTag::Outer, kZero}},
                                 "v2_" + a);
    out.v1.push_back(std::move(v1));
    out.v2.push_back(std::move(v2));
    out.reports.push_back(r1);
    out.reports.push_back(r2);
  }
  return out;
}

std::pair<DisplacementField, SolveReport> solve_v3(const DirichletSolver& solver, const Trace& phi) {
  return solver.solve({{BoundaryTag::InclusionTop, kZero}, {BoundaryTag::InclusionBottom, kZero}, {BoundaryTag::Outer, phi}},
                      "v3");
}

Eigen::MatrixXd CoefficientSystem::matrix() const {
  Eigen::MatrixXd M(2 * n_alpha, 2 * n_alpha);
  M << a11, a12, a21, a22;
  return M;
}

Eigen::VectorXd CoefficientSystem::rhs() const {
  Eigen::VectorXd b(2 * n_alpha);
  b << b1, b2;
  return b;
}

CoefficientSystem assemble_system(const Params& params, const CellProblems& cells, const DisplacementField& v3) {
  const int n = cells.n_alpha();
  if (n != rigid_count(2)) throw InvalidArgument("assemble_system: incomplete set of cell problems");
  std::vector<const DisplacementField*> f;
  for (const auto& v : cells.v1) f.push_back(&v);
  for (const auto& v : cells.v2) f.push_back(&v);
  f.push_back(&v3);
  for (const auto* g : f)
    if (g->space != cells.space) throw InvalidArgument("assemble_system: fields live on different meshes");

  // one pass over the cells: G = U^T K_e U for all field pairs at once
  const auto& sp = *cells.space;
  const int m = static_cast<int>(f.size()), npc = sp.nodes_per_cell();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, m), U(2 * npc, m);
  for (int c = 0; c < sp.mesh->num_cells(); ++c) {
    const auto& cn = sp.cell_nodes[c];
    for (int k = 0; k < m; ++k)
      for (int a = 0; a < npc; ++a) U.block<2, 1>(2 * a, k) = f[k]->values.col(cn[a]);
    G.noalias() += U.transpose() * element_stiffness(sp, params, c) * U;
  }
  CoefficientSystem s;
  s.n_alpha = n;
  const Eigen::MatrixXd M = G.topLeftCorner(2 * n, 2 * n);
  s.asymmetry_defect = (M - M.transpose()).norm() / M.norm();
  if (s.asymmetry_defect > 1e-6)
    throw SolverError("energy matrix asymmetry " + std::to_string(s.asymmetry_defect) + " indicates a discretization fault");
  const Eigen::MatrixXd S = 0.5 * (M + M.transpose());
  s.a11 = S.topLeftCorner(n, n);
  s.a12 = S.topRightCorner(n, n);
  s.a21 = S.bottomLeftCorner(n, n);
  s.a22 = S.bottomRightCorner(n, n);
  s.b1 = -G.block(0, 2 * n, n, 1);
  s.b2 = -G.block(n, 2 * n, n, 1);
  return s;
}

CoefficientSystem solve_coefficients(CoefficientSystem s) {
  const Eigen::MatrixXd M = s.matrix();
  const Eigen::VectorXd b = s.rhs();
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto sv = svd.singularValues();
  s.condition = sv(0) / sv(sv.size() - 1);
  if (!(sv(sv.size() - 1) > 0.0) || !(s.condition < 1e14))
    throw SolverError("coefficient system is singular", s.condition);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  Eigen::VectorXd c = lu.solve(b);
  // one step of iterative refinement
  c += lu.solve(b - M * c);
  const int n = s.n_alpha;
  s.C1 = c.head(n);
  s.C2 = c.tail(n);
  s.diff = s.C1 - s.C2;
  const double bn = b.norm();
  s.residual = bn > 0.0 ? (M * c - b).norm() / bn : (M * c).norm();
  s.p = s.b1 - (s.a11 + s.a12) * s.C2;
  const double pn = s.p.norm();
  s.p_residual = pn > 0.0 ? (s.a11 * s.diff - s.p).norm() / pn : (s.a11 * s.diff).norm();
  s.solved = true;
  return s;
}

DisplacementField reconstruct(const CellProblems& cells, const DisplacementField& v3, const CoefficientSystem& s) {
  if (!s.solved) throw InvalidArgument("reconstruct: system not solved");
  if (s.n_alpha != cells.n_alpha()) throw InvalidArgument("reconstruct: index mismatch");
  DisplacementField u{v3.space, v3.values, "u"};
  for (int a = 0; a < s.n_alpha; ++a) u.values += s.C1(a) * cells.v1[a].values + s.C2(a) * cells.v2[a].values;
  return u;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> traction_loads(const Params& params, const DisplacementField& v3) {
  const auto basis = rigid_basis(2);
  Eigen::VectorXd b1(basis.size()), b2(basis.size());
  for (const auto& psi : basis) {
    b1(psi.index) = boundary_traction_moment(params, v3, BoundaryTag::InclusionTop, rigid_trace(psi));
    b2(psi.index) = boundary_traction_moment(params, v3, BoundaryTag::InclusionBottom, rigid_trace(psi));
  }
  return {b1, b2};
}

Eigen::VectorXd cramer_diff(const CoefficientSystem& s) {
  if (s.n_alpha != 3 || !s.solved) throw InvalidArgument("cramer_diff: solved 3 x 3 system required");
  const Eigen::Matrix3d A = s.a11;
  const double det = A.determinant();
  Eigen::Vector3d x;
  for (int k = 0; k < 3; ++k) {
    Eigen::Matrix3d Ak = A;
    Ak.col(k) = s.p;
    x(k) = Ak.determinant() / det;
  }
  return x;
}

SumFieldReport sum_field_check(const CellProblems& cells, const Region& region) {
  SumFieldReport r;
  for (int a = 0; a < cells.n_alpha(); ++a) {
    const auto g = max_gradient(cells.v1[a] + cells.v2[a], region);
    r.sum_max.push_back(g.value);
    r.sum_where.push_back(g.point);
    r.single_max.push_back(max_gradient(cells.v1[a], region).value);
  }
  return r;
}

std::vector<std::string> system_keys(int n) {
  std::vector<std::string> k;
  for (const char* blk : {"a11", "a12", "a22"})
    for (int a = 1; a <= n; ++a)
      for (int b = 1; b <= n; ++b) k.push_back(std::string(blk) + "_" + std::to_string(a) + std::to_string(b));
  for (const char* v : {"b1", "b2", "C1", "C2", "diff"})
    for (int a = 1; a <= n; ++a) k.push_back(std::string(v) + "_" + std::to_string(a));
  for (const char* v : {"system_residual", "p_residual", "asymmetry", "condition"}) k.push_back(v);
  return k;
}

std::vector<double> system_values(const CoefficientSystem& s) {
  std::vector<double> v;
  for (const auto* M : {&s.a11, &s.a12, &s.a22})
    for (int a = 0; a < s.n_alpha; ++a)
      for (int b = 0; b < s.n_alpha; ++b) v.push_back((*M)(a, b));
  for (const auto* x : {&s.b1, &s.b2, &s.C1, &s.C2, &s.diff})
    for (int a = 0; a < s.n_alpha; ++a) v.push_back(x->size() ? (*x)(a) : std::nan(""));
  v.push_back(s.residual);
  v.push_back(s.p_residual);
  v.push_back(s.asymmetry_defect);
  v.push_back(s.condition);
  return v;
}

}  // namespace neckstress
