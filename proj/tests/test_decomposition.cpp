#include <cmath>

#include "doctest.h"
#include "neckstress/decomposition.hpp"
#include "neckstress/error.hpp"
#include "neckstress/harness.hpp"

using namespace neckstress;

namespace {

const Params P = make_params(1, 1);

struct Setup {
  std::shared_ptr<const FeSpace> sp;
  std::unique_ptr<DirichletSolver> solver;
  CellProblems cells;
};

Setup setup(const NeckProfile& p, Vector2d shift = Vector2d::Zero()) {
  Mesh mesh = build_mesh(p);
  for (auto& x : mesh.nodes) x += shift;
  Setup s;
  s.sp = make_space(std::make_shared<const Mesh>(std::move(mesh)), 2);
  s.solver = std::make_unique<DirichletSolver>(s.sp, P, SolverOptions{SolverKind::Direct});
  s.cells = solve_cell_problems(*s.solver);
  return s;
}

NeckProfile power(double eps) { return make_profile(ProfileKind::Power, 2, eps, 1.0, 2.0, 0.0, 1.0, 5.0); }
NeckProfile flat(double eps) { return make_profile(ProfileKind::Flat, 2, eps, 4.0, 2.0, 0.3, 1.0, 5.0); }

CoefficientSystem solve_for(const Setup& s, const Trace& phi, DisplacementField* u = nullptr) {
  const auto [v3, r] = solve_v3(*s.solver, phi);
  auto sys = solve_coefficients(assemble_system(P, s.cells, v3));
  if (u) *u = reconstruct(s.cells, v3, sys);
  return sys;
}

}  // namespace

TEST_CASE("system structure") {
  const auto s = setup(flat(1e-3));
  const auto sys = solve_for(s, parse_phi("affine-x2"));
  CHECK(sys.n_alpha == 3);
  CHECK(sys.matrix().rows() == 6);
  CHECK((sys.matrix() - sys.matrix().transpose()).norm() == 0.0);
  CHECK(sys.a21.isApprox(sys.a12.transpose()));
  CHECK(sys.asymmetry_defect < 1e-6);
  for (int a = 0; a < 3; ++a) CHECK(sys.a11(a, a) > 0.0);
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sys.a11).eigenvalues().minCoeff() > 0.0);
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sys.a22).eigenvalues().minCoeff() > 0.0);
  CHECK(sys.residual <= 1e-10);
  CHECK(sys.p_residual <= 1e-10);
  // Cramer's rule on a11 diff = p
  CHECK((cramer_diff(sys) - sys.diff).norm() <= 1e-8 * std::max(1.0, sys.diff.norm()));
  // flat contact: the off-diagonal entry is small against the diagonal
  CHECK(std::abs(sys.a11(0, 1)) < 1e-3 * sys.a11(0, 0));
}

TEST_CASE("zero and rigid data") {
  const auto s = setup(power(1e-3));
  DisplacementField u;
  const auto z = solve_for(s, parse_phi("zero"), &u);
  CHECK(z.C1.norm() == 0.0);
  CHECK(z.C2.norm() == 0.0);
  CHECK(u.values.norm() == 0.0);
  const auto basis = rigid_basis(2);
  for (int g = 1; g <= 3; ++g) {
    const auto sys = solve_for(s, parse_phi("rigid:" + std::to_string(g)), &u);
    Eigen::Vector3d e = Eigen::Vector3d::Zero();
    e(g - 1) = 1.0;
    CHECK((sys.C1 - e).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((sys.C2 - e).cwiseAbs().maxCoeff() < 1e-8);
    double err = 0.0;
    for (Eigen::Index i = 0; i < s.sp->num_nodes(); ++i)
      err = std::max(err, (u.values.col(i) - basis[g - 1](s.sp->points[i])).norm());
    CHECK(err < 1e-8);
  }
}

TEST_CASE("reconstruction with zero coefficients is v3") {
  const auto s = setup(power(1e-2));
  const auto [v3, r] = solve_v3(*s.solver, parse_phi("affine-x2"));
  auto sys = solve_coefficients(assemble_system(P, s.cells, v3));
  sys.C1.setZero();
  sys.C2.setZero();
  CHECK((reconstruct(s.cells, v3, sys).values - v3.values).norm() == 0.0);
}

TEST_CASE("reconstructed field has vanishing traction moments") {
  const auto s = setup(power(1e-3));
  DisplacementField u;
  const auto sys = solve_for(s, parse_phi("affine:0.3,1,-0.5,0.2"), &u);
  double scale = sys.a11.cwiseAbs().maxCoeff() * sys.C1.cwiseAbs().maxCoeff();
  for (const auto& psi : rigid_basis(2)) {
    const Trace f = [psi](const Vector2d& x) { return psi(x); };
    CHECK(std::abs(boundary_traction_moment(P, u, BoundaryTag::InclusionTop, f)) <= 1e-8 * scale);
    CHECK(std::abs(boundary_traction_moment(P, u, BoundaryTag::InclusionBottom, f)) <= 1e-8 * scale);
  }
}

TEST_CASE("pipeline is linear in phi") {
  const auto s = setup(power(1e-3));
  const auto a = solve_for(s, parse_phi("affine-x2"));
  const auto b = solve_for(s, parse_phi("affine:0,2.5,0,0"));
  CHECK((b.C1 - 2.5 * a.C1).norm() <= 1e-10 * a.C1.norm());
  CHECK((b.diff - 2.5 * a.diff).norm() <= 1e-9 * std::max(a.diff.norm(), 1e-12));
  // superposition of two traces
  const auto c = solve_for(s, parse_phi("affine:1,0,0,0"));
  const auto d = solve_for(s, parse_phi("affine:1,1,0,0"));
  CHECK((d.C2 - a.C2 - c.C2).norm() <= 1e-10 * d.C2.norm());
}

TEST_CASE("translation block is frame invariant") {
  const auto s0 = setup(power(1e-2));
  const auto s1 = setup(power(1e-2), Vector2d(0.7, -0.4));
  const auto a0 = assemble_system(P, s0.cells, solve_v3(*s0.solver, parse_phi("zero")).first);
  const auto a1 = assemble_system(P, s1.cells, solve_v3(*s1.solver, parse_phi("zero")).first);
  CHECK((a0.a11.topLeftCorner(2, 2) - a1.a11.topLeftCorner(2, 2)).norm() <= 1e-8 * a0.a11.norm());
  CHECK((a0.a12.topLeftCorner(2, 2) - a1.a12.topLeftCorner(2, 2)).norm() <= 1e-8 * a0.a11.norm());
  // rotation entries pick up the moment arm
  CHECK(std::abs(a0.a11(2, 2) - a1.a11(2, 2)) > 1e-3 * a0.a11(2, 2));
}

TEST_CASE("sum fields stay bounded while single fields blow up") {
  std::vector<double> eps, sum1, single1;
  for (double e : geometric_eps(1e-2, 1e-4, 5)) {
    const auto s = setup(power(e));
    const auto r = sum_field_check(s.cells, Region::neck(1.0));
    eps.push_back(e);
    sum1.push_back(r.sum_max[0]);
    single1.push_back(r.single_max[0]);
  }
  const auto fs = fit_rate(eps, sum1), f1 = fit_rate(eps, single1);
  CHECK(fs.slope >= -0.15);
  CHECK(fs.slope <= 0.15);
  CHECK(f1.slope == doctest::Approx(-1.0).epsilon(0.1));
  // doubling all data doubles the sum field
  const auto s = setup(power(1e-3));
  const auto sum = s.cells.v1[0] + s.cells.v2[0];
  const auto twice = 2.0 * s.cells.v1[0] + 2.0 * s.cells.v2[0];
  CHECK(max_gradient(twice, Region::neck(1.0)).value == doctest::Approx(2 * max_gradient(sum, Region::neck(1.0)).value));
}

TEST_CASE("gram positivity trends") {
  std::vector<double> rot_point, low_flat;
  for (double e : {1e-2, 1e-3, 1e-4}) {
    const auto sp = setup(power(e));
    const auto sf = setup(flat(e));
    const auto a = assemble_system(P, sp.cells, solve_v3(*sp.solver, parse_phi("zero")).first);
    const auto b = assemble_system(P, sf.cells, solve_v3(*sf.solver, parse_phi("zero")).first);
    rot_point.push_back(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a.a11).eigenvalues().minCoeff());
    low_flat.push_back(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(b.a11).eigenvalues().minCoeff());
  }
  for (double v : rot_point) CHECK(v > 0.0);
  // flat contact: the smallest eigenvalue does not collapse
  CHECK(low_flat[2] >= 0.5 * low_flat[0]);
}

TEST_CASE("system row keys") {
  const auto k = system_keys(3);
  CHECK(k.front() == "a11_11");
  CHECK(std::find(k.begin(), k.end(), "diff_3") != k.end());
  const auto s = setup(power(1e-2));
  CHECK(system_values(solve_for(s, parse_phi("affine-x2"))).size() == k.size());
}
