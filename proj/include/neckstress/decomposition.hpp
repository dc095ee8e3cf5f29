#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "neckstress/fem.hpp"

namespace neckstress {

// v_i^alpha: psi_alpha on the boundary of D_i, zero on the other boundaries.
struct CellProblems {
  std::shared_ptr<const FeSpace> space;
  std::vector<DisplacementField> v1, v2;
  std::vector<SolveReport> reports;

  int n_alpha() const { return static_cast<int>(v1.size()); }
};

CellProblems solve_cell_problems(const DirichletSolver& solver);
// v3: phi on the outer circle, zero on both inclusions.
std::pair<DisplacementField, SolveReport> solve_v3(const DirichletSolver& solver, const Trace& phi);

// Entries a_ij(alpha, beta) = int (C e(v_i^alpha), e(v_j^beta)); the linear system is
//   [a11 a12; a21 a22] [C1; C2] = [b1; b2].
struct CoefficientSystem {
  int n_alpha = 0;
  Eigen::MatrixXd a11, a12, a21, a22;
  Eigen::VectorXd b1, b2;
  Eigen::VectorXd C1, C2, diff, p;
  double residual = 0.0;          // relative residual of the full solve
  double p_residual = 0.0;        // |a11 diff - p| / |p|
  double asymmetry_defect = 0.0;  // before symmetrization, relative
  double condition = 0.0;         // 2-norm condition of the full matrix
  bool solved = false;

  Eigen::MatrixXd matrix() const;
  Eigen::VectorXd rhs() const;
};

CoefficientSystem assemble_system(const Params& params, const CellProblems& cells, const DisplacementField& v3);
CoefficientSystem solve_coefficients(CoefficientSystem sys);
DisplacementField reconstruct(const CellProblems& cells, const DisplacementField& v3, const CoefficientSystem& sys);

// b_j^beta from the residual traction moments of v3 on each inclusion.
std::pair<Eigen::VectorXd, Eigen::VectorXd> traction_loads(const Params& params, const DisplacementField& v3);

// C1 - C2 from a11 diff = p by Cramer's rule (3 x 3 systems only).
Eigen::VectorXd cramer_diff(const CoefficientSystem& sys);

struct SumFieldReport {
  std::vector<double> sum_max;     // max |grad(v1^a + v2^a)| in the region
  std::vector<double> single_max;  // max |grad v1^a|
  std::vector<Vector2d> sum_where;
};

SumFieldReport sum_field_check(const CellProblems& cells, const Region& region);

// Flat key-value row: header and values in matching order.
std::vector<std::string> system_keys(int n_alpha);
std::vector<double> system_values(const CoefficientSystem& sys);

}  // namespace neckstress
