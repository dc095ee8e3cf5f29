#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "neckstress/elasticity.hpp"
#include "neckstress/mesh.hpp"

namespace neckstress {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Eigen::Matrix2d;
using Eigen::Vector2d;

// Uniform bucket grid over cell bounding boxes.
class CellLocator {
 public:
  CellLocator() = default;
  explicit CellLocator(const Mesh& mesh);
  // Containing cell and its barycentric coordinates, if any.
  std::optional<std::pair<int, Eigen::Vector3d>> find(const Mesh& mesh, const Vector2d& x) const;

 private:
  Eigen::Vector2d lo_, inv_h_;
  int nx_ = 0, ny_ = 0;
  std::vector<int> start_, items_;
};

// Lagrange P1/P2 vector space on straight triangles. Nodes are the mesh vertices
// followed (order 2) by one midpoint per edge.
struct FeSpace {
  std::shared_ptr<const Mesh> mesh;
  int order = 2;
  std::vector<Vector2d> points;
  std::vector<std::array<int, 6>> cell_nodes;  // first 3 (order 1) or 6 entries used
  std::vector<std::uint8_t> node_tag;          // 0 interior, else BoundaryTag value
  // boundary edges with the cell owning them and the local edge index (0: v0v1, 1: v1v2, 2: v2v0)
  struct EdgeOwner {
    int cell, local;
    BoundaryTag tag;
  };
  std::vector<EdgeOwner> boundary_owner;
  CellLocator locator;

  int nodes_per_cell() const { return order == 1 ? 3 : 6; }
  Eigen::Index num_nodes() const { return static_cast<Eigen::Index>(points.size()); }
  Eigen::Index num_dofs() const { return 2 * num_nodes(); }
};

std::shared_ptr<const FeSpace> make_space(std::shared_ptr<const Mesh> mesh, int order = 2);

// Shape functions in barycentric coordinates; gradients given the barycentric gradients (2x3).
Eigen::VectorXd shape_values(int order, const Eigen::Vector3d& lam);
Eigen::MatrixXd shape_gradients(int order, const Eigen::Vector3d& lam, const Eigen::Matrix<double, 2, 3>& dlam);
// Barycentric gradients and area of a cell.
Eigen::Matrix<double, 2, 3> barycentric_gradients(const Vector2d& a, const Vector2d& b, const Vector2d& c, double* area = nullptr);

// Element stiffness with interleaved local dofs (ux0, uy0, ux1, ...).
Eigen::MatrixXd element_stiffness(const FeSpace& space, const Params& params, int cell);
SparseMatrix assemble_stiffness(const FeSpace& space, const Params& params);

struct DisplacementField {
  std::shared_ptr<const FeSpace> space;
  Eigen::Matrix2Xd values;  // one column per node
  std::string label;

  Eigen::Map<const Eigen::VectorXd> flat() const { return {values.data(), values.size()}; }
  bool finite() const { return values.allFinite(); }
};

DisplacementField operator+(const DisplacementField& a, const DisplacementField& b);
DisplacementField operator-(const DisplacementField& a, const DisplacementField& b);
DisplacementField operator*(double s, const DisplacementField& a);

using Trace = std::function<Vector2d(const Vector2d&)>;
using BoundaryData = std::map<BoundaryTag, Trace>;

DisplacementField interpolate(std::shared_ptr<const FeSpace> space, const Trace& f, std::string label = {});

enum class SolverKind { Auto, Pcg, Direct };

struct SolverOptions {
  SolverKind kind = SolverKind::Auto;
  double tolerance = 1e-10;  // relative residual
  int max_iterations = 2000;
};

struct SolveReport {
  Eigen::Index dofs = 0;
  int iterations = 0;
  double relative_residual = 0.0;
  double wall_seconds = 0.0;
  std::string method;
};

// Pure Dirichlet elasticity problem on one space. The reduced operator is assembled and
// factorized once and shared by every solve; solve() is safe to call concurrently.
class DirichletSolver {
 public:
  DirichletSolver(std::shared_ptr<const FeSpace> space, const Params& params, SolverOptions opts = {});
  ~DirichletSolver();

  std::pair<DisplacementField, SolveReport> solve(const BoundaryData& bc, std::string label = {}) const;

  const SparseMatrix& stiffness() const { return k_; }
  const std::shared_ptr<const FeSpace>& space() const { return space_; }
  const Params& params() const { return params_; }

 private:
  struct Impl;
  void ensure_direct() const;

  std::shared_ptr<const FeSpace> space_;
  Params params_;
  SolverOptions opts_;
  SparseMatrix k_, kff_, kfd_;
  std::vector<int> free_, fixed_;
  std::unique_ptr<Impl> impl_;
  mutable std::mutex mutex_, pcg_mutex_;
};

std::pair<DisplacementField, SolveReport> solve_dirichlet(std::shared_ptr<const FeSpace> space, const Params& params,
                                                          const BoundaryData& bc, const SolverOptions& opts = {});

// (grad u)_ij = d u_i / d x_j at a point of the closed domain.
Matrix2d gradient_at(const DisplacementField& field, const Vector2d& x);
Vector2d value_at(const DisplacementField& field, const Vector2d& x);

struct Region {
  enum Kind { Neck, ShellMinusNeck } kind = Neck;
  double r = 1.0;

  static Region neck(double r) { return {Neck, r}; }
  static Region shell_minus_neck(double r) { return {ShellMinusNeck, r}; }
  // Points within a quarter gap of the graphs count as neck, so that chord midpoints of
  // the curved boundary are included.
  bool contains(const NeckProfile& p, const Vector2d& x) const;
};

struct GradientMax {
  double value = 0.0;
  Vector2d point = Vector2d::Zero();
};

// Max Frobenius norm of grad u over element quadrature points and midpoints of the
// inclusion boundary edges lying in the region.
GradientMax max_gradient(const DisplacementField& field, const Region& region);

// Integral of (C e(a), e(b)); the optional predicate selects cells by centroid.
double energy_integral(const Params& params, const DisplacementField& a, const DisplacementField& b,
                       const std::function<bool(const Vector2d&)>& subregion = {});

// Moment of the traction of u against psi on one boundary component, computed from the
// discrete residual. The normal points out of the inclusion for InclusionTop/Bottom and
// out of the outer disk for Outer.
double boundary_traction_moment(const Params& params, const DisplacementField& u, BoundaryTag tag, const Trace& psi);

// Integral of |grad u - g|^2 over the neck patch {|x1 - z| < s, h2 < x2 < eps + h1} by
// composite Gauss rules in (x1, vbar).
double patch_gradient_energy(const DisplacementField& u, const std::function<Matrix2d(const Vector2d&)>& g, double z,
                             double s, int x_panels = 48, int v_panels = 16);

// Columns: node id, x, y, ux, uy.
void write_field(std::ostream& os, const DisplacementField& field);

}  // namespace neckstress
