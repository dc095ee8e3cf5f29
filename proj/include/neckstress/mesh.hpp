#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "neckstress/geometry.hpp"

namespace neckstress {

enum class BoundaryTag : std::uint8_t { InclusionTop = 1, InclusionBottom = 2, Outer = 3 };

const char* tag_name(BoundaryTag t);

struct TaggedEdge {
  std::array<int, 2> nodes;
  BoundaryTag tag;
};

struct GradingReport {
  int min_layers = 0;
  int max_layers = 0;
  double min_quality = 0.0;  // 4 sqrt(3) area / sum of squared edges; 1 for equilateral
  int neck_columns = 0;
  int outer_rings = 0;
};

// All lengths relative to r_neck.
struct GradingConfig {
  int n_layers = 4;             // element layers across the gap
  double ratio = 1.2;           // growth of column widths away from the contact set
  double center_resolution = 4;  // columns per neck_scale() at the contact set
  double h_max = 0.05;          // column width cap in the neck block
  double h_arc = 0.08;          // node spacing along the inclusion closures
  double budget = 1.0;          // refinement multiplier; x4 roughly quadruples the element count
  std::uint64_t seed = 0;       // recorded for reproducibility; generation is deterministic
};

struct Mesh {
  NeckProfile profile;
  std::vector<Eigen::Vector2d> nodes;
  std::vector<std::array<int, 3>> cells;
  std::vector<TaggedEdge> boundary;
  GradingReport grading_report;

  Eigen::Index num_nodes() const { return static_cast<Eigen::Index>(nodes.size()); }
  Eigen::Index num_cells() const { return static_cast<Eigen::Index>(cells.size()); }
};

Mesh build_mesh(const NeckProfile& profile, const GradingConfig& cfg = {});

double triangle_area(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c);
double triangle_quality(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c);

// Throws MeshingError describing the first violated mesh invariant.
void validate_mesh(const Mesh& mesh);

// Plain-text format:
//   # neckstress-mesh v1
//   profile <kind> <dim> <eps> <kappa0> <m> <r0> <r_neck> <outer_radius>
//   nodes <N>      then N lines "<x> <y>"
//   cells <M>      then M lines "<a> <b> <c>"
//   edges <K>      then K lines "<a> <b> <tag>"
// Indices are 0-based; tags are 1 (top inclusion), 2 (bottom inclusion), 3 (outer circle).
void write_mesh(std::ostream& os, const Mesh& mesh);
Mesh read_mesh(std::istream& is);

}  // namespace neckstress
