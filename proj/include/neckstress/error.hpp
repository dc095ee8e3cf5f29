#pragma once

#include <stdexcept>
#include <string>

namespace neckstress {

// Bad configuration or arguments.
struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Query outside the region where a profile or chart is defined.
struct ChartExceeded : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// Evaluation point not covered by the mesh.
struct OutsideDomain : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// Operation asked of the wrong profile kind.
struct WrongKind : std::logic_error {
  using std::logic_error::logic_error;
};

struct MeshingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Solver failure; carries whatever diagnostic was available.
struct SolverError : std::runtime_error {
  SolverError(const std::string& what, double condition_estimate = 0.0)
      : std::runtime_error(what), condition_estimate(condition_estimate) {}
  double condition_estimate;
};

struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace neckstress
