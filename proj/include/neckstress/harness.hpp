#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "neckstress/asymptotics.hpp"
#include "neckstress/decomposition.hpp"

namespace neckstress {

struct ExperimentConfig {
  ProfileKind kind = ProfileKind::Power;
  int dim = 2;
  double m = 2.0;
  double kappa0 = 1.0;
  double r0 = 0.0;
  double r_neck = 1.0;
  double outer_radius = 5.0;
  std::vector<double> eps_list;  // strictly decreasing
  GradingConfig grading;
  double lambda = 1.0, mu = 1.0;
  std::string phi = "affine-x2";
  SolverOptions solver{SolverKind::Direct, 1e-10, 2000};
  int threads = 0;  // 0: one per eps point, capped by the hardware
  std::string out_csv, out_json, field_dir;
  std::uint64_t seed = 0;

  NeckProfile profile(double eps) const;
  Params params() const { return make_params(lambda, mu, dim); }
  // Throws InvalidArgument on the first bad field.
  void validate() const;
  // key = value lines, in the order they are parsed back.
  std::string to_text() const;
};

// 8 geometric points from 10^-1.5 down to 10^-4.
std::vector<double> default_eps_list();
std::vector<double> geometric_eps(double hi, double lo, int n);

// key = value lines; '#' starts a comment. Unknown keys are errors.
ExperimentConfig parse_config(std::istream& is, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::vector<double> parse_list(const std::string& text);

// affine-x2: (x2, 0); quad-x2: (x2^2, 0); rigid:<a>: the a-th rigid motion (1-based);
// affine:a,b,c,d: (a x1 + b x2, c x1 + d x2); zero.
Trace parse_phi(const std::string& selector);

struct SweepRow {
  double eps = 0.0;
  bool ok = false;
  std::string error;
  Eigen::Index dofs = 0;
  Eigen::Index cells = 0;
  int min_layers = 0;
  double min_quality = 0.0;
  double grad_max = 0.0;
  double grad_x = 0.0, grad_y = 0.0;
  std::vector<double> system;  // in system_keys order
  double a11_min_eig = 0.0;
  double b_cross = 0.0;       // relative gap between volume-form and traction-form loads
  double solve_residual = 0.0;  // worst relative residual over the Dirichlet solves
};

// Everything computed at one eps; kept alive for checks that need fields.
struct PointSolution {
  NeckProfile profile;
  std::shared_ptr<const FeSpace> space;
  std::unique_ptr<DirichletSolver> solver;
  CellProblems cells;
  DisplacementField v3, u;
  CoefficientSystem system;
  SweepRow row;
};

PointSolution solve_point(const ExperimentConfig& cfg, double eps);

struct SweepResult {
  ExperimentConfig config;
  int n_alpha = 3;
  std::vector<SweepRow> rows;  // in eps order

  std::vector<std::string> columns() const;
  // Column by name across all successful rows, with the matching eps values.
  std::pair<std::vector<double>, std::vector<double>> series(const std::string& column) const;
};

// eps points run concurrently; a failure at one eps is recorded in its row.
SweepResult run_sweep(const ExperimentConfig& cfg);

// Header line "# neckstress-v1", a config comment line, the column line, then rows.
void write_csv_header(std::ostream& os, const SweepResult& r);
void write_csv_rows(std::ostream& os, const SweepResult& r);
void write_csv(std::ostream& os, const SweepResult& r);
// Appends rows; writes the header first when the file is new or empty.
void append_csv(const std::string& path, const SweepResult& r);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::map<std::string, std::string> config;

  std::vector<double> column(const std::string& name) const;
};
CsvTable read_csv(std::istream& is);

struct RateFit {
  std::vector<std::pair<double, double>> samples;  // (eps, value)
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
  double predicted = 0.0;
  int log_power = 0;  // of |log eps| in the prediction
  bool corrected = false;
  double corrected_slope = 0.0, corrected_intercept = 0.0, corrected_r2 = 0.0;

  // The corrected fit when a log factor is predicted, else the raw one.
  double effective_slope() const { return corrected ? corrected_slope : slope; }
};

// Least squares of log value against log eps. With log_power != 0, also fits
// value * |log eps|^{-log_power}.
RateFit fit_rate(const std::vector<std::pair<double, double>>& samples, double predicted = 0.0, int log_power = 0);
RateFit fit_rate(const std::vector<double>& eps, const std::vector<double>& values, double predicted = 0.0,
                 int log_power = 0);

struct OracleComparison {
  int alpha = 0, beta = 0;  // 1-based
  double measured_slope = 0.0;
  double oracle_slope = 0.0;
  double tolerance = 0.15;
  bool log_entry = false;
  bool vanishing = false;  // identically small by symmetry; not compared
  bool pass = false;
};

// Measured a11 slopes against the entry oracles over the same eps samples.
std::vector<OracleComparison> compare_oracles(const SweepResult& r);

// nlohmann-backed summary of fits and comparisons; criteria is an optional name -> pass map.
std::string summary_json(const SweepResult& r, const std::map<std::string, RateFit>& fits,
                         const std::vector<OracleComparison>& oracle,
                         const std::map<std::string, bool>& criteria = {});

}  // namespace neckstress
