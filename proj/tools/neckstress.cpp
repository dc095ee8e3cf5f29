// Command-line driver: mesh, solve, sweep, fit, oracle.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "neckstress/error.hpp"
#include "neckstress/harness.hpp"

using namespace neckstress;

namespace {

// Flags shared by the FEM subcommands; collected as strings and applied over the config file.
struct CommonFlags {
  std::string config;
  std::map<std::string, std::string> set;

  void add(CLI::App* app) {
    app->add_option("--config", config, "key = value config file (flags override it)");
    auto opt = [&](const char* flag, const char* key, const char* help) {
      app->add_option_function<std::string>(flag, [this, key](const std::string& v) { set[key] = v; }, help);
    };
    opt("--profile", "profile", "flat or power");
    opt("--dim", "dim", "dimension (finite elements: 2)");
    opt("--m", "m", "order of relative convexity for power profiles");
    opt("--kappa0", "kappa0", "curvature constant");
    opt("--r0", "r0", "half-length of the flat contact segment");
    opt("--eps-list", "eps_list", "comma-separated, strictly decreasing");
    opt("--phi", "phi", "affine-x2 | quad-x2 | rigid:<a> | affine:a,b,c,d | zero");
    opt("--out", "out", "CSV output path (appended)");
    opt("--json", "json", "JSON summary path");
    opt("--field-dir", "field_dir", "directory for per-eps displacement fields");
    opt("--mesh-budget", "mesh_budget", "mesh refinement multiplier");
    opt("--n-layers", "n_layers", "element layers across the gap");
    opt("--solver", "solver", "direct | pcg | auto");
    opt("--tol", "tol", "iterative solver relative tolerance");
    opt("--threads", "threads", "concurrent eps points (0: hardware)");
    opt("--lambda", "lambda", "Lame lambda");
    opt("--mu", "mu", "Lame mu");
    opt("--seed", "seed", "recorded seed");
  }

  ExperimentConfig build() const {
    ExperimentConfig c;
    c.eps_list = default_eps_list();
    if (!config.empty()) c = load_config(config, c);
    for (const auto& [k, v] : set) apply_setting(c, k, v);
    return c;
  }
};

void print_row(const SweepResult& r) { write_csv(std::cout, r); }

std::map<std::string, RateFit> standard_fits(const SweepResult& r) {
  std::map<std::string, RateFit> fits;
  const auto& c = r.config;
  const RatePrediction pred = c.kind == ProfileKind::Flat ? predicted_rate_flat(2, c.profile(c.eps_list[0]).flat_area())
                                                          : predicted_rate(2, c.m);
  auto add = [&](const std::string& name, const std::string& col, double predicted, int logp, bool absval) {
    auto [e, v] = r.series(col);
    if (absval)
      for (auto& x : v) x = std::abs(x);
    try {
      fits[name] = fit_rate(e, v, predicted, logp);
    } catch (const InvalidArgument&) {
      // too few solved points or a vanishing series
    }
  };
  add("grad_max", "grad_max", pred.exponent, pred.log_power, false);
  for (int a = 1; a <= r.n_alpha; ++a) {
    const std::string s = std::to_string(a);
    add("a11_" + s + s, "a11_" + s + s, 0.0, 0, false);
    add("diff_" + s, "diff_" + s, 0.0, 0, true);
  }
  return fits;
}

int cmd_mesh(const CommonFlags& f, double eps, const std::string& out) {
  const auto c = f.build();
  const auto mesh = build_mesh(c.profile(eps), c.grading);
  validate_mesh(mesh);
  if (out.empty()) write_mesh(std::cout, mesh);
  else {
    std::ofstream o(out);
    write_mesh(o, mesh);
  }
  const auto& g = mesh.grading_report;
  std::fprintf(stderr, "nodes %lld cells %lld layers %d..%d min quality %.3f\n", (long long)mesh.num_nodes(),
               (long long)mesh.num_cells(), g.min_layers, g.max_layers, g.min_quality);
  return 0;
}

int cmd_solve(const CommonFlags& f, double eps) {
  auto c = f.build();
  c.eps_list = {eps};
  c.validate();
  SweepResult r;
  r.config = c;
  r.rows.push_back(solve_point(c, eps).row);
  if (!c.out_csv.empty()) append_csv(c.out_csv, r);
  print_row(r);
  return 0;
}

int cmd_sweep(const CommonFlags& f) {
  const auto c = f.build();
  const auto r = run_sweep(c);
  if (!c.out_csv.empty()) append_csv(c.out_csv, r);
  else write_csv(std::cout, r);
  const auto fits = standard_fits(r);
  std::vector<OracleComparison> oracle;
  try {
    oracle = compare_oracles(r);
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "oracle comparison skipped: %s\n", e.what());
  }
  for (const auto& [name, fit] : fits)
    std::fprintf(stderr, "%-10s slope %+.4f  R2 %.4f%s\n", name.c_str(), fit.slope, fit.r2,
                 fit.corrected ? ("  corrected " + std::to_string(fit.corrected_slope)).c_str() : "");
  for (const auto& o : oracle)
    std::fprintf(stderr, "a11_%d%d measured %+.3f oracle %+.3f %s\n", o.alpha, o.beta, o.measured_slope,
                 o.oracle_slope, o.vanishing ? "(vanishes by symmetry)" : (o.pass ? "PASS" : "FAIL"));
  if (!c.out_json.empty()) {
    std::ofstream j(c.out_json);
    j << summary_json(r, fits, oracle) << "\n";
  }
  int failed = 0;
  for (const auto& row : r.rows)
    if (!row.ok) {
      ++failed;
      std::fprintf(stderr, "eps %.3e failed: %s\n", row.eps, row.error.c_str());
    }
  return failed ? 2 : 0;
}

int cmd_fit(const std::string& path, const std::string& column, double predicted, int log_power, bool absval) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  const auto t = read_csv(in);
  const auto eps = t.column("eps"), ok = t.column("ok");
  auto vals = t.column(column);
  std::vector<double> e, v;
  for (std::size_t i = 0; i < eps.size(); ++i)
    if (ok[i] == 1.0) {
      e.push_back(eps[i]);
      v.push_back(absval ? std::abs(vals[i]) : vals[i]);
    }
  const auto f = fit_rate(e, v, predicted, log_power);
  std::printf("column %s samples %zu slope %.6f intercept %.6f R2 %.6f predicted %.6f", column.c_str(), e.size(),
              f.slope, f.intercept, f.r2, f.predicted);
  if (f.corrected) std::printf(" corrected_slope %.6f corrected_R2 %.6f", f.corrected_slope, f.corrected_r2);
  std::printf("\n");
  return 0;
}

int cmd_oracle(int dim, double m, const std::vector<double>& ks, const std::vector<double>& ps, std::string eps_text,
               double R, double kappa0, double sigma) {
  std::printf("# d=%d m=%g\n", dim, m);
  const auto pr = sigma > 0 ? predicted_rate_flat(dim, sigma) : predicted_rate(dim, m);
  std::printf("predicted |grad u| rate: regime %s exponent %.6f log_power %d\n", pr.regime.c_str(), pr.exponent,
              pr.log_power);
  const auto eps = eps_text.empty() ? geometric_eps(1e-2, 1e-6, 9) : parse_list(eps_text);
  for (double k : ks)
    for (double p : ps) {
      std::vector<double> vals;
      for (double e : eps) vals.push_back(singular_integral_oracle(k, m, p, e, R, kappa0).value);
      const auto [ex, lp] = singular_integral_exponent(k, m, p);
      const auto fit = fit_rate(eps, vals, ex, lp);
      std::printf("k=%g p=%g  fitted %.5f  expected %.5f  log_power %d\n", k, p, fit.effective_slope(), ex, lp);
    }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stress concentration between two rigid inclusions: meshes, solves, sweeps, fits"};
  app.require_subcommand(1);

  CommonFlags mesh_f, solve_f, sweep_f;
  double mesh_eps = 1e-3, solve_eps = 1e-3;
  std::string mesh_out;
  auto* mesh = app.add_subcommand("mesh", "emit the graded mesh for one eps");
  mesh_f.add(mesh);
  mesh->add_option("--eps", mesh_eps, "gap");
  mesh->add_option("--mesh-out", mesh_out, "mesh file (default stdout)");

  auto* solve = app.add_subcommand("solve", "solve at one eps and print its row");
  solve_f.add(solve);
  solve->add_option("--eps", solve_eps, "gap");

  auto* sweep = app.add_subcommand("sweep", "full eps sweep with fits");
  sweep_f.add(sweep);

  std::string fit_path, fit_col = "grad_max";
  double fit_pred = 0.0;
  int fit_log = 0;
  bool fit_abs = false;
  auto* fit = app.add_subcommand("fit", "fit a CSV column against eps");
  fit->add_option("csv", fit_path, "sweep CSV")->required();
  fit->add_option("--column", fit_col, "column name");
  fit->add_option("--predicted", fit_pred, "predicted exponent");
  fit->add_option("--log-power", fit_log, "power of |log eps| in the prediction");
  fit->add_flag("--abs", fit_abs, "fit absolute values");

  int o_dim = 2;
  double o_m = 2.0, o_R = 1.0, o_k0 = 1.0, o_sigma = 0.0;
  std::string o_k = "0", o_p = "1", o_eps;
  auto* oracle = app.add_subcommand("oracle", "quadrature oracle and rate table, any d");
  oracle->add_option("--dim", o_dim, "dimension");
  oracle->add_option("--m", o_m, "order");
  oracle->add_option("--k", o_k, "comma-separated numerator powers");
  oracle->add_option("--p", o_p, "comma-separated denominator powers");
  oracle->add_option("--eps-list", o_eps, "comma-separated eps values");
  oracle->add_option("--R", o_R, "upper limit");
  oracle->add_option("--kappa0", o_k0, "curvature constant");
  oracle->add_option("--sigma", o_sigma, "flat contact measure (0: point contact)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*mesh) return cmd_mesh(mesh_f, mesh_eps, mesh_out);
    if (*solve) return cmd_solve(solve_f, solve_eps);
    if (*sweep) return cmd_sweep(sweep_f);
    if (*fit) return cmd_fit(fit_path, fit_col, fit_pred, fit_log, fit_abs);
    if (*oracle) return cmd_oracle(o_dim, o_m, parse_list(o_k), parse_list(o_p), o_eps, o_R, o_k0, o_sigma);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
