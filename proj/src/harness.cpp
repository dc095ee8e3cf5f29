#include "neckstress/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "neckstress/error.hpp"

namespace neckstress {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (trim(v.substr(used)).empty()) return x;
  } catch (const std::exception&) {
  }
  throw InvalidArgument("config key '" + key + "': not a number: '" + v + "'");
}

int to_int(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x != std::floor(x)) throw InvalidArgument("config key '" + key + "': not an integer: '" + v + "'");
  return static_cast<int>(x);
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string solver_name(SolverKind k) {
  switch (k) {
    case SolverKind::Auto: return "auto";
    case SolverKind::Pcg: return "pcg";
    case SolverKind::Direct: return "direct";
  }
  return "direct";
}

}  // namespace

std::vector<double> geometric_eps(double hi, double lo, int n) {
  if (!(hi > lo && lo > 0.0) || n < 2) throw InvalidArgument("geometric_eps needs hi > lo > 0 and n >= 2");
  std::vector<double> e(n);
  for (int i = 0; i < n; ++i) e[i] = hi * std::pow(lo / hi, double(i) / (n - 1));
  return e;
}

std::vector<double> default_eps_list() { return geometric_eps(std::pow(10.0, -1.5), 1e-4, 8); }

NeckProfile ExperimentConfig::profile(double eps) const {
  return make_profile(kind, dim, eps, kappa0, m, r0, r_neck, outer_radius);
}

void ExperimentConfig::validate() const {
  if (eps_list.empty()) throw InvalidArgument("eps list is empty");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0 && eps_list[i] < 0.5)) throw InvalidArgument("eps values must lie in (0, 1/2)");
    if (i && !(eps_list[i] < eps_list[i - 1])) throw InvalidArgument("eps list must be strictly decreasing");
  }
  profile(eps_list.front());
  params();
  parse_phi(phi);
  if (grading.budget <= 0.0 || grading.n_layers < 1 || grading.ratio <= 1.0)
    throw InvalidArgument("grading needs budget > 0, n_layers >= 1, ratio > 1");
  if (solver.tolerance <= 0.0 || solver.max_iterations < 1) throw InvalidArgument("bad solver tolerance");
  if (threads < 0) throw InvalidArgument("threads must be >= 0");
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream os;
  std::string eps;
  for (double e : eps_list) eps += (eps.empty() ? "" : ",") + fmt(e);
  os << "profile = " << (kind == ProfileKind::Flat ? "flat" : "power") << "\n"
     << "dim = " << dim << "\n"
     << "m = " << fmt(m) << "\n"
     << "kappa0 = " << fmt(kappa0) << "\n"
     << "r0 = " << fmt(r0) << "\n"
     << "r_neck = " << fmt(r_neck) << "\n"
     << "outer_radius = " << fmt(outer_radius) << "\n"
     << "eps_list = " << eps << "\n"
     << "mesh_budget = " << fmt(grading.budget) << "\n"
     << "n_layers = " << grading.n_layers << "\n"
     << "grading_ratio = " << fmt(grading.ratio) << "\n"
     << "center_resolution = " << fmt(grading.center_resolution) << "\n"
     << "h_max = " << fmt(grading.h_max) << "\n"
     << "h_arc = " << fmt(grading.h_arc) << "\n"
     << "lambda = " << fmt(lambda) << "\n"
     << "mu = " << fmt(mu) << "\n"
     << "phi = " << phi << "\n"
     << "solver = " << solver_name(solver.kind) << "\n"
     << "tol = " << fmt(solver.tolerance) << "\n"
     << "max_iterations = " << solver.max_iterations << "\n"
     << "seed = " << seed << "\n";
  return os.str();
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double("list", item));
  }
  return out;
}

void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "profile") {
    if (v == "flat") c.kind = ProfileKind::Flat;
    else if (v == "power") c.kind = ProfileKind::Power;
    else throw InvalidArgument("profile must be flat or power, got '" + v + "'");
  } else if (key == "dim") c.dim = to_int(key, v);
  else if (key == "m") c.m = to_double(key, v);
  else if (key == "kappa0") c.kappa0 = to_double(key, v);
  else if (key == "r0") c.r0 = to_double(key, v);
  else if (key == "r_neck") c.r_neck = to_double(key, v);
  else if (key == "outer_radius") c.outer_radius = to_double(key, v);
  else if (key == "eps_list") c.eps_list = parse_list(v);
  else if (key == "eps_range") {
    // hi, lo, n
    const auto r = parse_list(v);
    if (r.size() != 3) throw InvalidArgument("eps_range expects hi,lo,n");
    c.eps_list = geometric_eps(r[0], r[1], static_cast<int>(r[2]));
  } else if (key == "mesh_budget") c.grading.budget = to_double(key, v);
  else if (key == "n_layers") c.grading.n_layers = to_int(key, v);
  else if (key == "grading_ratio") c.grading.ratio = to_double(key, v);
  else if (key == "center_resolution") c.grading.center_resolution = to_double(key, v);
  else if (key == "h_max") c.grading.h_max = to_double(key, v);
  else if (key == "h_arc") c.grading.h_arc = to_double(key, v);
  else if (key == "lambda") c.lambda = to_double(key, v);
  else if (key == "mu") c.mu = to_double(key, v);
  else if (key == "phi") c.phi = v;
  else if (key == "solver") {
    if (v == "auto") c.solver.kind = SolverKind::Auto;
    else if (v == "pcg") c.solver.kind = SolverKind::Pcg;
    else if (v == "direct") c.solver.kind = SolverKind::Direct;
    else throw InvalidArgument("solver must be auto, pcg or direct, got '" + v + "'");
  } else if (key == "tol") c.solver.tolerance = to_double(key, v);
  else if (key == "max_iterations") c.solver.max_iterations = to_int(key, v);
  else if (key == "threads") c.threads = to_int(key, v);
  else if (key == "out") c.out_csv = v;
  else if (key == "json") c.out_json = v;
  else if (key == "field_dir") c.field_dir = v;
  else if (key == "seed") {
    c.seed = static_cast<std::uint64_t>(to_double(key, v));
    c.grading.seed = c.seed;
  } else throw InvalidArgument("unknown config key '" + key + "'");
}

ExperimentConfig parse_config(std::istream& is, ExperimentConfig c) {
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value");
    apply_setting(c, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return c;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream f(path);
  if (!f) throw InvalidArgument("cannot open config file " + path);
  return parse_config(f, std::move(base));
}

Trace parse_phi(const std::string& s) {
  if (s == "zero") return [](const Vector2d&) { return Vector2d(0, 0); };
  if (s == "affine-x2") return [](const Vector2d& x) { return Vector2d(x.y(), 0); };
  if (s == "quad-x2") return [](const Vector2d& x) { return Vector2d(x.y() * x.y(), 0); };
  if (s.rfind("rigid:", 0) == 0) {
    const int a = to_int("phi", s.substr(6));
    const auto basis = rigid_basis(2);
    if (a < 1 || a > static_cast<int>(basis.size())) throw InvalidArgument("phi rigid index out of range: " + s);
    const RigidMotion psi = basis[a - 1];
    return [psi](const Vector2d& x) { return psi(x); };
  }
  if (s.rfind("affine:", 0) == 0) {
    const auto c = parse_list(s.substr(7));
    if (c.size() != 4) throw InvalidArgument("phi affine expects four coefficients: " + s);
    return [c](const Vector2d& x) { return Vector2d(c[0] * x.x() + c[1] * x.y(), c[2] * x.x() + c[3] * x.y()); };
  }
  throw InvalidArgument("unknown phi selector '" + s + "'");
}

PointSolution solve_point(const ExperimentConfig& cfg, double eps) {
  if (cfg.dim != 2) throw InvalidArgument("finite element runs are two-dimensional; dim = " + std::to_string(cfg.dim));
  PointSolution ps;
  ps.profile = cfg.profile(eps);
  auto mesh = std::make_shared<const Mesh>(build_mesh(ps.profile, cfg.grading));
  ps.space = make_space(mesh, 2);
  const Params prm = cfg.params();
  ps.solver = std::make_unique<DirichletSolver>(ps.space, prm, cfg.solver);
  ps.cells = solve_cell_problems(*ps.solver);
  auto [v3, r3] = solve_v3(*ps.solver, parse_phi(cfg.phi));
  ps.v3 = std::move(v3);
  ps.system = solve_coefficients(assemble_system(prm, ps.cells, ps.v3));
  ps.u = reconstruct(ps.cells, ps.v3, ps.system);

  SweepRow& row = ps.row;
  row.eps = eps;
  row.dofs = ps.space->num_dofs();
  row.cells = mesh->num_cells();
  row.min_layers = mesh->grading_report.min_layers;
  row.min_quality = mesh->grading_report.min_quality;
  const auto g = max_gradient(ps.u, Region::neck(cfg.r_neck));
  row.grad_max = g.value;
  row.grad_x = g.point.x();
  row.grad_y = g.point.y();
  row.system = system_values(ps.system);
  row.a11_min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(ps.system.a11).eigenvalues().minCoeff();
  const auto [t1, t2] = traction_loads(prm, ps.v3);
  Eigen::VectorXd vol(2 * ps.system.n_alpha), tr(2 * ps.system.n_alpha);
  vol << ps.system.b1, ps.system.b2;
  tr << t1, t2;
  // scale by the load size, or by the energy scale when phi gives no load
  const double scale = std::max(vol.norm(), 1e-300);
  row.b_cross = (vol - tr).norm() / scale;
  row.solve_residual = r3.relative_residual;
  for (const auto& r : ps.cells.reports) row.solve_residual = std::max(row.solve_residual, r.relative_residual);
  row.ok = true;

  if (!cfg.field_dir.empty()) {
    std::filesystem::create_directories(cfg.field_dir);
    std::ofstream f(std::filesystem::path(cfg.field_dir) / ("field_eps_" + fmt(eps) + ".txt"));
    write_field(f, ps.u);
  }
  return ps;
}

SweepResult run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  SweepResult res;
  res.config = cfg;
  res.n_alpha = rigid_count(2);
  const int n = static_cast<int>(cfg.eps_list.size());
  res.rows.resize(n);
  int nt = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  nt = std::min(nt, n);
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < n; i = next++) {
      const double eps = cfg.eps_list[i];
      try {
        res.rows[i] = solve_point(cfg, eps).row;
      } catch (const std::exception& e) {
        SweepRow r;
        r.eps = eps;
        r.error = e.what();
        res.rows[i] = r;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < nt; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return res;
}

std::vector<std::string> SweepResult::columns() const {
  std::vector<std::string> c{"eps", "ok", "dofs", "cells", "min_layers", "min_quality", "grad_max", "grad_x", "grad_y"};
  for (const auto& k : system_keys(n_alpha)) c.push_back(k);
  for (const char* k : {"a11_min_eig", "b_cross", "solve_residual"}) c.push_back(k);
  return c;
}

namespace {

std::vector<double> row_values(const SweepRow& r, int n_alpha) {
  const double nan = std::nan("");
  std::vector<double> v{r.eps, r.ok ? 1.0 : 0.0, double(r.dofs), double(r.cells), double(r.min_layers),
                        r.min_quality, r.ok ? r.grad_max : nan, r.ok ? r.grad_x : nan, r.ok ? r.grad_y : nan};
  if (r.ok) v.insert(v.end(), r.system.begin(), r.system.end());
  else v.insert(v.end(), system_keys(n_alpha).size(), nan);
  for (double x : {r.a11_min_eig, r.b_cross, r.solve_residual}) v.push_back(r.ok ? x : nan);
  return v;
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> SweepResult::series(const std::string& column) const {
  const auto cols = columns();
  const auto it = std::find(cols.begin(), cols.end(), column);
  if (it == cols.end()) throw InvalidArgument("no column '" + column + "'");
  const auto j = it - cols.begin();
  std::vector<double> e, v;
  for (const auto& r : rows)
    if (r.ok) {
      e.push_back(r.eps);
      v.push_back(row_values(r, n_alpha)[j]);
    }
  return {e, v};
}

void write_csv_header(std::ostream& os, const SweepResult& r) {
  os << "# neckstress-v1\n";
  std::string text = r.config.to_text();
  std::replace(text.begin(), text.end(), '\n', ';');
  os << "# config: " << text << "\n";
  const auto cols = r.columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << ",error\n";
}

void write_csv_rows(std::ostream& os, const SweepResult& r) {
  for (const auto& row : r.rows) {
    const auto v = row_values(row, r.n_alpha);
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << fmt(v[i]);
    std::string err = row.error;
    std::replace_if(err.begin(), err.end(), [](char c) { return c == ',' || c == '\n' || c == '\r'; }, ' ');
    os << "," << err << "\n";
  }
}

void write_csv(std::ostream& os, const SweepResult& r) {
  write_csv_header(os, r);
  write_csv_rows(os, r);
}

void append_csv(const std::string& path, const SweepResult& r) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream f(path, std::ios::app);
  if (!f) throw InvalidArgument("cannot open " + path + " for appending");
  if (fresh) write_csv_header(f, r);
  write_csv_rows(f, r);
}

std::vector<double> CsvTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw InvalidArgument("no column '" + name + "'");
  const auto j = it - columns.begin();
  std::vector<double> v;
  for (const auto& r : rows) v.push_back(r[j]);
  return v;
}

CsvTable read_csv(std::istream& is) {
  CsvTable t;
  std::string line;
  if (!std::getline(is, line) || trim(line) != "# neckstress-v1") throw InvalidArgument("not a neckstress-v1 CSV");
  while (std::getline(is, line)) {
    if (line.rfind("# config: ", 0) == 0) {
      std::stringstream ss(line.substr(10));
      std::string kv;
      while (std::getline(ss, kv, ';')) {
        const auto eq = kv.find('=');
        if (eq != std::string::npos) t.config[trim(kv.substr(0, eq))] = trim(kv.substr(eq + 1));
      }
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (t.columns.empty()) {
      t.columns.assign(cells.begin(), cells.end() - (cells.size() && cells.back() == "error"));
      continue;
    }
    std::vector<double> row;
    for (std::size_t i = 0; i < t.columns.size(); ++i)
      row.push_back(i < cells.size() ? std::strtod(cells[i].c_str(), nullptr) : std::nan(""));
    t.rows.push_back(std::move(row));
  }
  return t;
}

namespace {

void least_squares(const std::vector<double>& x, const std::vector<double>& y, double& slope, double& icpt,
                   double& r2) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  slope = sxy / sxx;
  icpt = my - slope * mx;
  double sse = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - icpt - slope * x[i];
    sse += e * e;
  }
  // a perfectly flat series is fitted exactly
  r2 = syy > 0 ? 1.0 - sse / syy : 1.0;
}

}  // namespace

RateFit fit_rate(const std::vector<std::pair<double, double>>& samples, double predicted, int log_power) {
  if (samples.size() < 4) throw InvalidArgument("fit_rate needs at least 4 samples");
  RateFit f;
  f.samples = samples;
  f.predicted = predicted;
  f.log_power = log_power;
  std::vector<double> x, y, yc;
  for (const auto& [e, v] : samples) {
    if (!(e > 0.0)) throw InvalidArgument("fit_rate: eps must be positive");
    if (!(v > 0.0)) throw InvalidArgument("fit_rate: non-positive value " + fmt(v) + " at eps " + fmt(e));
    x.push_back(std::log(e));
    y.push_back(std::log(v));
    yc.push_back(std::log(v) - log_power * std::log(std::abs(std::log(e))));
  }
  if (std::adjacent_find(x.begin(), x.end()) != x.end() || *std::min_element(x.begin(), x.end()) == *std::max_element(x.begin(), x.end()))
    throw InvalidArgument("fit_rate: eps samples must be distinct");
  least_squares(x, y, f.slope, f.intercept, f.r2);
  if (log_power != 0) {
    f.corrected = true;
    least_squares(x, yc, f.corrected_slope, f.corrected_intercept, f.corrected_r2);
  }
  return f;
}

RateFit fit_rate(const std::vector<double>& eps, const std::vector<double>& values, double predicted, int log_power) {
  if (eps.size() != values.size()) throw InvalidArgument("fit_rate: length mismatch");
  std::vector<std::pair<double, double>> s;
  for (std::size_t i = 0; i < eps.size(); ++i) s.emplace_back(eps[i], values[i]);
  return fit_rate(s, predicted, log_power);
}

std::vector<OracleComparison> compare_oracles(const SweepResult& r) {
  const auto& c = r.config;
  std::vector<OracleComparison> out;
  const int d = 2, n = r.n_alpha;
  const auto [eps, diag] = r.series("a11_11");
  if (eps.size() < 4) throw InvalidArgument("compare_oracles: fewer than 4 solved eps points");
  for (int a = 1; a <= n; ++a)
    for (int b = a; b <= n; ++b) {
      OracleComparison o;
      o.alpha = a;
      o.beta = b;
      auto vals = r.series("a11_" + std::to_string(a) + std::to_string(b)).second;
      const auto da = r.series("a11_" + std::to_string(a) + std::to_string(a)).second;
      const auto db = r.series("a11_" + std::to_string(b) + std::to_string(b)).second;
      std::vector<double> oracle;
      for (std::size_t i = 0; i < eps.size(); ++i) {
        vals[i] = std::abs(vals[i]);
        // entries that cancel by the mirror symmetry of the geometry
        if (a != b && vals[i] <= 1e-8 * std::sqrt(std::abs(da[i] * db[i]))) o.vanishing = true;
        if (c.kind == ProfileKind::Flat)
          oracle.push_back(flat_entry_oracle(d, c.profile(eps[i]).flat_area(), eps[i], a, b));
        else
          oracle.push_back(power_entry_scaling(d, c.m, eps[i], a, b));
      }
      o.log_entry = c.kind == ProfileKind::Flat ? flat_entry_has_log(d, a, b) : power_entry_exponent(d, c.m, a, b).second != 0;
      o.tolerance = o.log_entry ? 0.25 : 0.15;
      o.oracle_slope = fit_rate(eps, oracle).slope;
      if (!o.vanishing) {
        o.measured_slope = fit_rate(eps, vals).slope;
        o.pass = std::abs(o.measured_slope - o.oracle_slope) <= o.tolerance;
      } else {
        o.measured_slope = std::nan("");
        o.pass = true;
      }
      out.push_back(o);
    }
  return out;
}

std::string summary_json(const SweepResult& r, const std::map<std::string, RateFit>& fits,
                         const std::vector<OracleComparison>& oracle, const std::map<std::string, bool>& criteria) {
  using nlohmann::json;
  json j;
  j["schema"] = "neckstress-v1";
  j["config"] = json::object();
  std::istringstream cfg(r.config.to_text());
  for (std::string line; std::getline(cfg, line);) {
    const auto eq = line.find('=');
    j["config"][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  j["rows"] = r.rows.size();
  json failed = json::array();
  for (const auto& row : r.rows)
    if (!row.ok) failed.push_back({{"eps", row.eps}, {"error", row.error}});
  j["failed_rows"] = failed;
  json jf = json::object();
  for (const auto& [name, f] : fits) {
    json e = {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}, {"predicted", f.predicted},
              {"log_power", f.log_power}, {"samples", f.samples.size()}};
    if (f.corrected) {
      e["corrected_slope"] = f.corrected_slope;
      e["corrected_r2"] = f.corrected_r2;
    }
    jf[name] = e;
  }
  j["fits"] = jf;
  json jo = json::array();
  for (const auto& o : oracle) {
    json e = {{"entry", std::to_string(o.alpha) + std::to_string(o.beta)}, {"oracle_slope", o.oracle_slope},
              {"tolerance", o.tolerance}, {"log_entry", o.log_entry}, {"vanishing", o.vanishing}, {"pass", o.pass}};
    e["measured_slope"] = o.vanishing ? json(nullptr) : json(o.measured_slope);
    jo.push_back(e);
  }
  j["oracle"] = jo;
  if (!criteria.empty()) j["criteria"] = criteria;
  return j.dump(2);
}

}  // namespace neckstress
