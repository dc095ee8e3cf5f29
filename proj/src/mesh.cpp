#include "neckstress/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "neckstress/error.hpp"

namespace neckstress {

namespace {

using Eigen::Vector2d;

// Offsets 0 = t_0 < ... < t_n = length with local spacing h(t) = min(h0 + g t, hmax),
// placed by equidistributing the integral of 1/h.
std::vector<double> graded_offsets(double length, double h0, double g, double hmax) {
  h0 = std::min(h0, hmax);
  const double tstar = (hmax - h0) / g;
  auto phi = [&](double t) {
    if (t <= tstar) return std::log1p(g * t / h0) / g;
    return std::log1p(g * tstar / h0) / g + (t - tstar) / hmax;
  };
  auto phi_inv = [&](double s) {
    const double sstar = std::log1p(g * tstar / h0) / g;
    if (s <= sstar) return std::expm1(g * s) * h0 / g;
    return tstar + (s - sstar) * hmax;
  };
  const double total = phi(length);
  const int n = std::max(1, static_cast<int>(std::ceil(total - 1e-9)));
  std::vector<double> t(n + 1);
  for (int i = 0; i <= n; ++i) t[i] = phi_inv(total * i / n);
  t.front() = 0.0;
  t.back() = length;
  return t;
}

// Column abscissae on [-L, L], symmetric, finest at the contact set.
std::vector<double> neck_columns(const NeckProfile& p, double h0, double g, double hmax) {
  const double L = p.r_neck;
  std::vector<double> right;  // abscissae in [0, L]
  if (p.kind == ProfileKind::Flat && p.r0 > 0.0) {
    auto inner = graded_offsets(p.r0, h0, g, hmax);
    for (auto it = inner.rbegin(); it != inner.rend(); ++it) right.push_back(p.r0 - *it);
    auto outer = graded_offsets(L - p.r0, h0, g, hmax);
    for (std::size_t i = 1; i < outer.size(); ++i) right.push_back(p.r0 + outer[i]);
    right.front() = 0.0;
  } else {
    right = graded_offsets(L, h0, g, hmax);
  }
  std::vector<double> x;
  for (auto it = right.rbegin(); it != std::prev(right.rend()); ++it) x.push_back(-*it);
  x.insert(x.end(), right.begin(), right.end());
  return x;
}

// Closure arc of D1 tangent to the graph at x1 = +-L: center (0, yc), radius r.
struct Arc {
  double yc, r, t0, t1;  // angle range, counter-clockwise
};

Arc top_arc(const NeckProfile& p) {
  const double L = p.r_neck, s = p.dh1r(L), y = p.top(L);
  Arc a;
  a.yc = y + L / s;
  a.r = L * std::sqrt(1.0 + s * s) / s;
  a.t0 = std::atan2(y - a.yc, L);
  a.t1 = std::atan2(y - a.yc, -L) + 2.0 * std::numbers::pi;
  return a;
}

Arc bottom_arc(const NeckProfile& p) {
  const double L = p.r_neck, s = p.dh1r(L), y = p.h2(L);
  Arc a;
  a.yc = y - L / s;
  a.r = L * std::sqrt(1.0 + s * s) / s;
  a.t0 = std::atan2(y - a.yc, -L);
  a.t1 = std::atan2(y - a.yc, L) + 2.0 * std::numbers::pi;
  return a;
}

void add_quad(std::vector<std::array<int, 3>>& cells, const std::vector<Vector2d>& x, int a, int b,
              int c, int d) {
  // a b c d counter-clockwise; split along the shorter diagonal
  if ((x[a] - x[c]).squaredNorm() <= (x[b] - x[d]).squaredNorm()) {
    cells.push_back({a, b, c});
    cells.push_back({a, c, d});
  } else {
    cells.push_back({a, b, d});
    cells.push_back({b, c, d});
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

const char* tag_name(BoundaryTag t) {
  switch (t) {
    case BoundaryTag::InclusionTop: return "InclusionTop";
    case BoundaryTag::InclusionBottom: return "InclusionBottom";
    case BoundaryTag::Outer: return "Outer";
  }
  return "?";
}

double triangle_area(const Vector2d& a, const Vector2d& b, const Vector2d& c) {
  const Vector2d u = b - a, v = c - a;
  return 0.5 * (u.x() * v.y() - u.y() * v.x());
}

double triangle_quality(const Vector2d& a, const Vector2d& b, const Vector2d& c) {
  const double s = (b - a).squaredNorm() + (c - b).squaredNorm() + (a - c).squaredNorm();
  return 4.0 * std::sqrt(3.0) * triangle_area(a, b, c) / s;
}

Mesh build_mesh(const NeckProfile& p, const GradingConfig& cfg) {
  if (p.dim != 2) throw InvalidArgument("build_mesh: only dim = 2 is meshed");
  if (cfg.n_layers < 1) throw InvalidArgument("build_mesh: n_layers must be >= 1");
  if (!(cfg.ratio > 1.0)) throw InvalidArgument("build_mesh: ratio must be > 1");
  if (!(cfg.budget > 0.0) || !(cfg.h_max > 0.0) || !(cfg.h_arc > 0.0) || !(cfg.center_resolution > 0.0))
    throw InvalidArgument("build_mesh: sizes and budget must be positive");

  const double R = p.r_neck;
  const double refine = std::sqrt(cfg.budget);
  const double hmax = cfg.h_max * R / refine;
  const double harc = cfg.h_arc * R / refine;
  const double h0 = p.neck_scale() / cfg.center_resolution / refine;
  const double g = (cfg.ratio - 1.0) / refine;
  const int ny = std::max(cfg.n_layers,
                          static_cast<int>(std::lround(cfg.n_layers * std::pow(cfg.budget, 0.25))));

  Mesh mesh;
  mesh.profile = p;
  auto& X = mesh.nodes;
  auto& cells = mesh.cells;
  auto& edges = mesh.boundary;

  // neck block, structured in (x1, vbar)
  const auto xs = neck_columns(p, h0, g, hmax);
  const int nc = static_cast<int>(xs.size()) - 1;
  auto block = [&](int i, int j) { return i * (ny + 1) + j; };
  for (int i = 0; i <= nc; ++i) {
    const double lo = p.h2(xs[i]), hi = p.top(xs[i]);
    for (int j = 0; j <= ny; ++j) {
      // exact endpoints so boundary nodes sit on the graphs
      const double y = j == 0 ? lo : j == ny ? hi : lo + (hi - lo) * j / ny;
      X.emplace_back(xs[i], y);
    }
  }
  for (int i = 0; i < nc; ++i)
    for (int j = 0; j < ny; ++j)
      add_quad(cells, X, block(i, j), block(i + 1, j), block(i + 1, j + 1), block(i, j + 1));
  for (int i = 0; i < nc; ++i) {
    edges.push_back({{block(i, 0), block(i + 1, 0)}, BoundaryTag::InclusionBottom});
    edges.push_back({{block(i + 1, ny), block(i, ny)}, BoundaryTag::InclusionTop});
  }

  // closed curve around the block and both inclusions, counter-clockwise
  std::vector<int> ring;
  for (int j = 0; j <= ny; ++j) ring.push_back(block(nc, j));
  auto add_arc = [&](const Arc& a, int from, int to, BoundaryTag tag) {
    const int n = std::max(2, static_cast<int>(std::ceil(a.r * (a.t1 - a.t0) / harc)));
    int prev = from;
    for (int k = 1; k < n; ++k) {
      const double t = a.t0 + (a.t1 - a.t0) * k / n;
      X.emplace_back(a.r * std::cos(t), a.yc + a.r * std::sin(t));
      const int id = static_cast<int>(X.size()) - 1;
      edges.push_back({{id, prev}, tag});  // domain on the left
      ring.push_back(id);
      prev = id;
    }
    edges.push_back({{to, prev}, tag});
  };
  add_arc(top_arc(p), block(nc, ny), block(0, ny), BoundaryTag::InclusionTop);
  for (int j = ny; j >= 0; --j) ring.push_back(block(0, j));
  add_arc(bottom_arc(p), block(0, 0), block(nc, 0), BoundaryTag::InclusionBottom);

  // O-grid: rays from the gap center to the outer circle
  const Vector2d c(0.0, 0.5 * p.epsilon);
  const int n = static_cast<int>(ring.size());
  std::vector<double> theta(n);
  for (int i = 0; i < n; ++i) {
    const Vector2d v = X[ring[i]] - c;
    theta[i] = std::atan2(v.y(), v.x());
  }
  // the ring starts below the positive x axis; unwrap and require strict monotonicity
  for (int i = 1; i < n; ++i) {
    while (theta[i] <= theta[i - 1] - std::numbers::pi) theta[i] += 2.0 * std::numbers::pi;
    if (!(theta[i] > theta[i - 1]))
      throw MeshingError("outer region: boundary not star-shaped about the gap center near (" +
                         fmt(X[ring[i]].x()) + ", " + fmt(X[ring[i]].y()) + ")");
  }
  if (!(theta[n - 1] < theta[0] + 2.0 * std::numbers::pi))
    throw MeshingError("outer region: boundary winds more than once about the gap center");

  std::vector<Vector2d> Q(n);
  double mean_len = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vector2d u(std::cos(theta[i]), std::sin(theta[i]));
    const double cu = c.dot(u);
    const double s = -cu + std::sqrt(cu * cu - c.squaredNorm() + p.outer_radius * p.outer_radius);
    Q[i] = c + s * u;
    const double len = (Q[i] - X[ring[i]]).norm();
    if (!(len > 0.0)) throw MeshingError("outer region: inclusions touch the outer circle");
    mean_len += len / n;
  }
  const double first = harc;
  const double last = std::max(first, 2.0 * std::numbers::pi * p.outer_radius / n);
  const int nr = std::max(2, static_cast<int>(std::ceil(2.0 * mean_len / (first + last))));
  const double q = std::pow(last / first, 1.0 / (nr - 1));
  std::vector<double> tau(nr + 1);
  for (int k = 0; k <= nr; ++k)
    tau[k] = q > 1.0 + 1e-12 ? (std::pow(q, k) - 1.0) / (std::pow(q, nr) - 1.0) : double(k) / nr;

  std::vector<std::vector<int>> ray(n, std::vector<int>(nr + 1));
  for (int i = 0; i < n; ++i) {
    ray[i][0] = ring[i];
    const Vector2d P = X[ring[i]];
    for (int k = 1; k <= nr; ++k) {
      X.push_back(k == nr ? Q[i] : Vector2d(P + tau[k] * (Q[i] - P)));
      ray[i][k] = static_cast<int>(X.size()) - 1;
    }
  }
  const std::size_t outer_first = cells.size();
  for (int i = 0; i < n; ++i) {
    const int i1 = (i + 1) % n;
    for (int k = 0; k < nr; ++k) add_quad(cells, X, ray[i][k], ray[i][k + 1], ray[i1][k + 1], ray[i1][k]);
    edges.push_back({{ray[i1][nr], ray[i][nr]}, BoundaryTag::Outer});
  }
  for (std::size_t e = outer_first; e < cells.size(); ++e) {
    const auto& t = cells[e];
    if (!(triangle_area(X[t[0]], X[t[1]], X[t[2]]) > 0.0)) {
      const Vector2d mid = (X[t[0]] + X[t[1]] + X[t[2]]) / 3.0;
      throw MeshingError("outer region: inverted element near (" + fmt(mid.x()) + ", " +
                         fmt(mid.y()) + "); refine h_arc or shrink r_neck");
    }
  }

  auto& rep = mesh.grading_report;
  rep.min_layers = ny;
  rep.max_layers = ny;
  rep.neck_columns = nc;
  rep.outer_rings = nr;
  rep.min_quality = 1.0;
  for (const auto& t : cells) rep.min_quality = std::min(rep.min_quality, triangle_quality(X[t[0]], X[t[1]], X[t[2]]));
  if (!(rep.min_quality > 0.0)) throw MeshingError("neck block: degenerate element");
  return mesh;
}

void validate_mesh(const Mesh& mesh) {
  const auto& X = mesh.nodes;
  const int nn = static_cast<int>(X.size());
  std::map<std::pair<int, int>, int> count;
  for (std::size_t e = 0; e < mesh.cells.size(); ++e) {
    const auto& t = mesh.cells[e];
    for (int v : t)
      if (v < 0 || v >= nn) throw MeshingError("cell " + std::to_string(e) + ": node index out of range");
    if (!(triangle_area(X[t[0]], X[t[1]], X[t[2]]) > 0.0))
      throw MeshingError("cell " + std::to_string(e) + ": not positively oriented");
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      ++count[{std::min(a, b), std::max(a, b)}];
    }
  }
  std::map<std::pair<int, int>, int> tagged;
  for (const auto& e : mesh.boundary) {
    const auto key = std::make_pair(std::min(e.nodes[0], e.nodes[1]), std::max(e.nodes[0], e.nodes[1]));
    if (tagged.count(key)) throw MeshingError("boundary edge tagged twice");
    tagged[key] = static_cast<int>(e.tag);
  }
  for (const auto& [key, n] : count) {
    if (n > 2) throw MeshingError("non-manifold edge");
    if (n == 1 && !tagged.count(key)) throw MeshingError("untagged boundary edge");
    if (n == 2 && tagged.count(key)) throw MeshingError("tagged edge in the interior");
  }
  if (tagged.size() != static_cast<std::size_t>(std::count_if(count.begin(), count.end(),
                                                              [](const auto& kv) { return kv.second == 1; })))
    throw MeshingError("tagged edge not in the mesh");
  // each tag must form closed curves: every node has degree 2 within the tag
  for (int tag = 1; tag <= 3; ++tag) {
    std::map<int, int> degree;
    for (const auto& [key, t] : tagged)
      if (t == tag) {
        ++degree[key.first];
        ++degree[key.second];
      }
    if (degree.empty()) throw MeshingError(std::string("no edges tagged ") + tag_name(BoundaryTag(tag)));
    for (const auto& [v, d] : degree)
      if (d != 2) throw MeshingError(std::string("edges tagged ") + tag_name(BoundaryTag(tag)) + " are not closed");
  }
}

void write_mesh(std::ostream& os, const Mesh& mesh) {
  const auto& p = mesh.profile;
  os << "# neckstress-mesh v1\n" << std::setprecision(17);
  os << "profile " << (p.kind == ProfileKind::Flat ? "flat" : "power") << ' ' << p.dim << ' ' << p.epsilon
     << ' ' << p.kappa0 << ' ' << p.m << ' ' << p.r0 << ' ' << p.r_neck << ' ' << p.outer_radius << '\n';
  os << "nodes " << mesh.nodes.size() << '\n';
  for (const auto& x : mesh.nodes) os << x.x() << ' ' << x.y() << '\n';
  os << "cells " << mesh.cells.size() << '\n';
  for (const auto& t : mesh.cells) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  os << "edges " << mesh.boundary.size() << '\n';
  for (const auto& e : mesh.boundary) os << e.nodes[0] << ' ' << e.nodes[1] << ' ' << int(e.tag) << '\n';
}

Mesh read_mesh(std::istream& is) {
  std::string line, word;
  std::getline(is, line);
  if (line != "# neckstress-mesh v1") throw InvalidArgument("read_mesh: missing header");
  Mesh mesh;
  std::string kind;
  auto& p = mesh.profile;
  is >> word >> kind >> p.dim >> p.epsilon >> p.kappa0 >> p.m >> p.r0 >> p.r_neck >> p.outer_radius;
  if (word != "profile" || (kind != "flat" && kind != "power")) throw InvalidArgument("read_mesh: bad profile line");
  p = make_profile(kind == "flat" ? ProfileKind::Flat : ProfileKind::Power, p.dim, p.epsilon, p.kappa0, p.m,
                   p.r0, p.r_neck, p.outer_radius);
  std::size_t n;
  is >> word >> n;
  if (word != "nodes") throw InvalidArgument("read_mesh: expected nodes");
  mesh.nodes.resize(n);
  for (auto& x : mesh.nodes) is >> x.x() >> x.y();
  is >> word >> n;
  if (word != "cells") throw InvalidArgument("read_mesh: expected cells");
  mesh.cells.resize(n);
  for (auto& t : mesh.cells) is >> t[0] >> t[1] >> t[2];
  is >> word >> n;
  if (word != "edges") throw InvalidArgument("read_mesh: expected edges");
  mesh.boundary.resize(n);
  for (auto& e : mesh.boundary) {
    int tag;
    is >> e.nodes[0] >> e.nodes[1] >> tag;
    if (tag < 1 || tag > 3) throw InvalidArgument("read_mesh: bad tag");
    e.tag = BoundaryTag(tag);
  }
  if (!is) throw InvalidArgument("read_mesh: truncated input");
  validate_mesh(mesh);
  auto& rep = mesh.grading_report;
  rep.min_quality = 1.0;
  for (const auto& t : mesh.cells)
    rep.min_quality = std::min(rep.min_quality, triangle_quality(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]));
  return mesh;
}

}  // namespace neckstress
