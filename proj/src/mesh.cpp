#include "stampacchia/mesh.hpp"

#include "stampacchia/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <utility>

namespace stampacchia {

namespace {

using EdgeKey = std::pair<int, int>;

EdgeKey undirected(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

BoundaryEdge make_boundary_edge(const std::vector<Point>& v, int a, int b) {
  BoundaryEdge e;
  e.a = a;
  e.b = b;
  if (a < 0 || b < 0 || a >= static_cast<int>(v.size()) || b >= static_cast<int>(v.size()))
    return e;
  const double dx = v[b].x - v[a].x;
  const double dy = v[b].y - v[a].y;
  e.length = std::hypot(dx, dy);
  if (e.length > 0.0) e.normal = {dy / e.length, -dx / e.length};
  return e;
}

// Directed edges used by exactly one triangle, chained into loops.
std::vector<std::array<int, 2>> derive_boundary(const std::vector<Triangle>& tris) {
  std::map<EdgeKey, int> count;
  for (const auto& t : tris)
    for (int k = 0; k < 3; ++k) ++count[undirected(t[k], t[(k + 1) % 3])];

  std::vector<std::array<int, 2>> edges;
  for (const auto& t : tris)
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      if (count[undirected(a, b)] == 1) edges.push_back({a, b});
    }

  std::multimap<int, std::size_t> by_start;
  for (std::size_t i = 0; i < edges.size(); ++i) by_start.emplace(edges[i][0], i);

  std::vector<bool> used(edges.size(), false);
  std::vector<std::array<int, 2>> ordered;
  ordered.reserve(edges.size());
  for (std::size_t s = 0; s < edges.size(); ++s) {
    if (used[s]) continue;
    std::size_t cur = s;
    while (!used[cur]) {
      used[cur] = true;
      ordered.push_back(edges[cur]);
      auto [lo, hi] = by_start.equal_range(edges[cur][1]);
      std::size_t next = cur;
      for (auto it = lo; it != hi; ++it)
        if (!used[it->second]) {
          next = it->second;
          break;
        }
      if (next == cur) break;
      cur = next;
    }
  }
  return ordered;
}

} // namespace

double signed_area(const Point& a, const Point& b, const Point& c) noexcept {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

TriMesh::TriMesh(std::vector<Point> vertices, std::vector<Triangle> triangles)
    : TriMesh(std::move(vertices), triangles, derive_boundary(triangles)) {}

TriMesh::TriMesh(std::vector<Point> vertices, std::vector<Triangle> triangles,
                 std::vector<std::array<int, 2>> boundary_edges)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  const int nv = static_cast<int>(vertices_.size());
  areas_.reserve(triangles_.size());
  for (const auto& t : triangles_) {
    const bool in_range = std::all_of(t.begin(), t.end(), [nv](int i) { return i >= 0 && i < nv; });
    const double a = in_range ? signed_area(vertices_[t[0]], vertices_[t[1]], vertices_[t[2]])
                              : std::numeric_limits<double>::quiet_NaN();
    areas_.push_back(a);
    total_area_ += a;
  }
  boundary_.reserve(boundary_edges.size());
  for (const auto& be : boundary_edges)
    boundary_.push_back(make_boundary_edge(vertices_, be[0], be[1]));
}

double TriMesh::perimeter() const noexcept {
  double p = 0.0;
  for (const auto& e : boundary_) p += e.length;
  return p;
}

Point TriMesh::centroid(std::size_t e) const {
  const auto& t = triangles_.at(e);
  const Point& a = vertices_[t[0]];
  const Point& b = vertices_[t[1]];
  const Point& c = vertices_[t[2]];
  return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

std::size_t TriMesh::num_edges() const {
  std::vector<EdgeKey> keys;
  keys.reserve(3 * triangles_.size());
  for (const auto& t : triangles_)
    for (int k = 0; k < 3; ++k) keys.push_back(undirected(t[k], t[(k + 1) % 3]));
  std::sort(keys.begin(), keys.end());
  return static_cast<std::size_t>(std::unique(keys.begin(), keys.end()) - keys.begin());
}

std::array<double, 4> TriMesh::bounding_box() const {
  std::array<double, 4> box{std::numeric_limits<double>::infinity(),
                            std::numeric_limits<double>::infinity(),
                            -std::numeric_limits<double>::infinity(),
                            -std::numeric_limits<double>::infinity()};
  for (const auto& p : vertices_) {
    box[0] = std::min(box[0], p.x);
    box[1] = std::min(box[1], p.y);
    box[2] = std::max(box[2], p.x);
    box[3] = std::max(box[3], p.y);
  }
  return box;
}

// --- generators -------------------------------------------------------------

TriMesh generate_rectangle(int nx, int ny, double width, double height) {
  if (nx < 1 || ny < 1) throw PreconditionViolation("rectangle needs nx, ny >= 1");
  if (!(width > 0.0) || !(height > 0.0))
    throw PreconditionViolation("rectangle needs positive width and height");

  std::vector<Point> v;
  v.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      v.push_back({width * i / nx, height * j / ny});

  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  std::vector<Triangle> t;
  t.reserve(2 * static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      // diagonal from bottom-left to top-right
      t.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      t.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return TriMesh(std::move(v), std::move(t));
}

TriMesh generate_cusp(double beta, int n, int vertical) {
  if (!(beta >= 0.0)) throw PreconditionViolation("cusp exponent beta must be >= 0");
  if (n < 2) throw PreconditionViolation("cusp needs n >= 2 layers");
  const int m = vertical > 0 ? vertical : std::max(2, n / 2);

  std::vector<Point> v;
  std::vector<std::vector<int>> column(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double s = static_cast<double>(i) / n;
    const double x = s * s;
    const double w = std::pow(x, beta);
    if (w == 0.0) {
      column[i].push_back(static_cast<int>(v.size()));
      v.push_back({x, 0.0});
      continue;
    }
    for (int j = 0; j <= m; ++j) {
      column[i].push_back(static_cast<int>(v.size()));
      v.push_back({x, w * (-1.0 + 2.0 * j / m)});
    }
  }

  std::vector<Triangle> t;
  for (int i = 0; i < n; ++i) {
    const auto& l = column[i];
    const auto& r = column[i + 1];
    if (l.size() == 1) {
      for (int j = 0; j < m; ++j) t.push_back({l[0], r[j], r[j + 1]});
      continue;
    }
    for (int j = 0; j < m; ++j) {
      t.push_back({l[j], r[j], r[j + 1]});
      t.push_back({l[j], r[j + 1], l[j + 1]});
    }
  }
  return TriMesh(std::move(v), std::move(t));
}

TriMesh generate_lshape(int n) {
  if (n < 1) throw PreconditionViolation("L-shape needs n >= 1");
  const int g = 2 * n;
  auto inside = [n](int i, int j) { return !(i >= n && j >= n); };

  std::vector<int> id((g + 1) * (g + 1), -1);
  std::vector<Point> v;
  auto vertex = [&](int i, int j) {
    int& k = id[j * (g + 1) + i];
    if (k < 0) {
      k = static_cast<int>(v.size());
      v.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
    }
    return k;
  };

  std::vector<Triangle> t;
  for (int j = 0; j < g; ++j)
    for (int i = 0; i < g; ++i) {
      if (!inside(i, j)) continue;
      const int a = vertex(i, j), b = vertex(i + 1, j), c = vertex(i + 1, j + 1), d = vertex(i, j + 1);
      t.push_back({a, b, c});
      t.push_back({a, c, d});
    }
  return TriMesh(std::move(v), std::move(t));
}

// --- validation --------------------------------------------------------------

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::IndexOutOfRange: return "index_out_of_range";
    case ViolationKind::Orientation: return "orientation";
    case ViolationKind::Conformity: return "conformity";
    case ViolationKind::BoundaryMismatch: return "boundary_mismatch";
    case ViolationKind::OpenBoundary: return "open_boundary";
    case ViolationKind::Disconnected: return "disconnected";
    case ViolationKind::AreaMismatch: return "area_mismatch";
    case ViolationKind::UnusedVertex: return "unused_vertex";
  }
  return "unknown";
}

bool MeshValidation::has(ViolationKind kind) const noexcept {
  return std::any_of(violations.begin(), violations.end(),
                     [kind](const Violation& v) { return v.kind == kind; });
}

bool is_edge_connected(const TriMesh& mesh) {
  const auto& tris = mesh.triangles();
  if (tris.empty()) return false;
  std::map<EdgeKey, std::vector<int>> owners;
  for (int e = 0; e < static_cast<int>(tris.size()); ++e)
    for (int k = 0; k < 3; ++k) owners[undirected(tris[e][k], tris[e][(k + 1) % 3])].push_back(e);

  std::vector<bool> seen(tris.size(), false);
  std::vector<int> stack{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const int e = stack.back();
    stack.pop_back();
    for (int k = 0; k < 3; ++k)
      for (int nb : owners[undirected(tris[e][k], tris[e][(k + 1) % 3])])
        if (!seen[nb]) {
          seen[nb] = true;
          ++reached;
          stack.push_back(nb);
        }
  }
  return reached == tris.size();
}

MeshValidation validate_mesh(const TriMesh& mesh) {
  MeshValidation report;
  auto add = [&report](ViolationKind kind, std::vector<int> elems, std::string msg) {
    if (!report.has(kind)) report.violations.push_back({kind, std::move(elems), std::move(msg)});
  };

  const auto& verts = mesh.vertices();
  const auto& tris = mesh.triangles();
  const int nv = static_cast<int>(verts.size());

  for (int e = 0; e < static_cast<int>(tris.size()); ++e)
    for (int i : tris[e])
      if (i < 0 || i >= nv) add(ViolationKind::IndexOutOfRange, {e}, "triangle references missing vertex");
  for (const auto& be : mesh.boundary_edges())
    if (be.a < 0 || be.a >= nv || be.b < 0 || be.b >= nv)
      add(ViolationKind::IndexOutOfRange, {be.a, be.b}, "boundary edge references missing vertex");
  if (report.has(ViolationKind::IndexOutOfRange)) return report;

  if (tris.empty()) {
    add(ViolationKind::AreaMismatch, {}, "mesh has no triangles");
    return report;
  }

  for (int e = 0; e < static_cast<int>(tris.size()); ++e)
    if (!(mesh.element_areas()[e] > 0.0)) {
      add(ViolationKind::Orientation, {e}, "element area is not positive (clockwise or degenerate)");
      break;
    }

  // Conformity: an edge is shared by at most two triangles, with opposite
  // orientations, and no two vertices coincide.
  std::map<EdgeKey, std::vector<std::pair<int, bool>>> owners;  // (element, a<b direction)
  for (int e = 0; e < static_cast<int>(tris.size()); ++e)
    for (int k = 0; k < 3; ++k) {
      const int a = tris[e][k], b = tris[e][(k + 1) % 3];
      owners[undirected(a, b)].push_back({e, a < b});
    }
  for (const auto& [key, list] : owners) {
    if (list.size() > 2) {
      add(ViolationKind::Conformity, {list[0].first, list[1].first, list[2].first},
          "edge shared by more than two triangles");
    } else if (list.size() == 2 && list[0].second == list[1].second) {
      add(ViolationKind::Conformity, {list[0].first, list[1].first},
          "edge traversed in the same direction by both neighbours");
    }
  }
  {
    std::vector<int> order(nv);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&verts](int a, int b) {
      return verts[a].x != verts[b].x ? verts[a].x < verts[b].x : verts[a].y < verts[b].y;
    });
    for (int i = 1; i < nv; ++i) {
      const Point& p = verts[order[i - 1]];
      const Point& q = verts[order[i]];
      if (p.x == q.x && p.y == q.y) {
        add(ViolationKind::Conformity, {order[i - 1], order[i]}, "duplicated vertex coordinates");
        break;
      }
    }
  }

  // Boundary edges are exactly the edges used once, in triangle orientation.
  std::map<EdgeKey, int> listed;
  for (const auto& be : mesh.boundary_edges()) {
    if (++listed[{be.a, be.b}] > 1)
      add(ViolationKind::BoundaryMismatch, {be.a, be.b}, "boundary edge listed twice");
  }
  for (const auto& [key, list] : owners) {
    if (list.size() != 1) continue;
    const auto& t = tris[list[0].first];
    EdgeKey directed;
    for (int k = 0; k < 3; ++k)
      if (undirected(t[k], t[(k + 1) % 3]) == key) directed = {t[k], t[(k + 1) % 3]};
    if (listed.find(directed) == listed.end())
      add(ViolationKind::BoundaryMismatch, {list[0].first},
          "edge used by one triangle is not a (correctly oriented) boundary edge");
  }
  for (const auto& [key, cnt] : listed) {
    auto it = owners.find(undirected(key.first, key.second));
    if (it == owners.end() || it->second.size() != 1)
      add(ViolationKind::BoundaryMismatch, {key.first, key.second},
          "listed boundary edge is not used by exactly one triangle");
  }

  // Closed loops: in-degree equals out-degree at every vertex.
  {
    std::vector<int> balance(nv, 0);
    for (const auto& be : mesh.boundary_edges()) {
      ++balance[be.a];
      --balance[be.b];
    }
    for (int i = 0; i < nv; ++i)
      if (balance[i] != 0) {
        add(ViolationKind::OpenBoundary, {i}, "boundary edges do not close at vertex");
        break;
      }
    if (mesh.boundary_edges().empty())
      add(ViolationKind::OpenBoundary, {}, "mesh has no boundary");
  }

  if (!is_edge_connected(mesh))
    add(ViolationKind::Disconnected, {}, "triangles are not edge-connected");

  {
    double sum = 0.0;
    for (double a : mesh.element_areas()) sum += a;
    if (sum != mesh.total_area() || !(sum > 0.0))
      add(ViolationKind::AreaMismatch, {}, "stored total area differs from element sum");
  }

  {
    std::vector<bool> used(nv, false);
    for (const auto& t : tris)
      for (int i : t) used[i] = true;
    for (int i = 0; i < nv; ++i)
      if (!used[i]) {
        add(ViolationKind::UnusedVertex, {i}, "vertex not referenced by any triangle");
        break;
      }
  }
  return report;
}

// --- text format -----------------------------------------------------------

void write_mesh(std::ostream& os, const TriMesh& mesh) {
  char buf[128];
  os << "mesh2d v1\n";
  for (const auto& p : mesh.vertices()) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g\n", p.x, p.y);
    os << buf;
  }
  for (const auto& t : mesh.triangles()) os << "t " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (const auto& e : mesh.boundary_edges()) os << "b " << e.a << ' ' << e.b << '\n';
}

TriMesh read_mesh(std::istream& is) {
  std::string line;
  int lineno = 0;
  bool header = false;
  std::vector<Point> v;
  std::vector<Triangle> t;
  std::vector<std::array<int, 2>> b;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "mesh2d v1")
        throw MeshFormatError("line " + std::to_string(lineno) + ": expected header 'mesh2d v1'");
      header = true;
      continue;
    }
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    bool ok = true;
    if (tag == "v") {
      std::string xs, ys;
      ok = static_cast<bool>(ls >> xs >> ys);
      if (ok) {
        char* end = nullptr;
        const double x = std::strtod(xs.c_str(), &end);
        ok = *end == '\0';
        const double y = std::strtod(ys.c_str(), &end);
        ok = ok && *end == '\0';
        v.push_back({x, y});
      }
    } else if (tag == "t") {
      Triangle tri;
      ok = static_cast<bool>(ls >> tri[0] >> tri[1] >> tri[2]);
      t.push_back(tri);
    } else if (tag == "b") {
      std::array<int, 2> e;
      ok = static_cast<bool>(ls >> e[0] >> e[1]);
      b.push_back(e);
    } else {
      ok = false;
    }
    std::string extra;
    if (!ok || (ls >> extra)) throw MeshFormatError("line " + std::to_string(lineno) + ": malformed record");
  }
  if (!header) throw MeshFormatError("missing header 'mesh2d v1'");
  return TriMesh(std::move(v), std::move(t), std::move(b));
}

void write_mesh_file(const std::string& path, const TriMesh& mesh) {
  std::ofstream os(path);
  if (!os) throw MeshFormatError("cannot open " + path + " for writing");
  write_mesh(os, mesh);
}

TriMesh read_mesh_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw MeshFormatError("cannot open " + path);
  return read_mesh(is);
}

// --- point location ----------------------------------------------------------

PointLocator::PointLocator(const TriMesh& mesh) : mesh_(&mesh), box_(mesh.bounding_box()) {
  const auto n = static_cast<double>(std::max<std::size_t>(1, mesh.num_triangles()));
  const int side = std::max(1, static_cast<int>(std::sqrt(n / 2.0)));
  bins_x_ = side;
  bins_y_ = side;
  bins_.assign(static_cast<std::size_t>(bins_x_) * bins_y_, {});
  const double w = std::max(box_[2] - box_[0], 1e-300);
  const double h = std::max(box_[3] - box_[1], 1e-300);
  auto bx = [&](double x) { return std::clamp(static_cast<int>((x - box_[0]) / w * bins_x_), 0, bins_x_ - 1); };
  auto by = [&](double y) { return std::clamp(static_cast<int>((y - box_[1]) / h * bins_y_), 0, bins_y_ - 1); };
  const auto& verts = mesh.vertices();
  for (int e = 0; e < static_cast<int>(mesh.num_triangles()); ++e) {
    const auto& t = mesh.triangles()[e];
    double x0 = verts[t[0]].x, x1 = x0, y0 = verts[t[0]].y, y1 = y0;
    for (int k = 1; k < 3; ++k) {
      x0 = std::min(x0, verts[t[k]].x);
      x1 = std::max(x1, verts[t[k]].x);
      y0 = std::min(y0, verts[t[k]].y);
      y1 = std::max(y1, verts[t[k]].y);
    }
    for (int j = by(y0); j <= by(y1); ++j)
      for (int i = bx(x0); i <= bx(x1); ++i) bins_[static_cast<std::size_t>(j) * bins_x_ + i].push_back(e);
  }
}

std::array<double, 3> PointLocator::barycentric(int e, const Point& p) const {
  const auto& t = mesh_->triangles()[e];
  const auto& v = mesh_->vertices();
  const double area = signed_area(v[t[0]], v[t[1]], v[t[2]]);
  return {signed_area(p, v[t[1]], v[t[2]]) / area, signed_area(v[t[0]], p, v[t[2]]) / area,
          signed_area(v[t[0]], v[t[1]], p) / area};
}

int PointLocator::locate(const Point& p) const {
  const double w = std::max(box_[2] - box_[0], 1e-300);
  const double h = std::max(box_[3] - box_[1], 1e-300);
  const int i = std::clamp(static_cast<int>((p.x - box_[0]) / w * bins_x_), 0, bins_x_ - 1);
  const int j = std::clamp(static_cast<int>((p.y - box_[1]) / h * bins_y_), 0, bins_y_ - 1);

  int best = -1;
  double best_score = -std::numeric_limits<double>::infinity();
  auto consider = [&](int e) {
    const auto l = barycentric(e, p);
    const double score = std::min({l[0], l[1], l[2]});
    if (score > best_score) {
      best_score = score;
      best = e;
    }
  };
  for (int e : bins_[static_cast<std::size_t>(j) * bins_x_ + i]) consider(e);
  if (best_score >= -1e-10) return best;
  for (int e = 0; e < static_cast<int>(mesh_->num_triangles()); ++e) consider(e);
  return best;
}

} // namespace stampacchia
