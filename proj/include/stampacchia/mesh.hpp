#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace stampacchia {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

using Triangle = std::array<int, 3>;

struct BoundaryEdge {
  int a = 0;
  int b = 0;
  Point normal;  ///< outward unit normal
  double length = 0.0;
};

/// Conforming triangulation of a polygonal 2D domain.
///
/// Immutable after construction. Element areas are signed-checked by
/// `validate_mesh`, not by the constructor, so that malformed meshes can be
/// loaded and inspected.
class TriMesh {
public:
  TriMesh() = default;

  /// Boundary edges are derived from the triangles (edges used once, oriented
  /// as in their triangle) and chained into loops.
  TriMesh(std::vector<Point> vertices, std::vector<Triangle> triangles);

  TriMesh(std::vector<Point> vertices, std::vector<Triangle> triangles,
          std::vector<std::array<int, 2>> boundary_edges);

  const std::vector<Point>& vertices() const noexcept { return vertices_; }
  const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
  const std::vector<BoundaryEdge>& boundary_edges() const noexcept { return boundary_; }
  const std::vector<double>& element_areas() const noexcept { return areas_; }

  std::size_t num_vertices() const noexcept { return vertices_.size(); }
  std::size_t num_triangles() const noexcept { return triangles_.size(); }

  /// Sum of `element_areas()` in element order.
  double total_area() const noexcept { return total_area_; }

  double perimeter() const noexcept;

  Point centroid(std::size_t e) const;

  /// Number of distinct undirected edges.
  std::size_t num_edges() const;

  /// Bounding box as {xmin, ymin, xmax, ymax}.
  std::array<double, 4> bounding_box() const;

private:
  std::vector<Point> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<BoundaryEdge> boundary_;
  std::vector<double> areas_;
  double total_area_ = 0.0;
};

/// Signed area, positive for counter-clockwise vertex order.
double signed_area(const Point& a, const Point& b, const Point& c) noexcept;

TriMesh generate_rectangle(int nx, int ny, double width, double height);

/// Triangulation of {0 < x < 1, |y| < x^beta} with vertex abscissae
/// x_i = (i/n)^2. Each abscissa carries `vertical` + 1 equally spaced points
/// across the section (collapsed to the tip for beta > 0 at x = 0).
/// `vertical` = 0 selects max(2, n/2).
TriMesh generate_cusp(double beta, int n, int vertical = 0);

/// [0,2]^2 minus [1,2]^2 on a uniform grid of spacing 1/n.
TriMesh generate_lshape(int n);

enum class ViolationKind {
  IndexOutOfRange,
  Orientation,
  Conformity,
  BoundaryMismatch,
  OpenBoundary,
  Disconnected,
  AreaMismatch,
  UnusedVertex,
};

std::string to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::vector<int> elements;  ///< offending element (or vertex) indices
  std::string message;
};

struct MeshValidation {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
  bool has(ViolationKind kind) const noexcept;
};

/// Checks every TriMesh invariant; reports the first violation of each kind.
MeshValidation validate_mesh(const TriMesh& mesh);

/// True when every triangle can be reached from triangle 0 through shared
/// edges.
bool is_edge_connected(const TriMesh& mesh);

// Text format `mesh2d v1`.
void write_mesh(std::ostream& os, const TriMesh& mesh);
TriMesh read_mesh(std::istream& is);
void write_mesh_file(const std::string& path, const TriMesh& mesh);
TriMesh read_mesh_file(const std::string& path);

/// Point location: index of a triangle containing p (with a small relative
/// tolerance), or of the closest triangle centroid when p lies outside.
class PointLocator {
public:
  explicit PointLocator(const TriMesh& mesh);

  int locate(const Point& p) const;

  /// Barycentric coordinates of p with respect to triangle e.
  std::array<double, 3> barycentric(int e, const Point& p) const;

private:
  const TriMesh* mesh_;
  std::array<double, 4> box_;
  int bins_x_ = 1;
  int bins_y_ = 1;
  std::vector<std::vector<int>> bins_;
};

} // namespace stampacchia
