#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace dmpfem {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }

/// Axis-aligned rectangle [x0,x1] x [y0,y1].
struct Rectangle {
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;

  double area() const { return (x1 - x0) * (y1 - y0); }
  double diameter() const { return std::hypot(x1 - x0, y1 - y0); }
};

enum class ElementKind { P1, Q1 };

/// Where the ray from x_i away from x_j leaves the macroelement of node i.
///
/// On symmetric meshes the exit point is a mesh node (`Node`). Otherwise it
/// lies inside an edge of the patch boundary, on which every P1/Q1 function is
/// linear, so the value there is `(1 - weight) * u[edge_a] + weight * u[edge_b]`.
/// `Absent` marks boundary nodes whose reflected direction leaves the domain.
struct SymmetricPoint {
  enum class Kind { Absent, Node, EdgePoint };

  Kind kind = Kind::Absent;
  int node = -1;
  int element = -1;
  int edge_a = -1;
  int edge_b = -1;
  double weight = 0.0;
  Point2 point{};
  double distance = 0.0;  // |r_ij^sym|
};

struct BoundaryEdge {
  int a = -1;
  int b = -1;
  int element = -1;
  Point2 normal{};  // outward unit normal
  double length = 0.0;
};

/// Conforming 2D P1/Q1 mesh with node neighbourhoods and symmetric-point data.
/// Immutable after construction.
class Mesh2D {
 public:
  /// `elements` holds 3 (P1) or 4 (Q1, counter-clockwise) node indices per
  /// element, flattened.
  Mesh2D(std::vector<Point2> nodes, std::vector<int> elements, ElementKind kind);

  static Mesh2D structured(int nx, int ny, const Rectangle& domain, ElementKind kind);

  ElementKind kind() const { return kind_; }
  int nodes_per_element() const { return kind_ == ElementKind::P1 ? 3 : 4; }
  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_elements() const { return elements_.size() / nodes_per_element(); }

  Point2 node(int i) const { return nodes_[i]; }
  const std::vector<Point2>& nodes() const { return nodes_; }
  std::span<const int> element(int e) const {
    return {elements_.data() + static_cast<std::size_t>(e) * nodes_per_element(),
            static_cast<std::size_t>(nodes_per_element())};
  }

  /// Sorted node neighbourhood N_i, including i itself.
  std::span<const int> neighbors(int i) const {
    return {nbr_.data() + nbr_offsets_[i], nbr_offsets_[i + 1] - nbr_offsets_[i]};
  }
  /// Position of j inside neighbors(i), or -1.
  int neighbor_slot(int i, int j) const;

  std::span<const int> elements_of(int i) const {
    return {node_elements_.data() + node_element_offsets_[i],
            node_element_offsets_[i + 1] - node_element_offsets_[i]};
  }

  /// Symmetric-point record for the pair (i, neighbors(i)[slot]).
  const SymmetricPoint& symmetric(int i, int slot) const { return sym_[nbr_offsets_[i] + slot]; }
  /// Same, looked up by neighbour index; throws if j is not a neighbour of i.
  const SymmetricPoint& symmetric_of(int i, int j) const;

  bool is_boundary(int i) const { return boundary_[i] != 0; }
  const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_edges_; }

  double area() const { return area_; }
  double element_area(int e) const;
  /// Mean length of the element edges.
  double mean_edge_length() const { return mean_edge_length_; }
  /// Bounding box of the nodes.
  Rectangle bounding_box() const;

 private:
  void build_topology();
  void build_symmetric_points();

  ElementKind kind_;
  std::vector<Point2> nodes_;
  std::vector<int> elements_;

  std::vector<std::size_t> nbr_offsets_;
  std::vector<int> nbr_;
  std::vector<std::size_t> node_element_offsets_;
  std::vector<int> node_elements_;
  std::vector<SymmetricPoint> sym_;
  std::vector<char> boundary_;
  std::vector<BoundaryEdge> boundary_edges_;
  double area_ = 0.0;
  double mean_edge_length_ = 0.0;
};

/// u_h at the symmetric point of j with respect to i; nullopt when the point is
/// absent (boundary). Throws std::invalid_argument if j is not a neighbour of i
/// or j == i.
std::optional<double> symmetric_value(const Mesh2D& mesh, std::span<const double> u, int i, int j);

}  // namespace dmpfem
