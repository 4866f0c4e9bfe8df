#include "dmpfem/mesh.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>

namespace dmpfem {

namespace {

constexpr double kGeomTol = 1e-10;

// Ray x + t d (t > 0) against segment a + s (b - a), s in [0, 1].
std::optional<std::pair<double, double>> intersect_ray_segment(Point2 x, Point2 d, Point2 a,
                                                               Point2 b) {
  const Point2 e = b - a;
  const double denom = cross(d, e);
  const double scale = norm(d) * norm(e);
  if (std::abs(denom) <= kGeomTol * scale) return std::nullopt;  // parallel
  const Point2 w = a - x;
  const double t = cross(w, e) / denom;
  const double s = cross(w, d) / denom;
  if (t <= kGeomTol || s < -kGeomTol || s > 1.0 + kGeomTol) return std::nullopt;
  return std::make_pair(t, std::clamp(s, 0.0, 1.0));
}

}  // namespace

Mesh2D::Mesh2D(std::vector<Point2> nodes, std::vector<int> elements, ElementKind kind)
    : kind_(kind), nodes_(std::move(nodes)), elements_(std::move(elements)) {
  const auto npe = static_cast<std::size_t>(nodes_per_element());
  if (nodes_.empty() || elements_.empty() || elements_.size() % npe != 0) {
    throw std::invalid_argument("Mesh2D: empty mesh or element list not a multiple of " +
                                std::to_string(npe));
  }
  for (int n : elements_) {
    if (n < 0 || static_cast<std::size_t>(n) >= nodes_.size()) {
      throw std::invalid_argument("Mesh2D: element references node " + std::to_string(n) +
                                  " out of range");
    }
  }
  for (std::size_t e = 0; e < num_elements(); ++e) {
    if (element_area(static_cast<int>(e)) <= 0.0) {
      throw std::invalid_argument("Mesh2D: element " + std::to_string(e) +
                                  " is degenerate or clockwise");
    }
  }
  build_topology();
  build_symmetric_points();
}

Mesh2D Mesh2D::structured(int nx, int ny, const Rectangle& domain, ElementKind kind) {
  if (nx < 1 || ny < 1) {
    throw std::invalid_argument("Mesh2D::structured: nx and ny must be >= 1");
  }
  if (!(domain.x1 > domain.x0) || !(domain.y1 > domain.y0)) {
    throw std::invalid_argument("Mesh2D::structured: empty domain");
  }
  std::vector<Point2> nodes;
  nodes.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
  const double hx = (domain.x1 - domain.x0) / nx;
  const double hy = (domain.y1 - domain.y0) / ny;
  for (int iy = 0; iy <= ny; ++iy) {
    for (int ix = 0; ix <= nx; ++ix) {
      // Pin the last row/column to the exact domain edge.
      const double x = ix == nx ? domain.x1 : domain.x0 + ix * hx;
      const double y = iy == ny ? domain.y1 : domain.y0 + iy * hy;
      nodes.push_back({x, y});
    }
  }
  auto id = [nx](int ix, int iy) { return iy * (nx + 1) + ix; };
  std::vector<int> elements;
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const int ll = id(ix, iy), lr = id(ix + 1, iy), ur = id(ix + 1, iy + 1), ul = id(ix, iy + 1);
      if (kind == ElementKind::Q1) {
        elements.insert(elements.end(), {ll, lr, ur, ul});
      } else {
        // Diagonal from lower-left to upper-right.
        elements.insert(elements.end(), {ll, lr, ur, ll, ur, ul});
      }
    }
  }
  return Mesh2D(std::move(nodes), std::move(elements), kind);
}

double Mesh2D::element_area(int e) const {
  const auto en = element(e);
  double twice = 0.0;
  for (std::size_t k = 0; k < en.size(); ++k) {
    twice += cross(nodes_[en[k]], nodes_[en[(k + 1) % en.size()]]);
  }
  return 0.5 * twice;
}

Rectangle Mesh2D::bounding_box() const {
  Rectangle box{std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest(),
                std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest()};
  for (const auto& p : nodes_) {
    box.x0 = std::min(box.x0, p.x);
    box.x1 = std::max(box.x1, p.x);
    box.y0 = std::min(box.y0, p.y);
    box.y1 = std::max(box.y1, p.y);
  }
  return box;
}

int Mesh2D::neighbor_slot(int i, int j) const {
  const auto nb = neighbors(i);
  const auto it = std::lower_bound(nb.begin(), nb.end(), j);
  if (it == nb.end() || *it != j) return -1;
  return static_cast<int>(it - nb.begin());
}

const SymmetricPoint& Mesh2D::symmetric_of(int i, int j) const {
  const int slot = neighbor_slot(i, j);
  if (slot < 0 || i == j) {
    throw std::invalid_argument("Mesh2D::symmetric_of: node " + std::to_string(j) +
                                " is not a neighbour of " + std::to_string(i));
  }
  return symmetric(i, slot);
}

void Mesh2D::build_topology() {
  const std::size_t n = nodes_.size();
  const int npe = nodes_per_element();
  const std::size_t ne = num_elements();

  std::vector<std::vector<int>> elems_of(n);
  std::vector<std::vector<int>> nbrs(n);
  for (std::size_t e = 0; e < ne; ++e) {
    const auto en = element(static_cast<int>(e));
    for (int a : en) {
      elems_of[a].push_back(static_cast<int>(e));
      nbrs[a].insert(nbrs[a].end(), en.begin(), en.end());
    }
  }
  nbr_offsets_.assign(n + 1, 0);
  node_element_offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    auto& nb = nbrs[i];
    nb.push_back(static_cast<int>(i));  // isolated nodes still see themselves
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    nbr_offsets_[i + 1] = nbr_offsets_[i] + nb.size();
    nbr_.insert(nbr_.end(), nb.begin(), nb.end());
    node_element_offsets_[i + 1] = node_element_offsets_[i] + elems_of[i].size();
    node_elements_.insert(node_elements_.end(), elems_of[i].begin(), elems_of[i].end());
  }

  // Edges owned by a single element form the boundary.
  std::map<std::pair<int, int>, std::pair<int, int>> edge_count;  // key -> (count, element)
  double total_len = 0.0;
  for (std::size_t e = 0; e < ne; ++e) {
    const auto en = element(static_cast<int>(e));
    for (int k = 0; k < npe; ++k) {
      const int a = en[k], b = en[(k + 1) % npe];
      auto key = std::minmax(a, b);
      auto [it, inserted] = edge_count.try_emplace({key.first, key.second}, 0, static_cast<int>(e));
      if (inserted) total_len += norm(nodes_[b] - nodes_[a]);
      ++it->second.first;
    }
  }
  mean_edge_length_ = total_len / static_cast<double>(edge_count.size());

  boundary_.assign(n, 0);
  for (std::size_t e = 0; e < ne; ++e) {
    const auto en = element(static_cast<int>(e));
    for (int k = 0; k < npe; ++k) {
      const int a = en[k], b = en[(k + 1) % npe];
      auto key = std::minmax(a, b);
      if (edge_count.at({key.first, key.second}).first != 1) continue;
      const Point2 t = nodes_[b] - nodes_[a];
      const double len = norm(t);
      // Counter-clockwise elements: outward normal is the tangent rotated clockwise.
      boundary_edges_.push_back({a, b, static_cast<int>(e), {t.y / len, -t.x / len}, len});
      boundary_[a] = boundary_[b] = 1;
    }
  }

  area_ = 0.0;
  for (std::size_t e = 0; e < ne; ++e) area_ += element_area(static_cast<int>(e));
}

void Mesh2D::build_symmetric_points() {
  const int npe = nodes_per_element();
  sym_.assign(nbr_.size(), SymmetricPoint{});
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Point2 xi = nodes_[i];
    const auto nb = neighbors(static_cast<int>(i));
    for (std::size_t slot = 0; slot < nb.size(); ++slot) {
      const int j = nb[slot];
      if (j == static_cast<int>(i)) continue;
      const Point2 dir = xi - nodes_[j];
      double best_t = std::numeric_limits<double>::max();
      SymmetricPoint best;
      // elements_of(i) is sorted, so ties keep the lowest element index.
      for (int e : elements_of(static_cast<int>(i))) {
        const auto en = element(e);
        for (int k = 0; k < npe; ++k) {
          const int a = en[k], b = en[(k + 1) % npe];
          if (a == static_cast<int>(i) || b == static_cast<int>(i)) continue;
          const auto hit = intersect_ray_segment(xi, dir, nodes_[a], nodes_[b]);
          if (!hit || hit->first >= best_t - kGeomTol) continue;
          best_t = hit->first;
          const double s = hit->second;
          best = SymmetricPoint{};
          best.element = e;
          best.point = xi + best_t * dir;
          if (s <= kGeomTol) {
            best.kind = SymmetricPoint::Kind::Node;
            best.node = a;
          } else if (s >= 1.0 - kGeomTol) {
            best.kind = SymmetricPoint::Kind::Node;
            best.node = b;
          } else {
            best.kind = SymmetricPoint::Kind::EdgePoint;
            best.edge_a = a;
            best.edge_b = b;
            best.weight = s;
          }
          if (best.kind == SymmetricPoint::Kind::Node) best.point = nodes_[best.node];
          best.distance = norm(best.point - xi);
        }
      }
      sym_[nbr_offsets_[i] + slot] = best;
    }
  }
}

std::optional<double> symmetric_value(const Mesh2D& mesh, std::span<const double> u, int i, int j) {
  if (i == j) throw std::invalid_argument("symmetric_value: j must differ from i");
  const SymmetricPoint& s = mesh.symmetric_of(i, j);
  switch (s.kind) {
    case SymmetricPoint::Kind::Node:
      return u[s.node];
    case SymmetricPoint::Kind::EdgePoint:
      return (1.0 - s.weight) * u[s.edge_a] + s.weight * u[s.edge_b];
    case SymmetricPoint::Kind::Absent:
      break;
  }
  return std::nullopt;
}

}  // namespace dmpfem
