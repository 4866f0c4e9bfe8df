#include <doctest.h>

#include <numeric>

#include "support.hpp"

using namespace dmpfem;

TEST_CASE("structured Q1 mesh topology") {
  const Mesh2D mesh = Mesh2D::structured(2, 2, {0, 1, 0, 1}, ElementKind::Q1);
  CHECK(mesh.num_nodes() == 9);
  CHECK(mesh.num_elements() == 4);
  CHECK(mesh.area() == doctest::Approx(1.0));
  // Centre node sees the whole 3x3 block.
  CHECK(mesh.neighbors(4).size() == 9);
  CHECK(mesh.neighbors(0).size() == 4);
  CHECK_FALSE(mesh.is_boundary(4));
  CHECK(mesh.is_boundary(0));
  CHECK(mesh.boundary_edges().size() == 8);
  for (int i = 0; i < 9; ++i) {
    const auto n = mesh.neighbors(i);
    CHECK(std::is_sorted(n.begin(), n.end()));
    CHECK(std::find(n.begin(), n.end(), i) != n.end());
  }
}

TEST_CASE("symmetric points on a uniform mesh are nodes, absent past the boundary") {
  const Mesh2D mesh = Mesh2D::structured(2, 2, {0, 1, 0, 1}, ElementKind::Q1);
  const auto& s = mesh.symmetric_of(4, 5);
  CHECK(s.kind == SymmetricPoint::Kind::Node);
  CHECK(s.node == 3);
  CHECK(s.distance == doctest::Approx(0.5));
  CHECK(mesh.symmetric_of(4, 8).node == 0);
  CHECK(mesh.symmetric_of(3, 4).kind == SymmetricPoint::Kind::Absent);
}

TEST_CASE("symmetric point inside a patch edge is interpolated") {
  // 2x2 cells with the interior column at x = 0.3. The reflection of the
  // direction from the centre (0.3, 0.5) to (1, 1) exits the patch through the
  // left edge at y = 0.5 - 0.5 * 0.3 / 0.7.
  std::vector<Point2> nodes;
  for (double y : {0.0, 0.5, 1.0}) {
    for (double x : {0.0, 0.3, 1.0}) nodes.push_back({x, y});
  }
  const std::vector<int> elems{0, 1, 4, 3, 1, 2, 5, 4, 3, 4, 7, 6, 4, 5, 8, 7};
  const Mesh2D mesh(nodes, elems, ElementKind::Q1);
  const auto& s = mesh.symmetric_of(4, 8);
  REQUIRE(s.kind == SymmetricPoint::Kind::EdgePoint);
  const double t = 0.3 / 0.7;
  CHECK(s.point.x == doctest::Approx(0.0));
  CHECK(s.point.y == doctest::Approx(0.5 - 0.5 * t));
  CHECK(s.distance == doctest::Approx(t * std::hypot(0.7, 0.5)));
  // Q1 functions are linear on element edges, so affine data is reproduced.
  NodalField u(nodes.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = 1 + 2 * nodes[i].x + 3 * nodes[i].y;
  const auto v = symmetric_value(mesh, u, 4, 8);
  REQUIRE(v.has_value());
  CHECK(*v == doctest::Approx(1 + 3 * (0.5 - 0.5 * t)));
}

TEST_CASE("Q1 consistent mass entries") {
  const double h = 0.25;
  const Mesh2D mesh = Mesh2D::structured(1, 1, {0, h, 0, h}, ElementKind::Q1);
  const SparseOperator M = assemble_mass(mesh);
  CHECK(M(0, 0) == doctest::Approx(h * h / 9));
  CHECK(M(0, 1) == doctest::Approx(h * h / 18));
  CHECK(M(0, 2) == doctest::Approx(h * h / 18));
  CHECK(M(0, 3) == doctest::Approx(h * h / 36));
  const NodalField m = lumped_masses(mesh);
  for (double x : m) CHECK(x == doctest::Approx(h * h / 4));
}

TEST_CASE("P1 consistent mass entries") {
  // Single right triangle of area 1/2: M = A/12 (1 + delta_ij).
  const Mesh2D mesh({{0, 0}, {1, 0}, {0, 1}}, {0, 1, 2}, ElementKind::P1);
  const SparseOperator M = assemble_mass(mesh);
  CHECK(M(0, 0) == doctest::Approx(1.0 / 12));
  CHECK(M(1, 2) == doctest::Approx(1.0 / 24));
  CHECK(lumped_masses(mesh)[2] == doctest::Approx(1.0 / 6));
}

TEST_CASE("convection operator rows annihilate constants") {
  for (auto kind : {ElementKind::Q1, ElementKind::P1}) {
    const Mesh2D mesh = Mesh2D::structured(4, 3, {0, 1, 0, 1}, kind);
    const auto vel = VelocityModel::field([](Point2 x) { return Point2{0.5 - x.y, x.x - 0.5}; });
    const SparseOperator F = assemble_convection(mesh, vel, NodalField(mesh.num_nodes(), 0.0));
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) CHECK(F.row_sum(i) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("convection of a linear field matches the exact integral") {
  // F u = (v . grad u, phi_i); with v = (1, 0) and u = x this is m_i.
  const Mesh2D mesh = Mesh2D::structured(3, 3, {0, 1, 0, 1}, ElementKind::Q1);
  const auto vel = VelocityModel::constant({1.0, 0.0});
  const NodalField u = interpolate(mesh, [](Point2 x) { return x.x; });
  const SparseOperator F = assemble_convection(mesh, vel, u);
  const NodalField Fu = F.multiply(u);
  const NodalField m = lumped_masses(mesh);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(Fu[i] == doctest::Approx(m[i]));
}

TEST_CASE("Burgers group velocity is the flux derivative") {
  const auto vel = VelocityModel::burgers({1.0, 1.0});
  const Point2 a = vel.group_velocity({0.2, 0.3}, 0.8);
  CHECK(a.x == doctest::Approx(0.8));
  CHECK(a.y == doctest::Approx(0.8));
  const Point2 da = vel.group_velocity_derivative({0.2, 0.3}, 0.8);
  CHECK(da.x == doctest::Approx(1.0));
}

TEST_CASE("graph seminorm vanishes on constants") {
  const Mesh2D mesh = Mesh2D::structured(3, 3, {0, 1, 0, 1}, ElementKind::P1);
  CHECK(graph_seminorm(mesh, NodalField(mesh.num_nodes(), 2.5)) == 0.0);
}
