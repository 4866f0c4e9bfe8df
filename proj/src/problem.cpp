#include "dmpfem/problem.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dmpfem {

namespace {

constexpr double kTouch = 1e-12;  // coordinate tolerance for boundary tests

ProblemSpec steady_parabolic() {
  ProblemSpec p;
  p.name = "STEADY_PARABOLIC";
  p.domain = {0.0, 1.0, 0.0, 1.0};
  p.velocity = VelocityModel::constant({1.0, 0.0});
  p.beta_bound = 1.0;
  p.inflow = [](Point2 x, double) { return x.y - x.y * x.y; };
  p.exact = [](Point2 x) { return x.y - x.y * x.y; };
  p.dirichlet_boundary = [](Point2 x) { return x.x < 1.0 - kTouch; };
  return p;
}

ProblemSpec straight_discontinuity() {
  const double s = std::sin(-std::numbers::pi / 3.0);
  ProblemSpec p;
  p.name = "STRAIGHT_DISCONTINUITY";
  p.domain = {0.0, 1.0, 0.0, 1.0};
  p.velocity = VelocityModel::constant({0.5, s});
  p.beta_bound = 1.0;
  p.inflow = [](Point2 x, double) {
    const bool left = x.x < kTouch && x.y > 0.7;
    const bool top = x.y > 1.0 - kTouch;
    return (left || top) ? 1.0 : 0.0;
  };
  p.exact = [s](Point2 x) { return x.y > 0.7 + 2.0 * x.x * s ? 1.0 : 0.0; };
  return p;
}

double ring(Point2 x) {
  const double r = std::hypot(x.x, x.y);
  return (r > 0.35 && r < 0.65) ? 1.0 : 0.0;
}

ProblemSpec circular_convection() {
  ProblemSpec p;
  p.name = "CIRCULAR_CONVECTION";
  p.domain = {0.0, 1.0, -1.0, 1.0};
  p.velocity = VelocityModel::field([](Point2 x) { return Point2{x.y, -x.x}; });
  p.beta_bound = std::sqrt(2.0);
  p.inflow = [](Point2 x, double) { return ring(x); };
  p.exact = ring;
  return p;
}

double three_bodies(Point2 x) {
  const double hump = std::hypot(x.x - 0.25, x.y - 0.5) / 0.15;
  if (hump <= 1.0) return 0.25 + 0.25 * std::cos(std::numbers::pi * hump);
  const double cone = std::hypot(x.x - 0.5, x.y - 0.25) / 0.15;
  if (cone <= 1.0) return 1.0 - cone;
  const double disk = std::hypot(x.x - 0.5, x.y - 0.75) / 0.15;
  if (disk <= 1.0) {
    const bool slot = x.x > 0.45 && x.x < 0.55 && x.y < 0.85;
    return slot ? 0.0 : 1.0;
  }
  return 0.0;
}

ProblemSpec three_body_rotation() {
  ProblemSpec p;
  p.name = "THREE_BODY_ROTATION";
  p.domain = {0.0, 1.0, 0.0, 1.0};
  p.velocity = VelocityModel::field([](Point2 x) { return Point2{0.5 - x.y, x.x - 0.5}; });
  p.beta_bound = std::sqrt(0.5);
  p.inflow = [](Point2, double) { return 0.0; };
  p.initial = three_bodies;
  p.transient = true;
  p.dt = 1e-3;
  p.t_end = 2.0 * std::numbers::pi;
  return p;
}

double burgers_quadrants(Point2 x) {
  if (x.y > 0.5) return x.x < 0.5 ? -0.2 : -1.0;
  return x.x < 0.5 ? 0.5 : 0.8;
}

ProblemSpec burgers2d() {
  ProblemSpec p;
  p.name = "BURGERS2D";
  p.domain = {0.0, 1.0, 0.0, 1.0};
  p.velocity = VelocityModel::burgers({1.0, 1.0});
  p.beta_bound = std::sqrt(2.0) / 2.0;
  p.inflow = [](Point2 x, double) { return burgers_quadrants(x); };
  p.initial = burgers_quadrants;
  p.transient = true;
  p.dt = 1e-2;
  p.t_end = 0.5;
  return p;
}

}  // namespace

const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names{"STEADY_PARABOLIC", "STRAIGHT_DISCONTINUITY",
                                              "CIRCULAR_CONVECTION", "THREE_BODY_ROTATION",
                                              "BURGERS2D"};
  return names;
}

ProblemSpec make_problem(const std::string& name) {
  if (name == "STEADY_PARABOLIC") return steady_parabolic();
  if (name == "STRAIGHT_DISCONTINUITY") return straight_discontinuity();
  if (name == "CIRCULAR_CONVECTION") return circular_convection();
  if (name == "THREE_BODY_ROTATION") return three_body_rotation();
  if (name == "BURGERS2D") return burgers2d();
  std::string valid;
  for (const auto& n : problem_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw std::invalid_argument("unknown problem '" + name + "'; valid names: " + valid);
}

std::vector<char> inflow_edges(const Mesh2D& mesh, const ProblemSpec& spec) {
  const auto& edges = mesh.boundary_edges();
  std::vector<char> inflow(edges.size(), 0);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Point2 mid = 0.5 * (mesh.node(edges[e].a) + mesh.node(edges[e].b));
    if (spec.dirichlet_boundary) {
      inflow[e] = spec.dirichlet_boundary(mid) ? 1 : 0;
      continue;
    }
    const double w = spec.initial ? spec.initial(mid) : spec.inflow(mid, 0.0);
    inflow[e] = dot(spec.velocity.group_velocity(mid, w), edges[e].normal) < -kTouch ? 1 : 0;
  }
  return inflow;
}

std::vector<char> dirichlet_nodes(const Mesh2D& mesh, const ProblemSpec& spec) {
  std::vector<char> d(mesh.num_nodes(), 0);
  const auto& edges = mesh.boundary_edges();
  const auto inflow = inflow_edges(mesh, spec);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!inflow[e]) continue;
    d[edges[e].a] = 1;
    d[edges[e].b] = 1;
  }
  return d;
}

}  // namespace dmpfem
