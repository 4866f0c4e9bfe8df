#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dmpfem/assembly.hpp"
#include "dmpfem/mesh.hpp"

namespace dmpfem {

/// Scalar conservation law du/dt + div(v(x, u) u) = g with inflow data.
struct ProblemSpec {
  std::string name;
  Rectangle domain;
  VelocityModel velocity;
  double beta_bound = 1.0;  ///< sup |v| over admissible states
  std::function<double(Point2, double)> inflow;
  std::function<double(Point2)> initial;
  std::optional<std::function<double(Point2)>> exact;
  std::function<double(Point2, double)> forcing;  ///< empty means g = 0
  /// Explicit Dirichlet boundary set; when empty it is {v . n < 0} at t = 0.
  std::function<bool(Point2)> dirichlet_boundary;
  bool transient = false;
  double dt = 0.0;     ///< default step of transient runs
  double t_end = 0.0;  ///< default final time of transient runs
};

/// Catalog lookup. Throws std::invalid_argument listing the valid names.
ProblemSpec make_problem(const std::string& name);
const std::vector<std::string>& problem_names();

/// Per boundary edge (order of mesh.boundary_edges()): 1 on the inflow part.
/// With a state-dependent velocity the inflow is taken at the initial data.
std::vector<char> inflow_edges(const Mesh2D& mesh, const ProblemSpec& spec);
/// Nodes of inflow edges; these carry Dirichlet data.
std::vector<char> dirichlet_nodes(const Mesh2D& mesh, const ProblemSpec& spec);

}  // namespace dmpfem
