#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "dmpfem/mesh.hpp"
#include "dmpfem/problem.hpp"
#include "dmpfem/solvers.hpp"
#include "dmpfem/sparse.hpp"
#include "dmpfem/timeloop.hpp"

namespace dmpfem {

enum class Region { Omega, Outflow };

struct ErrorNorms {
  double l1 = 0.0;
  double l2 = 0.0;
};

/// ||u_h - exact|| in L1 and L2 over the domain (n x n Gauss per element) or
/// over the boundary edges with outflow[e] != 0 (3-point Gauss per edge).
ErrorNorms error_norms(const Mesh2D& mesh, std::span<const double> u,
                       const std::function<double(Point2)>& exact, Region region,
                       const std::vector<char>& outflow = {}, int points_per_direction = 6);

/// Same, for a discretized problem; throws std::invalid_argument when the
/// problem has no exact solution.
ErrorNorms error_norms(const Discretization& disc, std::span<const double> u, Region region);

/// Area of the domain or length of the outflow boundary.
double region_measure(const Mesh2D& mesh, Region region, const std::vector<char>& outflow = {});

/// Complement of inflow_edges().
std::vector<char> outflow_edges(const Mesh2D& mesh, const ProblemSpec& spec);

struct ConvergenceRow {
  int n = 0;
  double h = 0.0;
  double l2 = 0.0;
  double eoc = 0.0;  ///< NaN on the first row or when an error is at round-off level
  SolverReport report;
};

/// Steady runs on n x n meshes of the problem domain. `cfg_for_h` supplies the
/// configuration for each mesh size h = 1/n.
std::vector<ConvergenceRow> convergence_study(const ProblemSpec& spec, ElementKind kind,
                                              const std::vector<int>& sizes,
                                              const std::function<TimeConfig(double)>& cfg_for_h);

/// Positive parts of max(u) - upper and lower - min(u).
std::pair<double, double> dmp_audit(std::span<const double> u, const AdmissibleBounds& bounds);

/// Nodes i (skipping boundary nodes and those with skip[i] != 0) with u_i
/// outside [min, max] of u over N_i \ {i} by more than tol.
std::vector<int> local_dmp_audit(const Mesh2D& mesh, std::span<const double> u, double tol = 1e-10,
                                 const std::vector<char>& skip = {});

/// sum_i sum_{j != i} nu_ij (u_i - u_j)^2, i.e. 2 <B u, u> for symmetric nu.
double dissipation(const Mesh2D& mesh, const SparseOperator& nu, std::span<const double> u);

}  // namespace dmpfem
