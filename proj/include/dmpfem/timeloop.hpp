#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dmpfem/assembly.hpp"
#include "dmpfem/problem.hpp"
#include "dmpfem/solvers.hpp"
#include "dmpfem/stabilization.hpp"

namespace dmpfem {

enum class SolverChoice { Anderson, Newton };

struct TimeConfig {
  double dt = 0.0;
  double t_end = 0.0;
  bool steady = true;
  SolverChoice solver = SolverChoice::Newton;
  StabParams stab;
  bool projection = false;
  bool freeze_mass_alpha = false;
  AndersonOptions anderson;
  NewtonOptions newton;
  void validate() const;
};

/// A problem bound to a mesh: quadrature, convection operator, boundary set.
/// Holds references to `mesh`, which must outlive it.
class Discretization {
 public:
  Discretization(const ProblemSpec& spec, const Mesh2D& mesh);
  Discretization(const Discretization&) = delete;
  Discretization& operator=(const Discretization&) = delete;

  const ProblemSpec& spec() const { return spec_; }
  const Mesh2D& mesh() const { return mesh_; }
  const ElementQuadrature& quadrature() const { return quad_; }
  const ConvectionOperator& convection() const { return conv_; }
  const std::vector<char>& dirichlet() const { return dirichlet_; }

  NodalField initial() const;
  /// uD at Dirichlet nodes, 0 elsewhere.
  NodalField dirichlet_values(double t) const;
  NodalField forcing(double t) const;
  /// Steady: extrema of the inflow data. Transient: of initial and inflow data.
  AdmissibleBounds bounds(bool steady) const;

 private:
  ProblemSpec spec_;
  const Mesh2D& mesh_;
  ElementQuadrature quad_;
  ConvectionOperator conv_;
  std::vector<char> dirichlet_;
};

/// Raised when a nonlinear solve aborts (singular system, non-finite values).
class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, int step) : std::runtime_error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// Solve the stabilized system with the configured solver.
std::pair<NodalField, SolverReport> solve_system(const StabilizedSystem& sys, NodalField guess,
                                                 const TimeConfig& cfg,
                                                 const AdmissibleBounds& bounds);

/// One backward Euler step from u_old at t_next - dt to t_next.
std::pair<NodalField, SolverReport> step_backward_euler(const Discretization& disc,
                                                        const NodalField& u_old, double t_next,
                                                        const TimeConfig& cfg);

struct Trajectory {
  std::vector<double> times;  ///< t^0 = 0, t^1, ...
  std::vector<double> max_values;
  std::vector<double> min_values;
  std::vector<SolverReport> reports;  ///< one per step
  NodalField final_state;
  bool all_converged = true;
};

/// Backward Euler up to t_end (or `steps` steps when positive).
Trajectory run_transient(const Discretization& disc, const TimeConfig& cfg, int steps = 0);

/// Solve K(u)u = g with inflow Dirichlet data; initial guess is the inflow
/// data on the boundary and 0 inside.
std::pair<NodalField, SolverReport> run_steady(const Discretization& disc, const TimeConfig& cfg);

}  // namespace dmpfem
