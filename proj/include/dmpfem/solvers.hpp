#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dmpfem/assembly.hpp"
#include "dmpfem/mesh.hpp"
#include "dmpfem/sparse.hpp"
#include "dmpfem/stabilization.hpp"

namespace dmpfem {

/// Thrown when an operation needs derivatives of a non-differentiable scheme.
class UnsupportedVariant : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Global bounds of the admissible space.
struct AdmissibleBounds {
  double lower = 0.0;
  double upper = 0.0;
  void validate() const;
};

/// Nonlinear problem T(u) = 0 with a fixed-point form A(u) u = G(u).
///
/// Implementations must be safe to share read-only between threads.
class ResidualSystem {
 public:
  struct FixedPoint {
    SparseOperator A;
    NodalField G;
  };

  virtual ~ResidualSystem() = default;
  virtual std::size_t size() const = 0;
  virtual NodalField residual(std::span<const double> u) const = 0;
  /// dT/du. Throws UnsupportedVariant when T is not differentiable.
  virtual SparseOperator jacobian(std::span<const double> u) const = 0;
  virtual FixedPoint fixed_point(std::span<const double> u) const = 0;
  /// Norm of the data-only part of T, used to scale residuals.
  virtual double reference_norm() const = 0;
};

/// Stabilized transport residual
///   T(u) = M(u)(u - u_old)/dt + K(u) u - g,  K = F(u) + B(u),
/// or K(u) u - g when dt == 0. Dirichlet rows read T_i = u_i - uD_i.
class StabilizedSystem final : public ResidualSystem {
 public:
  struct Data {
    NodalField forcing;           ///< g_i, length = num nodes
    std::vector<char> dirichlet;  ///< 1 where the value is prescribed
    NodalField dirichlet_values;  ///< uD, read on Dirichlet nodes only
    double dt = 0.0;              ///< 0 selects the steady residual
    NodalField u_old;             ///< ignored when steady
  };

  StabilizedSystem(const Mesh2D& mesh, const ConvectionOperator& convection,
                   const StabParams& params, Data data);

  std::size_t size() const override { return mesh_.num_nodes(); }
  NodalField residual(std::span<const double> u) const override;
  SparseOperator jacobian(std::span<const double> u) const override;
  FixedPoint fixed_point(std::span<const double> u) const override;
  double reference_norm() const override { return reference_norm_; }

  /// Drop d alpha/du from the gradual-lumping mass term of the Jacobian.
  void set_freeze_mass_alpha(bool freeze) { freeze_mass_alpha_ = freeze; }

  const StabParams& params() const { return params_; }
  const ShockDetector& detector() const { return detector_; }
  const SparseOperator& mass() const { return mass_; }
  const NodalField& lumped() const { return lumped_; }
  bool steady() const { return data_.dt == 0.0; }
  /// Artificial viscosity nu(u) of the residual (including the mass part for
  /// the symmetric-mass variant).
  SparseOperator viscosity_at(std::span<const double> u, std::span<const double> alpha,
                              const SparseOperator& F) const;
  /// Detector values used by the scheme; zero on Dirichlet nodes, whose
  /// values are prescribed rather than computed.
  NodalField alphas(std::span<const double> u) const;

 private:
  const Mesh2D& mesh_;
  const ConvectionOperator& conv_;
  StabParams params_;
  Data data_;
  ShockDetector detector_;
  SparseOperator mass_;
  NodalField lumped_;
  std::shared_ptr<const SparsityPattern> wide_;  // distance-two pattern
  double reference_norm_ = 0.0;
  bool freeze_mass_alpha_ = false;
};

/// Iteration record shared by both solvers. All histories have one entry per
/// iteration.
struct SolverReport {
  int iterations = 0;
  bool converged = false;
  std::vector<double> nlerr_history;
  /// (max(u) - upper)^+ and (lower - min(u))^+ of each stored iterate.
  std::vector<std::pair<double, double>> dmp_violation_history;
  /// Relaxation omega (Anderson) or line-search step xi (Newton).
  std::vector<double> step_history;
  std::string failure;  ///< non-empty when the iteration aborted
};

struct AndersonOptions {
  int m = 5;
  double s_min = -0.05;
  double omega0 = 1.0;
  double omega_min = 0.3;
  double tol = 1e-6;
  int k_max = 500;
  bool project = false;
  void validate() const;
};

struct NewtonOptions {
  double tol = 1e-6;
  int k_max = 500;
  bool project = false;
  double ls_tol = 1e-4;
  void validate() const;
};

/// Sparse LU that reuses the symbolic analysis while the pattern is unchanged.
class LinearSolver {
 public:
  LinearSolver();
  ~LinearSolver();
  LinearSolver(const LinearSolver&) = delete;
  LinearSolver& operator=(const LinearSolver&) = delete;

  /// Returns std::nullopt when the matrix is numerically singular.
  std::optional<NodalField> solve(const SparseOperator& A, std::span<const double> b);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Coefficients xi minimizing ||sum xi_i r_i|| subject to sum xi_i = 1.
std::vector<double> anderson_coefficients(const std::vector<NodalField>& residuals);

/// Least-squares slope of log10(values) against their index.
double log_slope(std::span<const double> values);

/// (max violation, min violation) of u with respect to the bounds.
std::pair<double, double> dmp_violation(std::span<const double> u, const AdmissibleBounds& b);

NodalField project_admissible(std::span<const double> u, const AdmissibleBounds& bounds);

/// Relaxed Anderson-accelerated fixed-point iteration.
std::pair<NodalField, SolverReport> anderson_solve(const ResidualSystem& sys, NodalField u0,
                                                   const AndersonOptions& opts,
                                                   std::optional<AdmissibleBounds> bounds = {});

/// Golden-section minimization of phi on [0, 1] to interval width tol. Returns
/// the best evaluated abscissa, including the full step 1.
double golden_section(const std::function<double(double)>& phi, double tol);

/// xi in [0, 1] approximately minimizing ||T(u + xi du)||.
double line_search(const ResidualSystem& sys, std::span<const double> u,
                   std::span<const double> du, double ls_tol);

/// Newton's method with line search.
std::pair<NodalField, SolverReport> newton_solve(const ResidualSystem& sys, NodalField u0,
                                                 const NewtonOptions& opts,
                                                 std::optional<AdmissibleBounds> bounds = {});

SparseOperator assemble_jacobian(const ResidualSystem& sys, std::span<const double> u);

double l2_norm(std::span<const double> v);

}  // namespace dmpfem
