#pragma once

#include <span>
#include <vector>

#include "dmpfem/mesh.hpp"
#include "dmpfem/sparse.hpp"

namespace dmpfem {

enum class DetectorKind {
  None,              ///< alpha = 0 everywhere, no artificial diffusion (plain Galerkin)
  Nonsmooth,         ///< gradient-jump detector with symmetric points
  Simplified,        ///< edge-difference detector
  Smooth,            ///< twice-differentiable gradient-jump detector
  SimplifiedSmooth,  ///< twice-differentiable edge-difference detector
};

enum class MassKind {
  GradualLumping,  ///< M(u)_ij = (1 - alpha_i) M_ij + alpha_i delta_ij m_i
  SymmetricMass,   ///< consistent M, mass-weighted extra diffusion
};

/// Shock-capturing parameters.
struct StabParams {
  double q = 1.0;      ///< detector exponent, > 0
  double eps = 0.0;    ///< smooth absolute value parameter
  double sigma = 0.0;  ///< smooth maximum parameter (viscosity units squared)
  double gamma = 0.0;  ///< division guard of the smooth detectors
  DetectorKind detector = DetectorKind::Smooth;
  MassKind mass = MassKind::GradualLumping;
  double beta_bound = 1.0;  ///< sup |v| over admissible states

  /// True when the viscosity uses the regularized maximum.
  bool smooth() const {
    return detector == DetectorKind::Smooth || detector == DetectorKind::SimplifiedSmooth;
  }
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

// Regularized elementary functions. Each is C^2 for positive parameters.

/// sqrt(x^2 + eps) >= |x|
double smooth_abs_upper(double x, double eps);
double smooth_abs_upper_derivative(double x, double eps);
/// x^2 / sqrt(x^2 + eps) <= |x|
double smooth_abs_lower(double x, double eps);
double smooth_abs_lower_derivative(double x, double eps);
/// (sqrt((x - y)^2 + sigma) + x + y) / 2 >= max(x, y)
double smooth_max(double x, double y, double sigma);
/// Partial derivatives of smooth_max with respect to x and y.
std::pair<double, double> smooth_max_gradient(double x, double y, double sigma);
/// 2x^4 - 5x^3 + 3x^2 + x below 1, then 1.
double limiter_f(double x);
double limiter_f_derivative(double x);

/// Directional gradient jump at node i towards j. Symmetric term dropped when
/// the symmetric point is absent. Requires j in N_i, j != i.
double jump(const Mesh2D& mesh, std::span<const double> u, int i, int j);
/// Mean of the absolute directional derivatives at node i towards j.
double mean_abs(const Mesh2D& mesh, std::span<const double> u, int i, int j);

/// Per-node shock detector with cached stencils.
///
/// Every detector is a function of the differences u_k - u_i over k in N_i
/// (symmetric points on patch edges are linear combinations of such nodes),
/// so gradients are reported on the slots of mesh.neighbors(i).
class ShockDetector {
 public:
  ShockDetector(const Mesh2D& mesh, const StabParams& params);

  const StabParams& params() const { return params_; }
  double value(int i, std::span<const double> u) const;
  /// Value of alpha_i; writes d alpha_i / d u_k into grad[slot of k in N_i].
  /// Only valid for smooth (or None) detectors.
  double value_and_gradient(int i, std::span<const double> u, std::span<double> grad) const;
  NodalField evaluate(std::span<const double> u) const;

 private:
  struct Term {
    double weight;
    std::size_t coef_begin, coef_end;
  };
  double eval(int i, std::span<const double> u, std::span<double> grad) const;

  const Mesh2D& mesh_;
  StabParams params_;
  double eps_ = 0.0;
  double gamma_ = 0.0;
  std::vector<std::size_t> term_offsets_;
  std::vector<Term> terms_;
  std::vector<std::pair<int, double>> coefs_;  // (slot in N_i, coefficient)
};

double detector_nonsmooth(const Mesh2D& mesh, std::span<const double> u, int i,
                          const StabParams& params);
double detector_simplified(const Mesh2D& mesh, std::span<const double> u, int i,
                           const StabParams& params);
double detector_smooth(const Mesh2D& mesh, std::span<const double> u, int i,
                       const StabParams& params);
/// Uses eps* = h^2 eps and gamma* = h gamma with h the mean edge length.
double detector_simplified_smooth(const Mesh2D& mesh, std::span<const double> u, int i,
                                  const StabParams& params);

/// Pairwise combination of the two one-sided viscosity candidates:
/// max{a, b, 0}, or max_s{max_s{a, b}, 0} for smooth detectors.
double combine_viscosity(double a, double b, const StabParams& params);

/// nu_ij = max{alpha_i F_ij, alpha_j F_ji, 0} (or its smooth form), nu_ii = sum_{j != i} nu_ij.
SparseOperator viscosity(const Mesh2D& mesh, const SparseOperator& convection,
                         std::span<const double> alphas, const StabParams& params);
/// nu_ij + (1/dt) max{alpha_i M_ij, 0, alpha_j M_ji}; throws for dt <= 0.
SparseOperator viscosity_symmetric_mass(const Mesh2D& mesh, const SparseOperator& convection,
                                        const SparseOperator& mass, std::span<const double> alphas,
                                        double dt, const StabParams& params);
/// Graph-Laplacian operator B_ij = nu_ij (2 delta_ij - 1).
SparseOperator assemble_B(const Mesh2D& mesh, const SparseOperator& nu);
/// M(u)_ij = (1 - alpha_i) M_ij + alpha_i delta_ij m_i.
SparseOperator assemble_nonlinear_mass(const Mesh2D& mesh, const SparseOperator& mass,
                                       std::span<const double> lumped,
                                       std::span<const double> alphas);

}  // namespace dmpfem
