#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "dmpfem/mesh.hpp"
#include "dmpfem/sparse.hpp"

namespace dmpfem {

/// Quadrature point mapped to an element, with shape values and physical
/// gradients of the element's local basis. `weight` includes the Jacobian.
struct QuadraturePoint {
  Point2 x{};
  double weight = 0.0;
  std::array<double, 4> phi{};
  std::array<Point2, 4> grad{};
};

/// Per-element quadrature cache.
///
/// Default rules: 2x2 Gauss on Q1, the 3-point degree-2 rule on P1. A positive
/// `points_per_direction` selects an n x n Gauss rule (collapsed onto the
/// triangle for P1), used for error norms.
class ElementQuadrature {
 public:
  explicit ElementQuadrature(const Mesh2D& mesh, int points_per_direction = 0);

  std::span<const QuadraturePoint> points(int element) const {
    return {points_.data() + static_cast<std::size_t>(element) * per_element_,
            static_cast<std::size_t>(per_element_)};
  }
  int points_per_element() const { return per_element_; }

 private:
  int per_element_ = 0;
  std::vector<QuadraturePoint> points_;
};

/// Evaluate the shape functions of element `e` at physical point `x` (which
/// must lie in the closed element).
std::array<double, 4> shape_values_at(const Mesh2D& mesh, int e, Point2 x);

/// Transport velocity v(x, w) of a conservation law with flux f(w) = v(x, w) w.
///
/// v must be affine in the state. The discrete convection uses the group
/// velocity a = df/dw = v + w dv/dw, so that F(u)u = (div f(u_h), phi_i).
struct VelocityModel {
  std::function<Point2(Point2, double)> velocity;
  /// dv/dw; zero for state-independent fields.
  std::function<Point2(Point2, double)> state_derivative;
  bool state_dependent = false;

  static VelocityModel constant(Point2 v);
  static VelocityModel field(std::function<Point2(Point2)> v);
  /// v(w) = direction * w / 2, i.e. f(w) = direction * w^2 / 2.
  static VelocityModel burgers(Point2 direction);

  Point2 group_velocity(Point2 x, double w) const;
  /// d(group velocity)/dw.
  Point2 group_velocity_derivative(Point2 x, double w) const;
};

NodalField interpolate(const Mesh2D& mesh, const std::function<double(Point2)>& f);

/// Consistent mass matrix M_ij = (phi_j, phi_i).
SparseOperator assemble_mass(const Mesh2D& mesh);
/// m_i = integral of phi_i (row sums of M).
NodalField lumped_masses(const Mesh2D& mesh);
/// g_i = (g, phi_i).
NodalField assemble_forcing(const Mesh2D& mesh, const std::function<double(Point2)>& g);
/// F_ij(w) = (a(w_h) . grad phi_j, phi_i) with a the group velocity.
SparseOperator assemble_convection(const Mesh2D& mesh, const VelocityModel& vel,
                                   std::span<const double> w);
/// |w|_l = sqrt(1/2 sum_i sum_{j in N_i} (w_i - w_j)^2).
double graph_seminorm(const Mesh2D& mesh, std::span<const double> w);

/// Cached Galerkin convection operator for repeated assembly in a nonlinear
/// solve. State-independent fields are assembled once.
class ConvectionOperator {
 public:
  ConvectionOperator(const Mesh2D& mesh, std::shared_ptr<const SparsityPattern> pattern,
                     const ElementQuadrature& quad, VelocityModel vel);

  bool state_dependent() const { return vel_.state_dependent; }
  const VelocityModel& velocity() const { return vel_; }
  const std::shared_ptr<const SparsityPattern>& pattern() const { return pattern_; }

  SparseOperator assemble(std::span<const double> w) const;

  /// Derivatives dF_ij/dw_k for every pattern entry (i, j): entries
  /// [offsets[p], offsets[p+1]) of `nodes`/`values` belong to position p.
  struct Gradient {
    std::vector<std::size_t> offsets;
    std::vector<int> nodes;
    std::vector<double> values;
  };
  Gradient state_gradient(std::span<const double> w) const;

 private:
  const Mesh2D& mesh_;
  std::shared_ptr<const SparsityPattern> pattern_;
  const ElementQuadrature& quad_;
  VelocityModel vel_;
  std::vector<std::ptrdiff_t> element_positions_;  // npe*npe pattern slots per element
  std::optional<SparseOperator> fixed_;
};

}  // namespace dmpfem
