#include <doctest.h>

#include <numbers>

#include "support.hpp"

using namespace dmpfem;
using testing::make_extremum;
using testing::random_field;

namespace {

StabParams params_for(DetectorKind kind, double q = 2.0) {
  StabParams p;
  p.q = q;
  p.detector = kind;
  if (kind == DetectorKind::Smooth || kind == DetectorKind::SimplifiedSmooth) {
    p.eps = 1e-3;
    p.sigma = 1e-8;
    p.gamma = 1e-10;
  }
  return p;
}

double detector(DetectorKind kind, const Mesh2D& mesh, const NodalField& u, int i) {
  const StabParams p = params_for(kind);
  switch (kind) {
    case DetectorKind::Nonsmooth: return detector_nonsmooth(mesh, u, i, p);
    case DetectorKind::Simplified: return detector_simplified(mesh, u, i, p);
    case DetectorKind::Smooth: return detector_smooth(mesh, u, i, p);
    case DetectorKind::SimplifiedSmooth: return detector_simplified_smooth(mesh, u, i, p);
    default: return 0.0;
  }
}

/// Regular hexagon around node 0, unit edges, six P1 triangles.
Mesh2D hexagon() {
  std::vector<Point2> nodes{{0, 0}};
  for (int k = 0; k < 6; ++k) {
    const double a = k * std::numbers::pi / 3.0;
    nodes.push_back({std::cos(a), std::sin(a)});
  }
  std::vector<int> elems;
  for (int k = 0; k < 6; ++k) elems.insert(elems.end(), {0, 1 + k, 1 + (k + 1) % 6});
  return Mesh2D(nodes, elems, ElementKind::P1);
}

}  // namespace

TEST_CASE("smooth absolute value bounds") {
  for (double x : {-2.0, -0.1, 0.0, 0.3, 5.0}) {
    CHECK(smooth_abs_upper(x, 1e-2) >= std::abs(x));
    CHECK(smooth_abs_lower(x, 1e-2) <= std::abs(x));
  }
  CHECK(smooth_abs_upper(0.0, 0.04) == doctest::Approx(0.2));
  CHECK(smooth_abs_lower(0.0, 0.04) == 0.0);
  CHECK(smooth_abs_upper(3.0, 0.0) == 3.0);
}

TEST_CASE("smooth maximum dominates the maximum and has a symmetric gradient") {
  CHECK(smooth_max(1.0, 0.0, 0.0) == 1.0);
  CHECK(smooth_max(0.0, 0.0, 4.0) == doctest::Approx(1.0));
  CHECK(smooth_max(0.2, -0.3, 1e-3) >= 0.2);
  const auto [dx, dy] = smooth_max_gradient(0.5, 0.5, 1e-2);
  CHECK(dx == doctest::Approx(0.5));
  CHECK(dy == doctest::Approx(0.5));
}

TEST_CASE("limiter f is monotone, f(x) >= x on [0,1] and flat at 1") {
  CHECK(limiter_f(0.0) == 0.0);
  CHECK(limiter_f(1.0) == 1.0);
  CHECK(limiter_f(3.0) == 1.0);
  CHECK(limiter_f_derivative(1.0) == doctest::Approx(0.0));
  double prev = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double x = k / 100.0;
    CHECK(limiter_f(x) >= x - 1e-15);
    CHECK(limiter_f(x) >= prev);
    prev = limiter_f(x);
  }
}

TEST_CASE("elementary derivatives match central differences") {
  const double h = 1e-6;
  for (double x : {-0.7, -0.01, 0.02, 0.4, 0.9}) {
    CHECK(smooth_abs_upper_derivative(x, 1e-2) ==
          doctest::Approx((smooth_abs_upper(x + h, 1e-2) - smooth_abs_upper(x - h, 1e-2)) / (2 * h)));
    CHECK(smooth_abs_lower_derivative(x, 1e-2) ==
          doctest::Approx((smooth_abs_lower(x + h, 1e-2) - smooth_abs_lower(x - h, 1e-2)) / (2 * h)));
    CHECK(limiter_f_derivative(x) ==
          doctest::Approx((limiter_f(x + h) - limiter_f(x - h)) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("detectors equal 1 at strict local extrema") {
  std::mt19937 rng(7);
  for (auto kind : {ElementKind::Q1, ElementKind::P1}) {
    const Mesh2D mesh = Mesh2D::structured(5, 4, {0, 1, 0, 1}, kind);
    for (int trial = 0; trial < 25; ++trial) {
      NodalField u = random_field(mesh.num_nodes(), rng);
      const int i = static_cast<int>(rng() % mesh.num_nodes());
      make_extremum(mesh, u, i, trial % 2 == 0, 0.05);
      for (auto d : {DetectorKind::Nonsmooth, DetectorKind::Simplified, DetectorKind::Smooth,
                     DetectorKind::SimplifiedSmooth}) {
        CHECK(detector(d, mesh, u, i) == 1.0);
      }
    }
  }
}

TEST_CASE("nonsmooth detector vanishes on affine fields at interior nodes") {
  for (auto kind : {ElementKind::Q1, ElementKind::P1}) {
    const Mesh2D mesh = Mesh2D::structured(4, 4, {0, 1, 0, 1}, kind);
    const NodalField u = interpolate(mesh, [](Point2 x) { return 0.3 + 2 * x.x - x.y; });
    for (int i = 0; i < static_cast<int>(mesh.num_nodes()); ++i) {
      if (mesh.is_boundary(i)) continue;
      CHECK(detector_nonsmooth(mesh, u, i, params_for(DetectorKind::Nonsmooth)) ==
            doctest::Approx(0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("detectors vanish on constants") {
  const Mesh2D mesh = Mesh2D::structured(3, 3, {0, 1, 0, 1}, ElementKind::Q1);
  const NodalField u(mesh.num_nodes(), 0.4);
  CHECK(detector_nonsmooth(mesh, u, 5, params_for(DetectorKind::Nonsmooth)) == 0.0);
  CHECK(detector_simplified(mesh, u, 5, params_for(DetectorKind::Simplified)) == 0.0);
}

TEST_CASE("nonsmooth and simplified detectors agree on the equal-edge hexagon") {
  const Mesh2D mesh = hexagon();
  std::mt19937 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const NodalField u = random_field(mesh.num_nodes(), rng);
    for (double q : {1.0, 2.0, 5.0}) {
      CHECK(detector_nonsmooth(mesh, u, 0, params_for(DetectorKind::Nonsmooth, q)) ==
            doctest::Approx(detector_simplified(mesh, u, 0, params_for(DetectorKind::Simplified, q)))
                .epsilon(1e-12));
    }
  }
}

TEST_CASE("detector values lie in [0,1] and the analytic gradient matches differences") {
  std::mt19937 rng(11);
  const Mesh2D mesh = Mesh2D::structured(4, 4, {0, 1, 0, 1}, ElementKind::Q1);
  for (auto kind : {DetectorKind::Smooth, DetectorKind::SimplifiedSmooth}) {
    const StabParams p = params_for(kind, 3.0);
    const ShockDetector det(mesh, p);
    const NodalField u = random_field(mesh.num_nodes(), rng);
    for (int i = 0; i < static_cast<int>(mesh.num_nodes()); ++i) {
      const auto nbrs = mesh.neighbors(i);
      std::vector<double> grad(nbrs.size());
      const double a = det.value_and_gradient(i, u, grad);
      CHECK(a >= 0.0);
      CHECK(a <= 1.0);
      CHECK(a == doctest::Approx(det.value(i, u)));
      for (std::size_t s = 0; s < nbrs.size(); ++s) {
        NodalField up = u, um = u;
        up[nbrs[s]] += 1e-7;
        um[nbrs[s]] -= 1e-7;
        const double fd = (det.value(i, up) - det.value(i, um)) / 2e-7;
        CHECK(grad[s] == doctest::Approx(fd).epsilon(1e-5).scale(1e-3));
      }
    }
  }
}

TEST_CASE("gradient requests on nonsmooth detectors are rejected") {
  const Mesh2D mesh = Mesh2D::structured(2, 2, {0, 1, 0, 1}, ElementKind::Q1);
  const ShockDetector det(mesh, params_for(DetectorKind::Nonsmooth));
  const NodalField u(mesh.num_nodes(), 0.0);
  std::vector<double> grad(mesh.neighbors(4).size());
  CHECK_THROWS_AS(det.value_and_gradient(4, u, grad), std::logic_error);
}

TEST_CASE("viscosity is symmetric, non-negative, with zero row sums of B") {
  std::mt19937 rng(5);
  const Mesh2D mesh = Mesh2D::structured(4, 4, {0, 1, 0, 1}, ElementKind::P1);
  const auto vel = VelocityModel::constant({0.5, -0.8});
  const SparseOperator F = assemble_convection(mesh, vel, NodalField(mesh.num_nodes(), 0.0));
  const NodalField alpha = random_field(mesh.num_nodes(), rng);
  const StabParams p = params_for(DetectorKind::Nonsmooth);
  const SparseOperator nu = viscosity(mesh, F, alpha, p);
  const SparseOperator B = assemble_B(mesh, nu);
  for (int i = 0; i < static_cast<int>(mesh.num_nodes()); ++i) {
    CHECK(B.row_sum(i) == doctest::Approx(0.0).epsilon(1e-14));
    for (int j : mesh.neighbors(i)) {
      if (j == i) continue;
      CHECK(nu(i, j) >= 0.0);
      CHECK(nu(i, j) == nu(j, i));
      CHECK(nu(i, j) == std::max({alpha[i] * F(i, j), alpha[j] * F(j, i), 0.0}));
    }
  }
}

TEST_CASE("smooth viscosity dominates the nonsmooth one") {
  std::mt19937 rng(13);
  const Mesh2D mesh = Mesh2D::structured(4, 4, {0, 1, 0, 1}, ElementKind::Q1);
  const auto vel = VelocityModel::constant({0.5, std::sin(-std::numbers::pi / 3)});
  const SparseOperator F = assemble_convection(mesh, vel, NodalField(mesh.num_nodes(), 0.0));
  const StabParams ps = params_for(DetectorKind::Smooth);
  const StabParams pn = params_for(DetectorKind::Nonsmooth);
  const ShockDetector ds(mesh, ps), dn(mesh, pn);
  for (int trial = 0; trial < 100; ++trial) {
    const NodalField u = random_field(mesh.num_nodes(), rng);
    const SparseOperator a = viscosity(mesh, F, ds.evaluate(u), ps);
    const SparseOperator b = viscosity(mesh, F, dn.evaluate(u), pn);
    for (std::size_t k = 0; k < a.values().size(); ++k) CHECK(a.values()[k] >= b.values()[k]);
  }
}

TEST_CASE("gradual lumping interpolates between consistent and lumped mass") {
  const Mesh2D mesh = Mesh2D::structured(2, 2, {0, 1, 0, 1}, ElementKind::Q1);
  const SparseOperator M = assemble_mass(mesh);
  const NodalField m = lumped_masses(mesh);
  const SparseOperator M0 = assemble_nonlinear_mass(mesh, M, m, NodalField(9, 0.0));
  const SparseOperator M1 = assemble_nonlinear_mass(mesh, M, m, NodalField(9, 1.0));
  CHECK(M0(4, 5) == M(4, 5));
  CHECK(M1(4, 5) == 0.0);
  CHECK(M1(4, 4) == doctest::Approx(m[4]));
}

TEST_CASE("parameter validation names the field") {
  StabParams p;
  p.q = -1;
  CHECK_THROWS_WITH_AS(p.validate(), "q must be positive", std::invalid_argument);
  p.q = 1;
  p.detector = DetectorKind::Smooth;
  p.eps = 0;
  p.gamma = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
