#include <doctest.h>

#include <numeric>

#include "support.hpp"

using namespace dmpfem;

namespace {

std::shared_ptr<const SparsityPattern> scalar_pattern() {
  return std::make_shared<const SparsityPattern>(std::vector<std::size_t>{0, 1}, std::vector<int>{0});
}

/// u = 0.5 u + 1, fixed point 2.
class Affine final : public ResidualSystem {
 public:
  std::size_t size() const override { return 1; }
  NodalField residual(std::span<const double> u) const override { return {0.5 * u[0] - 1.0}; }
  SparseOperator jacobian(std::span<const double>) const override {
    SparseOperator J(scalar_pattern());
    J.values()[0] = 0.5;
    return J;
  }
  FixedPoint fixed_point(std::span<const double> u) const override {
    SparseOperator A(scalar_pattern());
    A.values()[0] = 1.0;
    return {A, {0.5 * u[0] + 1.0}};
  }
  double reference_norm() const override { return 1.0; }
};

/// T(u) = u^2 - 4.
class Square final : public ResidualSystem {
 public:
  std::size_t size() const override { return 1; }
  NodalField residual(std::span<const double> u) const override { return {u[0] * u[0] - 4.0}; }
  SparseOperator jacobian(std::span<const double> u) const override {
    SparseOperator J(scalar_pattern());
    J.values()[0] = 2.0 * u[0];
    return J;
  }
  FixedPoint fixed_point(std::span<const double> u) const override {
    // u * u = 4 written as (u) u = 4.
    SparseOperator A(scalar_pattern());
    A.values()[0] = u[0];
    return {A, {4.0}};
  }
  double reference_norm() const override { return 4.0; }
};

}  // namespace

TEST_CASE("Anderson on a scalar contraction reaches the fixed point") {
  const Affine sys;
  auto [u, report] = anderson_solve(sys, {0.0}, AndersonOptions{});
  CHECK(report.converged);
  CHECK(u[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(report.nlerr_history.size() == static_cast<std::size_t>(report.iterations));
  CHECK(report.step_history.size() == static_cast<std::size_t>(report.iterations));
}

TEST_CASE("Newton steps on u^2 - 4 from 3") {
  const Square sys;
  NewtonOptions opts;
  opts.k_max = 2;  // one loop body
  opts.tol = 1e-300;
  auto [u1, r1] = newton_solve(sys, {3.0}, opts);
  CHECK(u1[0] == doctest::Approx(13.0 / 6.0));
  CHECK(r1.step_history.at(0) == 1.0);
  opts = NewtonOptions{};
  opts.tol = 1e-12;
  auto [u, report] = newton_solve(sys, {3.0}, opts);
  CHECK(report.converged);
  CHECK(u[0] == doctest::Approx(2.0).epsilon(1e-12));
  // Quadratic convergence: a handful of steps.
  CHECK(report.iterations <= 6);
}

TEST_CASE("golden-section search finds the minimiser and keeps the full step") {
  const double x = golden_section([](double t) { return (t - 0.3) * (t - 0.3) + 1.0; }, 1e-6);
  CHECK(x == doctest::Approx(0.3).epsilon(1e-5));
  CHECK(golden_section([](double t) { return -t; }, 1e-4) == 1.0);
}

TEST_CASE("Anderson coefficients sum to one and minimise the combined residual") {
  auto xi = anderson_coefficients({{1.0, 0.0}, {0.0, 1.0}});
  REQUIRE(xi.size() == 2);
  CHECK(xi[0] == doctest::Approx(0.5));
  CHECK(xi[1] == doctest::Approx(0.5));
  std::mt19937 rng(2);
  std::vector<NodalField> rs;
  for (int k = 0; k < 4; ++k) rs.push_back(testing::random_field(10, rng, -1, 1));
  xi = anderson_coefficients(rs);
  CHECK(std::accumulate(xi.begin(), xi.end(), 0.0) == doctest::Approx(1.0));
  auto combined = [&](const std::vector<double>& c) {
    NodalField r(10, 0.0);
    for (std::size_t k = 0; k < c.size(); ++k) {
      for (int i = 0; i < 10; ++i) r[i] += c[k] * rs[k][i];
    }
    return l2_norm(r);
  };
  const double best = combined(xi);
  // Perturbations along the constraint do not improve the residual.
  for (std::size_t a = 0; a < 4; ++a) {
    auto c = xi;
    c[a] += 1e-3;
    c[(a + 1) % 4] -= 1e-3;
    CHECK(combined(c) >= best - 1e-14);
  }
  CHECK(anderson_coefficients({{3.0, 4.0}}) == std::vector<double>{1.0});
}

TEST_CASE("log slope of a geometric sequence") {
  const std::vector<double> v{1.0, 0.1, 0.01, 0.001};
  CHECK(log_slope(v) == doctest::Approx(-1.0));
  CHECK(log_slope(std::vector<double>{0.5}) == 0.0);
}

TEST_CASE("projection is idempotent and removes violations") {
  const AdmissibleBounds b{0.0, 1.0};
  const NodalField u{-0.5, 0.2, 1.3, 1.0};
  const NodalField p = project_admissible(u, b);
  CHECK(p == NodalField{0.0, 0.2, 1.0, 1.0});
  CHECK(project_admissible(p, b) == p);
  const auto [over, under] = dmp_violation(u, b);
  CHECK(over == doctest::Approx(0.3));
  CHECK(under == doctest::Approx(0.5));
  const auto [o2, u2] = dmp_violation(p, b);
  CHECK(o2 == 0.0);
  CHECK(u2 == 0.0);
}

TEST_CASE("solver options are validated") {
  AndersonOptions a;
  a.m = 0;
  CHECK_THROWS_AS(a.validate(), std::invalid_argument);
  NewtonOptions n;
  n.tol = -1;
  CHECK_THROWS_AS(n.validate(), std::invalid_argument);
}

TEST_CASE("linear solver solves a small system and flags singular matrices") {
  const Mesh2D mesh = Mesh2D::structured(1, 1, {0, 1, 0, 1}, ElementKind::Q1);
  SparseOperator A(SparsityPattern::adjacency(mesh));
  for (int i = 0; i < 4; ++i) A.at(i, i) = 2.0;
  LinearSolver solver;
  const auto x = solver.solve(A, std::vector<double>{2, 4, 6, 8});
  REQUIRE(x.has_value());
  CHECK((*x)[3] == doctest::Approx(4.0));
  A.set_zero();
  CHECK_FALSE(solver.solve(A, std::vector<double>{1, 1, 1, 1}).has_value());
}

TEST_CASE("stabilized residual vanishes at the fixed point and both solvers agree") {
  testing::Setup s("STRAIGHT_DISCONTINUITY", 8, 8);
  const StabilizedSystem sys = s.system(testing::smooth_params(2.0, 1e-2));
  const NodalField u0 = s.disc->dirichlet_values(0.0);
  AndersonOptions ao;
  ao.tol = 1e-10;
  NewtonOptions no;
  no.tol = 1e-10;
  auto [ua, ra] = anderson_solve(sys, u0, ao);
  auto [un, rn] = newton_solve(sys, u0, no);
  REQUIRE(ra.converged);
  REQUIRE(rn.converged);
  for (std::size_t i = 0; i < ua.size(); ++i) CHECK(ua[i] == doctest::Approx(un[i]).epsilon(1e-7));
  CHECK(l2_norm(sys.residual(un)) < 1e-8 * sys.reference_norm());
  CHECK(rn.iterations < ra.iterations);
}

TEST_CASE("Picard matrix reproduces the residual") {
  testing::Setup s("STRAIGHT_DISCONTINUITY", 5, 5);
  std::mt19937 rng(17);
  const StabilizedSystem sys = s.system(testing::smooth_params(3.0, 1e-3));
  const NodalField u = testing::random_field(s.mesh->num_nodes(), rng);
  const auto fp = sys.fixed_point(u);
  const NodalField Au = fp.A.multiply(u);
  const NodalField T = sys.residual(u);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(Au[i] - fp.G[i] == doctest::Approx(T[i]).epsilon(1e-10));
}

TEST_CASE("analytic Jacobian matches finite differences") {
  std::mt19937 rng(23);
  SUBCASE("steady linear transport") {
    testing::Setup s("STRAIGHT_DISCONTINUITY", 4, 4);
    const StabilizedSystem sys = s.system(testing::smooth_params(2.0, 1e-2));
    CHECK(testing::jacobian_fd_error(sys, testing::random_field(25, rng)) < 1e-6);
  }
  SUBCASE("transient Burgers with gradual lumping") {
    testing::Setup s("BURGERS2D", 4, 4);
    StabParams p = testing::smooth_params(2.0, 1e-2);
    const NodalField u_old = testing::random_field(25, rng, -1.0, 0.8);
    const StabilizedSystem sys = s.system(p, 1e-2, u_old);
    CHECK(testing::jacobian_fd_error(sys, testing::random_field(25, rng, -1.0, 0.8)) < 1e-6);
  }
  SUBCASE("symmetric-mass variant") {
    testing::Setup s("THREE_BODY_ROTATION", 4, 4, ElementKind::P1);
    StabParams p = testing::smooth_params(2.0, 1e-2);
    p.mass = MassKind::SymmetricMass;
    const StabilizedSystem sys = s.system(p, 1e-2);
    // Consistent mass entries are small, so round-off favours a wider step.
    CHECK(testing::jacobian_fd_error(sys, testing::random_field(25, rng), 3e-3) < 1e-6);
  }
}

TEST_CASE("detector values vanish on Dirichlet nodes") {
  testing::Setup s("STEADY_PARABOLIC", 6, 6);
  const StabilizedSystem sys = s.system(testing::smooth_params(4.0, 1e-7));
  const NodalField u = interpolate(*s.mesh, *s.spec.exact);
  const NodalField raw = sys.detector().evaluate(u);
  const NodalField used = sys.alphas(u);
  bool flagged_boundary = false;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (s.disc->dirichlet()[i]) {
      CHECK(used[i] == 0.0);
      flagged_boundary = flagged_boundary || raw[i] > 0.5;
    } else {
      CHECK(used[i] == raw[i]);
    }
  }
  // The prescribed zero walls are minima, so the raw detector fires there.
  CHECK(flagged_boundary);
}

TEST_CASE("Jacobian of a nonsmooth detector is rejected") {
  testing::Setup s("STRAIGHT_DISCONTINUITY", 3, 3);
  StabParams p;
  p.detector = DetectorKind::Nonsmooth;
  const StabilizedSystem sys = s.system(p);
  CHECK_THROWS_AS(sys.jacobian(NodalField(16, 0.5)), UnsupportedVariant);
}
