// Shared helpers for the unit tests and the acceptance runner.
#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "dmpfem/assembly.hpp"
#include "dmpfem/bench.hpp"
#include "dmpfem/mesh.hpp"
#include "dmpfem/problem.hpp"
#include "dmpfem/solvers.hpp"
#include "dmpfem/stabilization.hpp"
#include "dmpfem/timeloop.hpp"

namespace testing {

using namespace dmpfem;

inline NodalField random_field(std::size_t n, std::mt19937& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  NodalField u(n);
  for (double& x : u) x = dist(rng);
  return u;
}

/// Raise (or lower) u_i strictly above (below) every other value of N_i.
inline void make_extremum(const Mesh2D& mesh, NodalField& u, int i, bool maximum, double gap) {
  double hi = -INFINITY, lo = INFINITY;
  for (int j : mesh.neighbors(i)) {
    if (j == i) continue;
    hi = std::max(hi, u[j]);
    lo = std::min(lo, u[j]);
  }
  u[i] = maximum ? hi + gap : lo - gap;
}

/// Mesh, discretization and system for one problem, kept alive together.
struct Setup {
  Setup(const std::string& problem, int nx, int ny, ElementKind kind = ElementKind::Q1)
      : spec(make_problem(problem)),
        mesh(std::make_unique<Mesh2D>(Mesh2D::structured(nx, ny, spec.domain, kind))),
        disc(std::make_unique<Discretization>(spec, *mesh)) {}

  StabilizedSystem system(const StabParams& p, double dt = 0.0,
                          const NodalField& u_old = {}) const {
    StabilizedSystem::Data d;
    d.forcing = disc->forcing(0.0);
    d.dirichlet = disc->dirichlet();
    d.dirichlet_values = disc->dirichlet_values(dt);
    d.dt = dt;
    d.u_old = u_old.empty() ? disc->initial() : u_old;
    return StabilizedSystem(*mesh, disc->convection(), p, std::move(d));
  }

  ProblemSpec spec;
  std::unique_ptr<Mesh2D> mesh;
  std::unique_ptr<Discretization> disc;
};

/// Smooth parameters scaled like the straight-discontinuity table runs.
inline StabParams smooth_params(double q, double eps, double beta = 1.0) {
  StabParams p;
  p.q = q;
  p.eps = eps;
  p.sigma = beta * eps * 1e-5;
  p.gamma = 1e-10;
  p.detector = DetectorKind::Smooth;
  p.beta_bound = beta;
  return p;
}

/// Column k of dT/du by Ridders' extrapolation of central differences, with
/// the best tableau entry kept separately for every row.
inline NodalField ridders_column(const ResidualSystem& sys, const NodalField& u, std::size_t k,
                                 double h0) {
  constexpr int ntab = 8;
  constexpr double con = 1.6, con2 = con * con;
  const std::size_t n = u.size();
  auto central = [&](double h) {
    NodalField up = u, um = u;
    up[k] += h;
    um[k] -= h;
    NodalField tp = sys.residual(up);
    const NodalField tm = sys.residual(um);
    for (std::size_t i = 0; i < n; ++i) tp[i] = (tp[i] - tm[i]) / (2.0 * h);
    return tp;
  };
  NodalField best(n, 0.0), err(n, INFINITY);
  std::vector<NodalField> prev{central(h0)}, cur;
  double h = h0;
  for (int j = 1; j < ntab; ++j) {
    h /= con;
    cur.assign(1, central(h));
    double fac = con2;
    for (int m = 1; m <= j; ++m) {
      NodalField next(n);
      for (std::size_t i = 0; i < n; ++i) {
        next[i] = (cur[m - 1][i] * fac - prev[m - 1][i]) / (fac - 1.0);
        const double e = std::max(std::abs(next[i] - cur[m - 1][i]), std::abs(next[i] - prev[m - 1][i]));
        if (e <= err[i]) {
          err[i] = e;
          best[i] = next[i];
        }
      }
      fac *= con2;
      cur.push_back(std::move(next));
    }
    prev = std::move(cur);
  }
  return best;
}

/// Largest entrywise deviation between the analytic Jacobian and extrapolated
/// central differences of the residual, relative to max(|J_ij|, floor * max|J|).
inline double jacobian_fd_error(const ResidualSystem& sys, const NodalField& u,
                                double step = 1e-3, double floor = 1e-6) {
  const SparseOperator J = sys.jacobian(u);
  const std::size_t n = u.size();
  std::vector<double> dense(n * n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const NodalField col = ridders_column(sys, u, k, step * std::max(1.0, std::abs(u[k])));
    for (std::size_t i = 0; i < n; ++i) dense[i * n + k] = col[i];
  }
  const double scale = std::max(J.max_abs(), 1e-300);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const double a = J(i, static_cast<int>(k));
      const double err = std::abs(a - dense[i * n + k]) / std::max(std::abs(a), floor * scale);
      worst = std::max(worst, err);
    }
  }
  return worst;
}

/// Per-step checks of a transient trajectory: max non-increasing, min
/// non-decreasing, every state within the bounds. Returns the worst excess.
inline double led_excess(const Trajectory& t, const AdmissibleBounds& b) {
  double worst = 0.0;
  for (std::size_t s = 0; s < t.times.size(); ++s) {
    worst = std::max({worst, t.max_values[s] - b.upper, b.lower - t.min_values[s]});
    if (s > 0) {
      worst = std::max({worst, t.max_values[s] - t.max_values[s - 1],
                        t.min_values[s - 1] - t.min_values[s]});
    }
  }
  return worst;
}

}  // namespace testing
