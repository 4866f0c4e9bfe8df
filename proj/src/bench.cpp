#include "dmpfem/bench.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dmpfem/assembly.hpp"

namespace dmpfem {

namespace {

// Errors below this are treated as exact when computing rates.
constexpr double kErrorFloor = 1e-13;

}  // namespace

ErrorNorms error_norms(const Mesh2D& mesh, std::span<const double> u,
                       const std::function<double(Point2)>& exact, Region region,
                       const std::vector<char>& outflow, int points_per_direction) {
  if (!exact) throw std::invalid_argument("error_norms: no exact solution");
  if (u.size() != mesh.num_nodes()) throw std::invalid_argument("error_norms: field has wrong length");
  double l1 = 0.0, l2 = 0.0;
  if (region == Region::Omega) {
    const ElementQuadrature quad(mesh, points_per_direction);
    const int npe = mesh.nodes_per_element();
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
      const auto en = mesh.element(static_cast<int>(e));
      for (const auto& qp : quad.points(static_cast<int>(e))) {
        double uh = 0.0;
        for (int a = 0; a < npe; ++a) uh += qp.phi[a] * u[en[a]];
        const double d = std::abs(uh - exact(qp.x));
        l1 += qp.weight * d;
        l2 += qp.weight * d * d;
      }
    }
    return {l1, std::sqrt(l2)};
  }
  const auto& edges = mesh.boundary_edges();
  if (outflow.size() != edges.size()) {
    throw std::invalid_argument("error_norms: outflow mask must have one entry per boundary edge");
  }
  const double g = std::sqrt(0.15);
  const double t[3] = {0.5 - g, 0.5, 0.5 + g};
  const double w[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!outflow[e]) continue;
    const Point2 a = mesh.node(edges[e].a), b = mesh.node(edges[e].b);
    for (int q = 0; q < 3; ++q) {
      const double uh = (1.0 - t[q]) * u[edges[e].a] + t[q] * u[edges[e].b];
      const double d = std::abs(uh - exact(a + t[q] * (b - a)));
      l1 += w[q] * edges[e].length * d;
      l2 += w[q] * edges[e].length * d * d;
    }
  }
  return {l1, std::sqrt(l2)};
}

std::vector<char> outflow_edges(const Mesh2D& mesh, const ProblemSpec& spec) {
  auto mask = inflow_edges(mesh, spec);
  for (char& c : mask) c = c ? 0 : 1;
  return mask;
}

ErrorNorms error_norms(const Discretization& disc, std::span<const double> u, Region region) {
  if (!disc.spec().exact) {
    throw std::invalid_argument("error_norms: problem " + disc.spec().name +
                                " has no exact solution");
  }
  const auto mask = region == Region::Outflow ? outflow_edges(disc.mesh(), disc.spec())
                                              : std::vector<char>{};
  return error_norms(disc.mesh(), u, *disc.spec().exact, region, mask);
}

double region_measure(const Mesh2D& mesh, Region region, const std::vector<char>& outflow) {
  if (region == Region::Omega) return mesh.area();
  double len = 0.0;
  const auto& edges = mesh.boundary_edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (e < outflow.size() && outflow[e]) len += edges[e].length;
  }
  return len;
}

std::vector<ConvergenceRow> convergence_study(const ProblemSpec& spec, ElementKind kind,
                                              const std::vector<int>& sizes,
                                              const std::function<TimeConfig(double)>& cfg_for_h) {
  if (!spec.exact) throw std::invalid_argument("convergence_study: no exact solution");
  std::vector<ConvergenceRow> rows;
  for (int n : sizes) {
    const Mesh2D mesh = Mesh2D::structured(n, n, spec.domain, kind);
    const Discretization disc(spec, mesh);
    ConvergenceRow row;
    row.n = n;
    row.h = 1.0 / n;
    auto [u, report] = run_steady(disc, cfg_for_h(row.h));
    row.l2 = error_norms(disc, u, Region::Omega).l2;
    row.report = std::move(report);
    row.eoc = std::numeric_limits<double>::quiet_NaN();
    if (!rows.empty()) {
      const auto& prev = rows.back();
      if (prev.l2 > kErrorFloor && row.l2 > kErrorFloor) {
        row.eoc = std::log(prev.l2 / row.l2) / std::log(prev.h / row.h);
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::pair<double, double> dmp_audit(std::span<const double> u, const AdmissibleBounds& bounds) {
  bounds.validate();
  return dmp_violation(u, bounds);
}

std::vector<int> local_dmp_audit(const Mesh2D& mesh, std::span<const double> u, double tol,
                                 const std::vector<char>& skip) {
  std::vector<int> bad;
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    const int ii = static_cast<int>(i);
    if (mesh.is_boundary(ii) || (i < skip.size() && skip[i])) continue;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int j : mesh.neighbors(ii)) {
      if (j == ii) continue;
      lo = std::min(lo, u[j]);
      hi = std::max(hi, u[j]);
    }
    if (u[i] > hi + tol || u[i] < lo - tol) bad.push_back(ii);
  }
  return bad;
}

double dissipation(const Mesh2D& mesh, const SparseOperator& nu, std::span<const double> u) {
  if (nu.size() != mesh.num_nodes()) throw std::invalid_argument("dissipation: size mismatch");
  const auto& pat = nu.pattern();
  double s = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    for (std::size_t p = pat.row_begin(i); p < pat.row_end(i); ++p) {
      const int j = pat.col(p);
      if (j == static_cast<int>(i)) continue;
      const double d = u[i] - u[j];
      s += nu.value_at(p) * d * d;
    }
  }
  return s;
}

}  // namespace dmpfem
