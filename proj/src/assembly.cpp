#include "dmpfem/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <tuple>

namespace dmpfem {

namespace {

// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

// Reference rule: (xi, eta, weight) on [-1,1]^2 (Q1) or the unit triangle (P1).
std::vector<std::array<double, 3>> reference_rule(ElementKind kind, int n) {
  std::vector<std::array<double, 3>> rule;
  if (kind == ElementKind::Q1) {
    std::vector<double> x, w;
    gauss_legendre(n > 0 ? n : 2, x, w);
    for (std::size_t a = 0; a < x.size(); ++a) {
      for (std::size_t b = 0; b < x.size(); ++b) rule.push_back({x[a], x[b], w[a] * w[b]});
    }
    return rule;
  }
  if (n <= 0) {
    // Degree-2 rule, area of the reference triangle is 1/2.
    const double s = 1.0 / 6.0;
    return {{s, s, s}, {4.0 * s, s, s}, {s, 4.0 * s, s}};
  }
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  for (std::size_t a = 0; a < x.size(); ++a) {
    for (std::size_t b = 0; b < x.size(); ++b) {
      const double s = 0.5 * (x[a] + 1.0), t = 0.5 * (x[b] + 1.0);
      rule.push_back({s * (1.0 - t), t, 0.25 * w[a] * w[b] * (1.0 - t)});
    }
  }
  return rule;
}

constexpr std::array<double, 4> kQ1Xi{-1.0, 1.0, 1.0, -1.0};
constexpr std::array<double, 4> kQ1Eta{-1.0, -1.0, 1.0, 1.0};

struct RefShape {
  std::array<double, 4> phi{};
  std::array<Point2, 4> dref{};
};

RefShape reference_shape(ElementKind kind, double xi, double eta) {
  RefShape s;
  if (kind == ElementKind::P1) {
    s.phi = {1.0 - xi - eta, xi, eta, 0.0};
    s.dref = {Point2{-1.0, -1.0}, Point2{1.0, 0.0}, Point2{0.0, 1.0}, Point2{}};
    return s;
  }
  for (int a = 0; a < 4; ++a) {
    s.phi[a] = 0.25 * (1.0 + kQ1Xi[a] * xi) * (1.0 + kQ1Eta[a] * eta);
    s.dref[a] = {0.25 * kQ1Xi[a] * (1.0 + kQ1Eta[a] * eta),
                 0.25 * kQ1Eta[a] * (1.0 + kQ1Xi[a] * xi)};
  }
  return s;
}

}  // namespace

ElementQuadrature::ElementQuadrature(const Mesh2D& mesh, int points_per_direction) {
  const auto rule = reference_rule(mesh.kind(), points_per_direction);
  per_element_ = static_cast<int>(rule.size());
  const int npe = mesh.nodes_per_element();
  points_.reserve(rule.size() * mesh.num_elements());
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto en = mesh.element(static_cast<int>(e));
    for (const auto& [xi, eta, w] : rule) {
      const RefShape rs = reference_shape(mesh.kind(), xi, eta);
      // J = [dx/dxi dx/deta; dy/dxi dy/deta]
      double j11 = 0, j12 = 0, j21 = 0, j22 = 0;
      QuadraturePoint qp;
      for (int a = 0; a < npe; ++a) {
        const Point2 xa = mesh.node(en[a]);
        j11 += xa.x * rs.dref[a].x;
        j12 += xa.x * rs.dref[a].y;
        j21 += xa.y * rs.dref[a].x;
        j22 += xa.y * rs.dref[a].y;
        qp.x = qp.x + rs.phi[a] * xa;
      }
      const double det = j11 * j22 - j12 * j21;
      if (det <= 0.0) throw std::invalid_argument("ElementQuadrature: inverted element");
      qp.weight = w * det;
      qp.phi = rs.phi;
      for (int a = 0; a < npe; ++a) {
        // grad = J^{-T} dref
        const Point2 d = rs.dref[a];
        qp.grad[a] = {(j22 * d.x - j21 * d.y) / det, (-j12 * d.x + j11 * d.y) / det};
      }
      points_.push_back(qp);
    }
  }
}

std::array<double, 4> shape_values_at(const Mesh2D& mesh, int e, Point2 x) {
  const auto en = mesh.element(e);
  if (mesh.kind() == ElementKind::P1) {
    const Point2 a = mesh.node(en[0]), b = mesh.node(en[1]), c = mesh.node(en[2]);
    const double det = cross(b - a, c - a);
    const double l1 = cross(x - a, c - a) / det;
    const double l2 = cross(b - a, x - a) / det;
    return {1.0 - l1 - l2, l1, l2, 0.0};
  }
  // Newton iteration for the inverse bilinear map.
  double xi = 0.0, eta = 0.0;
  for (int it = 0; it < 50; ++it) {
    const RefShape rs = reference_shape(ElementKind::Q1, xi, eta);
    Point2 fx{};
    double j11 = 0, j12 = 0, j21 = 0, j22 = 0;
    for (int a = 0; a < 4; ++a) {
      const Point2 xa = mesh.node(en[a]);
      fx = fx + rs.phi[a] * xa;
      j11 += xa.x * rs.dref[a].x;
      j12 += xa.x * rs.dref[a].y;
      j21 += xa.y * rs.dref[a].x;
      j22 += xa.y * rs.dref[a].y;
    }
    const Point2 r = fx - x;
    const double det = j11 * j22 - j12 * j21;
    const double dxi = (j22 * r.x - j12 * r.y) / det;
    const double deta = (-j21 * r.x + j11 * r.y) / det;
    xi -= dxi;
    eta -= deta;
    if (std::abs(dxi) + std::abs(deta) < 1e-15) break;
  }
  return reference_shape(ElementKind::Q1, xi, eta).phi;
}

VelocityModel VelocityModel::constant(Point2 v) {
  VelocityModel m;
  m.velocity = [v](Point2, double) { return v; };
  m.state_derivative = [](Point2, double) { return Point2{}; };
  return m;
}

VelocityModel VelocityModel::field(std::function<Point2(Point2)> v) {
  VelocityModel m;
  m.velocity = [v = std::move(v)](Point2 x, double) { return v(x); };
  m.state_derivative = [](Point2, double) { return Point2{}; };
  return m;
}

VelocityModel VelocityModel::burgers(Point2 direction) {
  VelocityModel m;
  m.velocity = [direction](Point2, double w) { return (0.5 * w) * direction; };
  m.state_derivative = [direction](Point2, double) { return 0.5 * direction; };
  m.state_dependent = true;
  return m;
}

Point2 VelocityModel::group_velocity(Point2 x, double w) const {
  const Point2 v = velocity(x, w);
  if (!state_dependent) return v;
  return v + w * state_derivative(x, w);
}

Point2 VelocityModel::group_velocity_derivative(Point2 x, double w) const {
  if (!state_dependent) return {};
  return 2.0 * state_derivative(x, w);
}

NodalField interpolate(const Mesh2D& mesh, const std::function<double(Point2)>& f) {
  NodalField u(mesh.num_nodes());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = f(mesh.node(static_cast<int>(i)));
  return u;
}

SparseOperator assemble_mass(const Mesh2D& mesh) {
  const ElementQuadrature quad(mesh);
  SparseOperator m(SparsityPattern::adjacency(mesh));
  const int npe = mesh.nodes_per_element();
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto en = mesh.element(static_cast<int>(e));
    for (const auto& qp : quad.points(static_cast<int>(e))) {
      for (int a = 0; a < npe; ++a) {
        for (int b = 0; b < npe; ++b) m.add(en[a], en[b], qp.weight * qp.phi[a] * qp.phi[b]);
      }
    }
  }
  return m;
}

NodalField lumped_masses(const Mesh2D& mesh) {
  const ElementQuadrature quad(mesh);
  NodalField m(mesh.num_nodes(), 0.0);
  const int npe = mesh.nodes_per_element();
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto en = mesh.element(static_cast<int>(e));
    for (const auto& qp : quad.points(static_cast<int>(e))) {
      for (int a = 0; a < npe; ++a) m[en[a]] += qp.weight * qp.phi[a];
    }
  }
  return m;
}

NodalField assemble_forcing(const Mesh2D& mesh, const std::function<double(Point2)>& g) {
  const ElementQuadrature quad(mesh);
  NodalField out(mesh.num_nodes(), 0.0);
  const int npe = mesh.nodes_per_element();
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto en = mesh.element(static_cast<int>(e));
    for (const auto& qp : quad.points(static_cast<int>(e))) {
      const double gq = g(qp.x);
      for (int a = 0; a < npe; ++a) out[en[a]] += qp.weight * gq * qp.phi[a];
    }
  }
  return out;
}

SparseOperator assemble_convection(const Mesh2D& mesh, const VelocityModel& vel,
                                   std::span<const double> w) {
  const ElementQuadrature quad(mesh);
  const ConvectionOperator op(mesh, SparsityPattern::adjacency(mesh), quad, vel);
  return op.assemble(w);
}

double graph_seminorm(const Mesh2D& mesh, std::span<const double> w) {
  double s = 0.0;
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    for (int j : mesh.neighbors(static_cast<int>(i))) {
      const double d = w[i] - w[j];
      s += d * d;
    }
  }
  return std::sqrt(0.5 * s);
}

ConvectionOperator::ConvectionOperator(const Mesh2D& mesh,
                                       std::shared_ptr<const SparsityPattern> pattern,
                                       const ElementQuadrature& quad, VelocityModel vel)
    : mesh_(mesh), pattern_(std::move(pattern)), quad_(quad), vel_(std::move(vel)) {
  const int npe = mesh_.nodes_per_element();
  element_positions_.reserve(mesh_.num_elements() * npe * npe);
  for (std::size_t e = 0; e < mesh_.num_elements(); ++e) {
    const auto en = mesh_.element(static_cast<int>(e));
    for (int a = 0; a < npe; ++a) {
      for (int b = 0; b < npe; ++b) {
        const auto pos = pattern_->find(en[a], en[b]);
        if (pos < 0) throw std::invalid_argument("ConvectionOperator: pattern misses element pair");
        element_positions_.push_back(pos);
      }
    }
  }
  if (!vel_.state_dependent) {
    const NodalField zero(mesh_.num_nodes(), 0.0);
    fixed_.reset();
    fixed_ = assemble(zero);
  }
}

SparseOperator ConvectionOperator::assemble(std::span<const double> w) const {
  if (fixed_) return *fixed_;
  if (w.size() != mesh_.num_nodes()) {
    throw std::invalid_argument("ConvectionOperator::assemble: state has wrong length");
  }
  SparseOperator f(pattern_);
  auto& vals = f.values();
  const int npe = mesh_.nodes_per_element();
  for (std::size_t e = 0; e < mesh_.num_elements(); ++e) {
    const auto en = mesh_.element(static_cast<int>(e));
    const std::ptrdiff_t* pos = element_positions_.data() + e * npe * npe;
    for (const auto& qp : quad_.points(static_cast<int>(e))) {
      double wq = 0.0;
      for (int a = 0; a < npe; ++a) wq += qp.phi[a] * w[en[a]];
      const Point2 av = vel_.group_velocity(qp.x, wq);
      for (int a = 0; a < npe; ++a) {
        const double wa = qp.weight * qp.phi[a];
        for (int b = 0; b < npe; ++b) vals[pos[a * npe + b]] += wa * dot(av, qp.grad[b]);
      }
    }
  }
  return f;
}

ConvectionOperator::Gradient ConvectionOperator::state_gradient(std::span<const double> w) const {
  Gradient g;
  g.offsets.assign(pattern_->nnz() + 1, 0);
  if (!vel_.state_dependent) return g;
  const int npe = mesh_.nodes_per_element();
  std::vector<std::tuple<std::size_t, int, double>> trip;
  trip.reserve(mesh_.num_elements() * npe * npe * npe);
  std::vector<double> local(static_cast<std::size_t>(npe * npe * npe));
  for (std::size_t e = 0; e < mesh_.num_elements(); ++e) {
    const auto en = mesh_.element(static_cast<int>(e));
    const std::ptrdiff_t* pos = element_positions_.data() + e * npe * npe;
    std::fill(local.begin(), local.end(), 0.0);
    for (const auto& qp : quad_.points(static_cast<int>(e))) {
      double wq = 0.0;
      for (int a = 0; a < npe; ++a) wq += qp.phi[a] * w[en[a]];
      const Point2 da = vel_.group_velocity_derivative(qp.x, wq);
      for (int a = 0; a < npe; ++a) {
        for (int b = 0; b < npe; ++b) {
          const double ab = qp.weight * qp.phi[a] * dot(da, qp.grad[b]);
          for (int c = 0; c < npe; ++c) local[(a * npe + b) * npe + c] += ab * qp.phi[c];
        }
      }
    }
    for (int a = 0; a < npe; ++a) {
      for (int b = 0; b < npe; ++b) {
        for (int c = 0; c < npe; ++c) {
          trip.emplace_back(static_cast<std::size_t>(pos[a * npe + b]), en[c],
                            local[(a * npe + b) * npe + c]);
        }
      }
    }
  }
  std::sort(trip.begin(), trip.end(), [](const auto& l, const auto& r) {
    return std::tie(std::get<0>(l), std::get<1>(l)) < std::tie(std::get<0>(r), std::get<1>(r));
  });
  std::size_t idx = 0;
  for (std::size_t p = 0; p < pattern_->nnz(); ++p) {
    g.offsets[p] = g.nodes.size();
    for (; idx < trip.size() && std::get<0>(trip[idx]) == p; ++idx) {
      const int k = std::get<1>(trip[idx]);
      if (g.nodes.size() > g.offsets[p] && g.nodes.back() == k) {
        g.values.back() += std::get<2>(trip[idx]);
      } else {
        g.nodes.push_back(k);
        g.values.push_back(std::get<2>(trip[idx]));
      }
    }
  }
  g.offsets[pattern_->nnz()] = g.nodes.size();
  return g;
}

}  // namespace dmpfem
