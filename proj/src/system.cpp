#include <cmath>
#include <stdexcept>

#include "dmpfem/solvers.hpp"

namespace dmpfem {

StabilizedSystem::StabilizedSystem(const Mesh2D& mesh, const ConvectionOperator& convection,
                                   const StabParams& params, Data data)
    : mesh_(mesh),
      conv_(convection),
      params_(params),
      data_(std::move(data)),
      detector_(mesh, params),
      lumped_(lumped_masses(mesh)) {
  const std::size_t n = mesh.num_nodes();
  if (data_.dt < 0.0) throw std::invalid_argument("StabilizedSystem: dt must be non-negative");
  if (data_.forcing.empty()) data_.forcing.assign(n, 0.0);
  if (data_.dirichlet.empty()) data_.dirichlet.assign(n, 0);
  if (data_.dirichlet_values.empty()) data_.dirichlet_values.assign(n, 0.0);
  if (data_.forcing.size() != n || data_.dirichlet.size() != n ||
      data_.dirichlet_values.size() != n) {
    throw std::invalid_argument("StabilizedSystem: data length does not match the mesh");
  }
  if (!steady() && data_.u_old.size() != n) {
    throw std::invalid_argument("StabilizedSystem: transient system needs u_old");
  }

  const SparseOperator m = assemble_mass(mesh);
  if (!(m.pattern() == *conv_.pattern())) {
    throw std::invalid_argument("StabilizedSystem: convection pattern must be the adjacency");
  }
  mass_ = SparseOperator(conv_.pattern());
  mass_.values() = m.values();
  wide_ = SparsityPattern::distance_two(mesh);

  NodalField rhs = data_.forcing;
  if (!steady()) {
    const NodalField mu = mass_.multiply(data_.u_old);
    for (std::size_t i = 0; i < n; ++i) rhs[i] += mu[i] / data_.dt;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (data_.dirichlet[i]) rhs[i] = data_.dirichlet_values[i];
  }
  reference_norm_ = l2_norm(rhs);
  if (reference_norm_ == 0.0) reference_norm_ = 1.0;
}

SparseOperator StabilizedSystem::viscosity_at(std::span<const double>,
                                              std::span<const double> alpha,
                                              const SparseOperator& F) const {
  if (!steady() && params_.mass == MassKind::SymmetricMass) {
    return viscosity_symmetric_mass(mesh_, F, mass_, alpha, data_.dt, params_);
  }
  return viscosity(mesh_, F, alpha, params_);
}

NodalField StabilizedSystem::alphas(std::span<const double> u) const {
  NodalField alpha = detector_.evaluate(u);
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (data_.dirichlet[i]) alpha[i] = 0.0;
  }
  return alpha;
}

NodalField StabilizedSystem::residual(std::span<const double> u) const {
  const std::size_t n = size();
  if (u.size() != n) throw std::invalid_argument("residual: state has wrong length");
  const NodalField alpha = alphas(u);
  const SparseOperator F = conv_.assemble(u);
  const SparseOperator nu = viscosity_at(u, alpha, F);
  const auto& pat = F.pattern();
  const bool gradual = params_.mass == MassKind::GradualLumping;
  NodalField t(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (data_.dirichlet[i]) {
      t[i] = u[i] - data_.dirichlet_values[i];
      continue;
    }
    double ti = -data_.forcing[i];
    double md = 0.0;
    for (std::size_t p = pat.row_begin(i); p < pat.row_end(i); ++p) {
      const int j = pat.col(p);
      ti += F.value_at(p) * u[j];
      if (j != static_cast<int>(i)) ti += nu.value_at(p) * (u[i] - u[j]);
      if (!steady()) md += mass_.value_at(p) * (u[j] - data_.u_old[j]);
    }
    if (!steady()) {
      if (gradual) {
        const double di = u[i] - data_.u_old[i];
        ti += ((1.0 - alpha[i]) * md + alpha[i] * lumped_[i] * di) / data_.dt;
      } else {
        ti += md / data_.dt;
      }
    }
    t[i] = ti;
  }
  return t;
}

ResidualSystem::FixedPoint StabilizedSystem::fixed_point(std::span<const double> u) const {
  const std::size_t n = size();
  if (u.size() != n) throw std::invalid_argument("fixed_point: state has wrong length");
  const NodalField alpha = alphas(u);
  SparseOperator A = conv_.assemble(u);
  const SparseOperator nu = viscosity_at(u, alpha, A);
  A += assemble_B(mesh_, nu);
  NodalField G = data_.forcing;
  const auto& pat = A.pattern();
  if (!steady()) {
    const bool gradual = params_.mass == MassKind::GradualLumping;
    const SparseOperator Mu =
        gradual ? assemble_nonlinear_mass(mesh_, mass_, lumped_, alpha) : mass_;
    const NodalField mu = Mu.multiply(data_.u_old);
    for (std::size_t p = 0; p < pat.nnz(); ++p) A.values()[p] += Mu.value_at(p) / data_.dt;
    for (std::size_t i = 0; i < n; ++i) G[i] += mu[i] / data_.dt;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!data_.dirichlet[i]) continue;
    A.set_identity_row(i);
    G[i] = data_.dirichlet_values[i];
  }
  return {std::move(A), std::move(G)};
}

SparseOperator StabilizedSystem::jacobian(std::span<const double> u) const {
  const DetectorKind kind = params_.detector;
  if (kind == DetectorKind::Nonsmooth || kind == DetectorKind::Simplified) {
    throw UnsupportedVariant("jacobian: non-smooth stabilization is not differentiable");
  }
  const std::size_t n = size();
  if (u.size() != n) throw std::invalid_argument("jacobian: state has wrong length");

  const SparseOperator F = conv_.assemble(u);
  const auto& pat = F.pattern();
  const bool state_dep = conv_.state_dependent();
  const ConvectionOperator::Gradient dF =
      state_dep ? conv_.state_gradient(u) : ConvectionOperator::Gradient{};

  // alpha_j and d alpha_j / d u_k, stored on the adjacency positions of row j.
  NodalField alpha(n, 0.0);
  std::vector<double> dalpha(pat.nnz(), 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    std::span<double> g(dalpha.data() + pat.row_begin(j), pat.row_end(j) - pat.row_begin(j));
    if (data_.dirichlet[j]) continue;
    alpha[j] = detector_.value_and_gradient(static_cast<int>(j), u, g);
  }
  const SparseOperator nu = viscosity_at(u, alpha, F);

  SparseOperator J(wide_);
  auto& jv = J.values();
  auto add = [&](std::size_t i, int k, double v) {
    const auto pos = wide_->find(i, k);
    if (pos < 0) throw std::logic_error("jacobian: entry outside the distance-two pattern");
    jv[pos] += v;
  };

  const bool transient = !steady();
  const bool gradual = params_.mass == MassKind::GradualLumping;
  const bool sym_mass = transient && !gradual;
  const bool stabilized = kind != DetectorKind::None;
  const double dt = data_.dt;
  const double sigma = params_.sigma;

  // Adds c * d(alpha_r X_rs)/du_k with X constant or F; r, s adjacent.
  auto add_product = [&](std::size_t i, std::size_t r, std::size_t ps, double x, double c,
                         bool with_dF) {
    if (c == 0.0) return;
    const auto nb = mesh_.neighbors(static_cast<int>(r));
    const std::size_t b = pat.row_begin(r);
    for (std::size_t s = 0; s < nb.size(); ++s) {
      if (dalpha[b + s] != 0.0) add(i, nb[s], c * x * dalpha[b + s]);
    }
    if (with_dF && state_dep) {
      for (std::size_t e = dF.offsets[ps]; e < dF.offsets[ps + 1]; ++e) {
        add(i, dF.nodes[e], c * alpha[r] * dF.values[e]);
      }
    }
  };

  for (std::size_t i = 0; i < n; ++i) {
    if (data_.dirichlet[i]) {
      add(i, static_cast<int>(i), 1.0);
      continue;
    }
    const int ii = static_cast<int>(i);
    const auto nb = mesh_.neighbors(ii);
    double md = 0.0;
    for (std::size_t p = pat.row_begin(i); p < pat.row_end(i); ++p) {
      const int j = pat.col(p);
      // Convection: F_ij + sum_j dF_ij/du_k u_j.
      add(i, j, F.value_at(p));
      if (state_dep) {
        for (std::size_t e = dF.offsets[p]; e < dF.offsets[p + 1]; ++e) {
          add(i, dF.nodes[e], dF.values[e] * u[j]);
        }
      }
      if (transient) {
        md += mass_.value_at(p) * (u[j] - data_.u_old[j]);
        const double mik = gradual ? (1.0 - alpha[i]) * mass_.value_at(p) : mass_.value_at(p);
        add(i, j, mik / dt);
      }
      if (j == ii) continue;
      // Viscosity: nu_ij (delta_ik - delta_jk).
      add(i, ii, nu.value_at(p));
      add(i, j, -nu.value_at(p));
      if (!stabilized) continue;
      const double diff = u[i] - u[j];
      const auto pji = static_cast<std::size_t>(pat.find(static_cast<std::size_t>(j), ii));
      {
        const double a = alpha[i] * F.value_at(p);
        const double b = alpha[j] * F.value_at(pji);
        const auto [s1, s2] = smooth_max_gradient(a, b, sigma);
        const double s0 = smooth_max_gradient(smooth_max(a, b, sigma), 0.0, sigma).first;
        add_product(i, i, p, F.value_at(p), diff * s0 * s1, true);
        add_product(i, static_cast<std::size_t>(j), pji, F.value_at(pji), diff * s0 * s2, true);
      }
      if (sym_mass) {
        const double mij = mass_.value_at(p) / dt;
        const double mji = mass_.value_at(pji) / dt;
        const double a = alpha[i] * mij;
        const double b = alpha[j] * mji;
        const auto [s1, s2] = smooth_max_gradient(a, b, sigma);
        const double s0 = smooth_max_gradient(smooth_max(a, b, sigma), 0.0, sigma).first;
        add_product(i, i, p, mij, diff * s0 * s1, false);
        add_product(i, static_cast<std::size_t>(j), pji, mji, diff * s0 * s2, false);
      }
    }
    if (transient && gradual) {
      const double di = u[i] - data_.u_old[i];
      add(i, ii, alpha[i] * lumped_[i] / dt);
      if (!freeze_mass_alpha_) {
        const double c = (lumped_[i] * di - md) / dt;
        const std::size_t b = pat.row_begin(i);
        for (std::size_t s = 0; s < nb.size(); ++s) add(i, nb[s], c * dalpha[b + s]);
      }
    }
  }
  return J;
}

}  // namespace dmpfem
