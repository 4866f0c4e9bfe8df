#include "dmpfem/stabilization.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dmpfem {

namespace {

// Denominators below this are treated as exactly zero.
constexpr double kZeroDenominator = 1e-300;

bool uses_symmetric_points(DetectorKind k) {
  return k == DetectorKind::Nonsmooth || k == DetectorKind::Smooth;
}

}  // namespace

void StabParams::validate() const {
  if (!(q > 0.0)) throw std::invalid_argument("q must be positive");
  if (!(eps >= 0.0)) throw std::invalid_argument("eps must be non-negative");
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be non-negative");
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be non-negative");
  if (!(beta_bound >= 0.0)) throw std::invalid_argument("beta_bound must be non-negative");
  if (smooth() && eps == 0.0 && gamma == 0.0) {
    throw std::invalid_argument("smooth detectors need eps > 0 or gamma > 0");
  }
}

double smooth_abs_upper(double x, double eps) { return std::sqrt(x * x + eps); }

double smooth_abs_upper_derivative(double x, double eps) {
  const double r = std::sqrt(x * x + eps);
  return r > 0.0 ? x / r : 0.0;
}

double smooth_abs_lower(double x, double eps) {
  const double r = std::sqrt(x * x + eps);
  return r > 0.0 ? x * x / r : 0.0;
}

double smooth_abs_lower_derivative(double x, double eps) {
  const double s = x * x + eps;
  if (s <= 0.0) return 0.0;
  return x * (x * x + 2.0 * eps) / (s * std::sqrt(s));
}

double smooth_max(double x, double y, double sigma) {
  return 0.5 * (std::sqrt((x - y) * (x - y) + sigma) + x + y);
}

std::pair<double, double> smooth_max_gradient(double x, double y, double sigma) {
  const double r = std::sqrt((x - y) * (x - y) + sigma);
  const double t = r > 0.0 ? (x - y) / r : 0.0;
  return {0.5 * (1.0 + t), 0.5 * (1.0 - t)};
}

double limiter_f(double x) {
  if (x >= 1.0) return 1.0;
  return ((2.0 * x - 5.0) * x + 3.0) * x * x + x;
}

double limiter_f_derivative(double x) {
  if (x >= 1.0) return 0.0;
  // (x - 1)^2 (8x + 1)
  return (x - 1.0) * (x - 1.0) * (8.0 * x + 1.0);
}

double jump(const Mesh2D& mesh, std::span<const double> u, int i, int j) {
  const SymmetricPoint& s = mesh.symmetric_of(i, j);
  double value = (u[j] - u[i]) / norm(mesh.node(j) - mesh.node(i));
  if (const auto us = symmetric_value(mesh, u, i, j)) value += (*us - u[i]) / s.distance;
  return value;
}

double mean_abs(const Mesh2D& mesh, std::span<const double> u, int i, int j) {
  const SymmetricPoint& s = mesh.symmetric_of(i, j);
  double value = std::abs(u[j] - u[i]) / norm(mesh.node(j) - mesh.node(i));
  if (const auto us = symmetric_value(mesh, u, i, j)) value += std::abs(*us - u[i]) / s.distance;
  return 0.5 * value;
}

ShockDetector::ShockDetector(const Mesh2D& mesh, const StabParams& params)
    : mesh_(mesh), params_(params) {
  params_.validate();
  eps_ = params_.eps;
  gamma_ = params_.gamma;
  if (params_.detector == DetectorKind::SimplifiedSmooth) {
    const double h = mesh.mean_edge_length();
    eps_ = h * h * params_.eps;
    gamma_ = h * params_.gamma;
  }
  const bool with_sym = uses_symmetric_points(params_.detector);
  term_offsets_.assign(mesh.num_nodes() + 1, 0);
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    const int ii = static_cast<int>(i);
    const auto nb = mesh.neighbors(ii);
    const int self = mesh.neighbor_slot(ii, ii);
    for (std::size_t slot = 0; slot < nb.size(); ++slot) {
      const int j = nb[slot];
      if (j == ii) continue;
      if (!with_sym) {
        // u_i - u_j
        const std::size_t b = coefs_.size();
        coefs_.push_back({self, 1.0});
        coefs_.push_back({static_cast<int>(slot), -1.0});
        terms_.push_back({1.0, b, coefs_.size()});
        continue;
      }
      std::size_t b = coefs_.size();
      coefs_.push_back({static_cast<int>(slot), 1.0});
      coefs_.push_back({self, -1.0});
      terms_.push_back({1.0 / norm(mesh.node(j) - mesh.node(ii)), b, coefs_.size()});
      const SymmetricPoint& s = mesh.symmetric(ii, static_cast<int>(slot));
      if (s.kind == SymmetricPoint::Kind::Absent) continue;
      b = coefs_.size();
      if (s.kind == SymmetricPoint::Kind::Node) {
        coefs_.push_back({mesh.neighbor_slot(ii, s.node), 1.0});
      } else {
        coefs_.push_back({mesh.neighbor_slot(ii, s.edge_a), 1.0 - s.weight});
        coefs_.push_back({mesh.neighbor_slot(ii, s.edge_b), s.weight});
      }
      coefs_.push_back({self, -1.0});
      terms_.push_back({1.0 / s.distance, b, coefs_.size()});
    }
    term_offsets_[i + 1] = terms_.size();
  }
}

double ShockDetector::eval(int i, std::span<const double> u, std::span<double> grad) const {
  const DetectorKind kind = params_.detector;
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
  if (kind == DetectorKind::None) return 0.0;

  const auto nb = mesh_.neighbors(i);
  const bool smooth = params_.smooth();
  double numer = 0.0;  // sum of signed differences (the jump sum)
  double denom = 0.0;  // sum of (smoothed) absolute differences
  for (std::size_t t = term_offsets_[i]; t < term_offsets_[i + 1]; ++t) {
    const Term& term = terms_[t];
    double delta = 0.0;
    for (std::size_t c = term.coef_begin; c < term.coef_end; ++c) {
      delta += coefs_[c].second * u[nb[coefs_[c].first]];
    }
    const double d = term.weight * delta;
    numer += d;
    denom += smooth ? smooth_abs_lower(d, eps_) : std::abs(d);
  }

  if (!smooth) {
    if (denom < kZeroDenominator) return 0.0;
    const double ratio = std::clamp(std::abs(numer) / denom, 0.0, 1.0);
    return std::pow(ratio, params_.q);
  }

  const double top = smooth_abs_upper(numer, eps_) + gamma_;
  const double bottom = denom + gamma_;
  if (!(bottom > 0.0)) return 1.0;  // constant field with gamma = 0: ratio is +inf
  const double ratio = top / bottom;
  const double f = limiter_f(ratio);
  const double alpha = std::pow(f, params_.q);
  if (!want_grad || ratio >= 1.0) return alpha;

  // d alpha = q f^(q-1) f'(R) dR, dR = (dtop * bottom - top * dbottom) / bottom^2
  const double dalpha_dratio = params_.q * std::pow(f, params_.q - 1.0) * limiter_f_derivative(ratio);
  const double dtop_dnumer = smooth_abs_upper_derivative(numer, eps_);
  const double ctop = dalpha_dratio * dtop_dnumer / bottom;
  const double cbottom = -dalpha_dratio * top / (bottom * bottom);
  for (std::size_t t = term_offsets_[i]; t < term_offsets_[i + 1]; ++t) {
    const Term& term = terms_[t];
    double delta = 0.0;
    for (std::size_t c = term.coef_begin; c < term.coef_end; ++c) {
      delta += coefs_[c].second * u[nb[coefs_[c].first]];
    }
    const double d = term.weight * delta;
    const double scale = term.weight * (ctop + cbottom * smooth_abs_lower_derivative(d, eps_));
    for (std::size_t c = term.coef_begin; c < term.coef_end; ++c) {
      grad[coefs_[c].first] += scale * coefs_[c].second;
    }
  }
  return alpha;
}

double ShockDetector::value(int i, std::span<const double> u) const { return eval(i, u, {}); }

double ShockDetector::value_and_gradient(int i, std::span<const double> u,
                                         std::span<double> grad) const {
  if (params_.detector == DetectorKind::Nonsmooth || params_.detector == DetectorKind::Simplified) {
    throw std::logic_error("ShockDetector: non-smooth detectors have no derivative");
  }
  if (grad.size() != mesh_.neighbors(i).size()) {
    throw std::invalid_argument("ShockDetector: gradient buffer must match |N_i|");
  }
  return eval(i, u, grad);
}

NodalField ShockDetector::evaluate(std::span<const double> u) const {
  if (u.size() != mesh_.num_nodes()) {
    throw std::invalid_argument("ShockDetector::evaluate: field has wrong length");
  }
  NodalField alpha(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) alpha[i] = eval(static_cast<int>(i), u, {});
  return alpha;
}

namespace {

double detector_with(const Mesh2D& mesh, std::span<const double> u, int i, StabParams params,
                     DetectorKind kind) {
  params.detector = kind;
  return ShockDetector(mesh, params).value(i, u);
}

}  // namespace

double detector_nonsmooth(const Mesh2D& mesh, std::span<const double> u, int i,
                          const StabParams& params) {
  return detector_with(mesh, u, i, params, DetectorKind::Nonsmooth);
}

double detector_simplified(const Mesh2D& mesh, std::span<const double> u, int i,
                           const StabParams& params) {
  return detector_with(mesh, u, i, params, DetectorKind::Simplified);
}

double detector_smooth(const Mesh2D& mesh, std::span<const double> u, int i,
                       const StabParams& params) {
  return detector_with(mesh, u, i, params, DetectorKind::Smooth);
}

double detector_simplified_smooth(const Mesh2D& mesh, std::span<const double> u, int i,
                                  const StabParams& params) {
  return detector_with(mesh, u, i, params, DetectorKind::SimplifiedSmooth);
}

double combine_viscosity(double a, double b, const StabParams& params) {
  if (params.smooth()) return smooth_max(smooth_max(a, b, params.sigma), 0.0, params.sigma);
  return std::max({a, b, 0.0});
}

namespace {

void check_operator(const Mesh2D& mesh, const SparseOperator& op, const char* what) {
  if (op.size() != mesh.num_nodes()) {
    throw std::invalid_argument(std::string(what) + ": dimension does not match the mesh");
  }
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    const auto row = op.pattern().row(i);
    const auto nb = mesh.neighbors(static_cast<int>(i));
    if (!std::equal(row.begin(), row.end(), nb.begin(), nb.end())) {
      throw std::invalid_argument(std::string(what) + ": sparsity differs from mesh adjacency");
    }
  }
}

void fill_diagonal_from_rows(SparseOperator& nu) {
  const auto& pat = nu.pattern();
  auto& v = nu.values();
  for (std::size_t i = 0; i < nu.size(); ++i) {
    double s = 0.0;
    std::size_t diag = 0;
    for (std::size_t p = pat.row_begin(i); p < pat.row_end(i); ++p) {
      if (pat.col(p) == static_cast<int>(i)) {
        diag = p;
      } else {
        s += v[p];
      }
    }
    v[diag] = s;
  }
}

}  // namespace

SparseOperator viscosity(const Mesh2D& mesh, const SparseOperator& convection,
                         std::span<const double> alphas, const StabParams& params) {
  check_operator(mesh, convection, "viscosity");
  SparseOperator nu(convection.pattern_ptr());
  if (params.detector == DetectorKind::None) return nu;
  const auto& pat = convection.pattern();
  for (std::size_t i = 0; i < nu.size(); ++i) {
    for (std::size_t p = pat.row_begin(i); p < pat.row_end(i); ++p) {
      const int j = pat.col(p);
      if (j == static_cast<int>(i)) continue;
      nu.values()[p] = combine_viscosity(alphas[i] * convection.value_at(p),
                                         alphas[j] * convection(j, static_cast<int>(i)), params);
    }
  }
  fill_diagonal_from_rows(nu);
  return nu;
}

SparseOperator viscosity_symmetric_mass(const Mesh2D& mesh, const SparseOperator& convection,
                                        const SparseOperator& mass, std::span<const double> alphas,
                                        double dt, const StabParams& params) {
  if (!(dt > 0.0)) throw std::invalid_argument("viscosity_symmetric_mass: dt must be positive");
  check_operator(mesh, mass, "viscosity_symmetric_mass");
  SparseOperator nu = viscosity(mesh, convection, alphas, params);
  if (params.detector == DetectorKind::None) return nu;
  const auto& pat = nu.pattern();
  for (std::size_t i = 0; i < nu.size(); ++i) {
    for (std::size_t p = pat.row_begin(i); p < pat.row_end(i); ++p) {
      const int j = pat.col(p);
      if (j == static_cast<int>(i)) continue;
      nu.values()[p] += combine_viscosity(alphas[i] * mass.value_at(p) / dt,
                                          alphas[j] * mass(j, static_cast<int>(i)) / dt, params);
    }
  }
  fill_diagonal_from_rows(nu);
  return nu;
}

SparseOperator assemble_B(const Mesh2D& mesh, const SparseOperator& nu) {
  check_operator(mesh, nu, "assemble_B");
  SparseOperator b(nu.pattern_ptr());
  const auto& pat = nu.pattern();
  for (std::size_t i = 0; i < nu.size(); ++i) {
    for (std::size_t p = pat.row_begin(i); p < pat.row_end(i); ++p) {
      b.values()[p] = pat.col(p) == static_cast<int>(i) ? nu.value_at(p) : -nu.value_at(p);
    }
  }
  return b;
}

SparseOperator assemble_nonlinear_mass(const Mesh2D& mesh, const SparseOperator& mass,
                                       std::span<const double> lumped,
                                       std::span<const double> alphas) {
  check_operator(mesh, mass, "assemble_nonlinear_mass");
  SparseOperator m(mass.pattern_ptr());
  const auto& pat = mass.pattern();
  for (std::size_t i = 0; i < mass.size(); ++i) {
    const double a = alphas[i];
    for (std::size_t p = pat.row_begin(i); p < pat.row_end(i); ++p) {
      const double lump = pat.col(p) == static_cast<int>(i) ? lumped[i] : 0.0;
      m.values()[p] = (1.0 - a) * mass.value_at(p) + a * lump;
    }
  }
  return m;
}

}  // namespace dmpfem
