#include "dmpfem/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

namespace dmpfem {

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// ||a - b|| / ||a||, falling back to the absolute difference when a == 0.
double relative_change(std::span<const double> step, std::span<const double> next) {
  const double d = l2_norm(step);
  const double s = l2_norm(next);
  return s > 0.0 ? d / s : d;
}

std::pair<double, double> record_violation(std::span<const double> u,
                                           const std::optional<AdmissibleBounds>& bounds) {
  return bounds ? dmp_violation(u, *bounds) : std::pair<double, double>{0.0, 0.0};
}

}  // namespace

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void AdmissibleBounds::validate() const {
  if (!(lower <= upper)) throw std::invalid_argument("bounds: lower must not exceed upper");
}

void AndersonOptions::validate() const {
  if (m < 1) throw std::invalid_argument("anderson: m must be at least 1");
  if (!(omega_min > 0.0 && omega_min <= omega0 && omega0 <= 1.0)) {
    throw std::invalid_argument("anderson: need 0 < omega_min <= omega0 <= 1");
  }
  if (!(tol > 0.0)) throw std::invalid_argument("anderson: tol must be positive");
  if (k_max < 1) throw std::invalid_argument("anderson: k_max must be at least 1");
}

void NewtonOptions::validate() const {
  if (!(tol > 0.0)) throw std::invalid_argument("newton: tol must be positive");
  if (k_max < 1) throw std::invalid_argument("newton: k_max must be at least 1");
  if (!(ls_tol > 0.0 && ls_tol < 1.0)) throw std::invalid_argument("newton: ls_tol must be in (0, 1)");
}

struct LinearSolver::Impl {
  using Matrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;
  Eigen::SparseLU<Matrix, Eigen::COLAMDOrdering<int>> lu;
  std::shared_ptr<const SparsityPattern> analyzed;
};

LinearSolver::LinearSolver() : impl_(std::make_unique<Impl>()) {}
LinearSolver::~LinearSolver() = default;

std::optional<NodalField> LinearSolver::solve(const SparseOperator& A, std::span<const double> b) {
  if (b.size() != A.size()) throw std::invalid_argument("LinearSolver: size mismatch");
  const Impl::Matrix mat = A.to_eigen();
  if (impl_->analyzed != A.pattern_ptr()) {
    impl_->lu.analyzePattern(mat);
    impl_->analyzed = A.pattern_ptr();
  }
  impl_->lu.factorize(mat);
  if (impl_->lu.info() != Eigen::Success) return std::nullopt;
  const Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(b.size()));
  const Eigen::VectorXd x = impl_->lu.solve(rhs);
  if (impl_->lu.info() != Eigen::Success || !x.allFinite()) return std::nullopt;
  return NodalField(x.data(), x.data() + x.size());
}

std::vector<double> anderson_coefficients(const std::vector<NodalField>& residuals) {
  const std::size_t k = residuals.size();
  if (k == 0) throw std::invalid_argument("anderson_coefficients: empty history");
  if (k == 1) return {1.0};
  // xi_last = 1 - sum of the others: minimize ||r_last + D c||, D_i = r_i - r_last.
  const std::size_t n = residuals.back().size();
  Eigen::MatrixXd D(n, k - 1);
  Eigen::VectorXd rl(n);
  for (std::size_t r = 0; r < n; ++r) {
    rl(r) = residuals.back()[r];
    for (std::size_t c = 0; c + 1 < k; ++c) D(r, c) = residuals[c][r] - residuals.back()[r];
  }
  const Eigen::VectorXd c = D.colPivHouseholderQr().solve(-rl);
  std::vector<double> xi(k);
  double last = 1.0;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    xi[i] = std::isfinite(c(i)) ? c(i) : 0.0;
    last -= xi[i];
  }
  xi[k - 1] = last;
  return xi;
}

double log_slope(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double floor = std::numeric_limits<double>::min();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i);
    const double y = std::log10(std::max(values[i], floor));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

std::pair<double, double> dmp_violation(std::span<const double> u, const AdmissibleBounds& b) {
  if (u.empty()) return {0.0, 0.0};
  const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
  return {std::max(0.0, *hi - b.upper), std::max(0.0, b.lower - *lo)};
}

NodalField project_admissible(std::span<const double> u, const AdmissibleBounds& bounds) {
  bounds.validate();
  NodalField out(u.begin(), u.end());
  for (double& x : out) x = std::clamp(x, bounds.lower, bounds.upper);
  return out;
}

std::pair<NodalField, SolverReport> anderson_solve(const ResidualSystem& sys, NodalField u0,
                                                   const AndersonOptions& opts,
                                                   std::optional<AdmissibleBounds> bounds) {
  opts.validate();
  if (bounds) bounds->validate();
  if (opts.project && !bounds) throw std::invalid_argument("anderson: projection needs bounds");
  if (u0.size() != sys.size()) throw std::invalid_argument("anderson: initial guess has wrong length");

  SolverReport report;
  LinearSolver linear;
  NodalField u = std::move(u0);
  std::deque<NodalField> us, uts, rs;
  double omega = opts.omega0;
  double nlerr = opts.tol;
  const std::size_t n = u.size();

  for (int k = 1; nlerr >= opts.tol && k < opts.k_max; ++k) {
    const std::size_t mk = static_cast<std::size_t>(std::min(k, opts.m));
    const auto fp = sys.fixed_point(u);
    auto ut = linear.solve(fp.A, fp.G);
    if (!ut) {
      report.failure = "singular fixed-point operator at iteration " + std::to_string(k);
      return {std::move(u), std::move(report)};
    }
    NodalField r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = (*ut)[i] - u[i];
    us.push_back(u);
    uts.push_back(std::move(*ut));
    rs.push_back(std::move(r));
    while (us.size() > mk) {
      us.pop_front();
      uts.pop_front();
      rs.pop_front();
    }
    const std::vector<double> xi = anderson_coefficients({rs.begin(), rs.end()});

    NodalField next(n, 0.0);
    for (std::size_t h = 0; h < us.size(); ++h) {
      for (std::size_t i = 0; i < n; ++i) {
        next[i] += xi[h] * ((1.0 - omega) * us[h][i] + omega * uts[h][i]);
      }
    }
    if (opts.project) next = project_admissible(next, *bounds);
    if (!all_finite(next)) {
      report.failure = "non-finite iterate at iteration " + std::to_string(k);
      return {std::move(u), std::move(report)};
    }

    NodalField step(n);
    for (std::size_t i = 0; i < n; ++i) step[i] = next[i] - u[i];
    nlerr = relative_change(step, next);
    u = std::move(next);

    report.iterations = k;
    report.nlerr_history.push_back(nlerr);
    report.dmp_violation_history.push_back(record_violation(u, bounds));
    report.step_history.push_back(omega);

    // Relax further when the error decay over the window is flatter than s_min.
    const std::size_t w = std::min(report.nlerr_history.size(), mk + 1);
    const double s = log_slope(std::span<const double>(report.nlerr_history).last(w));
    if (w >= 2 && s > opts.s_min && omega > opts.omega_min + 1e-12) {
      omega = std::max(opts.omega_min, omega - 0.1);
    }
  }
  report.converged = nlerr < opts.tol;
  return {std::move(u), std::move(report)};
}

double golden_section(const std::function<double(double)>& phi, double tol) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = 0.0, b = 1.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = phi(c), fd = phi(d);
  double best_x = 1.0, best_f = phi(1.0);
  auto consider = [&](double x, double f) {
    if (f < best_f) {
      best_f = f;
      best_x = x;
    }
  };
  consider(c, fc);
  consider(d, fd);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = phi(c);
      consider(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = phi(d);
      consider(d, fd);
    }
  }
  return best_x;
}

double line_search(const ResidualSystem& sys, std::span<const double> u,
                   std::span<const double> du, double ls_tol) {
  NodalField trial(u.size());
  auto phi = [&](double xi) {
    for (std::size_t i = 0; i < u.size(); ++i) trial[i] = u[i] + xi * du[i];
    const double r = l2_norm(sys.residual(trial));
    return std::isfinite(r) ? r : std::numeric_limits<double>::infinity();
  };
  return golden_section(phi, ls_tol);
}

SparseOperator assemble_jacobian(const ResidualSystem& sys, std::span<const double> u) {
  return sys.jacobian(u);
}

std::pair<NodalField, SolverReport> newton_solve(const ResidualSystem& sys, NodalField u0,
                                                 const NewtonOptions& opts,
                                                 std::optional<AdmissibleBounds> bounds) {
  opts.validate();
  if (bounds) bounds->validate();
  if (opts.project && !bounds) throw std::invalid_argument("newton: projection needs bounds");
  if (u0.size() != sys.size()) throw std::invalid_argument("newton: initial guess has wrong length");

  SolverReport report;
  LinearSolver linear;
  NodalField u = std::move(u0);
  const std::size_t n = u.size();
  double nlerr = opts.tol;

  for (int k = 1; nlerr >= opts.tol && k < opts.k_max; ++k) {
    NodalField t = sys.residual(u);
    if (!all_finite(t)) {
      report.failure = "non-finite residual at iteration " + std::to_string(k);
      return {std::move(u), std::move(report)};
    }
    for (double& x : t) x = -x;
    const auto du = linear.solve(sys.jacobian(u), t);
    if (!du) {
      report.failure = "singular Jacobian at iteration " + std::to_string(k);
      return {std::move(u), std::move(report)};
    }
    const double xi = l2_norm(*du) > 0.0 ? line_search(sys, u, *du, opts.ls_tol) : 1.0;
    NodalField step(n);
    for (std::size_t i = 0; i < n; ++i) {
      step[i] = xi * (*du)[i];
      u[i] += step[i];
    }
    if (opts.project) u = project_admissible(u, *bounds);
    nlerr = relative_change(step, u);

    report.iterations = k;
    report.nlerr_history.push_back(nlerr);
    report.dmp_violation_history.push_back(record_violation(u, bounds));
    report.step_history.push_back(xi);
  }
  report.converged = nlerr < opts.tol;
  return {std::move(u), std::move(report)};
}

}  // namespace dmpfem
