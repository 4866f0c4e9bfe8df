#include "dmpfem/timeloop.hpp"

#include <algorithm>
#include <cmath>

namespace dmpfem {

void TimeConfig::validate() const {
  stab.validate();
  if (!steady) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (!(t_end >= dt)) throw std::invalid_argument("t_end must be at least dt");
  }
  if (solver == SolverChoice::Anderson) anderson.validate();
  if (solver == SolverChoice::Newton) newton.validate();
}

Discretization::Discretization(const ProblemSpec& spec, const Mesh2D& mesh)
    : spec_(spec),
      mesh_(mesh),
      quad_(mesh),
      conv_(mesh, SparsityPattern::adjacency(mesh), quad_, spec.velocity),
      dirichlet_(dirichlet_nodes(mesh, spec)) {}

NodalField Discretization::initial() const {
  if (!spec_.initial) return NodalField(mesh_.num_nodes(), 0.0);
  return interpolate(mesh_, spec_.initial);
}

NodalField Discretization::dirichlet_values(double t) const {
  NodalField v(mesh_.num_nodes(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (dirichlet_[i]) v[i] = spec_.inflow(mesh_.node(static_cast<int>(i)), t);
  }
  return v;
}

NodalField Discretization::forcing(double t) const {
  if (!spec_.forcing) return NodalField(mesh_.num_nodes(), 0.0);
  return assemble_forcing(mesh_, [&](Point2 x) { return spec_.forcing(x, t); });
}

AdmissibleBounds Discretization::bounds(bool steady) const {
  double lo = INFINITY, hi = -INFINITY;
  const NodalField ud = dirichlet_values(0.0);
  for (std::size_t i = 0; i < ud.size(); ++i) {
    if (!dirichlet_[i]) continue;
    lo = std::min(lo, ud[i]);
    hi = std::max(hi, ud[i]);
  }
  if (!steady) {
    for (double x : initial()) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  if (lo > hi) lo = hi = 0.0;
  return {lo, hi};
}

std::pair<NodalField, SolverReport> solve_system(const StabilizedSystem& sys, NodalField guess,
                                                 const TimeConfig& cfg,
                                                 const AdmissibleBounds& bounds) {
  if (cfg.solver == SolverChoice::Newton) {
    NewtonOptions o = cfg.newton;
    o.project = cfg.projection;
    return newton_solve(sys, std::move(guess), o, bounds);
  }
  AndersonOptions o = cfg.anderson;
  o.project = cfg.projection;
  return anderson_solve(sys, std::move(guess), o, bounds);
}

namespace {

std::pair<NodalField, SolverReport> solve_or_throw(const Discretization& disc,
                                                   StabilizedSystem::Data data,
                                                   const TimeConfig& cfg, NodalField guess,
                                                   const AdmissibleBounds& bounds, int step) {
  StabilizedSystem sys(disc.mesh(), disc.convection(), cfg.stab, std::move(data));
  sys.set_freeze_mass_alpha(cfg.freeze_mass_alpha);
  auto result = solve_system(sys, std::move(guess), cfg, bounds);
  if (!result.second.failure.empty()) {
    throw SolverFailure("step " + std::to_string(step) + ": " + result.second.failure, step);
  }
  return result;
}

}  // namespace

std::pair<NodalField, SolverReport> step_backward_euler(const Discretization& disc,
                                                        const NodalField& u_old, double t_next,
                                                        const TimeConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!std::all_of(u_old.begin(), u_old.end(), [](double x) { return std::isfinite(x); })) {
    throw std::invalid_argument("step_backward_euler: u_old is not finite");
  }
  StabilizedSystem::Data data{disc.forcing(t_next), disc.dirichlet(),
                              disc.dirichlet_values(t_next), cfg.dt, u_old};
  NodalField guess = u_old;
  for (std::size_t i = 0; i < guess.size(); ++i) {
    if (data.dirichlet[i]) guess[i] = data.dirichlet_values[i];
  }
  const int step = static_cast<int>(std::lround(t_next / cfg.dt));
  return solve_or_throw(disc, std::move(data), cfg, std::move(guess), disc.bounds(false), step);
}

Trajectory run_transient(const Discretization& disc, const TimeConfig& cfg, int steps) {
  TimeConfig c = cfg;
  c.steady = false;
  c.validate();
  const int n = steps > 0 ? steps : static_cast<int>(std::lround(c.t_end / c.dt));
  Trajectory traj;
  NodalField u = disc.initial();
  auto record = [&](double t) {
    const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
    traj.times.push_back(t);
    traj.min_values.push_back(*lo);
    traj.max_values.push_back(*hi);
  };
  record(0.0);
  for (int k = 1; k <= n; ++k) {
    const double t = k * c.dt;
    auto [next, report] = step_backward_euler(disc, u, t, c);
    traj.all_converged = traj.all_converged && report.converged;
    traj.reports.push_back(std::move(report));
    u = std::move(next);
    record(t);
  }
  traj.final_state = std::move(u);
  return traj;
}

std::pair<NodalField, SolverReport> run_steady(const Discretization& disc, const TimeConfig& cfg) {
  TimeConfig c = cfg;
  c.steady = true;
  c.validate();
  StabilizedSystem::Data data{disc.forcing(0.0), disc.dirichlet(), disc.dirichlet_values(0.0),
                              0.0, {}};
  NodalField guess = data.dirichlet_values;
  return solve_or_throw(disc, std::move(data), c, std::move(guess), disc.bounds(true), 0);
}

}  // namespace dmpfem
