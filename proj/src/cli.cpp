#include "dmpfem/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include "dmpfem/bench.hpp"
#include "dmpfem/io.hpp"

namespace dmpfem {

namespace {

namespace fs = std::filesystem;

constexpr double kAuditTol = 1e-10;

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

/// Config file, then DMPFEM_OUT, then `--key value` pairs.
RunConfig load_config(const std::string& path, const std::vector<std::string>& extras,
                      const std::vector<std::pair<std::string, std::string>>& presets = {}) {
  RunConfig cfg = path.empty() ? RunConfig{} : parse_config(path);
  if (const char* out = std::getenv("DMPFEM_OUT"); out && *out) cfg.output_dir = out;
  for (const auto& [k, v] : presets) {
    if (!cfg.explicit_keys.count(k)) {
      apply_setting(cfg, k, v);
      cfg.explicit_keys.erase(k);
    }
  }
  for (std::size_t a = 0; a < extras.size(); ++a) {
    const std::string& arg = extras[a];
    if (arg.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + arg + "'");
    std::string key = arg.substr(2), value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.erase(eq);
    } else {
      if (a + 1 >= extras.size()) throw ConfigError("missing value for --" + key);
      value = extras[++a];
    }
    apply_setting(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

void echo(const RunConfig& cfg) {
  std::cout << "# effective configuration\n" << echo_config(cfg) << "\n";
}

std::string mesh_tag(const RunConfig& cfg, const ProblemSpec& spec) {
  return std::to_string(cfg.nx) + "x" + std::to_string(cfg.cells_y(spec));
}

double cell_width(const RunConfig& cfg, const ProblemSpec& spec) {
  return (spec.domain.x1 - spec.domain.x0) / cfg.nx;
}

void save_echo(const fs::path& path, const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path);
  out << echo_config(cfg);
  if (!out) throw IoError("cannot write " + path.string());
}

int cmd_run(const RunConfig& cfg) {
  echo(cfg);
  const ProblemSpec spec = make_problem(cfg.problem);
  const Mesh2D mesh = Mesh2D::structured(cfg.nx, cfg.cells_y(spec), spec.domain, cfg.element);
  const Discretization disc(spec, mesh);
  const TimeConfig tc = cfg.time_config(spec, cell_width(cfg, spec));
  const fs::path dir = cfg.output_dir;
  const std::string stem = lower(cfg.problem) + "_" + mesh_tag(cfg, spec);
  const std::pair<int, int> dims{cfg.nx + 1, cfg.cells_y(spec) + 1};
  save_echo(dir / (stem + "_config.ini"), cfg);

  bool converged = true;
  if (tc.steady) {
    auto [u, report] = run_steady(disc, tc);
    converged = report.converged;
    write_field(dir / (stem + ".vtk"), mesh, u, 0.0, dims);
    write_log(dir / (stem + "_log.csv"), report);
    std::cout << "iterations " << report.iterations << (converged ? "" : " (not converged)") << "\n";
    if (spec.exact) {
      const auto omega = error_norms(disc, u, Region::Omega);
      const auto out = error_norms(disc, u, Region::Outflow);
      std::cout << "L1 " << format_double(omega.l1) << "  L1_out " << format_double(out.l1)
                << "  L2 " << format_double(omega.l2) << "  L2_out " << format_double(out.l2)
                << "\n";
    }
    const auto [over, under] = dmp_audit(u, disc.bounds(true));
    std::cout << "global DMP violation max " << format_double(over) << " min "
              << format_double(under) << "\n";
    if (!report.failure.empty()) std::cerr << "solver: " << report.failure << "\n";
  } else {
    const Trajectory traj = run_transient(disc, tc, cfg.steps);
    converged = traj.all_converged;
    write_field(dir / (stem + ".vtk"), mesh, traj.final_state, traj.times.back(), dims);
    if (!traj.reports.empty()) write_log(dir / (stem + "_log.csv"), traj.reports.back());
    const fs::path steps_path = dir / (stem + "_steps.csv");
    std::ofstream out(steps_path);
    if (!out) throw IoError("cannot open " + steps_path.string() + " for writing");
    out << "step,t,max,min,iterations,converged\n";
    for (std::size_t s = 0; s < traj.times.size(); ++s) {
      out << s << ',' << format_double(traj.times[s]) << ',' << format_double(traj.max_values[s])
          << ',' << format_double(traj.min_values[s]) << ',';
      if (s > 0) {
        out << traj.reports[s - 1].iterations << ',' << (traj.reports[s - 1].converged ? 1 : 0);
      } else {
        out << ',';
      }
      out << '\n';
    }
    if (!out) throw IoError("write failed: " + steps_path.string());
    std::cout << "steps " << traj.reports.size() << " t " << format_double(traj.times.back())
              << " max " << format_double(traj.max_values.back()) << " min "
              << format_double(traj.min_values.back()) << "\n";
  }
  if (!converged) {
    std::cerr << "error: nonlinear solver did not converge\n";
    return kExitNoConvergence;
  }
  return kExitOk;
}

IterationCell solve_cell(const Discretization& disc, TimeConfig tc, SolverChoice solver,
                         bool projection, NodalField* u_out) {
  tc.solver = solver;
  tc.projection = projection;
  IterationCell c;
  c.ran = true;
  try {
    auto [u, report] = run_steady(disc, tc);
    c.converged = report.converged;
    c.iterations = report.iterations;
    if (u_out) *u_out = std::move(u);
  } catch (const SolverFailure& e) {
    std::cerr << "  solver failure: " << e.what() << "\n";
  }
  return c;
}

int cmd_table(const RunConfig& cfg) {
  echo(cfg);
  const ProblemSpec spec = make_problem(cfg.problem);
  if (spec.transient || !spec.exact) {
    throw ConfigError("table needs a steady problem with an exact solution");
  }
  const Mesh2D mesh = Mesh2D::structured(cfg.nx, cfg.cells_y(spec), spec.domain, cfg.element);
  const Discretization disc(spec, mesh);
  const double h = cell_width(cfg, spec);
  std::vector<TableRow> rows;
  for (double q : cfg.q_values) {
    for (double eps : cfg.eps_values) {
      RunConfig c = cfg;
      c.q = q;
      c.eps = eps;
      TimeConfig tc = c.time_config(spec, h);
      tc.steady = true;
      if (eps == 0.0) tc.stab.detector = DetectorKind::Nonsmooth;
      TableRow row;
      row.q = q;
      row.eps = eps;
      NodalField u, u_alt;
      std::cerr << "q=" << format_double(q) << " eps=" << format_double(eps) << "\n";
      row.iters_A = solve_cell(disc, tc, SolverChoice::Anderson, false, &u_alt);
      row.iters_Ap = solve_cell(disc, tc, SolverChoice::Anderson, true, &u);
      if (eps > 0.0) {
        NodalField un;
        row.iters_N = solve_cell(disc, tc, SolverChoice::Newton, false, &un);
        row.iters_Np = solve_cell(disc, tc, SolverChoice::Newton, true, &u_alt);
        if (row.iters_Np.converged) {
          u = u_alt;
        } else if (row.iters_N.converged) {
          u = un;
        }
      }
      if (!u.empty()) {
        const auto omega = error_norms(disc, u, Region::Omega);
        const auto out = error_norms(disc, u, Region::Outflow);
        row.L1 = omega.l1;
        row.L2 = omega.l2;
        row.L1_out = out.l1;
        row.L2_out = out.l2;
      }
      rows.push_back(row);
    }
  }
  const fs::path path =
      fs::path(cfg.output_dir) / ("table_" + lower(cfg.problem) + "_" + mesh_tag(cfg, spec) + ".csv");
  write_table(path, rows);
  std::cout << "wrote " << path.string() << "\n";
  return kExitOk;
}

int cmd_converge(const RunConfig& cfg) {
  echo(cfg);
  const ProblemSpec spec = make_problem(cfg.problem);
  if (spec.transient || !spec.exact) {
    throw ConfigError("converge needs a steady problem with an exact solution");
  }
  auto stab_cfg = [&](double h) {
    TimeConfig tc = cfg.time_config(spec, h);
    tc.steady = true;
    return tc;
  };
  auto galerkin_cfg = [&](double h) {
    TimeConfig tc = stab_cfg(h);
    tc.stab.detector = DetectorKind::None;
    return tc;
  };
  const auto gal = convergence_study(spec, cfg.element, cfg.sizes, galerkin_cfg);
  const auto stab = convergence_study(spec, cfg.element, cfg.sizes, stab_cfg);
  const fs::path path = fs::path(cfg.output_dir) / ("converge_" + lower(cfg.problem) + ".csv");
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  auto rate = [](double e) { return std::isnan(e) ? std::string() : format_double(e); };
  out << "n,h,L2_galerkin,eoc_galerkin,L2_stab,eoc_stab,iters_stab\n";
  bool converged = true;
  for (std::size_t r = 0; r < stab.size(); ++r) {
    out << stab[r].n << ',' << format_double(stab[r].h) << ',' << format_double(gal[r].l2) << ','
        << rate(gal[r].eoc) << ',' << format_double(stab[r].l2) << ',' << rate(stab[r].eoc) << ','
        << stab[r].report.iterations << '\n';
    converged = converged && stab[r].report.converged && gal[r].report.converged;
  }
  if (!out) throw IoError("write failed: " + path.string());
  std::cout << "wrote " << path.string() << "\n";
  return converged ? kExitOk : kExitNoConvergence;
}

int cmd_audit(const RunConfig& cfg, const std::vector<std::string>& files) {
  const ProblemSpec spec = make_problem(cfg.problem);
  const bool steady = cfg.steady.value_or(!spec.transient);
  bool ok = true;
  double prev_max = std::numeric_limits<double>::infinity();
  double prev_min = -prev_max;
  for (const auto& file : files) {
    const VtkField f = read_field(file);
    const Mesh2D mesh(f.points, f.cells, f.kind);
    const Discretization disc(spec, mesh);
    const auto bounds = disc.bounds(steady);
    const auto [over, under] = dmp_audit(f.u, bounds);
    const double mx = *std::max_element(f.u.begin(), f.u.end());
    const double mn = *std::min_element(f.u.begin(), f.u.end());
    const bool global_ok = over <= kAuditTol && under <= kAuditTol;
    const bool led_ok = mx <= prev_max + kAuditTol && mn >= prev_min - kAuditTol;
    std::size_t local_bad = 0;
    if (steady) local_bad = local_dmp_audit(mesh, f.u, kAuditTol, disc.dirichlet()).size();
    std::cout << file << ": t " << format_double(f.time) << " max " << format_double(mx) << " min "
              << format_double(mn) << " bounds [" << format_double(bounds.lower) << ", "
              << format_double(bounds.upper) << "] global " << (global_ok ? "ok" : "VIOLATED")
              << " led " << (led_ok ? "ok" : "VIOLATED");
    if (steady) std::cout << " local_violations " << local_bad;
    std::cout << "\n";
    ok = ok && global_ok && led_ok && local_bad == 0;
    prev_max = mx;
    prev_min = mn;
  }
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Monotonicity-preserving stabilized finite element solver"};
  app.require_subcommand(1);
  std::string config;
  auto add = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "key = value configuration file");
    sub->allow_extras();
    return sub;
  };
  auto* run = add("run", "solve one problem and write field and log");
  auto* table = add("table", "sweep q and eps with all solvers");
  auto* converge = add("converge", "mesh refinement study");
  auto* audit = add("audit", "re-check DMP and LED on saved VTK fields");
  audit->footer("Positional arguments: VTK files in time order.");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(load_config(config, run->remaining()));
    if (table->parsed()) {
      return cmd_table(load_config(config, table->remaining(),
                                   {{"sigma_rule", "BETA_EPS"}, {"sigma_factor", "1e-5"}}));
    }
    if (converge->parsed()) {
      return cmd_converge(load_config(config, converge->remaining(),
                                      {{"problem", "STEADY_PARABOLIC"},
                                       {"q", "4"},
                                       {"eps", "1e-7"},
                                       {"sigma_rule", "BETA_H4"},
                                       {"sigma_factor", "1e-8"}}));
    }
    if (audit->parsed()) {
      std::vector<std::string> files, keys;
      const auto rest = audit->remaining();
      for (std::size_t a = 0; a < rest.size(); ++a) {
        if (rest[a].rfind("--", 0) == 0) {
          keys.push_back(rest[a]);
          if (rest[a].find('=') == std::string::npos && a + 1 < rest.size()) keys.push_back(rest[++a]);
        } else {
          files.push_back(rest[a]);
        }
      }
      if (files.empty()) throw ConfigError("audit needs at least one VTK file");
      return cmd_audit(load_config(config, keys), files);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const SolverFailure& e) {
    std::cerr << "solver failure at step " << e.step() << ": " << e.what() << "\n";
    return kExitNoConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace dmpfem
