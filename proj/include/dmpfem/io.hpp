#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dmpfem/mesh.hpp"
#include "dmpfem/problem.hpp"
#include "dmpfem/solvers.hpp"
#include "dmpfem/stabilization.hpp"
#include "dmpfem/timeloop.hpp"

namespace dmpfem {

/// Invalid configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Output failure (exit code 4).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// How sigma is derived from sigma_factor.
enum class SigmaRule {
  Absolute,     ///< factor
  Beta,         ///< |beta| factor
  BetaEps,      ///< |beta| eps factor
  BetaH4,       ///< |beta| h^4 factor
  Dimensional,  ///< |beta|^2 l^2 factor, l the domain diameter
};

struct RunConfig {
  std::string problem = "STRAIGHT_DISCONTINUITY";
  int nx = 48;
  int ny = 0;  ///< 0: keep square cells
  ElementKind element = ElementKind::Q1;

  DetectorKind detector = DetectorKind::Smooth;
  MassKind mass = MassKind::GradualLumping;
  double q = 25.0;
  double eps = 1e-4;
  double sigma_factor = 1e-9;
  SigmaRule sigma_rule = SigmaRule::Beta;
  double gamma = 1e-10;

  SolverChoice solver = SolverChoice::Newton;
  AndersonOptions anderson;
  NewtonOptions newton;
  bool projection = false;
  bool freeze_mass_alpha = false;

  std::optional<bool> steady;  ///< unset: the problem decides
  double dt = 0.0;             ///< 0: problem default
  double t_end = 0.0;          ///< 0: problem default
  int steps = 0;               ///< positive: run exactly this many steps

  std::string output_dir = ".";
  unsigned seed = 0;

  std::vector<double> q_values{1.0, 4.0, 8.0, 25.0};
  std::vector<double> eps_values{1e-1, 1e-2, 1e-3, 1e-4};
  std::vector<int> sizes{12, 24, 48, 96};

  std::set<std::string> explicit_keys;  ///< keys given by the user

  /// Cells in y; derived from the domain aspect ratio when ny == 0.
  int cells_y(const ProblemSpec& spec) const;
  double sigma(const ProblemSpec& spec, double eps_value, double h) const;
  StabParams stab_params(const ProblemSpec& spec, double h) const;
  TimeConfig time_config(const ProblemSpec& spec, double h) const;
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Set one key from its textual value. Throws ConfigError on unknown keys or
/// malformed values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Parse `key = value` lines with optional [section] headers; '#' starts a comment.
RunConfig parse_config_text(const std::string& text, const std::string& source = "<config>");
RunConfig parse_config(const std::filesystem::path& path);

/// Every key with its effective value, in parse_config format.
std::string echo_config(const RunConfig& cfg);

/// Shortest decimal string that reads back to exactly x.
std::string format_double(double x);

struct IterationCell {
  bool ran = false;
  bool converged = false;
  int iterations = 0;
};

struct TableRow {
  double q = 0.0;
  double eps = 0.0;
  IterationCell iters_A, iters_Ap, iters_N, iters_Np;
  double L1 = 0.0, L1_out = 0.0, L2 = 0.0, L2_out = 0.0;
};

/// Writes `path` (3 significant digits) and `<stem>_full.csv` (round-trip
/// precision). Blank cells: not run; "--": did not converge.
void write_table(const std::filesystem::path& path, const std::vector<TableRow>& rows);

void write_log(const std::filesystem::path& path, const SolverReport& report);

/// Legacy ASCII VTK. STRUCTURED_GRID when `dims` (points per direction) is
/// given, else UNSTRUCTURED_GRID. Point scalar "u", field TIME.
void write_field(const std::filesystem::path& path, const Mesh2D& mesh, std::span<const double> u,
                 double t, std::optional<std::pair<int, int>> dims = {});

struct VtkField {
  std::vector<Point2> points;
  std::vector<int> cells;  ///< flat connectivity
  ElementKind kind = ElementKind::Q1;
  std::vector<double> u;
  double time = 0.0;
};

/// Reads files produced by write_field.
VtkField read_field(const std::filesystem::path& path);

}  // namespace dmpfem
