#include "dmpfem/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace dmpfem {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

long to_long(const std::string& key, const std::string& v) {
  long x = 0;
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return x;
}

int to_int(const std::string& key, const std::string& v) { return static_cast<int>(to_long(key, v)); }

bool to_bool(const std::string& key, const std::string& v) {
  const std::string u = upper(v);
  if (u == "TRUE" || u == "1" || u == "YES" || u == "ON") return true;
  if (u == "FALSE" || u == "0" || u == "NO" || u == "OFF") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class E>
struct Names {
  std::vector<std::pair<E, const char*>> items;

  E parse(const std::string& key, const std::string& v) const {
    const std::string u = upper(v);
    for (const auto& [e, n] : items) {
      if (u == n) return e;
    }
    std::string valid;
    for (const auto& it : items) valid += (valid.empty() ? "" : ", ") + std::string(it.second);
    throw ConfigError(key + ": unknown value '" + v + "'; valid values: " + valid);
  }
  std::string name(E e) const {
    for (const auto& [x, n] : items) {
      if (x == e) return n;
    }
    return "?";
  }
};

const Names<ElementKind> kElements{{{ElementKind::Q1, "Q1"}, {ElementKind::P1, "P1"}}};
const Names<DetectorKind> kDetectors{{{DetectorKind::None, "NONE"},
                                      {DetectorKind::Nonsmooth, "NONSMOOTH"},
                                      {DetectorKind::Simplified, "SIMPLIFIED"},
                                      {DetectorKind::Smooth, "SMOOTH"},
                                      {DetectorKind::SimplifiedSmooth, "SIMPLIFIED_SMOOTH"}}};
const Names<MassKind> kMasses{
    {{MassKind::GradualLumping, "GRADUAL_LUMPING"}, {MassKind::SymmetricMass, "SYMMETRIC_MASS"}}};
const Names<SigmaRule> kSigmaRules{{{SigmaRule::Absolute, "ABSOLUTE"},
                                    {SigmaRule::Beta, "BETA"},
                                    {SigmaRule::BetaEps, "BETA_EPS"},
                                    {SigmaRule::BetaH4, "BETA_H4"},
                                    {SigmaRule::Dimensional, "DIMENSIONAL"}}};
const Names<SolverChoice> kSolvers{
    {{SolverChoice::Anderson, "ANDERSON"}, {SolverChoice::Newton, "NEWTON"}}};

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (const auto& x : v) {
    if (!s.empty()) s += ",";
    if constexpr (std::is_floating_point_v<T>) {
      s += format_double(x);
    } else {
      s += std::to_string(x);
    }
  }
  return s;
}

struct Key {
  const char* name;
  const char* section;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<Key>& keys() {
  static const std::vector<Key> k{
      {"problem", "problem", [](RunConfig& c, const std::string& v) { c.problem = upper(v); },
       [](const RunConfig& c) { return c.problem; }},
      {"steady", "problem",
       [](RunConfig& c, const std::string& v) { c.steady = to_bool("steady", v); },
       [](const RunConfig& c) -> std::string {
         return c.steady ? (*c.steady ? "true" : "false") : "auto";
       }},
      {"dt", "problem", [](RunConfig& c, const std::string& v) { c.dt = to_double("dt", v); },
       [](const RunConfig& c) { return format_double(c.dt); }},
      {"t_end", "problem",
       [](RunConfig& c, const std::string& v) { c.t_end = to_double("t_end", v); },
       [](const RunConfig& c) { return format_double(c.t_end); }},
      {"steps", "problem", [](RunConfig& c, const std::string& v) { c.steps = to_int("steps", v); },
       [](const RunConfig& c) { return std::to_string(c.steps); }},
      {"nx", "mesh", [](RunConfig& c, const std::string& v) { c.nx = to_int("nx", v); },
       [](const RunConfig& c) { return std::to_string(c.nx); }},
      {"ny", "mesh", [](RunConfig& c, const std::string& v) { c.ny = to_int("ny", v); },
       [](const RunConfig& c) { return std::to_string(c.ny); }},
      {"element", "mesh",
       [](RunConfig& c, const std::string& v) { c.element = kElements.parse("element", v); },
       [](const RunConfig& c) { return kElements.name(c.element); }},
      {"detector", "stabilization",
       [](RunConfig& c, const std::string& v) { c.detector = kDetectors.parse("detector", v); },
       [](const RunConfig& c) { return kDetectors.name(c.detector); }},
      {"mass", "stabilization",
       [](RunConfig& c, const std::string& v) { c.mass = kMasses.parse("mass", v); },
       [](const RunConfig& c) { return kMasses.name(c.mass); }},
      {"q", "stabilization", [](RunConfig& c, const std::string& v) { c.q = to_double("q", v); },
       [](const RunConfig& c) { return format_double(c.q); }},
      {"eps", "stabilization",
       [](RunConfig& c, const std::string& v) { c.eps = to_double("eps", v); },
       [](const RunConfig& c) { return format_double(c.eps); }},
      {"sigma_factor", "stabilization",
       [](RunConfig& c, const std::string& v) { c.sigma_factor = to_double("sigma_factor", v); },
       [](const RunConfig& c) { return format_double(c.sigma_factor); }},
      {"sigma_rule", "stabilization",
       [](RunConfig& c, const std::string& v) {
         c.sigma_rule = kSigmaRules.parse("sigma_rule", v);
       },
       [](const RunConfig& c) { return kSigmaRules.name(c.sigma_rule); }},
      {"gamma", "stabilization",
       [](RunConfig& c, const std::string& v) { c.gamma = to_double("gamma", v); },
       [](const RunConfig& c) { return format_double(c.gamma); }},
      {"solver", "solver",
       [](RunConfig& c, const std::string& v) { c.solver = kSolvers.parse("solver", v); },
       [](const RunConfig& c) { return kSolvers.name(c.solver); }},
      {"tol", "solver",
       [](RunConfig& c, const std::string& v) {
         c.anderson.tol = c.newton.tol = to_double("tol", v);
       },
       [](const RunConfig& c) { return format_double(c.newton.tol); }},
      {"k_max", "solver",
       [](RunConfig& c, const std::string& v) {
         c.anderson.k_max = c.newton.k_max = to_int("k_max", v);
       },
       [](const RunConfig& c) { return std::to_string(c.newton.k_max); }},
      {"m", "solver", [](RunConfig& c, const std::string& v) { c.anderson.m = to_int("m", v); },
       [](const RunConfig& c) { return std::to_string(c.anderson.m); }},
      {"s_min", "solver",
       [](RunConfig& c, const std::string& v) { c.anderson.s_min = to_double("s_min", v); },
       [](const RunConfig& c) { return format_double(c.anderson.s_min); }},
      {"omega0", "solver",
       [](RunConfig& c, const std::string& v) { c.anderson.omega0 = to_double("omega0", v); },
       [](const RunConfig& c) { return format_double(c.anderson.omega0); }},
      {"omega_min", "solver",
       [](RunConfig& c, const std::string& v) { c.anderson.omega_min = to_double("omega_min", v); },
       [](const RunConfig& c) { return format_double(c.anderson.omega_min); }},
      {"ls_tol", "solver",
       [](RunConfig& c, const std::string& v) { c.newton.ls_tol = to_double("ls_tol", v); },
       [](const RunConfig& c) { return format_double(c.newton.ls_tol); }},
      {"projection", "solver",
       [](RunConfig& c, const std::string& v) { c.projection = to_bool("projection", v); },
       [](const RunConfig& c) -> std::string { return c.projection ? "true" : "false"; }},
      {"freeze_mass_alpha", "solver",
       [](RunConfig& c, const std::string& v) {
         c.freeze_mass_alpha = to_bool("freeze_mass_alpha", v);
       },
       [](const RunConfig& c) -> std::string { return c.freeze_mass_alpha ? "true" : "false"; }},
      {"output_dir", "output", [](RunConfig& c, const std::string& v) { c.output_dir = v; },
       [](const RunConfig& c) { return c.output_dir; }},
      {"seed", "output",
       [](RunConfig& c, const std::string& v) {
         const long s = to_long("seed", v);
         if (s < 0) throw ConfigError("seed must be non-negative");
         c.seed = static_cast<unsigned>(s);
       },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
      {"q_values", "sweep",
       [](RunConfig& c, const std::string& v) {
         c.q_values.clear();
         for (const auto& s : split_list(v)) c.q_values.push_back(to_double("q_values", s));
       },
       [](const RunConfig& c) { return join(c.q_values); }},
      {"eps_values", "sweep",
       [](RunConfig& c, const std::string& v) {
         c.eps_values.clear();
         for (const auto& s : split_list(v)) c.eps_values.push_back(to_double("eps_values", s));
       },
       [](const RunConfig& c) { return join(c.eps_values); }},
      {"sizes", "sweep",
       [](RunConfig& c, const std::string& v) {
         c.sizes.clear();
         for (const auto& s : split_list(v)) c.sizes.push_back(to_int("sizes", s));
       },
       [](const RunConfig& c) { return join(c.sizes); }},
  };
  return k;
}

const Key* find_key(const std::string& name) {
  for (const auto& k : keys()) {
    if (name == k.name) return &k;
  }
  return nullptr;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

std::string sci3(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", x);
  return buf;
}

std::string cell(const IterationCell& c) {
  if (!c.ran) return "";
  if (!c.converged) return "--";
  return std::to_string(c.iterations);
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) return "nan";
  return std::string(buf, p);
}

int RunConfig::cells_y(const ProblemSpec& spec) const {
  if (ny > 0) return ny;
  const double aspect = (spec.domain.y1 - spec.domain.y0) / (spec.domain.x1 - spec.domain.x0);
  return std::max(1, static_cast<int>(std::lround(nx * aspect)));
}

double RunConfig::sigma(const ProblemSpec& spec, double eps_value, double h) const {
  const double b = spec.beta_bound;
  switch (sigma_rule) {
    case SigmaRule::Absolute: return sigma_factor;
    case SigmaRule::Beta: return b * sigma_factor;
    case SigmaRule::BetaEps: return b * eps_value * sigma_factor;
    case SigmaRule::BetaH4: return b * std::pow(h, 4) * sigma_factor;
    case SigmaRule::Dimensional: {
      const double l = spec.domain.diameter();
      return b * b * l * l * sigma_factor;
    }
  }
  return sigma_factor;
}

StabParams RunConfig::stab_params(const ProblemSpec& spec, double h) const {
  StabParams p;
  p.q = q;
  p.eps = eps;
  p.gamma = gamma;
  p.sigma = sigma(spec, eps, h);
  p.detector = detector;
  p.mass = mass;
  p.beta_bound = spec.beta_bound;
  return p;
}

TimeConfig RunConfig::time_config(const ProblemSpec& spec, double h) const {
  TimeConfig t;
  t.steady = steady.value_or(!spec.transient);
  t.dt = dt > 0.0 ? dt : spec.dt;
  t.t_end = t_end > 0.0 ? t_end : spec.t_end;
  t.solver = solver;
  t.stab = stab_params(spec, h);
  t.projection = projection;
  t.freeze_mass_alpha = freeze_mass_alpha;
  t.anderson = anderson;
  t.newton = newton;
  return t;
}

void RunConfig::validate() const {
  ProblemSpec spec;
  try {
    spec = make_problem(problem);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (nx < 1) throw ConfigError("nx must be positive");
  if (ny < 0) throw ConfigError("ny must be non-negative");
  if (!(q > 0.0)) throw ConfigError("q must be positive");
  if (!(eps >= 0.0)) throw ConfigError("eps must be non-negative");
  if (!(sigma_factor >= 0.0)) throw ConfigError("sigma_factor must be non-negative");
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be non-negative");
  if (!(dt >= 0.0)) throw ConfigError("dt must be non-negative");
  if (!(t_end >= 0.0)) throw ConfigError("t_end must be non-negative");
  if (steps < 0) throw ConfigError("steps must be non-negative");
  if (q_values.empty()) throw ConfigError("q_values must not be empty");
  for (double v : q_values) {
    if (!(v > 0.0)) throw ConfigError("q_values entries must be positive");
  }
  if (eps_values.empty()) throw ConfigError("eps_values must not be empty");
  for (double v : eps_values) {
    if (!(v >= 0.0)) throw ConfigError("eps_values entries must be non-negative");
  }
  if (sizes.empty()) throw ConfigError("sizes must not be empty");
  for (int v : sizes) {
    if (v < 1) throw ConfigError("sizes entries must be positive");
  }
  const double h = (spec.domain.x1 - spec.domain.x0) / nx;
  try {
    const TimeConfig t = time_config(spec, h);
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  const Key* k = find_key(key);
  if (!k) throw ConfigError("unknown key '" + key + "'");
  k->set(cfg, trim(value));
  cfg.explicit_keys.insert(key);
}

RunConfig parse_config_text(const std::string& text, const std::string& source) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      const bool known = std::any_of(keys().begin(), keys().end(),
                                     [&](const Key& k) { return section == k.section; });
      if (!known) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const Key* k = find_key(key);
    if (!k) throw ConfigError(where + "unknown key '" + key + "'");
    if (!section.empty() && section != k->section) {
      throw ConfigError(where + "key '" + key + "' belongs to section [" + k->section + "]");
    }
    try {
      apply_setting(cfg, key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

std::string echo_config(const RunConfig& cfg) {
  std::string out, section;
  for (const auto& k : keys()) {
    if (section != k.section) {
      section = k.section;
      out += (out.empty() ? "[" : "\n[") + section + "]\n";
    }
    out += std::string(k.name) + " = " + k.get(cfg) + "\n";
  }
  return out;
}

void write_table(const std::filesystem::path& path, const std::vector<TableRow>& rows) {
  static const char* header = "q,eps,iters_A,iters_Ap,iters_N,iters_Np,L1,L1_out,L2,L2_out\n";
  auto full_path = path;
  full_path.replace_filename(path.stem().string() + "_full" + path.extension().string());
  auto human = open_out(path);
  auto full = open_out(full_path);
  human << header;
  full << header;
  for (const auto& r : rows) {
    const std::string iters = cell(r.iters_A) + "," + cell(r.iters_Ap) + "," + cell(r.iters_N) +
                              "," + cell(r.iters_Np);
    human << format_double(r.q) << ',' << sci3(r.eps) << ',' << iters << ',' << sci3(r.L1) << ','
          << sci3(r.L1_out) << ',' << sci3(r.L2) << ',' << sci3(r.L2_out) << '\n';
    full << format_double(r.q) << ',' << format_double(r.eps) << ',' << iters << ','
         << format_double(r.L1) << ',' << format_double(r.L1_out) << ',' << format_double(r.L2)
         << ',' << format_double(r.L2_out) << '\n';
  }
  finish(human, path);
  finish(full, full_path);
}

void write_log(const std::filesystem::path& path, const SolverReport& report) {
  auto out = open_out(path);
  out << "iter,nlerr,dmp_max_viol,dmp_min_viol,omega_or_xi\n";
  for (std::size_t k = 0; k < report.nlerr_history.size(); ++k) {
    out << k + 1 << ',' << format_double(report.nlerr_history[k]) << ',';
    if (k < report.dmp_violation_history.size()) {
      out << format_double(report.dmp_violation_history[k].first) << ','
          << format_double(report.dmp_violation_history[k].second);
    } else {
      out << ',';
    }
    out << ',';
    if (k < report.step_history.size()) out << format_double(report.step_history[k]);
    out << '\n';
  }
  finish(out, path);
}

void write_field(const std::filesystem::path& path, const Mesh2D& mesh, std::span<const double> u,
                 double t, std::optional<std::pair<int, int>> dims) {
  const std::size_t n = mesh.num_nodes();
  if (u.size() != n) throw std::invalid_argument("write_field: field has wrong length");
  if (dims && static_cast<std::size_t>(dims->first) * dims->second != n) {
    throw std::invalid_argument("write_field: dimensions do not match the node count");
  }
  auto out = open_out(path);
  out << "# vtk DataFile Version 3.0\ndmpfem field\nASCII\n";
  out << "DATASET " << (dims ? "STRUCTURED_GRID" : "UNSTRUCTURED_GRID") << '\n';
  out << "FIELD FieldData 1\nTIME 1 1 double\n" << format_double(t) << '\n';
  if (dims) out << "DIMENSIONS " << dims->first << ' ' << dims->second << " 1\n";
  out << "POINTS " << n << " double\n";
  for (const auto& p : mesh.nodes()) {
    out << format_double(p.x) << ' ' << format_double(p.y) << " 0\n";
  }
  if (!dims) {
    const std::size_t ne = mesh.num_elements();
    const int npe = mesh.nodes_per_element();
    out << "CELLS " << ne << ' ' << ne * (npe + 1) << '\n';
    for (std::size_t e = 0; e < ne; ++e) {
      out << npe;
      for (int a : mesh.element(static_cast<int>(e))) out << ' ' << a;
      out << '\n';
    }
    out << "CELL_TYPES " << ne << '\n';
    const int type = mesh.kind() == ElementKind::Q1 ? 9 : 5;
    for (std::size_t e = 0; e < ne; ++e) out << type << '\n';
  }
  out << "POINT_DATA " << n << "\nSCALARS u double 1\nLOOKUP_TABLE default\n";
  for (double v : u) out << format_double(v) << '\n';
  finish(out, path);
}

VtkField read_field(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  auto fail = [&](const std::string& what) {
    return IoError(path.string() + ": " + what);
  };
  std::string line;
  std::getline(in, line);
  if (line.rfind("# vtk DataFile", 0) != 0) throw fail("not a legacy VTK file");
  std::getline(in, line);  // title
  std::getline(in, line);
  if (trim(line) != "ASCII") throw fail("only ASCII files are supported");

  VtkField f;
  bool structured = false;
  int dx = 0, dy = 0;
  std::string tok;
  while (in >> tok) {
    if (tok == "DATASET") {
      in >> tok;
      if (tok == "STRUCTURED_GRID") {
        structured = true;
      } else if (tok != "UNSTRUCTURED_GRID") {
        throw fail("unsupported dataset " + tok);
      }
    } else if (tok == "FIELD") {
      std::string name;
      int arrays = 0;
      in >> name >> arrays;
      for (int a = 0; a < arrays; ++a) {
        std::string aname, type;
        int comps = 0, tuples = 0;
        in >> aname >> comps >> tuples >> type;
        for (int v = 0; v < comps * tuples; ++v) {
          double x = 0.0;
          in >> x;
          if (aname == "TIME" && v == 0) f.time = x;
        }
      }
    } else if (tok == "DIMENSIONS") {
      int dz = 0;
      in >> dx >> dy >> dz;
    } else if (tok == "POINTS") {
      std::size_t n = 0;
      in >> n >> tok;
      f.points.resize(n);
      for (auto& p : f.points) {
        double z = 0.0;
        in >> p.x >> p.y >> z;
      }
    } else if (tok == "CELLS") {
      std::size_t ne = 0, total = 0;
      in >> ne >> total;
      f.cells.clear();
      for (std::size_t e = 0; e < ne; ++e) {
        int npe = 0;
        in >> npe;
        f.kind = npe == 3 ? ElementKind::P1 : ElementKind::Q1;
        for (int a = 0; a < npe; ++a) {
          int id = 0;
          in >> id;
          f.cells.push_back(id);
        }
      }
    } else if (tok == "CELL_TYPES") {
      std::size_t ne = 0;
      in >> ne;
      for (std::size_t e = 0; e < ne; ++e) in >> tok;
    } else if (tok == "POINT_DATA") {
      std::size_t n = 0;
      in >> n;
      if (n != f.points.size()) throw fail("POINT_DATA count differs from POINTS");
      f.u.resize(n);
    } else if (tok == "SCALARS") {
      std::string name, type;
      in >> name >> type;
      std::getline(in, line);  // optional component count
      in >> tok;
      if (tok == "LOOKUP_TABLE") {
        in >> tok;
      } else {
        throw fail("expected LOOKUP_TABLE");
      }
      for (double& v : f.u) in >> v;
      if (name != "u") f.u.clear();
    } else {
      throw fail("unexpected token '" + tok + "'");
    }
    if (in.fail()) throw fail("malformed data after " + tok);
  }
  if (f.points.empty() || f.u.size() != f.points.size()) throw fail("missing point scalar u");
  if (structured) {
    if (static_cast<std::size_t>(dx) * dy != f.points.size() || dx < 2 || dy < 2) {
      throw fail("DIMENSIONS do not match POINTS");
    }
    f.kind = ElementKind::Q1;
    for (int j = 0; j + 1 < dy; ++j) {
      for (int i = 0; i + 1 < dx; ++i) {
        const int ll = j * dx + i;
        f.cells.insert(f.cells.end(), {ll, ll + 1, ll + 1 + dx, ll + dx});
      }
    }
  }
  return f;
}

}  // namespace dmpfem
