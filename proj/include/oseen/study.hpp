#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "oseen/errors.hpp"
#include "oseen/mesh.hpp"
#include "oseen/problems.hpp"
#include "oseen/scheme.hpp"

namespace oseen {

struct SchemeSpec {
  int k = 2;
  int l = 1;
  double delta0 = 0.0;

  /// File-name friendly tag, e.g. "P2P2_d0.01".
  std::string label() const {
    std::ostringstream os;
    os << 'P' << k << 'P' << l << "_d" << delta0;
    return os.str();
  }
  bool operator==(const SchemeSpec&) const = default;
};

/// Time-step rule in terms of the nominal mesh size h = 1/N.
struct DtRule {
  enum class Kind { h_squared, h_over };
  Kind kind = Kind::h_squared;
  double divisor = 1.0;

  double dt(int N) const {
    const double h = 1.0 / N;
    return kind == Kind::h_squared ? h * h : h / divisor;
  }

  std::string str() const {
    if (kind == Kind::h_squared) return "h2";
    std::ostringstream os;
    os << "h_over:" << divisor;
    return os.str();
  }

  /// Accepts "h2", "h_squared" and "h_over:<divisor>".
  static DtRule parse(const std::string& text) {
    DtRule r;
    if (text == "h2" || text == "h_squared") return r;
    const std::string prefix = "h_over:";
    if (text.rfind(prefix, 0) == 0) {
      r.kind = Kind::h_over;
      try {
        std::size_t used = 0;
        r.divisor = std::stod(text.substr(prefix.size()), &used);
        if (used != text.size() - prefix.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ConfigError("invalid dt rule '" + text + "'");
      }
      if (!(r.divisor > 0.0)) throw ConfigError("dt rule divisor must be positive in '" + text + "'");
      return r;
    }
    throw ConfigError("invalid dt rule '" + text + "' (expected h2 or h_over:<divisor>)");
  }
};

inline std::vector<int> full_mesh_list() { return {16, 23, 32, 45, 64}; }
inline std::vector<int> desk_mesh_list() { return {8, 16, 32}; }

struct StudyConfig {
  std::vector<SchemeSpec> schemes{{2, 1, 0.0}};
  std::vector<double> nus{1.0};
  std::vector<int> Ns = desk_mesh_list();
  DtRule dt_rule;
  double T = 1.0;
  InitMode init_mode = InitMode::lagrange;
  std::string output_dir = "study_out";
  int workers = 1;

  void validate() const {
    if (schemes.empty()) throw ConfigError("config: no schemes");
    if (nus.empty()) throw ConfigError("config: no viscosities");
    if (Ns.empty()) throw ConfigError("config: empty N list");
    for (std::size_t i = 0; i < Ns.size(); ++i) {
      if (Ns[i] < 1) throw ConfigError("config: N must be positive");
      if (i > 0 && Ns[i] <= Ns[i - 1]) throw ConfigError("config: N list must be strictly increasing");
    }
    for (double nu : nus)
      if (!(nu > 0.0)) throw ConfigError("config: viscosities must be positive");
    if (!(T > 0.0)) throw ConfigError("config: T must be positive");
    for (int N : Ns)
      if (dt_rule.dt(N) > T) throw ConfigError("config: dt rule gives dt > T for N = " + std::to_string(N));
    if (workers < 1) throw ConfigError("config: workers must be >= 1");
    for (const auto& s : schemes) {
      SchemeParams p;
      p.k = s.k;
      p.l = s.l;
      p.delta0 = s.delta0;
      try {
        p.validate();
      } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("config: ") + e.what());
      }
    }
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double to_double(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("config: key '" + key + "': '" + s + "' is not a number");
}

inline int to_int(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("config: key '" + key + "': '" + s + "' is not an integer");
}

}  // namespace detail

inline InitMode parse_init_mode(const std::string& s) {
  if (s == "lagrange") return InitMode::lagrange;
  if (s == "stokes_projection" || s == "stokes") return InitMode::stokes_projection;
  throw ConfigError("unknown init mode '" + s + "' (expected lagrange or stokes_projection)");
}

/// Flat `key = value` format; '#' starts a comment. Keys:
///   schemes  = k,l,delta0 ; k,l,delta0 ...
///   nu       = 1, 1e-4
///   N        = 8, 16, 32
///   dt_rule  = h2 | h_over:<divisor>
///   T, init (lagrange | stokes_projection), output_dir, workers
inline StudyConfig parse_study_config(std::istream& in) {
  StudyConfig c;
  std::string line;
  int lineno = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (seen[key]++) throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    if (key == "schemes") {
      c.schemes.clear();
      for (const auto& triple : detail::split(value, ';')) {
        const auto parts = detail::split(triple, ',');
        if (parts.size() != 3) throw ConfigError("config: scheme '" + triple + "' must be 'k,l,delta0'");
        c.schemes.push_back({detail::to_int(parts[0], key), detail::to_int(parts[1], key), detail::to_double(parts[2], key)});
      }
    } else if (key == "nu") {
      c.nus.clear();
      for (const auto& v : detail::split(value, ',')) c.nus.push_back(detail::to_double(v, key));
    } else if (key == "N") {
      c.Ns.clear();
      for (const auto& v : detail::split(value, ',')) c.Ns.push_back(detail::to_int(v, key));
    } else if (key == "dt_rule") {
      c.dt_rule = DtRule::parse(value);
    } else if (key == "T") {
      c.T = detail::to_double(value, key);
    } else if (key == "init") {
      c.init_mode = parse_init_mode(value);
    } else if (key == "output_dir") {
      c.output_dir = value;
    } else if (key == "workers") {
      c.workers = detail::to_int(value, key);
    } else {
      throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

inline StudyConfig load_study_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return parse_study_config(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

enum class Norm { linf_l2_u, l2_h10_u, l2_l2_p };

inline const char* norm_name(Norm n) {
  switch (n) {
    case Norm::linf_l2_u: return "E_linf_l2_u";
    case Norm::l2_h10_u: return "E_l2_h10_u";
    case Norm::l2_l2_p: return "E_l2_l2_p";
  }
  return "";
}

inline double norm_value(const ErrorReport& r, Norm n) {
  switch (n) {
    case Norm::linf_l2_u: return r.E_linf_l2_u;
    case Norm::l2_h10_u: return r.E_l2_h10_u;
    case Norm::l2_l2_p: return r.E_l2_l2_p;
  }
  return 0.0;
}

/// log(e1/e2) / log(h1/h2); empty unless both errors are positive and finite.
inline std::optional<double> eoc(double e1, double e2, double h1, double h2) {
  if (!(e1 > 0.0) || !(e2 > 0.0) || !std::isfinite(e1) || !std::isfinite(e2) || h1 == h2) return std::nullopt;
  return std::log(e1 / e2) / std::log(h1 / h2);
}

struct StudyRow {
  int N = 0;
  double h = 0.0;
  double dt = 0.0;
  bool ok = false;
  std::string failure;
  ErrorReport errors;
  double runtime_s = 0.0;
};

struct StudySeries {
  SchemeSpec scheme;
  double nu = 1.0;
  std::vector<StudyRow> rows;

  /// Consecutive-pair EOCs; entry i compares rows i and i+1 and is empty if either row failed.
  std::vector<std::optional<double>> eocs(Norm n) const {
    std::vector<std::optional<double>> out;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
      const auto& a = rows[i];
      const auto& b = rows[i + 1];
      out.push_back(a.ok && b.ok ? eoc(norm_value(a.errors, n), norm_value(b.errors, n), a.h, b.h) : std::nullopt);
    }
    return out;
  }

  std::string csv_name() const {
    std::ostringstream os;
    os << scheme.label() << "_nu" << nu << ".csv";
    return os.str();
  }
};

struct EocTable {
  std::vector<StudySeries> series;

  const StudySeries* find(const SchemeSpec& s, double nu) const {
    for (const auto& x : series)
      if (x.scheme == s && x.nu == nu) return &x;
    return nullptr;
  }
};

inline void write_study_csv(std::ostream& os, const StudySeries& s) {
  os << "N,h,dt,E_linf_l2_u,E_l2_h10_u,E_l2_l2_p,runtime_s\n";
  os << std::setprecision(12);
  for (const auto& r : s.rows) {
    os << r.N << ',' << r.h << ',' << r.dt << ',';
    if (r.ok)
      os << r.errors.E_linf_l2_u << ',' << r.errors.E_l2_h10_u << ',' << r.errors.E_l2_l2_p;
    else
      os << "nan,nan,nan";
    os << ',' << std::setprecision(4) << r.runtime_s << std::setprecision(12) << '\n';
  }
}

inline void write_eoc_summary(std::ostream& os, const EocTable& table) {
  os << std::fixed << std::setprecision(3);
  for (const auto& s : table.series) {
    os << "scheme (" << s.scheme.k << ',' << s.scheme.l << ',' << s.scheme.delta0 << ")  nu = " << std::defaultfloat
       << s.nu << std::fixed << '\n';
    for (const auto& r : s.rows)
      if (!r.ok) os << "  N = " << r.N << " failed: " << r.failure << '\n';
    for (Norm n : {Norm::linf_l2_u, Norm::l2_h10_u, Norm::l2_l2_p}) {
      os << "  " << std::setw(12) << std::left << norm_name(n) << std::right;
      const auto e = s.eocs(n);
      if (e.empty()) os << " (no EOC: fewer than two rows)";
      for (std::size_t i = 0; i < e.size(); ++i) {
        os << "  " << s.rows[i].N << "->" << s.rows[i + 1].N << ": ";
        if (e[i])
          os << *e[i];
        else
          os << "n/a";
      }
      os << '\n';
    }
  }
  os << std::defaultfloat;
}

/// gnuplot script drawing log-log error vs h for every series (one page per series).
inline void write_plot_script(std::ostream& os, const EocTable& table) {
  os << "set datafile separator ','\n"
        "set logscale xy\n"
        "set xlabel 'h'\n"
        "set ylabel 'relative error'\n"
        "set key bottom right\n"
        "set terminal pngcairo size 800,600\n";
  for (const auto& s : table.series) {
    const std::string csv = s.csv_name();
    std::string png = csv.substr(0, csv.size() - 4) + ".png";
    os << "\nset output '" << png << "'\n"
       << "set title 'Scheme(" << s.scheme.k << ',' << s.scheme.l << ',' << s.scheme.delta0 << "), nu = " << s.nu << "'\n"
       << "plot '" << csv << "' skip 1 using 2:4 with linespoints title 'E_linf_l2(u)', \\\n"
       << "     '" << csv << "' skip 1 using 2:5 with linespoints title 'E_l2_H10(u)', \\\n"
       << "     '" << csv << "' skip 1 using 2:6 with linespoints title 'E_l2_l2(p)', \\\n"
       << "     '" << csv << "' skip 1 using 2:($2**2) with lines dashtype 2 title 'h^2'\n";
  }
}

/// One study point, never throws: library errors are recorded in the row.
inline StudyRow run_study_point(const SchemeSpec& spec, double nu, int N, const StudyConfig& config) {
  StudyRow row;
  row.N = N;
  row.h = 1.0 / N;
  row.dt = config.dt_rule.dt(N);
  const auto start = std::chrono::steady_clock::now();
  try {
    SchemeParams p;
    p.k = spec.k;
    p.l = spec.l;
    p.delta0 = spec.delta0;
    p.nu = nu;
    p.dt = row.dt;
    p.T = config.T;
    p.init_mode = config.init_mode;
    auto mesh = std::make_shared<const TriMesh>(build_unit_square_mesh(N));
    const ManufacturedProblem problem(nu);
    const auto result = run(problem, p, mesh);
    row.errors = result.errors;
    row.ok = true;
  } catch (const Error& e) {
    row.failure = e.what();
  }
  row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

/// Runs every (scheme, nu, N) point of the manufactured-solution study and writes
/// <output_dir>/<scheme>_nu<nu>.csv, eoc_summary.txt and plot.gp.
inline EocTable run_study(const StudyConfig& config, std::ostream* log = nullptr) {
  config.validate();
  struct Job {
    std::size_t series;
    int N;
  };
  EocTable table;
  std::vector<Job> jobs;
  for (const auto& s : config.schemes)
    for (double nu : config.nus) {
      table.series.push_back({s, nu, {}});
      for (int N : config.Ns) jobs.push_back({table.series.size() - 1, N});
    }

  std::vector<StudyRow> rows(jobs.size());
  auto execute = [&](std::size_t i) {
    const auto& s = table.series[jobs[i].series];
    return run_study_point(s.scheme, s.nu, jobs[i].N, config);
  };
  for (std::size_t begin = 0; begin < jobs.size(); begin += config.workers) {
    const std::size_t end = std::min(jobs.size(), begin + static_cast<std::size_t>(config.workers));
    std::vector<std::future<StudyRow>> batch;
    for (std::size_t i = begin + 1; i < end; ++i) batch.push_back(std::async(std::launch::async, execute, i));
    rows[begin] = execute(begin);
    for (std::size_t i = begin + 1; i < end; ++i) rows[i] = batch[i - begin - 1].get();
    if (log)
      for (std::size_t i = begin; i < end; ++i) {
        const auto& s = table.series[jobs[i].series];
        *log << "[study] " << s.scheme.label() << " nu=" << s.nu << " N=" << rows[i].N << ": "
             << (rows[i].ok ? "ok" : "FAILED (" + rows[i].failure + ")") << " (" << rows[i].runtime_s << " s)\n";
      }
  }
  for (std::size_t i = 0; i < jobs.size(); ++i) table.series[jobs[i].series].rows.push_back(rows[i]);

  namespace fs = std::filesystem;
  const fs::path dir(config.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + config.output_dir + "': " + ec.message());
  for (const auto& s : table.series) {
    std::ofstream os(dir / s.csv_name());
    write_study_csv(os, s);
  }
  {
    std::ofstream os(dir / "eoc_summary.txt");
    write_eoc_summary(os, table);
  }
  {
    std::ofstream os(dir / "plot.gp");
    write_plot_script(os, table);
  }
  return table;
}

}  // namespace oseen
