#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include "oseen/oseen.hpp"
#include "oseen/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRunFailure = 1;
constexpr int kExitInvalid = 2;

struct RunArgs {
  int k = 2;
  int l = 1;
  double delta0 = 0.0;
  double nu = 1.0;
  int N = 8;
  std::string dt_rule = "h2";
  double T = 1.0;
  std::string init = "lagrange";
  std::string out = "run.csv";
  std::string diag;
};

int do_run(const RunArgs& a) {
  oseen::SchemeParams p;
  std::shared_ptr<const oseen::TriMesh> mesh;
  try {
    p.k = a.k;
    p.l = a.l;
    p.delta0 = a.delta0;
    p.nu = a.nu;
    p.T = a.T;
    p.init_mode = oseen::parse_init_mode(a.init);
    if (a.N < 1) throw oseen::InvalidArgument("--N must be positive");
    p.dt = oseen::DtRule::parse(a.dt_rule).dt(a.N);
    p.validate();
    mesh = std::make_shared<const oseen::TriMesh>(oseen::build_unit_square_mesh(a.N));
  } catch (const oseen::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }

  std::ofstream diag;
  if (!a.diag.empty()) {
    diag.open(a.diag);
    if (!diag) {
      std::cerr << "error: cannot write diagnostics file '" << a.diag << "'\n";
      return kExitInvalid;
    }
  }
  std::ofstream out(a.out);
  if (!out) {
    std::cerr << "error: cannot write output file '" << a.out << "'\n";
    return kExitInvalid;
  }

  const oseen::ManufacturedProblem problem(a.nu);
  oseen::RunOptions opt;
  opt.diagnostics_csv = a.diag.empty() ? nullptr : &diag;
  opt.warnings = &std::cerr;
  try {
    const auto r = oseen::run(problem, p, mesh, opt);
    oseen::StudySeries s{{p.k, p.l, p.delta0}, p.nu, {}};
    oseen::StudyRow row;
    row.N = a.N;
    row.h = 1.0 / a.N;
    row.dt = p.dt;
    row.ok = true;
    row.errors = r.errors;
    row.runtime_s = r.runtime_s;
    s.rows.push_back(row);
    oseen::write_study_csv(out, s);
    std::cout << "steps=" << r.num_steps << " E_linf_l2_u=" << r.errors.E_linf_l2_u
              << " E_l2_h10_u=" << r.errors.E_l2_h10_u << " E_l2_l2_p=" << r.errors.E_l2_l2_p;
    if (r.errors.stab_seminorm) std::cout << " stab_seminorm=" << *r.errors.stab_seminorm;
    std::cout << " hypothesis_warnings=" << r.hypothesis_warnings << " runtime_s=" << r.runtime_s << '\n';
  } catch (const oseen::Error& e) {
    std::cerr << "run failed: " << e.what() << '\n';
    return kExitRunFailure;
  }
  return kExitOk;
}

int do_study(const std::string& path, bool full) {
  oseen::StudyConfig cfg;
  try {
    cfg = oseen::load_study_config(path);
  } catch (const oseen::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  if (full) {
    std::cerr << "warning: --full uses N = 16, 23, 32, 45, 64; the finest meshes take hours on one core\n";
    cfg.Ns = oseen::full_mesh_list();
  }
  try {
    const auto table = oseen::run_study(cfg, &std::cerr);
    oseen::write_eoc_summary(std::cout, table);
    for (const auto& s : table.series)
      for (const auto& r : s.rows)
        if (!r.ok) return kExitRunFailure;
  } catch (const oseen::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitOk;
}

int do_verify() {
  const auto results = oseen::run_property_suite();
  return oseen::report_property_suite(results, std::cout) ? kExitOk : kExitRunFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Projection / Lagrange-Galerkin solver for the transient Oseen problem"};
  app.require_subcommand(1);

  RunArgs ra;
  auto* run = app.add_subcommand("run", "single simulation of the manufactured test problem");
  run->add_option("--k", ra.k, "velocity degree")->check(CLI::Range(1, 2));
  run->add_option("--l", ra.l, "pressure degree")->check(CLI::Range(1, 2));
  run->add_option("--delta0", ra.delta0, "stabilization parameter");
  run->add_option("--nu", ra.nu, "viscosity");
  run->add_option("--N", ra.N, "divisions per side of the unit square");
  run->add_option("--dt-rule", ra.dt_rule, "h2 or h_over:<divisor>, with h = 1/N");
  run->add_option("--T", ra.T, "final time");
  run->add_option("--init", ra.init, "lagrange or stokes_projection");
  run->add_option("--out", ra.out, "CSV with the error summary");
  run->add_option("--diag", ra.diag, "per-step diagnostics CSV");

  std::string cfg;
  bool full = false;
  auto* study = app.add_subcommand("study", "convergence study from a key = value config file");
  study->add_option("config", cfg, "config file")->required();
  study->add_flag("--full", full, "use the full mesh list 16, 23, 32, 45, 64");

  auto* verify = app.add_subcommand("verify", "structural property suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitInvalid;
  }

  if (*run) return do_run(ra);
  if (*study) return do_study(cfg, full);
  if (*verify) return do_verify();
  return kExitInvalid;
}
