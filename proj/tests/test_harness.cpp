#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oseen/study.hpp"
#include "oseen/verify.hpp"

using namespace oseen;

namespace {

StudyConfig parse(const std::string& text) {
  std::istringstream is(text);
  return parse_study_config(is);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Eoc, SyntheticSquareLaw) {
  StudySeries s;
  for (int N : {8, 16, 32, 64}) {
    StudyRow r;
    r.N = N;
    r.h = 1.0 / N;
    r.ok = true;
    r.errors.E_linf_l2_u = r.h * r.h;
    r.errors.E_l2_h10_u = 3 * r.h;
    r.errors.E_l2_l2_p = 0.5 * std::pow(r.h, 1.5);
    s.rows.push_back(r);
  }
  for (const auto& e : s.eocs(Norm::linf_l2_u)) EXPECT_NEAR(*e, 2.0, 1e-12);
  for (const auto& e : s.eocs(Norm::l2_h10_u)) EXPECT_NEAR(*e, 1.0, 1e-12);
  for (const auto& e : s.eocs(Norm::l2_l2_p)) EXPECT_NEAR(*e, 1.5, 1e-12);
  EXPECT_EQ(s.eocs(Norm::linf_l2_u).size(), 3u);
}

TEST(Eoc, NonUniformRatios) {
  EXPECT_NEAR(*eoc(std::pow(1.0 / 23, 2), std::pow(1.0 / 45, 2), 1.0 / 23, 1.0 / 45), 2.0, 1e-12);
}

TEST(Eoc, UndefinedForFailedOrZeroRows) {
  EXPECT_FALSE(eoc(0.0, 1.0, 0.5, 0.25).has_value());
  EXPECT_FALSE(eoc(1.0, std::nan(""), 0.5, 0.25).has_value());
  StudySeries s;
  s.rows.resize(2);
  s.rows[0] = {8, 0.125, 0.0, true, {}, {}, 0.0};
  s.rows[0].errors.E_linf_l2_u = 1.0;
  s.rows[1] = {16, 0.0625, 0.0, false, "boom", {}, 0.0};
  EXPECT_FALSE(s.eocs(Norm::linf_l2_u)[0].has_value());
}

TEST(DtRuleParse, AcceptedForms) {
  EXPECT_EQ(DtRule::parse("h2").dt(8), 1.0 / 64);
  EXPECT_EQ(DtRule::parse("h_squared").dt(4), 1.0 / 16);
  const auto r = DtRule::parse("h_over:16");
  EXPECT_EQ(r.dt(8), 1.0 / 128);
  EXPECT_EQ(r.str(), "h_over:16");
  EXPECT_EQ(DtRule::parse(r.str()).dt(5), r.dt(5));
}

TEST(DtRuleParse, Rejections) {
  EXPECT_THROW(DtRule::parse("h3"), ConfigError);
  EXPECT_THROW(DtRule::parse("h_over:"), ConfigError);
  EXPECT_THROW(DtRule::parse("h_over:0"), ConfigError);
  EXPECT_THROW(DtRule::parse("h_over:4x"), ConfigError);
}

TEST(Config, FullFile) {
  const auto c = parse(
      "# desk study\n"
      "schemes = 2,1,0 ; 2,2,0.01\n"
      "nu = 1, 1e-4   # two viscosities\n"
      "N = 8, 16\n"
      "dt_rule = h_over:16\n"
      "T = 0.5\n"
      "init = stokes_projection\n"
      "output_dir = /tmp/x\n"
      "workers = 2\n");
  ASSERT_EQ(c.schemes.size(), 2u);
  EXPECT_EQ(c.schemes[1], (SchemeSpec{2, 2, 0.01}));
  EXPECT_EQ(c.nus, (std::vector<double>{1.0, 1e-4}));
  EXPECT_EQ(c.Ns, (std::vector<int>{8, 16}));
  EXPECT_EQ(c.dt_rule.kind, DtRule::Kind::h_over);
  EXPECT_EQ(c.T, 0.5);
  EXPECT_EQ(c.init_mode, InitMode::stokes_projection);
  EXPECT_EQ(c.output_dir, "/tmp/x");
  EXPECT_EQ(c.workers, 2);
}

TEST(Config, DefaultsFromEmptyFile) {
  const auto c = parse("");
  EXPECT_EQ(c.Ns, desk_mesh_list());
  EXPECT_EQ(c.schemes.size(), 1u);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse("N = 16, 8\n"), ConfigError);
  EXPECT_THROW(parse("N = 8, 8\n"), ConfigError);
  EXPECT_THROW(parse("N = 0\n"), ConfigError);
  EXPECT_THROW(parse("nu = 0\n"), ConfigError);
  EXPECT_THROW(parse("nu = abc\n"), ConfigError);
  EXPECT_THROW(parse("schemes = 2,2,0\n"), ConfigError);
  EXPECT_THROW(parse("schemes = 2,1\n"), ConfigError);
  EXPECT_THROW(parse("colour = red\n"), ConfigError);
  EXPECT_THROW(parse("T = 1\nT = 2\n"), ConfigError);
  EXPECT_THROW(parse("just words\n"), ConfigError);
  EXPECT_THROW(parse("T = 0.001\nN = 4\ndt_rule = h_over:1\n"), ConfigError);
  EXPECT_THROW(parse("init = magic\n"), ConfigError);
  EXPECT_THROW(parse("workers = 0\n"), ConfigError);
}

TEST(Config, MissingFileNamesThePath) {
  try {
    load_study_config("/nonexistent/study.cfg");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/study.cfg"), std::string::npos);
  }
}

TEST(Study, SingleMeshHasNoEoc) {
  const auto dir = std::filesystem::temp_directory_path() / "oseen_study_single";
  std::filesystem::remove_all(dir);
  StudyConfig c;
  c.Ns = {4};
  c.T = 0.25;
  c.output_dir = dir.string();
  const auto table = run_study(c);
  ASSERT_EQ(table.series.size(), 1u);
  EXPECT_TRUE(table.series[0].eocs(Norm::l2_l2_p).empty());
  const std::string csv = slurp(dir / table.series[0].csv_name());
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "N,h,dt,E_linf_l2_u,E_l2_h10_u,E_l2_l2_p,runtime_s");
  EXPECT_TRUE(std::filesystem::exists(dir / "eoc_summary.txt"));
  EXPECT_TRUE(std::filesystem::exists(dir / "plot.gp"));
}

TEST(Study, ErrorColumnsAreDeterministicAcrossWorkerCounts) {
  auto strip_runtime = [](const std::string& csv) {
    std::istringstream is(csv);
    std::string line, out;
    while (std::getline(is, line)) out += line.substr(0, line.rfind(',')) + "\n";
    return out;
  };
  std::string first;
  for (int workers : {1, 3}) {
    const auto dir = std::filesystem::temp_directory_path() / ("oseen_study_w" + std::to_string(workers));
    std::filesystem::remove_all(dir);
    StudyConfig c;
    c.schemes = {{2, 1, 0.0}, {1, 1, 0.1}};
    c.Ns = {3, 4, 6};
    c.T = 0.2;
    c.dt_rule = DtRule::parse("h_over:4");
    c.workers = workers;
    c.output_dir = dir.string();
    const auto table = run_study(c);
    std::string all;
    for (const auto& s : table.series) all += strip_runtime(slurp(dir / s.csv_name()));
    if (first.empty())
      first = all;
    else
      EXPECT_EQ(all, first);
    for (const auto& s : table.series)
      for (const auto& r : s.rows) EXPECT_TRUE(r.ok) << r.failure;
  }
}

TEST(Study, FailedPointIsRecordedNotThrown) {
  StudyConfig c;
  c.schemes = {{1, 1, 0.1}};
  c.nus = {1e-4};
  c.Ns = {16};
  c.T = 1.0;
  c.dt_rule = DtRule::parse("h_over:0.0625");
  // dt = 1 folds elements under the characteristic map
  const auto row = run_study_point(c.schemes[0], 1e-4, 16, c);
  EXPECT_FALSE(row.ok);
  EXPECT_FALSE(row.failure.empty());
  std::ostringstream os;
  write_study_csv(os, StudySeries{c.schemes[0], 1e-4, {row}});
  EXPECT_NE(os.str().find("nan"), std::string::npos);
}

TEST(Verify, PropertySuitePasses) {
  const auto results = run_property_suite();
  EXPECT_GE(results.size(), 12u);
  for (const auto& r : results) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
  std::ostringstream os;
  EXPECT_TRUE(report_property_suite(results, os));
  EXPECT_EQ(os.str().find("FAIL"), std::string::npos);
}
