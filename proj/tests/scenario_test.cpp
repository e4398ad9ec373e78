#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "tirepde/scenario.hpp"

using namespace tirepde;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tirepde_scenario_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

ScenarioConfig short_run(RunMode mode, const fs::path& dir) {
  ScenarioConfig c;
  c.mode = mode;
  c.output_dir = dir.string();
  c.grid.horizon = 0.02;
  c.log.snapshot_period = 0.005;
  return c;
}

}  // namespace

TEST(Scenario, OpenLoopArtifacts) {
  const fs::path dir = fresh_dir("open");
  std::ostringstream log;
  ASSERT_EQ(run(short_run(RunMode::open_loop, dir), log), kExitOk) << log.str();
  for (const char* f : {"trace.csv", "norms.csv", "snapshots.csv", "states.svg", "norms.svg",
                        "z1_heatmap.svg", "summary.txt", "config.txt"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const std::string trace = slurp(dir / "trace.csv");
  EXPECT_NE(trace.find("# seed=1"), std::string::npos);
  EXPECT_NE(trace.find("# sensors=yaw_rate std 0.01 period 0.005"), std::string::npos);
  EXPECT_EQ(slurp(dir / "states.svg").rfind("<svg", 0), 0u);
  EXPECT_NE(slurp(dir / "summary.txt").find("plant_norm(t_final)"), std::string::npos);
}

TEST(Scenario, ClosedLoopWithSavedFilter) {
  const fs::path dir = fresh_dir("closed");
  fs::create_directories(dir);
  // One slow real mode is enough to exercise the file path.
  {
    std::ofstream f(dir / "in_filter.txt");
    f << "rational-filter 1\nshape 2 2\nfit_error 0\nD 0 0 0 0\n"
         "mode -100 0 0 1 0 0 0 0 0 1 0\n";
  }
  ScenarioConfig c = short_run(RunMode::closed_loop, dir);
  c.filter_file = (dir / "in_filter.txt").string();
  c.k_max = 5;
  c.spot_checks = 10;
  std::ostringstream log;
  ASSERT_EQ(run(c, log), kExitOk) << log.str();
  const std::string summary = slurp(dir / "summary.txt");
  EXPECT_NE(summary.find("small_gain.lhs"), std::string::npos);
  EXPECT_NE(summary.find("poles.certified = yes"), std::string::npos);
  EXPECT_NE(summary.find("injection.order = 1"), std::string::npos);
  EXPECT_NE(summary.find("error_norm(t_final)"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "filter.txt"));
  EXPECT_TRUE(fs::exists(dir / "err_z1_heatmap.svg"));
  // The small-gain condition fails at the reference gains: a warning, not an error.
  EXPECT_NE(log.str().find("warning: small-gain condition not met"), std::string::npos);
}

TEST(Scenario, FrequencyAnalysisArtifacts) {
  const fs::path dir = fresh_dir("freq");
  ScenarioConfig c = short_run(RunMode::freq_analysis, dir);
  c.omega_points = 50;
  std::ostringstream log;
  ASSERT_EQ(run(c, log), kExitOk) << log.str();
  for (const char* f : {"H1.csv", "H2.csv", "injection_gain.csv", "H1.svg", "H2.svg",
                        "injection_gain.svg"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  EXPECT_NE(slurp(dir / "summary.txt").find("small_gain.satisfied = no"), std::string::npos);
}

TEST(Scenario, CertifyArtifacts) {
  const fs::path dir = fresh_dir("certify");
  std::ostringstream log;
  ASSERT_EQ(run(short_run(RunMode::certify_poles, dir), log), kExitOk) << log.str();
  EXPECT_EQ(slurp(dir / "certificate.txt").rfind("verdict: certified", 0), 0u);
  EXPECT_NE(slurp(dir / "zeros.csv").find("axle,k,re_s,im_s,residual"), std::string::npos);
}

TEST(Scenario, ExitCodes) {
  std::ostringstream log;
  ScenarioConfig bad = short_run(RunMode::open_loop, fresh_dir("bad"));
  bad.grid.dt = 1e-3;
  EXPECT_EQ(run(bad, log), kExitConfig);
  EXPECT_NE(log.str().find("config error"), std::string::npos);

  ScenarioConfig missing = short_run(RunMode::closed_loop, fresh_dir("missing"));
  missing.filter_file = "/nonexistent/filter.txt";
  missing.k_max = 2;
  missing.spot_checks = 0;
  EXPECT_EQ(run(missing, log), kExitConfig);

  ScenarioConfig diverge = short_run(RunMode::open_loop, fresh_dir("nan"));
  diverge.initial_X(0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(run(diverge, log), kExitConfig);  // rejected before running
}

TEST(Svg, CsvReaderSkipsCommentsAndReadsNan) {
  std::istringstream in("# meta\nt,a,b\n0,1,nan\n1,2,3\n");
  const svg::CsvTable t = svg::read_csv(in);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_TRUE(std::isnan(t.column("b")[0]));
  EXPECT_EQ(t.column("a")[1], 2.0);
}
