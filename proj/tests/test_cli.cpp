#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("cslam_test_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "short.json") << R"({"duration": 25})";
  }

  Outcome run(const std::string& args) const {
    const std::string cmd = "cd '" + dir_.string() + "' && '" + CSLAM_CLI + "' " + args + " > stdout.txt 2> stderr.txt";
    const int status = std::system(cmd.c_str());
    Outcome o;
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    o.out = slurp(dir_ / "stdout.txt");
    o.err = slurp(dir_ / "stderr.txt");
    return o;
  }

  static std::string source(const std::string& rel) { return std::string(CSLAM_SOURCE_DIR) + "/" + rel; }

  static std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
    }
    return out;
  }

  static std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, MissingConfigExitsOneNamingPath) {
  const auto o = run("run --config missing.json");
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("missing.json"), std::string::npos);
}

TEST_F(Cli, UnknownKeyExitsOneNamingKey) {
  std::ofstream(dir_ / "bad.json") << R"({"frontend": {"tau": 0.5}})";
  const auto o = run("run --config bad.json");
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("frontend.tau"), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("replay --config short.json").code, 1);
  EXPECT_EQ(run("sweep --config short.json").code, 1);
  EXPECT_EQ(run("run --seed notanumber").code, 1);
  const auto o = run("replay --trace nope.csv --config short.json");
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("nope.csv"), std::string::npos);
  EXPECT_EQ(run("plot --run .").code, 1);
}

TEST_F(Cli, HelpExitsZero) { EXPECT_EQ(run("--help").code, 0); }

TEST_F(Cli, GenWritesWorldAndTruth) {
  const auto o = run("gen-world --config short.json --seed 3 --out w");
  ASSERT_EQ(o.code, 0) << o.err;
  const fs::path d = dir_ / first_line(o.out);
  EXPECT_TRUE(d.string().ends_with("-s3"));
  for (const char* f : {"config.json", "world.json", "truth.csv"}) EXPECT_TRUE(fs::exists(d / f)) << f;
  const auto world = nlohmann::json::parse(slurp(d / "world.json"));
  EXPECT_TRUE(world.contains("landmarks"));
  EXPECT_EQ(first_line(slurp(d / "truth.csv")), "robot,stamp,x,y,theta");
}

TEST_F(Cli, RunTwiceIsByteIdentical) {
  const auto a = run("run --config short.json --seed 7 --out a");
  const auto b = run("run --config short.json --seed 7 --out b");
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  const auto ta = tree(dir_ / "a");
  EXPECT_EQ(ta, tree(dir_ / "b"));
  const std::string name = fs::path(first_line(a.out)).filename().string();
  for (const char* f : {"config.json", "summary.json", "trajectories.csv", "loops.csv", "optimizations.csv",
                        "comm_series.csv", "comm_summary.json", "graph.g2o", "comm.svg"}) {
    EXPECT_TRUE(ta.count(name + "/" + f)) << f;
  }
}

TEST_F(Cli, SeedChangesRunDirectory) {
  const auto a = run("run --config short.json --seed 1 --out o");
  const auto b = run("run --config short.json --seed 2 --out o");
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  EXPECT_NE(a.out, b.out);
}

TEST_F(Cli, ReplayCapacityEqualsTraceIntegral) {
  const auto o =
      run("replay --trace " + source("fixtures/trace_3robots.csv") + " --config " + source("configs/replay_60s.json"));
  ASSERT_EQ(o.code, 0) << o.err;
  const auto s = nlohmann::json::parse(slurp(dir_ / first_line(o.out) / "comm_summary.json"));
  EXPECT_EQ(s["capacity_bytes"].get<std::uint64_t>(), 450'000'000u);  // 6 pairs x 10 Mbps x 60 s / 8
  const auto cfg = nlohmann::json::parse(slurp(dir_ / first_line(o.out) / "config.json"));
  EXPECT_TRUE(cfg["link"]["trace"].is_string());
}

TEST_F(Cli, SweepWritesRowsInGridOrder) {
  std::ofstream(dir_ / "grid.json") << R"({"tau_sim": [0.6, 0.8], "min_inliers": [40, 80]})";
  const auto o = run("sweep --config short.json --grid grid.json --threads 2");
  ASSERT_EQ(o.code, 0) << o.err;
  const fs::path d = dir_ / first_line(o.out);
  std::istringstream csv(slurp(d / "sweep.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line.substr(0, 20), "tau_sim,min_inliers,");
  std::vector<std::string> keys;
  while (std::getline(csv, line)) keys.push_back(line.substr(0, line.find(',', line.find(',') + 1)));
  EXPECT_EQ(keys, (std::vector<std::string>{"0.6,40", "0.6,80", "0.8,40", "0.8,80"}));
  EXPECT_TRUE(fs::exists(d / "sweep.svg"));
  std::ofstream(dir_ / "bad_grid.json") << R"({"tau_sim": [2]})";
  const auto bad = run("sweep --config short.json --grid bad_grid.json");
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("tau_sim"), std::string::npos);
}

TEST_F(Cli, EvalAndPlotReproduceRunOutputs) {
  const auto o = run("run --config short.json");
  ASSERT_EQ(o.code, 0) << o.err;
  const fs::path d = dir_ / first_line(o.out);
  const std::string svg = slurp(d / "comm.svg");
  fs::remove(d / "comm.svg");
  ASSERT_EQ(run("plot --run " + d.string()).code, 0);
  EXPECT_EQ(slurp(d / "comm.svg"), svg);

  ASSERT_EQ(run("eval --run " + d.string()).code, 0);
  const auto ev = nlohmann::json::parse(slurp(d / "eval.json"));
  const auto summary = nlohmann::json::parse(slurp(d / "summary.json"));
  EXPECT_NEAR(ev["ate"]["mean"].get<double>(), summary["ate"]["mean"].get<double>(), 1e-6);
  const std::string first = slurp(d / "eval.json");
  ASSERT_EQ(run("eval --run " + d.string()).code, 0);
  EXPECT_EQ(slurp(d / "eval.json"), first);
  EXPECT_NE(run("eval --run nowhere").code, 0);
}
