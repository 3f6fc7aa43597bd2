#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "obsim/config.hpp"
#include "obsim/trajectory_io.hpp"

#ifndef OBSIM_CLI
#error "OBSIM_CLI must name the obsim executable"
#endif

using namespace obsim;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("obsim_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  fs::path write(const std::string& name, const std::string& text) const {
    write_file(path(name), text);
    return path(name);
  }

  Result run(const std::string& args) const {
    const fs::path out = dir_ / "stdout.txt";
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = std::string(OBSIM_CLI) + " " + args + " >" + out.string() + " 2>" +
                            err.string();
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file(out);
    r.err = read_file(err);
    return r;
  }

  fs::path dir_;
};

const char* kPair = R"({
  "name": "pair",
  "dt": 0.01,
  "duration": 0.5,
  "bodies": [
    {"name": "A", "mass": 1.0, "fixed": true},
    {"name": "B", "mass": 0.001, "attractors": ["A"], "position": [1, 0, 0], "velocity": [0, 1, 0]}
  ]
})";

}  // namespace

TEST_F(Cli, SimulateIsByteIdenticalAcrossRuns) {
  const Result a = run("simulate --duration 1.0");
  const Result b = run("simulate --duration 1.0");
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const Trajectory traj = parse_csv(a.out);
  const ScenarioConfig cfg = sem_config();
  EXPECT_EQ(traj.samples.front().q, cfg.scenario.init.q);
  EXPECT_EQ(traj.samples.front().qdot, cfg.scenario.init.qdot);
  EXPECT_DOUBLE_EQ(traj.samples.back().t, 1.0);
}

TEST_F(Cli, ZeroDurationWritesOneRow) {
  const Result r = run("simulate --duration 0 --out " + path("one.csv").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_csv(path("one.csv")).size(), 1u);
}

TEST_F(Cli, ReduceReportsTheDriveCoordinate) {
  ASSERT_EQ(run("simulate --out " + path("sem.csv").string()).code, 0);
  const Result r = run("reduce " + path("sem.csv").string() + " --out " + path("model.json").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("hypothesis: ok"), std::string::npos);
  EXPECT_NE(r.out.find("drive: theta(Earth)"), std::string::npos);
  EXPECT_NE(r.out.find("max_knot_residual: 0\n"), std::string::npos) << r.out;
  const ReducedModel model = model_from_json(read_file(path("model.json")));
  EXPECT_EQ(model.dof(), 1);
}

TEST_F(Cli, ReduceOfAClosedOrbitFailsTheHypothesis) {
  const fs::path cfg = write("pair.json", kPair);
  const std::string flags = " --config " + cfg.string();
  ASSERT_EQ(run("simulate --duration 7.0 --out " + path("loop.csv").string() + flags).code, 0);
  const Result r = run("reduce " + path("loop.csv").string() + flags);
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("hypothesis: FAILED"), std::string::npos);
}

TEST_F(Cli, ConfigErrorsExitTwoAndNameTheField) {
  auto doc = nlohmann::json::parse(kPair);
  doc["dt"] = -1;
  const fs::path cfg = write("bad.json", doc.dump());
  const Result r = run("simulate --config " + cfg.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("dt"), std::string::npos) << r.err;
  EXPECT_EQ(run("simulate --bogus").code, 2);
  EXPECT_EQ(run("").code, 2);
}

TEST_F(Cli, MissingFilesExitOne) {
  EXPECT_EQ(run("simulate --config " + path("absent.json").string()).code, 1);
  EXPECT_EQ(run("reduce " + path("absent.csv").string()).code, 1);
}

TEST_F(Cli, DistinguishWritesAReport) {
  const Result r = run("distinguish --candidate copy --out " + path("report.json").string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = nlohmann::json::parse(read_file(path("report.json")));
  EXPECT_EQ(report["verdict"], "INDISTINGUISHABLE");
  EXPECT_EQ(report["candidate"], "copy");
  EXPECT_NE(r.err.find("verdict: INDISTINGUISHABLE"), std::string::npos);
  EXPECT_EQ(run("distinguish --candidate hologram").code, 2);
}

TEST_F(Cli, RenderWritesOneFramePerSample) {
  const fs::path cfg = write("pair.json", kPair);
  const std::string flags = " --config " + cfg.string();
  ASSERT_EQ(run("simulate --duration 0.02 --out " + path("three.csv").string() + flags).code, 0);
  ASSERT_EQ(read_csv(path("three.csv")).size(), 3u);
  const Result r = run("render " + path("three.csv").string() + " --out " +
                       path("frames").string() + flags);
  ASSERT_EQ(r.code, 0) << r.err;
  int files = 0;
  for (const auto& entry : fs::directory_iterator(path("frames"))) {
    EXPECT_EQ(entry.path().extension(), ".pgm");
    ++files;
  }
  EXPECT_EQ(files, 3);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 3);
  EXPECT_EQ(r.out.find("DIFFER"), std::string::npos);
  const PixelFrame frame = decode_pgm(read_file(path("frames") / "frame_00000.pgm"));
  EXPECT_EQ(frame.R, 64);
}

TEST_F(Cli, RenderOfAnEmptyWindowIsBlank) {
  auto doc = nlohmann::json::parse(kPair);
  doc["render"] = {{"window", {5, 6, 5, 6}}};
  const fs::path cfg = write("far.json", doc.dump());
  const std::string flags = " --config " + cfg.string();
  ASSERT_EQ(run("simulate --duration 0.02 --out " + path("t.csv").string() + flags).code, 0);
  ASSERT_EQ(run("render " + path("t.csv").string() + " --out " + path("f").string() + flags).code, 0);
  const PixelFrame frame = decode_pgm(read_file(path("f") / "frame_00001.pgm"));
  for (auto v : frame.values) ASSERT_EQ(v, 0u);
}
