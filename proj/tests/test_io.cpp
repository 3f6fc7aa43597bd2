#include <gtest/gtest.h>

#include <json.hpp>

#include "obsim/config.hpp"
#include "obsim/trajectory_io.hpp"

#ifndef OBSIM_SCENARIO_DIR
#error "OBSIM_SCENARIO_DIR must point at the bundled scenarios"
#endif

using namespace obsim;

namespace {

const char* kMinimal = R"({
  "name": "pair",
  "dt": 0.01,
  "duration": 1.0,
  "bodies": [
    {"name": "A", "mass": 1.0, "fixed": true},
    {"name": "B", "mass": 0.001, "attractors": ["A"], "position": [1, 0, 0], "velocity": [0, 1, 0]}
  ]
})";

std::string with(const std::string& key, const std::string& value) {
  auto doc = nlohmann::json::parse(kMinimal);
  doc[key] = nlohmann::json::parse(value);
  return doc.dump();
}

std::string config_error_field(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<accepted>";
}

}  // namespace

TEST(Csv, HeaderAndExactRoundTrip) {
  const Scenario sc = sem::make();
  const Trajectory traj = simulate(sc.system, sc.init, 1.0, sem::kStep);
  const std::string csv = to_csv(traj);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "t,Earth_x,Earth_y,Earth_z,Earth_vx,Earth_vy,Earth_vz,"
            "Moon_x,Moon_y,Moon_z,Moon_vx,Moon_vy,Moon_vz");
  const Trajectory back = parse_csv(csv);
  ASSERT_EQ(back.size(), traj.size());
  EXPECT_EQ(back.meta.bodies, traj.meta.bodies);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    ASSERT_EQ(back.samples[k].t, traj.samples[k].t);
    ASSERT_EQ(back.samples[k].q, traj.samples[k].q);
    ASSERT_EQ(back.samples[k].qdot, traj.samples[k].qdot);
  }
  EXPECT_EQ(to_csv(back), csv);
}

TEST(Csv, RejectsMalformedInput) {
  EXPECT_THROW(parse_csv(""), ConfigError);
  EXPECT_THROW(parse_csv("t,A_x\n0,1\n"), ConfigError);
  EXPECT_THROW(parse_csv("t,A_x,A_y,A_z,A_vx,A_vy,A_vz\n0,1,2\n"), ConfigError);
  EXPECT_THROW(parse_csv("t,A_x,A_y,A_z,A_vx,A_vy,A_vz\n0,1,2,3,4,5,abc\n"), ConfigError);
}

TEST(ModelJson, RoundTripPlaysBackIdentically) {
  const ScenarioConfig cfg = sem_config();
  const ReducedModel model = reduce_scenario(cfg, 2.0);
  const std::string text = model_to_json(model);
  const ReducedModel back = model_from_json(text);
  EXPECT_EQ(back.drive().label(), model.drive().label());
  EXPECT_EQ(back.drive().unwrap_offsets, model.drive().unwrap_offsets);
  EXPECT_TRUE(back.has_inertia());
  const std::vector<double> times{0.0, 0.3, 1.234, 1.9};
  const Trajectory a = playback(model, times);
  const Trajectory b = playback(back, times);
  for (std::size_t k = 0; k < times.size(); ++k) {
    ASSERT_EQ(a.samples[k].q, b.samples[k].q);
    ASSERT_EQ(a.samples[k].qdot, b.samples[k].qdot);
  }
  EXPECT_EQ(model_to_json(back), text);
}

TEST(ModelJson, RejectsForeignDocuments) {
  EXPECT_THROW(model_from_json("{}"), ConfigError);
  EXPECT_THROW(model_from_json(R"({"format": "obsim-reduced-model", "version": 99})"), ConfigError);
  EXPECT_THROW(model_from_json("not json"), ConfigError);
}

TEST(ReportJson, CarriesVerdictAndSeries) {
  DistinguisherReport r;
  r.candidate = CandidateKind::padded;
  r.p = 9;
  r.n = 6;
  r.pre_equal = true;
  r.d_max = 1.25;
  r.times = {1.0, 2.0};
  r.deviation = {0.5, 1.25};
  r.verdict = Verdict::indistinguishable;
  const auto doc = nlohmann::json::parse(report_to_json(r));
  EXPECT_EQ(doc["candidate"], "padded");
  EXPECT_EQ(doc["verdict"], "INDISTINGUISHABLE");
  EXPECT_EQ(doc["dof_criterion"], true);
  EXPECT_EQ(doc["deviation"].size(), 2u);
  EXPECT_DOUBLE_EQ(doc["d_max"].get<double>(), 1.25);
}

TEST(Config, BundledScenarioMatchesBuiltIn) {
  const ScenarioConfig file = load_config(std::string(OBSIM_SCENARIO_DIR) + "/sun_earth_moon.json");
  const ScenarioConfig built = sem_config();
  EXPECT_EQ(file.scenario.system, built.scenario.system);
  EXPECT_EQ(file.scenario.init.q, built.scenario.init.q);
  EXPECT_EQ(file.scenario.init.qdot, built.scenario.init.qdot);
  EXPECT_EQ(file.dt, built.dt);
  EXPECT_EQ(file.duration, built.duration);
  EXPECT_EQ(file.observer, built.observer);
  EXPECT_EQ(file.protocol.t_f, built.protocol.t_f);
  EXPECT_EQ(file.protocol.impulse.fraction, built.protocol.impulse.fraction);
  EXPECT_EQ(file.reduction.charts, built.reduction.charts);
}

TEST(Config, MinimalDocumentGetsDefaults) {
  const ScenarioConfig cfg = parse_config(kMinimal);
  EXPECT_EQ(cfg.name, "pair");
  EXPECT_EQ(cfg.scenario.system.n(), 3);
  EXPECT_EQ(cfg.integrator, Integrator::rk4);
  EXPECT_DOUBLE_EQ(cfg.observer.eps_t, cfg.dt);
  EXPECT_EQ(cfg.scenario.init.q, Vector3d(1, 0, 0));
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_EQ(config_error_field(with("dt", "-0.01")), "dt");
  EXPECT_EQ(config_error_field(with("duration", "\"long\"")), "duration");
  EXPECT_EQ(config_error_field(with("integrator", "\"euler\"")), "integrator");
  EXPECT_EQ(config_error_field(with("surprise", "1")), "surprise");
  auto doc = nlohmann::json::parse(kMinimal);
  doc["bodies"][1]["mass"] = -1;
  EXPECT_EQ(config_error_field(doc.dump()), "bodies[1].mass");
  doc = nlohmann::json::parse(kMinimal);
  doc["bodies"][1]["attractors"] = {"Nowhere"};
  EXPECT_NE(config_error_field(doc.dump()), "<accepted>");
  EXPECT_THROW(parse_config("{"), ConfigError);
}

TEST(Config, MissingFileIsAnIoError) {
  EXPECT_THROW(load_config("/nonexistent/scenario.json"), std::ios_base::failure);
}
