/*
 * Copyright (C) 2026 The riskvo Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
*/


#include <doctest.h>

#include <riskvo/output.hpp>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace riskvo;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
  const fs::path p = fs::temp_directory_path()/("riskvo_test_" + name);
  fs::remove_all(p);
  return p;
}

Scenario head_on(double noise_scale)
{
  Scenario s;
  s.name = "head_on";
  AgentSpec a;
  a.initial_mean = Vec4(-2, 0.05, 0, 0);
  a.goal = Vec2(2, 0.05);
  AgentSpec b;
  b.initial_mean = Vec4(2, -0.05, 0, 0);
  b.goal = Vec2(-2, -0.05);
  s.agents = {a, b};
  s.t_run_s = 3.0;
  s.horizon = 15;
  s.noise_scale = noise_scale;
  return s;
}

int count(const std::string& text, const std::string& needle)
{
  int n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + 1))
  {
    ++n;
  }
  return n;
}

} // namespace

//==============================================================================
TEST_CASE("built-in scenarios")
{
  const Scenario c20 = builtin_scenario("circle20");
  REQUIRE(c20.agents.size() == 20);
  CHECK(c20.horizon == 25);
  for (std::size_t i = 0; i < 20; ++i)
  {
    const auto& a = c20.agents[i];
    CHECK(a.initial_mean.head<2>().norm() == doctest::Approx(10.0));
    CHECK((a.goal + a.initial_mean.head<2>()).norm() < 1e-12);
    CHECK(a.delta == 0.1);
  }
  CHECK(c20.agents[5].initial_mean.head<2>().x() == doctest::Approx(0.0).epsilon(1e-12));

  const Scenario corridor = builtin_scenario("corridor");
  REQUIRE(corridor.agents.size() == 1);
  CHECK(corridor.agents[0].initial_mean == Vec4::Zero());
  CHECK(corridor.agents[0].goal == Vec2(0, 10));
  CHECK_FALSE(corridor.obstacles.empty());
  CHECK_NOTHROW(corridor.validate());

  CHECK(builtin_scenario("circle7").agents.size() == 7);
  CHECK_THROWS_AS(builtin_scenario("circle1"), ValidationError);
  CHECK_THROWS_AS(builtin_scenario("triangle"), ValidationError);

  // Defaults.
  const Scenario d;
  CHECK(d.tau_s == 0.05);
  CHECK(d.W.diagonal() == Vec4(1e-4, 1e-4, 1e-2, 1e-2));
  CHECK(d.steps() == 100);
  CHECK(c20.model_for(0).W() == c20.W);
  CHECK(c20.model_for(3).radius() == 0.1);
}

//==============================================================================
TEST_CASE("scenario validation")
{
  Scenario s;
  CHECK_THROWS_AS(s.validate(), ValidationError);

  s = head_on(1.0);
  CHECK_NOTHROW(s.validate());
  s.agents[1].initial_mean = Vec4(-1.8, 0.05, 0, 0);
  CHECK_THROWS_AS(s.validate(), ValidationError);

  s = head_on(1.0);
  s.obstacles.push_back({{-2.1, -0.1}, {-1.9, -0.1}, {-1.9, 0.1}});
  CHECK_THROWS_AS(s.validate(), ValidationError);

  s = head_on(1.0);
  s.obstacles.push_back({{0, 0}, {1, 1}, {2, 2}});
  CHECK_THROWS_AS(s.validate(), ValidationError);

  s = head_on(-1.0);
  CHECK_THROWS_AS(s.validate(), ValidationError);
}

//==============================================================================
TEST_CASE("scenario file parsing")
{
  const std::string text = R"({
  "name": "pair",
  "horizon": 12,
  "agents": [
    {"initial_mean": [0, 0, 0, 0], "goal_m": [1, 0]},
    {"initial_mean": [3, 0, 0, 0], "goal_m": [2, 0], "radius_m": 0.3}
  ]
})";
  const Scenario s = parse_scenario(text);
  CHECK(s.name == "pair");
  CHECK(s.horizon == 12);
  CHECK(s.agents[1].radius == 0.3);
  CHECK(s.agents[0].radius == 0.2);
  CHECK(s.t_run_s == 5.0);

  // Full round trip through the JSON form.
  const auto j = scenario_to_json(s);
  CHECK(scenario_to_json(scenario_from_json(j)) == j);
  CHECK(scenario_to_json(parse_scenario(j.dump(2))) == j);

  try
  {
    parse_scenario("{\n  \"horizon\": 3,\n  \"agents\": [ ,\n}", "bad.json");
    FAIL("expected a parse error");
  }
  catch (const ParseError& e)
  {
    CHECK(std::string(e.what()).rfind("bad.json:3:", 0) == 0);
  }

  try
  {
    parse_scenario(R"({"agents": [{"initial_mean": [0,0,0,0], "goal": [1, 0]}]})");
    FAIL("expected a parse error");
  }
  catch (const ParseError& e)
  {
    CHECK(std::string(e.what()).find("agents[0].goal: unknown field") != std::string::npos);
  }

  CHECK_THROWS_AS(parse_scenario(R"({"horizon": "ten"})"), ParseError);
  CHECK_THROWS_AS(parse_scenario(R"({"agents": []})"), ValidationError);
  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), IoError);
}

//==============================================================================
TEST_CASE("trials are deterministic")
{
  Scenario s = head_on(1.0);
  s.trials = 3;
  SimulationOptions opts;
  opts.record_timing = false;

  const auto once = run_trial(s, 1, opts);
  const auto again = run_trial(s, 1, opts);
  CHECK(trajectory_csv(once.log, 0) == trajectory_csv(again.log, 0));
  CHECK(metrics_to_json(once.metrics) == metrics_to_json(again.metrics));

  const auto serial = run_trials(s, opts);
  opts.threads = 3;
  const auto parallel = run_trials(s, opts);
  REQUIRE(serial.size() == 3);
  REQUIRE(parallel.size() == 3);
  for (std::size_t t = 0; t < 3; ++t)
  {
    CHECK(serial[t].trial == static_cast<int>(t));
    for (int i = 0; i < 2; ++i)
      CHECK(trajectory_csv(serial[t].log, i) == trajectory_csv(parallel[t].log, i));
  }
  CHECK(trajectory_csv(serial[0].log, 0) != trajectory_csv(serial[1].log, 0));
  CHECK(trajectory_csv(serial[1].log, 0) == trajectory_csv(once.log, 0));
}

//==============================================================================
TEST_CASE("noise-free single agent")
{
  Scenario s;
  AgentSpec a;
  // Equal offsets on both axes: input saturation bends nothing.
  a.goal = Vec2(1.2, -1.2);
  a.P0 = Mat4::Zero();
  s.agents = {a};
  s.noise_scale = 0.0;
  const auto r = run_trial(s, 0);
  CHECK(r.metrics.success);
  CHECK(r.metrics.max_goal_error_m < 1e-3);
  CHECK(r.log.step_count() == s.steps());

  // Straight-line-like: the path never strays from the segment.
  for (int t = 0; t <= r.log.step_count(); ++t)
  {
    const Vec2 p = r.log.state(t, 0).head<2>();
    const Vec2 d = a.goal.normalized();
    CHECK(std::abs(d.x()*p.y() - d.y()*p.x()) < 1e-9);
  }
}

//==============================================================================
TEST_CASE("noise level changes the separation statistics")
{
  auto distances = [](double scale)
  {
    Scenario s = head_on(scale);
    s.trials = 20;
    std::vector<double> out;
    for (const auto& r : run_trials(s))
      out.push_back(r.metrics.min_pairwise_distance_m);
    return out;
  };
  const auto low = distances(0.25);
  const auto high = distances(4.0);

  auto mean_var = [](const std::vector<double>& x)
  {
    double m = 0.0;
    for (double v : x)
      m += v;
    m /= x.size();
    double var = 0.0;
    for (double v : x)
      var += (v - m)*(v - m);
    return std::pair{m, var/(x.size() - 1)};
  };
  const auto [m_low, v_low] = mean_var(low);
  const auto [m_high, v_high] = mean_var(high);
  const double welch = (m_high - m_low)/std::sqrt(v_low/low.size() + v_high/high.size());
  MESSAGE("min distance ", m_low, " at 1/4 vs ", m_high, " at 4, t = ", welch);
  CHECK(std::abs(welch) > 3.0);
}

//==============================================================================
TEST_CASE("metrics on a hand-built log")
{
  TrajectoryLog log;
  log.radii = {0.2, 0.2, 0.1};
  log.goals = {Vec2(1, 0), Vec2(-1, 0), Vec2(0, 3)};
  const std::vector<std::vector<Vec2>> pos{
    {Vec2(-1, 0), Vec2(1, 0), Vec2(0, 2)},
    {Vec2(0, 0), Vec2(0.3, 0.1), Vec2(0, 2.5)},
    {Vec2(0.6, 0.1), Vec2(-0.6, 0.2), Vec2(0, 2.95)},
  };
  for (std::size_t t = 0; t < 2; ++t)
  {
    std::vector<AgentStepRecord> row(3);
    for (int i = 0; i < 3; ++i)
    {
      row[i].state << pos[t][i], 0, 0;
      row[i].velocity_change = Vec2(0.3*(i + 1), 0.4*(i + 1));
      row[i].solve_ms = 1.0 + t + i;
    }
    row[1].fallback = t == 1;
    log.records.push_back(row);
  }
  for (int i = 0; i < 3; ++i)
    log.final_states.push_back(Vec4(pos[2][i].x(), pos[2][i].y(), 0, 0));

  double oracle = kInf;
  double gap = kInf;
  for (const auto& p : pos)
  {
    for (int i = 0; i < 3; ++i)
    {
      for (int j = i + 1; j < 3; ++j)
      {
        const double d = (p[i] - p[j]).norm();
        oracle = std::min(oracle, d);
        gap = std::min(gap, d - log.radii[i] - log.radii[j]);
      }
    }
  }

  const Metrics m = compute_metrics(log, 0.5);
  CHECK(m.agents == 3);
  CHECK(m.steps == 2);
  CHECK(m.min_pairwise_distance_m == doctest::Approx(oracle));
  CHECK(m.min_pair_gap_m == doctest::Approx(gap));
  CHECK(m.collision);
  CHECK_FALSE(m.success);
  CHECK(m.reached_goals);
  CHECK(m.max_goal_error_m == doctest::Approx((Vec2(-0.6, 0.2) - Vec2(-1, 0)).norm()));
  CHECK(m.fallback_steps == 1);
  CHECK(m.mean_velocity_change_mps == doctest::Approx(1.0));
  CHECK(m.mean_solve_ms == doctest::Approx(2.5));
  CHECK(m.max_solve_ms == doctest::Approx(4.0));
  CHECK(m.static_clearance_m == kInf);

  // Tighter tolerance: arrival without finishing on the goal.
  const Metrics tight = compute_metrics(log, 0.1);
  CHECK_FALSE(tight.reached_goals);
  CHECK_FALSE(tight.arrived);
  log.final_states[1] = Vec4(-0.95, 0, 0, 0);
  log.final_states[0] = Vec4(0.95, 0, 0, 0);
  CHECK(compute_metrics(log, 0.1).reached_goals);

  // No pair ever closer than the radii.
  for (auto& row : log.records)
    row[1].state.head<2>() += Vec2(0, 5);
  log.final_states[1].head<2>() += Vec2(0, 5);
  const Metrics apart = compute_metrics(log, 10.0);
  CHECK_FALSE(apart.collision);
  CHECK(apart.success);
}

//==============================================================================
TEST_CASE("metrics JSON round trip")
{
  const auto r = run_trial(head_on(1.0), 0);
  const auto j = metrics_to_json(r.metrics);
  CHECK(metrics_to_json(metrics_from_json(j)) == j);
  auto broken = j;
  broken.erase("collision");
  CHECK_THROWS_AS(metrics_from_json(broken), ParseError);
}

//==============================================================================
TEST_CASE("export, reload and replay")
{
  const fs::path dir = scratch("export");
  Manifest manifest;
  manifest.scenario = head_on(1.0);
  manifest.trial = 2;
  manifest.record_timing = false;

  SimulationOptions opts;
  opts.record_timing = false;
  const auto result = run_trial(manifest.scenario, manifest.trial, opts);
  export_trial(manifest, result, dir.string());

  const std::string csv = read_file((dir/"agent_0.csv").string());
  CHECK(csv.rfind(trajectory_header(), 0) == 0);
  CHECK(count(csv, "\n") == result.log.step_count() + 2);
  const std::string first_row = csv.substr(csv.find('\n') + 1);
  CHECK(count(first_row.substr(0, first_row.find('\n')), ",") == 9);
  CHECK(fs::exists(dir/"agent_1.csv"));

  CHECK(metrics_to_json(load_metrics((dir/"metrics.json").string()))
    == metrics_to_json(result.metrics));

  // Replaying the manifest rewrites identical bytes.
  const Manifest loaded = load_manifest((dir/"manifest.json").string());
  CHECK(loaded.trial == 2);
  const fs::path again = scratch("replay");
  export_trial(loaded, replay(loaded), again.string());
  for (const char* name : {"agent_0.csv", "agent_1.csv", "metrics.json", "manifest.json"})
    CHECK(read_file((dir/name).string()) == read_file((again/name).string()));

  const TrajectoryLog log = load_log(dir.string());
  REQUIRE(log.agent_count() == 2);
  CHECK(log.step_count() == result.log.step_count());
  for (int i = 0; i < 2; ++i)
  {
    CHECK((log.final_states[i] - result.log.final_states[i]).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((log.state(17, i) - result.log.state(17, i)).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(log.goals[i] == result.log.goals[i]);
  }

  CHECK_THROWS_AS(load_log(scratch("missing").string()), Error);
  fs::remove_all(dir);
  fs::remove_all(again);
}

//==============================================================================
TEST_CASE("snapshot frames")
{
  const auto r = run_trial(head_on(1.0), 0);
  const fs::path dir = scratch("frames");

  CHECK(render_frames(r.log, {}, dir.string()).empty());
  CHECK_FALSE(fs::exists(dir));

  const auto files = render_frames(r.log, {0.0, 1.0, 3.0}, dir.string());
  REQUIRE(files.size() == 3);
  CHECK(fs::path(files[1]).filename() == "frame_001_step00020.svg");
  for (const auto& f : files)
    CHECK(fs::exists(f));

  // One filled disc per agent plus one dashed goal ring each.
  const std::string svg = read_file(files[0]);
  CHECK(count(svg, "<circle") == 4);
  CHECK(count(svg, "stroke-dasharray") == 2);
  CHECK(svg.find("t = 0.00 s") != std::string::npos);

  CHECK_THROWS_AS(render_frames(r.log, {3.2}, dir.string()), DomainError);
  CHECK_THROWS_AS(render_frames(r.log, {-0.1}, dir.string()), DomainError);
  fs::remove_all(dir);
}

//==============================================================================
TEST_CASE("trial summary")
{
  Scenario s = head_on(1.0);
  s.trials = 4;
  const auto results = run_trials(s);
  const auto sum = summarize(results);
  CHECK(sum.trials == 4);
  int ok = 0;
  double total = 0.0;
  for (const auto& r : results)
  {
    if (r.metrics.success)
    {
      ++ok;
      total += r.metrics.min_pairwise_distance_m;
    }
  }
  CHECK(sum.successes == ok);
  CHECK(sum.success_rate == doctest::Approx(ok/4.0));
  if (ok > 0)
    CHECK(sum.mean_min_distance_m == doctest::Approx(total/ok));
  else
    CHECK(std::isnan(sum.mean_min_distance_m));
  CHECK(summary_to_json(sum).contains("success_rate"));
}
