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

#include <riskvo/simulation.hpp>
#include <riskvo/random.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <cmath>
#include <limits>
#include <thread>

namespace riskvo {

using nlohmann::json;

namespace {

constexpr std::uint64_t kInitialStateKey = std::numeric_limits<std::uint64_t>::max();

double median(std::vector<double> values)
{
  if (values.empty())
    return 0.0;
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size()/2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2 == 1)
    return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5*(lower + upper);
}

json finite_or_null(double v)
{
  return std::isfinite(v) ? json(v) : json(nullptr);
}

double read_number(const json& j, const char* key)
{
  if (!j.contains(key))
    throw ParseError(std::string("metrics: missing field ") + key);
  const auto& v = j.at(key);
  if (v.is_null())
    return kInf;
  if (!v.is_number())
    throw ParseError(std::string("metrics: field ") + key + " is not a number");
  return v.get<double>();
}

bool read_bool(const json& j, const char* key)
{
  if (!j.contains(key) || !j.at(key).is_boolean())
    throw ParseError(std::string("metrics: missing boolean ") + key);
  return j.at(key).get<bool>();
}

int read_int(const json& j, const char* key)
{
  if (!j.contains(key) || !j.at(key).is_number_integer())
    throw ParseError(std::string("metrics: missing integer ") + key);
  return j.at(key).get<int>();
}

} // namespace

//==============================================================================
Vec4 TrajectoryLog::state(const int step, const int agent) const
{
  if (step == step_count())
    return final_states.at(agent);
  return records.at(step).at(agent).state;
}

//==============================================================================
Metrics compute_metrics(const TrajectoryLog& log, const double goal_tolerance_m)
{
  Metrics m;
  m.agents = log.agent_count();
  m.steps = log.step_count();

  std::vector<PolygonObstacle> polys;
  for (const auto& o : log.obstacles)
    polys.push_back(polygon_to_halfspaces(o));

  for (int s = 0; s <= m.steps; ++s)
  {
    for (int i = 0; i < m.agents; ++i)
    {
      const Vec2 p_i = log.state(s, i).head<2>();
      for (const auto& poly : polys)
        m.static_clearance_m = std::min(m.static_clearance_m, poly.distance(p_i));

      for (int j = i + 1; j < m.agents; ++j)
      {
        const double d = (p_i - log.state(s, j).head<2>()).norm();
        m.min_pairwise_distance_m = std::min(m.min_pairwise_distance_m, d);
        const double gap = d - log.radii[i] - log.radii[j];
        m.min_pair_gap_m = std::min(m.min_pair_gap_m, gap);
        if (gap < 0.0)
          m.collision = true;
      }
    }
  }

  m.reached_goals = true;
  m.arrived = true;
  for (int i = 0; i < m.agents; ++i)
  {
    bool hit = false;
    for (int s = 0; s <= m.steps && !hit; ++s)
      hit = (log.state(s, i).head<2>() - log.goals[i]).norm() <= goal_tolerance_m;
    m.arrived = m.arrived && hit;

    const double err = (log.state(m.steps, i).head<2>() - log.goals[i]).norm();
    m.max_goal_error_m = std::max(m.max_goal_error_m, err);
    if (err > goal_tolerance_m)
      m.reached_goals = false;
  }
  m.success = m.reached_goals && !m.collision;

  std::vector<double> times;
  double change = 0.0;
  for (const auto& row : log.records)
  {
    for (const auto& r : row)
    {
      times.push_back(r.solve_ms);
      change += r.velocity_change.norm();
      m.fallback_steps += r.fallback ? 1 : 0;
      m.hard_failures += r.hard_failure ? 1 : 0;
    }
  }
  if (!times.empty())
  {
    double sum = 0.0;
    for (double t : times)
      sum += t;
    m.mean_solve_ms = sum/static_cast<double>(times.size());
    m.max_solve_ms = *std::max_element(times.begin(), times.end());
    m.median_solve_ms = median(times);
    m.mean_velocity_change_mps = change/static_cast<double>(times.size());
  }
  return m;
}

//==============================================================================
json metrics_to_json(const Metrics& m)
{
  return json{
    {"agents", m.agents},
    {"steps", m.steps},
    {"min_pairwise_distance_m", finite_or_null(m.min_pairwise_distance_m)},
    {"min_pair_gap_m", finite_or_null(m.min_pair_gap_m)},
    {"collision", m.collision},
    {"reached_goals", m.reached_goals},
    {"arrived", m.arrived},
    {"success", m.success},
    {"max_goal_error_m", m.max_goal_error_m},
    {"mean_solve_ms", m.mean_solve_ms},
    {"median_solve_ms", m.median_solve_ms},
    {"max_solve_ms", m.max_solve_ms},
    {"mean_velocity_change_mps", m.mean_velocity_change_mps},
    {"static_clearance_m", finite_or_null(m.static_clearance_m)},
    {"fallback_steps", m.fallback_steps},
    {"hard_failures", m.hard_failures},
  };
}

//==============================================================================
Metrics metrics_from_json(const json& j)
{
  if (!j.is_object())
    throw ParseError("metrics: expected an object");
  Metrics m;
  m.agents = read_int(j, "agents");
  m.steps = read_int(j, "steps");
  m.min_pairwise_distance_m = read_number(j, "min_pairwise_distance_m");
  m.min_pair_gap_m = read_number(j, "min_pair_gap_m");
  m.collision = read_bool(j, "collision");
  m.reached_goals = read_bool(j, "reached_goals");
  m.arrived = read_bool(j, "arrived");
  m.success = read_bool(j, "success");
  m.max_goal_error_m = read_number(j, "max_goal_error_m");
  m.mean_solve_ms = read_number(j, "mean_solve_ms");
  m.median_solve_ms = read_number(j, "median_solve_ms");
  m.max_solve_ms = read_number(j, "max_solve_ms");
  m.mean_velocity_change_mps = read_number(j, "mean_velocity_change_mps");
  m.static_clearance_m = read_number(j, "static_clearance_m");
  m.fallback_steps = read_int(j, "fallback_steps");
  m.hard_failures = read_int(j, "hard_failures");
  return m;
}

//==============================================================================
TrialResult run_trial(
  const Scenario& scenario, const int trial, const SimulationOptions& options)
{
  const int n = static_cast<int>(scenario.agents.size());
  const int steps = scenario.steps();

  std::vector<AgentConfig> configs;
  for (int i = 0; i < n; ++i)
    configs.push_back(scenario.agent_config(i));

  std::vector<PolygonObstacle> obstacles;
  for (const auto& o : scenario.obstacles)
    obstacles.push_back(polygon_to_halfspaces(o));

  TrialResult result;
  result.trial = trial;
  auto& log = result.log;
  log.tau_s = scenario.tau_s;
  log.obstacles = scenario.obstacles;

  WorldState world;
  world.obstacles = obstacles;
  std::vector<Vec4> truth(n);
  for (int i = 0; i < n; ++i)
  {
    const auto& spec = scenario.agents[i];
    log.radii.push_back(spec.radius);
    log.goals.push_back(spec.goal);
    world.radii.push_back(spec.radius);
    world.beliefs.push_back(GaussianBelief{spec.initial_mean, spec.P0});

    NormalSampler sampler(derive_seed(scenario.seed,
      {static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(i),
        kInitialStateKey}));
    truth[i] = spec.initial_mean + sampler.gaussian(spec.P0);
  }
  world.true_states = truth;

  std::vector<PlannerMemory> memory(n);
  const Vec4 noise_var = (scenario.noise_scale*scenario.W).diagonal();
  log.records.reserve(steps);

  for (int step = 0; step < steps; ++step)
  {
    world.step = step;
    if (step > 0)
    {
      // Re-anchor every belief on the observed state.
      for (int i = 0; i < n; ++i)
        world.beliefs[i] = GaussianBelief{truth[i], scenario.agents[i].P0};
    }

    std::vector<AgentStepRecord> row(n);
    std::vector<Vec4> next(n);
    for (int i = 0; i < n; ++i)
    {
      const auto& cfg = configs[i];
      const auto& model = cfg.model;
      const GaussianBelief& belief = world.beliefs[i];
      AgentStepRecord& rec = row[i];
      rec.state = truth[i];

      NormalSampler sampler(derive_seed(scenario.seed,
        {static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(i),
          static_cast<std::uint64_t>(step)}));
      const Vec4 w = sampler.diagonal_gaussian(noise_var);

      if (scenario.method == Method::Vo)
      {
        std::vector<NeighborState> neighbors;
        for (int j : select_neighbors(world, i, cfg.sensing_radius,
          cfg.engage_time_s, &memory[i].engaged))
        {
          const Vec4& x = world.beliefs[j].mean;
          neighbors.push_back(NeighborState{x.head<2>(), x.tail<2>(), world.radii[j]});
        }
        const auto start = std::chrono::steady_clock::now();
        const VoSelection sel = vo_select_velocity(
          scenario.vo, belief.mean, world.radii[i], neighbors,
          scenario.agents[i].goal);
        rec.solve_ms = 1e3*std::chrono::duration<double>(
          std::chrono::steady_clock::now() - start).count();

        const Vec2 v = truth[i].tail<2>();
        rec.velocity_change = sel.velocity - v;
        rec.input = rec.velocity_change/model.tau_s();
        rec.fallback = !sel.feasible;
        Vec4 x;
        x << truth[i].head<2>() + model.tau_s()*sel.velocity, sel.velocity;
        next[i] = x + w;
      }
      else
      {
        const PlanResult plan = scenario.method == Method::Primary ?
          plan_step(cfg, belief, world, i, &memory[i]) :
          pbmpc_plan_step(cfg, scenario.pbmpc, belief, world, i, &memory[i]);
        rec.input = plan.input;
        rec.velocity_change = model.tau_s()*plan.input;
        rec.solve_ms = plan.diagnostics.solve_ms;
        rec.fallback = plan.diagnostics.fallback;
        rec.hard_failure = plan.diagnostics.hard_failure;
        rec.nodes = plan.diagnostics.nodes;
        rec.slack = plan.diagnostics.slack;
        next[i] = discrete_step(model, truth[i], plan.input, w);
      }
      if (!options.record_timing)
        rec.solve_ms = 0.0;
    }

    truth = next;
    world.true_states = truth;
    log.records.push_back(std::move(row));
  }
  log.final_states = truth;
  result.metrics = compute_metrics(log, scenario.goal_tolerance_m);
  return result;
}

//==============================================================================
std::vector<TrialResult> run_trials(
  const Scenario& scenario, const SimulationOptions& options)
{
  scenario.validate();
  const int trials = scenario.trials;
  std::vector<TrialResult> results(trials);

  const int workers = std::max(1, std::min(options.threads, trials));
  if (workers == 1)
  {
    for (int t = 0; t < trials; ++t)
      results[t] = run_trial(scenario, t, options);
    return results;
  }

  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w)
  {
    pool.emplace_back([&]()
      {
        for (int t = next++; t < trials; t = next++)
        {
          try
          {
            results[t] = run_trial(scenario, t, options);
          }
          catch (...)
          {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error)
              error = std::current_exception();
          }
        }
      });
  }
  for (auto& th : pool)
    th.join();
  if (error)
    std::rethrow_exception(error);
  return results;
}

//==============================================================================
TrialSummary summarize(const std::vector<TrialResult>& results)
{
  TrialSummary s;
  s.trials = static_cast<int>(results.size());
  double min_distance = 0.0;
  double min_distance_all = 0.0;
  double clearance = 0.0;
  int clearance_count = 0;
  std::vector<double> medians;
  for (const auto& r : results)
  {
    const auto& m = r.metrics;
    min_distance_all += m.min_pairwise_distance_m;
    s.collision_free += m.collision ? 0 : 1;
    s.arrivals += (m.arrived && !m.collision) ? 1 : 0;
    if (m.success)
    {
      ++s.successes;
      min_distance += m.min_pairwise_distance_m;
    }
    s.mean_solve_ms += m.mean_solve_ms;
    medians.push_back(m.median_solve_ms);
    s.mean_velocity_change_mps += m.mean_velocity_change_mps;
    if (std::isfinite(m.static_clearance_m))
    {
      clearance += m.static_clearance_m;
      ++clearance_count;
    }
    s.fallback_steps += m.fallback_steps;
    s.hard_failures += m.hard_failures;
  }
  if (s.trials > 0)
  {
    s.success_rate = static_cast<double>(s.successes)/s.trials;
    s.mean_solve_ms /= s.trials;
    s.mean_velocity_change_mps /= s.trials;
    s.median_solve_ms = median(medians);
    s.mean_min_distance_all_m = min_distance_all/s.trials;
  }
  s.mean_min_distance_m = s.successes > 0 ?
    min_distance/s.successes : std::numeric_limits<double>::quiet_NaN();
  s.mean_static_clearance_m = clearance_count > 0 ?
    clearance/clearance_count : kInf;
  return s;
}

//==============================================================================
json summary_to_json(const TrialSummary& s)
{
  return json{
    {"trials", s.trials},
    {"successes", s.successes},
    {"success_rate", s.success_rate},
    {"collision_free", s.collision_free},
    {"arrivals", s.arrivals},
    {"mean_min_distance_m", finite_or_null(s.mean_min_distance_m)},
    {"mean_min_distance_all_m", finite_or_null(s.mean_min_distance_all_m)},
    {"mean_solve_ms", s.mean_solve_ms},
    {"median_solve_ms", s.median_solve_ms},
    {"mean_velocity_change_mps", s.mean_velocity_change_mps},
    {"mean_static_clearance_m", finite_or_null(s.mean_static_clearance_m)},
    {"fallback_steps", s.fallback_steps},
    {"hard_failures", s.hard_failures},
  };
}

} // namespace riskvo
