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

#ifndef RISKVO__SIMULATION_HPP
#define RISKVO__SIMULATION_HPP

#include <riskvo/scenario.hpp>

#include <cstdint>
#include <vector>

namespace riskvo {

//==============================================================================
struct AgentStepRecord
{
  /// True state at the start of the step.
  Vec4 state = Vec4::Zero();
  /// Applied acceleration (for the VO baseline, the equivalent one).
  Vec2 input = Vec2::Zero();
  /// Commanded, noise-free change of velocity over the step.
  Vec2 velocity_change = Vec2::Zero();
  double solve_ms = 0.0;
  bool fallback = false;
  bool hard_failure = false;
  int nodes = 0;
  double slack = 0.0;
};

struct TrajectoryLog
{
  double tau_s = 0.05;
  std::vector<double> radii;
  std::vector<Vec2> goals;
  std::vector<std::vector<Vec2>> obstacles;
  /// records[step][agent]
  std::vector<std::vector<AgentStepRecord>> records;
  /// States after the last step.
  std::vector<Vec4> final_states;

  int step_count() const { return static_cast<int>(records.size()); }
  int agent_count() const { return static_cast<int>(radii.size()); }

  /// State of `agent` at `step`; step_count() returns the final state.
  Vec4 state(int step, int agent) const;
};

//==============================================================================
struct Metrics
{
  int agents = 0;
  int steps = 0;
  /// Smallest center distance over all pairs and recorded states.
  double min_pairwise_distance_m = kInf;
  /// Smallest center distance minus the two radii.
  double min_pair_gap_m = kInf;
  bool collision = false;
  /// Every agent within the goal tolerance at the final state.
  bool reached_goals = false;
  /// Every agent within the goal tolerance at some recorded state.
  bool arrived = false;
  bool success = false;
  double max_goal_error_m = 0.0;
  double mean_solve_ms = 0.0;
  double median_solve_ms = 0.0;
  double max_solve_ms = 0.0;
  /// Mean norm of the commanded velocity change per agent step.
  double mean_velocity_change_mps = 0.0;
  /// Smallest center-to-obstacle distance (infinite without obstacles).
  double static_clearance_m = kInf;
  int fallback_steps = 0;
  int hard_failures = 0;
};

Metrics compute_metrics(const TrajectoryLog& log, double goal_tolerance_m);

nlohmann::json metrics_to_json(const Metrics& metrics);

/// Throws ParseError on a missing or mistyped field.
Metrics metrics_from_json(const nlohmann::json& j);

//==============================================================================
struct SimulationOptions
{
  /// Worker threads for independent trials.
  int threads = 1;
  /// When false every solve time is recorded as zero so that exported files
  /// depend only on the scenario and seed.
  bool record_timing = true;
};

struct TrialResult
{
  int trial = 0;
  TrajectoryLog log;
  Metrics metrics;
};

struct TrialSummary
{
  int trials = 0;
  int successes = 0;
  double success_rate = 0.0;
  int collision_free = 0;
  /// Trials that arrived without collision.
  int arrivals = 0;
  /// Over successful trials only (NaN when there are none).
  double mean_min_distance_m = 0.0;
  double mean_min_distance_all_m = 0.0;
  double mean_solve_ms = 0.0;
  double median_solve_ms = 0.0;
  double mean_velocity_change_mps = 0.0;
  double mean_static_clearance_m = 0.0;
  int fallback_steps = 0;
  int hard_failures = 0;
};

/// Simulate one seeded trial of `scenario`.
TrialResult run_trial(
  const Scenario& scenario, int trial, const SimulationOptions& options = {});

/// Trials 0..scenario.trials-1, in trial order regardless of threads.
std::vector<TrialResult> run_trials(
  const Scenario& scenario, const SimulationOptions& options = {});

TrialSummary summarize(const std::vector<TrialResult>& results);

nlohmann::json summary_to_json(const TrialSummary& summary);

} // namespace riskvo

#endif // RISKVO__SIMULATION_HPP
