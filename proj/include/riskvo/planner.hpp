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

#ifndef RISKVO__PLANNER_HPP
#define RISKVO__PLANNER_HPP

#include <riskvo/geometry.hpp>
#include <riskvo/miqp.hpp>

#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <vector>

namespace riskvo {

//==============================================================================
struct AgentConfig
{
  AgentModel model;
  Mat4 Q = Vec4(10.0, 10.0, 0.1, 0.1).asDiagonal();
  Mat2 R = Vec2(0.1, 0.1).asDiagonal();
  Mat4 Q_N = Vec4(10.0, 10.0, 0.0, 0.0).asDiagonal();
  Vec4 x_ref = Vec4::Zero();
  double delta = 0.1;
  double epsilon = 0.01;
  int horizon = 20;

  /// Covariance the belief is reset to at every step.
  Mat4 P0 = Vec4::Constant(1e-6).asDiagonal();

  /// Neighbors farther than this (center to center) are left out.
  double sensing_radius = kInf;

  /// When positive, a neighbor only enters the constraint set once the
  /// current means put the two discs (radii doubled) in contact within this
  /// many seconds, and stays in it while the pair keeps closing. Zero keeps
  /// every neighbor inside the sensing radius.
  double engage_time_s = 0.0;

  double big_m = 1e4;

  /// Branch-and-bound node budget per solve.
  int max_nodes = 200;

  /// Throws DomainError on non-PSD weights, N < 1 or risk bounds outside
  /// (0, 0.5].
  void validate() const;
};

//==============================================================================
struct WorldState
{
  /// Planner-side beliefs, one per agent.
  std::vector<GaussianBelief> beliefs;
  /// Simulated true states, one per agent (may be empty for pure planning).
  std::vector<Vec4> true_states;
  std::vector<double> radii;
  /// Obstacles as given, not inflated.
  std::vector<PolygonObstacle> obstacles;
  int step = 0;

  /// Throws ValidationError on inconsistent sizes or a negative step.
  void validate() const;
};

/// Constant-velocity forecast of one neighbor for k = 1..N (index k - 1).
struct NeighborPrediction
{
  int id = -1;
  double radius = 0.0;
  std::vector<Vec2> positions;
  std::vector<Vec2> velocities;
};

/// Forecast every agent other than `self` within `sensing_radius` of it,
/// using the belief means as the observed states.
std::vector<NeighborPrediction> predict_neighbors(
  const WorldState& world,
  int self,
  int horizon,
  double tau_s,
  double sensing_radius = kInf);

/// Forecast the listed agents only.
std::vector<NeighborPrediction> predict_neighbors(
  const WorldState& world,
  const std::vector<int>& ids,
  int horizon,
  double tau_s);

/// Earliest time at which two discs moving at constant velocity come within
/// `contact` of each other (0 when they already are, inf when never).
double time_to_contact(
  const Vec2& p_i, const Vec2& v_i, const Vec2& p_j, const Vec2& v_j,
  double contact);

/// Neighbor ids of `self` under the sensing radius and engagement rule of
/// AgentConfig. `engaged` carries the sticky set between steps (may be null).
std::vector<int> select_neighbors(
  const WorldState& world,
  int self,
  double sensing_radius,
  double engage_time_s,
  std::set<int>* engaged);

//==============================================================================
struct BuildReport
{
  int neighbor_constraints = 0;
  int obstacle_constraints = 0;
  int overlap_fallbacks = 0;
  double per_constraint_delta = 0.0;
  double per_constraint_epsilon = 0.0;
};

/// Tightened disjunctive problem for one agent. `ego_positions` (k = 1..N)
/// is the position forecast used for the cone apexes; when empty the
/// constant-velocity forecast of the belief mean is used.
AgentProblem build_agent_problem(
  const AgentConfig& agent,
  const GaussianBelief& belief,
  const std::vector<NeighborPrediction>& neighbors,
  const std::vector<PolygonObstacle>& obstacles,
  const std::vector<Vec2>& ego_positions = {},
  BuildReport* report = nullptr);

//==============================================================================
/// State carried by one agent from one step to the next.
struct PlannerMemory
{
  /// Input sequence of the last solve.
  std::vector<Vec2> inputs;
  /// Chosen member per (kind, source, timestep) of the last solve.
  std::map<std::tuple<int, int, int>, int> choices;
  /// Neighbors currently engaged.
  std::set<int> engaged;
};

struct PlanDiagnostics
{
  double solve_ms = 0.0;
  int nodes = 0;
  int binaries = 0;
  int neighbors = 0;
  int overlap_fallbacks = 0;
  bool fallback = false;
  bool hard_failure = false;
  double slack = 0.0;
  MiqpStatus status = MiqpStatus::Optimal;
  /// Outcome of the hard-constrained solve, before any softening.
  MiqpStatus hard_status = MiqpStatus::Optimal;
  bool big_m_sufficient = true;
};

struct PlanResult
{
  Vec2 input = Vec2::Zero();
  MiqpSolution solution;
  PlanDiagnostics diagnostics;
};

/// One receding-horizon step for agent `self`: forecast neighbors, build and
/// solve the MIQP (with the slack fallback when it is infeasible) and return
/// the first input clipped to the input box.
PlanResult plan_step(
  const AgentConfig& agent,
  const GaussianBelief& belief,
  const WorldState& world,
  int self,
  PlannerMemory* memory = nullptr);

/// Open-loop one-step belief prediction under `input`.
GaussianBelief update_belief(
  const AgentConfig& agent, const GaussianBelief& belief, const Vec2& input);

/// Position forecast from `x0` under `inputs`, shifted by one step and padded
/// with zero input to length N.
std::vector<Vec2> shifted_rollout(
  const AgentModel& model,
  const Vec4& x0,
  const std::vector<Vec2>& previous_inputs,
  int horizon);

} // namespace riskvo

#endif // RISKVO__PLANNER_HPP
