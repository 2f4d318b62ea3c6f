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

#ifndef RISKVO__BASELINES_HPP
#define RISKVO__BASELINES_HPP

#include <riskvo/planner.hpp>

#include <vector>

namespace riskvo {

//==============================================================================
struct VoBaselineConfig
{
  /// Cruise speed toward the goal in m/s.
  double preferred_speed = 2.0;
  Vec2 v_min = Vec2::Constant(-10.0);
  Vec2 v_max = Vec2::Constant(10.0);
  /// Grid spacing of the admissible-velocity search in m/s.
  double resolution = 0.1;
  /// Below this distance the preferred velocity is zero.
  double goal_tolerance = 1e-3;
  double tau_s = 0.05;

  /// Throws DomainError on a nonpositive speed or resolution, or a preferred
  /// speed beyond the velocity box.
  void validate() const;
};

/// Observed neighbor disc.
struct NeighborState
{
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  double radius = 0.0;
};

struct VoSelection
{
  Vec2 velocity = Vec2::Zero();
  Vec2 preferred = Vec2::Zero();
  bool feasible = true;
};

/// Velocity toward the goal at the preferred speed (or dist / tau_s when
/// closer), replaced by the closest grid velocity outside every velocity
/// obstacle when it is blocked. Zero velocity with feasible = false when the
/// whole grid is blocked.
VoSelection vo_select_velocity(
  const VoBaselineConfig& config,
  const Vec4& state,
  double radius,
  const std::vector<NeighborState>& neighbors,
  const Vec2& goal);

//==============================================================================
struct PbMpcConfig
{
  /// Minimum center distance; 0 selects twice the agent radius.
  double d_safe = 0.0;
  /// Max-norm bound on how far each planned position may move from the
  /// linearization reference.
  double trust_radius = 2.0;

  void validate() const;
};

/// One receding-horizon step of the position-space MPC: every neighbor and
/// step contributes the linearized, chance-tightened constraint
/// n^T (p_i - p_j) >= d_safe around the reference trajectory. Uses the same
/// slack fallback as plan_step.
PlanResult pbmpc_plan_step(
  const AgentConfig& agent,
  const PbMpcConfig& config,
  const GaussianBelief& belief,
  const WorldState& world,
  int self,
  PlannerMemory* memory = nullptr);

/// Reference positions for the linearization: the previous plan shifted one
/// step when available, otherwise a constant-velocity rollout.
std::vector<Vec2> pbmpc_reference(
  const AgentModel& model,
  const GaussianBelief& belief,
  const PlannerMemory* memory,
  int horizon);

} // namespace riskvo

#endif // RISKVO__BASELINES_HPP
