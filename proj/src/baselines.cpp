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

#include <riskvo/baselines.hpp>

#include <chrono>
#include <cmath>

namespace riskvo {

//==============================================================================
void VoBaselineConfig::validate() const
{
  if (!(preferred_speed > 0.0))
    throw DomainError("preferred speed must be positive");
  if (!(resolution > 0.0))
    throw DomainError("grid resolution must be positive");
  if (!(tau_s > 0.0))
    throw DomainError("sampling interval must be positive");
  if ((v_min.array() >= v_max.array()).any())
    throw DomainError("velocity box is empty");
  const double reach = std::min(v_max.cwiseAbs().minCoeff(), v_min.cwiseAbs().minCoeff());
  if (preferred_speed > reach)
    throw DomainError("preferred speed exceeds the velocity bounds");
}

//==============================================================================
void PbMpcConfig::validate() const
{
  if (d_safe < 0.0)
    throw DomainError("safe distance must be nonnegative");
  if (!(trust_radius > 0.0))
    throw DomainError("trust radius must be positive");
}

namespace {

//==============================================================================
// Blocked velocities of one neighbor: its velocity obstacle, or the closing
// half-plane when the discs already overlap.
struct Blocker
{
  bool overlap = false;
  VelocityObstacle vo;
  HalfSpace separating;

  bool blocks(const Vec2& v) const
  {
    if (overlap)
      return separating.slack(v) < 0.0;
    return vo_contains(vo, v);
  }
};

} // namespace

//==============================================================================
VoSelection vo_select_velocity(
  const VoBaselineConfig& config,
  const Vec4& state,
  const double radius,
  const std::vector<NeighborState>& neighbors,
  const Vec2& goal)
{
  VoSelection out;
  const Vec2 p = state.head<2>();
  const Vec2 to_goal = goal - p;
  const double dist = to_goal.norm();
  if (dist >= config.goal_tolerance)
  {
    const double speed = std::min(config.preferred_speed, dist/config.tau_s);
    out.preferred = to_goal/dist*speed;
  }

  std::vector<Blocker> blockers;
  blockers.reserve(neighbors.size());
  for (std::size_t j = 0; j < neighbors.size(); ++j)
  {
    const auto& nb = neighbors[j];
    Blocker b;
    try
    {
      const ConeNormals cone =
        build_collision_cone(p, nb.position, radius, nb.radius);
      b.vo = build_velocity_obstacle(
        cone, nb.velocity, AgentPair{-1, static_cast<int>(j)}, 0);
    }
    catch (const OverlapError&)
    {
      b.overlap = true;
      b.separating = separating_halfspace(p, nb.position, nb.velocity);
    }
    blockers.push_back(b);
  }

  auto admissible = [&](const Vec2& v)
  {
    for (const auto& b : blockers)
    {
      if (b.blocks(v))
        return false;
    }
    return true;
  };

  if (admissible(out.preferred))
  {
    out.velocity = out.preferred;
    return out;
  }

  const int nx = static_cast<int>(
    std::floor((config.v_max.x() - config.v_min.x())/config.resolution + 1e-9));
  const int ny = static_cast<int>(
    std::floor((config.v_max.y() - config.v_min.y())/config.resolution + 1e-9));
  double best = kInf;
  bool found = false;
  for (int ix = 0; ix <= nx; ++ix)
  {
    for (int iy = 0; iy <= ny; ++iy)
    {
      const Vec2 v(
        config.v_min.x() + ix*config.resolution,
        config.v_min.y() + iy*config.resolution);
      const double d = (v - out.preferred).squaredNorm();
      if (d >= best || !admissible(v))
        continue;
      best = d;
      out.velocity = v;
      found = true;
    }
  }

  if (!found)
  {
    out.velocity = Vec2::Zero();
    out.feasible = false;
  }
  return out;
}

//==============================================================================
std::vector<Vec2> pbmpc_reference(
  const AgentModel& model,
  const GaussianBelief& belief,
  const PlannerMemory* memory,
  const int horizon)
{
  if (memory && !memory->inputs.empty())
    return shifted_rollout(model, belief.mean, memory->inputs, horizon);

  std::vector<Vec2> out;
  out.reserve(horizon);
  for (int k = 1; k <= horizon; ++k)
    out.push_back(belief.mean.head<2>() + k*model.tau_s()*belief.mean.tail<2>());
  return out;
}

//==============================================================================
PlanResult pbmpc_plan_step(
  const AgentConfig& agent,
  const PbMpcConfig& config,
  const GaussianBelief& belief,
  const WorldState& world,
  const int self,
  PlannerMemory* memory)
{
  const auto start = std::chrono::steady_clock::now();
  const auto& model = agent.model;
  const int N = agent.horizon;
  const double d_safe = config.d_safe > 0.0 ? config.d_safe : 2.0*model.radius();

  const auto ids = select_neighbors(world, self, agent.sensing_radius,
    agent.engage_time_s, memory ? &memory->engaged : nullptr);
  const auto neighbors = predict_neighbors(world, ids, N, model.tau_s());
  const auto reference = pbmpc_reference(model, belief, memory, N);

  AgentProblem ap;
  ap.model = model;
  ap.Q = agent.Q;
  ap.R = agent.R;
  ap.Q_terminal = agent.Q_N;
  ap.x_ref = agent.x_ref;
  ap.x0_mean = belief.mean;
  ap.horizon = N;
  ap.big_m = agent.big_m;

  const Mat24 Lp = AgentModel::Lp();
  Mat4 cov = belief.cov;
  std::vector<Mat2> blocks;
  for (int k = 1; k <= N; ++k)
  {
    cov = step_covariance(model, cov);
    blocks.push_back(Lp*cov*Lp.transpose());

    const Vec2& ref = reference[k-1];
    for (int axis = 0; axis < 2; ++axis)
    {
      const Vec2 e = axis == 0 ? Vec2::UnitX() : Vec2::UnitY();
      ap.hard_constraints.push_back(TightenedConstraint{
        e, ref[axis] - config.trust_radius, 0.0,
        ConstraintSpace::Position, -1, k});
      ap.hard_constraints.push_back(TightenedConstraint{
        -e, -ref[axis] - config.trust_radius, 0.0,
        ConstraintSpace::Position, -1, k});
    }
  }

  int overlaps = 0;
  if (!neighbors.empty())
  {
    const double share =
      agent.delta/static_cast<double>(neighbors.size());
    for (const auto& nb : neighbors)
    {
      for (int k = 1; k <= N; ++k)
      {
        Vec2 n = reference[k-1] - nb.positions[k-1];
        const double length = n.norm();
        if (length > 0.0)
          n /= length;
        else
          n = Vec2::UnitX();
        if (length < d_safe)
          ++overlaps;

        TightenedDisjunction td;
        td.kind = DisjunctionKind::Neighbor;
        td.source = nb.id;
        td.timestep = k;
        td.members.push_back(TightenedConstraint{
          n, n.dot(nb.positions[k-1]) + d_safe,
          tighten_halfspace(n, blocks[k-1], share),
          ConstraintSpace::Position, nb.id, k});
        ap.disjunctions.push_back(std::move(td));
      }
    }
  }

  const MiqpProblem problem = assemble(ap);
  BnbSettings settings;
  settings.max_nodes = agent.max_nodes;

  PlanResult result;
  auto& diag = result.diagnostics;
  diag.neighbors = static_cast<int>(neighbors.size());
  diag.binaries = problem.binary_count;
  diag.overlap_fallbacks = overlaps;
  diag.big_m_sufficient = problem.big_m_sufficient;

  MiqpSolution sol = branch_and_bound(problem, settings);
  int nodes = sol.nodes_explored;
  diag.hard_status = sol.status;
  if (!sol.has_incumbent)
  {
    const MiqpProblem soft = soften(problem, agent.big_m);
    sol = branch_and_bound(soft, settings);
    nodes += sol.nodes_explored;
    diag.fallback = true;
    if (sol.has_incumbent)
    {
      diag.slack = total_slack(problem, sol);
      sol.u.conservativeResize(problem.qp.num_variables());
    }
  }
  diag.nodes = nodes;
  diag.status = sol.status;

  // The linearization cannot certify a separation that is already lost.
  for (const auto& nb : neighbors)
  {
    const Vec2 p_j = world.beliefs[nb.id].mean.head<2>();
    if ((belief.mean.head<2>() - p_j).norm() < d_safe - 0.05)
      diag.fallback = true;
  }

  if (sol.has_incumbent)
  {
    result.input = sol.u.head<2>().cwiseMax(model.u_min()).cwiseMin(model.u_max());
    if (memory)
    {
      memory->inputs.clear();
      for (int k = 0; k < N; ++k)
        memory->inputs.push_back(sol.u.segment<2>(2*k));
    }
  }
  else
  {
    diag.hard_failure = true;
    const Vec2 v = belief.mean.tail<2>();
    result.input = (-v/model.tau_s()).cwiseMax(model.u_min()).cwiseMin(model.u_max());
    if (memory)
      memory->inputs.clear();
  }

  result.solution = std::move(sol);
  diag.solve_ms = 1e3*std::chrono::duration<double>(
    std::chrono::steady_clock::now() - start).count();
  return result;
}

} // namespace riskvo
