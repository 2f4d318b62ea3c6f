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

#include <riskvo/planner.hpp>

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>

namespace riskvo {

namespace {

//==============================================================================
template<typename M>
bool is_psd(const M& m)
{
  if (!m.allFinite())
    return false;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9)
    return false;
  const Eigen::SelfAdjointEigenSolver<M> eig(m);
  return eig.eigenvalues().minCoeff() >= -1e-9;
}

//==============================================================================
Vec2 clip(const Vec2& u, const Vec2& lo, const Vec2& hi)
{
  return u.cwiseMax(lo).cwiseMin(hi);
}

//==============================================================================
std::tuple<int, int, int> choice_key(const Disjunction& d, int timestep)
{
  return {static_cast<int>(d.kind), d.source, timestep};
}

} // namespace

//==============================================================================
void AgentConfig::validate() const
{
  if (!is_psd(Q) || !is_psd(R) || !is_psd(Q_N) || !is_psd(P0))
    throw DomainError("weights and P0 must be symmetric positive semidefinite");
  if (horizon < 1)
    throw DomainError("horizon must be at least 1");
  if (!(delta > 0.0 && delta <= 0.5))
    throw DomainError("delta must lie in (0, 0.5]");
  if (!(epsilon > 0.0 && epsilon <= 0.5))
    throw DomainError("epsilon must lie in (0, 0.5]");
  if (!(big_m > 0.0))
    throw DomainError("big-M constant must be positive");
  if (max_nodes < 1)
    throw DomainError("node budget must be positive");
  if (!(sensing_radius > 0.0))
    throw DomainError("sensing radius must be positive");
}

//==============================================================================
void WorldState::validate() const
{
  if (beliefs.size() != radii.size())
    throw ValidationError("one radius is needed per agent belief");
  if (!true_states.empty() && true_states.size() != beliefs.size())
    throw ValidationError("true states and beliefs must cover the same agents");
  if (step < 0)
    throw ValidationError("step index must be nonnegative");
}

//==============================================================================
std::vector<NeighborPrediction> predict_neighbors(
  const WorldState& world,
  const int self,
  const int horizon,
  const double tau_s,
  const double sensing_radius)
{
  std::vector<NeighborPrediction> out;
  const Vec2 p_self = world.beliefs.at(self).mean.head<2>();
  for (std::size_t j = 0; j < world.beliefs.size(); ++j)
  {
    if (static_cast<int>(j) == self)
      continue;

    const Vec4& x = world.beliefs[j].mean;
    const Vec2 p = x.head<2>();
    const Vec2 v = x.tail<2>();
    if ((p - p_self).norm() > sensing_radius)
      continue;

    NeighborPrediction pred;
    pred.id = static_cast<int>(j);
    pred.radius = world.radii.at(j);
    pred.positions.reserve(horizon);
    pred.velocities.assign(horizon, v);
    for (int k = 1; k <= horizon; ++k)
      pred.positions.push_back(p + k*tau_s*v);
    out.push_back(std::move(pred));
  }
  return out;
}

//==============================================================================
std::vector<NeighborPrediction> predict_neighbors(
  const WorldState& world,
  const std::vector<int>& ids,
  const int horizon,
  const double tau_s)
{
  std::vector<NeighborPrediction> out;
  for (int j : ids)
  {
    const Vec4& x = world.beliefs.at(j).mean;
    NeighborPrediction pred;
    pred.id = j;
    pred.radius = world.radii.at(j);
    pred.velocities.assign(horizon, x.tail<2>());
    for (int k = 1; k <= horizon; ++k)
      pred.positions.push_back(x.head<2>() + k*tau_s*x.tail<2>());
    out.push_back(std::move(pred));
  }
  return out;
}

//==============================================================================
double time_to_contact(
  const Vec2& p_i, const Vec2& v_i, const Vec2& p_j, const Vec2& v_j,
  const double contact)
{
  // Solve |d + w t| = contact for the relative offset d and velocity w.
  const Vec2 d = p_i - p_j;
  const Vec2 w = v_i - v_j;
  const double c = d.squaredNorm() - contact*contact;
  if (c <= 0.0)
    return 0.0;
  const double a = w.squaredNorm();
  const double b = d.dot(w);
  if (a == 0.0 || b >= 0.0)
    return kInf;
  const double disc = b*b - a*c;
  if (disc < 0.0)
    return kInf;
  return (-b - std::sqrt(disc))/a;
}

//==============================================================================
std::vector<int> select_neighbors(
  const WorldState& world,
  const int self,
  const double sensing_radius,
  const double engage_time_s,
  std::set<int>* engaged)
{
  std::vector<int> out;
  std::set<int> next;
  const Vec4& xi = world.beliefs.at(self).mean;
  for (int j = 0; j < static_cast<int>(world.beliefs.size()); ++j)
  {
    if (j == self)
      continue;
    const Vec4& xj = world.beliefs[j].mean;
    const Vec2 d = xi.head<2>() - xj.head<2>();
    if (d.norm() > sensing_radius)
      continue;

    if (engage_time_s > 0.0)
    {
      const double contact = 2.0*(world.radii[self] + world.radii[j]);
      const double ttc = time_to_contact(
        xi.head<2>(), xi.tail<2>(), xj.head<2>(), xj.tail<2>(), contact);
      const bool closing = d.dot(xi.tail<2>() - xj.tail<2>()) < 0.0;
      const bool was_engaged = engaged && engaged->count(j) > 0;
      if (!(ttc <= engage_time_s || (was_engaged && closing)))
        continue;
      next.insert(j);
    }
    out.push_back(j);
  }
  if (engaged)
    *engaged = std::move(next);
  return out;
}

//==============================================================================
AgentProblem build_agent_problem(
  const AgentConfig& agent,
  const GaussianBelief& belief,
  const std::vector<NeighborPrediction>& neighbors,
  const std::vector<PolygonObstacle>& obstacles,
  const std::vector<Vec2>& ego_positions,
  BuildReport* report)
{
  const int N = agent.horizon;
  const auto& model = agent.model;
  const double tau = model.tau_s();

  AgentProblem ap;
  ap.model = model;
  ap.Q = agent.Q;
  ap.R = agent.R;
  ap.Q_terminal = agent.Q_N;
  ap.x_ref = agent.x_ref;
  ap.x0_mean = belief.mean;
  ap.horizon = N;
  ap.big_m = agent.big_m;

  BuildReport local;
  BuildReport& rep = report ? *report : local;
  rep = BuildReport{};

  std::vector<Vec2> ego = ego_positions;
  if (static_cast<int>(ego.size()) != N)
  {
    ego.clear();
    for (int k = 1; k <= N; ++k)
      ego.push_back(belief.mean.head<2>() + k*tau*belief.mean.tail<2>());
  }

  std::vector<Mat4> sigma;
  sigma.reserve(N);
  Mat4 cov = belief.cov;
  for (int k = 1; k <= N; ++k)
  {
    cov = step_covariance(model, cov);
    sigma.push_back(cov);
  }
  const Mat24 Lv = AgentModel::Lv();
  const Mat24 Lp = AgentModel::Lp();

  if (!neighbors.empty())
  {
    const double share =
      allocate_risk(agent.delta, static_cast<int>(neighbors.size()));
    rep.per_constraint_delta = share;

    for (const auto& nb : neighbors)
    {
      if (static_cast<int>(nb.positions.size()) < N
        || static_cast<int>(nb.velocities.size()) < N)
      {
        throw AssemblyError("neighbor forecast is shorter than the horizon");
      }

      for (int k = 1; k <= N; ++k)
      {
        const Mat2 block = Lv*sigma[k-1]*Lv.transpose();
        const Vec2& p_j = nb.positions[k-1];
        const Vec2& v_j = nb.velocities[k-1];

        TightenedDisjunction td;
        td.kind = DisjunctionKind::Neighbor;
        td.source = nb.id;
        td.timestep = k;

        try
        {
          const ConeNormals cone =
            build_collision_cone(ego[k-1], p_j, model.radius(), nb.radius);
          const VelocityObstacle vo =
            build_velocity_obstacle(cone, v_j, AgentPair{-1, nb.id}, k);
          for (const auto& hs : vo.halfspaces)
          {
            td.members.push_back(TightenedConstraint{
              hs.normal, hs.offset, tighten_halfspace(hs.normal, block, share),
              ConstraintSpace::Velocity, nb.id, k});
          }
        }
        catch (const OverlapError&)
        {
          const HalfSpace hs = separating_halfspace(ego[k-1], p_j, v_j);
          td.members.push_back(TightenedConstraint{
            hs.normal, hs.offset, tighten_halfspace(hs.normal, block, share),
            ConstraintSpace::Velocity, nb.id, k});
          ++rep.overlap_fallbacks;
        }

        ap.disjunctions.push_back(std::move(td));
        ++rep.neighbor_constraints;
      }
    }
  }

  if (!obstacles.empty())
  {
    const double share = allocate_static_risk(
      agent.epsilon, static_cast<int>(obstacles.size()));
    rep.per_constraint_epsilon = share;

    for (std::size_t o = 0; o < obstacles.size(); ++o)
    {
      const PolygonObstacle inflated =
        inflate_polygon(obstacles[o], model.radius());
      for (int k = 1; k <= N; ++k)
      {
        const Mat2 block = Lp*sigma[k-1]*Lp.transpose();
        TightenedDisjunction td;
        td.kind = DisjunctionKind::Obstacle;
        td.source = static_cast<int>(o);
        td.timestep = k;
        for (const auto& hs : inflated.halfspaces)
        {
          td.members.push_back(TightenedConstraint{
            hs.normal, hs.offset, tighten_halfspace(hs.normal, block, share),
            ConstraintSpace::Position, static_cast<int>(o), k});
        }
        ap.disjunctions.push_back(std::move(td));
        ++rep.obstacle_constraints;
      }
    }
  }

  return ap;
}

//==============================================================================
std::vector<Vec2> shifted_rollout(
  const AgentModel& model,
  const Vec4& x0,
  const std::vector<Vec2>& previous_inputs,
  const int horizon)
{
  std::vector<Vec2> out;
  out.reserve(horizon);
  Vec4 x = x0;
  for (int k = 0; k < horizon; ++k)
  {
    const std::size_t idx = static_cast<std::size_t>(k) + 1;
    const Vec2 u = idx < previous_inputs.size() ?
      previous_inputs[idx] : Vec2::Zero();
    x = discrete_step(model, x, u, Vec4::Zero());
    out.push_back(x.head<2>());
  }
  return out;
}

//==============================================================================
PlanResult plan_step(
  const AgentConfig& agent,
  const GaussianBelief& belief,
  const WorldState& world,
  const int self,
  PlannerMemory* memory)
{
  const auto start = std::chrono::steady_clock::now();
  const auto& model = agent.model;
  const int N = agent.horizon;

  const auto ids = select_neighbors(world, self, agent.sensing_radius,
    agent.engage_time_s, memory ? &memory->engaged : nullptr);
  const auto neighbors = predict_neighbors(world, ids, N, model.tau_s());

  // Ego cones use constant-velocity extrapolation: a relative velocity that
  // clears the cone now then clears every later cone along the same ray.
  BuildReport report;
  const AgentProblem ap = build_agent_problem(
    agent, belief, neighbors, world.obstacles, {}, &report);
  const MiqpProblem problem = assemble(ap);

  BnbSettings settings;
  settings.max_nodes = agent.max_nodes;
  if (memory && !memory->choices.empty())
  {
    settings.warm_choices.assign(problem.disjunctions.size(), -1);
    for (std::size_t d = 0; d < problem.disjunctions.size(); ++d)
    {
      const auto& dis = problem.disjunctions[d];
      const auto it = memory->choices.find(choice_key(dis, dis.timestep + 1));
      if (it != memory->choices.end())
        settings.warm_choices[d] = it->second;
    }
  }

  PlanResult result;
  auto& diag = result.diagnostics;
  diag.binaries = problem.binary_count;
  diag.neighbors = static_cast<int>(neighbors.size());
  diag.overlap_fallbacks = report.overlap_fallbacks;
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

  if (sol.has_incumbent)
  {
    result.input = clip(sol.u.head<2>(), model.u_min(), model.u_max());
    if (memory)
    {
      memory->inputs.clear();
      for (int k = 0; k < N; ++k)
        memory->inputs.push_back(sol.u.segment<2>(2*k));
      memory->choices.clear();
      for (std::size_t d = 0; d < problem.disjunctions.size(); ++d)
      {
        const auto& dis = problem.disjunctions[d];
        if (d < sol.chosen.size() && sol.chosen[d] >= 0)
          memory->choices[choice_key(dis, dis.timestep)] = sol.chosen[d];
      }
    }
  }
  else
  {
    // Nothing solvable: brake toward zero velocity.
    diag.hard_failure = true;
    const Vec2 v = belief.mean.tail<2>();
    result.input = clip(-v/model.tau_s(), model.u_min(), model.u_max());
    if (memory)
    {
      memory->inputs.clear();
      memory->choices.clear();
    }
  }

  result.solution = std::move(sol);
  diag.solve_ms = 1e3*std::chrono::duration<double>(
    std::chrono::steady_clock::now() - start).count();
  return result;
}

//==============================================================================
GaussianBelief update_belief(
  const AgentConfig& agent, const GaussianBelief& belief, const Vec2& input)
{
  GaussianBelief next;
  next.mean = discrete_step(agent.model, belief.mean, input, Vec4::Zero());
  next.cov = step_covariance(agent.model, belief.cov);
  return next;
}

} // namespace riskvo
