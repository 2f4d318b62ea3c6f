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

#include <riskvo/geometry.hpp>
#include <riskvo/miqp.hpp>
#include <riskvo/random.hpp>

#include <map>

using namespace riskvo;

namespace {

/// Small box-bounded MIQP with random two- and three-member disjunctions.
MiqpProblem random_miqp(NormalSampler& rng, int max_binaries)
{
  const int n = 2 + static_cast<int>(3*rng.uniform());
  MatX L(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      L(r, c) = rng.normal();

  MiqpProblem p;
  p.qp.H = L*L.transpose() + 0.2*MatX::Identity(n, n);
  p.qp.f = VecX(n);
  for (int i = 0; i < n; ++i)
    p.qp.f[i] = 4*rng.normal();
  p.qp.G = MatX(0, n);
  p.qp.h = VecX(0);
  p.qp.lb = VecX::Constant(n, -5.0);
  p.qp.ub = VecX::Constant(n, 5.0);

  int used = 0;
  while (true)
  {
    const int members = rng.uniform() < 0.7 ? 2 : 3;
    if (used + members > max_binaries)
      break;
    Disjunction d;
    for (int m = 0; m < members; ++m)
    {
      DisjunctMember member;
      member.a = VecX(n);
      for (int i = 0; i < n; ++i)
        member.a[i] = rng.normal();
      member.b = 2*rng.normal();
      d.members.push_back(member);
    }
    p.add_disjunction(std::move(d));
    used += members;
  }
  return p;
}

bool satisfies_disjunctions(const MiqpProblem& p, const VecX& u, double tol)
{
  for (const auto& d : p.disjunctions)
  {
    bool any = false;
    for (const auto& m : d.members)
      any = any || m.violation(u) <= tol;
    if (!any)
      return false;
  }
  return true;
}

AgentProblem dead_ahead_problem()
{
  // Agent moving along +x toward a goal past a stationary disc.
  AgentProblem ap;
  ap.model = AgentModel();
  ap.horizon = 1;
  ap.x0_mean = Vec4(0, 0, 1, 0);
  ap.x_ref = Vec4(10, 0, 0, 0);

  const Vec2 p_j(2, 0);
  const auto cone = build_collision_cone(Vec2(0.05, 0), p_j, 0.2, 0.2);
  const auto vo = build_velocity_obstacle(cone, Vec2::Zero(), {0, 1}, 1);
  TightenedDisjunction td;
  td.kind = DisjunctionKind::Neighbor;
  td.source = 1;
  td.timestep = 1;
  for (const auto& hs : vo.halfspaces)
  {
    td.members.push_back(TightenedConstraint{
      hs.normal, hs.offset, 0.0, ConstraintSpace::Velocity, 1, 1});
  }
  ap.disjunctions.push_back(td);
  return ap;
}

} // namespace

//==============================================================================
TEST_CASE("no binaries reduces to the QP")
{
  NormalSampler rng(derive_seed(17, {0}));
  MiqpProblem p = random_miqp(rng, 0);
  REQUIRE(p.binary_count == 0);
  const auto sol = branch_and_bound(p);
  const auto qp = solve_qp(p.qp);
  REQUIRE(sol.status == MiqpStatus::Optimal);
  CHECK((sol.u - qp.z).norm() < 1e-10);
  CHECK(sol.objective == doctest::Approx(qp.objective));

  const auto oracle = enumerate_oracle(p);
  CHECK(oracle.objective == doctest::Approx(qp.objective));
}

//==============================================================================
TEST_CASE("branch and bound matches enumeration")
{
  NormalSampler rng(derive_seed(17, {1}));
  int infeasible = 0;
  for (int trial = 0; trial < 60; ++trial)
  {
    const MiqpProblem p = random_miqp(rng, 4 + trial % 9);
    const auto bnb = branch_and_bound(p);
    const auto ref = enumerate_oracle(p);
    REQUIRE(bnb.has_incumbent == ref.has_incumbent);
    if (!ref.has_incumbent)
    {
      CHECK(bnb.status == MiqpStatus::Infeasible);
      ++infeasible;
      continue;
    }
    CHECK(bnb.status == MiqpStatus::Optimal);
    CHECK(bnb.objective == doctest::Approx(ref.objective).epsilon(1e-7));
    CHECK(satisfies_disjunctions(p, bnb.u, 1e-6));
  }
  CHECK(infeasible < 30);
}

//==============================================================================
TEST_CASE("node bounds never exceed the leaves beneath them")
{
  NormalSampler rng(derive_seed(17, {2}));
  for (int trial = 0; trial < 20; ++trial)
  {
    const MiqpProblem p = random_miqp(rng, 12);
    std::map<int, BnbNodeRecord> nodes;
    BnbSettings settings;
    settings.observer = [&](const BnbNodeRecord& r) { nodes[r.id] = r; };
    const auto sol = branch_and_bound(p, settings);
    REQUIRE_FALSE(nodes.empty());

    for (const auto& [id, r] : nodes)
    {
      if (r.parent < 0 || !r.feasible)
        continue;
      REQUIRE(nodes.count(r.parent) == 1);
      const auto& parent = nodes.at(r.parent);
      CHECK(parent.depth + 1 == r.depth);
      // A child only adds constraints.
      CHECK(r.objective >= parent.objective - 1e-7*(1 + std::abs(parent.objective)));
    }
    if (sol.has_incumbent)
    {
      for (const auto& [id, r] : nodes)
      {
        if (r.leaf && r.feasible)
          CHECK(r.objective >= sol.objective - 1e-7*(1 + std::abs(sol.objective)));
      }
    }
  }
}

//==============================================================================
TEST_CASE("big-M rows of a returned solution")
{
  NormalSampler rng(derive_seed(17, {3}));
  for (int trial = 0; trial < 30; ++trial)
  {
    const MiqpProblem p = random_miqp(rng, 10);
    CHECK(p.big_m_sufficient);
    const auto sol = branch_and_bound(p);
    if (!sol.has_incumbent)
      continue;
    REQUIRE(static_cast<int>(sol.z.size()) == p.binary_count);
    for (std::size_t d = 0; d < p.disjunctions.size(); ++d)
    {
      const auto& dis = p.disjunctions[d];
      int active = 0;
      for (std::size_t m = 0; m < dis.members.size(); ++m)
      {
        const double g = dis.members[m].violation(sol.u);
        if (sol.z[dis.binary_ids[m]])
        {
          CHECK(g <= 1e-6);
          ++active;
        }
        else
        {
          CHECK(g <= p.big_m);
        }
      }
      CHECK(active >= 1);
      REQUIRE(sol.chosen[d] >= 0);
      CHECK(dis.members[sol.chosen[d]].violation(sol.u) <= 1e-6);
    }
  }
}

//==============================================================================
TEST_CASE("tightening a member never lowers the optimum")
{
  NormalSampler rng(derive_seed(17, {4}));
  for (int trial = 0; trial < 20; ++trial)
  {
    MiqpProblem p = random_miqp(rng, 8);
    double previous = -kInf;
    for (int step = 0; step < 4; ++step)
    {
      const auto sol = branch_and_bound(p);
      const double obj = sol.has_incumbent ? sol.objective : kInf;
      CHECK(obj >= previous - 1e-7*(1 + std::abs(previous)));
      previous = obj;
      for (auto& d : p.disjunctions)
        d.members[0].b += 0.3;
    }
  }
}

//==============================================================================
TEST_CASE("warm choices do not change the optimum")
{
  NormalSampler rng(derive_seed(17, {5}));
  for (int trial = 0; trial < 20; ++trial)
  {
    const MiqpProblem p = random_miqp(rng, 12);
    const auto cold = branch_and_bound(p);
    BnbSettings settings;
    settings.warm_choices.assign(p.disjunctions.size(), 1);
    const auto warm = branch_and_bound(p, settings);
    REQUIRE(cold.has_incumbent == warm.has_incumbent);
    if (cold.has_incumbent)
      CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-7));
  }
}

//==============================================================================
TEST_CASE("node budget")
{
  NormalSampler rng(derive_seed(17, {6}));
  const MiqpProblem p = random_miqp(rng, 12);
  BnbSettings settings;
  settings.max_nodes = 1;
  const auto sol = branch_and_bound(p, settings);
  CHECK(sol.nodes_explored <= 1);
  CHECK(sol.status != MiqpStatus::Optimal);
}

//==============================================================================
TEST_CASE("enumeration guard and leaf count")
{
  MiqpProblem p;
  p.qp = QpProblem::unconstrained(MatX::Identity(1, 1), VecX::Zero(1));
  p.qp.lb = VecX::Constant(1, -1.0);
  p.qp.ub = VecX::Constant(1, 1.0);
  Disjunction d;
  d.members.push_back({VecX::Constant(1, 1.0), 0.5});
  d.members.push_back({VecX::Constant(1, -1.0), 0.5});
  p.add_disjunction(d);
  REQUIRE(p.binary_count == 2);

  const auto sol = enumerate_oracle(p);
  CHECK(sol.nodes_explored == 3);
  CHECK(std::abs(sol.u[0]) == doctest::Approx(0.5));

  for (int i = 0; i < 10; ++i)
    p.add_disjunction(d);
  CHECK(p.binary_count == 22);
  CHECK_THROWS_AS(enumerate_oracle(p), GuardError);
}

//==============================================================================
TEST_CASE("add_disjunction checks its input")
{
  MiqpProblem p;
  p.qp = QpProblem::unconstrained(MatX::Identity(2, 2), VecX::Zero(2));
  CHECK_THROWS_AS(p.add_disjunction(Disjunction{}), AssemblyError);

  Disjunction wrong;
  wrong.members.push_back({VecX::Ones(3), 0.0});
  CHECK_THROWS_AS(p.add_disjunction(wrong), AssemblyError);

  Disjunction two;
  two.members.push_back({VecX::Ones(2), 0.0});
  two.min_active = 2;
  CHECK_THROWS_AS(p.add_disjunction(two), AssemblyError);

  // Unbounded inputs make any finite M insufficient.
  Disjunction ok;
  ok.members.push_back({VecX::Ones(2), 0.0});
  ok.members.push_back({-VecX::Ones(2), 0.0});
  p.add_disjunction(ok);
  CHECK_FALSE(p.big_m_sufficient);
}

//==============================================================================
TEST_CASE("symmetric dead-ahead neighbor")
{
  const MiqpProblem p = assemble(dead_ahead_problem());
  REQUIRE(p.binary_count == 2);
  const auto bnb = branch_and_bound(p);
  const auto ref = enumerate_oracle(p);
  REQUIRE(bnb.status == MiqpStatus::Optimal);
  CHECK(bnb.objective == doctest::Approx(ref.objective).epsilon(1e-9));

  // Both sides cost the same; the first member wins the tie.
  const auto& d = p.disjunctions[0];
  MiqpProblem left = p;
  left.disjunctions[0].members = {d.members[0]};
  MiqpProblem right = p;
  right.disjunctions[0].members = {d.members[1]};
  const double obj_left = branch_and_bound(left).objective;
  const double obj_right = branch_and_bound(right).objective;
  CHECK(obj_left == doctest::Approx(obj_right).epsilon(1e-9));
  CHECK(bnb.chosen[0] == 0);
  CHECK(branch_and_bound(p).u == bnb.u);
}

//==============================================================================
TEST_CASE("assembly binary counts")
{
  AgentProblem ap;
  ap.model = AgentModel();
  ap.horizon = 3;
  ap.x_ref = Vec4(5, 0, 0, 0);
  CHECK(assemble(ap).binary_count == 0);

  for (int k = 1; k <= 3; ++k)
  {
    TightenedDisjunction td;
    td.kind = DisjunctionKind::Neighbor;
    td.timestep = k;
    td.members.push_back({Vec2(0, 1), 0.0, 0.0, ConstraintSpace::Velocity, 0, k});
    td.members.push_back({Vec2(0, -1), 0.0, 0.0, ConstraintSpace::Velocity, 0, k});
    ap.disjunctions.push_back(td);
  }
  CHECK(assemble(ap).binary_count == 6);

  AgentProblem box;
  box.model = AgentModel();
  box.horizon = 2;
  for (int k = 1; k <= 2; ++k)
  {
    TightenedDisjunction td;
    td.kind = DisjunctionKind::Obstacle;
    td.timestep = k;
    for (const Vec2& n : {Vec2(1, 0), Vec2(0, 1), Vec2(-1, 0), Vec2(0, -1)})
      td.members.push_back({n, 1.0, 0.0, ConstraintSpace::Position, 0, k});
    box.disjunctions.push_back(td);
  }
  CHECK(assemble(box).binary_count == 8);

  AgentProblem bad = box;
  bad.disjunctions[0].timestep = 3;
  for (auto& m : bad.disjunctions[0].members)
    m.timestep = 3;
  CHECK_THROWS_AS(assemble(bad), AssemblyError);
}

//==============================================================================
TEST_CASE("unconstrained assembly is the tracking MPC")
{
  AgentProblem ap;
  ap.model = AgentModel();
  ap.horizon = 15;
  ap.x0_mean = Vec4(1, -1, 0.5, 0);
  ap.x_ref = Vec4(1.4, -0.6, 0, 0);
  const MiqpProblem p = assemble(ap);
  const auto sol = branch_and_bound(p);
  REQUIRE(sol.status == MiqpStatus::Optimal);

  // Direct evaluation of the stage and terminal costs along the rollout.
  auto cost = [&](const VecX& u)
  {
    double J = 0.0;
    Vec4 x = ap.x0_mean;
    for (int k = 0; k < ap.horizon; ++k)
    {
      const Vec2 uk = u.segment<2>(2*k);
      J += uk.dot(ap.R*uk);
      x = discrete_step(ap.model, x, uk, Vec4::Zero());
      const Vec4 e = x - ap.x_ref;
      J += e.dot((k + 1 == ap.horizon ? ap.Q_terminal : ap.Q)*e);
    }
    return J;
  };
  // Objective differs from the cost by a constant; differences must agree.
  NormalSampler rng(derive_seed(17, {7}));
  for (int t = 0; t < 5; ++t)
  {
    VecX du(2*ap.horizon);
    for (int i = 0; i < du.size(); ++i)
      du[i] = 0.01*rng.normal();
    // Stay inside the input box; the optimum may sit on it.
    const VecX u2 = (sol.u + du).cwiseMax(p.qp.lb).cwiseMin(p.qp.ub);
    const double model_diff = 0.5*u2.dot(p.qp.H*u2) + p.qp.f.dot(u2)
      - (0.5*sol.u.dot(p.qp.H*sol.u) + p.qp.f.dot(sol.u));
    CHECK(model_diff == doctest::Approx(cost(u2) - cost(sol.u)).epsilon(1e-6));
    REQUIRE((p.qp.num_rows() == 0 || (p.qp.G*u2 - p.qp.h).maxCoeff() <= 0.0));
    CHECK(cost(u2) >= cost(sol.u) - 1e-9);
  }
}

//==============================================================================
TEST_CASE("constraint rows evaluate the predicted mean")
{
  const AgentModel m;
  const int N = 6;
  const auto pm = prediction_matrices(m, N);
  const Vec4 x0(0.3, -0.2, 1.0, 0.5);
  NormalSampler rng(derive_seed(17, {8}));

  for (auto space : {ConstraintSpace::Velocity, ConstraintSpace::Position})
  {
    const TightenedConstraint c{Vec2(0.6, 0.8), 0.25, 0.1, space, 0, 4};
    const auto row = constraint_row(c, pm, x0);
    VecX u(2*N);
    std::vector<Vec2> inputs;
    for (int k = 0; k < N; ++k)
    {
      inputs.emplace_back(rng.normal(), rng.normal());
      u.segment<2>(2*k) = inputs.back();
    }
    const Vec4 x4 = propagate_mean(m, x0, std::span(inputs).first(4));
    const Vec2 y = space == ConstraintSpace::Velocity ? x4.tail<2>() : x4.head<2>();
    CHECK(row.a.dot(u) - row.b
      == doctest::Approx(c.normal.dot(y) - c.offset - c.margin));
  }
}

//==============================================================================
TEST_CASE("softening restores feasibility")
{
  AgentProblem ap = dead_ahead_problem();
  ap.horizon = 2;
  // Two contradictory single-member rows at step 1 and one at step 2.
  ap.disjunctions.clear();
  for (int k : {1, 1, 2})
  {
    TightenedDisjunction td;
    td.timestep = k;
    const double sign = ap.disjunctions.size() == 1 ? -1.0 : 1.0;
    td.members.push_back({Vec2(sign, 0), sign*3.0 + (sign < 0 ? 0.0 : 0.0),
      0.0, ConstraintSpace::Velocity, 0, k});
    ap.disjunctions.push_back(td);
  }
  const MiqpProblem hard = assemble(ap);
  CHECK(branch_and_bound(hard).status == MiqpStatus::Infeasible);

  const MiqpProblem soft = soften(hard, 1e4);
  CHECK(soft.qp.num_variables() == hard.qp.num_variables() + 2);
  const auto sol = branch_and_bound(soft);
  REQUIRE(sol.status == MiqpStatus::Optimal);
  CHECK(total_slack(hard, sol) > 0.0);
  CHECK(sol.u.tail(2).minCoeff() >= -1e-9);

  // Feasible problems keep zero slack.
  const MiqpProblem fine = assemble(dead_ahead_problem());
  const auto relaxed = branch_and_bound(soften(fine, 1e4));
  CHECK(total_slack(fine, relaxed) < 1e-6);
}
