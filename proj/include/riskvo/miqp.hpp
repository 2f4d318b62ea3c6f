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

#ifndef RISKVO__MIQP_HPP
#define RISKVO__MIQP_HPP

#include <riskvo/chance.hpp>
#include <riskvo/dynamics.hpp>
#include <riskvo/qp.hpp>

#include <functional>
#include <vector>

namespace riskvo {

//==============================================================================
/// One linear member a^T u >= b of a disjunction over the decision vector.
struct DisjunctMember
{
  VecX a;
  double b = 0.0;

  /// b - a^T u; positive means the member is violated.
  double violation(const VecX& u) const { return b - a.dot(u); }
};

enum class DisjunctionKind
{
  Neighbor,
  Obstacle,
  Generic
};

/// At least `min_active` members must hold. Member m is tied to binary
/// `binary_ids[m]`; with z_m = 0 the row relaxes to a^T u >= b - M.
struct Disjunction
{
  std::vector<DisjunctMember> members;
  int min_active = 1;
  std::vector<int> binary_ids;
  DisjunctionKind kind = DisjunctionKind::Generic;
  int source = -1;
  int timestep = 0;
};

//==============================================================================
struct MiqpProblem
{
  QpProblem qp;
  std::vector<Disjunction> disjunctions;
  double big_m = 1e4;
  int binary_count = 0;

  /// True when M covers the worst violation of every member over the input
  /// box, i.e. relaxed rows are implied by the bounds.
  bool big_m_sufficient = true;

  /// Append a disjunction, assigning fresh binary ids. Throws AssemblyError on
  /// a dimension mismatch or an unsupported min_active.
  void add_disjunction(Disjunction d);

  /// Recompute big_m_sufficient from the current bounds.
  void audit_big_m();

  /// Largest b - a^T u of a member over the box lb <= u <= ub (may be inf).
  double worst_violation(const DisjunctMember& member) const;
};

enum class MiqpStatus
{
  Optimal,
  Infeasible,
  BudgetExceeded
};

const char* to_string(MiqpStatus status);

//==============================================================================
struct MiqpSolution
{
  VecX u;
  std::vector<int> z;
  /// Index of the member that satisfies each disjunction (enforced member on
  /// the branch path when there is one, otherwise the first satisfied one).
  std::vector<int> chosen;
  double objective = kInf;
  MiqpStatus status = MiqpStatus::Infeasible;
  bool has_incumbent = false;
  int nodes_explored = 0;
  double wall_time = 0.0;
};

/// Reported once per solved node when an observer is installed.
struct BnbNodeRecord
{
  int id = 0;
  int parent = -1;
  int depth = 0;
  double objective = kInf;
  bool feasible = false;
  bool leaf = false;
};

struct BnbSettings
{
  int max_nodes = 100000;

  /// Per-disjunction member to try first as an incumbent (-1 = none).
  std::vector<int> warm_choices;

  std::function<void(const BnbNodeRecord&)> observer;
};

/// Depth-first branch and bound over the disjunctions, switching to best-first
/// once an incumbent exists. Deterministic for identical inputs.
MiqpSolution branch_and_bound(
  const MiqpProblem& problem, const BnbSettings& settings = {});

/// Solve one QP per binary assignment that satisfies every disjunction and
/// return the best. Throws GuardError when binary_count > 20.
MiqpSolution enumerate_oracle(const MiqpProblem& problem);

/// Copy of `problem` with one slack s_k >= 0 per distinct disjunction
/// timestep: every member row becomes a^T u + s_k >= b and the objective gains
/// weight * s_k + s_k^2. The result is always feasible when the base QP is.
/// Slack variables are appended after the original decision variables.
MiqpProblem soften(const MiqpProblem& problem, double weight);

/// Slack magnitude of a solution of a softened problem.
double total_slack(const MiqpProblem& original, const MiqpSolution& softened);

//==============================================================================
/// A disjunction of tightened constraints on the predicted mean at one step.
struct TightenedDisjunction
{
  std::vector<TightenedConstraint> members;
  DisjunctionKind kind = DisjunctionKind::Generic;
  int source = -1;
  int timestep = 0;
};

/// Everything needed to build one agent's horizon-N problem.
struct AgentProblem
{
  AgentModel model;
  Mat4 Q = Vec4(10.0, 10.0, 0.1, 0.1).asDiagonal();
  Mat2 R = Vec2(0.1, 0.1).asDiagonal();
  Mat4 Q_terminal = Vec4(10.0, 10.0, 0.0, 0.0).asDiagonal();
  Vec4 x_ref = Vec4::Zero();
  Vec4 x0_mean = Vec4::Zero();
  int horizon = 20;

  std::vector<TightenedDisjunction> disjunctions;

  /// Plain (non-disjunctive) tightened rows.
  std::vector<TightenedConstraint> hard_constraints;

  double big_m = 1e4;
};

/// Eliminate the predicted means through the prediction map and build the
/// MIQP over the stacked inputs u_0..u_{N-1}. Throws AssemblyError on
/// inconsistent data.
MiqpProblem assemble(const AgentProblem& agent_problem);

/// Row of `c` over the stacked inputs: returns (a, b) with
/// c satisfied iff a^T u >= b.
DisjunctMember constraint_row(
  const TightenedConstraint& c,
  const PredictionMatrices& prediction,
  const Vec4& x0_mean);

} // namespace riskvo

#endif // RISKVO__MIQP_HPP
