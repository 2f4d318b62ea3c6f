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

#include <riskvo/miqp.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>

namespace riskvo {

namespace {

constexpr double kMemberTolerance = 1e-7;

//==============================================================================
bool member_satisfied(const DisjunctMember& member, const VecX& u)
{
  return member.violation(u) <= kMemberTolerance*(1.0 + std::abs(member.b));
}

//==============================================================================
// Append rows a^T u >= b as -a^T u <= -b.
void append_rows(
  QpProblem& qp, const std::vector<std::pair<const VecX*, double>>& rows)
{
  if (rows.empty())
    return;

  const auto n = qp.f.size();
  const auto m0 = qp.G.rows();
  const auto m = m0 + static_cast<Eigen::Index>(rows.size());
  MatX G(m, n);
  VecX h(m);
  if (m0 > 0)
  {
    G.topRows(m0) = qp.G;
    h.head(m0) = qp.h;
  }
  for (std::size_t r = 0; r < rows.size(); ++r)
  {
    G.row(m0 + r) = -rows[r].first->transpose();
    h[m0 + r] = -rows[r].second;
  }
  qp.G = std::move(G);
  qp.h = std::move(h);
}

//==============================================================================
// The base problem plus the rows that hold for every binary assignment:
// single-member disjunctions in full, and a^T u >= b - M for every other
// member whose worst violation over the bounds exceeds M.
QpProblem relaxed_base(const MiqpProblem& problem)
{
  QpProblem qp = problem.qp;
  std::vector<VecX> a_storage;
  std::vector<double> rhs;
  for (const auto& d : problem.disjunctions)
  {
    if (d.members.size() == 1)
    {
      a_storage.push_back(d.members.front().a);
      rhs.push_back(d.members.front().b);
      continue;
    }
    for (const auto& member : d.members)
    {
      if (problem.worst_violation(member) > problem.big_m)
      {
        a_storage.push_back(member.a);
        rhs.push_back(member.b - problem.big_m);
      }
    }
  }

  std::vector<std::pair<const VecX*, double>> rows;
  for (std::size_t i = 0; i < a_storage.size(); ++i)
    rows.emplace_back(&a_storage[i], rhs[i]);
  append_rows(qp, rows);
  return qp;
}

//==============================================================================
void fill_assignment(
  const MiqpProblem& problem,
  const std::vector<int>& enforced,
  MiqpSolution& sol)
{
  sol.z.assign(problem.binary_count, 0);
  sol.chosen.assign(problem.disjunctions.size(), -1);
  for (std::size_t d = 0; d < problem.disjunctions.size(); ++d)
  {
    const auto& dis = problem.disjunctions[d];
    for (std::size_t m = 0; m < dis.members.size(); ++m)
    {
      if (member_satisfied(dis.members[m], sol.u))
      {
        sol.z[dis.binary_ids[m]] = 1;
        if (sol.chosen[d] < 0)
          sol.chosen[d] = static_cast<int>(m);
      }
    }
    if (!enforced.empty() && enforced[d] >= 0)
      sol.chosen[d] = enforced[d];
  }
}

//==============================================================================
double seconds_since(std::chrono::steady_clock::time_point start)
{
  return std::chrono::duration<double>(
    std::chrono::steady_clock::now() - start).count();
}

struct Node
{
  int id = 0;
  int parent = -1;
  int depth = 0;
  double bound = -kInf;
  // (disjunction, member) in the order the rows were appended.
  std::vector<std::pair<int, int>> path;
  std::vector<int> warm_rows;
};

} // namespace

//==============================================================================
void MiqpProblem::add_disjunction(Disjunction d)
{
  if (d.members.empty())
    throw AssemblyError("disjunction has no members");
  if (d.min_active != 1)
    throw AssemblyError("only disjunctions with min_active = 1 are supported");
  for (const auto& member : d.members)
  {
    if (member.a.size() != qp.f.size())
      throw AssemblyError("disjunct row length does not match the decision vector");
  }

  d.binary_ids.resize(d.members.size());
  for (auto& id : d.binary_ids)
    id = binary_count++;

  disjunctions.push_back(std::move(d));
  audit_big_m();
}

//==============================================================================
double MiqpProblem::worst_violation(const DisjunctMember& member) const
{
  double min_value = 0.0;
  for (Eigen::Index i = 0; i < member.a.size(); ++i)
  {
    const double a = member.a[i];
    if (a == 0.0)
      continue;
    const double bound = a > 0.0 ? qp.lb[i] : qp.ub[i];
    if (!is_finite_bound(bound))
      return kInf;
    min_value += a*bound;
  }
  return member.b - min_value;
}

//==============================================================================
void MiqpProblem::audit_big_m()
{
  big_m_sufficient = true;
  for (const auto& d : disjunctions)
  {
    for (const auto& member : d.members)
    {
      if (worst_violation(member) > big_m)
        big_m_sufficient = false;
    }
  }
}

//==============================================================================
const char* to_string(const MiqpStatus status)
{
  switch (status)
  {
    case MiqpStatus::Optimal: return "optimal";
    case MiqpStatus::Infeasible: return "infeasible";
    case MiqpStatus::BudgetExceeded: return "budget_exceeded";
  }
  return "unknown";
}

//==============================================================================
MiqpSolution branch_and_bound(
  const MiqpProblem& problem, const BnbSettings& settings)
{
  const auto start = std::chrono::steady_clock::now();
  problem.qp.validate();

  const int D = static_cast<int>(problem.disjunctions.size());
  const QpProblem base = relaxed_base(problem);
  const int n = base.num_variables();
  const int base_rows = base.num_rows();
  QpSolver solver;

  MiqpSolution best;
  best.u = VecX::Zero(n);

  auto node_qp = [&](const std::vector<std::pair<int, int>>& path)
  {
    QpProblem qp = base;
    std::vector<std::pair<const VecX*, double>> rows;
    rows.reserve(path.size());
    for (const auto& [d, m] : path)
    {
      const auto& member = problem.disjunctions[d].members[m];
      rows.emplace_back(&member.a, member.b);
    }
    append_rows(qp, rows);
    return qp;
  };

  // Disjunction with the largest smallest-member violation, or -1 when every
  // disjunction already holds.
  auto most_violated = [&](const VecX& u, std::vector<double>& member_viol)
  {
    int pick = -1;
    double worst = 0.0;
    for (int d = 0; d < D; ++d)
    {
      const auto& dis = problem.disjunctions[d];
      if (dis.members.size() == 1)
        continue;
      bool ok = false;
      double v = kInf;
      for (const auto& member : dis.members)
      {
        if (member_satisfied(member, u))
        {
          ok = true;
          break;
        }
        v = std::min(v, member.violation(u));
      }
      if (ok)
        continue;
      if (pick < 0 || v > worst)
      {
        pick = d;
        worst = v;
      }
    }
    if (pick >= 0)
    {
      const auto& dis = problem.disjunctions[pick];
      member_viol.resize(dis.members.size());
      for (std::size_t m = 0; m < dis.members.size(); ++m)
        member_viol[m] = dis.members[m].violation(u);
    }
    return pick;
  };

  auto prune_level = [&]()
  {
    return best.objective - 1e-9*(1.0 + std::abs(best.objective));
  };

  auto accept = [&](const QpSolution& sol, const std::vector<int>& enforced)
  {
    if (best.has_incumbent && sol.objective >= best.objective)
      return;
    best.has_incumbent = true;
    best.u = sol.z;
    best.objective = sol.objective;
    fill_assignment(problem, enforced, best);
  };

  int explored = 0;

  // Incumbent probe from the caller's preferred members.
  if (D > 0 && static_cast<int>(settings.warm_choices.size()) == D)
  {
    std::vector<std::pair<int, int>> path;
    for (int d = 0; d < D; ++d)
    {
      const int m = settings.warm_choices[d];
      if (m >= 0
        && m < static_cast<int>(problem.disjunctions[d].members.size()))
      {
        path.emplace_back(d, m);
      }
    }
    if (!path.empty())
    {
      const QpSolution sol = solver.solve_from_active_set(node_qp(path), {});
      ++explored;
      std::vector<double> scratch;
      if (sol.optimal() && most_violated(sol.z, scratch) < 0)
      {
        std::vector<int> enforced(D, -1);
        for (const auto& [d, m] : path)
          enforced[d] = m;
        accept(sol, enforced);
      }
    }
  }

  std::vector<Node> open;
  open.push_back(Node{});
  int next_id = 1;
  bool budget_hit = false;

  while (!open.empty())
  {
    if (explored >= settings.max_nodes)
    {
      budget_hit = true;
      break;
    }

    // Depth first until an incumbent exists, best first afterwards.
    std::size_t pick = open.size() - 1;
    if (best.has_incumbent)
    {
      for (std::size_t i = 0; i < open.size(); ++i)
      {
        const auto& a = open[i];
        const auto& b = open[pick];
        if (a.bound < b.bound || (a.bound == b.bound && a.id < b.id))
          pick = i;
      }
    }
    Node node = std::move(open[pick]);
    open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));

    if (best.has_incumbent && node.bound >= prune_level())
      continue;

    const QpSolution sol =
      solver.solve_from_active_set(node_qp(node.path), node.warm_rows);
    ++explored;

    BnbNodeRecord record;
    record.id = node.id;
    record.parent = node.parent;
    record.depth = node.depth;
    record.feasible = sol.optimal();
    record.objective = sol.optimal() ? sol.objective : kInf;

    std::vector<double> member_viol;
    const int branch = sol.optimal() ? most_violated(sol.z, member_viol) : -1;
    record.leaf = sol.optimal() && branch < 0;
    if (settings.observer)
      settings.observer(record);

    if (!sol.optimal())
      continue;
    if (best.has_incumbent && sol.objective >= prune_level())
      continue;

    if (branch < 0)
    {
      std::vector<int> enforced(D, -1);
      for (const auto& [d, m] : node.path)
        enforced[d] = m;
      accept(sol, enforced);
      continue;
    }

    // Children in ascending member violation, index breaks ties.
    std::vector<int> order(member_viol.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b)
      {
        return member_viol[a] < member_viol[b];
      });

    std::vector<int> warm;
    for (int r : sol.active_set)
    {
      if (r < 2*n + base_rows + static_cast<int>(node.path.size()))
        warm.push_back(r);
    }

    // Pushed in reverse so the most promising child is popped first.
    std::vector<Node> children;
    for (int m : order)
    {
      Node child;
      child.id = next_id++;
      child.parent = node.id;
      child.depth = node.depth + 1;
      child.bound = sol.objective;
      child.path = node.path;
      child.path.emplace_back(branch, m);
      child.warm_rows = warm;
      children.push_back(std::move(child));
    }
    for (auto it = children.rbegin(); it != children.rend(); ++it)
      open.push_back(std::move(*it));
  }

  best.nodes_explored = explored;
  if (best.has_incumbent)
    best.status = budget_hit ? MiqpStatus::BudgetExceeded : MiqpStatus::Optimal;
  else
    best.status = budget_hit ? MiqpStatus::BudgetExceeded : MiqpStatus::Infeasible;
  best.wall_time = seconds_since(start);
  return best;
}

//==============================================================================
MiqpSolution enumerate_oracle(const MiqpProblem& problem)
{
  const auto start = std::chrono::steady_clock::now();
  if (problem.binary_count > 20)
    throw GuardError("enumeration is limited to 20 binaries");
  problem.qp.validate();

  const int B = problem.binary_count;
  const int n = problem.qp.num_variables();
  QpSolver solver;

  MiqpSolution best;
  best.u = VecX::Zero(n);
  int explored = 0;

  std::vector<int> z(B);
  for (std::uint32_t mask = 0; mask < (1u << B); ++mask)
  {
    for (int b = 0; b < B; ++b)
      z[b] = static_cast<int>((mask >> b) & 1u);

    bool admissible = true;
    for (const auto& d : problem.disjunctions)
    {
      int active = 0;
      for (int id : d.binary_ids)
        active += z[id];
      if (active < d.min_active)
      {
        admissible = false;
        break;
      }
    }
    if (!admissible)
      continue;

    QpProblem qp = problem.qp;
    std::vector<VecX> a_storage;
    std::vector<double> rhs;
    for (const auto& d : problem.disjunctions)
    {
      for (std::size_t m = 0; m < d.members.size(); ++m)
      {
        const auto& member = d.members[m];
        a_storage.push_back(member.a);
        rhs.push_back(z[d.binary_ids[m]] ? member.b : member.b - problem.big_m);
      }
    }
    std::vector<std::pair<const VecX*, double>> rows;
    for (std::size_t i = 0; i < a_storage.size(); ++i)
      rows.emplace_back(&a_storage[i], rhs[i]);
    append_rows(qp, rows);

    const QpSolution sol = solver.solve_from_active_set(qp, {});
    ++explored;
    if (!sol.optimal())
      continue;
    if (best.has_incumbent && sol.objective >= best.objective)
      continue;

    best.has_incumbent = true;
    best.u = sol.z;
    best.objective = sol.objective;
    best.z = z;
    best.chosen.assign(problem.disjunctions.size(), -1);
    for (std::size_t d = 0; d < problem.disjunctions.size(); ++d)
    {
      const auto& dis = problem.disjunctions[d];
      for (std::size_t m = 0; m < dis.members.size(); ++m)
      {
        if (z[dis.binary_ids[m]])
        {
          best.chosen[d] = static_cast<int>(m);
          break;
        }
      }
    }
  }

  best.nodes_explored = explored;
  best.status = best.has_incumbent ? MiqpStatus::Optimal : MiqpStatus::Infeasible;
  best.wall_time = seconds_since(start);
  return best;
}

//==============================================================================
MiqpProblem soften(const MiqpProblem& problem, const double weight)
{
  std::map<int, int> slack_of_step;
  for (const auto& d : problem.disjunctions)
    slack_of_step.emplace(d.timestep, 0);
  int next = 0;
  for (auto& [k, idx] : slack_of_step)
    idx = next++;

  const int n = problem.qp.num_variables();
  const int S = static_cast<int>(slack_of_step.size());
  const int total = n + S;

  MiqpProblem out;
  out.big_m = problem.big_m;
  auto& qp = out.qp;
  qp.H = MatX::Zero(total, total);
  qp.H.topLeftCorner(n, n) = problem.qp.H;
  qp.H.bottomRightCorner(S, S) = 2.0*MatX::Identity(S, S);
  qp.f = VecX::Constant(total, weight);
  qp.f.head(n) = problem.qp.f;
  qp.G = MatX::Zero(problem.qp.num_rows(), total);
  qp.G.leftCols(n) = problem.qp.G;
  qp.h = problem.qp.h;
  qp.lb = VecX::Zero(total);
  qp.lb.head(n) = problem.qp.lb;
  qp.ub = VecX::Constant(total, kInf);
  qp.ub.head(n) = problem.qp.ub;

  for (const auto& d : problem.disjunctions)
  {
    Disjunction soft = d;
    const int s = n + slack_of_step.at(d.timestep);
    for (auto& member : soft.members)
    {
      VecX a = VecX::Zero(total);
      a.head(n) = member.a;
      a[s] = 1.0;
      member.a = std::move(a);
    }
    soft.binary_ids.clear();
    out.add_disjunction(std::move(soft));
  }
  out.audit_big_m();
  return out;
}

//==============================================================================
double total_slack(const MiqpProblem& original, const MiqpSolution& softened)
{
  const int n = original.qp.num_variables();
  if (softened.u.size() <= n)
    return 0.0;
  return softened.u.tail(softened.u.size() - n).sum();
}

//==============================================================================
DisjunctMember constraint_row(
  const TightenedConstraint& c,
  const PredictionMatrices& prediction,
  const Vec4& x0_mean)
{
  if (c.timestep < 1 || c.timestep > prediction.horizon)
    throw AssemblyError("constraint timestep outside the prediction horizon");

  const Mat24 L = c.space == ConstraintSpace::Velocity ?
    AgentModel::Lv() : AgentModel::Lp();
  const Eigen::RowVector4d sel = c.normal.transpose()*L;

  DisjunctMember row;
  row.a = (sel*prediction.gamma_block(c.timestep)).transpose();
  row.b = c.offset + c.margin
    - (sel*prediction.phi_block(c.timestep)*x0_mean).value();
  return row;
}

//==============================================================================
MiqpProblem assemble(const AgentProblem& ap)
{
  const int N = ap.horizon;
  if (N < 1)
    throw AssemblyError("horizon must be at least 1");
  if (!ap.Q.allFinite() || !ap.R.allFinite() || !ap.Q_terminal.allFinite()
    || !ap.x_ref.allFinite() || !ap.x0_mean.allFinite())
  {
    throw AssemblyError("cost weights and states must be finite");
  }
  if (!(ap.big_m > 0.0))
    throw AssemblyError("big-M constant must be positive");

  const auto& model = ap.model;
  const PredictionMatrices pred = prediction_matrices(model, N);
  const int n = 2*N;

  MatX Qbar = MatX::Zero(4*N, 4*N);
  VecX Xref(4*N);
  for (int k = 1; k <= N; ++k)
  {
    Qbar.block(4*(k-1), 4*(k-1), 4, 4) = k < N ? ap.Q : ap.Q_terminal;
    Xref.segment<4>(4*(k-1)) = ap.x_ref;
  }
  MatX Rbar = MatX::Zero(n, n);
  for (int k = 0; k < N; ++k)
    Rbar.block(2*k, 2*k, 2, 2) = ap.R;

  MiqpProblem out;
  out.big_m = ap.big_m;
  auto& qp = out.qp;
  const MatX QG = Qbar*pred.gamma;
  qp.H = 2.0*(pred.gamma.transpose()*QG + Rbar);
  qp.H = 0.5*(qp.H + qp.H.transpose()).eval();
  qp.f = 2.0*QG.transpose()*(pred.phi*ap.x0_mean - Xref);

  qp.lb.resize(n);
  qp.ub.resize(n);
  for (int k = 0; k < N; ++k)
  {
    qp.lb.segment<2>(2*k) = model.u_min();
    qp.ub.segment<2>(2*k) = model.u_max();
  }

  // State bounds on the predicted mean and plain tightened rows.
  std::vector<VecX> rows;
  std::vector<double> rhs;
  const VecX free = pred.phi*ap.x0_mean;
  for (int k = 1; k <= N; ++k)
  {
    for (int c = 0; c < 4; ++c)
    {
      const int r = 4*(k-1) + c;
      if (is_finite_bound(model.x_max()[c]))
      {
        rows.push_back(pred.gamma.row(r).transpose());
        rhs.push_back(model.x_max()[c] - free[r]);
      }
      if (is_finite_bound(model.x_min()[c]))
      {
        rows.push_back(-pred.gamma.row(r).transpose());
        rhs.push_back(free[r] - model.x_min()[c]);
      }
    }
  }
  for (const auto& c : ap.hard_constraints)
  {
    const DisjunctMember row = constraint_row(c, pred, ap.x0_mean);
    rows.push_back(-row.a);
    rhs.push_back(-row.b);
  }

  qp.G.resize(static_cast<Eigen::Index>(rows.size()), n);
  qp.h.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
  {
    qp.G.row(i) = rows[i].transpose();
    qp.h[i] = rhs[i];
  }

  for (const auto& td : ap.disjunctions)
  {
    if (td.members.empty())
      throw AssemblyError("tightened disjunction has no members");
    Disjunction d;
    d.kind = td.kind;
    d.source = td.source;
    d.timestep = td.timestep;
    for (const auto& c : td.members)
    {
      if (c.timestep != td.timestep)
        throw AssemblyError("disjunction members must share one timestep");
      d.members.push_back(constraint_row(c, pred, ap.x0_mean));
    }
    out.add_disjunction(std::move(d));
  }
  out.audit_big_m();
  return out;
}

} // namespace riskvo
