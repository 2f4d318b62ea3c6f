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

#include <riskvo/qp.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace riskvo {

//==============================================================================
QpProblem QpProblem::unconstrained(const MatX& H, const VecX& f)
{
  QpProblem p;
  p.H = H;
  p.f = f;
  p.G = MatX::Zero(0, f.size());
  p.h = VecX::Zero(0);
  p.lb = VecX::Constant(f.size(), -kInf);
  p.ub = VecX::Constant(f.size(), kInf);
  return p;
}

//==============================================================================
void QpProblem::check_dimensions() const
{
  const auto n = f.size();
  if (H.rows() != n || H.cols() != n)
    throw DimensionError("QP Hessian must be n x n");
  if (G.cols() != n && G.rows() > 0)
    throw DimensionError("QP inequality matrix must have n columns");
  if (h.size() != G.rows())
    throw DimensionError("QP inequality vector length must match G rows");
  if (lb.size() != n || ub.size() != n)
    throw DimensionError("QP bound vectors must have length n");
}

//==============================================================================
void QpProblem::validate() const
{
  check_dimensions();
  if (f.size() == 0)
    return;

  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-9)
    throw NonPsdError("QP Hessian is not symmetric");

  const Eigen::SelfAdjointEigenSolver<MatX> eig(0.5*(H + H.transpose()));
  if (eig.eigenvalues().minCoeff() < -1e-8)
    throw NonPsdError("QP Hessian is not positive semidefinite");
}

//==============================================================================
const char* to_string(const QpStatus status)
{
  switch (status)
  {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::MaxIter: return "max_iter";
  }
  return "unknown";
}

//==============================================================================
MatX regularize(const MatX& H, const double sigma)
{
  return H + sigma*MatX::Identity(H.rows(), H.cols());
}

//==============================================================================
QpSolver::QpSolver(QpSettings settings)
: _settings(settings)
{
  // Do nothing
}

//==============================================================================
void QpSolver::factorize(const MatX& H)
{
  if (_cached_H.rows() == H.rows() && _cached_H.cols() == H.cols()
    && _cached_H == H)
  {
    return;
  }

  const auto n = H.rows();
  double sigma = _settings.regularization;
  MatX sym = 0.5*(H + H.transpose());
  for (int attempt = 0; attempt < 12; ++attempt, sigma *= 10.0)
  {
    MatX H_reg = regularize(sym, sigma);
    Eigen::LLT<MatX> llt(H_reg);
    if (llt.info() != Eigen::Success)
      continue;

    // H^{-1} = J J^T with J = L^{-T}.
    const MatX L_inv = llt.matrixL().solve(MatX::Identity(n, n));
    _J = L_inv.transpose();
    _H_reg = std::move(H_reg);
    _sigma = sigma;
    _cached_H = H;
    return;
  }

  throw NonPsdError("QP Hessian could not be regularized to positive definite");
}

namespace {

//==============================================================================
// Internal view of all constraints in the form c^T z >= b.
class RowSet
{
public:
  RowSet(const QpProblem& p)
  : _p(p), _n(p.num_variables()), _m(p.num_rows())
  {
    // Do nothing
  }

  int count() const { return 2*_n + _m; }

  bool present(const int i) const
  {
    if (i < _n)
      return is_finite_bound(_p.ub[i]);
    if (i < 2*_n)
      return is_finite_bound(_p.lb[i - _n]);
    return true;
  }

  double rhs(const int i) const
  {
    if (i < _n)
      return -_p.ub[i];
    if (i < 2*_n)
      return _p.lb[i - _n];
    return -_p.h[i - 2*_n];
  }

  double dot(const int i, const VecX& x) const
  {
    if (i < _n)
      return -x[i];
    if (i < 2*_n)
      return x[i - _n];
    return -_p.G.row(i - 2*_n).dot(x);
  }

  double slack(const int i, const VecX& x) const
  {
    return dot(i, x) - rhs(i);
  }

  /// J^T c_i
  void project(const int i, const MatX& J, VecX& d) const
  {
    if (i < _n)
      d = -J.row(i).transpose();
    else if (i < 2*_n)
      d = J.row(i - _n).transpose();
    else
      d.noalias() = -J.transpose()*_p.G.row(i - 2*_n).transpose();
  }

  void dense(const int i, VecX& c) const
  {
    if (i < 2*_n)
    {
      c.setZero(_n);
      c[i < _n ? i : i - _n] = i < _n ? -1.0 : 1.0;
      return;
    }
    c = -_p.G.row(i - 2*_n).transpose();
  }

  double tolerance(const int i, const double base) const
  {
    return base*(1.0 + std::abs(rhs(i)));
  }

private:
  const QpProblem& _p;
  int _n;
  int _m;
};

//==============================================================================
// Givens rotation helper shared by add/drop. Rotates (a, b) into (h, 0) and
// returns (cc, ss, xny) for the reflection-style update used below.
struct Rotation
{
  double cc;
  double ss;
  double xny;
  double h;
};

bool make_rotation(double a, double b, Rotation& rot)
{
  const double h = std::hypot(a, b);
  if (h == 0.0)
    return false;
  double cc = a/h;
  double ss = b/h;
  if (cc < 0.0)
  {
    cc = -cc;
    ss = -ss;
    rot.h = -h;
  }
  else
  {
    rot.h = h;
  }
  rot.cc = cc;
  rot.ss = ss;
  rot.xny = ss/(1.0 + cc);
  return true;
}

//==============================================================================
class DualActiveSet
{
public:
  DualActiveSet(
    const QpProblem& problem,
    const MatX& J0,
    const QpSettings& settings)
  : _rows(problem),
    _n(problem.num_variables()),
    _J(J0),
    _R(MatX::Zero(_n, _n)),
    _settings(settings)
  {
    _x = -(_J*(_J.transpose()*problem.f));
    _objective = 0.5*problem.f.dot(_x);
    _u.assign(_n + 1, 0.0);
    _active.assign(_n + 1, -1);
    _is_active.assign(_rows.count(), false);
    _d.resize(_n);
    _z.resize(_n);
    _r.resize(_n);
    _np.resize(_n);
  }

  // Returns false when the problem is infeasible.
  enum class AddResult { Added, Infeasible, Skipped };

  AddResult add(const int ip)
  {
    double s = _rows.slack(ip, _x);
    _rows.dense(ip, _np);
    _u[_q] = 0.0;
    _active[_q] = ip;

    while (true)
    {
      ++_iterations;
      if (_iterations > _max_iterations)
        return AddResult::Skipped;

      _rows.project(ip, _J, _d);

      // Primal step direction z = J2 d2 and dual direction r = R^{-1} d1.
      if (_q < _n)
        _z.noalias() = _J.rightCols(_n - _q)*_d.tail(_n - _q);
      else
        _z.setZero();

      for (int i = _q - 1; i >= 0; --i)
      {
        double sum = _d[i];
        for (int j = i + 1; j < _q; ++j)
          sum -= _R(i, j)*_r[j];
        _r[i] = sum/_R(i, i);
      }

      double t1 = kInf;
      int l = -1;
      for (int k = 0; k < _q; ++k)
      {
        if (_r[k] > 0.0)
        {
          const double ratio = _u[k]/_r[k];
          if (ratio < t1)
          {
            t1 = ratio;
            l = k;
          }
        }
      }

      double t2 = kInf;
      const double z_dot = _z.dot(_np);
      if (_z.squaredNorm() > std::numeric_limits<double>::epsilon() && z_dot > 0.0)
        t2 = -s/z_dot;

      const double t = std::min(t1, t2);
      if (t >= kInf)
        return AddResult::Infeasible;

      if (t2 >= kInf)
      {
        // Dual-only step: drop a blocking constraint.
        for (int k = 0; k < _q; ++k)
          _u[k] -= t*_r[k];
        _u[_q] += t;
        drop(l);
        continue;
      }

      _x += t*_z;
      _objective += t*z_dot*(0.5*t + _u[_q]);
      for (int k = 0; k < _q; ++k)
        _u[k] -= t*_r[k];
      _u[_q] += t;

      if (t2 <= t1)
      {
        if (!append())
        {
          // Numerically dependent: leave it out.
          _u[_q] = 0.0;
          _active[_q] = -1;
          return AddResult::Skipped;
        }
        _is_active[ip] = true;
        return AddResult::Added;
      }

      drop(l);
      s = _rows.slack(ip, _x);
    }
  }

  bool append()
  {
    for (int j = _n - 1; j >= _q + 1; --j)
    {
      Rotation rot;
      if (!make_rotation(_d[j-1], _d[j], rot))
        continue;
      _d[j] = 0.0;
      _d[j-1] = rot.h;
      for (int k = 0; k < _n; ++k)
      {
        const double a = _J(k, j-1);
        const double b = _J(k, j);
        _J(k, j-1) = a*rot.cc + b*rot.ss;
        _J(k, j) = rot.xny*(a + _J(k, j-1)) - b;
      }
    }

    ++_q;
    for (int i = 0; i < _q; ++i)
      _R(i, _q - 1) = _d[i];

    if (std::abs(_d[_q - 1]) <= 1e-14*_R_norm)
    {
      // Undo: the column is (numerically) in the span of the active set.
      for (int i = 0; i < _q; ++i)
        _R(i, _q - 1) = 0.0;
      --_q;
      return false;
    }
    _R_norm = std::max(_R_norm, std::abs(_d[_q - 1]));
    return true;
  }

  // Remove active position `pos`; the pending multiplier at _q shifts down.
  void drop(const int pos)
  {
    _is_active[_active[pos]] = false;
    for (int i = pos; i < _q - 1; ++i)
    {
      _active[i] = _active[i + 1];
      _u[i] = _u[i + 1];
      _R.col(i) = _R.col(i + 1);
    }
    _active[_q - 1] = _active[_q];
    _u[_q - 1] = _u[_q];
    _active[_q] = -1;
    _u[_q] = 0.0;
    for (int j = 0; j < _q; ++j)
      _R(j, _q - 1) = 0.0;
    --_q;

    for (int j = pos; j < _q; ++j)
    {
      Rotation rot;
      if (!make_rotation(_R(j, j), _R(j + 1, j), rot))
        continue;
      _R(j + 1, j) = 0.0;
      _R(j, j) = rot.h;
      for (int k = j + 1; k < _q; ++k)
      {
        const double a = _R(j, k);
        const double b = _R(j + 1, k);
        _R(j, k) = a*rot.cc + b*rot.ss;
        _R(j + 1, k) = rot.xny*(a + _R(j, k)) - b;
      }
      for (int k = 0; k < _n; ++k)
      {
        const double a = _J(k, j);
        const double b = _J(k, j + 1);
        _J(k, j) = a*rot.cc + b*rot.ss;
        _J(k, j + 1) = rot.xny*(_J(k, j) + a) - b;
      }
    }
  }

  /// Most violated absent row, lowest index on ties. -1 when none.
  int most_violated(const std::vector<char>& excluded) const
  {
    int best = -1;
    double best_slack = 0.0;
    for (int i = 0; i < _rows.count(); ++i)
    {
      if (_is_active[i] || excluded[i] || !_rows.present(i))
        continue;
      const double s = _rows.slack(i, _x);
      if (s < -_rows.tolerance(i, _settings.feasibility_tolerance)
        && s < best_slack)
      {
        best_slack = s;
        best = i;
      }
    }
    return best;
  }

  QpStatus run(std::span<const int> warm_rows, int max_iterations)
  {
    _max_iterations = max_iterations;
    std::vector<char> excluded(_rows.count(), false);

    for (const int ip : warm_rows)
    {
      if (ip < 0 || ip >= _rows.count() || !_rows.present(ip) || _is_active[ip])
        continue;
      if (_rows.slack(ip, _x) >= -_rows.tolerance(ip, _settings.feasibility_tolerance))
        continue;
      const auto result = add(ip);
      if (result == AddResult::Infeasible)
        return QpStatus::Infeasible;
      if (_iterations > _max_iterations)
        return QpStatus::MaxIter;
    }

    while (true)
    {
      const int ip = most_violated(excluded);
      if (ip < 0)
        return QpStatus::Optimal;

      const auto result = add(ip);
      if (result == AddResult::Infeasible)
        return QpStatus::Infeasible;
      if (_iterations > _max_iterations)
        return QpStatus::MaxIter;
      if (result == AddResult::Skipped)
        excluded[ip] = true;
      else
        std::fill(excluded.begin(), excluded.end(), false);
    }
  }

  const VecX& x() const { return _x; }
  int iterations() const { return _iterations; }
  int active_count() const { return _q; }
  int active_row(int k) const { return _active[k]; }
  double multiplier(int k) const { return _u[k]; }

private:
  RowSet _rows;
  int _n;
  MatX _J;
  MatX _R;
  const QpSettings& _settings;

  VecX _x;
  double _objective = 0.0;
  std::vector<double> _u;
  std::vector<int> _active;
  std::vector<char> _is_active;
  int _q = 0;
  double _R_norm = 1.0;
  int _iterations = 0;
  int _max_iterations = 0;

  VecX _d;
  VecX _z;
  VecX _r;
  VecX _np;
};

} // anonymous namespace

//==============================================================================
QpSolution QpSolver::solve_from_active_set(
  const QpProblem& problem, std::span<const int> warm_rows)
{
  problem.check_dimensions();
  const int n = problem.num_variables();
  const int m = problem.num_rows();

  QpSolution sol;
  sol.row_multipliers = VecX::Zero(m);
  sol.upper_multipliers = VecX::Zero(n);
  sol.lower_multipliers = VecX::Zero(n);

  for (int j = 0; j < n; ++j)
  {
    if (is_finite_bound(problem.lb[j]) && is_finite_bound(problem.ub[j])
      && problem.lb[j] > problem.ub[j])
    {
      sol.status = QpStatus::Infeasible;
      sol.z = VecX::Zero(n);
      return sol;
    }
  }

  if (n == 0)
  {
    sol.z = VecX::Zero(0);
    sol.objective = 0.0;
    sol.status = (problem.h.array() >= 0.0).all() ?
      QpStatus::Optimal : QpStatus::Infeasible;
    sol.kkt_residual = 0.0;
    sol.primal_violation = 0.0;
    sol.dual_objective = 0.0;
    return sol;
  }

  factorize(problem.H);
  sol.regularization = _sigma;

  const int max_iterations = _settings.max_iterations > 0 ?
    _settings.max_iterations : 10*(n + 2*n + m) + 100;

  DualActiveSet engine(problem, _J, _settings);
  sol.status = engine.run(warm_rows, max_iterations);
  sol.iterations = engine.iterations();
  sol.z = engine.x();

  // Multipliers in the user's (<=) convention, all >= 0.
  const RowSet rows(problem);
  VecX stationarity = problem.H*sol.z + problem.f;
  VecX c(n);
  double complementarity = 0.0;
  double dual_linear = 0.0;
  VecX w = problem.f;
  for (int k = 0; k < engine.active_count(); ++k)
  {
    const int i = engine.active_row(k);
    const double u = engine.multiplier(k);
    sol.active_set.push_back(i);
    if (i < n)
      sol.upper_multipliers[i] = u;
    else if (i < 2*n)
      sol.lower_multipliers[i - n] = u;
    else
      sol.row_multipliers[i - 2*n] = u;

    rows.dense(i, c);
    stationarity -= u*c;
    w -= u*c;
    dual_linear += u*rows.rhs(i);
    complementarity = std::max(
      complementarity, std::abs(u*rows.slack(i, sol.z)));
  }
  std::sort(sol.active_set.begin(), sol.active_set.end());

  double violation = 0.0;
  for (int i = 0; i < rows.count(); ++i)
  {
    if (rows.present(i))
      violation = std::max(violation, -rows.slack(i, sol.z));
  }

  sol.primal_violation = violation;
  sol.kkt_residual = std::max(
    stationarity.cwiseAbs().maxCoeff(), complementarity);
  sol.objective = 0.5*sol.z.dot(problem.H*sol.z) + problem.f.dot(sol.z);

  // Dual function of the regularized problem at the final multipliers.
  const VecX Jt_w = _J.transpose()*w;
  sol.dual_objective = -0.5*Jt_w.squaredNorm() + dual_linear;

  if (sol.status == QpStatus::Optimal && violation > 1e-7*(1.0 + sol.z.cwiseAbs().maxCoeff()))
    sol.status = QpStatus::MaxIter;

  return sol;
}

//==============================================================================
QpSolution QpSolver::solve(
  const QpProblem& problem, const std::optional<VecX>& warm_start)
{
  if (!warm_start.has_value())
    return solve_from_active_set(problem, {});

  if (warm_start->size() != problem.f.size())
    throw DimensionError("warm start length must match the QP dimension");

  const RowSet rows(problem);
  std::vector<int> tight;
  for (int i = 0; i < rows.count(); ++i)
  {
    if (!rows.present(i))
      continue;
    if (std::abs(rows.slack(i, *warm_start)) <= 1e-8*(1.0 + std::abs(rows.rhs(i))))
      tight.push_back(i);
  }
  return solve_from_active_set(problem, tight);
}

//==============================================================================
QpSolution solve_qp(
  const QpProblem& problem, const std::optional<VecX>& warm_start)
{
  problem.validate();
  QpSolver solver;
  return solver.solve(problem, warm_start);
}

} // namespace riskvo
