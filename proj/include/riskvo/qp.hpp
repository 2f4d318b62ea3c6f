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

#ifndef RISKVO__QP_HPP
#define RISKVO__QP_HPP

#include <riskvo/types.hpp>

#include <optional>
#include <span>
#include <vector>

namespace riskvo {

//==============================================================================
/// minimize 1/2 z^T H z + f^T z  subject to  G z <= h,  lb <= z <= ub.
///
/// Bounds with magnitude >= 1e19 (or infinite) are treated as absent.
struct QpProblem
{
  MatX H;
  VecX f;
  MatX G;
  VecX h;
  VecX lb;
  VecX ub;

  int num_variables() const { return static_cast<int>(f.size()); }
  int num_rows() const { return static_cast<int>(G.rows()); }

  /// Unconstrained-box problem of dimension n with no general rows.
  static QpProblem unconstrained(const MatX& H, const VecX& f);

  /// Throws DimensionError on inconsistent sizes.
  void check_dimensions() const;

  /// check_dimensions() plus symmetry (1e-9) and PSD (min eigenvalue >= -1e-8)
  /// checks on H. Throws DimensionError / NonPsdError.
  void validate() const;
};

enum class QpStatus
{
  Optimal,
  Infeasible,
  MaxIter
};

const char* to_string(QpStatus status);

//==============================================================================
struct QpSolution
{
  VecX z;
  double objective = kInf;
  QpStatus status = QpStatus::MaxIter;

  /// max(stationarity, complementarity) at z.
  double kkt_residual = kInf;
  double primal_violation = kInf;
  double dual_objective = -kInf;
  int iterations = 0;

  /// Diagonal shift that was added to H for the factorization.
  double regularization = 0.0;

  /// Multipliers (>= 0) of G rows, upper bounds and lower bounds.
  VecX row_multipliers;
  VecX upper_multipliers;
  VecX lower_multipliers;

  /// Active constraints in solver row numbering (see QpSolver).
  std::vector<int> active_set;

  bool optimal() const { return status == QpStatus::Optimal; }
};

struct QpSettings
{
  double regularization = 1e-9;
  double feasibility_tolerance = 1e-9;

  /// 0 selects 10*(n + rows) + 100.
  int max_iterations = 0;
};

/// H + sigma I.
MatX regularize(const MatX& H, double sigma = 1e-9);

//==============================================================================
/// Dense dual active-set (Goldfarb-Idnani) solver.
///
/// Rows are numbered with the n upper bounds first, then the n lower bounds,
/// then the G rows: index 2n + i is G row i. Appending rows to G therefore
/// keeps every earlier index valid, which lets callers warm start a problem
/// from the active set of a problem with fewer rows.
///
/// The factorization of H is cached between calls with an identical H. An
/// instance is not thread safe; use one per thread.
class QpSolver
{
public:
  explicit QpSolver(QpSettings settings = {});

  /// Solve from scratch, or from the constraints that are tight at
  /// `warm_start` when one is provided.
  QpSolution solve(
    const QpProblem& problem,
    const std::optional<VecX>& warm_start = std::nullopt);

  /// Solve, adding `warm_rows` first (in order) when they are violated.
  QpSolution solve_from_active_set(
    const QpProblem& problem, std::span<const int> warm_rows);

  const QpSettings& settings() const { return _settings; }

private:
  void factorize(const MatX& H);

  QpSettings _settings;
  MatX _cached_H;
  MatX _J;
  MatX _H_reg;
  double _sigma = 0.0;
};

/// Validate and solve with a fresh solver.
QpSolution solve_qp(
  const QpProblem& problem,
  const std::optional<VecX>& warm_start = std::nullopt);

} // namespace riskvo

#endif // RISKVO__QP_HPP
