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

#include <riskvo/chance.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace riskvo {

namespace {

constexpr double kTwoOverSqrtPi = 2.0*std::numbers::inv_sqrtpi;

// erf(x) = 2/sqrt(pi) exp(-x^2) sum_n 2^n x^(2n+1) / (1*3*...*(2n+1)).
// Every term is positive, so there is no cancellation for moderate x.
double erf_series(const double x)
{
  const double x2 = x*x;
  double term = x;
  double sum = x;
  for (int n = 1; n < 500; ++n)
  {
    term *= 2.0*x2/(2.0*n + 1.0);
    sum += term;
    if (term < 1e-17*sum)
      break;
  }
  return kTwoOverSqrtPi*std::exp(-x2)*sum;
}

// erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
// evaluated by modified Lentz. Valid for x > 0; used for x >= 3.
double erfc_continued_fraction(const double x)
{
  constexpr double tiny = 1e-300;
  double f = x;
  double C = x;
  double D = 0.0;
  for (int n = 1; n < 500; ++n)
  {
    const double a = 0.5*n;
    D = x + a*D;
    D = (D == 0.0) ? tiny : D;
    C = x + a/C;
    C = (C == 0.0) ? tiny : C;
    D = 1.0/D;
    const double delta = C*D;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16)
      break;
  }
  return std::exp(-x*x)*std::numbers::inv_sqrtpi/f;
}

constexpr double kSeriesLimit = 3.0;

} // anonymous namespace

//==============================================================================
double erf(const double x)
{
  if (std::isnan(x))
    return x;
  if (x < 0.0)
    return -erf(-x);
  if (x < kSeriesLimit)
    return erf_series(x);
  return 1.0 - erfc_continued_fraction(x);
}

//==============================================================================
double erfc(const double x)
{
  if (std::isnan(x))
    return x;
  if (x < 0.0)
    return 2.0 - erfc(-x);
  if (x < kSeriesLimit)
    return 1.0 - erf_series(x);
  return erfc_continued_fraction(x);
}

//==============================================================================
double erf_inv(const double y)
{
  if (!(std::abs(y) < 1.0))
    throw DomainError("erf_inv argument must lie in (-1, 1)");
  if (y == 0.0)
    return 0.0;
  if (y < 0.0)
    return -erf_inv(-y);

  // Winitzki's closed form as the starting point.
  constexpr double a = 0.147;
  const double one_minus_y = 1.0 - y;
  const double ln = std::log(one_minus_y*(1.0 + y));
  const double first = 2.0/(std::numbers::pi*a) + 0.5*ln;
  double x = std::sqrt(std::sqrt(first*first - ln/a) - first);

  // Upper tail is solved on erfc so 1 - y keeps full relative precision.
  const bool use_complement = y > 0.5;
  const auto residual = [&](const double t)
  {
    return use_complement ? one_minus_y - erfc(t) : erf(t) - y;
  };

  double lo = 0.0;
  double hi = 6.5;
  for (int iter = 0; iter < 200; ++iter)
  {
    const double r = residual(x);
    if (r == 0.0)
      break;
    if (r < 0.0)
      lo = x;
    else
      hi = x;

    // Both residual forms increase in x with derivative 2/sqrt(pi) e^{-x^2}.
    const double slope = kTwoOverSqrtPi*std::exp(-x*x);
    double next = x - r/slope;
    if (!(next > lo && next < hi))
      next = 0.5*(lo + hi);

    const double step = std::abs(next - x);
    x = next;
    if (step <= 1e-16*std::max(1.0, x) || hi - lo <= 1e-16*std::max(1.0, x))
      break;
  }
  return x;
}

//==============================================================================
double tighten_scalar(const double sigma, const double delta)
{
  if (!(sigma >= 0.0))
    throw DomainError("standard deviation must be nonnegative");
  if (!(delta > 0.0 && delta <= 0.5))
    throw DomainError("risk share must lie in (0, 0.5]");

  if (sigma == 0.0 || delta == 0.5)
    return 0.0;

  return std::numbers::sqrt2*sigma*erf_inv(1.0 - 2.0*delta);
}

//==============================================================================
double tighten_halfspace(
  const Vec2& normal, const Mat2& cov_block, const double delta)
{
  if (std::abs(normal.norm() - 1.0) > 1e-9)
    throw DomainError("constraint normal must be unit length");

  const Mat2 sym = 0.5*(cov_block + cov_block.transpose());
  const Eigen::SelfAdjointEigenSolver<Mat2> eig(sym);
  if (eig.eigenvalues().minCoeff() < -1e-9)
    throw NonPsdError("covariance block is not positive semidefinite");

  const double variance = std::max(0.0, normal.dot(sym*normal));
  return tighten_scalar(std::sqrt(variance), delta);
}

//==============================================================================
double allocate_risk(const double delta_agent, const int neighbor_count)
{
  if (neighbor_count < 1)
    throw ZeroNeighborsError("no neighbors to allocate velocity risk over");
  if (!(delta_agent > 0.0 && delta_agent < 1.0))
    throw DomainError("agent risk bound must lie in (0, 1)");

  return delta_agent/(2.0*neighbor_count);
}

//==============================================================================
double allocate_static_risk(const double epsilon_agent, const int obstacle_count)
{
  if (obstacle_count < 1)
    throw DomainError("static risk needs at least one obstacle");
  if (!(epsilon_agent > 0.0 && epsilon_agent < 1.0))
    throw DomainError("static risk bound must lie in (0, 1)");

  return epsilon_agent/obstacle_count;
}

//==============================================================================
RiskBudget RiskBudget::allocate(
  const double delta_agent,
  const double epsilon_agent,
  const int neighbor_count,
  const int obstacle_count)
{
  RiskBudget budget;
  budget.delta_agent = delta_agent;
  budget.epsilon_agent = epsilon_agent;
  if (neighbor_count > 0)
    budget.per_constraint_delta = allocate_risk(delta_agent, neighbor_count);
  if (obstacle_count > 0)
  {
    budget.per_constraint_epsilon =
      allocate_static_risk(epsilon_agent, obstacle_count);
  }
  return budget;
}

} // namespace riskvo
