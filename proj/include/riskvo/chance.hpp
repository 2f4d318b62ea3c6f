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

#ifndef RISKVO__CHANCE_HPP
#define RISKVO__CHANCE_HPP

#include <riskvo/types.hpp>

namespace riskvo {

/// Error function. Series for |x| < 3, continued fraction for the tail.
double erf(double x);

/// Complementary error function, accurate in the far tail.
double erfc(double x);

/// Inverse error function on (-1, 1). Throws DomainError for |y| >= 1.
double erf_inv(double y);

/// Deterministic offset that makes Pr(x < 0) <= delta for x ~ N(mu, sigma^2)
/// equivalent to mu >= eta, with eta = sqrt(2) sigma erf_inv(1 - 2 delta).
/// Throws DomainError unless sigma >= 0 and 0 < delta <= 0.5.
double tighten_scalar(double sigma, double delta);

/// Margin g such that normal^T mu - offset >= g implies
/// Pr(normal^T X < offset) <= delta for X ~ N(mu, cov_block).
/// Throws NonPsdError when cov_block has an eigenvalue below -1e-9.
double tighten_halfspace(const Vec2& normal, const Mat2& cov_block, double delta);

/// Equal share delta_agent / (2 |B|) for each of the two edges of every
/// neighbor's velocity obstacle. Throws ZeroNeighborsError when
/// neighbor_count < 1, meaning no velocity-obstacle rows should be built.
double allocate_risk(double delta_agent, int neighbor_count);

/// Equal share epsilon_agent / |O| for the one active edge of every static
/// obstacle at a timestep.
double allocate_static_risk(double epsilon_agent, int obstacle_count);

//==============================================================================
struct RiskBudget
{
  double delta_agent = 0.1;
  double epsilon_agent = 0.01;
  double per_constraint_delta = 0.0;
  double per_constraint_epsilon = 0.0;

  /// Fill the per-constraint shares for the given neighbor/obstacle counts.
  /// A count of zero leaves its share at zero.
  static RiskBudget allocate(
    double delta_agent, double epsilon_agent,
    int neighbor_count, int obstacle_count);
};

//==============================================================================
enum class ConstraintSpace
{
  Velocity,
  Position
};

/// Tightened linear constraint normal^T y >= offset + margin where y is the
/// velocity or position block of the predicted mean at `timestep`.
struct TightenedConstraint
{
  Vec2 normal = Vec2::UnitX();
  double offset = 0.0;
  double margin = 0.0;
  ConstraintSpace space = ConstraintSpace::Velocity;
  int source = -1;
  int timestep = 0;
};

} // namespace riskvo

#endif // RISKVO__CHANCE_HPP
