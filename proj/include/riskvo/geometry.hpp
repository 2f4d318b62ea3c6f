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

#ifndef RISKVO__GEOMETRY_HPP
#define RISKVO__GEOMETRY_HPP

#include <riskvo/types.hpp>

#include <array>
#include <utility>
#include <vector>

namespace riskvo {

//==============================================================================
/// Linear constraint normal . y >= offset. The feasible side is where the
/// inequality holds; `normal` is unit length.
struct HalfSpace
{
  Vec2 normal = Vec2::UnitX();
  double offset = 0.0;

  /// normal . y - offset; nonnegative on the feasible side.
  double slack(const Vec2& y) const { return normal.dot(y) - offset; }
};

struct AgentPair
{
  int i = 0;
  int j = 0;
};

//==============================================================================
/// Unit normals of the two collision-cone edges. A relative velocity lies in
/// the cone iff it fails both n_m . v >= 0.
struct ConeNormals
{
  Vec2 n1;
  Vec2 n2;
  double half_angle = 0.0;
};

//==============================================================================
/// Collision cone translated to the neighbor velocity. A velocity is inside
/// iff both half-space constraints fail (boundary counts as inside).
struct VelocityObstacle
{
  std::array<HalfSpace, 2> halfspaces;
  Vec2 apex_velocity = Vec2::Zero();
  AgentPair source_pair;
  int timestep = 0;
};

//==============================================================================
/// Convex polygon stored with its complement as a disjunction: a point is
/// outside the obstacle iff at least one halfspace holds.
struct PolygonObstacle
{
  std::vector<Vec2> vertices;
  std::vector<HalfSpace> halfspaces;

  /// True when every edge constraint fails strictly.
  bool contains(const Vec2& p) const;

  /// Euclidean distance from `p` to the polygon (0 inside).
  double distance(const Vec2& p) const;
};

/// Counterclockwise rotation by theta radians.
Vec2 rotate(double theta, const Vec2& y);

/// Edge normals of the collision cone of disc i against disc j. Throws
/// OverlapError when ||p_i - p_j|| <= r_i + r_j.
ConeNormals build_collision_cone(
  const Vec2& p_i, const Vec2& p_j, double r_i, double r_j);

VelocityObstacle build_velocity_obstacle(
  const ConeNormals& cone, const Vec2& v_j, AgentPair pair, int timestep);

bool vo_contains(const VelocityObstacle& vo, const Vec2& v);

/// Substitute constraint used when two discs already overlap: the relative
/// velocity must not close the gap along the center line,
/// n . v_i >= n . v_j with n = (p_i - p_j)/||p_i - p_j||.
HalfSpace separating_halfspace(const Vec2& p_i, const Vec2& p_j, const Vec2& v_j);

/// Outward edge halfspaces of a convex counterclockwise polygon. Throws
/// DegenerateError on fewer than three vertices, repeated points or collinear
/// triples, NonConvexError on a reflex (or clockwise) turn.
PolygonObstacle polygon_to_halfspaces(const std::vector<Vec2>& vertices);

/// Shift every edge outward by r (r >= 0). Vertices are recomputed from the
/// shifted edges.
PolygonObstacle inflate_polygon(const PolygonObstacle& obstacle, double r);

} // namespace riskvo

#endif // RISKVO__GEOMETRY_HPP
