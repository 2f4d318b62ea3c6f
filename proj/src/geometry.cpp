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

#include <riskvo/geometry.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace riskvo {

namespace {

double cross(const Vec2& a, const Vec2& b)
{
  return a.x()*b.y() - a.y()*b.x();
}

} // anonymous namespace

//==============================================================================
Vec2 rotate(const double theta, const Vec2& y)
{
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return Vec2(c*y.x() - s*y.y(), s*y.x() + c*y.y());
}

//==============================================================================
ConeNormals build_collision_cone(
  const Vec2& p_i, const Vec2& p_j, const double r_i, const double r_j)
{
  const Vec2 p_ij = p_i - p_j;
  const double dist = p_ij.norm();
  const double r = r_i + r_j;
  if (!(dist > r))
    throw OverlapError("agent discs overlap; collision cone is undefined");

  const double alpha = std::asin(r/dist);
  const Vec2 t1 = rotate(alpha, p_ij);
  const Vec2 t2 = rotate(-alpha, p_ij);

  ConeNormals cone;
  cone.n1 = rotate(-0.5*std::numbers::pi, t1).normalized();
  cone.n2 = rotate(0.5*std::numbers::pi, t2).normalized();
  cone.half_angle = alpha;
  return cone;
}

//==============================================================================
VelocityObstacle build_velocity_obstacle(
  const ConeNormals& cone,
  const Vec2& v_j,
  const AgentPair pair,
  const int timestep)
{
  VelocityObstacle vo;
  vo.halfspaces[0] = HalfSpace{cone.n1, cone.n1.dot(v_j)};
  vo.halfspaces[1] = HalfSpace{cone.n2, cone.n2.dot(v_j)};
  vo.apex_velocity = v_j;
  vo.source_pair = pair;
  vo.timestep = timestep;
  return vo;
}

//==============================================================================
bool vo_contains(const VelocityObstacle& vo, const Vec2& v)
{
  return vo.halfspaces[0].normal.dot(v) <= vo.halfspaces[0].offset
    && vo.halfspaces[1].normal.dot(v) <= vo.halfspaces[1].offset;
}

//==============================================================================
HalfSpace separating_halfspace(
  const Vec2& p_i, const Vec2& p_j, const Vec2& v_j)
{
  Vec2 n = p_i - p_j;
  const double length = n.norm();
  if (length > 0.0)
    n /= length;
  else
    n = Vec2::UnitX();

  return HalfSpace{n, n.dot(v_j)};
}

//==============================================================================
bool PolygonObstacle::contains(const Vec2& p) const
{
  for (const auto& hs : halfspaces)
  {
    if (hs.slack(p) >= 0.0)
      return false;
  }
  return !halfspaces.empty();
}

//==============================================================================
double PolygonObstacle::distance(const Vec2& p) const
{
  if (contains(p))
    return 0.0;

  double best = kInf;
  const std::size_t n = vertices.size();
  for (std::size_t e = 0; e < n; ++e)
  {
    const Vec2& a = vertices[e];
    const Vec2& b = vertices[(e + 1) % n];
    const Vec2 ab = b - a;
    const double t = std::clamp((p - a).dot(ab)/ab.squaredNorm(), 0.0, 1.0);
    best = std::min(best, (a + t*ab - p).norm());
  }
  return best;
}

//==============================================================================
PolygonObstacle polygon_to_halfspaces(const std::vector<Vec2>& vertices)
{
  const std::size_t n = vertices.size();
  if (n < 3)
    throw DegenerateError("a polygon needs at least three vertices");

  for (std::size_t a = 0; a < n; ++a)
  {
    for (std::size_t b = a + 1; b < n; ++b)
    {
      if ((vertices[a] - vertices[b]).norm() <= 1e-9)
        throw DegenerateError("polygon has repeated vertices");
    }
  }

  for (std::size_t e = 0; e < n; ++e)
  {
    const Vec2 d0 = vertices[(e + 1) % n] - vertices[e];
    const Vec2 d1 = vertices[(e + 2) % n] - vertices[(e + 1) % n];
    const double turn = cross(d0, d1);
    const double scale = d0.norm()*d1.norm();
    if (std::abs(turn) <= 1e-12*scale)
      throw DegenerateError("polygon has a collinear vertex triple");
    if (turn < 0.0)
      throw NonConvexError("polygon is not convex and counterclockwise");
  }

  // A convex CCW polygon turns through exactly 2*pi; more means it winds twice.
  double winding = 0.0;
  for (std::size_t e = 0; e < n; ++e)
  {
    const Vec2 d0 = vertices[(e + 1) % n] - vertices[e];
    const Vec2 d1 = vertices[(e + 2) % n] - vertices[(e + 1) % n];
    winding += std::atan2(cross(d0, d1), d0.dot(d1));
  }
  if (winding > 2.0*std::numbers::pi + 1e-6)
    throw NonConvexError("polygon boundary self-intersects");

  PolygonObstacle out;
  out.vertices = vertices;
  out.halfspaces.reserve(n);
  for (std::size_t e = 0; e < n; ++e)
  {
    const Vec2& a = vertices[e];
    const Vec2 edge = vertices[(e + 1) % n] - a;
    // Right-hand side of a CCW edge faces outward.
    const Vec2 normal = Vec2(edge.y(), -edge.x()).normalized();
    out.halfspaces.push_back(HalfSpace{normal, normal.dot(a)});
  }
  return out;
}

//==============================================================================
PolygonObstacle inflate_polygon(const PolygonObstacle& obstacle, const double r)
{
  if (r < 0.0)
    throw DomainError("inflation radius must be nonnegative");

  PolygonObstacle out = obstacle;
  if (r == 0.0)
    return out;

  for (auto& hs : out.halfspaces)
    hs.offset += r;

  // Vertex e is the intersection of edge lines e-1 and e.
  const std::size_t n = out.halfspaces.size();
  out.vertices.resize(n);
  for (std::size_t e = 0; e < n; ++e)
  {
    const HalfSpace& prev = out.halfspaces[(e + n - 1) % n];
    const HalfSpace& curr = out.halfspaces[e];
    Mat2 M;
    M.row(0) = prev.normal.transpose();
    M.row(1) = curr.normal.transpose();
    out.vertices[e] = M.inverse()*Vec2(prev.offset, curr.offset);
  }
  return out;
}

} // namespace riskvo
