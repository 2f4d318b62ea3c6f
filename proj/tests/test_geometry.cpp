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
#include <riskvo/random.hpp>

#include <cmath>
#include <numbers>

using namespace riskvo;

namespace {

/// Signed distance from the closest point of the relative ray to the combined
/// disc boundary; negative means the ray enters the disc.
double ray_disc_clearance(
  const Vec2& p_i, const Vec2& p_j, double r, const Vec2& w)
{
  const Vec2 d = p_j - p_i;
  const double ww = w.squaredNorm();
  const double t = ww > 0.0 ? std::max(0.0, d.dot(w)/ww) : 0.0;
  return (p_i + t*w - p_j).norm() - r;
}

} // namespace

//==============================================================================
TEST_CASE("rotation")
{
  const Vec2 y = rotate(0.5*std::numbers::pi, Vec2::UnitX());
  CHECK(y.x() == doctest::Approx(0.0));
  CHECK(y.y() == doctest::Approx(1.0));
  CHECK(rotate(0.3, Vec2(2, -1)).norm() == doctest::Approx(Vec2(2, -1).norm()));
}

//==============================================================================
TEST_CASE("collision cone of two unit-separated discs")
{
  // |p_ij| = 2, r = 1: half angle 30 degrees.
  const auto cone = build_collision_cone(Vec2(0, 0), Vec2(2, 0), 0.5, 0.5);
  CHECK(cone.half_angle == doctest::Approx(std::numbers::pi/6));
  CHECK(cone.n1.norm() == doctest::Approx(1.0));
  CHECK(cone.n2.norm() == doctest::Approx(1.0));

  const auto vo = build_velocity_obstacle(cone, Vec2::Zero(), {0, 1}, 3);
  CHECK(vo.timestep == 3);
  CHECK(vo.source_pair.j == 1);
  CHECK(vo_contains(vo, Vec2(1, 0)));
  CHECK(vo_contains(vo, Vec2(1, 0.5)));
  CHECK_FALSE(vo_contains(vo, Vec2(1, 0.6)));
  CHECK_FALSE(vo_contains(vo, Vec2(-1, 0)));
  CHECK_FALSE(vo_contains(vo, Vec2(0, 1)));
}

//==============================================================================
TEST_CASE("velocity obstacle is translated by the neighbor velocity")
{
  const auto cone = build_collision_cone(Vec2(0, 0), Vec2(0, 3), 0.2, 0.2);
  const Vec2 v_j(1.5, -0.5);
  const auto vo = build_velocity_obstacle(cone, v_j, {0, 1}, 1);
  CHECK(vo_contains(vo, v_j + Vec2(0, 1)));
  CHECK_FALSE(vo_contains(vo, Vec2(0, 1)));
  CHECK(vo.apex_velocity == v_j);
}

//==============================================================================
TEST_CASE("overlapping discs have no cone")
{
  CHECK_THROWS_AS(
    build_collision_cone(Vec2(0, 0), Vec2(0.3, 0), 0.2, 0.2), OverlapError);
  CHECK_THROWS_AS(
    build_collision_cone(Vec2(0, 0), Vec2(0.4, 0), 0.2, 0.2), OverlapError);

  const HalfSpace hs = separating_halfspace(Vec2(0, 0), Vec2(0.3, 0), Vec2(1, 0));
  CHECK(hs.normal.isApprox(Vec2(-1, 0)));
  // Matching the neighbor velocity is the boundary; moving away is feasible.
  CHECK(hs.slack(Vec2(1, 0)) == doctest::Approx(0.0));
  CHECK(hs.slack(Vec2(0, 0)) > 0.0);
  CHECK(hs.slack(Vec2(2, 0)) < 0.0);
}

//==============================================================================
TEST_CASE("vo membership agrees with the ray-disc test")
{
  NormalSampler rng(derive_seed(42, {0}));
  int disagreements = 0;
  int checked = 0;
  for (int trial = 0; trial < 10000; ++trial)
  {
    const Vec2 p_i(4*rng.uniform() - 2, 4*rng.uniform() - 2);
    const Vec2 p_j(4*rng.uniform() - 2, 4*rng.uniform() - 2);
    const double r_i = 0.05 + 0.3*rng.uniform();
    const double r_j = 0.05 + 0.3*rng.uniform();
    if ((p_i - p_j).norm() <= r_i + r_j)
      continue;
    const Vec2 v_i(6*rng.uniform() - 3, 6*rng.uniform() - 3);
    const Vec2 v_j(6*rng.uniform() - 3, 6*rng.uniform() - 3);

    const auto vo = build_velocity_obstacle(
      build_collision_cone(p_i, p_j, r_i, r_j), v_j, {0, 1}, 0);
    const double clearance = ray_disc_clearance(p_i, p_j, r_i + r_j, v_i - v_j);
    if (std::abs(clearance) < 1e-9)
      continue;
    ++checked;
    if (vo_contains(vo, v_i) != (clearance <= 0.0))
      ++disagreements;
  }
  CHECK(checked > 9000);
  CHECK(disagreements == 0);
}

//==============================================================================
TEST_CASE("polygon halfspaces")
{
  const auto sq = polygon_to_halfspaces({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  REQUIRE(sq.halfspaces.size() == 4);
  for (const auto& hs : sq.halfspaces)
    CHECK(hs.normal.norm() == doctest::Approx(1.0));

  CHECK(sq.contains(Vec2(0.5, 0.5)));
  CHECK_FALSE(sq.contains(Vec2(1.5, 0.5)));
  CHECK_FALSE(sq.contains(Vec2(1.0, 0.5)));

  CHECK(sq.distance(Vec2(0.5, 0.5)) == 0.0);
  CHECK(sq.distance(Vec2(2.0, 0.5)) == doctest::Approx(1.0));
  CHECK(sq.distance(Vec2(2.0, 2.0)) == doctest::Approx(std::sqrt(2.0)));
  CHECK(sq.distance(Vec2(-0.5, 0.5)) == doctest::Approx(0.5));

  // A point outside satisfies at least one outward halfspace.
  const Vec2 out(1.2, 0.3);
  bool any = false;
  for (const auto& hs : sq.halfspaces)
    any = any || hs.slack(out) > 0.0;
  CHECK(any);
}

//==============================================================================
TEST_CASE("polygon validation")
{
  CHECK_THROWS_AS(polygon_to_halfspaces({{0, 0}, {1, 0}}), DegenerateError);
  CHECK_THROWS_AS(
    polygon_to_halfspaces({{0, 0}, {1, 0}, {1, 0}, {0, 1}}), DegenerateError);
  CHECK_THROWS_AS(
    polygon_to_halfspaces({{0, 0}, {1, 0}, {2, 0}, {0, 1}}), DegenerateError);
  // Clockwise order.
  CHECK_THROWS_AS(
    polygon_to_halfspaces({{0, 0}, {0, 1}, {1, 1}, {1, 0}}), NonConvexError);
  // Reflex vertex.
  CHECK_THROWS_AS(
    polygon_to_halfspaces({{0, 0}, {2, 0}, {1, 0.5}, {2, 2}, {0, 2}}),
    NonConvexError);
}

//==============================================================================
TEST_CASE("inflation shifts every edge by r")
{
  const auto sq = polygon_to_halfspaces({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  const auto big = inflate_polygon(sq, 0.2);
  REQUIRE(big.vertices.size() == 4);
  CHECK(big.vertices[0].isApprox(Vec2(-0.2, -0.2)));
  CHECK(big.vertices[2].isApprox(Vec2(1.2, 1.2)));
  for (std::size_t e = 0; e < 4; ++e)
  {
    CHECK(big.halfspaces[e].normal.isApprox(sq.halfspaces[e].normal));
    CHECK(big.halfspaces[e].offset
      == doctest::Approx(sq.halfspaces[e].offset + 0.2));
  }
  CHECK(big.contains(Vec2(1.1, 0.5)));
  CHECK((inflate_polygon(sq, 0.0).vertices[1] - sq.vertices[1]).norm() < 1e-12);
  CHECK_THROWS_AS(inflate_polygon(sq, -0.1), DomainError);
}
