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

#include <riskvo/random.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace riskvo {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30))*0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27))*0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

template<int Dim>
Eigen::Matrix<double, Dim, Dim> sqrt_factor(
  const Eigen::Matrix<double, Dim, Dim>& cov)
{
  // Symmetric square root works for semidefinite inputs, where LLT does not.
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, Dim, Dim>> eig(cov);
  const auto values = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors()*values.asDiagonal();
}

} // anonymous namespace

//==============================================================================
std::uint64_t derive_seed(
  std::uint64_t base, std::initializer_list<std::uint64_t> keys)
{
  std::uint64_t h = splitmix64(base);
  for (const auto key : keys)
    h = splitmix64(h ^ splitmix64(key + 0x632be59bd9b4e019ULL));
  return h;
}

//==============================================================================
NormalSampler::NormalSampler(const std::uint64_t seed)
: _engine(seed)
{
  // Do nothing
}

//==============================================================================
double NormalSampler::uniform()
{
  // 53 random bits into [0, 1)
  return static_cast<double>(_engine() >> 11)*0x1.0p-53;
}

//==============================================================================
double NormalSampler::normal()
{
  if (_has_spare)
  {
    _has_spare = false;
    return _spare;
  }

  double u1 = uniform();
  while (u1 <= 0.0)
    u1 = uniform();
  const double u2 = uniform();

  const double radius = std::sqrt(-2.0*std::log(u1));
  const double angle = 2.0*std::numbers::pi*u2;
  _spare = radius*std::sin(angle);
  _has_spare = true;
  return radius*std::cos(angle);
}

//==============================================================================
Vec4 NormalSampler::diagonal_gaussian(const Vec4& variances)
{
  Vec4 out;
  for (int i = 0; i < 4; ++i)
    out[i] = std::sqrt(std::max(variances[i], 0.0))*normal();
  return out;
}

//==============================================================================
Vec4 NormalSampler::gaussian(const Mat4& cov)
{
  Vec4 z;
  for (int i = 0; i < 4; ++i)
    z[i] = normal();
  return sqrt_factor<4>(cov)*z;
}

//==============================================================================
Vec2 NormalSampler::gaussian(const Mat2& cov)
{
  Vec2 z;
  z[0] = normal();
  z[1] = normal();
  return sqrt_factor<2>(cov)*z;
}

} // namespace riskvo
