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

#ifndef RISKVO__RANDOM_HPP
#define RISKVO__RANDOM_HPP

#include <riskvo/types.hpp>

#include <cstdint>
#include <initializer_list>
#include <random>

namespace riskvo {

/// Mix `keys` into `base` with SplitMix64 so that every (trial, agent, step)
/// tuple gets an independent, thread-count-independent substream.
std::uint64_t derive_seed(
  std::uint64_t base, std::initializer_list<std::uint64_t> keys);

//==============================================================================
/// Standard-normal source on top of mt19937_64. Box-Muller is done here rather
/// than through std::normal_distribution so the stream is identical across
/// standard library implementations.
class NormalSampler
{
public:
  explicit NormalSampler(std::uint64_t seed);

  double uniform();
  double normal();

  /// Sample N(0, diag(variances)).
  Vec4 diagonal_gaussian(const Vec4& variances);

  /// Sample N(0, cov) through a Cholesky (LDLT for semidefinite) factor.
  Vec4 gaussian(const Mat4& cov);

  /// Sample N(0, cov) in two dimensions.
  Vec2 gaussian(const Mat2& cov);

private:
  std::mt19937_64 _engine;
  bool _has_spare = false;
  double _spare = 0.0;
};

} // namespace riskvo

#endif // RISKVO__RANDOM_HPP
