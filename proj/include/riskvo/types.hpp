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

#ifndef RISKVO__TYPES_HPP
#define RISKVO__TYPES_HPP

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>

namespace riskvo {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;
using Mat42 = Eigen::Matrix<double, 4, 2>;
using Mat24 = Eigen::Matrix<double, 2, 4>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Magnitude at or beyond which a bound is treated as absent.
constexpr double kInfiniteBound = 1e19;

inline bool is_finite_bound(double b)
{
  return std::abs(b) < kInfiniteBound;
}

//==============================================================================
// Error hierarchy. Every library failure derives from riskvo::Error so the CLI
// can map categories to exit codes.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

#define RISKVO_DECLARE_ERROR(Name) \
  class Name : public Error \
  { \
  public: \
    using Error::Error; \
  }

RISKVO_DECLARE_ERROR(DomainError);
RISKVO_DECLARE_ERROR(OverlapError);
RISKVO_DECLARE_ERROR(NonConvexError);
RISKVO_DECLARE_ERROR(DegenerateError);
RISKVO_DECLARE_ERROR(NonPsdError);
RISKVO_DECLARE_ERROR(DimensionError);
RISKVO_DECLARE_ERROR(AssemblyError);
RISKVO_DECLARE_ERROR(GuardError);
RISKVO_DECLARE_ERROR(ZeroNeighborsError);
RISKVO_DECLARE_ERROR(ParseError);
RISKVO_DECLARE_ERROR(ValidationError);
RISKVO_DECLARE_ERROR(IoError);
RISKVO_DECLARE_ERROR(SolverError);

#undef RISKVO_DECLARE_ERROR

} // namespace riskvo

#endif // RISKVO__TYPES_HPP
