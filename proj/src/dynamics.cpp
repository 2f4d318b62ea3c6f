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

#include <riskvo/dynamics.hpp>

#include <Eigen/Eigenvalues>

namespace riskvo {

//==============================================================================
AgentModel::AgentModel()
{
  *this = double_integrator(
    0.05,
    Vec4(1e-4, 1e-4, 1e-2, 1e-2).asDiagonal(),
    Vec4(-kInf, -kInf, -10.0, -10.0),
    Vec4(kInf, kInf, 10.0, 10.0),
    Vec2(-10.0, -10.0),
    Vec2(10.0, 10.0),
    0.2);
}

//==============================================================================
AgentModel AgentModel::double_integrator(
  const double tau_s,
  const Mat4& W,
  const Vec4& x_min,
  const Vec4& x_max,
  const Vec2& u_min,
  const Vec2& u_max,
  const double radius)
{
  if (!(tau_s > 0.0))
    throw DomainError("sampling interval must be positive");

  for (int r = 0; r < 4; ++r)
  {
    for (int c = 0; c < 4; ++c)
    {
      if (r != c && W(r, c) != 0.0)
        throw DomainError("process noise covariance must be diagonal");
    }
    if (W(r, r) < 0.0)
      throw DomainError("process noise variances must be nonnegative");
    if (!(x_min[r] < x_max[r]))
      throw DomainError("state bounds must satisfy x_min < x_max");
  }

  for (int r = 0; r < 2; ++r)
  {
    if (!(u_min[r] < u_max[r]))
      throw DomainError("input bounds must satisfy u_min < u_max");
  }

  if (radius < 0.0)
    throw DomainError("agent radius must be nonnegative");

  AgentModel model{Uninitialized{}};
  model._tau_s = tau_s;
  model._A = Mat4::Identity();
  model._A(0, 2) = tau_s;
  model._A(1, 3) = tau_s;

  model._B.setZero();
  model._B(0, 0) = 0.5*tau_s*tau_s;
  model._B(1, 1) = 0.5*tau_s*tau_s;
  model._B(2, 0) = tau_s;
  model._B(3, 1) = tau_s;

  model._W = W;
  model._x_min = x_min;
  model._x_max = x_max;
  model._u_min = u_min;
  model._u_max = u_max;
  model._radius = radius;
  return model;
}

//==============================================================================
AgentModel AgentModel::with_noise_scale(const double factor) const
{
  if (factor < 0.0)
    throw DomainError("noise scale must be nonnegative");

  AgentModel scaled = *this;
  scaled._W = factor*_W;
  return scaled;
}

//==============================================================================
Mat24 AgentModel::Lp()
{
  Mat24 L = Mat24::Zero();
  L(0, 0) = 1.0;
  L(1, 1) = 1.0;
  return L;
}

//==============================================================================
Mat24 AgentModel::Lv()
{
  Mat24 L = Mat24::Zero();
  L(0, 2) = 1.0;
  L(1, 3) = 1.0;
  return L;
}

//==============================================================================
void GaussianBelief::validate() const
{
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9)
    throw NonPsdError("belief covariance is not symmetric");

  const Eigen::SelfAdjointEigenSolver<Mat4> eig(symmetrize(cov));
  if (eig.eigenvalues().minCoeff() < -1e-9)
    throw NonPsdError("belief covariance is not positive semidefinite");
}

//==============================================================================
Vec4 discrete_step(
  const AgentModel& model, const Vec4& x, const Vec2& u, const Vec4& w)
{
  return model.A()*x + model.B()*u + w;
}

//==============================================================================
Vec4 propagate_mean(
  const AgentModel& model, const Vec4& x0_mean, std::span<const Vec2> inputs)
{
  const int k = static_cast<int>(inputs.size());

  // sum_{l<k} A^{k-l-1} B u_l + A^k x0, accumulated from the newest input back.
  Vec4 result = Vec4::Zero();
  Mat4 A_pow = Mat4::Identity();
  for (int l = k - 1; l >= 0; --l)
  {
    result += A_pow*model.B()*inputs[l];
    A_pow = A_pow*model.A();
  }
  result += A_pow*x0_mean;
  return result;
}

//==============================================================================
Mat4 symmetrize(const Mat4& M)
{
  return 0.5*(M + M.transpose());
}

//==============================================================================
Mat4 propagate_covariance(const AgentModel& model, const Mat4& P0, const int k)
{
  if (k < 0)
    throw DomainError("propagation step count must be nonnegative");

  const Mat4& A = model.A();
  Mat4 sum = Mat4::Zero();
  Mat4 A_pow = Mat4::Identity();
  for (int l = 0; l < k; ++l)
  {
    sum += symmetrize(A_pow*model.W()*A_pow.transpose());
    A_pow = A_pow*A;
  }
  sum += symmetrize(A_pow*P0*A_pow.transpose());
  return symmetrize(sum);
}

//==============================================================================
Mat4 step_covariance(const AgentModel& model, const Mat4& cov)
{
  return symmetrize(model.A()*cov*model.A().transpose() + model.W());
}

//==============================================================================
PredictionMatrices prediction_matrices(const AgentModel& model, const int horizon)
{
  if (horizon < 1)
    throw DomainError("prediction horizon must be at least 1");

  PredictionMatrices out;
  out.horizon = horizon;
  out.phi = MatX::Zero(4*horizon, 4);
  out.gamma = MatX::Zero(4*horizon, 2*horizon);

  Mat4 A_pow = Mat4::Identity();
  for (int k = 1; k <= horizon; ++k)
  {
    A_pow = A_pow*model.A();
    out.phi.middleRows(4*(k-1), 4) = A_pow;

    // x_k = A x_{k-1} + B u_{k-1}
    if (k > 1)
    {
      out.gamma.block(4*(k-1), 0, 4, 2*(k-1)) =
        model.A()*out.gamma.block(4*(k-2), 0, 4, 2*(k-1));
    }
    out.gamma.block(4*(k-1), 2*(k-1), 4, 2) = model.B();
  }

  return out;
}

} // namespace riskvo
