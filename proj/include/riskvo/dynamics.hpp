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

#ifndef RISKVO__DYNAMICS_HPP
#define RISKVO__DYNAMICS_HPP

#include <riskvo/types.hpp>

#include <span>

namespace riskvo {

//==============================================================================
/// Planar double integrator with additive Gaussian process noise.
///
/// The state is (p_x, p_y, v_x, v_y) and the input is the acceleration. All
/// members are fixed at construction; use double_integrator() to build one.
class AgentModel
{
public:
  /// Default double integrator: tau_s = 0.05 s, W = diag(1e-4, 1e-4, 1e-2,
  /// 1e-2), |v| <= 10 m/s per axis, |u| <= 10 m/s^2 per axis, r = 0.2 m.
  AgentModel();

  /// Build the model for sampling interval `tau_s`. Throws DomainError when
  /// tau_s <= 0, W is not diagonal/nonnegative, or a bound pair is inverted.
  static AgentModel double_integrator(
    double tau_s,
    const Mat4& W,
    const Vec4& x_min,
    const Vec4& x_max,
    const Vec2& u_min,
    const Vec2& u_max,
    double radius);

  const Mat4& A() const { return _A; }
  const Mat42& B() const { return _B; }
  double tau_s() const { return _tau_s; }
  const Mat4& W() const { return _W; }
  const Vec4& x_min() const { return _x_min; }
  const Vec4& x_max() const { return _x_max; }
  const Vec2& u_min() const { return _u_min; }
  const Vec2& u_max() const { return _u_max; }
  double radius() const { return _radius; }

  /// Same model with the process noise covariance multiplied by `factor`.
  AgentModel with_noise_scale(double factor) const;

  /// Selector for (p_x, p_y).
  static Mat24 Lp();

  /// Selector for (v_x, v_y).
  static Mat24 Lv();

private:
  struct Uninitialized {};
  explicit AgentModel(Uninitialized) {}

  Mat4 _A;
  Mat42 _B;
  double _tau_s = 0.0;
  Mat4 _W;
  Vec4 _x_min;
  Vec4 _x_max;
  Vec2 _u_min;
  Vec2 _u_max;
  double _radius = 0.0;
};

//==============================================================================
struct GaussianBelief
{
  Vec4 mean = Vec4::Zero();
  Mat4 cov = Mat4::Zero();

  /// Throws NonPsdError if cov is asymmetric beyond 1e-9 or has an eigenvalue
  /// below -1e-9.
  void validate() const;
};

/// Returns A x + B u + w.
Vec4 discrete_step(
  const AgentModel& model, const Vec4& x, const Vec2& u, const Vec4& w);

/// Mean after applying `inputs` in order from `x0_mean`, noise-free.
Vec4 propagate_mean(
  const AgentModel& model, const Vec4& x0_mean, std::span<const Vec2> inputs);

/// Closed-form state covariance k steps ahead of P0. Independent of inputs.
Mat4 propagate_covariance(const AgentModel& model, const Mat4& P0, int k);

/// One-step covariance update A S A^T + W, symmetrized.
Mat4 step_covariance(const AgentModel& model, const Mat4& cov);

/// (M + M^T) / 2
Mat4 symmetrize(const Mat4& M);

//==============================================================================
/// Stacked prediction map for k = 1..N: x_k = Phi_k x0 + Gamma_k u where u
/// stacks u_0..u_{N-1}. Rows [4(k-1), 4k) of phi/gamma belong to step k.
struct PredictionMatrices
{
  int horizon = 0;
  MatX phi;   // 4N x 4
  MatX gamma; // 4N x 2N

  auto phi_block(int k) const { return phi.middleRows(4*(k-1), 4); }
  auto gamma_block(int k) const { return gamma.middleRows(4*(k-1), 4); }
};

PredictionMatrices prediction_matrices(const AgentModel& model, int horizon);

} // namespace riskvo

#endif // RISKVO__DYNAMICS_HPP
