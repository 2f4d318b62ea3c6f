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

#ifndef RISKVO__SCENARIO_HPP
#define RISKVO__SCENARIO_HPP

#include <riskvo/baselines.hpp>

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace riskvo {

enum class Method
{
  Primary,
  Vo,
  PbMpc
};

const char* to_string(Method method);

/// Accepts "primary", "vo" and "pbmpc". Throws ValidationError otherwise.
Method parse_method(const std::string& text);

//==============================================================================
struct AgentSpec
{
  Vec4 initial_mean = Vec4::Zero();
  Mat4 P0 = Vec4::Constant(1e-6).asDiagonal();
  Vec2 goal = Vec2::Zero();
  double radius = 0.2;
  double delta = 0.1;
  double epsilon = 0.01;
};

//==============================================================================
/// Everything needed to reproduce a run, with the standard defaults.
struct Scenario
{
  std::string name = "custom";
  std::vector<AgentSpec> agents;
  /// Counterclockwise convex polygons.
  std::vector<std::vector<Vec2>> obstacles;

  double tau_s = 0.05;
  Mat4 W = Vec4(1e-4, 1e-4, 1e-2, 1e-2).asDiagonal();
  Vec4 x_min = Vec4(-kInf, -kInf, -10.0, -10.0);
  Vec4 x_max = Vec4(kInf, kInf, 10.0, 10.0);
  Vec2 u_min = Vec2::Constant(-10.0);
  Vec2 u_max = Vec2::Constant(10.0);
  Mat4 Q = Vec4(10.0, 10.0, 0.1, 0.1).asDiagonal();
  Mat4 Q_N = Vec4(10.0, 10.0, 0.0, 0.0).asDiagonal();
  Mat2 R = Vec2(0.1, 0.1).asDiagonal();

  int horizon = 20;
  double t_run_s = 5.0;
  Method method = Method::Primary;
  std::uint64_t seed = 1;
  int trials = 1;
  /// Multiplies W both in the simulated noise and in the planner model.
  double noise_scale = 1.0;
  double sensing_radius_m = kInf;
  /// See AgentConfig::engage_time_s.
  double engage_time_s = 0.0;
  double big_m = 1e4;
  int max_nodes = 200;
  double goal_tolerance_m = 0.1;

  VoBaselineConfig vo;
  PbMpcConfig pbmpc;

  /// ceil(t_run / tau_s).
  int steps() const;

  /// Model of agent i with the scaled noise.
  AgentModel model_for(int agent) const;

  AgentConfig agent_config(int agent) const;

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

/// Parse the JSON scenario format. Missing fields take their defaults.
/// Throws ParseError with a line/column or field path, then validates.
Scenario parse_scenario(const std::string& text, const std::string& source = "<input>");

/// Throws IoError when the file cannot be read.
Scenario load_scenario(const std::string& path);

nlohmann::json scenario_to_json(const Scenario& scenario);

/// Inverse of scenario_to_json. Throws ParseError naming the field.
Scenario scenario_from_json(const nlohmann::json& j);

//==============================================================================
/// n agents evenly spaced on a circle, each heading to the antipodal point.
Scenario circle_scenario(int n, double circle_radius_m, double agent_radius_m);

/// Built-ins: circle4, circle6, circle20, corridor, and circle<n> for any
/// n >= 2. Throws ValidationError for an unknown name.
Scenario builtin_scenario(const std::string& name);

std::vector<std::string> builtin_names();

/// A built-in when `name_or_path` names one, otherwise a scenario file.
Scenario resolve_scenario(const std::string& name_or_path);

} // namespace riskvo

#endif // RISKVO__SCENARIO_HPP
