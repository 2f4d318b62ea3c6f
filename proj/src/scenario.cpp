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

#include <riskvo/scenario.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace riskvo {

using nlohmann::json;

//==============================================================================
const char* to_string(const Method method)
{
  switch (method)
  {
    case Method::Primary: return "primary";
    case Method::Vo: return "vo";
    case Method::PbMpc: return "pbmpc";
  }
  return "unknown";
}

//==============================================================================
Method parse_method(const std::string& text)
{
  if (text == "primary")
    return Method::Primary;
  if (text == "vo")
    return Method::Vo;
  if (text == "pbmpc")
    return Method::PbMpc;
  throw ValidationError("unknown method '" + text + "' (primary, vo, pbmpc)");
}

//==============================================================================
int Scenario::steps() const
{
  const double ratio = t_run_s/tau_s;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) < 1e-9*std::max(1.0, nearest))
    return static_cast<int>(nearest);
  return static_cast<int>(std::ceil(ratio));
}

//==============================================================================
AgentModel Scenario::model_for(const int agent) const
{
  return AgentModel::double_integrator(
    tau_s, noise_scale*W, x_min, x_max, u_min, u_max,
    agents.at(agent).radius);
}

//==============================================================================
AgentConfig Scenario::agent_config(const int agent) const
{
  const auto& spec = agents.at(agent);
  AgentConfig c;
  c.model = model_for(agent);
  c.Q = Q;
  c.R = R;
  c.Q_N = Q_N;
  c.x_ref << spec.goal, 0.0, 0.0;
  c.delta = spec.delta;
  c.epsilon = spec.epsilon;
  c.horizon = horizon;
  c.P0 = spec.P0;
  c.sensing_radius = sensing_radius_m;
  c.engage_time_s = engage_time_s;
  c.big_m = big_m;
  c.max_nodes = max_nodes;
  return c;
}

//==============================================================================
void Scenario::validate() const
{
  auto fail = [](const std::string& field, const std::string& what)
  {
    throw ValidationError(field + ": " + what);
  };

  if (agents.empty())
    fail("agents", "at least one agent is required");
  if (!(tau_s > 0.0))
    fail("tau_s", "must be positive");
  if (!(t_run_s > 0.0))
    fail("t_run_s", "must be positive");
  if (horizon < 1)
    fail("horizon", "must be at least 1");
  if (trials < 1)
    fail("trials", "must be at least 1");
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale))
    fail("noise_scale", "must be finite and nonnegative");
  if (!(sensing_radius_m > 0.0))
    fail("sensing_radius_m", "must be positive");
  if (!(engage_time_s >= 0.0))
    fail("engage_time_s", "must be nonnegative");
  if (!(big_m > 0.0))
    fail("big_m", "must be positive");
  if (max_nodes < 1)
    fail("max_nodes", "must be at least 1");
  if (!(goal_tolerance_m > 0.0))
    fail("goal_tolerance_m", "must be positive");

  try
  {
    (void)AgentModel::double_integrator(
      tau_s, noise_scale*W, x_min, x_max, u_min, u_max, 1.0);
  }
  catch (const Error& e)
  {
    fail("model", e.what());
  }

  for (std::size_t i = 0; i < agents.size(); ++i)
  {
    const auto& a = agents[i];
    const std::string field = "agents[" + std::to_string(i) + "]";
    if (!(a.radius > 0.0))
      fail(field + ".radius_m", "must be positive");
    if (!(a.delta > 0.0 && a.delta <= 0.5))
      fail(field + ".delta", "must lie in (0, 0.5]");
    if (!(a.epsilon > 0.0 && a.epsilon <= 0.5))
      fail(field + ".epsilon", "must lie in (0, 0.5]");
    if (!a.initial_mean.allFinite() || !a.goal.allFinite())
      fail(field, "initial mean and goal must be finite");
    try
    {
      GaussianBelief{a.initial_mean, a.P0}.validate();
    }
    catch (const Error& e)
    {
      fail(field + ".P0", e.what());
    }

    for (std::size_t j = 0; j < i; ++j)
    {
      const double d =
        (a.initial_mean.head<2>() - agents[j].initial_mean.head<2>()).norm();
      if (d <= a.radius + agents[j].radius)
      {
        fail(field, "initial disc overlaps agent " + std::to_string(j));
      }
    }
  }

  try
  {
    AgentConfig probe = agent_config(0);
    probe.validate();
  }
  catch (const Error& e)
  {
    fail("weights", e.what());
  }

  for (std::size_t o = 0; o < obstacles.size(); ++o)
  {
    const std::string field = "obstacles[" + std::to_string(o) + "]";
    PolygonObstacle poly;
    try
    {
      poly = polygon_to_halfspaces(obstacles[o]);
    }
    catch (const Error& e)
    {
      fail(field, e.what());
    }
    for (std::size_t i = 0; i < agents.size(); ++i)
    {
      if (poly.distance(agents[i].initial_mean.head<2>()) <= agents[i].radius)
        fail(field, "overlaps the start of agent " + std::to_string(i));
    }
  }

  try
  {
    vo.validate();
    pbmpc.validate();
  }
  catch (const Error& e)
  {
    fail("baselines", e.what());
  }
}

namespace {

//==============================================================================
// Field-path aware reader over a JSON object.
class Reader
{
public:
  Reader(const json& j, std::string path)
  : _j(j), _path(std::move(path))
  {
    if (!_j.is_object())
      throw ParseError(_path + ": expected an object");
  }

  bool has(const char* key) const { return _j.contains(key); }

  std::string field(const std::string& key) const
  {
    return _path.empty() ? key : _path + "." + key;
  }

  const json& at(const char* key) const
  {
    _seen.insert(key);
    return _j.at(key);
  }

  static double number(const json& v, const std::string& where)
  {
    if (v.is_number())
      return v.get<double>();
    if (v.is_string())
    {
      const auto s = v.get<std::string>();
      if (s == "inf" || s == "+inf")
        return kInf;
      if (s == "-inf")
        return -kInf;
    }
    throw ParseError(where + ": expected a number");
  }

  void get(const char* key, double& out) const
  {
    if (has(key))
      out = number(at(key), field(key));
  }

  void get(const char* key, int& out) const
  {
    if (!has(key))
      return;
    const auto& v = at(key);
    if (!v.is_number_integer())
      throw ParseError(field(key) + ": expected an integer");
    out = v.get<int>();
  }

  void get(const char* key, std::uint64_t& out) const
  {
    if (!has(key))
      return;
    const auto& v = at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned()
      && v.get<std::int64_t>() < 0))
    {
      throw ParseError(field(key) + ": expected a nonnegative integer");
    }
    out = v.get<std::uint64_t>();
  }

  void get(const char* key, std::string& out) const
  {
    if (!has(key))
      return;
    const auto& v = at(key);
    if (!v.is_string())
      throw ParseError(field(key) + ": expected a string");
    out = v.get<std::string>();
  }

  template<int Size>
  void get(const char* key, Eigen::Matrix<double, Size, 1>& out) const
  {
    if (!has(key))
      return;
    out = vector<Size>(at(key), field(key));
  }

  template<int Size>
  static Eigen::Matrix<double, Size, 1> vector(const json& v, const std::string& where)
  {
    if (!v.is_array() || v.size() != Size)
    {
      throw ParseError(
        where + ": expected an array of " + std::to_string(Size) + " numbers");
    }
    Eigen::Matrix<double, Size, 1> out;
    for (int i = 0; i < Size; ++i)
      out[i] = number(v[i], where + "[" + std::to_string(i) + "]");
    return out;
  }

  /// Either the diagonal as a flat array or the full matrix as rows.
  template<int Size>
  void get(const char* key, Eigen::Matrix<double, Size, Size>& out) const
  {
    if (!has(key))
      return;
    const auto& v = at(key);
    const std::string where = field(key);
    if (v.is_array() && v.size() == Size && !v.empty() && v[0].is_array())
    {
      for (int r = 0; r < Size; ++r)
      {
        out.row(r) = vector<Size>(
          v[r], where + "[" + std::to_string(r) + "]").transpose();
      }
      return;
    }
    out = vector<Size>(v, where).asDiagonal();
  }

  void finish() const
  {
    for (auto it = _j.begin(); it != _j.end(); ++it)
    {
      if (!_seen.count(it.key()))
        throw ParseError(field(it.key()) + ": unknown field");
    }
  }

private:
  const json& _j;
  std::string _path;
  mutable std::set<std::string> _seen;
};

//==============================================================================
json number_json(double v)
{
  if (std::isinf(v))
    return v > 0.0 ? json("inf") : json("-inf");
  return json(v);
}

template<typename Derived>
json vector_json(const Eigen::MatrixBase<Derived>& v)
{
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out.push_back(number_json(v(i)));
  return out;
}

template<typename Derived>
json matrix_json(const Eigen::MatrixBase<Derived>& m)
{
  const bool diagonal =
    (m - Eigen::MatrixXd(m.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
  if (diagonal)
    return vector_json(m.diagonal());

  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    out.push_back(vector_json(m.row(r).transpose()));
  return out;
}

//==============================================================================
std::pair<int, int> line_column(const std::string& text, std::size_t byte)
{
  int line = 1;
  int col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
  {
    if (text[i] == '\n')
    {
      ++line;
      col = 1;
    }
    else
    {
      ++col;
    }
  }
  return {line, col};
}

} // namespace

//==============================================================================
json scenario_to_json(const Scenario& s)
{
  json j;
  j["name"] = s.name;
  j["method"] = to_string(s.method);
  j["seed"] = s.seed;
  j["trials"] = s.trials;
  j["horizon"] = s.horizon;
  j["tau_s"] = s.tau_s;
  j["t_run_s"] = s.t_run_s;
  j["noise_scale"] = s.noise_scale;
  j["sensing_radius_m"] = number_json(s.sensing_radius_m);
  j["engage_time_s"] = s.engage_time_s;
  j["big_m"] = s.big_m;
  j["max_nodes"] = s.max_nodes;
  j["goal_tolerance_m"] = s.goal_tolerance_m;

  j["model"] = {
    {"W", matrix_json(s.W)},
    {"x_min", vector_json(s.x_min)},
    {"x_max", vector_json(s.x_max)},
    {"u_min", vector_json(s.u_min)},
    {"u_max", vector_json(s.u_max)},
  };
  j["weights"] = {
    {"Q", matrix_json(s.Q)},
    {"Q_N", matrix_json(s.Q_N)},
    {"R", matrix_json(s.R)},
  };

  json agents = json::array();
  for (const auto& a : s.agents)
  {
    agents.push_back({
      {"initial_mean", vector_json(a.initial_mean)},
      {"P0", matrix_json(a.P0)},
      {"goal_m", vector_json(a.goal)},
      {"radius_m", a.radius},
      {"delta", a.delta},
      {"epsilon", a.epsilon},
    });
  }
  j["agents"] = agents;

  json obstacles = json::array();
  for (const auto& poly : s.obstacles)
  {
    json vertices = json::array();
    for (const auto& v : poly)
      vertices.push_back(vector_json(v));
    obstacles.push_back({{"vertices_m", vertices}});
  }
  j["obstacles"] = obstacles;

  j["vo"] = {
    {"preferred_speed_mps", s.vo.preferred_speed},
    {"resolution_mps", s.vo.resolution},
  };
  j["pbmpc"] = {
    {"d_safe_m", s.pbmpc.d_safe},
    {"trust_radius_m", s.pbmpc.trust_radius},
  };
  return j;
}

//==============================================================================
Scenario scenario_from_json(const json& j)
{
  Scenario s;
  const Reader root(j, "");
  root.get("name", s.name);
  std::string method = to_string(s.method);
  root.get("method", method);
  try
  {
    s.method = parse_method(method);
  }
  catch (const ValidationError& e)
  {
    throw ParseError(std::string("method: ") + e.what());
  }
  root.get("seed", s.seed);
  root.get("trials", s.trials);
  root.get("horizon", s.horizon);
  root.get("tau_s", s.tau_s);
  root.get("t_run_s", s.t_run_s);
  root.get("noise_scale", s.noise_scale);
  root.get("sensing_radius_m", s.sensing_radius_m);
  root.get("engage_time_s", s.engage_time_s);
  root.get("big_m", s.big_m);
  root.get("max_nodes", s.max_nodes);
  root.get("goal_tolerance_m", s.goal_tolerance_m);

  if (root.has("model"))
  {
    const Reader r(root.at("model"), "model");
    r.get("W", s.W);
    r.get("x_min", s.x_min);
    r.get("x_max", s.x_max);
    r.get("u_min", s.u_min);
    r.get("u_max", s.u_max);
    r.finish();
  }
  s.vo.v_min = s.x_min.tail<2>();
  s.vo.v_max = s.x_max.tail<2>();
  s.vo.tau_s = s.tau_s;

  if (root.has("weights"))
  {
    const Reader r(root.at("weights"), "weights");
    r.get("Q", s.Q);
    r.get("Q_N", s.Q_N);
    r.get("R", s.R);
    r.finish();
  }

  if (root.has("agents"))
  {
    const auto& arr = root.at("agents");
    if (!arr.is_array())
      throw ParseError("agents: expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i)
    {
      const Reader r(arr[i], "agents[" + std::to_string(i) + "]");
      AgentSpec a;
      r.get("initial_mean", a.initial_mean);
      r.get("P0", a.P0);
      r.get("goal_m", a.goal);
      r.get("radius_m", a.radius);
      r.get("delta", a.delta);
      r.get("epsilon", a.epsilon);
      r.finish();
      s.agents.push_back(a);
    }
  }

  if (root.has("obstacles"))
  {
    const auto& arr = root.at("obstacles");
    if (!arr.is_array())
      throw ParseError("obstacles: expected an array");
    for (std::size_t o = 0; o < arr.size(); ++o)
    {
      const std::string path = "obstacles[" + std::to_string(o) + "]";
      const Reader r(arr[o], path);
      if (!r.has("vertices_m") || !r.at("vertices_m").is_array())
        throw ParseError(path + ".vertices_m: expected an array of points");
      std::vector<Vec2> poly;
      const auto& verts = r.at("vertices_m");
      for (std::size_t v = 0; v < verts.size(); ++v)
      {
        poly.push_back(Reader::vector<2>(
          verts[v], path + ".vertices_m[" + std::to_string(v) + "]"));
      }
      r.finish();
      s.obstacles.push_back(std::move(poly));
    }
  }

  if (root.has("vo"))
  {
    const Reader r(root.at("vo"), "vo");
    r.get("preferred_speed_mps", s.vo.preferred_speed);
    r.get("resolution_mps", s.vo.resolution);
    r.finish();
  }
  if (root.has("pbmpc"))
  {
    const Reader r(root.at("pbmpc"), "pbmpc");
    r.get("d_safe_m", s.pbmpc.d_safe);
    r.get("trust_radius_m", s.pbmpc.trust_radius);
    r.finish();
  }
  root.finish();
  return s;
}

//==============================================================================
Scenario parse_scenario(const std::string& text, const std::string& source)
{
  json j;
  try
  {
    j = json::parse(text);
  }
  catch (const json::parse_error& e)
  {
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError(
      source + ":" + std::to_string(line) + ":" + std::to_string(col)
      + ": malformed scenario file");
  }

  Scenario s;
  try
  {
    s = scenario_from_json(j);
  }
  catch (const ParseError& e)
  {
    throw ParseError(source + ": " + e.what());
  }
  catch (const json::exception& e)
  {
    throw ParseError(source + ": " + e.what());
  }
  s.validate();
  return s;
}

//==============================================================================
Scenario load_scenario(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot read scenario file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str(), path);
}

//==============================================================================
Scenario circle_scenario(
  const int n, const double circle_radius_m, const double agent_radius_m)
{
  if (n < 1)
    throw ValidationError("circle scenario needs at least one agent");

  Scenario s;
  s.name = "circle" + std::to_string(n);
  for (int i = 0; i < n; ++i)
  {
    const double angle = 2.0*std::numbers::pi*i/n;
    const Vec2 p = circle_radius_m*Vec2(std::cos(angle), std::sin(angle));
    AgentSpec a;
    a.initial_mean << p, 0.0, 0.0;
    a.goal = -p;
    a.radius = agent_radius_m;
    s.agents.push_back(a);
  }
  return s;
}

//==============================================================================
Scenario builtin_scenario(const std::string& name)
{
  if (name == "circle20")
  {
    Scenario s = circle_scenario(20, 10.0, 0.1);
    s.horizon = 25;
    s.t_run_s = 12.5;
    s.engage_time_s = s.horizon*s.tau_s;
    return s;
  }
  if (name == "circle4" || name == "circle6")
  {
    Scenario s = circle_scenario(name == "circle4" ? 4 : 6, 4.0, 0.2);
    s.horizon = 20;
    s.engage_time_s = s.horizon*s.tau_s;
    return s;
  }
  if (name == "corridor")
  {
    Scenario s;
    s.name = name;
    AgentSpec a;
    a.initial_mean = Vec4::Zero();
    a.goal = Vec2(0.0, 10.0);
    a.epsilon = 0.01;
    s.agents.push_back(a);
    s.obstacles.push_back({{-4.0, 4.0}, {0.0, 4.0}, {0.0, 6.0}, {-4.0, 6.0}});
    s.obstacles.push_back({{2.0, 4.0}, {6.0, 4.0}, {6.0, 6.0}, {2.0, 6.0}});
    s.horizon = 20;
    return s;
  }
  if (name.rfind("circle", 0) == 0 && name.size() > 6)
  {
    const std::string digits = name.substr(6);
    if (digits.find_first_not_of("0123456789") == std::string::npos)
    {
      const int n = std::stoi(digits);
      if (n >= 2 && n <= 64)
      {
        Scenario s = circle_scenario(n, n <= 6 ? 4.0 : 10.0, n <= 6 ? 0.2 : 0.1);
        s.horizon = 10;
        s.engage_time_s = 1.0;
        return s;
      }
    }
  }
  throw ValidationError("unknown built-in scenario '" + name + "'");
}

//==============================================================================
std::vector<std::string> builtin_names()
{
  return {"circle4", "circle6", "circle20", "corridor", "circle<n>"};
}

//==============================================================================
Scenario resolve_scenario(const std::string& name_or_path)
{
  try
  {
    Scenario s = builtin_scenario(name_or_path);
    s.validate();
    return s;
  }
  catch (const ValidationError&)
  {
    std::ifstream probe(name_or_path);
    if (!probe)
      throw;
  }
  return load_scenario(name_or_path);
}

} // namespace riskvo
