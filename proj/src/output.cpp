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

#include <riskvo/output.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace riskvo {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt(const char* format, double value)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, value);
  return buf;
}

std::string num(double value)
{
  return fmt("%.12g", value);
}

void ensure_dir(const std::string& dir)
{
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw IoError("cannot create directory '" + dir + "'");
}

const char* kPalette[] = {
  "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
};

} // namespace

//==============================================================================
std::string read_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot read '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

//==============================================================================
void write_file(const std::string& path, const std::string& content)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot write '" + path + "'");
  out << content;
  if (!out)
    throw IoError("write to '" + path + "' failed");
}

//==============================================================================
const char* trajectory_header()
{
  return "step,t,x,y,vx,vy,ax,ay,solve_ms,fallback";
}

//==============================================================================
std::string trajectory_csv(const TrajectoryLog& log, const int agent)
{
  std::string out = trajectory_header();
  out += '\n';
  for (int s = 0; s < log.step_count(); ++s)
  {
    const auto& r = log.records[s].at(agent);
    out += std::to_string(s);
    out += ',' + num(s*log.tau_s);
    for (int c = 0; c < 4; ++c)
      out += ',' + num(r.state[c]);
    out += ',' + num(r.input.x());
    out += ',' + num(r.input.y());
    out += ',' + fmt("%.6f", r.solve_ms);
    out += r.fallback ? ",1\n" : ",0\n";
  }

  // Terminal row: the state after the last step, no input applied.
  const int s = log.step_count();
  const Vec4 x = log.state(s, agent);
  out += std::to_string(s);
  out += ',' + num(s*log.tau_s);
  for (int c = 0; c < 4; ++c)
    out += ',' + num(x[c]);
  out += ",0,0,0.000000,0\n";
  return out;
}

//==============================================================================
json manifest_to_json(const Manifest& m)
{
  return json{
    {"scenario", scenario_to_json(m.scenario)},
    {"trial", m.trial},
    {"record_timing", m.record_timing},
  };
}

//==============================================================================
Manifest manifest_from_json(const json& j)
{
  if (!j.is_object() || !j.contains("scenario"))
    throw ParseError("manifest: missing field scenario");
  Manifest m;
  m.scenario = scenario_from_json(j.at("scenario"));
  m.scenario.validate();
  if (!j.contains("trial") || !j.at("trial").is_number_integer())
    throw ParseError("manifest: missing integer trial");
  m.trial = j.at("trial").get<int>();
  if (j.contains("record_timing"))
  {
    if (!j.at("record_timing").is_boolean())
      throw ParseError("manifest: record_timing must be a boolean");
    m.record_timing = j.at("record_timing").get<bool>();
  }
  return m;
}

//==============================================================================
void export_trial(
  const Manifest& manifest, const TrialResult& result, const std::string& out_dir)
{
  ensure_dir(out_dir);
  const fs::path dir(out_dir);
  for (int i = 0; i < result.log.agent_count(); ++i)
  {
    write_file((dir/("agent_" + std::to_string(i) + ".csv")).string(),
      trajectory_csv(result.log, i));
  }
  write_file((dir/"metrics.json").string(),
    metrics_to_json(result.metrics).dump(2) + "\n");
  write_file((dir/"manifest.json").string(),
    manifest_to_json(manifest).dump(2) + "\n");
}

//==============================================================================
Manifest load_manifest(const std::string& path)
{
  const std::string text = read_file(path);
  json j;
  try
  {
    j = json::parse(text);
  }
  catch (const json::parse_error&)
  {
    throw ParseError(path + ": malformed manifest");
  }
  return manifest_from_json(j);
}

//==============================================================================
Metrics load_metrics(const std::string& path)
{
  const std::string text = read_file(path);
  json j;
  try
  {
    j = json::parse(text);
  }
  catch (const json::parse_error&)
  {
    throw ParseError(path + ": malformed metrics file");
  }
  return metrics_from_json(j);
}

//==============================================================================
TrialResult replay(const Manifest& manifest)
{
  SimulationOptions options;
  options.record_timing = manifest.record_timing;
  return run_trial(manifest.scenario, manifest.trial, options);
}

//==============================================================================
TrajectoryLog load_log(const std::string& dir)
{
  const Manifest manifest = load_manifest((fs::path(dir)/"manifest.json").string());
  const auto& s = manifest.scenario;

  TrajectoryLog log;
  log.tau_s = s.tau_s;
  log.obstacles = s.obstacles;
  for (const auto& a : s.agents)
  {
    log.radii.push_back(a.radius);
    log.goals.push_back(a.goal);
  }

  const int n = log.agent_count();
  for (int i = 0; i < n; ++i)
  {
    const std::string path = (fs::path(dir)/("agent_" + std::to_string(i) + ".csv")).string();
    std::istringstream in(read_file(path));
    std::string line;
    std::getline(in, line);
    if (line != trajectory_header())
      throw ParseError(path + ":1: unexpected header");

    int row = 0;
    while (std::getline(in, line))
    {
      if (line.empty())
        continue;
      std::vector<double> cells;
      std::stringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ','))
      {
        try
        {
          cells.push_back(std::stod(cell));
        }
        catch (const std::exception&)
        {
          throw ParseError(path + ":" + std::to_string(row + 2) + ": bad number");
        }
      }
      if (cells.size() != 10)
        throw ParseError(path + ":" + std::to_string(row + 2) + ": expected 10 columns");

      if (static_cast<int>(log.records.size()) <= row)
        log.records.emplace_back(n);
      auto& r = log.records[row][i];
      r.state << cells[2], cells[3], cells[4], cells[5];
      r.input << cells[6], cells[7];
      r.solve_ms = cells[8];
      r.fallback = cells[9] != 0.0;
      ++row;
    }
  }

  if (log.records.empty())
    throw ParseError(dir + ": trajectory tables have no rows");
  log.final_states.resize(n, Vec4::Zero());
  for (int i = 0; i < n; ++i)
    log.final_states[i] = log.records.back()[i].state;
  log.records.pop_back();
  return log;
}

//==============================================================================
std::vector<std::string> render_frames(
  const TrajectoryLog& log,
  const std::vector<double>& timestamps,
  const std::string& out_dir)
{
  std::vector<std::string> written;
  if (timestamps.empty())
    return written;

  std::vector<int> steps;
  for (double t : timestamps)
  {
    const int s = static_cast<int>(std::lround(t/log.tau_s));
    if (!std::isfinite(t) || s < 0 || s > log.step_count())
      throw DomainError("timestamp " + num(t) + " s is outside the log");
    steps.push_back(s);
  }
  ensure_dir(out_dir);

  // Bounding box over everything that is drawn.
  Vec2 lo = Vec2::Constant(kInf);
  Vec2 hi = Vec2::Constant(-kInf);
  auto grow = [&](const Vec2& p, double pad)
  {
    lo = lo.cwiseMin(p - Vec2::Constant(pad));
    hi = hi.cwiseMax(p + Vec2::Constant(pad));
  };
  for (int s = 0; s <= log.step_count(); ++s)
  {
    for (int i = 0; i < log.agent_count(); ++i)
      grow(log.state(s, i).head<2>(), log.radii[i]);
  }
  for (int i = 0; i < log.agent_count(); ++i)
    grow(log.goals[i], log.radii[i]);
  for (const auto& o : log.obstacles)
  {
    for (const auto& v : o)
      grow(v, 0.0);
  }
  lo -= Vec2::Constant(0.5);
  hi += Vec2::Constant(0.5);

  const double width_px = 800.0;
  const double scale = width_px/std::max(hi.x() - lo.x(), 1e-9);
  const double height_px = std::max(1.0, (hi.y() - lo.y())*scale);
  auto px = [&](const Vec2& p)
  {
    return num((p.x() - lo.x())*scale) + "," + num((hi.y() - p.y())*scale);
  };

  for (std::size_t f = 0; f < steps.size(); ++f)
  {
    const int step = steps[f];
    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width_px)
      + "\" height=\"" + num(height_px) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (const auto& o : log.obstacles)
    {
      svg += "<polygon fill=\"#555555\" points=\"";
      for (const auto& v : o)
        svg += px(v) + " ";
      svg += "\"/>\n";
    }

    for (int i = 0; i < log.agent_count(); ++i)
    {
      const char* color = kPalette[i % 10];
      const double r = log.radii[i]*scale;
      svg += "<circle cx=\"" + num((log.goals[i].x() - lo.x())*scale)
        + "\" cy=\"" + num((hi.y() - log.goals[i].y())*scale) + "\" r=\""
        + num(r) + "\" fill=\"none\" stroke=\"" + color
        + "\" stroke-dasharray=\"3,2\"/>\n";

      svg += "<polyline fill=\"none\" stroke=\"" + std::string(color)
        + "\" stroke-width=\"1.5\" points=\"";
      for (int s = 0; s <= step; ++s)
        svg += px(log.state(s, i).head<2>()) + " ";
      svg += "\"/>\n";

      const Vec2 p = log.state(step, i).head<2>();
      svg += "<circle cx=\"" + num((p.x() - lo.x())*scale) + "\" cy=\""
        + num((hi.y() - p.y())*scale) + "\" r=\"" + num(r) + "\" fill=\""
        + color + "\"/>\n";
    }

    svg += "<text x=\"10\" y=\"20\" font-family=\"monospace\" font-size=\"14\">t = "
      + fmt("%.2f", step*log.tau_s) + " s</text>\n";
    svg += "</svg>\n";

    char name[64];
    std::snprintf(name, sizeof(name), "frame_%03d_step%05d.svg",
      static_cast<int>(f), step);
    const std::string path = (fs::path(out_dir)/name).string();
    write_file(path, svg);
    written.push_back(path);
  }
  return written;
}

} // namespace riskvo
