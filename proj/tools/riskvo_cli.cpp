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

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

using namespace riskvo;

namespace {

struct Overrides
{
  std::string scenario;
  std::optional<std::string> method;
  std::optional<int> horizon;
  std::optional<double> delta;
  std::optional<double> epsilon;
  std::optional<double> noise_scale;
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  std::optional<double> sensing_radius;
  std::optional<double> engage_time;
  std::optional<int> max_nodes;
  std::optional<double> t_run;
  int threads = 1;
  bool no_timing = false;
};

void add_overrides(CLI::App* app, Overrides& o)
{
  app->add_option("--method", o.method, "primary, vo or pbmpc");
  app->add_option("--horizon", o.horizon, "Prediction horizon N");
  app->add_option("--delta", o.delta, "Per-agent velocity-obstacle risk bound");
  app->add_option("--epsilon", o.epsilon, "Per-agent static-obstacle risk bound");
  app->add_option("--noise-scale", o.noise_scale, "Multiplier on W (e.g. 0.25, 1, 4)");
  app->add_option("--trials", o.trials, "Number of seeded trials");
  app->add_option("--seed", o.seed, "Base seed");
  app->add_option("--sensing-radius", o.sensing_radius, "Neighbor cutoff in meters");
  app->add_option("--engage-time", o.engage_time,
    "Collision look-ahead in seconds for engaging a neighbor (0 = all)");
  app->add_option("--max-nodes", o.max_nodes, "Branch-and-bound node budget");
  app->add_option("--t-run", o.t_run, "Run duration in seconds");
  app->add_option("--threads", o.threads, "Worker threads for trials")
    ->check(CLI::PositiveNumber);
  app->add_flag("--no-timing", o.no_timing,
    "Record zero solve times so outputs are byte-reproducible");
}

Scenario apply(const Overrides& o)
{
  Scenario s = resolve_scenario(o.scenario);
  if (o.method)
    s.method = parse_method(*o.method);
  if (o.horizon)
    s.horizon = *o.horizon;
  for (auto& a : s.agents)
  {
    if (o.delta)
      a.delta = *o.delta;
    if (o.epsilon)
      a.epsilon = *o.epsilon;
  }
  if (o.noise_scale)
    s.noise_scale = *o.noise_scale;
  if (o.trials)
    s.trials = *o.trials;
  if (o.seed)
    s.seed = *o.seed;
  if (o.sensing_radius)
    s.sensing_radius_m = *o.sensing_radius;
  if (o.engage_time)
    s.engage_time_s = *o.engage_time;
  if (o.max_nodes)
    s.max_nodes = *o.max_nodes;
  if (o.t_run)
    s.t_run_s = *o.t_run;
  s.validate();
  return s;
}

SimulationOptions options_of(const Overrides& o)
{
  SimulationOptions opt;
  opt.threads = o.threads;
  opt.record_timing = !o.no_timing;
  return opt;
}

std::string trial_dir(const std::string& out, int trial)
{
  char name[32];
  std::snprintf(name, sizeof(name), "trial_%03d", trial);
  return (std::filesystem::path(out)/name).string();
}

int run_plan(const Overrides& o, const std::string& out, const std::string& manifest_path)
{
  std::vector<TrialResult> results;
  Scenario scenario;
  SimulationOptions opt = options_of(o);
  if (!manifest_path.empty())
  {
    const Manifest m = load_manifest(manifest_path);
    scenario = m.scenario;
    opt.record_timing = m.record_timing;
    results.push_back(replay(m));
  }
  else
  {
    scenario = apply(o);
    results = run_trials(scenario, opt);
  }

  const TrialSummary summary = summarize(results);
  nlohmann::json report = summary_to_json(summary);
  report["scenario"] = scenario.name;
  report["method"] = to_string(scenario.method);

  if (!out.empty())
  {
    for (const auto& r : results)
    {
      Manifest m{scenario, r.trial, opt.record_timing};
      export_trial(m, r, trial_dir(out, r.trial));
    }
    write_file((std::filesystem::path(out)/"summary.json").string(),
      report.dump(2) + "\n");
  }

  std::cout << report.dump(2) << std::endl;
  return summary.hard_failures > 0 ? 3 : 0;
}

int run_sweep(
  const Overrides& o,
  const std::string& param,
  const std::vector<double>& values,
  const std::string& out)
{
  nlohmann::json rows = nlohmann::json::array();
  bool hard_failure = false;
  for (double v : values)
  {
    Overrides local = o;
    if (param == "noise")
      local.noise_scale = v;
    else if (param == "horizon")
      local.horizon = static_cast<int>(v);
    else if (param == "agents")
      local.scenario = "circle" + std::to_string(static_cast<int>(v));
    else if (param == "epsilon")
      local.epsilon = v;
    else if (param == "delta")
      local.delta = v;

    const Scenario s = apply(local);
    const auto results = run_trials(s, options_of(local));
    const TrialSummary summary = summarize(results);
    hard_failure = hard_failure || summary.hard_failures > 0;

    nlohmann::json row = summary_to_json(summary);
    row["param"] = param;
    row["value"] = v;
    row["scenario"] = s.name;
    row["method"] = to_string(s.method);
    std::cout << row.dump() << std::endl;
    rows.push_back(row);
  }

  if (!out.empty())
  {
    std::filesystem::create_directories(out);
    write_file((std::filesystem::path(out)/"sweep.json").string(),
      rows.dump(2) + "\n");
  }
  return hard_failure ? 3 : 0;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Risk-bounded velocity-obstacle MPC simulator"};
  app.require_subcommand(1);

  Overrides plan_o;
  std::string plan_out;
  std::string plan_manifest;
  auto* plan = app.add_subcommand("plan", "Run seeded trials of one scenario");
  plan->add_option("--scenario", plan_o.scenario,
    "Built-in name (circle4, circle6, circle20, corridor, circle<n>) or JSON file");
  plan->add_option("--out", plan_out, "Directory for trajectories, metrics and manifests");
  plan->add_option("--manifest", plan_manifest, "Replay the trial stored in a manifest");
  add_overrides(plan, plan_o);

  Overrides sweep_o;
  std::string sweep_param;
  std::vector<double> sweep_values;
  std::string sweep_out;
  auto* sweep = app.add_subcommand("sweep", "Repeat a scenario over one parameter");
  sweep->add_option("--scenario", sweep_o.scenario, "Built-in name or JSON file");
  sweep->add_option("--param", sweep_param, "noise, horizon, agents, epsilon or delta")
    ->required()
    ->check(CLI::IsMember({"noise", "horizon", "agents", "epsilon", "delta"}));
  sweep->add_option("--values", sweep_values, "Values of the swept parameter")
    ->required();
  sweep->add_option("--out", sweep_out, "Directory for sweep.json");
  add_overrides(sweep, sweep_o);

  std::string render_run;
  std::vector<double> render_times;
  std::string render_out;
  auto* render = app.add_subcommand("render", "Draw SVG snapshots of an exported trial");
  render->add_option("--run", render_run, "Trial directory written by plan --out")
    ->required();
  render->add_option("--times", render_times, "Snapshot times in seconds")->required();
  render->add_option("--out", render_out, "Output directory")->required();

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("--scenario", validate_path, "Built-in name or JSON file")
    ->required();

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try
  {
    if (*plan)
    {
      if (plan_o.scenario.empty() && plan_manifest.empty())
      {
        std::cerr << "plan: --scenario or --manifest is required" << std::endl;
        return 2;
      }
      return run_plan(plan_o, plan_out, plan_manifest);
    }
    if (*sweep)
    {
      if (sweep_o.scenario.empty() && sweep_param != "agents")
      {
        std::cerr << "sweep: --scenario is required" << std::endl;
        return 2;
      }
      return run_sweep(sweep_o, sweep_param, sweep_values, sweep_out);
    }
    if (*render)
    {
      const TrajectoryLog log = load_log(render_run);
      for (const auto& path : render_frames(log, render_times, render_out))
        std::cout << path << std::endl;
      return 0;
    }
    if (*validate)
    {
      const Scenario s = resolve_scenario(validate_path);
      std::cout << "ok: " << s.name << ", " << s.agents.size() << " agents, "
                << s.obstacles.size() << " obstacles, " << s.steps()
                << " steps" << std::endl;
      return 0;
    }
  }
  catch (const ParseError& e)
  {
    std::cerr << "parse error: " << e.what() << std::endl;
    return 2;
  }
  catch (const ValidationError& e)
  {
    std::cerr << "validation error: " << e.what() << std::endl;
    return 2;
  }
  catch (const DomainError& e)
  {
    std::cerr << "invalid argument: " << e.what() << std::endl;
    return 2;
  }
  catch (const SolverError& e)
  {
    std::cerr << "solver failure: " << e.what() << std::endl;
    return 3;
  }
  catch (const Error& e)
  {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
