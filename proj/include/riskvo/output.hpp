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

#ifndef RISKVO__OUTPUT_HPP
#define RISKVO__OUTPUT_HPP

#include <riskvo/simulation.hpp>

#include <string>
#include <vector>

namespace riskvo {

/// Comma-separated table of one agent: a header line, one row per step and a
/// terminal row holding the final state with zero input.
std::string trajectory_csv(const TrajectoryLog& log, int agent);

/// Header of trajectory_csv().
const char* trajectory_header();

//==============================================================================
struct Manifest
{
  Scenario scenario;
  int trial = 0;
  bool record_timing = true;
};

nlohmann::json manifest_to_json(const Manifest& manifest);

Manifest manifest_from_json(const nlohmann::json& j);

/// Write agent_<i>.csv, metrics.json and manifest.json into `out_dir`
/// (created when missing). Throws IoError.
void export_trial(
  const Manifest& manifest, const TrialResult& result, const std::string& out_dir);

/// Throws IoError / ParseError.
Manifest load_manifest(const std::string& path);

/// Throws IoError / ParseError.
Metrics load_metrics(const std::string& path);

/// Re-run the trial described by a manifest.
TrialResult replay(const Manifest& manifest);

/// Rebuild a log from a directory written by export_trial(). Only the fields
/// stored in the tables are recovered.
TrajectoryLog load_log(const std::string& dir);

/// One SVG snapshot per timestamp (seconds) with discs, trails, goals and
/// obstacles. Returns the written paths. Throws DomainError for a timestamp
/// outside the log and IoError on write failure.
std::vector<std::string> render_frames(
  const TrajectoryLog& log,
  const std::vector<double>& timestamps,
  const std::string& out_dir);

/// Read a whole file. Throws IoError.
std::string read_file(const std::string& path);

/// Write a whole file. Throws IoError.
void write_file(const std::string& path, const std::string& content);

} // namespace riskvo

#endif // RISKVO__OUTPUT_HPP
