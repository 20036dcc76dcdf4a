// Copyright 2026 The Sampled Rollout Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serialization.
//
// JSON: states and controls are strings (tokens) or number arrays; costs are
// numbers or the string "inf". Doubles are written in their shortest
// round-trip form, so every document reloads to the same bits.
//
// Trajectory CSV:
//
//   # policy_id=<id> termination=<stopping_set|fixed_point|step_limit>
//   step,x0,..,x{n-1},u0,..,u{m-1},stage_cost,tail_cost
//
// One row per state; the last row leaves the control and stage-cost columns
// empty, and tail_cost is empty when the trajectory has no tail costs. Token
// states and controls use single `state` / `control` columns.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rollout/engine.hpp"
#include "rollout/errors.hpp"
#include "rollout/sample_set.hpp"
#include "rollout/trajectory.hpp"

namespace rollout {

using nlohmann::json;

/// Raised on malformed input documents.
class FormatError : public Error {
 public:
  using Error::Error;
};

std::string format_double(double v);

json cost_to_json(Cost c);
Cost cost_from_json(const json& j);
json state_to_json(const State& x);
State state_from_json(const json& j);
json control_to_json(const Control& u);
Control control_from_json(const json& j);

json trajectory_to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const json& j);

std::string trajectory_to_csv(const Trajectory& traj);
Trajectory trajectory_from_csv(const std::string& text);

/// Regions are stored through their descriptors and rebuilt on load; a
/// region without a descriptor cannot be serialized (FormatError).
json sample_set_to_json(const SampleSet& set);
SampleSet sample_set_from_json(const json& j);

json solver_config_to_json(const SolverConfig& cfg);
SolverConfig solver_config_from_json(const json& j);

json run_to_json(const RolloutRun& run);
RolloutRun run_from_json(const json& j);

/// One line of the results table.
struct SummaryRow {
  std::string instance;
  std::string x0;
  std::size_t lookahead = 0;
  std::string backend;
  std::string variant;
  Cost total_cost;
  Cost initial_value;
  Cost initial_bound;
  std::size_t steps = 0;
  std::string status;
};

SummaryRow summarize(const std::string& instance, const std::string& variant, const RolloutRun& run);
std::string summary_header();
std::string summary_line(const SummaryRow& row);
/// Appends a row, writing the header first when the file is new or empty.
void append_summary(const std::filesystem::path& path, const SummaryRow& row);

/// Writes through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
/// Throws FormatError when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

}  // namespace rollout
