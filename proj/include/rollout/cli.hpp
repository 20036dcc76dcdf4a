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

// Command-line harness. The executable in tools/ only forwards to run_cli.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rollout/engine.hpp"
#include "rollout/instances.hpp"
#include "rollout/lookahead.hpp"

namespace rollout::cli {

enum ExitCode : int {
  kOk = 0,
  kPropertyViolation = 1,
  kInfeasible = 2,
  kSolverFailure = 3,
  kUsage = 64,
};

/// Everything a `run` needs. Unset optionals take the instance defaults.
struct ExperimentConfig {
  std::string instance = "hybrid";
  std::string variant = "basic";
  std::optional<std::string> x0;
  std::optional<std::size_t> lookahead;
  std::optional<std::string> backend;
  std::size_t horizon = kDefaultHorizon;
  std::size_t sweeps = 1;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::size_t max_iterations = 5000;
  double terminal_tolerance = 1e-6;

  /// Perturbation for the disturbance variant, applied after transition
  /// `disturb_step`: either a shift of a vector state or a replacement state.
  std::size_t disturb_step = 1;
  std::vector<double> disturb_delta;
  std::optional<std::string> disturb_state;

  /// Extra base-policy trajectories merged into the set, one per start state.
  std::vector<std::string> extra_seeds;

  /// Classical MPC horizon; the table's baseline column uses it too.
  std::size_t mpc_lookahead = 10;
  /// Classical MPC: use the base policy's analytic cost as G instead of 0.
  bool mpc_analytic_terminal = false;
  /// cmd_table: compute the MPC column.
  bool table_mpc = true;

  /// Hybrid only: seed the set with base-trajectory samples instead of the
  /// analytic box.
  bool explicit_samples = false;

  /// Double integrator overrides.
  DoubleIntegratorParams integrator;
  /// Grid overrides.
  GridParams grid;

  /// Sample set read from JSON instead of the built one. It is re-verified
  /// against the instance's policies unless `trusted`.
  std::string load_set;
  bool trusted = false;

  std::string run_json;
  std::string trajectory_csv;
  std::string summary_file;
  std::string set_json;  ///< where to save the sample set used by the run
};

/// Instantiated experiment: problem, set, policies, and the chosen start.
struct Experiment {
  Problem problem;
  SampleSet set;
  /// Policies by id, acting on the experiment's (possibly augmented) states.
  std::map<std::string, Policy> policies;
  Policy base;
  State x0;
  SolverConfig solver;
  AgentPartition partition;
  /// J_mu0(x0) on the original problem.
  Cost base_cost = Cost::infinity();
  /// Set for the augmented variant.
  std::optional<BudgetConstraintSpec> budget;
  /// Classical MPC baseline; unset when the instance has no shooting model.
  std::optional<SolverConfig> mpc_solver;
  std::optional<SmoothTerminal> mpc_terminal;
};

/// Runs the configured variant.
RolloutRun execute(const Experiment& ex, const ExperimentConfig& cfg);

/// Builds the problem and sample set named by the config.
/// Throws PreconditionViolation on an unknown instance or variant.
Experiment build_experiment(const ExperimentConfig& cfg);

int cmd_run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);

/// Checks invariance and the fixed-point equation of a stored set against
/// the problem of `cfg.instance` / `cfg.variant`. Region members are sampled
/// `samples` times with `cfg.seed`.
int cmd_verify(const ExperimentConfig& cfg, const std::string& set_path, std::size_t samples, std::ostream& out,
               std::ostream& err);

/// One row per run: base cost, rollout cost, and for instances with a
/// shooting model the classical MPC cost. Writes CSV to `csv_path` when
/// nonempty and prints the aligned table. With cfg.threads > 1 on the first
/// run, runs execute concurrently; rows keep the input order.
int cmd_table(const std::vector<ExperimentConfig>& runs, const std::string& csv_path, std::ostream& out,
              std::ostream& err);
/// "spiral" (hybrid, both initial states) and "tsp" (three set configurations).
std::vector<ExperimentConfig> table_preset(const std::string& name);

int cmd_list(std::ostream& out);

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace rollout::cli
