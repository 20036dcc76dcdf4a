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

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rollout/cost.hpp"
#include "rollout/lookahead.hpp"
#include "rollout/problem.hpp"
#include "rollout/sample_set.hpp"
#include "rollout/trajectory.hpp"

namespace rollout {

inline constexpr double kTailTolerance = 1e-6;
inline constexpr std::size_t kDefaultHorizon = 1000;

enum class RunStatus {
  kStoppingSet,    ///< reached the stopping set
  kInsideSet,      ///< entered the sample set with a negligible tail; tail appended
  kConverged,      ///< classical MPC: lookahead value below the tail tolerance
  kHorizon,        ///< step budget exhausted; total cost is a partial sum
  kInfeasibleAfterDisturbance,
};

std::string to_string(RunStatus s);
RunStatus parse_run_status(const std::string& s);

struct StepReport {
  std::size_t step = 0;
  Cost value;
  SolveStatus status = SolveStatus::kOptimal;
  std::size_t subproblems = 0;
  std::optional<std::size_t> terminal_sample;
  bool disturbed = false;
};

/// Closed loop under the rollout policy.
///
/// The trajectory's tail costs are filled by backward accumulation from the
/// appended base tail whenever the run finished inside the set or the
/// stopping set, so trajectory_cost() returns the full cost.
struct RolloutRun {
  Trajectory trajectory;
  std::vector<Cost> per_step_values;
  std::vector<StepReport> reports;
  SolverConfig config;
  RunStatus status = RunStatus::kHorizon;
  Cost closing_tail;
  Cost initial_bound = Cost::infinity();  ///< J-bar(x0)

  [[nodiscard]] Cost total_cost() const { return trajectory_cost(trajectory); }
  [[nodiscard]] Cost initial_value() const {
    if (!per_step_values.empty()) return per_step_values.front();
    return status == RunStatus::kStoppingSet ? Cost::zero() : Cost::infinity();
  }
};

struct RunOptions {
  std::size_t horizon = kDefaultHorizon;
  double tail_tolerance = kTailTolerance;
};

/// Applies the first control of the l-step lookahead at every visited state.
///
/// Throws InitialInfeasibility if J-tilde(x0) is +inf.
RolloutRun run_rollout(const Problem& problem, const SampleSet& set, const State& x0, const SolverConfig& cfg,
                       const RunOptions& opts = {});

/// Groups of control components owned by each agent. Token controls are
/// comma-separated component lists; vector controls are indexed by coordinate.
using AgentPartition = std::vector<std::vector<std::size_t>>;

/// Splits / joins comma-separated product tokens.
std::vector<std::string> split_components(const std::string& token);
std::string join_components(const std::vector<std::string>& parts);

/// Lookahead over the control subsets built by agent-by-agent coordinate
/// sweeps. Each sweep lets every agent in turn minimize over its own
/// components with the others held at the current incumbent, which starts at
/// the base action; the base action therefore always lies in the implicit
/// U-bar(x). Discrete backend only.
LookaheadSolution solve_multiagent(const Problem& problem, const Policy& base, const SampleSet& set, const State& x,
                                   const SolverConfig& cfg, const AgentPartition& partition, std::size_t sweeps);

/// Closed loop under simplified (agent-by-agent) rollout.
RolloutRun run_multiagent(const Problem& problem, const Policy& base, const SampleSet& set, const State& x0,
                          const SolverConfig& cfg, const AgentPartition& partition, std::size_t sweeps,
                          const RunOptions& opts = {});

/// Classical receding-horizon baseline with terminal cost G and no sample-set
/// constraint. With `terminal` empty, G is identically zero.
RolloutRun run_classical_mpc(const Problem& problem, const std::optional<SmoothTerminal>& terminal, const State& x0,
                             const SolverConfig& cfg, const RunOptions& opts = {});

/// Perturbation applied after the transition of step k; nullopt for none.
using Disturbance = std::function<std::optional<State>(std::size_t step, const State& next)>;

/// Rollout with external perturbations. A perturbed state with infinite
/// J-tilde ends the run with RunStatus::kInfeasibleAfterDisturbance.
RolloutRun run_with_disturbance(const Problem& problem, const SampleSet& set, const State& x0,
                                const SolverConfig& cfg, const Disturbance& disturbance, const RunOptions& opts = {});

/// Outcome of the cost-improvement and descent checks on one run.
struct RunCheck {
  bool chain_ok = true;    ///< J_mu~(x0) <= J~(x0) <= J-bar(x0)
  bool descent_ok = true;  ///< per-step J~ nonincreasing
  double worst_increase = 0.0;
  std::string detail;
};

/// `rel_tol` = 0 demands exact inequalities.
RunCheck check_run(const RolloutRun& run, double rel_tol);

}  // namespace rollout
