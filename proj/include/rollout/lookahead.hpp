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
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rollout/cost.hpp"
#include "rollout/problem.hpp"
#include "rollout/sample_set.hpp"
#include "rollout/types.hpp"

namespace rollout {

enum class Backend { kDiscrete, kContinuousShooting, kHybridModeEnum };

std::string to_string(Backend b);
Backend parse_backend(const std::string& s);

/// Options for the l-step lookahead solvers.
struct SolverConfig {
  std::size_t lookahead = 1;
  Backend backend = Backend::kDiscrete;

  // Shooting backends.
  std::size_t max_iterations = 5000;  ///< projected-gradient iterations per penalty round
  std::size_t max_penalty_rounds = 40;
  double terminal_tolerance = 1e-6;   ///< accepted terminal mismatch, infinity norm
  double gradient_tolerance = 1e-10;  ///< projected-gradient stopping threshold
  double initial_penalty = 10.0;
  double penalty_growth = 10.0;
  double max_penalty = 1e12;
  double guard_margin = 1e-7;  ///< strictness margin on mode regions and lower bounds

  std::uint64_t seed = 0;
  std::size_t threads = 1;

  /// Throws PreconditionViolation on l = 0 or a nonpositive tolerance.
  void validate() const;
};

enum class SolveStatus { kOptimal, kInfeasible, kIterationLimit };

std::string to_string(SolveStatus s);

/// Minimizer of the l-step problem with terminal cost J-bar.
struct LookaheadSolution {
  std::vector<Control> controls;
  State terminal_state;
  /// Index into SampleSet::terminal_targets() (shooting) or entries() (discrete).
  std::optional<std::size_t> terminal_sample;
  Cost value = Cost::infinity();
  /// J_0(x) .. J_l(x), filled by the discrete solver.
  std::vector<Cost> per_stage_values;
  SolveStatus status = SolveStatus::kInfeasible;
  std::size_t subproblems = 0;
  /// Base action at the terminal state; used to shift the plan forward.
  std::optional<Control> continuation;

  [[nodiscard]] bool feasible() const { return value.is_finite(); }
};

/// Exact minimizer over finite control sets by depth-l enumeration with
/// memoization on (state, depth). Ties go to the lexicographically smallest
/// control sequence.
LookaheadSolution solve_discrete(const Problem& problem, const SampleSet& set, const State& x,
                                 const SolverConfig& cfg);

/// Box-constrained shooting over the control sequence.
///
/// Every terminal target of the set becomes a fixed-terminal subproblem;
/// regions with a smooth terminal model become free-terminal subproblems.
/// With Backend::kHybridModeEnum every mode sequence is solved separately and
/// only solutions whose induced modes match are kept. `warm_start` is used
/// as the initial iterate and as an extra candidate.
LookaheadSolution solve_continuous(const Problem& problem, const SampleSet& set, const State& x,
                                   const SolverConfig& cfg, const std::vector<Control>* warm_start = nullptr);

/// Dispatches on cfg.backend.
LookaheadSolution solve_lookahead(const Problem& problem, const SampleSet& set, const State& x,
                                  const SolverConfig& cfg, const std::vector<Control>* warm_start = nullptr);

/// VI iterates J_0 = J-bar, J_{k+1} = T J_k at the listed states;
/// row i holds J_0(x_i) .. J_l(x_i).
std::vector<std::vector<Cost>> vi_sequence(const Problem& problem, const SampleSet& set,
                                           const std::vector<State>& states, std::size_t lookahead);

/// U-bar(x), a state-dependent subset of U(x).
using RestrictedControls = std::function<ControlSet(const State&)>;

/// Lookahead over U-bar instead of U.
///
/// Throws PreconditionViolation when a sample-set member visited by the
/// search has a recorded base action outside U-bar. For the shooting
/// backends U-bar(x) must be a box and is applied at every stage.
LookaheadSolution solve_restricted(const Problem& problem, const SampleSet& set, const State& x,
                                   const RestrictedControls& restricted, const SolverConfig& cfg);

/// Exact cost of applying `controls` from x and finishing at J-bar
/// (terminal matching within `terminal_tol`). Returns +inf on any infeasible step.
Cost evaluate_sequence(const Problem& problem, const SampleSet& set, const State& x,
                       const std::vector<Control>& controls, double terminal_tol, State* terminal = nullptr);

}  // namespace rollout
