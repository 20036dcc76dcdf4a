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
#include <optional>
#include <string>
#include <vector>

#include "rollout/cost.hpp"
#include "rollout/problem.hpp"
#include "rollout/types.hpp"

namespace rollout {

inline constexpr std::size_t kDefaultMaxSteps = 10000;

/// Why a closed-loop simulation stopped.
enum class Termination {
  kStoppingSet,  ///< reached the problem's stopping set
  kFixedPoint,   ///< reached a cost-free fixed point of the policy
  kStepLimit,    ///< ran out of steps
};

std::string to_string(Termination t);
Termination parse_termination(const std::string& s);

/// Closed-loop record: n transitions, n + 1 states.
struct Trajectory {
  std::vector<State> states;
  std::vector<Control> controls;
  std::vector<Cost> stage_costs;
  /// Cost-to-go of the generating policy at every state, when known.
  std::optional<std::vector<Cost>> tail_costs;
  std::string policy_id;
  Termination termination = Termination::kStepLimit;

  [[nodiscard]] std::size_t steps() const { return controls.size(); }
  [[nodiscard]] bool terminated_in_stopping_set() const { return termination == Termination::kStoppingSet; }
  [[nodiscard]] bool has_tail_costs() const { return tail_costs.has_value(); }
};

/// Simulates `policy` from x0 until the stopping set, a cost-free policy
/// fixed point, or `max_steps` transitions.
///
/// Tail costs come from `policy.analytic_cost` when the policy has one, and
/// otherwise from backward accumulation when the run terminated in the
/// stopping set or at a fixed point.
///
/// Throws ConstraintViolation if the policy leaves U(x) and
/// InfeasibleTrajectory on an infinite stage cost.
Trajectory simulate_policy(const Problem& problem, const Policy& policy, const State& x0,
                           std::size_t max_steps = kDefaultMaxSteps);

/// Sum of stage costs plus the recorded tail at the final state.
Cost trajectory_cost(const Trajectory& traj);

/// Checks the structural invariants of a trajectory against its problem:
/// transitions, stage costs and the tail-cost recursion.
StructureReport check_trajectory(const Problem& problem, const Trajectory& traj, double rel_tol = 1e-10);

/// Per-state outcome of a Bellman-equation check.
struct ResidualEntry {
  State state;
  Cost lhs;  ///< value at x
  Cost rhs;  ///< g(x, mu(x)) + value at the successor
  double residual = 0.0;
  bool ok = true;
};

struct ResidualReport {
  bool passed = true;
  double tolerance = 0.0;
  std::vector<ResidualEntry> entries;

  [[nodiscard]] std::vector<std::size_t> failures() const;
};

inline constexpr double kResidualTolerance = 1e-8;

/// Fixed-point residuals |V(x) - (g(x, mu(x)) + V(f(x, mu(x))))| relative to
/// max(1, |V|) at every listed state.
///
/// Throws CoverageError if a listed state or its successor has no value.
ResidualReport check_fixed_point(const Problem& problem, const Policy& policy, const StateMap<Cost>& values,
                                 const std::vector<State>& states, double tol = kResidualTolerance);

/// Checks g(x, mu(x)) + V(f(x, mu(x))) <= V(x) at every listed state.
ResidualReport check_upper_bound(const Problem& problem, const Policy& policy, const StateMap<Cost>& candidate,
                                 const std::vector<State>& states, double tol = kResidualTolerance);

/// Builds a value table from a trajectory's recorded tail costs.
StateMap<Cost> tail_cost_table(const Trajectory& traj, double tolerance = kStateTolerance);

}  // namespace rollout
