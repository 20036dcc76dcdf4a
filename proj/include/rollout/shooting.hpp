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

// Projected-gradient shooting on control sequences.
//
// A subproblem fixes the initial state, the horizon, the mode of every stage
// and the terminal treatment, and minimizes
//
//   sum_k c(x_k, u_k) + T(x_l)   over u_k in the control box,
//
// where equality and inequality constraints on the visited states are handled
// by an augmented Lagrangian whose penalty grows until the violation is below
// the terminal tolerance. Each penalty round runs accelerated projected
// gradient with a backtracking Lipschitz estimate.

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "rollout/lookahead.hpp"
#include "rollout/problem.hpp"
#include "rollout/sample_set.hpp"

namespace rollout {

/// Terminal treatment of one subproblem. With neither pointer set the
/// terminal state is free and costless.
struct ShootingTerminal {
  const TerminalTarget* target = nullptr;
  const SmoothTerminal* smooth = nullptr;
  /// Lower bound on the subproblem's objective, used for pruning.
  double lower_bound = 0.0;
};

struct ShootingSubproblem {
  const ShootingModel* model = nullptr;
  Vector x0;
  /// Mode of each stage 0 .. l-1; its size is the horizon.
  std::vector<std::size_t> modes;
  /// Require x_1 .. x_{l-1} to lie in the region of their assumed mode.
  bool enforce_modes = false;
  ShootingTerminal terminal;
  Box box;
};

struct ShootingOutcome {
  Matrix controls;  ///< control dimension x horizon
  double objective = 0.0;
  double violation = 0.0;
  std::size_t iterations = 0;
  std::size_t penalty_rounds = 0;
  bool converged = false;  ///< last penalty round met the gradient tolerance
  bool feasible = false;   ///< violation within the terminal tolerance
};

/// Solves one subproblem from the initial iterate `initial` (projected onto the box).
ShootingOutcome solve_subproblem(const ShootingSubproblem& sub, const Matrix& initial, const SolverConfig& cfg);

/// Simulates a subproblem's dynamics (assumed modes) from x0.
std::vector<Vector> simulate_branches(const ShootingSubproblem& sub, const Matrix& controls);

/// Exact evaluation of a candidate control sequence; returns +inf when the
/// sequence is infeasible for the true problem.
using SequenceEvaluator = std::function<Cost(const std::vector<Control>&, State* terminal)>;

/// Runs every (terminal, mode sequence) subproblem, evaluates the results
/// with `evaluate`, and returns the best by (value, index). The warm start,
/// when given, is evaluated as candidate -1 and seeds every subproblem.
LookaheadSolution search_shooting(const Problem& problem, const State& x, const std::vector<ShootingTerminal>& terminals,
                                  const SequenceEvaluator& evaluate, const SolverConfig& cfg,
                                  const std::vector<Control>* warm_start = nullptr,
                                  const std::optional<Box>& box_override = std::nullopt);

}  // namespace rollout
