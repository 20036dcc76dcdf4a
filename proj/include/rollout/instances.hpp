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

// Built-in problem instances and the exhaustive-search oracle.

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rollout/augmentation.hpp"
#include "rollout/engine.hpp"
#include "rollout/problem.hpp"
#include "rollout/sample_set.hpp"

namespace rollout {

// ---------------------------------------------------------------------------
// Piecewise-linear spiral: x' = 0.8 R(beta(x)) x + [0; 1] u with
// beta = +pi/3 on x_1 >= 0 and -pi/3 otherwise, X = [-10, 10]^2,
// U = [-1, 1], g = x'x + indicator(x in X). Under u = 0 the norm contracts
// by 0.8 per step, so the zero policy costs |x|^2 / 0.36 wherever its
// trajectory stays in X. X itself is not invariant (corners rotate out), but
// two steps bring any point of X inside the disk of radius 10, which is.

struct HybridSpiral {
  Problem problem;
  Policy base;
  /// States whose zero-control trajectory stays in X, valued in closed form.
  SampleSet analytic_set;
  std::vector<State> table_initial_states;
};

HybridSpiral make_hybrid_spiral();

/// Region of the spiral's analytic set; also used when loading from JSON.
/// Its smooth terminal model is a 16-gon inscribed in the disk of radius 10.
Region spiral_base_region();

// ---------------------------------------------------------------------------
// Double integrator x' = A x + B u, A = [1 1; 0 1], B = [0; 1], with
// g = x'x + u^2 + indicator(x in [-4, 4]^2), U = [-1, 1], and the trajectory
// budget sum u^2 <= 0.5.

struct DoubleIntegratorParams {
  /// Double closed-loop pole of the base controller's linear phase.
  double base_pole = 0.7;
  /// Two-step deadbeat is used once both of its controls are below this.
  double deadbeat_threshold = 0.05;
  double budget = 0.5;
};

struct ConstrainedDoubleIntegrator {
  Problem problem;
  Policy base;
  BudgetConstraintSpec budget;
  State x0;
  std::size_t lookahead = 4;
};

ConstrainedDoubleIntegrator make_constrained_double_integrator(const DoubleIntegratorParams& params = {});

// ---------------------------------------------------------------------------
// Two vehicles on a grid. Each vehicle moves E/W/N/S or holds (H); a vehicle
// on its target can only hold. A step costs one per vehicle not yet on its
// target; ending closer than `safety` (Manhattan) or swapping cells costs
// +inf. The base policy moves each vehicle along its shortest path
// (horizontal leg first); vehicle 2 holds while vehicle 1 is still driving
// and vehicle 2's next cell would be within `caution` of vehicle 1's.

struct GridParams {
  int width = 5;
  int height = 5;
  std::pair<int, int> start1{0, 2};
  std::pair<int, int> target1{4, 2};
  std::pair<int, int> start2{2, 0};
  std::pair<int, int> target2{2, 4};
  int safety = 1;
  int caution = 2;
};

struct TwoVehicleGrid {
  Problem problem;
  Policy base;
  AgentPartition partition;
  State x0;
  std::size_t lookahead = 4;
};

/// Throws PreconditionViolation when the base policy collides or stalls.
TwoVehicleGrid make_two_vehicle_grid(const GridParams& params = {});

std::string grid_state(std::pair<int, int> p1, std::pair<int, int> p2);

// ---------------------------------------------------------------------------
// Four-city tour from A with revisits allowed. States are visit sequences,
// controls the next city; staying put costs +inf, and completed tours (all
// four cities, ending at A) form the stopping set. mu0 prefers the unvisited
// cities in the order C, D, B; mu1 visits them alphabetically.

using TspCostMatrix = std::array<std::array<double, 4>, 4>;

struct TspInstance {
  Problem problem;
  Policy mu0;
  Policy mu1;
  TspCostMatrix costs;
  State start;
};

/// Asymmetric matrix under which ABDCA is the unique optimum and
/// cost(ABCDA) < cost(ACDBA).
TspCostMatrix canonical_tsp_costs();

/// Throws PreconditionViolation on a nonpositive off-diagonal entry.
TspInstance make_tsp_variant(const std::optional<TspCostMatrix>& costs = std::nullopt);

double tour_cost(const TspCostMatrix& costs, const std::string& tour);

/// Checks a matrix against the qualitative tour claims: ABDCA is the unique
/// optimum (brute force, revisits allowed), cost(ABCDA) < cost(ACDBA), and
/// two-step rollout from A ends at ACDBA with the mu0 set, at ABCDA with
/// mu0 and mu1 merged, and at ABDCA once the mu0 tail from ABD is added.
/// Returns one message per failed claim.
std::vector<std::string> tsp_claim_failures(const TspCostMatrix& costs);

// ---------------------------------------------------------------------------

inline constexpr std::size_t kBruteForceCap = 20'000'000;

/// Minimum cost over all control sequences of length <= depth from x0 that
/// end in the stopping set; +inf if none. Throws SearchTooLarge when more
/// than `cap` nodes would be expanded.
Cost brute_force_optimal(const Problem& problem, const State& x0, std::size_t depth,
                         std::size_t cap = kBruteForceCap, std::size_t threads = 1);

/// Names accepted by the command-line tool.
std::vector<std::string> instance_names();

}  // namespace rollout
