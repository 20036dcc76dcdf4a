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

// Trajectory constraints through state augmentation.
//
// A constraint on whole trajectories becomes a state constraint once the
// state carries an information component e summarizing the past. For an
// additive budget, sum_k usage(x_k, u_k) <= e_max, the information state is
// the remaining budget with e_{k+1} = e_k - usage(x_k, u_k), and a transition
// is infeasible when it would overdraw it.
//
// Augmented states are vectors [x, e] when the base state is a vector and
// tokens "x#e" when it is a token.

#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "rollout/problem.hpp"
#include "rollout/sample_set.hpp"
#include "rollout/trajectory.hpp"

namespace rollout {

/// Additive trajectory budget.
struct BudgetConstraintSpec {
  std::function<double(const State&, const Control&)> usage;
  double budget = 0.0;
  /// Derivatives of usage for vector states; required for shooting on the
  /// augmented problem.
  std::function<void(const Vector& x, const Vector& u, Vector& gx, Vector& gu)> usage_gradient;
};

/// A pair (x, e).
struct AugmentedState {
  State base;
  double info = 0.0;
};

State make_augmented(const State& base, double info);
AugmentedState split_augmented(const State& augmented);

/// Problem over (x, e): f acts on x, e decreases by the usage, and a control
/// whose usage exceeds e costs +inf. Control sets are those of x.
Problem augment_problem(const Problem& problem, const BudgetConstraintSpec& spec);

/// Policy acting on the x component.
Policy augment_policy(const Policy& policy);

/// Remaining usage after each state: tail[k] = sum_{j >= k} usage(x_j, u_j).
std::vector<double> tail_usage(const Trajectory& traj, const BudgetConstraintSpec& spec);

/// Sample set over (x, e) generated by one feasible trajectory:
/// (x, e) is a member iff x matches some x_k and e >= tail_usage[k], with
/// value tail_costs[k].
///
/// Throws InfeasibleSeed when the trajectory uses more than the budget and
/// UnusableTrajectory when it has no tail costs.
SampleSet augment_sample_set(const Trajectory& traj, const BudgetConstraintSpec& spec, std::string label = {});

/// Rebuilds the region of augment_sample_set from its seed data.
Region budget_region(const std::vector<State>& states, const std::vector<Control>& controls,
                     const std::vector<Cost>& tail_costs, const std::vector<double>& usage, double budget,
                     std::string policy_id, double tolerance = kStateTolerance);

/// General information-state construction: a reducer over trajectory
/// prefixes and its one-step transition.
struct InformationStateMap {
  std::function<Vector(const std::vector<State>&, const std::vector<Control>&)> reduce;
  std::function<Vector(const Vector&, const State&, const Control&)> transition;
};

/// Information map of an additive budget: e = budget - accumulated usage.
InformationStateMap budget_information_map(const BudgetConstraintSpec& spec);

/// Checks reduce(prefix + (x_k, u_k)) == transition(reduce(prefix), x_k, u_k)
/// along the trajectory, within `tol`.
bool check_information_consistency(const InformationStateMap& map, const Trajectory& traj, double tol = 1e-12);

}  // namespace rollout
