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


#include "rollout/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include "rollout/errors.hpp"

namespace rollout {

namespace {

// A step this cheap that leaves the state in place is treated as the policy
// resting for good.
constexpr double kRestCost = 1e-12;

double scale_of(Cost a, Cost b) {
  double s = 1.0;
  if (a.is_finite()) s = std::max(s, a.value());
  if (b.is_finite()) s = std::max(s, b.value());
  return s;
}

const Cost& lookup_or_throw(const StateMap<Cost>& values, const State& x, const char* role) {
  const Cost* v = values.find(x);
  if (v == nullptr) {
    throw CoverageError(to_string(x), std::string("no value for ") + role + " " + to_string(x));
  }
  return *v;
}

}  // namespace

std::string to_string(Termination t) {
  switch (t) {
    case Termination::kStoppingSet: return "stopping_set";
    case Termination::kFixedPoint: return "fixed_point";
    case Termination::kStepLimit: return "step_limit";
  }
  return "step_limit";
}

Termination parse_termination(const std::string& s) {
  if (s == "stopping_set") return Termination::kStoppingSet;
  if (s == "fixed_point") return Termination::kFixedPoint;
  if (s == "step_limit") return Termination::kStepLimit;
  throw std::invalid_argument("unknown termination '" + s + "'");
}

Trajectory simulate_policy(const Problem& problem, const Policy& policy, const State& x0, std::size_t max_steps) {
  if (max_steps == 0) throw PreconditionViolation("max_steps must be at least 1");
  Trajectory traj;
  traj.policy_id = policy.id;
  traj.states.push_back(x0);
  State x = x0;
  for (std::size_t k = 0; k < max_steps; ++k) {
    if (problem.is_stopping(x)) {
      traj.termination = Termination::kStoppingSet;
      break;
    }
    const Control u = policy(x);
    if (!problem.controls(x).contains(u)) {
      throw ConstraintViolation(k, "step " + std::to_string(k) + ": action " + to_string(u) + " not in U(" +
                                       to_string(x) + ")");
    }
    const Cost c = problem.cost(x, u);
    if (c.is_infinite()) {
      throw InfeasibleTrajectory(k, "step " + std::to_string(k) + ": infinite stage cost at " + to_string(x) +
                                        " under " + to_string(u));
    }
    State y = problem.step(x, u);
    traj.controls.push_back(u);
    traj.stage_costs.push_back(c);
    traj.states.push_back(y);
    if (c.value() <= kRestCost && approx_equal(y, x, problem.state_tolerance)) {
      traj.termination = Termination::kFixedPoint;
      break;
    }
    x = std::move(y);
  }
  if (traj.termination == Termination::kStepLimit && problem.is_stopping(traj.states.back())) {
    traj.termination = Termination::kStoppingSet;
  }

  const std::size_t n = traj.steps();
  if (traj.termination != Termination::kStepLimit) {
    std::vector<Cost> tail(n + 1, Cost::zero());
    for (std::size_t k = n; k-- > 0;) tail[k] = traj.stage_costs[k] + tail[k + 1];
    traj.tail_costs = std::move(tail);
  } else if (policy.has_analytic_cost()) {
    std::vector<Cost> tail;
    tail.reserve(n + 1);
    for (const auto& s : traj.states) tail.push_back(policy.analytic_cost(s));
    traj.tail_costs = std::move(tail);
  }
  return traj;
}

Cost trajectory_cost(const Trajectory& traj) {
  Cost total = Cost::zero();
  for (const auto& c : traj.stage_costs) total += c;
  if (traj.tail_costs && !traj.tail_costs->empty()) total += traj.tail_costs->back();
  return total;
}

StructureReport check_trajectory(const Problem& problem, const Trajectory& traj, double rel_tol) {
  StructureReport report;
  auto fail = [&](const std::string& msg) {
    report.passed = false;
    report.problems.push_back(msg);
  };
  const std::size_t n = traj.steps();
  if (traj.states.size() != n + 1 || traj.stage_costs.size() != n) {
    fail("misaligned trajectory lengths");
    return report;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const State y = problem.step(traj.states[k], traj.controls[k]);
    if (!approx_equal(y, traj.states[k + 1], problem.state_tolerance)) {
      fail("transition mismatch at step " + std::to_string(k));
    }
    if (problem.cost(traj.states[k], traj.controls[k]) != traj.stage_costs[k]) {
      fail("stage cost mismatch at step " + std::to_string(k));
    }
  }
  if (traj.tail_costs) {
    const auto& tail = *traj.tail_costs;
    if (tail.size() != n + 1) {
      fail("tail cost length mismatch");
      return report;
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (relative_gap(tail[k], traj.stage_costs[k] + tail[k + 1]) > rel_tol) {
        fail("tail recursion broken at step " + std::to_string(k));
      }
    }
    if (traj.terminated_in_stopping_set() && tail[n] != Cost::zero()) fail("nonzero tail at stopping state");
  }
  return report;
}

std::vector<std::size_t> ResidualReport::failures() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!entries[i].ok) out.push_back(i);
  }
  return out;
}

ResidualReport check_fixed_point(const Problem& problem, const Policy& policy, const StateMap<Cost>& values,
                                 const std::vector<State>& states, double tol) {
  ResidualReport report;
  report.tolerance = tol;
  for (const auto& x : states) {
    const Cost lhs = lookup_or_throw(values, x, "state");
    const Control u = policy(x);
    const Cost rhs = problem.cost(x, u) + lookup_or_throw(values, problem.step(x, u), "successor of");
    ResidualEntry e{x, lhs, rhs, relative_gap(lhs, rhs), true};
    e.ok = e.residual <= tol;
    report.passed = report.passed && e.ok;
    report.entries.push_back(std::move(e));
  }
  return report;
}

ResidualReport check_upper_bound(const Problem& problem, const Policy& policy, const StateMap<Cost>& candidate,
                                 const std::vector<State>& states, double tol) {
  ResidualReport report;
  report.tolerance = tol;
  for (const auto& x : states) {
    const Cost lhs = lookup_or_throw(candidate, x, "state");
    const Control u = policy(x);
    const Cost rhs = problem.cost(x, u) + lookup_or_throw(candidate, problem.step(x, u), "successor of");
    double excess = 0.0;
    if (lhs.is_finite()) {
      excess = rhs.is_infinite() ? std::numeric_limits<double>::infinity()
                                 : std::max(0.0, rhs.value() - lhs.value()) / scale_of(lhs, rhs);
    }
    ResidualEntry e{x, lhs, rhs, excess, excess <= tol};
    report.passed = report.passed && e.ok;
    report.entries.push_back(std::move(e));
  }
  return report;
}

StateMap<Cost> tail_cost_table(const Trajectory& traj, double tolerance) {
  if (!traj.tail_costs) throw UnusableTrajectory("trajectory has no tail costs");
  StateMap<Cost> table(tolerance);
  for (std::size_t k = 0; k < traj.states.size(); ++k) table.insert(traj.states[k], (*traj.tail_costs)[k]);
  return table;
}

}  // namespace rollout
