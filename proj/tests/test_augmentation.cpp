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


#include <catch_amalgamated.hpp>

#include "rollout/augmentation.hpp"
#include "rollout/errors.hpp"
#include "rollout/instances.hpp"
#include "support.hpp"

using namespace rollout;

namespace {

BudgetConstraintSpec zero_usage(double budget) {
  BudgetConstraintSpec s;
  s.usage = [](const State&, const Control&) { return 0.0; };
  s.budget = budget;
  return s;
}

}  // namespace

TEST_CASE("augmented states pack and unpack", "[augmentation]") {
  const AugmentedState v = split_augmented(make_augmented(State{1.0, -2.0}, 0.25));
  CHECK(v.base == State{1.0, -2.0});
  CHECK(v.info == 0.25);
  const AugmentedState t = split_augmented(make_augmented(State("ACD"), 0.5));
  CHECK(t.base == State("ACD"));
  CHECK(t.info == 0.5);
}

TEST_CASE("a budget that is never used leaves optimal values unchanged", "[augmentation]") {
  const TspInstance t = make_tsp_variant();
  const Problem aug = augment_problem(t.problem, zero_usage(0.0));
  for (const auto& x : {State("A"), State("AB"), State("ACD"), State("ABCDA")}) {
    CHECK(brute_force_optimal(aug, make_augmented(x, 0.0), 6) == brute_force_optimal(t.problem, x, 6));
  }
}

TEST_CASE("controls that overdraw the budget are infeasible", "[augmentation]") {
  const ConstrainedDoubleIntegrator di = make_constrained_double_integrator();
  const Problem aug = augment_problem(di.problem, di.budget);
  const State x = make_augmented(State{0.0, 0.0}, 0.25);
  CHECK(aug.cost(x, Control{0.6}).is_infinite());
  CHECK(aug.cost(x, Control{-0.51}).is_infinite());
  CHECK(aug.cost(x, Control{0.5}).is_finite());
  CHECK(aug.cost(x, Control{-0.5}).is_finite());
  CHECK(split_augmented(aug.step(x, Control{0.5})).info == 0.0);

  const State empty = make_augmented(State{1.0, 0.0}, 0.0);
  CHECK(aug.cost(empty, Control{0.0}).is_finite());
  CHECK(aug.cost(empty, Control{1e-9}).is_infinite());
  CHECK(aug.cost(empty, Control{-0.5}).is_infinite());
}

TEST_CASE("augmented base simulation reproduces the seed", "[augmentation]") {
  const ConstrainedDoubleIntegrator di = make_constrained_double_integrator();
  const Trajectory seed = simulate_policy(di.problem, di.base, di.x0);
  const Problem aug = augment_problem(di.problem, di.budget);
  const Trajectory t = simulate_policy(aug, augment_policy(di.base), make_augmented(di.x0, di.budget.budget));
  REQUIRE(t.states.size() == seed.states.size());
  double e = di.budget.budget;
  for (std::size_t k = 0; k < t.states.size(); ++k) {
    const AugmentedState a = split_augmented(t.states[k]);
    CHECK(a.base == seed.states[k]);
    CHECK(a.info == e);
    if (k < seed.steps()) {
      CHECK(t.stage_costs[k] == seed.stage_costs[k]);
      e -= seed.controls[k].vec().squaredNorm();
    }
  }
}

TEST_CASE("augmented sample set membership follows the tail usage", "[augmentation]") {
  const ConstrainedDoubleIntegrator di = make_constrained_double_integrator();
  const Trajectory seed = simulate_policy(di.problem, di.base, di.x0);
  const SampleSet set = augment_sample_set(seed, di.budget, "S0");
  const std::vector<double> tail = tail_usage(seed, di.budget);
  REQUIRE(tail.size() == seed.states.size());

  // Independent suffix sums of u^2.
  double acc = 0.0;
  for (std::size_t k = seed.steps(); k-- > 0;) {
    acc += seed.controls[k].vec().squaredNorm();
    CHECK(std::abs(tail[k] - acc) <= 1e-15);
  }
  CHECK(tail.back() == 0.0);

  CHECK(terminal_cost(set, make_augmented(di.x0, di.budget.budget)) == seed.tail_costs->front());
  for (std::size_t k = 0; k < seed.states.size(); k += 4) {
    const State& x = seed.states[k];
    CHECK(terminal_cost(set, make_augmented(x, tail[k])) == (*seed.tail_costs)[k]);
    if (tail[k] > 0.0) {
      CHECK(terminal_cost(set, make_augmented(x, tail[k] - 1e-9)).is_infinite());
      CHECK(terminal_cost(set, make_augmented(x, std::nextafter(tail[k], 0.0))).is_infinite());
    }
  }
  CHECK(terminal_cost(set, make_augmented(State{2.0, 2.0}, 0.5)).is_infinite());

  const Problem aug = augment_problem(di.problem, di.budget);
  const InvarianceReport r = verify_invariance(aug, augment_policy(di.base), set, 1000, 3);
  CHECK(r.passed);
  CHECK(r.sampled_states == 1000);
}

TEST_CASE("a seed that overdraws the budget is rejected with its usage", "[augmentation]") {
  const ConstrainedDoubleIntegrator di = make_constrained_double_integrator();
  const Trajectory seed = simulate_policy(di.problem, di.base, di.x0);
  BudgetConstraintSpec tight = di.budget;
  tight.budget = 0.1;
  try {
    (void)augment_sample_set(seed, tight);
    FAIL("expected an infeasible seed");
  } catch (const InfeasibleSeed& e) {
    CHECK(e.measured() == tail_usage(seed, di.budget).front());
    CHECK(e.measured() > 0.1);
  }
}

TEST_CASE("budget information map is consistent", "[augmentation]") {
  const ConstrainedDoubleIntegrator di = make_constrained_double_integrator();
  const Trajectory seed = simulate_policy(di.problem, di.base, di.x0);
  const InformationStateMap map = budget_information_map(di.budget);
  CHECK(check_information_consistency(map, seed));

  InformationStateMap broken = map;
  broken.transition = [](const Vector& e, const State&, const Control& u) {
    return Vector(e.array() - 2.0 * u.vec().squaredNorm());
  };
  CHECK_FALSE(check_information_consistency(broken, seed));
}

TEST_CASE("augmented rollout never exceeds the budget", "[augmentation][rollout]") {
  const ConstrainedDoubleIntegrator di = make_constrained_double_integrator();
  const State start{-1.5, 0.4};
  const Trajectory seed = simulate_policy(di.problem, di.base, start);
  BudgetConstraintSpec spec = di.budget;
  spec.budget = tail_usage(seed, spec).front() + 0.05;
  const SampleSet set = augment_sample_set(seed, spec, "S0");
  const Problem aug = augment_problem(di.problem, spec);
  SolverConfig cfg;
  cfg.lookahead = 3;
  cfg.backend = Backend::kContinuousShooting;
  const RolloutRun run = run_rollout(aug, set, make_augmented(start, spec.budget), cfg);
  REQUIRE(run.total_cost().is_finite());
  CHECK(run.total_cost() <= trajectory_cost(seed));

  // Replay the budget arithmetic in the same order as the dynamics.
  double e = spec.budget;
  for (std::size_t k = 0; k < run.trajectory.steps(); ++k) {
    e = e - run.trajectory.controls[k].vec().squaredNorm();
    CHECK(split_augmented(run.trajectory.states[k + 1]).info == e);
    CHECK(e >= 0.0);
  }
  // The appended base tail fits in what is left.
  const auto m = set.lookup(run.trajectory.states.back(), cfg.terminal_tolerance);
  REQUIRE(m.has_value());
  CHECK(m->value == run.closing_tail);
}
