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

#include <random>

#include "rollout/engine.hpp"
#include "rollout/errors.hpp"
#include "rollout/lookahead.hpp"
#include "support.hpp"

using namespace rollout;

namespace {

SolverConfig discrete(std::size_t ell) {
  SolverConfig c;
  c.lookahead = ell;
  return c;
}

// Second terminating policy: the cheapest finite control that moves to a
// lower index (or T), falling back to "a".
Policy greedy_policy(const testing_support::RandomInstance& inst) {
  Policy p;
  p.id = "greedy";
  p.action = [&inst](const State& x) {
    auto index = [](const State& y) { return y.token() == "T" ? -1 : std::stoi(y.token().substr(1)); };
    const ControlSet all = inst.problem.controls(x);
    Control best("a");
    Cost best_cost = inst.problem.cost(x, best);
    for (const auto& u : all.options()) {
      const Cost c = inst.problem.cost(x, u);
      if (index(inst.problem.step(x, u)) < index(x) && c < best_cost) {
        best = u;
        best_cost = c;
      }
    }
    return best;
  };
  return p;
}

}  // namespace

TEST_CASE("random runs satisfy the cost chain and descent exactly", "[property][engine]") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    auto inst = testing_support::random_instance(rng, 18, 4);
    std::vector<State> starts = inst.states;
    std::shuffle(starts.begin(), starts.end(), rng);
    const SampleSet set = testing_support::base_set(inst, {starts[0], starts[1]}, "S");
    const std::size_t ell = 1 + static_cast<std::size_t>(trial % 3);
    for (const auto& x : inst.states) {
      const Cost bound = solve_discrete(inst.problem, set, x, discrete(ell)).value;
      if (!bound.is_finite()) {
        CHECK_THROWS_AS(run_rollout(inst.problem, set, x, discrete(ell)), InitialInfeasibility);
        continue;
      }
      const RolloutRun run = run_rollout(inst.problem, set, x, discrete(ell));
      const RunCheck c = check_run(run, 0.0);
      INFO(c.detail);
      CHECK(c.chain_ok);
      CHECK(c.descent_ok);
      CHECK(run.initial_value() == bound);
      CHECK((run.status == RunStatus::kStoppingSet || run.status == RunStatus::kInsideSet));
      CHECK(run.total_cost() <= terminal_cost(set, x));
    }
  }
}

TEST_CASE("rollout never does worse than the base policy on its own trajectory", "[property][engine]") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = testing_support::random_instance(rng, 25, 4);
    const State x0 = inst.states.back();
    const Trajectory base = simulate_policy(inst.problem, inst.base, x0);
    const SampleSet set = build_from_trajectory(base, "S0");
    for (std::size_t ell = 1; ell <= 3; ++ell) {
      const RolloutRun run = run_rollout(inst.problem, set, x0, discrete(ell));
      CHECK(run.total_cost() <= trajectory_cost(base));
    }
  }
}

TEST_CASE("two policies: merged set improves on both", "[property][engine]") {
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 15; ++trial) {
    auto inst = testing_support::random_instance(rng, 20, 4);
    const Policy greedy = greedy_policy(inst);
    const State x0 = inst.states.back();
    const SampleSet a = build_from_trajectory(simulate_policy(inst.problem, inst.base, x0), "A");
    const SampleSet b = build_from_trajectory(simulate_policy(inst.problem, greedy, x0), "B");
    const SampleSet ab = merge({a, b}, "A+B");
    CHECK(terminal_cost(ab, x0) == std::min(terminal_cost(a, x0), terminal_cost(b, x0)));
    for (const auto& x : inst.states) {
      const Cost m = solve_discrete(inst.problem, ab, x, discrete(2)).value;
      CHECK(m <= solve_discrete(inst.problem, a, x, discrete(2)).value);
      CHECK(m <= solve_discrete(inst.problem, b, x, discrete(2)).value);
    }
    const RolloutRun run = run_rollout(inst.problem, ab, x0, discrete(2));
    CHECK(run.total_cost() <= terminal_cost(ab, x0));
  }
}

TEST_CASE("perturbed runs stay finite or are flagged", "[property][disturbance]") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = testing_support::random_instance(rng, 16, 4);
    const State x0 = inst.states.back();
    const SampleSet set = build_from_trajectory(simulate_policy(inst.problem, inst.base, x0), "S0");
    const State target = inst.states[std::uniform_int_distribution<std::size_t>(0, inst.states.size() - 1)(rng)];
    const bool reachable = solve_discrete(inst.problem, set, target, discrete(2)).value.is_finite();
    const Disturbance kick = [&](std::size_t k, const State&) -> std::optional<State> {
      if (k == 0) return target;
      return std::nullopt;
    };
    const RolloutRun run = run_with_disturbance(inst.problem, set, x0, discrete(2), kick);
    if (reachable) {
      CHECK((run.status == RunStatus::kStoppingSet || run.status == RunStatus::kInsideSet));
      CHECK(run.total_cost().is_finite());
    } else {
      CHECK(run.status == RunStatus::kInfeasibleAfterDisturbance);
    }
  }
}
