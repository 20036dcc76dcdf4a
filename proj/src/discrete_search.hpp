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


// Memoized depth-limited Bellman recursion shared by the discrete solvers.

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "rollout/lookahead.hpp"
#include "rollout/problem.hpp"
#include "rollout/sample_set.hpp"

namespace rollout::detail {

struct Choice {
  Cost value = Cost::infinity();
  std::optional<Control> control;
  State next;
};

/// g(y, u) + J_{d-1}(f(y, u)) together with f(y, u).
using ChildValue = std::function<std::pair<Cost, State>(const Control&)>;

/// Picks the control at node (y, d) given the child evaluator.
using NodeRule = std::function<Choice(const State& y, std::size_t depth, const ChildValue& child)>;

/// Minimum over `options`, scanned in increasing order; strict improvement
/// only, so ties keep the smallest control.
Choice best_of(std::vector<Control> options, const ChildValue& child);

/// J_0 = J-bar, J_d(y) = rule(y, d) with memoization on (state, depth).
class DiscreteSearch {
 public:
  DiscreteSearch(const Problem& problem, const SampleSet& set, std::size_t max_depth, NodeRule rule);

  Choice node(const State& y, std::size_t depth);
  Cost value(const State& y, std::size_t depth) { return node(y, depth).value; }

  /// Minimizing sequence of the depth-d problem from x; empty if infeasible.
  LookaheadSolution solve(const State& x, std::size_t depth);

 private:
  const Problem& problem_;
  const SampleSet& set_;
  std::size_t max_depth_;
  NodeRule rule_;
  StateMap<std::vector<std::optional<Choice>>> memo_;
};

}  // namespace rollout::detail
