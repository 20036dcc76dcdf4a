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


// Shared fixtures: random finite problems and an unmemoized lookahead oracle.

#pragma once

#include <cstddef>
#include <memory>
#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "rollout/problem.hpp"
#include "rollout/sample_set.hpp"
#include "rollout/trajectory.hpp"

#ifdef CATCH_VERSION_MAJOR
template <>
struct Catch::StringMaker<rollout::Cost> {
  static std::string convert(rollout::Cost c) { return rollout::to_string(c); }
};
#endif

namespace testing_support {

using namespace rollout;

/// Random finite problem on states s00..s{n-1} plus the stopping state T.
/// Control "a" is the base action and always moves to a lower-numbered
/// state (or T from s00) at finite cost, so the base policy terminates from
/// everywhere. Other controls jump anywhere; some of them cost +inf.
struct RandomInstance {
  Problem problem;
  Policy base;
  std::vector<State> states;
};

inline std::string state_name(int i) {
  std::string s = std::to_string(i);
  return "s" + std::string(s.size() < 2 ? 2 - s.size() : 0, '0') + s;
}

inline RandomInstance random_instance(std::mt19937_64& rng, int n, int max_controls) {
  struct Table {
    // next[i][c] = successor index, n meaning T; cost < 0 means +inf.
    std::vector<std::vector<int>> next;
    std::vector<std::vector<int>> cost;
  };
  auto t = std::make_shared<Table>();
  std::uniform_int_distribution<int> ncontrols(1, max_controls);
  std::uniform_int_distribution<int> any(0, n);
  std::uniform_int_distribution<int> price(0, 9);
  std::bernoulli_distribution blocked(0.15);
  for (int i = 0; i < n; ++i) {
    const int k = ncontrols(rng);
    std::vector<int> nx(static_cast<std::size_t>(k)), c(static_cast<std::size_t>(k));
    nx[0] = i == 0 ? n : std::uniform_int_distribution<int>(0, i)(rng);
    if (nx[0] == i) nx[0] = n;  // lower index or T
    c[0] = price(rng);
    for (int j = 1; j < k; ++j) {
      nx[static_cast<std::size_t>(j)] = any(rng);
      c[static_cast<std::size_t>(j)] = blocked(rng) ? -1 : price(rng);
    }
    t->next.push_back(nx);
    t->cost.push_back(c);
  }
  auto index = [n](const State& x) {
    return x.token() == "T" ? n : std::stoi(x.token().substr(1));
  };
  auto slot = [](const Control& u) { return static_cast<std::size_t>(u.token().at(0) - 'a'); };

  RandomInstance out;
  Problem& p = out.problem;
  p.name = "random";
  p.stopping = [](const State& x) { return x.token() == "T"; };
  p.controls = [t, index, n](const State& x) {
    const int i = index(x);
    std::vector<Control> us;
    const std::size_t k = i == n ? 1 : t->next[static_cast<std::size_t>(i)].size();
    for (std::size_t j = 0; j < k; ++j) us.emplace_back(std::string(1, static_cast<char>('a' + j)));
    return ControlSet(std::move(us));
  };
  p.dynamics = [t, index, slot, n](const State& x, const Control& u) {
    const int i = index(x);
    if (i == n) return x;
    const int j = t->next[static_cast<std::size_t>(i)][slot(u)];
    return j == n ? State("T") : State(state_name(j));
  };
  p.stage_cost = [t, index, slot, n](const State& x, const Control& u) {
    const int i = index(x);
    if (i == n) return Cost::zero();
    const int c = t->cost[static_cast<std::size_t>(i)][slot(u)];
    return c < 0 ? Cost::infinity() : Cost(double(c));
  };
  out.base.id = "mu0";
  out.base.action = [](const State&) { return Control("a"); };
  for (int i = 0; i < n; ++i) out.states.emplace_back(state_name(i));
  return out;
}

/// Set built from base trajectories started at `starts`.
inline SampleSet base_set(const RandomInstance& inst, const std::vector<State>& starts, const std::string& label) {
  std::vector<SampleSet> parts;
  for (const auto& s : starts) parts.push_back(build_from_trajectory(simulate_policy(inst.problem, inst.base, s)));
  return merge(parts, label);
}

/// Exhaustive l-step lookahead: every control sequence in lexicographic
/// order, each valued as g_0 + (g_1 + (... + J-bar(x_l))). Keeps the first
/// strict minimum.
struct BruteResult {
  Cost value = Cost::infinity();
  std::vector<Control> controls;
};

inline void brute_walk(const Problem& p, const SampleSet& set, const State& y, std::size_t left,
                       std::vector<Control>& seq, std::vector<Cost>& costs, BruteResult& best) {
  if (left == 0) {
    Cost v = terminal_cost(set, y);
    for (auto it = costs.rbegin(); it != costs.rend(); ++it) v = *it + v;
    if (v < best.value) best = {v, seq};
    return;
  }
  std::vector<Control> us = p.controls(y).options();
  std::sort(us.begin(), us.end());
  for (const auto& u : us) {
    seq.push_back(u);
    costs.push_back(p.cost(y, u));
    brute_walk(p, set, p.step(y, u), left - 1, seq, costs, best);
    seq.pop_back();
    costs.pop_back();
  }
}

inline BruteResult brute_lookahead(const Problem& p, const SampleSet& set, const State& x, std::size_t ell) {
  BruteResult best;
  std::vector<Control> seq;
  std::vector<Cost> costs;
  brute_walk(p, set, x, ell, seq, costs, best);
  return best;
}

}  // namespace testing_support
