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


#include "rollout/lookahead.hpp"

#include <algorithm>
#include <utility>

#include "discrete_search.hpp"
#include "rollout/errors.hpp"
#include "rollout/shooting.hpp"

namespace rollout {

namespace detail {

Choice best_of(std::vector<Control> options, const ChildValue& child) {
  std::sort(options.begin(), options.end());
  Choice best;
  for (const auto& u : options) {
    auto [v, next] = child(u);
    if (v < best.value) best = Choice{v, u, std::move(next)};
  }
  return best;
}

DiscreteSearch::DiscreteSearch(const Problem& problem, const SampleSet& set, std::size_t max_depth, NodeRule rule)
    : problem_(problem), set_(set), max_depth_(max_depth), rule_(std::move(rule)), memo_(problem.state_tolerance) {}

Choice DiscreteSearch::node(const State& y, std::size_t depth) {
  const std::size_t slot = memo_.insert(y, std::vector<std::optional<Choice>>(max_depth_ + 1)).first;
  if (const auto& hit = memo_.at(slot).second[depth]) return *hit;
  Choice out;
  if (depth == 0) {
    out = Choice{terminal_cost(set_, y), std::nullopt, y};
  } else {
    ChildValue child = [&](const Control& u) -> std::pair<Cost, State> {
      const Cost g = problem_.cost(y, u);
      if (g.is_infinite()) return {Cost::infinity(), y};
      State next = problem_.step(y, u);
      return {g + value(next, depth - 1), std::move(next)};
    };
    out = rule_(y, depth, child);
  }
  memo_.at(slot).second[depth] = out;
  return out;
}

LookaheadSolution DiscreteSearch::solve(const State& x, std::size_t depth) {
  LookaheadSolution sol;
  for (std::size_t d = 0; d <= depth; ++d) sol.per_stage_values.push_back(value(x, d));
  sol.value = sol.per_stage_values.back();
  sol.terminal_state = x;
  if (sol.value.is_infinite()) {
    sol.status = SolveStatus::kInfeasible;
    return sol;
  }
  State y = x;
  for (std::size_t d = depth; d > 0; --d) {
    Choice c = node(y, d);
    sol.controls.push_back(*c.control);
    y = c.next;
  }
  sol.terminal_state = y;
  sol.status = SolveStatus::kOptimal;
  if (auto m = set_.lookup(y)) {
    sol.terminal_sample = m->entry;
    if (m->entry) {
      sol.continuation = set_.entries()[*m->entry].control;
    } else if (m->region && set_.regions()[*m->region].base_action) {
      sol.continuation = set_.regions()[*m->region].base_action(y);
    }
  }
  return sol;
}

}  // namespace detail

std::string to_string(Backend b) {
  switch (b) {
    case Backend::kDiscrete: return "discrete";
    case Backend::kContinuousShooting: return "continuous-shooting";
    case Backend::kHybridModeEnum: return "hybrid-mode-enum";
  }
  return "discrete";
}

Backend parse_backend(const std::string& s) {
  if (s == "discrete") return Backend::kDiscrete;
  if (s == "continuous-shooting" || s == "continuous") return Backend::kContinuousShooting;
  if (s == "hybrid-mode-enum" || s == "hybrid") return Backend::kHybridModeEnum;
  throw PreconditionViolation("unknown backend '" + s + "'");
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kIterationLimit: return "iteration_limit";
  }
  return "infeasible";
}

void SolverConfig::validate() const {
  if (lookahead == 0) throw PreconditionViolation("lookahead must be at least 1");
  if (!(terminal_tolerance > 0.0)) throw PreconditionViolation("terminal tolerance must be positive");
  if (!(gradient_tolerance > 0.0)) throw PreconditionViolation("gradient tolerance must be positive");
  if (max_iterations == 0 || max_penalty_rounds == 0) throw PreconditionViolation("iteration limits must be positive");
  if (!(penalty_growth > 1.0) || !(initial_penalty > 0.0)) throw PreconditionViolation("bad penalty schedule");
  if (guard_margin < 0.0) throw PreconditionViolation("guard margin must be nonnegative");
}

LookaheadSolution solve_discrete(const Problem& problem, const SampleSet& set, const State& x,
                                 const SolverConfig& cfg) {
  cfg.validate();
  detail::DiscreteSearch search(problem, set, cfg.lookahead,
                                [&](const State& y, std::size_t, const detail::ChildValue& child) {
                                  const ControlSet us = problem.controls(y);
                                  if (!us.is_finite()) {
                                    throw PreconditionViolation("discrete backend needs finite U at " + to_string(y));
                                  }
                                  return detail::best_of(us.options(), child);
                                });
  return search.solve(x, cfg.lookahead);
}

Cost evaluate_sequence(const Problem& problem, const SampleSet& set, const State& x,
                       const std::vector<Control>& controls, double terminal_tol, State* terminal) {
  State y = x;
  Cost total = Cost::zero();
  for (const auto& u : controls) {
    if (!problem.controls(y).contains(u)) return Cost::infinity();
    const Cost g = problem.cost(y, u);
    if (g.is_infinite()) return g;
    total += g;
    y = problem.step(y, u);
  }
  total += terminal_cost(set, y, terminal_tol);
  if (terminal != nullptr) *terminal = y;
  return total;
}

namespace {

std::vector<ShootingTerminal> terminals_of(const SampleSet& set, const std::vector<TerminalTarget>& targets) {
  std::vector<ShootingTerminal> out;
  for (const auto& t : targets) out.push_back(ShootingTerminal{&t, nullptr, t.value.value()});
  for (const auto& r : set.regions()) {
    if (r.smooth) out.push_back(ShootingTerminal{nullptr, &*r.smooth, 0.0});
  }
  return out;
}

LookaheadSolution continuous_search(const Problem& problem, const SampleSet& set, const State& x,
                                    const SolverConfig& cfg, const std::vector<Control>* warm_start,
                                    const std::optional<Box>& box) {
  cfg.validate();
  if (!problem.shooting) throw PreconditionViolation("problem '" + problem.name + "' has no shooting model");
  if (!x.is_vector()) throw PreconditionViolation("continuous backends need vector states");
  const std::vector<TerminalTarget> targets = set.terminal_targets();
  const auto terminals = terminals_of(set, targets);
  const double tol = cfg.terminal_tolerance;
  SequenceEvaluator evaluate = [&](const std::vector<Control>& us, State* terminal) {
    return evaluate_sequence(problem, set, x, us, tol, terminal);
  };
  LookaheadSolution sol = search_shooting(problem, x, terminals, evaluate, cfg, warm_start, box);
  if (sol.feasible()) {
    if (auto m = set.lookup(sol.terminal_state, tol)) {
      if (m->entry) {
        sol.terminal_sample = m->entry;
        sol.continuation = set.entries()[*m->entry].control;
      } else if (m->region) {
        const auto& reg = set.regions()[*m->region];
        if (reg.base_action) sol.continuation = reg.base_action(sol.terminal_state);
      }
    }
  }
  return sol;
}

}  // namespace

LookaheadSolution solve_continuous(const Problem& problem, const SampleSet& set, const State& x,
                                   const SolverConfig& cfg, const std::vector<Control>* warm_start) {
  return continuous_search(problem, set, x, cfg, warm_start, std::nullopt);
}

LookaheadSolution solve_lookahead(const Problem& problem, const SampleSet& set, const State& x,
                                  const SolverConfig& cfg, const std::vector<Control>* warm_start) {
  if (cfg.backend == Backend::kDiscrete) return solve_discrete(problem, set, x, cfg);
  return solve_continuous(problem, set, x, cfg, warm_start);
}

std::vector<std::vector<Cost>> vi_sequence(const Problem& problem, const SampleSet& set,
                                           const std::vector<State>& states, std::size_t lookahead) {
  detail::DiscreteSearch search(problem, set, lookahead,
                                [&](const State& y, std::size_t, const detail::ChildValue& child) {
                                  return detail::best_of(problem.controls(y).options(), child);
                                });
  std::vector<std::vector<Cost>> rows;
  for (const auto& x : states) {
    std::vector<Cost> row;
    for (std::size_t d = 0; d <= lookahead; ++d) row.push_back(search.value(x, d));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::optional<Control> member_base_action(const SampleSet& set, const State& y, double tol) {
  auto m = set.lookup(y, tol);
  if (!m) return std::nullopt;
  if (m->entry) return set.entries()[*m->entry].control;
  const auto& reg = set.regions()[*m->region];
  if (reg.base_action) return reg.base_action(y);
  return std::nullopt;
}

}  // namespace

LookaheadSolution solve_restricted(const Problem& problem, const SampleSet& set, const State& x,
                                   const RestrictedControls& restricted, const SolverConfig& cfg) {
  cfg.validate();
  if (cfg.backend == Backend::kDiscrete) {
    detail::DiscreteSearch search(
        problem, set, cfg.lookahead, [&](const State& y, std::size_t, const detail::ChildValue& child) {
          const ControlSet sub = restricted(y);
          if (!sub.is_finite() || sub.empty()) {
            throw PreconditionViolation("restricted control set at " + to_string(y) + " must be finite and nonempty");
          }
          const ControlSet full = problem.controls(y);
          for (const auto& u : sub.options()) {
            if (!full.contains(u)) {
              throw PreconditionViolation("restricted control " + to_string(u) + " not in U(" + to_string(y) + ")");
            }
          }
          if (auto base = member_base_action(set, y, set.tolerance()); base && !sub.contains(*base)) {
            throw PreconditionViolation("base action " + to_string(*base) + " missing from restricted set at " +
                                        to_string(y));
          }
          return detail::best_of(sub.options(), child);
        });
    return search.solve(x, cfg.lookahead);
  }
  const ControlSet sub = restricted(x);
  if (sub.is_finite()) throw PreconditionViolation("shooting backends need a box restriction");
  if (auto base = member_base_action(set, x, cfg.terminal_tolerance); base && !sub.contains(*base)) {
    throw PreconditionViolation("base action " + to_string(*base) + " missing from restricted box at " +
                                to_string(x));
  }
  return continuous_search(problem, set, x, cfg, nullptr, sub.box());
}

}  // namespace rollout
