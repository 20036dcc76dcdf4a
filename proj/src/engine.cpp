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


#include "rollout/engine.hpp"

#include <algorithm>
#include <sstream>
#include <utility>

#include "discrete_search.hpp"
#include "rollout/errors.hpp"
#include "rollout/shooting.hpp"

namespace rollout {

namespace {

using StepSolver = std::function<LookaheadSolution(const State&, const std::vector<Control>*)>;

struct LoopSpec {
  const SampleSet* set = nullptr;  // null for the classical baseline
  const Disturbance* disturbance = nullptr;
  std::string policy_id;
};

std::optional<std::vector<Control>> shifted(const LookaheadSolution& sol) {
  if (sol.controls.empty() || !sol.continuation) return std::nullopt;
  std::vector<Control> out(sol.controls.begin() + 1, sol.controls.end());
  out.push_back(*sol.continuation);
  return out;
}

RolloutRun closed_loop(const Problem& problem, const State& x0, const SolverConfig& cfg, const RunOptions& opts,
                       const StepSolver& solve, const LoopSpec& spec) {
  if (opts.horizon == 0) throw PreconditionViolation("horizon must be at least 1");
  cfg.validate();
  const double close_tol = cfg.backend == Backend::kDiscrete || spec.set == nullptr
                               ? problem.state_tolerance
                               : cfg.terminal_tolerance;
  RolloutRun run;
  run.config = cfg;
  run.trajectory.policy_id = spec.policy_id;
  run.trajectory.states.push_back(x0);
  if (spec.set != nullptr) run.initial_bound = terminal_cost(*spec.set, x0, close_tol);

  State x = x0;
  std::optional<std::vector<Control>> warm;
  bool disturbed = false;
  bool finished = false;

  // At step 0 only the stopping test applies, so J-tilde(x0) is always solved.
  auto try_close = [&](bool allow_inside) {
    if (problem.is_stopping(x)) {
      run.status = RunStatus::kStoppingSet;
      run.closing_tail = Cost::zero();
      return true;
    }
    if (allow_inside && spec.set != nullptr) {
      if (auto m = spec.set->lookup(x, close_tol); m && m->value.value() <= opts.tail_tolerance) {
        run.status = RunStatus::kInsideSet;
        run.closing_tail = m->value;
        return true;
      }
    }
    return false;
  };

  for (std::size_t k = 0; k < opts.horizon && !finished; ++k) {
    if (try_close(k > 0)) {
      finished = true;
      break;
    }
    LookaheadSolution sol = solve(x, warm ? &*warm : nullptr);
    if (!sol.feasible()) {
      if (disturbed) {
        run.status = RunStatus::kInfeasibleAfterDisturbance;
        run.reports.push_back(StepReport{k, sol.value, sol.status, sol.subproblems, std::nullopt, true});
        finished = true;
        break;
      }
      if (k == 0) throw InitialInfeasibility("lookahead value is +inf at the initial state " + to_string(x));
      throw SolverFailure("lookahead became infeasible at step " + std::to_string(k) + ", state " + to_string(x));
    }
    run.per_step_values.push_back(sol.value);
    run.reports.push_back(StepReport{k, sol.value, sol.status, sol.subproblems, sol.terminal_sample, disturbed});
    if (spec.set == nullptr && sol.value.value() <= opts.tail_tolerance) {
      run.status = RunStatus::kConverged;
      run.closing_tail = Cost::zero();
      finished = true;
      break;
    }
    const Control u = sol.controls.front();
    const Cost g = problem.cost(x, u);
    State y = problem.step(x, u);
    run.trajectory.controls.push_back(u);
    run.trajectory.stage_costs.push_back(g);
    warm = shifted(sol);
    disturbed = false;
    if (spec.disturbance != nullptr && *spec.disturbance) {
      if (auto z = (*spec.disturbance)(k, y)) {
        y = std::move(*z);
        warm.reset();
        disturbed = true;
      }
    }
    run.trajectory.states.push_back(y);
    x = std::move(y);
  }
  if (!finished) {
    if (try_close(true)) {
      finished = true;
    } else {
      run.status = RunStatus::kHorizon;
    }
  }
  auto& traj = run.trajectory;
  if (run.status == RunStatus::kStoppingSet) traj.termination = Termination::kStoppingSet;
  if (run.status == RunStatus::kStoppingSet || run.status == RunStatus::kInsideSet) {
    const std::size_t n = traj.steps();
    std::vector<Cost> tail(n + 1, run.closing_tail);
    for (std::size_t k = n; k-- > 0;) tail[k] = traj.stage_costs[k] + tail[k + 1];
    traj.tail_costs = std::move(tail);
  }
  return run;
}

}  // namespace

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::kStoppingSet: return "stopping_set";
    case RunStatus::kInsideSet: return "inside_set";
    case RunStatus::kConverged: return "converged";
    case RunStatus::kHorizon: return "horizon";
    case RunStatus::kInfeasibleAfterDisturbance: return "infeasible_after_disturbance";
  }
  return "horizon";
}

RunStatus parse_run_status(const std::string& s) {
  for (auto v : {RunStatus::kStoppingSet, RunStatus::kInsideSet, RunStatus::kConverged, RunStatus::kHorizon,
                 RunStatus::kInfeasibleAfterDisturbance}) {
    if (to_string(v) == s) return v;
  }
  throw std::invalid_argument("unknown run status '" + s + "'");
}

RolloutRun run_rollout(const Problem& problem, const SampleSet& set, const State& x0, const SolverConfig& cfg,
                       const RunOptions& opts) {
  StepSolver solve = [&](const State& x, const std::vector<Control>* warm) {
    return solve_lookahead(problem, set, x, cfg, warm);
  };
  return closed_loop(problem, x0, cfg, opts, solve, LoopSpec{&set, nullptr, "rollout"});
}

std::vector<std::string> split_components(const std::string& token) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : token) {
    if (c == ',') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::string join_components(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "," : "") + parts[i];
  return out;
}

LookaheadSolution solve_multiagent(const Problem& problem, const Policy& base, const SampleSet& set, const State& x,
                                   const SolverConfig& cfg, const AgentPartition& partition, std::size_t sweeps) {
  cfg.validate();
  if (cfg.backend != Backend::kDiscrete) throw PreconditionViolation("agent-by-agent rollout needs the discrete backend");
  if (sweeps == 0) throw PreconditionViolation("at least one sweep is required");
  auto rule = [&](const State& y, std::size_t, const detail::ChildValue& child) {
    const ControlSet us = problem.controls(y);
    if (!us.is_finite()) throw PreconditionViolation("agent-by-agent rollout needs finite control sets");
    std::vector<Control> options = us.options();
    std::sort(options.begin(), options.end());
    const Control start = base(y);
    if (!us.contains(start)) {
      throw PreconditionViolation("base action " + to_string(start) + " not in U(" + to_string(y) + ")");
    }
    std::vector<std::vector<std::string>> parts;
    parts.reserve(options.size());
    for (const auto& u : options) parts.push_back(split_components(u.token()));
    auto [v0, next0] = child(start);
    detail::Choice best{v0, start, std::move(next0)};
    for (std::size_t s = 0; s < sweeps; ++s) {
      for (const auto& block : partition) {
        const auto inc = split_components(best.control->token());
        for (std::size_t i = 0; i < options.size(); ++i) {
          if (options[i] == *best.control || parts[i].size() != inc.size()) continue;
          bool on_line = true;
          for (std::size_t c = 0; c < inc.size() && on_line; ++c) {
            const bool owned = std::find(block.begin(), block.end(), c) != block.end();
            if (!owned && parts[i][c] != inc[c]) on_line = false;
          }
          if (!on_line) continue;
          auto [v, next] = child(options[i]);
          if (v < best.value || (v == best.value && v.is_finite() && options[i] < *best.control)) {
            best = detail::Choice{v, options[i], std::move(next)};
          }
        }
      }
    }
    if (best.value.is_infinite()) best.control.reset();
    return best;
  };
  detail::DiscreteSearch search(problem, set, cfg.lookahead, rule);
  return search.solve(x, cfg.lookahead);
}

RolloutRun run_multiagent(const Problem& problem, const Policy& base, const SampleSet& set, const State& x0,
                          const SolverConfig& cfg, const AgentPartition& partition, std::size_t sweeps,
                          const RunOptions& opts) {
  StepSolver solve = [&](const State& x, const std::vector<Control>* warm) {
    LookaheadSolution sol = solve_multiagent(problem, base, set, x, cfg, partition, sweeps);
    if (warm != nullptr) {
      State terminal;
      const Cost v = evaluate_sequence(problem, set, x, *warm, set.tolerance(), &terminal);
      if (v < sol.value) {
        sol.controls = *warm;
        sol.value = v;
        sol.terminal_state = terminal;
        sol.per_stage_values.clear();
        sol.status = SolveStatus::kOptimal;
        sol.terminal_sample.reset();
        sol.continuation.reset();
        if (auto m = set.lookup(terminal)) {
          sol.terminal_sample = m->entry;
          if (m->entry) sol.continuation = set.entries()[*m->entry].control;
        }
      }
    }
    return sol;
  };
  return closed_loop(problem, x0, cfg, opts, solve, LoopSpec{&set, nullptr, "multiagent-rollout"});
}

RolloutRun run_classical_mpc(const Problem& problem, const std::optional<SmoothTerminal>& terminal, const State& x0,
                             const SolverConfig& cfg, const RunOptions& opts) {
  if (!problem.shooting) throw PreconditionViolation("classical MPC needs a shooting model");
  const std::vector<ShootingTerminal> terminals{
      ShootingTerminal{nullptr, terminal ? &*terminal : nullptr, 0.0}};
  StepSolver solve = [&](const State& x, const std::vector<Control>* warm) {
    SequenceEvaluator evaluate = [&](const std::vector<Control>& us, State* end) {
      State y = x;
      Cost total = Cost::zero();
      for (const auto& u : us) {
        if (!problem.controls(y).contains(u)) return Cost::infinity();
        total += problem.cost(y, u);
        if (total.is_infinite()) return total;
        y = problem.step(y, u);
      }
      if (terminal) {
        if (terminal->membership.violation(y.vec()) > 0.0) return Cost::infinity();
        total += Cost(std::max(0.0, terminal->value(y.vec())));
      }
      if (end != nullptr) *end = y;
      return total;
    };
    return search_shooting(problem, x, terminals, evaluate, cfg, warm);
  };
  // The baseline has no base policy to continue with; repeat a zero control.
  StepSolver with_shift = [&](const State& x, const std::vector<Control>* warm) {
    LookaheadSolution sol = solve(x, warm);
    if (sol.feasible()) {
      const Box& box = problem.shooting->control_box;
      sol.continuation = Control(box.project(Vector::Zero(box.lo.size())));
    }
    return sol;
  };
  return closed_loop(problem, x0, cfg, opts, with_shift, LoopSpec{nullptr, nullptr, "classical-mpc"});
}

RolloutRun run_with_disturbance(const Problem& problem, const SampleSet& set, const State& x0,
                                const SolverConfig& cfg, const Disturbance& disturbance, const RunOptions& opts) {
  StepSolver solve = [&](const State& x, const std::vector<Control>* warm) {
    return solve_lookahead(problem, set, x, cfg, warm);
  };
  return closed_loop(problem, x0, cfg, opts, solve, LoopSpec{&set, &disturbance, "rollout"});
}

RunCheck check_run(const RolloutRun& run, double rel_tol) {
  RunCheck check;
  std::ostringstream detail;
  auto within = [&](Cost lhs, Cost rhs) {
    if (rhs.is_infinite()) return true;
    if (lhs.is_infinite()) return false;
    return lhs.value() <= rhs.value() + rel_tol * std::max({1.0, lhs.value(), rhs.value()});
  };
  const Cost total = run.total_cost();
  const Cost first = run.initial_value();
  if (!within(total, first)) {
    check.chain_ok = false;
    detail << "closed-loop cost " << to_string(total) << " exceeds J~(x0) " << to_string(first) << "; ";
  }
  if (!within(first, run.initial_bound)) {
    check.chain_ok = false;
    detail << "J~(x0) " << to_string(first) << " exceeds J-bar(x0) " << to_string(run.initial_bound) << "; ";
  }
  if (run.status == RunStatus::kHorizon) detail << "run hit the horizon; closed-loop cost is partial; ";
  for (std::size_t k = 1; k < run.per_step_values.size(); ++k) {
    if (k < run.reports.size() && run.reports[k].disturbed) continue;
    const Cost a = run.per_step_values[k - 1];
    const Cost b = run.per_step_values[k];
    if (a.is_infinite()) continue;
    const double inc = b.is_infinite() ? std::numeric_limits<double>::infinity() : b.value() - a.value();
    check.worst_increase = std::max(check.worst_increase, inc);
    if (!within(b, a)) {
      check.descent_ok = false;
      detail << "J~ rose at step " << k << " from " << to_string(a) << " to " << to_string(b) << "; ";
    }
  }
  check.detail = detail.str();
  return check;
}

}  // namespace rollout
