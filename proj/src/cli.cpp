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


#include "rollout/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <sstream>
#include <thread>

#include "rollout/errors.hpp"
#include "rollout/io.hpp"

namespace rollout::cli {

namespace {

bool token_instance(const std::string& name) { return name == "two-vehicle" || name == "tsp"; }

std::vector<std::string> variants_of(const std::string& instance) {
  if (instance == "hybrid") return {"basic", "classical-mpc", "disturbance"};
  if (instance == "double-integrator") return {"basic", "augmented", "classical-mpc", "disturbance"};
  if (instance == "two-vehicle") return {"basic", "multiagent", "disturbance"};
  if (instance == "tsp") return {"basic", "multi-policy", "disturbance"};
  throw PreconditionViolation("unknown instance '" + instance + "'");
}

Vector parse_numbers(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw PreconditionViolation("not a number list: '" + text + "'");
    }
  }
  return Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

State parse_state(const std::string& instance, const std::string& text, Eigen::Index dim) {
  if (token_instance(instance)) return State(text);
  Vector v = parse_numbers(text);
  if (v.size() != dim) {
    throw PreconditionViolation("state '" + text + "' needs " + std::to_string(dim) + " coordinates");
  }
  return State(std::move(v));
}

SolverConfig solver_for(const ExperimentConfig& cfg, std::size_t default_ell, Backend default_backend) {
  SolverConfig s;
  s.lookahead = cfg.lookahead.value_or(default_ell);
  s.backend = cfg.backend ? parse_backend(*cfg.backend) : default_backend;
  s.max_iterations = cfg.max_iterations;
  s.terminal_tolerance = cfg.terminal_tolerance;
  s.seed = cfg.seed;
  s.threads = cfg.threads;
  s.validate();
  return s;
}

SolverConfig mpc_solver_for(const ExperimentConfig& cfg, Backend backend) {
  SolverConfig s = solver_for(cfg, cfg.mpc_lookahead, backend);
  s.lookahead = cfg.mpc_lookahead;
  s.validate();
  return s;
}

Cost simulated_cost(const Problem& problem, const Policy& policy, const State& x0) {
  if (policy.has_analytic_cost()) return policy.analytic_cost(x0);
  try {
    const Trajectory t = simulate_policy(problem, policy, x0);
    return t.has_tail_costs() ? trajectory_cost(t) : Cost::infinity();
  } catch (const InfeasibleTrajectory&) {
    return Cost::infinity();
  } catch (const ConstraintViolation&) {
    return Cost::infinity();
  }
}

void require_variant(const ExperimentConfig& cfg) {
  const auto vs = variants_of(cfg.instance);
  if (std::find(vs.begin(), vs.end(), cfg.variant) == vs.end()) {
    std::string list;
    for (const auto& v : vs) list += (list.empty() ? "" : ", ") + v;
    throw PreconditionViolation("variant '" + cfg.variant + "' is not available for " + cfg.instance +
                                " (choose from " + list + ")");
  }
  if (cfg.variant == "disturbance" && cfg.disturb_delta.empty() && !cfg.disturb_state) {
    throw PreconditionViolation("the disturbance variant needs --disturb-delta or --disturb-state");
  }
}

// Appends base-policy trajectories from the extra seed states.
SampleSet with_extra_seeds(const Problem& problem, const Policy& policy, const ExperimentConfig& cfg,
                           SampleSet set) {
  if (cfg.extra_seeds.empty()) return set;
  std::vector<SampleSet> parts{std::move(set)};
  std::string label = parts.front().label();
  for (const auto& s : cfg.extra_seeds) {
    const State x = parse_state(cfg.instance, s, 2);
    parts.push_back(build_from_trajectory(simulate_policy(problem, policy, x), "tail-" + s, problem.state_tolerance));
    label += "+" + s;
  }
  return merge(parts, label);
}

void write_outputs(const ExperimentConfig& cfg, const Experiment& ex, const RolloutRun& run) {
  if (!cfg.run_json.empty()) write_file_atomic(cfg.run_json, run_to_json(run).dump(2) + "\n");
  if (!cfg.trajectory_csv.empty()) write_file_atomic(cfg.trajectory_csv, trajectory_to_csv(run.trajectory));
  if (!cfg.set_json.empty()) write_file_atomic(cfg.set_json, sample_set_to_json(ex.set).dump(2) + "\n");
  if (!cfg.summary_file.empty()) append_summary(cfg.summary_file, summarize(cfg.instance, cfg.variant, run));
}

std::string fixed4(Cost c) {
  if (c.is_infinite()) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", c.value());
  return buf;
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const InitialInfeasibility& e) {
    err << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const InfeasibleSeed& e) {
    err << "infeasible seed: " << e.what() << "\n";
    return kInfeasible;
  } catch (const InfeasibleTrajectory& e) {
    err << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const SolverFailure& e) {
    err << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const SearchTooLarge& e) {
    err << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const CoverageError& e) {
    err << "property violation: " << e.what() << "\n";
    return kPropertyViolation;
  } catch (const PreconditionViolation& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace

Experiment build_experiment(const ExperimentConfig& cfg) {
  require_variant(cfg);
  Experiment ex;
  const std::string& v = cfg.variant;

  if (cfg.instance == "hybrid") {
    HybridSpiral h = make_hybrid_spiral();
    ex.problem = h.problem;
    ex.base = h.base;
    ex.x0 = cfg.x0 ? parse_state(cfg.instance, *cfg.x0, 2) : h.table_initial_states.front();
    ex.solver = solver_for(cfg, 5, Backend::kHybridModeEnum);
    if (cfg.explicit_samples) {
      ex.set = build_from_trajectory(simulate_policy(ex.problem, ex.base, ex.x0), "S0");
      ex.set.set_analytic_backed(true);
    } else {
      ex.set = h.analytic_set;
    }
    ex.base_cost = ex.base.analytic_cost(ex.x0);
    ex.mpc_solver = mpc_solver_for(cfg, ex.solver.backend);
    if (cfg.mpc_analytic_terminal) ex.mpc_terminal = h.analytic_set.regions().front().smooth;
  } else if (cfg.instance == "double-integrator") {
    ConstrainedDoubleIntegrator d = make_constrained_double_integrator(cfg.integrator);
    ex.problem = d.problem;
    ex.base = d.base;
    ex.x0 = cfg.x0 ? parse_state(cfg.instance, *cfg.x0, 2) : d.x0;
    ex.solver = solver_for(cfg, d.lookahead, Backend::kContinuousShooting);
    const Trajectory seed = simulate_policy(ex.problem, ex.base, ex.x0);
    ex.base_cost = seed.has_tail_costs() ? trajectory_cost(seed) : Cost::infinity();
    ex.mpc_solver = mpc_solver_for(cfg, Backend::kContinuousShooting);
    if (v == "augmented") {
      ex.budget = d.budget;
      ex.set = augment_sample_set(seed, d.budget, "S0");
      ex.problem = augment_problem(d.problem, d.budget);
      ex.base = augment_policy(d.base);
      ex.x0 = make_augmented(ex.x0, d.budget.budget);
    } else {
      ex.set = build_from_trajectory(seed, "S0");
    }
  } else if (cfg.instance == "two-vehicle") {
    TwoVehicleGrid g = make_two_vehicle_grid(cfg.grid);
    ex.problem = g.problem;
    ex.base = g.base;
    ex.partition = g.partition;
    ex.x0 = cfg.x0 ? parse_state(cfg.instance, *cfg.x0, 0) : g.x0;
    ex.solver = solver_for(cfg, g.lookahead, Backend::kDiscrete);
    ex.set = build_from_trajectory(simulate_policy(ex.problem, ex.base, ex.x0), "S0");
    ex.set = with_extra_seeds(ex.problem, ex.base, cfg, std::move(ex.set));
    ex.base_cost = simulated_cost(ex.problem, ex.base, ex.x0);
  } else if (cfg.instance == "tsp") {
    TspInstance t = make_tsp_variant();
    ex.problem = t.problem;
    ex.base = t.mu0;
    ex.policies.emplace(t.mu1.id, t.mu1);
    ex.x0 = cfg.x0 ? parse_state(cfg.instance, *cfg.x0, 0) : t.start;
    ex.solver = solver_for(cfg, 2, Backend::kDiscrete);
    SampleSet s0 = build_from_trajectory(simulate_policy(ex.problem, t.mu0, ex.x0), "S0");
    if (v == "multi-policy") {
      SampleSet s1 = build_from_trajectory(simulate_policy(ex.problem, t.mu1, ex.x0), "S1");
      ex.set = merge({s0, s1}, "S0+S1");
    } else {
      ex.set = std::move(s0);
    }
    ex.set = with_extra_seeds(ex.problem, ex.base, cfg, std::move(ex.set));
    ex.base_cost = simulated_cost(ex.problem, ex.base, ex.x0);
  } else {
    throw PreconditionViolation("unknown instance '" + cfg.instance + "'");
  }
  ex.policies.emplace(ex.base.id, ex.base);
  if (!cfg.load_set.empty()) {
    ex.set = sample_set_from_json(json::parse(read_file(cfg.load_set)));
    if (!cfg.trusted) {
      const InvarianceReport rep = verify_invariance(ex.problem, ex.policies, ex.set, kDefaultInvarianceSamples, cfg.seed);
      if (!rep.passed) {
        const auto& v0 = rep.violations.front();
        throw CoverageError(to_string(v0.state), "loaded set is not invariant at " + to_string(v0.state) + ": " +
                                                     v0.reason);
      }
    }
  }
  if (ex.solver.backend != Backend::kDiscrete && !ex.problem.shooting) {
    throw PreconditionViolation("instance " + cfg.instance + " supports only the discrete backend");
  }
  if (ex.solver.backend == Backend::kDiscrete && !token_instance(cfg.instance)) {
    throw PreconditionViolation("instance " + cfg.instance + " needs a shooting backend");
  }
  return ex;
}

RolloutRun execute(const Experiment& ex, const ExperimentConfig& cfg) {
  RunOptions opts;
  opts.horizon = cfg.horizon;
  const std::string& v = cfg.variant;
  if (v == "multiagent") {
    return run_multiagent(ex.problem, ex.base, ex.set, ex.x0, ex.solver, ex.partition, cfg.sweeps, opts);
  }
  if (v == "classical-mpc") {
    if (!ex.mpc_solver) throw PreconditionViolation("instance " + cfg.instance + " has no MPC baseline");
    return run_classical_mpc(ex.problem, ex.mpc_terminal, ex.x0, *ex.mpc_solver, opts);
  }
  if (v == "disturbance") {
    const std::size_t when = cfg.disturb_step;
    const auto delta = cfg.disturb_delta;
    std::optional<State> replacement;
    if (cfg.disturb_state) {
      replacement = parse_state(cfg.instance, *cfg.disturb_state, ex.x0.is_vector() ? ex.x0.vec().size() : 0);
    }
    Disturbance d = [when, delta, replacement](std::size_t k, const State& next) -> std::optional<State> {
      if (k != when) return std::nullopt;
      if (replacement) return replacement;
      if (!next.is_vector() || static_cast<std::size_t>(next.vec().size()) != delta.size()) {
        throw PreconditionViolation("disturbance size does not match the state");
      }
      return State(Vector(next.vec() + Eigen::Map<const Vector>(delta.data(), next.vec().size())));
    };
    return run_with_disturbance(ex.problem, ex.set, ex.x0, ex.solver, d, opts);
  }
  return run_rollout(ex.problem, ex.set, ex.x0, ex.solver, opts);
}

int cmd_run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Experiment ex = build_experiment(cfg);
    const RolloutRun run = execute(ex, cfg);
    write_outputs(cfg, ex, run);

    const bool mpc = cfg.variant == "classical-mpc";
    const bool disturbed = cfg.variant == "disturbance";
    out << "instance " << cfg.instance << ", variant " << cfg.variant << ", x0 " << to_string(ex.x0)
        << ", lookahead " << run.config.lookahead << ", backend " << to_string(run.config.backend) << "\n";
    if (mpc) {
      out << "set none\n";
    } else {
      out << "set " << ex.set.label() << " (" << ex.set.size() << " samples, " << ex.set.regions().size()
          << " regions)\n";
    }
    out << "base cost J_mu0(x0) = " << to_string(ex.base_cost) << "\n";
    out << (mpc ? "MPC cost = " : "rollout cost J_mu~(x0) = ") << to_string(run.total_cost()) << "\n";
    out << "steps " << run.trajectory.steps() << ", status " << to_string(run.status) << ", final state "
        << to_string(run.trajectory.states.back()) << "\n";
    if (ex.budget) {
      const auto used = tail_usage(run.trajectory, *ex.budget);
      const double applied = used.empty() ? 0.0 : used.front();
      const double remaining = split_augmented(run.trajectory.states.back()).info;
      out << "budget: applied usage " << format_double(applied) << ", remaining " << format_double(remaining)
          << ", limit " << format_double(ex.budget->budget) << "\n";
    }

    if (run.status == RunStatus::kInfeasibleAfterDisturbance) {
      err << "infeasible: the perturbed state " << to_string(run.trajectory.states.back())
          << " has no feasible lookahead\n";
      return static_cast<int>(kInfeasible);
    }
    const RunCheck check = check_run(run, run.config.backend == Backend::kDiscrete ? 0.0 : 1e-6);
    bool ok = check.descent_ok;
    if (!mpc && !disturbed) {
      out << "chain: J_mu~(x0) = " << to_string(run.total_cost()) << " <= J~(x0) = " << to_string(run.initial_value())
          << " <= J-bar(x0) = " << to_string(run.initial_bound) << "  " << (check.chain_ok ? "PASS" : "FAIL") << "\n";
      ok = ok && check.chain_ok;
    }
    out << "descent: " << (check.descent_ok ? "PASS" : "FAIL") << "\n";
    if (!check.detail.empty()) out << "note: " << check.detail << "\n";
    return static_cast<int>(ok ? kOk : kPropertyViolation);
  });
}

int cmd_verify(const ExperimentConfig& cfg, const std::string& set_path, std::size_t samples, std::ostream& out,
               std::ostream& err) {
  return guarded(err, [&] {
    const Experiment ex = build_experiment(cfg);
    const SampleSet set = sample_set_from_json(json::parse(read_file(set_path)));
    const InvarianceReport inv = verify_invariance(ex.problem, ex.policies, set, samples, cfg.seed);
    out << "invariance: " << (inv.passed ? "PASS" : "FAIL") << " (" << inv.checked_entries << " entries, "
        << inv.sampled_states << " sampled region members)\n";
    for (const auto& v : inv.violations) {
      out << "  state " << to_string(v.state) << " -> " << to_string(v.successor) << ": " << v.reason << "\n";
    }

    // Fixed-point equation at every entry and at sampled region members
    // whose successors the set covers.
    StateMap<Cost> values(set.tolerance());
    std::map<std::string, std::vector<State>> by_policy;
    auto consider = [&](const State& x, Cost value, const std::string& pid) {
      auto it = ex.policies.find(pid);
      if (it == ex.policies.end()) return;
      const State y = ex.problem.step(x, it->second(x));
      const auto m = set.lookup(y);
      if (!m) return;
      values.insert(x, value);
      values.insert(y, m->value);
      by_policy[pid].push_back(x);
    };
    for (const auto& e : set.entries()) consider(e.state, e.value, e.policy_id);
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    for (const auto& r : set.regions()) {
      if (!r.sample_member) continue;
      for (std::size_t i = 0; i < samples; ++i) {
        const State x = r.sample_member(rng);
        consider(x, r.value(x, set.tolerance()), r.policy_id);
      }
    }
    bool fp_ok = true;
    std::size_t checked = 0;
    double worst = 0.0;
    for (const auto& [pid, states] : by_policy) {
      const ResidualReport rep = check_fixed_point(ex.problem, ex.policies.at(pid), values, states);
      checked += rep.entries.size();
      for (const auto& e : rep.entries) {
        worst = std::max(worst, e.residual);
        if (!e.ok) {
          fp_ok = false;
          out << "  state " << to_string(e.state) << ": value " << to_string(e.lhs) << " but g + J(next) = "
              << to_string(e.rhs) << "\n";
        }
      }
    }
    out << "fixed point: " << (fp_ok ? "PASS" : "FAIL") << " (" << checked << " states, worst residual "
        << format_double(worst) << ")\n";
    return static_cast<int>(inv.passed && fp_ok ? kOk : kPropertyViolation);
  });
}

int cmd_table(const std::vector<ExperimentConfig>& runs, const std::string& csv_path, std::ostream& out,
              std::ostream& err) {
  struct Row {
    std::string instance, x0, set;
    Cost base = Cost::infinity(), rollout = Cost::infinity();
    std::optional<Cost> mpc;
    std::string final_state;
    int code = kOk;
    std::string error;
  };
  std::vector<Row> rows(runs.size());
  auto work = [&](std::size_t i) {
    std::ostringstream diag;
    Row& row = rows[i];
    row.code = guarded(diag, [&] {
      ExperimentConfig cfg = runs[i];
      const Experiment ex = build_experiment(cfg);
      row.instance = cfg.instance;
      row.x0 = to_string(ex.x0);
      row.set = ex.set.label();
      row.base = ex.base_cost;
      const RolloutRun run = execute(ex, cfg);
      row.rollout = run.total_cost();
      row.final_state = to_string(run.trajectory.states.back());
      if (cfg.table_mpc && ex.mpc_solver && ex.problem.shooting && !ex.budget) {
        RunOptions opts;
        opts.horizon = cfg.horizon;
        row.mpc = run_classical_mpc(ex.problem, ex.mpc_terminal, ex.x0, *ex.mpc_solver, opts).total_cost();
      }
      return static_cast<int>(kOk);
    });
    row.error = diag.str();
  };
  const std::size_t threads = runs.empty() ? 1 : runs.front().threads;
  if (threads > 1 && runs.size() > 1) {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < runs.size(); ++i) pool.emplace_back(work, i);
    for (auto& t : pool) t.join();
  } else {
    for (std::size_t i = 0; i < runs.size(); ++i) work(i);
  }

  int code = kOk;
  std::ostringstream csv;
  csv << "instance,x0,set,J_mu0,J_rollout,mpc_cost,final_state\n";
  out << std::left << std::setw(18) << "instance" << std::setw(16) << "x0" << std::setw(14) << "set" << std::right
      << std::setw(12) << "J_mu0" << std::setw(12) << "J_rollout" << std::setw(12) << "MPC cost"
      << "  final state\n";
  for (const auto& r : rows) {
    if (r.code != kOk) {
      err << r.error;
      code = code == kOk ? r.code : code;
      continue;
    }
    auto q = [](const std::string& s) { return s.find(',') == std::string::npos ? s : "\"" + s + "\""; };
    csv << r.instance << "," << q(r.x0) << "," << q(r.set) << "," << to_string(r.base) << "," << to_string(r.rollout)
        << "," << (r.mpc ? to_string(*r.mpc) : "") << "," << q(r.final_state) << "\n";
    out << std::left << std::setw(18) << r.instance << std::setw(16) << r.x0 << std::setw(14) << r.set << std::right
        << std::setw(12) << fixed4(r.base) << std::setw(12) << fixed4(r.rollout) << std::setw(12)
        << (r.mpc ? fixed4(*r.mpc) : "-") << "  " << r.final_state << "\n";
  }
  if (!csv_path.empty()) {
    try {
      write_file_atomic(csv_path, csv.str());
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kUsage;
    }
  }
  return code;
}

std::vector<ExperimentConfig> table_preset(const std::string& name) {
  std::vector<ExperimentConfig> out;
  if (name == "spiral") {
    for (const char* x0 : {"1,1", "8,-9"}) {
      ExperimentConfig c;
      c.instance = "hybrid";
      c.x0 = x0;
      c.lookahead = 5;
      out.push_back(c);
    }
  } else if (name == "tsp") {
    ExperimentConfig c;
    c.instance = "tsp";
    out.push_back(c);
    c.variant = "multi-policy";
    out.push_back(c);
    c.extra_seeds = {"ABD"};
    out.push_back(c);
  } else {
    throw PreconditionViolation("unknown table preset '" + name + "' (choose spiral or tsp)");
  }
  return out;
}

int cmd_list(std::ostream& out) {
  for (const auto& name : instance_names()) {
    out << name << ":";
    for (const auto& v : variants_of(name)) out << " " << v;
    out << "\n";
  }
  return kOk;
}

namespace {

struct RawOptions {
  std::string x0;
  std::size_t ell = 0;
  std::string backend;
  std::string disturb_state;
};

void add_experiment_options(CLI::App* app, ExperimentConfig& cfg, RawOptions& raw) {
  app->add_option("--instance", cfg.instance, "Instance name (see list-instances)")->capture_default_str();
  app->add_option("--variant", cfg.variant, "basic, multi-policy, augmented, multiagent, classical-mpc, disturbance")
      ->capture_default_str();
  app->add_option("--x0", raw.x0, "Initial state: comma-separated numbers, or a token");
  app->add_option("--ell", raw.ell, "Lookahead length")->check(CLI::PositiveNumber);
  app->add_option("--backend", raw.backend, "discrete, continuous-shooting or hybrid-mode-enum");
  app->add_option("--horizon", cfg.horizon, "Maximum closed-loop steps")->capture_default_str();
  app->add_option("--sweeps", cfg.sweeps, "Agent sweeps for the multiagent variant")->capture_default_str();
  app->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  app->add_option("--threads", cfg.threads, "Worker threads")->capture_default_str();
  app->add_option("--max-iterations", cfg.max_iterations, "Gradient iterations per penalty round")
      ->capture_default_str();
  app->add_option("--terminal-tolerance", cfg.terminal_tolerance, "Terminal matching tolerance")
      ->capture_default_str();
  app->add_option("--disturb-step", cfg.disturb_step, "Transition after which the disturbance acts")
      ->capture_default_str();
  app->add_option("--disturb-delta", cfg.disturb_delta, "Shift added to the state")->delimiter(',');
  app->add_option("--disturb-state", raw.disturb_state, "State that replaces the successor");
  app->add_option("--extra-seed", cfg.extra_seeds, "Start states of extra base trajectories");
  app->add_option("--mpc-ell", cfg.mpc_lookahead, "Classical MPC horizon")->capture_default_str();
  app->add_flag("--mpc-analytic-terminal", cfg.mpc_analytic_terminal, "Use the base cost as MPC terminal cost");
  app->add_flag("--explicit-samples", cfg.explicit_samples, "Hybrid: seed the set with trajectory samples");
  app->add_option("--budget", cfg.integrator.budget, "Double integrator: trajectory budget")->capture_default_str();
  app->add_option("--base-pole", cfg.integrator.base_pole, "Double integrator: base controller pole")
      ->capture_default_str();
  app->add_option("--safety", cfg.grid.safety, "Grid: minimum Manhattan distance")->capture_default_str();
  app->add_option("--caution", cfg.grid.caution, "Grid: base policy yield distance")->capture_default_str();
}

void finish(ExperimentConfig& cfg, const RawOptions& raw) {
  if (!raw.x0.empty()) cfg.x0 = raw.x0;
  if (raw.ell > 0) cfg.lookahead = raw.ell;
  if (!raw.backend.empty()) cfg.backend = raw.backend;
  if (!raw.disturb_state.empty()) cfg.disturb_state = raw.disturb_state;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rollout with sampled terminal sets"};
  app.name("rollout");
  app.require_subcommand(1, 1);
  app.set_config("--config", "", "TOML/INI file; options go under a [run] or [verify] section");

  ExperimentConfig run_cfg;
  RawOptions run_raw;
  auto* run = app.add_subcommand("run", "Run one experiment");
  add_experiment_options(run, run_cfg, run_raw);
  run->add_option("--out-json", run_cfg.run_json, "Write the run as JSON");
  run->add_option("--out-csv", run_cfg.trajectory_csv, "Write the trajectory as CSV");
  run->add_option("--summary", run_cfg.summary_file, "Append a summary row to this CSV");
  run->add_option("--save-set", run_cfg.set_json, "Write the sample set as JSON");
  run->add_option("--load-set", run_cfg.load_set, "Use a stored sample set instead of building one");
  run->add_flag("--trusted", run_cfg.trusted, "Skip re-verifying the loaded set");

  ExperimentConfig verify_cfg;
  RawOptions verify_raw;
  std::string set_path;
  std::size_t samples = kDefaultInvarianceSamples;
  auto* verify = app.add_subcommand("verify", "Check a stored sample set");
  add_experiment_options(verify, verify_cfg, verify_raw);
  verify->add_option("--set", set_path, "Sample set JSON")->required();
  verify->add_option("--samples", samples, "Sampled members per region")->capture_default_str();

  std::string preset = "spiral";
  std::string csv_path;
  std::size_t table_threads = 1;
  bool no_mpc = false;
  auto* table = app.add_subcommand("table", "Results table for a preset");
  table->add_option("--preset", preset, "spiral or tsp")->capture_default_str();
  table->add_option("--csv", csv_path, "Write the table as CSV");
  table->add_option("--threads", table_threads, "Run configurations concurrently")->capture_default_str();
  table->add_flag("--no-mpc", no_mpc, "Leave the MPC column empty");

  auto* list = app.add_subcommand("list-instances", "List instances and their variants");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  if (*run) {
    finish(run_cfg, run_raw);
    return cmd_run(run_cfg, out, err);
  }
  if (*verify) {
    finish(verify_cfg, verify_raw);
    return cmd_verify(verify_cfg, set_path, samples, out, err);
  }
  if (*table) {
    std::vector<ExperimentConfig> runs;
    try {
      runs = table_preset(preset);
    } catch (const PreconditionViolation& e) {
      err << "error: " << e.what() << "\n";
      return kUsage;
    }
    for (auto& c : runs) {
      c.threads = table_threads;
      c.table_mpc = !no_mpc;
    }
    return cmd_table(runs, csv_path, out, err);
  }
  if (*list) return cmd_list(out);
  return kUsage;
}

}  // namespace rollout::cli
