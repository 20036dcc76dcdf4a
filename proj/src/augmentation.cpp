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


#include "rollout/augmentation.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <utility>

#include "rollout/errors.hpp"
#include "rollout/io.hpp"

namespace rollout {

namespace {

Matrix pad_columns(const Matrix& G, Eigen::Index extra) {
  Matrix out = Matrix::Zero(G.rows(), G.cols() + extra);
  out.leftCols(G.cols()) = G;
  return out;
}

LinearInequalities pad(const LinearInequalities& sys) {
  if (sys.empty()) return sys;
  return LinearInequalities{pad_columns(sys.G, 1), sys.h};
}

}  // namespace

State make_augmented(const State& base, double info) {
  if (base.is_token()) return State(base.token() + "#" + format_double(info));
  Vector z(base.vec().size() + 1);
  z << base.vec(), info;
  return State(std::move(z));
}

AugmentedState split_augmented(const State& augmented) {
  if (augmented.is_token()) {
    const auto& t = augmented.token();
    const auto pos = t.rfind('#');
    if (pos == std::string::npos) throw PreconditionViolation("not an augmented token: '" + t + "'");
    double info = 0.0;
    const auto res = std::from_chars(t.data() + pos + 1, t.data() + t.size(), info);
    if (res.ec != std::errc{}) throw PreconditionViolation("bad information value in '" + t + "'");
    return {State(t.substr(0, pos)), info};
  }
  const auto& z = augmented.vec();
  if (z.size() < 1) throw PreconditionViolation("augmented vector state is empty");
  return {State(Vector(z.head(z.size() - 1))), z[z.size() - 1]};
}

Problem augment_problem(const Problem& problem, const BudgetConstraintSpec& spec) {
  Problem out;
  out.name = problem.name + "+budget";
  out.state_tolerance = problem.state_tolerance;
  out.dynamics = [problem, spec](const State& z, const Control& u) {
    const auto [x, e] = split_augmented(z);
    return make_augmented(problem.step(x, u), e - spec.usage(x, u));
  };
  out.stage_cost = [problem, spec](const State& z, const Control& u) {
    const auto [x, e] = split_augmented(z);
    if (spec.usage(x, u) > e) return Cost::infinity();
    return problem.cost(x, u);
  };
  out.controls = [problem](const State& z) { return problem.controls(split_augmented(z).base); };
  if (problem.stopping) {
    out.stopping = [problem](const State& z) { return problem.is_stopping(split_augmented(z).base); };
  }
  if (problem.shooting) {
    const ShootingModel& base = *problem.shooting;
    auto model = std::make_shared<ShootingModel>();
    for (const auto& branch : base.modes) {
      DynamicsBranch b;
      b.f = [branch, spec](const Vector& z, const Vector& u) {
        const auto n = z.size() - 1;
        const Vector x = z.head(n);
        Vector y(z.size());
        y << branch(x, u), z[n] - spec.usage(State(x), Control(u));
        return y;
      };
      if (spec.usage_gradient) {
        b.jacobians = [branch, spec](const Vector& z, const Vector& u, Matrix& fx, Matrix& fu) {
          const auto n = z.size() - 1;
          const Vector x = z.head(n);
          Matrix ax, au;
          branch.linearize(x, u, ax, au);
          Vector gx, gu;
          spec.usage_gradient(x, u, gx, gu);
          fx = Matrix::Zero(n + 1, n + 1);
          fx.topLeftCorner(n, n) = ax;
          fx.row(n).head(n) = -gx.transpose();
          fx(n, n) = 1.0;
          fu = Matrix(n + 1, u.size());
          fu.topRows(n) = au;
          fu.row(n) = -gu.transpose();
        };
      }
      model->modes.push_back(std::move(b));
    }
    if (base.mode_of) {
      model->mode_of = [base_mode = base.mode_of](const Vector& z) { return base_mode(z.head(z.size() - 1)); };
    }
    for (const auto& r : base.mode_regions) model->mode_regions.push_back(pad(r));
    model->stage.value = [stage = base.stage](const Vector& z, const Vector& u) {
      return stage(z.head(z.size() - 1), u);
    };
    model->stage.gradient = [stage = base.stage](const Vector& z, const Vector& u, Vector& gz, Vector& gu) {
      Vector gx;
      stage.differentiate(z.head(z.size() - 1), u, gx, gu);
      gz = Vector::Zero(z.size());
      gz.head(gx.size()) = gx;
    };
    model->state_constraints = pad(base.state_constraints);
    // Remaining budget never drops below zero.
    const Eigen::Index dim = base.state_dimension + 1;
    model->state_dimension = dim;
    LinearInequalities nonneg{Matrix::Zero(1, dim), Vector::Zero(1)};
    nonneg.G(0, dim - 1) = -1.0;
    model->successor_constraints = LinearInequalities::stack(pad(base.successor_constraints), nonneg);
    model->control_box = base.control_box;
    out.shooting = std::move(model);
  }
  return out;
}

Policy augment_policy(const Policy& policy) {
  Policy out;
  out.id = policy.id;
  out.action = [policy](const State& z) { return policy(split_augmented(z).base); };
  return out;
}

std::vector<double> tail_usage(const Trajectory& traj, const BudgetConstraintSpec& spec) {
  const std::size_t n = traj.steps();
  std::vector<double> tail(n + 1, 0.0);
  for (std::size_t k = n; k-- > 0;) tail[k] = spec.usage(traj.states[k], traj.controls[k]) + tail[k + 1];
  return tail;
}

Region budget_region(const std::vector<State>& states, const std::vector<Control>& controls,
                     const std::vector<Cost>& tail_costs, const std::vector<double>& usage, double budget,
                     std::string policy_id, double tolerance) {
  if (states.empty() || tail_costs.size() != states.size() || usage.size() != states.size() ||
      controls.size() + 1 < states.size()) {
    throw PreconditionViolation("inconsistent seed data for a budget region");
  }
  struct Data {
    std::vector<State> states;
    std::vector<Control> controls;
    std::vector<Cost> tails;
    std::vector<double> usage;
    double budget;
    double tolerance;
  };
  auto data = std::make_shared<const Data>(Data{states, controls, tail_costs, usage, budget, tolerance});

  // Member index with the smallest value, or nullopt.
  auto match = [data](const State& z, double tol) -> std::optional<std::size_t> {
    AugmentedState a;
    try {
      a = split_augmented(z);
    } catch (const PreconditionViolation&) {
      return std::nullopt;
    }
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < data->states.size(); ++k) {
      if (a.info >= data->usage[k] && approx_equal(data->states[k], a.base, tol) &&
          (!best || data->tails[k] < data->tails[*best])) {
        best = k;
      }
    }
    return best;
  };

  Region r;
  r.label = "budget_tube";
  r.policy_id = policy_id;
  r.contains = [match](const State& z, double tol) { return match(z, tol).has_value(); };
  r.value = [match, data](const State& z, double tol) {
    auto k = match(z, tol);
    return k ? data->tails[*k] : Cost::infinity();
  };
  r.sample_member = [data](std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, data->states.size() - 1);
    const std::size_t k = pick(rng);
    std::uniform_real_distribution<double> info(data->usage[k], std::max(data->usage[k], data->budget));
    return make_augmented(data->states[k], info(rng));
  };
  const auto control_at = [data](std::size_t k) -> std::optional<Control> {
    if (data->controls.empty()) return std::nullopt;
    return data->controls[std::min(k, data->controls.size() - 1)];
  };
  r.base_action = [match, control_at, data](const State& z) {
    auto k = match(z, data->tolerance);
    auto u = control_at(k ? *k : data->states.size() - 1);
    if (!u) throw PreconditionViolation("no base action recorded");
    return *u;
  };
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (!states[k].is_vector()) break;
    TerminalTarget t;
    t.point = make_augmented(states[k], usage[k]).vec();
    t.relations.assign(static_cast<std::size_t>(t.point.size()), Relation::kEqual);
    t.relations.back() = Relation::kAtLeast;
    t.value = tail_costs[k];
    t.policy_id = policy_id;
    t.continuation = control_at(k);
    r.targets.push_back(std::move(t));
  }
  json seed_states = json::array(), seed_controls = json::array(), tails = json::array(), use = json::array();
  for (const auto& s : states) seed_states.push_back(state_to_json(s));
  for (const auto& u : controls) seed_controls.push_back(control_to_json(u));
  for (const auto& c : tail_costs) tails.push_back(cost_to_json(c));
  for (double u : usage) use.push_back(u);
  r.descriptor = json{{"kind", "budget_tube"}, {"policy_id", policy_id}, {"budget", budget},
                      {"tolerance", tolerance}, {"states", seed_states}, {"controls", seed_controls},
                      {"tail_costs", tails}, {"tail_usage", use}};
  return r;
}

SampleSet augment_sample_set(const Trajectory& traj, const BudgetConstraintSpec& spec, std::string label) {
  if (!traj.tail_costs) throw UnusableTrajectory("seed trajectory has no tail costs");
  const auto usage = tail_usage(traj, spec);
  if (usage.front() > spec.budget) {
    throw InfeasibleSeed(usage.front(), "seed trajectory uses " + format_double(usage.front()) +
                                            ", more than the budget " + format_double(spec.budget));
  }
  SampleSet set(label.empty() ? traj.policy_id + "+budget" : std::move(label));
  set.add_region(budget_region(traj.states, traj.controls, *traj.tail_costs, usage, spec.budget, traj.policy_id,
                               set.tolerance()));
  return set;
}

InformationStateMap budget_information_map(const BudgetConstraintSpec& spec) {
  InformationStateMap map;
  map.reduce = [spec](const std::vector<State>& xs, const std::vector<Control>& us) {
    double e = spec.budget;
    for (std::size_t i = 0; i < us.size(); ++i) e -= spec.usage(xs[i], us[i]);
    Vector out(1);
    out << e;
    return out;
  };
  map.transition = [spec](const Vector& e, const State& x, const Control& u) {
    Vector out(1);
    out << e[0] - spec.usage(x, u);
    return out;
  };
  return map;
}

bool check_information_consistency(const InformationStateMap& map, const Trajectory& traj, double tol) {
  std::vector<State> xs;
  std::vector<Control> us;
  Vector info = map.reduce(xs, us);
  for (std::size_t k = 0; k < traj.steps(); ++k) {
    const Vector stepped = map.transition(info, traj.states[k], traj.controls[k]);
    xs.push_back(traj.states[k]);
    us.push_back(traj.controls[k]);
    info = map.reduce(xs, us);
    if (stepped.size() != info.size() || (stepped - info).lpNorm<Eigen::Infinity>() > tol) return false;
  }
  return true;
}

}  // namespace rollout
