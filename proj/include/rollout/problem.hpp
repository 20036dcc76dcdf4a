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

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rollout/cost.hpp"
#include "rollout/types.hpp"

namespace rollout {

/// Rows of G x <= h.
struct LinearInequalities {
  Matrix G;
  Vector h;

  [[nodiscard]] bool empty() const { return G.rows() == 0; }
  [[nodiscard]] Eigen::Index rows() const { return G.rows(); }
  /// Largest positive entry of G x - h (0 when satisfied).
  [[nodiscard]] double violation(const Vector& x) const;

  static LinearInequalities box(const Vector& lo, const Vector& hi);
  /// Stacks the rows of two systems over the same variable.
  static LinearInequalities stack(const LinearInequalities& a, const LinearInequalities& b);
};

/// One smooth branch of the dynamics, x' = f(x, u).
///
/// If `affine` is set the branch is x' = A x + B u + c and the callables may
/// be left empty. Otherwise `jacobians` is optional; missing derivatives are
/// taken by central differences.
struct DynamicsBranch {
  struct Affine {
    Matrix A;
    Matrix B;
    Vector c;
  };
  std::optional<Affine> affine;
  std::function<Vector(const Vector&, const Vector&)> f;
  std::function<void(const Vector&, const Vector&, Matrix& fx, Matrix& fu)> jacobians;

  [[nodiscard]] Vector operator()(const Vector& x, const Vector& u) const;
  void linearize(const Vector& x, const Vector& u, Matrix& fx, Matrix& fu) const;
};

/// Smooth part of the stage cost, valid wherever the true cost is finite.
struct SmoothStageCost {
  /// x'Qx + u'Ru when set; otherwise the callables are used.
  struct Quadratic {
    Matrix Q;
    Matrix R;
  };
  std::optional<Quadratic> quadratic;
  std::function<double(const Vector&, const Vector&)> value;
  std::function<void(const Vector&, const Vector&, Vector& gx, Vector& gu)> gradient;

  [[nodiscard]] double operator()(const Vector& x, const Vector& u) const;
  void differentiate(const Vector& x, const Vector& u, Vector& gx, Vector& gu) const;
};

/// Differentiable description of a continuous problem, used by the shooting
/// solvers. The +inf parts of the stage cost are expressed as affine state
/// constraints; piecewise dynamics list one branch per mode together with the
/// region in which each mode is active.
struct ShootingModel {
  Eigen::Index state_dimension = 0;
  std::vector<DynamicsBranch> modes;
  /// Active mode at x; may be empty when there is a single mode.
  std::function<std::size_t(const Vector&)> mode_of;
  /// Region of mode i as G x <= h. Same length as `modes` when there are several.
  std::vector<LinearInequalities> mode_regions;
  SmoothStageCost stage;
  /// Constraints on the states x_1 .. x_{l-1} that pay a stage cost.
  LinearInequalities state_constraints;
  /// Constraints on every successor x_1 .. x_l; they encode infeasible
  /// (x, u) pairs whose effect shows in the next state.
  LinearInequalities successor_constraints;
  Box control_box;

  [[nodiscard]] std::size_t mode_count() const { return modes.size(); }
  [[nodiscard]] std::size_t active_mode(const Vector& x) const { return modes.size() > 1 ? mode_of(x) : 0; }
};

/// Deterministic optimal control problem with nonnegative extended-real costs.
struct Problem {
  std::string name;
  std::function<State(const State&, const Control&)> dynamics;
  std::function<Cost(const State&, const Control&)> stage_cost;
  std::function<ControlSet(const State&)> controls;
  /// Optional membership test for the cost-free, forward-invariant stopping set.
  std::function<bool(const State&)> stopping;
  double state_tolerance = kStateTolerance;
  std::shared_ptr<const ShootingModel> shooting;

  [[nodiscard]] bool is_stopping(const State& x) const { return stopping && stopping(x); }
  [[nodiscard]] State step(const State& x, const Control& u) const { return dynamics(x, u); }
  [[nodiscard]] Cost cost(const State& x, const Control& u) const { return stage_cost(x, u); }
};

/// Stationary feedback policy, optionally with a closed-form cost function.
struct Policy {
  std::string id;
  std::function<Control(const State&)> action;
  std::function<Cost(const State&)> analytic_cost;

  [[nodiscard]] bool has_analytic_cost() const { return static_cast<bool>(analytic_cost); }
  [[nodiscard]] Control operator()(const State& x) const { return action(x); }
};

/// Result of the structural checks on a problem over a list of visited states.
struct StructureReport {
  bool passed = true;
  std::vector<std::string> problems;
};

/// Checks nonempty control sets, determinism and the stopping-set law
/// (zero cost and closure for every control) on the given states.
StructureReport check_structure(const Problem& problem, const std::vector<State>& states);

}  // namespace rollout
