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

#include "rollout/errors.hpp"
#include "rollout/instances.hpp"
#include "rollout/lookahead.hpp"
#include "support.hpp"

using namespace rollout;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SolverConfig discrete(std::size_t ell) {
  SolverConfig c;
  c.lookahead = ell;
  return c;
}

struct TspSets {
  TspInstance t = make_tsp_variant();
  SampleSet s0 = build_from_trajectory(simulate_policy(t.problem, t.mu0, t.start), "S0");
  SampleSet s1 = build_from_trajectory(simulate_policy(t.problem, t.mu1, t.start), "S1");
  SampleSet merged = merge({s0, s1}, "S0+S1");
};

// Discrete-time Riccati iteration for x' = A x + B u with cost x'Qx + u'Ru.
Matrix riccati(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
  Matrix P = Q;
  for (int i = 0; i < 10000; ++i) {
    const Matrix K = (R + B.transpose() * P * B).ldlt().solve(B.transpose() * P * A);
    const Matrix next = Q + A.transpose() * P * (A - B * K);
    if ((next - P).cwiseAbs().maxCoeff() < 1e-14) return next;
    P = next;
  }
  return P;
}

Region quadratic_region(const Matrix& P) {
  Region r;
  r.label = "quadratic";
  r.policy_id = "lqr";
  r.contains = [](const State&, double) { return true; };
  r.value = [P](const State& x, double) { return Cost(x.vec().dot(P * x.vec())); };
  SmoothTerminal s;
  s.value = [P](const Vector& x) { return x.dot(P * x); };
  s.gradient = [P](const Vector& x) { return Vector(2.0 * P * x); };
  s.membership = LinearInequalities{Matrix(0, P.rows()), Vector(0)};
  r.smooth = s;
  return r;
}

// Minimizes sum_{k<l} (x_k'x_k + u_k^2) + x_l'P x_l over unconstrained u by
// one linear solve on the stacked prediction matrices.
Vector least_squares_controls(const Matrix& A, const Matrix& B, const Matrix& P, const Vector& x0, int ell) {
  const int n = static_cast<int>(A.rows());
  std::vector<Matrix> phi(static_cast<std::size_t>(ell + 1)), gamma(static_cast<std::size_t>(ell + 1));
  phi[0] = Matrix::Identity(n, n);
  gamma[0] = Matrix::Zero(n, ell);
  for (int k = 1; k <= ell; ++k) {
    phi[static_cast<std::size_t>(k)] = A * phi[static_cast<std::size_t>(k - 1)];
    Matrix g = A * gamma[static_cast<std::size_t>(k - 1)];
    g.col(k - 1) += B.col(0);
    gamma[static_cast<std::size_t>(k)] = g;
  }
  Matrix H = Matrix::Identity(ell, ell);
  Vector f = Vector::Zero(ell);
  for (int k = 1; k <= ell; ++k) {
    const Matrix W = k == ell ? P : Matrix::Identity(n, n);
    const Matrix& G = gamma[static_cast<std::size_t>(k)];
    H += G.transpose() * W * G;
    f += G.transpose() * W * phi[static_cast<std::size_t>(k)] * x0;
  }
  return H.ldlt().solve(-f);
}

}  // namespace

TEST_CASE("two-step tour lookahead with the mu0 set follows mu0", "[discrete]") {
  TspSets s;
  const LookaheadSolution sol = solve_discrete(s.t.problem, s.s0, s.t.start, discrete(2));
  REQUIRE(sol.feasible());
  CHECK(sol.controls.front() == Control("C"));
  CHECK(sol.value == terminal_cost(s.s0, s.t.start));
  CHECK(sol.status == SolveStatus::kOptimal);
}

TEST_CASE("two-step tour lookahead with the merged set moves to B", "[discrete]") {
  TspSets s;
  const LookaheadSolution sol = solve_discrete(s.t.problem, s.merged, s.t.start, discrete(2));
  REQUIRE(sol.feasible());
  CHECK(sol.controls.front() == Control("B"));
  CHECK(sol.value.value() == tour_cost(s.t.costs, "ABCDA"));
  const auto rows = vi_sequence(s.t.problem, s.merged, {s.t.start}, 2);
  CHECK(rows.front().back().value() == tour_cost(s.t.costs, "ABCDA"));
  CHECK(sol.per_stage_values == rows.front());
}

TEST_CASE("lookahead value is the recomputed objective", "[discrete]") {
  TspSets s;
  for (const auto& x : {State("A"), State("AB"), State("AD"), State("ACB")}) {
    const LookaheadSolution sol = solve_discrete(s.t.problem, s.merged, x, discrete(3));
    if (!sol.feasible()) continue;
    State end;
    CHECK(evaluate_sequence(s.t.problem, s.merged, x, sol.controls, 0.0, &end) == sol.value);
    CHECK(end == sol.terminal_state);
  }
}

TEST_CASE("one step from a member never exceeds its terminal value", "[discrete]") {
  TspSets s;
  for (const auto& e : s.merged.entries()) {
    const LookaheadSolution sol = solve_discrete(s.t.problem, s.merged, e.state, discrete(1));
    CHECK(sol.value <= terminal_cost(s.merged, e.state));
  }
  const LookaheadSolution stop = solve_discrete(s.t.problem, s.s0, State("ACDBA"), discrete(1));
  CHECK(stop.value == Cost::zero());
}

TEST_CASE("unreachable set gives +inf at every iterate", "[discrete][vi]") {
  const TspInstance t = make_tsp_variant();
  SampleSet far("far");
  far.add_entry({State("ACDBA"), Cost::zero(), "mu0", State("ACDBA"), Control("A")});
  const auto rows = vi_sequence(t.problem, far, {State("A")}, 2);
  for (const auto& v : rows.front()) CHECK(v.is_infinite());
  const LookaheadSolution sol = solve_discrete(t.problem, far, State("A"), discrete(2));
  CHECK_FALSE(sol.feasible());
  CHECK(sol.controls.empty());
  CHECK(sol.status == SolveStatus::kInfeasible);
}

TEST_CASE("memoized search equals exhaustive enumeration on random problems", "[discrete][oracle]") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    auto inst = testing_support::random_instance(rng, 15, 4);
    std::vector<State> starts = inst.states;
    std::shuffle(starts.begin(), starts.end(), rng);
    const SampleSet set = testing_support::base_set(inst, {starts[0], starts[1], starts[2]}, "S");
    for (std::size_t ell = 1; ell <= 4; ++ell) {
      for (const auto& x : inst.states) {
        const LookaheadSolution sol = solve_discrete(inst.problem, set, x, discrete(ell));
        const auto brute = testing_support::brute_lookahead(inst.problem, set, x, ell);
        REQUIRE(sol.value == brute.value);
        if (brute.value.is_finite()) REQUIRE(sol.controls == brute.controls);
      }
    }
  }
}

TEST_CASE("value iteration from J-bar is monotone", "[vi][property]") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = testing_support::random_instance(rng, 20, 4);
    const SampleSet set = testing_support::base_set(inst, {inst.states[19], inst.states[7]}, "S");
    const auto rows = vi_sequence(inst.problem, set, inst.states, 5);
    for (const auto& row : rows) {
      for (std::size_t k = 0; k + 1 < row.size(); ++k) CHECK(row[k + 1] <= row[k]);
    }
  }
  TspSets s;
  const std::vector<State> xs{"A", "AB", "AC", "AD", "ABC", "ACB", "ABDC"};
  for (const auto& row : vi_sequence(s.t.problem, s.merged, xs, 4)) {
    for (std::size_t k = 0; k + 1 < row.size(); ++k) CHECK(row[k + 1] <= row[k]);
  }
}

TEST_CASE("larger sets from the same policy never raise the lookahead value", "[discrete][property]") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = testing_support::random_instance(rng, 20, 3);
    std::vector<State> starts = inst.states;
    std::shuffle(starts.begin(), starts.end(), rng);
    const SampleSet sub = testing_support::base_set(inst, {starts[0]}, "sub");
    const SampleSet super = testing_support::base_set(inst, {starts[0], starts[1], starts[2]}, "super");
    for (std::size_t ell = 1; ell <= 3; ++ell) {
      for (const auto& x : inst.states) {
        CHECK(solve_discrete(inst.problem, super, x, discrete(ell)).value <=
              solve_discrete(inst.problem, sub, x, discrete(ell)).value);
      }
    }
  }
}

TEST_CASE("merged sets dominate each component", "[discrete][property]") {
  TspSets s;
  for (const auto& x : {State("A"), State("AB"), State("AC"), State("AD"), State("ABD")}) {
    for (std::size_t ell = 1; ell <= 3; ++ell) {
      const Cost m = solve_discrete(s.t.problem, s.merged, x, discrete(ell)).value;
      CHECK(m <= solve_discrete(s.t.problem, s.s0, x, discrete(ell)).value);
      CHECK(m <= solve_discrete(s.t.problem, s.s1, x, discrete(ell)).value);
    }
  }
}

TEST_CASE("restricted lookahead", "[restricted]") {
  TspSets s;
  const RestrictedControls full = [&](const State& x) { return s.t.problem.controls(x); };
  for (const auto& x : {State("A"), State("AB"), State("AC")}) {
    const auto a = solve_restricted(s.t.problem, s.merged, x, full, discrete(2));
    const auto b = solve_discrete(s.t.problem, s.merged, x, discrete(2));
    CHECK(a.value == b.value);
    CHECK(a.controls == b.controls);
  }

  // Singleton base action: only the base path is available.
  const RestrictedControls only_base = [&](const State& x) {
    return ControlSet(std::vector<Control>{s.t.mu0(x)});
  };
  const auto sol = solve_restricted(s.t.problem, s.s0, State("A"), only_base, discrete(2));
  CHECK(sol.controls == std::vector<Control>{"C", "D"});
  CHECK(sol.value == terminal_cost(s.s0, State("A")));

  // Removing the base action at a member breaks the assumption.
  const RestrictedControls no_base = [&](const State& x) {
    std::vector<Control> us;
    const ControlSet all = s.t.problem.controls(x);
    for (const auto& u : all.options()) {
      if (!(u == s.t.mu0(x))) us.push_back(u);
    }
    return ControlSet(us);
  };
  CHECK_THROWS_AS(solve_restricted(s.t.problem, s.s0, State("A"), no_base, discrete(2)), PreconditionViolation);
}

TEST_CASE("coordinate restriction on the grid is sandwiched", "[restricted][grid]") {
  const TwoVehicleGrid g = make_two_vehicle_grid();
  const Trajectory base = simulate_policy(g.problem, g.base, g.x0);
  const SampleSet set = build_from_trajectory(base, "S0");
  const RestrictedControls segments = [&](const State& x) {
    const auto b = split_components(g.base(x).token());
    std::vector<Control> us;
    const ControlSet all = g.problem.controls(x);
    for (const auto& u : all.options()) {
      const auto c = split_components(u.token());
      if (c[0] == b[0] || c[1] == b[1]) us.push_back(u);
    }
    return ControlSet(us);
  };
  for (const auto& x : base.states) {
    const Cost joint = solve_discrete(g.problem, set, x, discrete(3)).value;
    const Cost restricted = solve_restricted(g.problem, set, x, segments, discrete(3)).value;
    CHECK(joint <= restricted);
    CHECK(restricted <= terminal_cost(set, x));
  }
}

TEST_CASE("random problems: restricted value lies between joint and J-bar", "[restricted][property]") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    auto inst = testing_support::random_instance(rng, 12, 4);
    const SampleSet set = testing_support::base_set(inst, {inst.states[11], inst.states[5]}, "S");
    std::bernoulli_distribution keep(0.5);
    std::map<std::string, std::vector<Control>> subsets;
    for (const auto& x : inst.states) {
      std::vector<Control> us{Control("a")};
      const ControlSet all = inst.problem.controls(x);
      for (const auto& u : all.options()) {
        if (!(u == Control("a")) && keep(rng)) us.push_back(u);
      }
      subsets[x.token()] = us;
    }
    const RestrictedControls r = [&](const State& x) {
      auto it = subsets.find(x.token());
      return it == subsets.end() ? inst.problem.controls(x) : ControlSet(it->second);
    };
    for (const auto& x : inst.states) {
      const Cost joint = solve_discrete(inst.problem, set, x, discrete(3)).value;
      const Cost restricted = solve_restricted(inst.problem, set, x, r, discrete(3)).value;
      CHECK(joint <= restricted);
      if (set.contains(x)) CHECK(restricted <= terminal_cost(set, x));
    }
  }
}

TEST_CASE("solver configuration is validated", "[config]") {
  SolverConfig c;
  c.lookahead = 0;
  CHECK_THROWS_AS(c.validate(), PreconditionViolation);
  c.lookahead = 2;
  c.terminal_tolerance = 0.0;
  CHECK_THROWS_AS(c.validate(), PreconditionViolation);
  c.terminal_tolerance = 1e-6;
  CHECK_NOTHROW(c.validate());
  CHECK(parse_backend(to_string(Backend::kHybridModeEnum)) == Backend::kHybridModeEnum);
  CHECK_THROWS_AS(parse_backend("simplex"), PreconditionViolation);
}

TEST_CASE("shooting matches the least-squares solution when constraints are inactive", "[continuous][oracle]") {
  const ConstrainedDoubleIntegrator di = make_constrained_double_integrator();
  Matrix A(2, 2), B(2, 1);
  A << 1, 1, 0, 1;
  B << 0, 1;
  const Matrix P = riccati(A, B, Matrix::Identity(2, 2), Matrix::Identity(1, 1));
  SampleSet set("quadratic");
  set.add_region(quadratic_region(P));
  set.set_analytic_backed(true);

  const Vector x0{{0.6, -0.3}};
  for (int ell : {1, 3, 4}) {
    SolverConfig cfg;
    cfg.lookahead = static_cast<std::size_t>(ell);
    cfg.backend = Backend::kContinuousShooting;
    const LookaheadSolution sol = solve_continuous(di.problem, set, State(x0), cfg);
    REQUIRE(sol.feasible());
    const Vector u = least_squares_controls(A, B, P, x0, ell);
    REQUIRE(u.cwiseAbs().maxCoeff() < 1.0);
    REQUIRE(sol.controls.size() == static_cast<std::size_t>(ell));
    for (int k = 0; k < ell; ++k) {
      CHECK_THAT(sol.controls[static_cast<std::size_t>(k)].vec()[0], WithinAbs(u[k], 1e-6));
    }
    // Objective at the oracle controls.
    Vector x = x0;
    double obj = 0.0;
    for (int k = 0; k < ell; ++k) {
      obj += x.squaredNorm() + u[k] * u[k];
      x = A * x + B * u[k];
    }
    obj += x.dot(P * x);
    CHECK_THAT(sol.value.value(), WithinRel(obj, 1e-6));
  }
}

TEST_CASE("shooting from a rest point of the set returns its value", "[continuous]") {
  const ConstrainedDoubleIntegrator di = make_constrained_double_integrator();
  const SampleSet set = build_from_trajectory(simulate_policy(di.problem, di.base, di.x0), "S0");
  SolverConfig cfg;
  cfg.lookahead = 1;
  cfg.backend = Backend::kContinuousShooting;
  const State origin{0.0, 0.0};
  REQUIRE(set.contains(origin));
  const LookaheadSolution sol = solve_continuous(di.problem, set, origin, cfg);
  CHECK(sol.value == terminal_cost(set, origin));
}

TEST_CASE("explicit-sample shooting meets every terminal sample exactly enough", "[continuous]") {
  const ConstrainedDoubleIntegrator di = make_constrained_double_integrator();
  const Trajectory base = simulate_policy(di.problem, di.base, di.x0);
  const SampleSet set = build_from_trajectory(base, "S0");
  SolverConfig cfg;
  cfg.lookahead = 4;
  cfg.backend = Backend::kContinuousShooting;
  const LookaheadSolution sol = solve_continuous(di.problem, set, di.x0, cfg);
  REQUIRE(sol.feasible());
  CHECK(sol.value <= terminal_cost(set, di.x0));
  State end;
  const Cost again = evaluate_sequence(di.problem, set, di.x0, sol.controls, cfg.terminal_tolerance, &end);
  CHECK(again == sol.value);
  CHECK(set.lookup(end, cfg.terminal_tolerance).has_value());
  for (const auto& u : sol.controls) CHECK(std::abs(u.vec()[0]) <= 1.0);
}

TEST_CASE("hybrid mode enumeration improves on the spiral base cost", "[continuous][spiral]") {
  const HybridSpiral h = make_hybrid_spiral();
  SolverConfig cfg;
  cfg.lookahead = 5;
  cfg.backend = Backend::kHybridModeEnum;
  const State x0{1.0, 1.0};
  const LookaheadSolution sol = solve_continuous(h.problem, h.analytic_set, x0, cfg);
  REQUIRE(sol.feasible());
  CHECK(sol.value < terminal_cost(h.analytic_set, x0));
  CHECK(sol.controls.size() == 5);
  CHECK(evaluate_sequence(h.problem, h.analytic_set, x0, sol.controls, cfg.terminal_tolerance) == sol.value);
}
