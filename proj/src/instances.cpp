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


#include "rollout/instances.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

#include "rollout/errors.hpp"
#include "rollout/io.hpp"

namespace rollout {

// ---------------------------------------------------------------------------
// Hybrid spiral

namespace {

constexpr double kSpiralGain = 0.8;
constexpr double kSpiralBound = 10.0;
constexpr double kSpiralWeight = 1.0 / (1.0 - kSpiralGain * kSpiralGain);

Matrix spiral_matrix(double beta) {
  Matrix A(2, 2);
  A << std::cos(beta), -std::sin(beta), std::sin(beta), std::cos(beta);
  return kSpiralGain * A;
}

const Matrix& spiral_mode(const Vector& x) {
  static const Matrix A0 = spiral_matrix(std::numbers::pi / 3.0);
  static const Matrix A1 = spiral_matrix(-std::numbers::pi / 3.0);
  return x[0] >= 0.0 ? A0 : A1;
}

bool in_spiral_box(const Vector& x) { return x.size() == 2 && x.cwiseAbs().maxCoeff() <= kSpiralBound; }

// The zero-control trajectory stays in X iff its first three states do:
// after two contractions the norm is at most 0.64 * 10 sqrt(2) < 10.
bool zero_control_safe(const Vector& x) {
  Vector y = x;
  for (int k = 0; k < 3; ++k) {
    if (!in_spiral_box(y)) return false;
    if (y.norm() <= kSpiralBound) return true;
    y = spiral_mode(y) * y;
  }
  return true;
}

Cost spiral_base_cost(const State& x) {
  if (!x.is_vector() || !zero_control_safe(x.vec())) return Cost::infinity();
  return Cost(kSpiralWeight * x.vec().squaredNorm());
}

}  // namespace

Region spiral_base_region() {
  Region r;
  r.label = "spiral_base";
  r.policy_id = "mu0";
  r.contains = [](const State& x, double) { return x.is_vector() && zero_control_safe(x.vec()); };
  r.value = [](const State& x, double) { return spiral_base_cost(x); };
  r.sample_member = [](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coord(-kSpiralBound, kSpiralBound);
    while (true) {
      Vector x(2);
      x << coord(rng), coord(rng);
      if (zero_control_safe(x)) return State(std::move(x));
    }
  };
  r.base_action = [](const State&) { return Control{0.0}; };
  constexpr int kSides = 16;
  LinearInequalities polygon{Matrix(kSides, 2), Vector::Constant(kSides, kSpiralBound * std::cos(std::numbers::pi / kSides))};
  for (int i = 0; i < kSides; ++i) {
    const double theta = 2.0 * std::numbers::pi * i / kSides;
    polygon.G(i, 0) = std::cos(theta);
    polygon.G(i, 1) = std::sin(theta);
  }
  r.smooth = SmoothTerminal{[](const Vector& x) { return kSpiralWeight * x.squaredNorm(); },
                            [](const Vector& x) { return Vector(2.0 * kSpiralWeight * x); }, std::move(polygon)};
  r.descriptor = json{{"kind", "spiral_base"}};
  return r;
}

HybridSpiral make_hybrid_spiral() {
  const Matrix A0 = spiral_matrix(std::numbers::pi / 3.0);
  const Matrix A1 = spiral_matrix(-std::numbers::pi / 3.0);
  Matrix B(2, 1);
  B << 0.0, 1.0;
  const Vector lo = Vector::Constant(2, -kSpiralBound);
  const Vector hi = Vector::Constant(2, kSpiralBound);
  const Box U{Vector::Constant(1, -1.0), Vector::Constant(1, 1.0)};

  HybridSpiral out;
  Problem& p = out.problem;
  p.name = "hybrid";
  p.dynamics = [B](const State& x, const Control& u) {
    const Vector& v = x.vec();
    return State(Vector(spiral_mode(v) * v + B * u.vec()));
  };
  p.stage_cost = [](const State& x, const Control&) {
    if (!in_spiral_box(x.vec())) return Cost::infinity();
    return Cost(x.vec().squaredNorm());
  };
  p.controls = [U](const State&) { return ControlSet(U); };

  auto model = std::make_shared<ShootingModel>();
  model->state_dimension = 2;
  model->modes = {DynamicsBranch{DynamicsBranch::Affine{A0, B, Vector::Zero(2)}, {}, {}},
                  DynamicsBranch{DynamicsBranch::Affine{A1, B, Vector::Zero(2)}, {}, {}}};
  model->mode_of = [](const Vector& x) -> std::size_t { return x[0] >= 0.0 ? 0 : 1; };
  Matrix g0(1, 2), g1(1, 2);
  g0 << -1.0, 0.0;
  g1 << 1.0, 0.0;
  model->mode_regions = {LinearInequalities{g0, Vector::Zero(1)}, LinearInequalities{g1, Vector::Zero(1)}};
  model->stage.quadratic = SmoothStageCost::Quadratic{Matrix::Identity(2, 2), Matrix::Zero(1, 1)};
  model->state_constraints = LinearInequalities::box(lo, hi);
  model->control_box = U;
  p.shooting = std::move(model);

  out.base.id = "mu0";
  out.base.action = [](const State&) { return Control{0.0}; };
  out.base.analytic_cost = spiral_base_cost;
  out.analytic_set = SampleSet("S0-analytic");
  out.analytic_set.add_region(spiral_base_region());
  out.analytic_set.set_analytic_backed(true);
  out.table_initial_states = {State{1.0, 1.0}, State{8.0, -9.0}};
  return out;
}

// ---------------------------------------------------------------------------
// Constrained double integrator

ConstrainedDoubleIntegrator make_constrained_double_integrator(const DoubleIntegratorParams& params) {
  Matrix A(2, 2), B(2, 1);
  A << 1.0, 1.0, 0.0, 1.0;
  B << 0.0, 1.0;
  const Vector lo = Vector::Constant(2, -4.0);
  const Vector hi = Vector::Constant(2, 4.0);
  const Box C{lo, hi};
  const Box U{Vector::Constant(1, -1.0), Vector::Constant(1, 1.0)};

  ConstrainedDoubleIntegrator out;
  Problem& p = out.problem;
  p.name = "double-integrator";
  p.dynamics = [A, B](const State& x, const Control& u) { return State(Vector(A * x.vec() + B * u.vec())); };
  p.stage_cost = [C](const State& x, const Control& u) {
    if (!C.contains(x.vec())) return Cost::infinity();
    return Cost(x.vec().squaredNorm() + u.vec().squaredNorm());
  };
  p.controls = [U](const State&) { return ControlSet(U); };

  auto model = std::make_shared<ShootingModel>();
  model->state_dimension = 2;
  model->modes = {DynamicsBranch{DynamicsBranch::Affine{A, B, Vector::Zero(2)}, {}, {}}};
  model->stage.quadratic = SmoothStageCost::Quadratic{Matrix::Identity(2, 2), Matrix::Identity(1, 1)};
  model->state_constraints = LinearInequalities::box(lo, hi);
  model->control_box = U;
  p.shooting = std::move(model);

  // Saturated linear feedback with a double closed-loop pole, switching to
  // two-step deadbeat near the origin so the trajectory ends exactly.
  const double r = params.base_pole;
  const double k1 = (1.0 - r) * (1.0 - r);
  const double k2 = 2.0 * (1.0 - r);
  const double threshold = params.deadbeat_threshold;
  out.base.id = "mu0";
  out.base.action = [k1, k2, threshold](const State& x) {
    const Vector& v = x.vec();
    if (std::max(std::abs(v[0] + 2.0 * v[1]), std::abs(v[0] + v[1])) <= threshold) {
      return Control{-(v[0] + 2.0 * v[1])};
    }
    return Control{std::clamp(-(k1 * v[0] + k2 * v[1]), -1.0, 1.0)};
  };

  out.budget.budget = params.budget;
  out.budget.usage = [](const State&, const Control& u) { return u.vec().squaredNorm(); };
  out.budget.usage_gradient = [](const Vector& x, const Vector& u, Vector& gx, Vector& gu) {
    gx = Vector::Zero(x.size());
    gu = 2.0 * u;
  };
  out.x0 = State{-3.95, -0.05};

  Trajectory seed;
  try {
    seed = simulate_policy(p, out.base, out.x0);
  } catch (const Error& e) {
    throw PreconditionViolation(std::string("double-integrator base policy is infeasible: ") + e.what());
  }
  if (!seed.has_tail_costs()) throw PreconditionViolation("double-integrator base policy does not settle");
  const double used = tail_usage(seed, out.budget).front();
  if (used > out.budget.budget) {
    throw PreconditionViolation("double-integrator base policy uses " + format_double(used) + " of budget " +
                                format_double(out.budget.budget));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Two vehicles on a grid

namespace {

using Cell = std::pair<int, int>;

int manhattan(Cell a, Cell b) { return std::abs(a.first - b.first) + std::abs(a.second - b.second); }

Cell move(Cell c, const std::string& m) {
  if (m == "E") return {c.first + 1, c.second};
  if (m == "W") return {c.first - 1, c.second};
  if (m == "N") return {c.first, c.second + 1};
  if (m == "S") return {c.first, c.second - 1};
  return c;
}

std::pair<Cell, Cell> parse_grid_state(const std::string& s) {
  int a = 0, b = 0, c = 0, d = 0;
  if (std::sscanf(s.c_str(), "%d,%d;%d,%d", &a, &b, &c, &d) != 4) {
    throw PreconditionViolation("bad grid state '" + s + "'");
  }
  return {{a, b}, {c, d}};
}

std::string preferred_move(Cell from, Cell to) {
  if (from.first < to.first) return "E";
  if (from.first > to.first) return "W";
  if (from.second < to.second) return "N";
  if (from.second > to.second) return "S";
  return "H";
}

}  // namespace

std::string grid_state(std::pair<int, int> p1, std::pair<int, int> p2) {
  return std::to_string(p1.first) + "," + std::to_string(p1.second) + ";" + std::to_string(p2.first) + "," +
         std::to_string(p2.second);
}

TwoVehicleGrid make_two_vehicle_grid(const GridParams& params) {
  const GridParams g = params;
  auto inside = [g](Cell c) { return c.first >= 0 && c.second >= 0 && c.first < g.width && c.second < g.height; };
  for (Cell c : {g.start1, g.start2, g.target1, g.target2}) {
    if (!inside(c)) throw PreconditionViolation("grid cell outside the grid");
  }
  if (g.safety < 1) throw PreconditionViolation("safety distance must be at least 1");

  TwoVehicleGrid out;
  Problem& p = out.problem;
  p.name = "two-vehicle";
  auto moves_of = [g, inside](Cell c, Cell target) {
    std::vector<std::string> ms;
    if (c == target) return std::vector<std::string>{"H"};
    for (const char* m : {"E", "H", "N", "S", "W"}) {
      if (inside(move(c, m))) ms.emplace_back(m);
    }
    return ms;
  };
  p.controls = [g, moves_of](const State& x) {
    const auto [c1, c2] = parse_grid_state(x.token());
    std::vector<Control> us;
    for (const auto& a : moves_of(c1, g.target1)) {
      for (const auto& b : moves_of(c2, g.target2)) us.emplace_back(a + "," + b);
    }
    return ControlSet(std::move(us));
  };
  p.dynamics = [](const State& x, const Control& u) {
    const auto [c1, c2] = parse_grid_state(x.token());
    const auto parts = split_components(u.token());
    return State(grid_state(move(c1, parts.at(0)), move(c2, parts.at(1))));
  };
  p.stage_cost = [g](const State& x, const Control& u) {
    const auto [c1, c2] = parse_grid_state(x.token());
    const auto parts = split_components(u.token());
    const Cell n1 = move(c1, parts.at(0));
    const Cell n2 = move(c2, parts.at(1));
    if (manhattan(n1, n2) < g.safety || (n1 == c2 && n2 == c1)) return Cost::infinity();
    return Cost(double((c1 != g.target1) + (c2 != g.target2)));
  };
  p.stopping = [g](const State& x) {
    const auto [c1, c2] = parse_grid_state(x.token());
    return c1 == g.target1 && c2 == g.target2;
  };

  out.base.id = "mu0";
  out.base.action = [g](const State& x) {
    const auto [c1, c2] = parse_grid_state(x.token());
    std::string m1 = preferred_move(c1, g.target1);
    std::string m2 = preferred_move(c2, g.target2);
    const Cell n1 = move(c1, m1);
    if (c1 != g.target1 && manhattan(move(c2, m2), n1) <= g.caution) m2 = "H";
    if (manhattan(n1, move(c2, m2)) < g.safety || (n1 == c2 && move(c2, m2) == c1)) m1 = "H";
    return Control(m1 + "," + m2);
  };
  out.partition = {{0}, {1}};
  out.x0 = State(grid_state(g.start1, g.start2));

  const std::size_t limit = 4 * static_cast<std::size_t>(g.width + g.height);
  Trajectory t;
  try {
    t = simulate_policy(p, out.base, out.x0, limit);
  } catch (const Error& e) {
    throw PreconditionViolation(std::string("no collision-free base schedule: ") + e.what());
  }
  if (!t.terminated_in_stopping_set()) throw PreconditionViolation("no collision-free base schedule: base stalls");
  return out;
}

// ---------------------------------------------------------------------------
// Four-city tour

namespace {

constexpr const char* kCities = "ABCD";

int city(char c) { return c - 'A'; }

bool complete_tour(const std::string& s) {
  if (s.size() < 2 || s.back() != 'A') return false;
  for (const char* c = kCities; *c != '\0'; ++c) {
    if (s.find(*c) == std::string::npos) return false;
  }
  return true;
}

Policy preference_policy(std::string id, std::string order) {
  Policy p;
  p.id = std::move(id);
  p.action = [order](const State& x) {
    const auto& s = x.token();
    if (complete_tour(s)) return Control("A");
    for (char c : order) {
      if (s.find(c) == std::string::npos) return Control(std::string(1, c));
    }
    return Control("A");
  };
  return p;
}

}  // namespace

TspCostMatrix canonical_tsp_costs() {
  constexpr double kUnused = 0.0;  // diagonal
  return TspCostMatrix{{{kUnused, 1, 3, 3}, {3, kUnused, 2, 1}, {1, 3, kUnused, 2}, {2, 3, 1, kUnused}}};
}

TspInstance make_tsp_variant(const std::optional<TspCostMatrix>& costs) {
  TspInstance out;
  out.costs = costs.value_or(canonical_tsp_costs());
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (i != j && !(out.costs[i][j] > 0.0 && std::isfinite(out.costs[i][j]))) {
        throw PreconditionViolation("TSP leg costs must be positive and finite");
      }
    }
  }
  const TspCostMatrix c = out.costs;
  Problem& p = out.problem;
  p.name = "tsp";
  p.controls = [](const State&) { return ControlSet(std::vector<Control>{"A", "B", "C", "D"}); };
  p.stopping = [](const State& x) { return complete_tour(x.token()); };
  p.dynamics = [](const State& x, const Control& u) {
    if (complete_tour(x.token())) return x;
    return State(x.token() + u.token());
  };
  p.stage_cost = [c](const State& x, const Control& u) {
    const auto& s = x.token();
    if (complete_tour(s)) return Cost::zero();
    const char to = u.token().at(0);
    if (to == s.back()) return Cost::infinity();
    return Cost(c[static_cast<std::size_t>(city(s.back()))][static_cast<std::size_t>(city(to))]);
  };
  out.mu0 = preference_policy("mu0", "CDB");
  out.mu1 = preference_policy("mu1", "BCD");
  out.start = State("A");
  return out;
}

std::vector<std::string> tsp_claim_failures(const TspCostMatrix& costs) {
  std::vector<std::string> out;
  TspInstance t;
  try {
    t = make_tsp_variant(costs);
  } catch (const PreconditionViolation& e) {
    return {e.what()};
  }
  const Cost best = brute_force_optimal(t.problem, t.start, 8);
  const double target = tour_cost(costs, "ABDCA");
  if (best.is_infinite() || best.value() != target) out.emplace_back("ABDCA is not optimal");
  std::string mid = "BCD";
  do {
    const std::string tour = "A" + mid + "A";
    if (tour != "ABDCA" && !(tour_cost(costs, tour) > target)) out.push_back("tour " + tour + " ties or beats ABDCA");
  } while (std::next_permutation(mid.begin(), mid.end()));
  if (!(tour_cost(costs, "ABCDA") < tour_cost(costs, "ACDBA"))) out.emplace_back("ABCDA does not beat ACDBA");

  SolverConfig cfg;
  cfg.lookahead = 2;
  const SampleSet s0 = build_from_trajectory(simulate_policy(t.problem, t.mu0, t.start), "S0");
  const SampleSet s1 = build_from_trajectory(simulate_policy(t.problem, t.mu1, t.start), "S1");
  const SampleSet tail = build_from_trajectory(simulate_policy(t.problem, t.mu0, State("ABD")), "ABD");
  const std::vector<std::pair<SampleSet, std::string>> cases = {
      {s0, "ACDBA"}, {merge({s0, s1}), "ABCDA"}, {merge({s0, s1, tail}), "ABDCA"}};
  for (const auto& [set, expected] : cases) {
    std::string got;
    try {
      got = run_rollout(t.problem, set, t.start, cfg).trajectory.states.back().token();
    } catch (const Error& e) {
      got = e.what();
    }
    if (got != expected) out.push_back("rollout with " + std::to_string(set.size()) + " samples ends at " + got +
                                       ", expected " + expected);
  }
  return out;
}

double tour_cost(const TspCostMatrix& costs, const std::string& tour) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < tour.size(); ++i) {
    total += costs[static_cast<std::size_t>(city(tour[i]))][static_cast<std::size_t>(city(tour[i + 1]))];
  }
  return total;
}

// ---------------------------------------------------------------------------
// Exhaustive search

namespace {

struct Enumerator {
  const Problem& problem;
  std::size_t cap;
  std::atomic<std::size_t>& expanded;

  Cost best(const State& x, std::size_t depth) {
    if (problem.is_stopping(x)) return Cost::zero();
    if (depth == 0) return Cost::infinity();
    if (++expanded > cap) throw SearchTooLarge("search exceeds the cap of " + std::to_string(cap) + " nodes");
    const ControlSet us = problem.controls(x);
    if (!us.is_finite()) throw PreconditionViolation("exhaustive search needs finite control sets");
    Cost out = Cost::infinity();
    for (const auto& u : us.options()) out = min(out, branch(x, u, depth));
    return out;
  }

  Cost branch(const State& x, const Control& u, std::size_t depth) {
    const Cost g = problem.cost(x, u);
    if (g.is_infinite()) return g;
    return g + best(problem.step(x, u), depth - 1);
  }
};

}  // namespace

Cost brute_force_optimal(const Problem& problem, const State& x0, std::size_t depth, std::size_t cap,
                         std::size_t threads) {
  std::atomic<std::size_t> expanded{0};
  if (problem.is_stopping(x0)) return Cost::zero();
  if (depth == 0) return Cost::infinity();
  const ControlSet us = problem.controls(x0);
  if (!us.is_finite()) throw PreconditionViolation("exhaustive search needs finite control sets");
  const auto& options = us.options();
  std::vector<Cost> values(options.size(), Cost::infinity());
  if (threads <= 1) {
    Enumerator e{problem, cap, expanded};
    for (std::size_t i = 0; i < options.size(); ++i) values[i] = e.branch(x0, options[i], depth);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(options.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(threads, options.size()); ++w) {
      pool.emplace_back([&] {
        Enumerator e{problem, cap, expanded};
        for (std::size_t i = next++; i < options.size(); i = next++) {
          try {
            values[i] = e.branch(x0, options[i], depth);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& err : errors) {
      if (err) std::rethrow_exception(err);
    }
  }
  Cost out = Cost::infinity();
  for (const auto& v : values) out = min(out, v);
  return out;
}

std::vector<std::string> instance_names() { return {"hybrid", "double-integrator", "two-vehicle", "tsp"}; }

}  // namespace rollout
