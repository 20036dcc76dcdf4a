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


#include "rollout/shooting.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

#include "rollout/errors.hpp"

namespace rollout {

namespace {

// a . x_stage <= b, or == b.
struct Row {
  std::size_t stage = 0;
  Vector a;
  double b = 0.0;
  bool equality = false;
  double multiplier = 0.0;
};

Matrix project_columns(const Box& box, Matrix U) {
  for (Eigen::Index k = 0; k < U.cols(); ++k) U.col(k) = box.project(U.col(k));
  return U;
}

class Subsolver {
 public:
  Subsolver(const ShootingSubproblem& sub, const SolverConfig& cfg)
      : sub_(sub), cfg_(cfg), model_(*sub.model), horizon_(sub.modes.size()) {}

  ShootingOutcome run(const Matrix& initial) {
    ShootingOutcome out;
    Matrix U = project_columns(sub_.box, initial);
    out.controls = U;
    if (!build_rows(U)) {
      out.objective = std::numeric_limits<double>::infinity();
      out.violation = std::numeric_limits<double>::infinity();
      return out;
    }
    const double ineq_target = cfg_.guard_margin > 0.0 ? 0.5 * cfg_.guard_margin : 0.5 * cfg_.terminal_tolerance;
    const double eq_target = 0.01 * cfg_.terminal_tolerance;
    rho_ = cfg_.initial_penalty;
    double best_viol = std::numeric_limits<double>::infinity();
    double prev_viol = best_viol;
    int stalls = 0;
    for (std::size_t round = 0; round < cfg_.max_penalty_rounds; ++round) {
      out.penalty_rounds = round + 1;
      out.converged = minimize(U, out.iterations);
      auto [ineq, eq] = violations(U);
      out.violation = std::max(ineq, eq);
      out.feasible = ineq <= ineq_target && eq <= eq_target;
      if (out.feasible || rows_.empty()) break;
      const double scaled = std::max(ineq / ineq_target, eq / eq_target);
      if (scaled < 0.9 * best_viol) {
        best_viol = scaled;
        stalls = 0;
      } else if (++stalls >= 4) {
        break;  // no progress under growing penalties: treat as infeasible
      }
      update_multipliers(U);
      if (scaled > 0.25 * prev_viol) rho_ = std::min(rho_ * cfg_.penalty_growth, cfg_.max_penalty);
      prev_viol = scaled;
    }
    out.controls = U;
    out.objective = smooth_objective(U);
    return out;
  }

  std::vector<Vector> simulate(const Matrix& U) const {
    std::vector<Vector> xs;
    xs.reserve(horizon_ + 1);
    xs.push_back(sub_.x0);
    for (std::size_t k = 0; k < horizon_; ++k) {
      xs.push_back(model_.modes[sub_.modes[k]](xs[k], U.col(static_cast<Eigen::Index>(k))));
    }
    return xs;
  }

 private:
  // Collects constraint rows; rows whose left side does not depend on the
  // controls are checked once and dropped. Returns false if one of those is
  // violated.
  bool build_rows(const Matrix& U) {
    const auto n = sub_.x0.size();
    const auto m = sub_.box.lo.size();
    const auto nu = m * static_cast<Eigen::Index>(horizon_);
    // State sensitivities at the initial iterate and at an interior probe.
    Matrix probe = U;
    for (Eigen::Index k = 0; k < U.cols(); ++k) {
      for (Eigen::Index i = 0; i < m; ++i) {
        const double lo = sub_.box.lo[i], hi = sub_.box.hi[i];
        probe(i, k) = std::isfinite(lo) && std::isfinite(hi) ? lo + (0.37 + 0.11 * double(k % 5)) * (hi - lo)
                                                             : U(i, k) + 0.5;
      }
    }
    auto sensitivities = [&](const Matrix& V) {
      std::vector<Matrix> S(horizon_ + 1, Matrix::Zero(n, nu));
      const auto xs = simulate(V);
      Matrix fx, fu;
      for (std::size_t k = 0; k < horizon_; ++k) {
        model_.modes[sub_.modes[k]].linearize(xs[k], V.col(static_cast<Eigen::Index>(k)), fx, fu);
        S[k + 1] = fx * S[k];
        S[k + 1].middleCols(static_cast<Eigen::Index>(k) * m, m) += fu;
      }
      return S;
    };
    const auto S1 = sensitivities(U);
    const auto S2 = sensitivities(probe);
    const auto xs = simulate(U);

    auto add = [&](std::size_t stage, const Vector& a, double b, bool equality, double margin) {
      const bool constant = (a.transpose() * S1[stage]).cwiseAbs().maxCoeff() == 0.0 &&
                            (a.transpose() * S2[stage]).cwiseAbs().maxCoeff() == 0.0;
      if (constant) {
        const double r = a.dot(xs[stage]) - b;
        return equality ? std::abs(r) <= 0.01 * cfg_.terminal_tolerance : r <= 0.0;
      }
      rows_.push_back(Row{stage, a, equality ? b : b - margin, equality, 0.0});
      return true;
    };
    auto add_system = [&](std::size_t stage, const LinearInequalities& sys, double margin) {
      for (Eigen::Index r = 0; r < sys.rows(); ++r) {
        if (!add(stage, sys.G.row(r).transpose(), sys.h[r], false, margin)) return false;
      }
      return true;
    };

    const double margin = cfg_.guard_margin;
    for (std::size_t k = 1; k < horizon_; ++k) {
      if (!add_system(k, model_.state_constraints, margin)) return false;
      if (sub_.enforce_modes && model_.mode_count() > 1 && !add_system(k, model_.mode_regions[sub_.modes[k]], margin)) {
        return false;
      }
    }
    for (std::size_t k = 1; k <= horizon_; ++k) {
      if (!add_system(k, model_.successor_constraints, margin)) return false;
    }
    const auto& term = sub_.terminal;
    if (term.smooth != nullptr && !add_system(horizon_, term.smooth->membership, margin)) return false;
    if (term.target != nullptr) {
      const auto& t = *term.target;
      for (Eigen::Index i = 0; i < t.point.size(); ++i) {
        Vector e = Vector::Zero(n);
        if (t.relations[static_cast<std::size_t>(i)] == Relation::kEqual) {
          e[i] = 1.0;
          if (!add(horizon_, e, t.point[i], true, 0.0)) return false;
        } else {
          e[i] = -1.0;
          if (!add(horizon_, e, -t.point[i], false, margin)) return false;
        }
      }
    }
    by_stage_.assign(horizon_ + 1, {});
    for (std::size_t r = 0; r < rows_.size(); ++r) by_stage_[rows_[r].stage].push_back(r);
    return true;
  }

  double smooth_objective(const Matrix& U) const {
    const auto xs = simulate(U);
    double f = 0.0;
    for (std::size_t k = 0; k < horizon_; ++k) f += model_.stage(xs[k], U.col(static_cast<Eigen::Index>(k)));
    if (sub_.terminal.smooth != nullptr) f += sub_.terminal.smooth->value(xs[horizon_]);
    return f;
  }

  // Augmented-Lagrangian objective and, if requested, its gradient.
  double phi(const Matrix& U, Matrix* grad) const {
    const auto xs = simulate(U);
    double f = 0.0;
    for (std::size_t k = 0; k < horizon_; ++k) f += model_.stage(xs[k], U.col(static_cast<Eigen::Index>(k)));
    if (sub_.terminal.smooth != nullptr) f += sub_.terminal.smooth->value(xs[horizon_]);
    for (const auto& row : rows_) {
      const double r = row.a.dot(xs[row.stage]) - row.b;
      if (row.equality) {
        f += row.multiplier * r + 0.5 * rho_ * r * r;
      } else {
        const double s = std::max(0.0, r + row.multiplier / rho_);
        f += 0.5 * rho_ * (s * s - (row.multiplier / rho_) * (row.multiplier / rho_));
      }
    }
    if (grad == nullptr) return f;

    grad->resize(U.rows(), U.cols());
    auto penalty_gradient = [&](std::size_t stage, Vector& lambda) {
      for (std::size_t r : by_stage_[stage]) {
        const auto& row = rows_[r];
        const double res = row.a.dot(xs[stage]) - row.b;
        const double w = row.equality ? row.multiplier + rho_ * res : rho_ * std::max(0.0, res + row.multiplier / rho_);
        if (w != 0.0) lambda += w * row.a;
      }
    };
    Vector lambda = Vector::Zero(sub_.x0.size());
    if (sub_.terminal.smooth != nullptr) lambda = sub_.terminal.smooth->gradient(xs[horizon_]);
    penalty_gradient(horizon_, lambda);
    Matrix fx, fu;
    Vector gx, gu;
    for (std::size_t k = horizon_; k-- > 0;) {
      const auto kk = static_cast<Eigen::Index>(k);
      model_.modes[sub_.modes[k]].linearize(xs[k], U.col(kk), fx, fu);
      model_.stage.differentiate(xs[k], U.col(kk), gx, gu);
      grad->col(kk) = gu + fu.transpose() * lambda;
      lambda = gx + fx.transpose() * lambda;
      if (k > 0) penalty_gradient(k, lambda);
    }
    return f;
  }

  // Accelerated projected gradient with backtracking and function restart.
  bool minimize(Matrix& U, std::size_t& iterations) {
    Matrix x = U, x_prev = U, y = U, gy, z;
    double fx = phi(x, nullptr);
    double t = 1.0;
    for (std::size_t it = 0; it < cfg_.max_iterations; ++it) {
      ++iterations;
      const double fy = phi(y, &gy);
      double fz = 0.0;
      Matrix d;
      while (true) {
        z = project_columns(sub_.box, y - gy / lipschitz_);
        d = z - y;
        fz = phi(z, nullptr);
        const double model = fy + (gy.array() * d.array()).sum() + 0.5 * lipschitz_ * d.squaredNorm();
        if (fz <= model + 1e-14 * std::abs(fy) || lipschitz_ > 1e30) break;
        lipschitz_ *= 2.0;
      }
      if (fz > fx) {
        // Momentum overshot; restart from the last accepted point.
        y = x;
        t = 1.0;
        if (d.lpNorm<Eigen::Infinity>() <= cfg_.gradient_tolerance * std::max(1.0, x.lpNorm<Eigen::Infinity>())) {
          U = x;
          return true;
        }
        continue;
      }
      x_prev = x;
      x = z;
      fx = fz;
      if (d.lpNorm<Eigen::Infinity>() <= cfg_.gradient_tolerance * std::max(1.0, x.lpNorm<Eigen::Infinity>())) {
        U = x;
        return true;
      }
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = x + ((t - 1.0) / t_next) * (x - x_prev);
      t = t_next;
      lipschitz_ *= 0.9;
    }
    U = x;
    return false;
  }

  std::pair<double, double> violations(const Matrix& U) const {
    const auto xs = simulate(U);
    double ineq = 0.0, eq = 0.0;
    for (const auto& row : rows_) {
      const double r = row.a.dot(xs[row.stage]) - row.b;
      if (row.equality) {
        eq = std::max(eq, std::abs(r));
      } else {
        ineq = std::max(ineq, r);
      }
    }
    return {ineq, eq};
  }

  void update_multipliers(const Matrix& U) {
    const auto xs = simulate(U);
    for (auto& row : rows_) {
      const double r = row.a.dot(xs[row.stage]) - row.b;
      row.multiplier = row.equality ? row.multiplier + rho_ * r : std::max(0.0, row.multiplier + rho_ * r);
    }
  }

  const ShootingSubproblem& sub_;
  const SolverConfig& cfg_;
  const ShootingModel& model_;
  std::size_t horizon_;
  std::vector<Row> rows_;
  std::vector<std::vector<std::size_t>> by_stage_;
  double rho_ = 1.0;
  double lipschitz_ = 1.0;
};

std::vector<Control> to_controls(const Matrix& U) {
  std::vector<Control> out;
  out.reserve(static_cast<std::size_t>(U.cols()));
  for (Eigen::Index k = 0; k < U.cols(); ++k) out.emplace_back(Vector(U.col(k)));
  return out;
}

// Mode sequences with the first mode fixed by x0, in lexicographic order.
// With affine modes, x_k = c_k + N_k U is affine in the stacked controls, so
// a single constraint row that no control in the box can satisfy rules out
// the prefix and everything below it. Only provably infeasible sequences
// are dropped.
std::vector<std::vector<std::size_t>> enumerate_mode_sequences(const ShootingModel& model, const Vector& x0,
                                                               std::size_t horizon, const Box& box, double margin) {
  const std::size_t modes = model.mode_count();
  const auto n = x0.size();
  const auto m = box.lo.size();
  const auto nu = m * static_cast<Eigen::Index>(horizon);
  bool affine = true;
  for (const auto& b : model.modes) affine = affine && b.affine.has_value();
  const bool bounded = box.lo.allFinite() && box.hi.allFinite();
  Vector center(nu), radius(nu);
  for (std::size_t k = 0; k < horizon; ++k) {
    const auto off = static_cast<Eigen::Index>(k) * m;
    center.segment(off, m) = 0.5 * (box.lo + box.hi);
    radius.segment(off, m) = 0.5 * (box.hi - box.lo);
  }
  const double slack = 0.5 * margin;

  // Smallest value of every row of sys at x = c + N U over the box.
  auto impossible = [&](const LinearInequalities& sys, const Vector& c, const Matrix& N) {
    for (Eigen::Index r = 0; r < sys.rows(); ++r) {
      const Vector g = N.transpose() * sys.G.row(r).transpose();
      const double lowest = sys.G.row(r).dot(c) + g.dot(center) - g.cwiseAbs().dot(radius);
      if (lowest > sys.h[r] - slack + 1e-9 * std::max(1.0, std::abs(sys.h[r]))) return true;
    }
    return false;
  };

  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> seq(horizon);
  seq[0] = model.active_mode(x0);
  std::vector<Vector> cs(horizon + 1);
  std::vector<Matrix> Ns(horizon + 1);
  cs[0] = x0;
  Ns[0] = Matrix::Zero(n, nu);

  // Extends the prefix ending at stage k (mode seq[k] already chosen).
  std::function<void(std::size_t)> extend = [&](std::size_t k) {
    if (affine && bounded) {
      const auto& a = *model.modes[seq[k]].affine;
      cs[k + 1] = a.A * cs[k] + a.c;
      Ns[k + 1] = a.A * Ns[k];
      Ns[k + 1].middleCols(static_cast<Eigen::Index>(k) * m, m) += a.B;
      if (impossible(model.successor_constraints, cs[k + 1], Ns[k + 1])) return;
      if (k + 1 < horizon && impossible(model.state_constraints, cs[k + 1], Ns[k + 1])) return;
    }
    if (k + 1 == horizon) {
      out.push_back(seq);
      return;
    }
    for (std::size_t mode = 0; mode < modes; ++mode) {
      if (affine && bounded && impossible(model.mode_regions[mode], cs[k + 1], Ns[k + 1])) continue;
      seq[k + 1] = mode;
      extend(k + 1);
    }
  };
  extend(0);
  return out;
}

}  // namespace

ShootingOutcome solve_subproblem(const ShootingSubproblem& sub, const Matrix& initial, const SolverConfig& cfg) {
  if (sub.model == nullptr || sub.modes.empty()) throw PreconditionViolation("incomplete shooting subproblem");
  return Subsolver(sub, cfg).run(initial);
}

std::vector<Vector> simulate_branches(const ShootingSubproblem& sub, const Matrix& controls) {
  return Subsolver(sub, SolverConfig{}).simulate(controls);
}

LookaheadSolution search_shooting(const Problem& problem, const State& x, const std::vector<ShootingTerminal>& terminals,
                                  const SequenceEvaluator& evaluate, const SolverConfig& cfg,
                                  const std::vector<Control>* warm_start, const std::optional<Box>& box_override) {
  const ShootingModel& model = *problem.shooting;
  const std::size_t horizon = cfg.lookahead;
  const Box box = box_override ? *box_override : model.control_box;
  const Vector x0 = x.vec();
  const auto m = box.lo.size();

  Matrix initial = Matrix::Zero(m, static_cast<Eigen::Index>(horizon));
  bool have_warm = warm_start != nullptr && warm_start->size() == horizon;
  if (have_warm) {
    for (std::size_t k = 0; k < horizon; ++k) {
      const auto& u = (*warm_start)[k];
      if (!u.is_vector() || u.vec().size() != m) {
        have_warm = false;
        break;
      }
      initial.col(static_cast<Eigen::Index>(k)) = u.vec();
    }
  }
  if (!have_warm) initial.setZero();
  initial = project_columns(box, initial);

  // Mode sequences: all of them (first mode fixed by x) under mode
  // enumeration, otherwise the one induced by the initial iterate.
  std::vector<std::vector<std::size_t>> sequences;
  const bool enumerate = cfg.backend == Backend::kHybridModeEnum && model.mode_count() > 1;
  if (enumerate) {
    sequences = enumerate_mode_sequences(model, x0, horizon, box, cfg.guard_margin);
  } else {
    std::vector<std::size_t> seq(horizon);
    Vector xk = x0;
    for (std::size_t k = 0; k < horizon; ++k) {
      seq[k] = model.active_mode(xk);
      xk = model.modes[seq[k]](xk, initial.col(static_cast<Eigen::Index>(k)));
    }
    sequences.push_back(std::move(seq));
  }

  struct Candidate {
    Cost value = Cost::infinity();
    std::vector<Control> controls;
    State terminal;
    bool converged = true;
  };
  Candidate best;
  if (have_warm) {
    best.controls = *warm_start;
    best.value = evaluate(best.controls, &best.terminal);
  }
  const double incumbent0 = best.value.is_finite() ? best.value.value() : std::numeric_limits<double>::infinity();

  const std::size_t total = terminals.size() * sequences.size();
  std::vector<Candidate> results(total);
  std::vector<char> solved(total, 0);

  auto mode_consistent = [&](const std::vector<Control>& us, const std::vector<std::size_t>& seq) {
    State y = x;
    for (std::size_t k = 0; k < horizon; ++k) {
      if (model.active_mode(y.vec()) != seq[k]) return false;
      y = problem.step(y, us[k]);
    }
    return true;
  };

  auto work = [&](std::size_t idx, double incumbent) {
    const auto& term = terminals[idx / sequences.size()];
    const auto& seq = sequences[idx % sequences.size()];
    if (term.lower_bound > incumbent) return;
    ShootingSubproblem sub{&model, x0, seq, enumerate, term, box};
    const ShootingOutcome out = Subsolver(sub, cfg).run(initial);
    solved[idx] = 1;
    if (!out.feasible) return;
    Candidate c;
    c.controls = to_controls(out.controls);
    if (enumerate && !mode_consistent(c.controls, seq)) return;
    c.value = evaluate(c.controls, &c.terminal);
    c.converged = out.converged;
    results[idx] = std::move(c);
  };

  if (cfg.threads <= 1 || total <= 1) {
    double incumbent = incumbent0;
    for (std::size_t idx = 0; idx < total; ++idx) {
      work(idx, incumbent);
      if (results[idx].value.is_finite()) incumbent = std::min(incumbent, results[idx].value.value());
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const std::size_t workers = std::min(cfg.threads, total);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t idx = next++; idx < total; idx = next++) work(idx, incumbent0);
      });
    }
    for (auto& th : pool) th.join();
  }

  LookaheadSolution sol;
  for (std::size_t idx = 0; idx < total; ++idx) {
    sol.subproblems += solved[idx];
    if (results[idx].value < best.value) {
      best = results[idx];
    }
  }
  sol.value = best.value;
  if (best.value.is_finite()) {
    sol.controls = best.controls;
    sol.terminal_state = best.terminal;
    sol.status = best.converged ? SolveStatus::kOptimal : SolveStatus::kIterationLimit;
  } else {
    sol.status = SolveStatus::kInfeasible;
    sol.terminal_state = x;
  }
  return sol;
}

}  // namespace rollout
