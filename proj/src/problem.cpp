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


#include "rollout/problem.hpp"

#include <algorithm>

namespace rollout {

double LinearInequalities::violation(const Vector& x) const {
  if (empty()) return 0.0;
  return std::max(0.0, (G * x - h).maxCoeff());
}

LinearInequalities LinearInequalities::box(const Vector& lo, const Vector& hi) {
  const Eigen::Index n = lo.size();
  LinearInequalities out;
  out.G = Matrix::Zero(2 * n, n);
  out.h = Vector(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.G(i, i) = 1.0;
    out.h[i] = hi[i];
    out.G(n + i, i) = -1.0;
    out.h[n + i] = -lo[i];
  }
  return out;
}

LinearInequalities LinearInequalities::stack(const LinearInequalities& a, const LinearInequalities& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  LinearInequalities out;
  out.G = Matrix(a.rows() + b.rows(), a.G.cols());
  out.G << a.G, b.G;
  out.h = Vector(a.rows() + b.rows());
  out.h << a.h, b.h;
  return out;
}

Vector DynamicsBranch::operator()(const Vector& x, const Vector& u) const {
  if (affine) return affine->A * x + affine->B * u + affine->c;
  return f(x, u);
}

void DynamicsBranch::linearize(const Vector& x, const Vector& u, Matrix& fx, Matrix& fu) const {
  if (affine) {
    fx = affine->A;
    fu = affine->B;
    return;
  }
  if (jacobians) {
    jacobians(x, u, fx, fu);
    return;
  }
  const Vector y = f(x, u);
  fx.resize(y.size(), x.size());
  fu.resize(y.size(), u.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    fx.col(i) = (f(xp, u) - f(xm, u)) / (2 * h);
  }
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(u[i]));
    Vector up = u, um = u;
    up[i] += h;
    um[i] -= h;
    fu.col(i) = (f(x, up) - f(x, um)) / (2 * h);
  }
}

double SmoothStageCost::operator()(const Vector& x, const Vector& u) const {
  if (quadratic) return x.dot(quadratic->Q * x) + u.dot(quadratic->R * u);
  return value(x, u);
}

void SmoothStageCost::differentiate(const Vector& x, const Vector& u, Vector& gx, Vector& gu) const {
  if (quadratic) {
    gx = (quadratic->Q + quadratic->Q.transpose()) * x;
    gu = (quadratic->R + quadratic->R.transpose()) * u;
    return;
  }
  gradient(x, u, gx, gu);
}

StructureReport check_structure(const Problem& problem, const std::vector<State>& states) {
  StructureReport report;
  auto fail = [&](const std::string& msg) {
    report.passed = false;
    report.problems.push_back(msg);
  };
  for (const auto& x : states) {
    const ControlSet us = problem.controls(x);
    if (us.empty()) {
      fail("empty control set at " + to_string(x));
      continue;
    }
    std::vector<Control> probe;
    if (us.is_finite()) {
      probe = us.options();
    } else {
      probe = {Control(us.box().lo), Control(us.box().hi), Control(Vector((us.box().lo + us.box().hi) / 2))};
    }
    for (const auto& u : probe) {
      const State y1 = problem.step(x, u);
      const State y2 = problem.step(x, u);
      if (!(y1 == y2)) fail("nondeterministic dynamics at " + to_string(x));
      if (!(problem.cost(x, u) == problem.cost(x, u))) fail("nondeterministic stage cost at " + to_string(x));
      if (problem.is_stopping(x)) {
        if (problem.cost(x, u) != Cost::zero()) fail("stopping state with positive cost: " + to_string(x));
        if (!problem.is_stopping(y1)) fail("stopping set not closed at " + to_string(x));
      }
    }
  }
  return report;
}

}  // namespace rollout
