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


#include "rollout/cost.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>

#include "rollout/types.hpp"

namespace rollout {

namespace {

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string to_string(Cost c) { return c.is_infinite() ? std::string("inf") : shortest(c.value()); }

Cost parse_cost(const std::string& text) {
  if (text == "inf" || text == "+inf" || text == "Infinity" || text == "infinity") return Cost::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a cost: '" + text + "'");
  }
  if (used != text.size()) throw std::invalid_argument("not a cost: '" + text + "'");
  if (std::isinf(v)) return Cost::infinity();
  return Cost(v);
}

template <class Tag>
std::string to_string(const Element<Tag>& e) {
  if (e.is_token()) return e.token();
  std::string out = "(";
  for (Eigen::Index i = 0; i < e.vec().size(); ++i) {
    if (i > 0) out += ",";
    out += shortest(e.vec()[i]);
  }
  return out + ")";
}

template std::string to_string(const Element<StateTag>&);
template std::string to_string(const Element<ControlTag>&);

bool lexicographically_less(const std::vector<Control>& a, const std::vector<Control>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

bool Box::contains(const Vector& u, double tol) const {
  if (u.size() != lo.size()) return false;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (u[i] < lo[i] - tol || u[i] > hi[i] + tol) return false;
  }
  return true;
}

bool ControlSet::contains(const Control& u, double tol) const {
  if (is_finite()) {
    for (const auto& o : options()) {
      if (o == u) return true;
    }
    return false;
  }
  return u.is_vector() && box().contains(u.vec(), tol);
}

}  // namespace rollout
