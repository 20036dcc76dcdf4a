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

#include <algorithm>
#include <cmath>
#include <compare>
#include <limits>
#include <stdexcept>
#include <string>

namespace rollout {

/// Nonnegative extended-real cost.
///
/// +inf is stored as the IEEE infinity, which is absorbing under addition;
/// the constructor rejects negative values and NaN so the sum of two costs
/// can never produce inf - inf.
class Cost {
 public:
  constexpr Cost() = default;

  explicit Cost(double v) : value_(v) {
    if (std::isnan(v) || v < 0.0) {
      throw std::invalid_argument("cost must be nonnegative, got " + std::to_string(v));
    }
  }

  static constexpr Cost infinity() {
    Cost c;
    c.value_ = std::numeric_limits<double>::infinity();
    return c;
  }

  static constexpr Cost zero() { return Cost{}; }

  [[nodiscard]] constexpr bool is_infinite() const { return value_ == std::numeric_limits<double>::infinity(); }
  [[nodiscard]] constexpr bool is_finite() const { return !is_infinite(); }
  [[nodiscard]] constexpr double value() const { return value_; }

  constexpr Cost& operator+=(Cost other) {
    value_ += other.value_;
    return *this;
  }

  friend constexpr Cost operator+(Cost a, Cost b) { return a += b; }

  friend constexpr bool operator==(Cost a, Cost b) { return a.value_ == b.value_; }
  friend constexpr std::partial_ordering operator<=>(Cost a, Cost b) { return a.value_ <=> b.value_; }

 private:
  double value_ = 0.0;
};

inline Cost min(Cost a, Cost b) { return b < a ? b : a; }

/// Relative discrepancy |a - b| / max(1, |a|, |b|); 0 when both are +inf.
inline double relative_gap(Cost a, Cost b) {
  if (a.is_infinite() || b.is_infinite()) {
    return a == b ? 0.0 : std::numeric_limits<double>::infinity();
  }
  const double scale = std::max({1.0, a.value(), b.value()});
  return std::abs(a.value() - b.value()) / scale;
}

std::string to_string(Cost c);

/// Parses "inf" / "Infinity" or a decimal number.
Cost parse_cost(const std::string& text);

}  // namespace rollout
