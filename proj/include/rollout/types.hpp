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

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace rollout {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Default tolerance for deciding that two continuous states coincide.
inline constexpr double kStateTolerance = 1e-9;

/// A point that is either an opaque token or a real vector.
///
/// Used through the two aliases `State` and `Control` so that the two roles
/// cannot be mixed up at call sites.
template <class Tag>
class Element {
 public:
  Element() : data_(std::string{}) {}
  Element(std::string token) : data_(std::move(token)) {}          // NOLINT(implicit)
  Element(const char* token) : data_(std::string(token)) {}        // NOLINT(implicit)
  Element(Vector v) : data_(std::move(v)) {}                       // NOLINT(implicit)
  Element(std::initializer_list<double> v) : data_(Vector(static_cast<Eigen::Index>(v.size()))) {
    Eigen::Index i = 0;
    for (double d : v) std::get<Vector>(data_)[i++] = d;
  }

  [[nodiscard]] bool is_token() const { return std::holds_alternative<std::string>(data_); }
  [[nodiscard]] bool is_vector() const { return std::holds_alternative<Vector>(data_); }

  [[nodiscard]] const std::string& token() const { return std::get<std::string>(data_); }
  [[nodiscard]] const Vector& vec() const { return std::get<Vector>(data_); }

  /// Number of coordinates; 0 for tokens.
  [[nodiscard]] std::size_t dimension() const {
    return is_vector() ? static_cast<std::size_t>(vec().size()) : 0;
  }

  /// Exact equality (bitwise for vectors).
  friend bool operator==(const Element& a, const Element& b) {
    if (a.is_token() != b.is_token()) return false;
    if (a.is_token()) return a.token() == b.token();
    return a.vec().size() == b.vec().size() && a.vec() == b.vec();
  }

  /// Lexicographic order: tokens by string, vectors by component.
  friend bool operator<(const Element& a, const Element& b) {
    if (a.is_token() != b.is_token()) return a.is_token();
    if (a.is_token()) return a.token() < b.token();
    const auto& x = a.vec();
    const auto& y = b.vec();
    const auto n = std::min(x.size(), y.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      if (x[i] < y[i]) return true;
      if (y[i] < x[i]) return false;
    }
    return x.size() < y.size();
  }

 private:
  std::variant<std::string, Vector> data_;
};

using State = Element<struct StateTag>;
using Control = Element<struct ControlTag>;

/// Infinity-norm closeness for vectors, exact equality for tokens.
template <class Tag>
bool approx_equal(const Element<Tag>& a, const Element<Tag>& b, double tol = kStateTolerance) {
  if (a.is_token() || b.is_token()) return a == b;
  if (a.vec().size() != b.vec().size()) return false;
  if (a.vec().size() == 0) return true;
  return (a.vec() - b.vec()).cwiseAbs().maxCoeff() <= tol;
}

template <class Tag>
std::string to_string(const Element<Tag>& e);

/// Lexicographic comparison of control sequences.
bool lexicographically_less(const std::vector<Control>& a, const std::vector<Control>& b);

/// Axis-aligned box of admissible continuous controls.
struct Box {
  Vector lo;
  Vector hi;

  [[nodiscard]] Vector project(const Vector& u) const { return u.cwiseMax(lo).cwiseMin(hi); }
  [[nodiscard]] bool contains(const Vector& u, double tol = 0.0) const;
};

/// U(x): either a finite enumeration or a box.
class ControlSet {
 public:
  ControlSet(std::vector<Control> options) : data_(std::move(options)) {}  // NOLINT(implicit)
  ControlSet(Box box) : data_(std::move(box)) {}                           // NOLINT(implicit)

  [[nodiscard]] bool is_finite() const { return std::holds_alternative<std::vector<Control>>(data_); }
  [[nodiscard]] const std::vector<Control>& options() const { return std::get<std::vector<Control>>(data_); }
  [[nodiscard]] const Box& box() const { return std::get<Box>(data_); }
  [[nodiscard]] bool empty() const { return is_finite() && options().empty(); }
  [[nodiscard]] bool contains(const Control& u, double tol = 1e-12) const;

 private:
  std::variant<std::vector<Control>, Box> data_;
};

/// Associative container keyed by states.
///
/// Tokens are looked up by hash. Vector states are matched within `tolerance`
/// in the infinity norm through a uniform grid hash with cell width
/// 4 * tolerance; lookups with a wider tolerance fall back to a linear scan.
/// When several stored states match, the earliest inserted one wins.
template <class T>
class StateMap {
 public:
  explicit StateMap(double tolerance = kStateTolerance) : tolerance_(tolerance) {}

  [[nodiscard]] double tolerance() const { return tolerance_; }
  [[nodiscard]] std::size_t size() const { return items_.size(); }
  [[nodiscard]] bool empty() const { return items_.empty(); }

  [[nodiscard]] std::optional<std::size_t> index_of(const State& x, double tol) const {
    if (x.is_token()) {
      auto it = tokens_.find(x.token());
      if (it == tokens_.end()) return std::nullopt;
      return it->second;
    }
    if (tol > tolerance_) {
      for (std::size_t i = 0; i < items_.size(); ++i) {
        if (approx_equal(items_[i].first, x, tol)) return i;
      }
      return std::nullopt;
    }
    std::optional<std::size_t> best;
    visit_cells(x.vec(), tol, [&](const CellKey& key) {
      auto range = cells_.equal_range(key);
      for (auto it = range.first; it != range.second; ++it) {
        if (approx_equal(items_[it->second].first, x, tol) && (!best || it->second < *best)) {
          best = it->second;
        }
      }
    });
    return best;
  }
  [[nodiscard]] std::optional<std::size_t> index_of(const State& x) const { return index_of(x, tolerance_); }

  [[nodiscard]] const T* find(const State& x) const {
    auto i = index_of(x);
    return i ? &items_[*i].second : nullptr;
  }
  [[nodiscard]] T* find(const State& x) {
    auto i = index_of(x);
    return i ? &items_[*i].second : nullptr;
  }
  [[nodiscard]] bool contains(const State& x) const { return index_of(x).has_value(); }

  /// Inserts unless a matching state exists; returns the slot and whether it is new.
  std::pair<std::size_t, bool> insert(const State& x, T value) {
    if (auto i = index_of(x)) return {*i, false};
    const std::size_t idx = items_.size();
    items_.emplace_back(x, std::move(value));
    if (x.is_token()) {
      tokens_.emplace(x.token(), idx);
    } else {
      cells_.emplace(cell_of(x.vec()), idx);
    }
    return {idx, true};
  }

  [[nodiscard]] const std::pair<State, T>& at(std::size_t i) const { return items_.at(i); }
  [[nodiscard]] std::pair<State, T>& at(std::size_t i) { return items_.at(i); }

  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }
  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }

 private:
  using CellKey = std::vector<std::int64_t>;
  struct CellHash {
    std::size_t operator()(const CellKey& k) const noexcept {
      std::size_t h = 1469598103934665603ull;
      for (auto v : k) {
        h ^= std::hash<std::int64_t>{}(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      }
      return h;
    }
  };

  [[nodiscard]] double cell_width() const { return 4.0 * tolerance_; }

  [[nodiscard]] CellKey cell_of(const Vector& v) const {
    CellKey key(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      key[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(std::floor(v[i] / cell_width()));
    }
    return key;
  }

  template <class F>
  void visit_cells(const Vector& v, double tol, F&& fn) const {
    const auto n = static_cast<std::size_t>(v.size());
    CellKey lo(n), hi(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double c = v[static_cast<Eigen::Index>(i)];
      lo[i] = static_cast<std::int64_t>(std::floor((c - tol) / cell_width()));
      hi[i] = static_cast<std::int64_t>(std::floor((c + tol) / cell_width()));
    }
    CellKey cur = lo;
    while (true) {
      fn(cur);
      std::size_t d = 0;
      while (d < n && cur[d] == hi[d]) {
        cur[d] = lo[d];
        ++d;
      }
      if (d == n) break;
      ++cur[d];
    }
  }

  double tolerance_;
  std::vector<std::pair<State, T>> items_;
  std::unordered_map<std::string, std::size_t> tokens_;
  std::unordered_multimap<CellKey, std::size_t, CellHash> cells_;
};

}  // namespace rollout
