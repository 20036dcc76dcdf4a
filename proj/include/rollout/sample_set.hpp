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
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rollout/cost.hpp"
#include "rollout/problem.hpp"
#include "rollout/trajectory.hpp"
#include "rollout/types.hpp"

namespace rollout {

/// A state with a known base-policy cost-to-go.
struct SampleEntry {
  State state;
  Cost value;
  std::string policy_id;
  /// f(x, mu(x)) when recorded from a trajectory.
  std::optional<State> successor;
  /// mu(x) when recorded from a trajectory.
  std::optional<Control> control;
};

enum class Relation { kEqual, kAtLeast };

/// A terminal state the shooting solver may aim at: coordinates marked
/// kEqual must be matched, those marked kAtLeast bounded from below.
struct TerminalTarget {
  Vector point;
  std::vector<Relation> relations;
  Cost value;
  std::string policy_id;
  /// Base action to apply once the target is reached.
  std::optional<Control> continuation;
};

/// Smooth terminal cost over a region G x <= h.
struct SmoothTerminal {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  LinearInequalities membership;
};

/// Sample-set component given by a membership predicate and a value function
/// rather than an explicit list of states.
struct Region {
  std::string label;
  std::string policy_id;
  std::function<bool(const State&, double tol)> contains;
  /// Base-policy cost at a member state.
  std::function<Cost(const State&, double tol)> value;
  /// Draws a random member, for sampled invariance checks.
  std::function<State(std::mt19937_64&)> sample_member;
  /// Base action at a member state, if known.
  std::function<Control(const State&)> base_action;
  /// Finite terminal candidates for the shooting solver.
  std::vector<TerminalTarget> targets;
  /// Smooth terminal model for the shooting solver.
  std::optional<SmoothTerminal> smooth;
  /// Enough data to rebuild the region from JSON (see io.hpp).
  nlohmann::json descriptor;
};

/// Result of a terminal-cost lookup.
struct SampleMatch {
  Cost value;
  std::string policy_id;
  std::optional<std::size_t> entry;
  std::optional<std::size_t> region;
};

/// Finite or predicate-defined set of states with known base-policy values.
///
/// Immutable once built; the free functions below create and combine sets.
class SampleSet {
 public:
  explicit SampleSet(std::string label = {}, double tolerance = kStateTolerance);

  [[nodiscard]] const std::string& label() const { return label_; }
  [[nodiscard]] double tolerance() const { return index_.tolerance(); }
  [[nodiscard]] const std::vector<SampleEntry>& entries() const { return entries_; }
  [[nodiscard]] const std::vector<Region>& regions() const { return regions_; }
  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  /// Set when the last recorded state's successor is only covered analytically.
  [[nodiscard]] bool analytic_backed() const { return analytic_backed_; }
  [[nodiscard]] std::vector<std::string> policy_ids() const;

  /// Inserts an entry; if the state is already present the smaller value is
  /// kept, earlier insertions winning ties.
  void add_entry(SampleEntry e);
  void add_region(Region r);
  void set_analytic_backed(bool v) { analytic_backed_ = v; }
  void set_label(std::string label) { label_ = std::move(label); }

  /// Lowest value among explicit and region matches within `tol`.
  [[nodiscard]] std::optional<SampleMatch> lookup(const State& x, double tol) const;
  [[nodiscard]] std::optional<SampleMatch> lookup(const State& x) const { return lookup(x, tolerance()); }
  [[nodiscard]] bool contains(const State& x) const { return lookup(x).has_value(); }
  [[nodiscard]] std::optional<std::size_t> entry_index(const State& x) const { return index_.index_of(x); }

  /// Finite candidates for the shooting solver: every vector-valued explicit
  /// entry followed by the targets of each region.
  [[nodiscard]] std::vector<TerminalTarget> terminal_targets() const;

  /// Explicit entries as a value table.
  [[nodiscard]] StateMap<Cost> value_table() const;

 private:
  std::string label_;
  std::vector<SampleEntry> entries_;
  StateMap<std::size_t> index_;
  std::vector<Region> regions_;
  bool analytic_backed_ = false;
};

/// J-bar(x): the set value at members, +inf elsewhere.
Cost terminal_cost(const SampleSet& set, const State& x);
Cost terminal_cost(const SampleSet& set, const State& x, double tol);

/// One entry per trajectory state, valued by the recorded tail cost.
///
/// Throws UnusableTrajectory if the trajectory has no tail costs.
SampleSet build_from_trajectory(const Trajectory& traj, std::string label = {},
                                double tolerance = kStateTolerance);

struct InvarianceViolation {
  State state;
  State successor;
  std::string reason;
};

struct InvarianceReport {
  bool passed = true;
  std::size_t checked_entries = 0;
  std::size_t sampled_states = 0;
  std::vector<InvarianceViolation> violations;
};

inline constexpr std::size_t kDefaultInvarianceSamples = 1000;

/// Checks f(x, mu(x)) in S for every explicit entry, and for a random sample
/// of region members. Each entry is checked against the policy named by its
/// `policy_id`; entries whose policy is absent are skipped.
InvarianceReport verify_invariance(const Problem& problem, const std::map<std::string, Policy>& policies,
                                   const SampleSet& set, std::size_t samples = kDefaultInvarianceSamples,
                                   std::uint64_t seed = 0);

InvarianceReport verify_invariance(const Problem& problem, const Policy& policy, const SampleSet& set,
                                   std::size_t samples = kDefaultInvarianceSamples, std::uint64_t seed = 0);

/// Union of sets with pointwise-minimum values; ties go to the lower set index.
SampleSet merge(const std::vector<SampleSet>& sets, std::string label = {});

}  // namespace rollout
