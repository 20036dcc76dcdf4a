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


#include "rollout/sample_set.hpp"

#include <algorithm>
#include <utility>

#include "rollout/errors.hpp"

namespace rollout {

SampleSet::SampleSet(std::string label, double tolerance) : label_(std::move(label)), index_(tolerance) {}

std::vector<std::string> SampleSet::policy_ids() const {
  std::vector<std::string> ids;
  auto note = [&](const std::string& id) {
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
  };
  for (const auto& e : entries_) note(e.policy_id);
  for (const auto& r : regions_) note(r.policy_id);
  return ids;
}

void SampleSet::add_entry(SampleEntry e) {
  if (e.value.is_infinite()) throw PreconditionViolation("sample value must be finite at " + to_string(e.state));
  auto [slot, fresh] = index_.insert(e.state, entries_.size());
  if (fresh) {
    entries_.push_back(std::move(e));
    return;
  }
  auto& old = entries_[index_.at(slot).second];
  if (e.value < old.value) {
    e.state = old.state;
    old = std::move(e);
  }
}

void SampleSet::add_region(Region r) { regions_.push_back(std::move(r)); }

std::optional<SampleMatch> SampleSet::lookup(const State& x, double tol) const {
  std::optional<SampleMatch> best;
  if (auto slot = index_.index_of(x, tol)) {
    const std::size_t i = index_.at(*slot).second;
    best = SampleMatch{entries_[i].value, entries_[i].policy_id, i, std::nullopt};
  }
  for (std::size_t r = 0; r < regions_.size(); ++r) {
    const auto& reg = regions_[r];
    if (!reg.contains(x, tol)) continue;
    const Cost v = reg.value(x, tol);
    if (!best || v < best->value) best = SampleMatch{v, reg.policy_id, std::nullopt, r};
  }
  return best;
}

std::vector<TerminalTarget> SampleSet::terminal_targets() const {
  std::vector<TerminalTarget> out;
  for (const auto& e : entries_) {
    if (!e.state.is_vector()) continue;
    TerminalTarget t;
    t.point = e.state.vec();
    t.relations.assign(static_cast<std::size_t>(t.point.size()), Relation::kEqual);
    t.value = e.value;
    t.policy_id = e.policy_id;
    t.continuation = e.control;
    out.push_back(std::move(t));
  }
  for (const auto& r : regions_) out.insert(out.end(), r.targets.begin(), r.targets.end());
  return out;
}

StateMap<Cost> SampleSet::value_table() const {
  StateMap<Cost> table(tolerance());
  for (const auto& e : entries_) table.insert(e.state, e.value);
  return table;
}

Cost terminal_cost(const SampleSet& set, const State& x) { return terminal_cost(set, x, set.tolerance()); }

Cost terminal_cost(const SampleSet& set, const State& x, double tol) {
  auto m = set.lookup(x, tol);
  return m ? m->value : Cost::infinity();
}

SampleSet build_from_trajectory(const Trajectory& traj, std::string label, double tolerance) {
  if (!traj.tail_costs) {
    throw UnusableTrajectory("trajectory of policy '" + traj.policy_id +
                             "' has no tail costs; it neither terminated nor carries an analytic cost");
  }
  SampleSet set(label.empty() ? traj.policy_id : std::move(label), tolerance);
  const std::size_t n = traj.steps();
  const bool closed = traj.termination != Termination::kStepLimit;
  for (std::size_t k = 0; k <= n; ++k) {
    SampleEntry e;
    e.state = traj.states[k];
    e.value = (*traj.tail_costs)[k];
    e.policy_id = traj.policy_id;
    if (k < n) {
      e.successor = traj.states[k + 1];
      e.control = traj.controls[k];
    } else if (closed) {
      e.successor = traj.states[k];
      if (traj.termination == Termination::kFixedPoint && n > 0) e.control = traj.controls[n - 1];
    }
    set.add_entry(std::move(e));
  }
  set.set_analytic_backed(!closed);
  return set;
}

InvarianceReport verify_invariance(const Problem& problem, const std::map<std::string, Policy>& policies,
                                   const SampleSet& set, std::size_t samples, std::uint64_t seed) {
  InvarianceReport report;
  auto check = [&](const State& x, const Policy& mu) {
    const State y = problem.step(x, mu(x));
    if (!set.contains(y)) {
      report.passed = false;
      report.violations.push_back({x, y, "successor " + to_string(y) + " of " + to_string(x) + " is not a member"});
    }
  };
  for (const auto& e : set.entries()) {
    auto it = policies.find(e.policy_id);
    if (it == policies.end()) continue;
    ++report.checked_entries;
    check(e.state, it->second);
  }
  std::mt19937_64 rng(seed);
  for (const auto& r : set.regions()) {
    auto it = policies.find(r.policy_id);
    if (it == policies.end() || !r.sample_member) continue;
    for (std::size_t s = 0; s < samples; ++s) {
      ++report.sampled_states;
      check(r.sample_member(rng), it->second);
    }
  }
  return report;
}

InvarianceReport verify_invariance(const Problem& problem, const Policy& policy, const SampleSet& set,
                                   std::size_t samples, std::uint64_t seed) {
  std::map<std::string, Policy> all;
  for (const auto& id : set.policy_ids()) all.emplace(id, policy);
  return verify_invariance(problem, all, set, samples, seed);
}

SampleSet merge(const std::vector<SampleSet>& sets, std::string label) {
  if (sets.empty()) throw PreconditionViolation("merge needs at least one set");
  if (label.empty()) {
    for (const auto& s : sets) label += (label.empty() ? "" : "+") + s.label();
  }
  SampleSet out(std::move(label), sets.front().tolerance());
  bool analytic = false;
  for (const auto& s : sets) {
    for (const auto& e : s.entries()) out.add_entry(e);
    for (const auto& r : s.regions()) out.add_region(r);
    analytic = analytic || s.analytic_backed();
  }
  out.set_analytic_backed(analytic);
  return out;
}

}  // namespace rollout
