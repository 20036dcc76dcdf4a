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
#include <stdexcept>
#include <string>
#include <utility>

namespace rollout {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A policy produced a control outside U(x).
class ConstraintViolation : public Error {
 public:
  ConstraintViolation(std::size_t step, const std::string& what) : Error(what), step_(step) {}
  [[nodiscard]] std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// A simulated transition had infinite stage cost.
class InfeasibleTrajectory : public Error {
 public:
  InfeasibleTrajectory(std::size_t step, const std::string& what) : Error(what), step_(step) {}
  [[nodiscard]] std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// A value table lacks an entry needed by a check.
class CoverageError : public Error {
 public:
  CoverageError(std::string state, const std::string& what) : Error(what), state_(std::move(state)) {}
  [[nodiscard]] const std::string& state() const { return state_; }

 private:
  std::string state_;
};

/// A trajectory without tail costs was used to seed a sample set.
class UnusableTrajectory : public Error {
 public:
  using Error::Error;
};

/// A caller broke a documented precondition.
class PreconditionViolation : public Error {
 public:
  using Error::Error;
};

/// The lookahead value is +inf at the initial state of a run.
class InitialInfeasibility : public Error {
 public:
  using Error::Error;
};

/// A seed trajectory violates a trajectory constraint.
class InfeasibleSeed : public Error {
 public:
  InfeasibleSeed(double measured, const std::string& what) : Error(what), measured_(measured) {}
  [[nodiscard]] double measured() const { return measured_; }

 private:
  double measured_;
};

/// The optimizer could not produce a usable solution.
class SolverFailure : public Error {
 public:
  using Error::Error;
};

/// An enumeration would exceed its configured size cap.
class SearchTooLarge : public Error {
 public:
  using Error::Error;
};

}  // namespace rollout
