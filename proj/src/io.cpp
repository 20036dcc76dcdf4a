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


#include "rollout/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rollout/augmentation.hpp"
#include "rollout/instances.hpp"

namespace rollout {

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Scalars

json cost_to_json(Cost c) { return c.is_infinite() ? json("inf") : json(c.value()); }

Cost cost_from_json(const json& j) {
  try {
    if (j.is_string()) return parse_cost(j.get<std::string>());
    if (j.is_number()) return Cost(j.get<double>());
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  throw FormatError("expected a cost, got " + j.dump());
}

namespace {

template <class Tag>
json element_to_json(const Element<Tag>& e) {
  if (e.is_token()) return e.token();
  json arr = json::array();
  for (Eigen::Index i = 0; i < e.vec().size(); ++i) arr.push_back(e.vec()[i]);
  return arr;
}

template <class Tag>
Element<Tag> element_from_json(const json& j) {
  if (j.is_string()) return Element<Tag>(j.get<std::string>());
  if (!j.is_array()) throw FormatError("expected a token or a number array, got " + j.dump());
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw FormatError("non-numeric coordinate in " + j.dump());
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return Element<Tag>(std::move(v));
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
  return j.at(key);
}

template <class T>
T get_as(const json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("field '") + key + "': " + e.what());
  }
}

SolveStatus parse_solve_status(const std::string& s) {
  for (auto st : {SolveStatus::kOptimal, SolveStatus::kInfeasible, SolveStatus::kIterationLimit}) {
    if (to_string(st) == s) return st;
  }
  throw FormatError("unknown solve status '" + s + "'");
}

template <class F>
auto translate(F&& f) {
  try {
    return f();
  } catch (const FormatError&) {
    throw;
  } catch (const json::exception& e) {
    throw FormatError(e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  } catch (const PreconditionViolation& e) {
    throw FormatError(e.what());
  }
}

}  // namespace

json state_to_json(const State& x) { return element_to_json(x); }
State state_from_json(const json& j) { return element_from_json<StateTag>(j); }
json control_to_json(const Control& u) { return element_to_json(u); }
Control control_from_json(const json& j) { return element_from_json<ControlTag>(j); }

// ---------------------------------------------------------------------------
// Trajectories

json trajectory_to_json(const Trajectory& traj) {
  json j;
  j["policy_id"] = traj.policy_id;
  j["termination"] = to_string(traj.termination);
  j["states"] = json::array();
  for (const auto& x : traj.states) j["states"].push_back(state_to_json(x));
  j["controls"] = json::array();
  for (const auto& u : traj.controls) j["controls"].push_back(control_to_json(u));
  j["stage_costs"] = json::array();
  for (const auto& c : traj.stage_costs) j["stage_costs"].push_back(cost_to_json(c));
  if (traj.tail_costs) {
    j["tail_costs"] = json::array();
    for (const auto& c : *traj.tail_costs) j["tail_costs"].push_back(cost_to_json(c));
  } else {
    j["tail_costs"] = nullptr;
  }
  return j;
}

Trajectory trajectory_from_json(const json& j) {
  return translate([&] {
    Trajectory t;
    t.policy_id = get_as<std::string>(j, "policy_id");
    t.termination = parse_termination(get_as<std::string>(j, "termination"));
    for (const auto& x : field(j, "states")) t.states.push_back(state_from_json(x));
    for (const auto& u : field(j, "controls")) t.controls.push_back(control_from_json(u));
    for (const auto& c : field(j, "stage_costs")) t.stage_costs.push_back(cost_from_json(c));
    if (j.contains("tail_costs") && !j.at("tail_costs").is_null()) {
      t.tail_costs.emplace();
      for (const auto& c : j.at("tail_costs")) t.tail_costs->push_back(cost_from_json(c));
    }
    if (t.states.size() != t.controls.size() + 1 || t.stage_costs.size() != t.controls.size() ||
        (t.tail_costs && t.tail_costs->size() != t.states.size())) {
      throw FormatError("trajectory arrays have inconsistent lengths");
    }
    return t;
  });
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

double parse_number(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("not a number: '" + s + "'");
  }
}

}  // namespace

std::string trajectory_to_csv(const Trajectory& traj) {
  const bool token_states = !traj.states.empty() && traj.states.front().is_token();
  const bool token_controls = !traj.controls.empty() && traj.controls.front().is_token();
  const std::size_t nx = token_states || traj.states.empty() ? 0 : traj.states.front().dimension();
  const std::size_t nu = token_controls || traj.controls.empty() ? 0 : traj.controls.front().dimension();

  std::ostringstream os;
  os << "# policy_id=" << traj.policy_id << " termination=" << to_string(traj.termination) << "\n";
  os << "step";
  if (token_states) {
    os << ",state";
  } else {
    for (std::size_t i = 0; i < nx; ++i) os << ",x" << i;
  }
  if (token_controls) {
    os << ",control";
  } else {
    for (std::size_t i = 0; i < nu; ++i) os << ",u" << i;
  }
  os << ",stage_cost,tail_cost\n";

  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    os << k;
    const State& x = traj.states[k];
    if (token_states) {
      os << "," << csv_field(x.token());
    } else {
      for (std::size_t i = 0; i < nx; ++i) os << "," << format_double(x.vec()[static_cast<Eigen::Index>(i)]);
    }
    const bool has_control = k < traj.controls.size();
    if (token_controls) {
      os << "," << (has_control ? csv_field(traj.controls[k].token()) : "");
    } else {
      for (std::size_t i = 0; i < nu; ++i) {
        os << ",";
        if (has_control) os << format_double(traj.controls[k].vec()[static_cast<Eigen::Index>(i)]);
      }
    }
    os << "," << (has_control ? to_string(traj.stage_costs[k]) : "");
    os << "," << (traj.tail_costs ? to_string((*traj.tail_costs)[k]) : "");
    os << "\n";
  }
  return os.str();
}

Trajectory trajectory_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  Trajectory t;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw FormatError("missing trajectory CSV comment line");
  {
    std::istringstream meta(line.substr(2));
    std::string kv;
    bool have_policy = false, have_term = false;
    while (meta >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw FormatError("bad metadata '" + kv + "'");
      const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
      if (key == "policy_id") {
        t.policy_id = value;
        have_policy = true;
      } else if (key == "termination") {
        try {
          t.termination = parse_termination(value);
        } catch (const std::exception& e) {
          throw FormatError(e.what());
        }
        have_term = true;
      }
    }
    if (!have_policy || !have_term) throw FormatError("metadata needs policy_id and termination");
  }
  if (!std::getline(is, line)) throw FormatError("missing trajectory CSV header");
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header.front() != "step" || header[header.size() - 2] != "stage_cost" ||
      header.back() != "tail_cost") {
    throw FormatError("unexpected trajectory CSV header '" + line + "'");
  }
  bool token_state = false, token_control = false;
  std::vector<std::size_t> xcols, ucols;
  for (std::size_t c = 1; c + 2 < header.size(); ++c) {
    const auto& h = header[c];
    if (h == "state") {
      token_state = true;
      xcols.push_back(c);
    } else if (h == "control") {
      token_control = true;
      ucols.push_back(c);
    } else if (!h.empty() && h[0] == 'x') {
      xcols.push_back(c);
    } else if (!h.empty() && h[0] == 'u') {
      ucols.push_back(c);
    } else {
      throw FormatError("unexpected column '" + h + "'");
    }
  }

  std::vector<std::vector<std::string>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto row = split_csv_line(line);
    if (row.size() != header.size()) throw FormatError("row has " + std::to_string(row.size()) + " fields");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("trajectory CSV has no rows");

  bool any_tail = false, all_tail = true;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& row = rows[k];
    if (parse_number(row[0]) != static_cast<double>(k)) throw FormatError("steps must count from 0");
    if (token_state) {
      t.states.emplace_back(row[xcols[0]]);
    } else {
      Vector x(static_cast<Eigen::Index>(xcols.size()));
      for (std::size_t i = 0; i < xcols.size(); ++i) x[static_cast<Eigen::Index>(i)] = parse_number(row[xcols[i]]);
      t.states.emplace_back(std::move(x));
    }
    const bool last = k + 1 == rows.size();
    const std::string& stage = row[header.size() - 2];
    if (!last) {
      if (token_control) {
        t.controls.emplace_back(row[ucols[0]]);
      } else {
        Vector u(static_cast<Eigen::Index>(ucols.size()));
        for (std::size_t i = 0; i < ucols.size(); ++i) {
          u[static_cast<Eigen::Index>(i)] = parse_number(row[ucols[i]]);
        }
        t.controls.emplace_back(std::move(u));
      }
      try {
        t.stage_costs.push_back(parse_cost(stage));
      } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
      }
    } else if (!stage.empty()) {
      throw FormatError("last row must leave stage_cost empty");
    }
    const std::string& tail = row.back();
    any_tail |= !tail.empty();
    all_tail &= !tail.empty();
  }
  if (any_tail && !all_tail) throw FormatError("tail_cost must be present on every row or none");
  if (all_tail) {
    t.tail_costs.emplace();
    for (const auto& row : rows) {
      try {
        t.tail_costs->push_back(parse_cost(row.back()));
      } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
      }
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Sample sets

json sample_set_to_json(const SampleSet& set) {
  json j;
  j["label"] = set.label();
  j["tolerance"] = set.tolerance();
  j["analytic_backed"] = set.analytic_backed();
  j["entries"] = json::array();
  for (const auto& e : set.entries()) {
    json je{{"state", state_to_json(e.state)}, {"value", cost_to_json(e.value)}, {"policy_id", e.policy_id}};
    if (e.successor) je["successor"] = state_to_json(*e.successor);
    if (e.control) je["control"] = control_to_json(*e.control);
    j["entries"].push_back(std::move(je));
  }
  j["regions"] = json::array();
  for (const auto& r : set.regions()) {
    if (r.descriptor.is_null()) throw FormatError("region '" + r.label + "' has no descriptor");
    j["regions"].push_back(r.descriptor);
  }
  return j;
}

namespace {

Region region_from_json(const json& d) {
  const auto kind = get_as<std::string>(d, "kind");
  if (kind == "spiral_base") return spiral_base_region();
  if (kind == "budget_tube") {
    std::vector<State> states;
    std::vector<Control> controls;
    std::vector<Cost> tails;
    for (const auto& x : field(d, "states")) states.push_back(state_from_json(x));
    for (const auto& u : field(d, "controls")) controls.push_back(control_from_json(u));
    for (const auto& c : field(d, "tail_costs")) tails.push_back(cost_from_json(c));
    auto usage = get_as<std::vector<double>>(d, "tail_usage");
    if (tails.size() != states.size() || usage.size() != states.size()) {
      throw FormatError("budget_tube arrays have inconsistent lengths");
    }
    return budget_region(states, controls, tails, usage, get_as<double>(d, "budget"),
                         get_as<std::string>(d, "policy_id"), get_as<double>(d, "tolerance"));
  }
  throw FormatError("unknown region kind '" + kind + "'");
}

}  // namespace

SampleSet sample_set_from_json(const json& j) {
  return translate([&] {
    SampleSet set(get_as<std::string>(j, "label"), get_as<double>(j, "tolerance"));
    set.set_analytic_backed(j.value("analytic_backed", false));
    for (const auto& je : field(j, "entries")) {
      SampleEntry e;
      e.state = state_from_json(field(je, "state"));
      e.value = cost_from_json(field(je, "value"));
      e.policy_id = get_as<std::string>(je, "policy_id");
      if (je.contains("successor")) e.successor = state_from_json(je.at("successor"));
      if (je.contains("control")) e.control = control_from_json(je.at("control"));
      set.add_entry(std::move(e));
    }
    if (j.contains("regions")) {
      for (const auto& d : j.at("regions")) set.add_region(region_from_json(d));
    }
    return set;
  });
}

// ---------------------------------------------------------------------------
// Runs

json solver_config_to_json(const SolverConfig& cfg) {
  return json{{"lookahead", cfg.lookahead},
              {"backend", to_string(cfg.backend)},
              {"max_iterations", cfg.max_iterations},
              {"max_penalty_rounds", cfg.max_penalty_rounds},
              {"terminal_tolerance", cfg.terminal_tolerance},
              {"gradient_tolerance", cfg.gradient_tolerance},
              {"initial_penalty", cfg.initial_penalty},
              {"penalty_growth", cfg.penalty_growth},
              {"max_penalty", cfg.max_penalty},
              {"guard_margin", cfg.guard_margin},
              {"seed", cfg.seed},
              {"threads", cfg.threads}};
}

SolverConfig solver_config_from_json(const json& j) {
  return translate([&] {
    SolverConfig c;
    c.lookahead = get_as<std::size_t>(j, "lookahead");
    c.backend = parse_backend(get_as<std::string>(j, "backend"));
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.max_penalty_rounds = j.value("max_penalty_rounds", c.max_penalty_rounds);
    c.terminal_tolerance = j.value("terminal_tolerance", c.terminal_tolerance);
    c.gradient_tolerance = j.value("gradient_tolerance", c.gradient_tolerance);
    c.initial_penalty = j.value("initial_penalty", c.initial_penalty);
    c.penalty_growth = j.value("penalty_growth", c.penalty_growth);
    c.max_penalty = j.value("max_penalty", c.max_penalty);
    c.guard_margin = j.value("guard_margin", c.guard_margin);
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    return c;
  });
}

json run_to_json(const RolloutRun& run) {
  json j;
  j["trajectory"] = trajectory_to_json(run.trajectory);
  j["per_step_values"] = json::array();
  for (const auto& v : run.per_step_values) j["per_step_values"].push_back(cost_to_json(v));
  j["reports"] = json::array();
  for (const auto& r : run.reports) {
    json jr{{"step", r.step},
            {"value", cost_to_json(r.value)},
            {"status", to_string(r.status)},
            {"subproblems", r.subproblems},
            {"disturbed", r.disturbed}};
    jr["terminal_sample"] = r.terminal_sample ? json(*r.terminal_sample) : json(nullptr);
    j["reports"].push_back(std::move(jr));
  }
  j["config"] = solver_config_to_json(run.config);
  j["status"] = to_string(run.status);
  j["closing_tail"] = cost_to_json(run.closing_tail);
  j["initial_bound"] = cost_to_json(run.initial_bound);
  j["total_cost"] = cost_to_json(run.total_cost());
  return j;
}

RolloutRun run_from_json(const json& j) {
  return translate([&] {
    RolloutRun run;
    run.trajectory = trajectory_from_json(field(j, "trajectory"));
    for (const auto& v : field(j, "per_step_values")) run.per_step_values.push_back(cost_from_json(v));
    for (const auto& jr : field(j, "reports")) {
      StepReport r;
      r.step = get_as<std::size_t>(jr, "step");
      r.value = cost_from_json(field(jr, "value"));
      r.status = parse_solve_status(get_as<std::string>(jr, "status"));
      r.subproblems = get_as<std::size_t>(jr, "subproblems");
      r.disturbed = get_as<bool>(jr, "disturbed");
      if (jr.contains("terminal_sample") && !jr.at("terminal_sample").is_null()) {
        r.terminal_sample = jr.at("terminal_sample").get<std::size_t>();
      }
      run.reports.push_back(r);
    }
    run.config = solver_config_from_json(field(j, "config"));
    run.status = parse_run_status(get_as<std::string>(j, "status"));
    run.closing_tail = cost_from_json(field(j, "closing_tail"));
    run.initial_bound = cost_from_json(field(j, "initial_bound"));
    return run;
  });
}

// ---------------------------------------------------------------------------
// Summary table

SummaryRow summarize(const std::string& instance, const std::string& variant, const RolloutRun& run) {
  SummaryRow row;
  row.instance = instance;
  row.x0 = run.trajectory.states.empty() ? std::string() : to_string(run.trajectory.states.front());
  row.lookahead = run.config.lookahead;
  row.backend = to_string(run.config.backend);
  row.variant = variant;
  row.total_cost = run.total_cost();
  row.initial_value = run.initial_value();
  row.initial_bound = run.initial_bound;
  row.steps = run.trajectory.steps();
  row.status = to_string(run.status);
  return row;
}

std::string summary_header() {
  return "instance,x0,lookahead,backend,variant,total_cost,initial_value,initial_bound,steps,status";
}

std::string summary_line(const SummaryRow& row) {
  std::ostringstream os;
  os << csv_field(row.instance) << "," << csv_field(row.x0) << "," << row.lookahead << "," << row.backend << ","
     << csv_field(row.variant) << "," << to_string(row.total_cost) << "," << to_string(row.initial_value) << ","
     << to_string(row.initial_bound) << "," << row.steps << "," << row.status;
  return os.str();
}

void append_summary(const std::filesystem::path& path, const SummaryRow& row) {
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  std::ofstream os(path, std::ios::app);
  if (!os) throw Error("cannot open " + path.string() + " for appending");
  if (fresh) os << summary_header() << "\n";
  os << summary_line(row) << "\n";
  if (!os) throw Error("write to " + path.string() + " failed");
}

// ---------------------------------------------------------------------------
// Files

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + tmp.string() + " for writing");
    os << content;
    if (!os.flush()) throw Error("write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace rollout
