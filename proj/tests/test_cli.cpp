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


#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rollout/cli.hpp"
#include "rollout/io.hpp"

using namespace rollout;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "rollout");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string dir() {
  const fs::path d = fs::temp_directory_path() / "rollout_cli_test";
  fs::create_directories(d);
  return d.string();
}

std::string path(const std::string& name) {
  const fs::path p = fs::path(dir()) / name;
  fs::remove(p);
  return p.string();
}

}  // namespace

TEST_CASE("list-instances names every instance", "[cli]") {
  const Result r = invoke({"list-instances"});
  CHECK(r.code == 0);
  for (const char* n : {"hybrid:", "double-integrator:", "two-vehicle:", "tsp:"}) {
    CHECK(r.out.find(n) != std::string::npos);
  }
}

TEST_CASE("tour runs report the expected tours", "[cli][tsp]") {
  Result r = invoke({"run", "--instance", "tsp", "--variant", "basic"});
  CHECK(r.code == 0);
  CHECK(r.out.find("ACDBA") != std::string::npos);
  CHECK(r.out.find("PASS") != std::string::npos);

  r = invoke({"run", "--instance", "tsp", "--variant", "multi-policy"});
  CHECK(r.code == 0);
  CHECK(r.out.find("ABCDA") != std::string::npos);

  r = invoke({"run", "--instance", "tsp", "--variant", "multi-policy", "--extra-seed", "ABD"});
  CHECK(r.code == 0);
  CHECK(r.out.find("ABDCA") != std::string::npos);
}

TEST_CASE("spiral run prints the base cost and an improvement", "[cli][spiral]") {
  const std::string summary = path("spiral_summary.csv");
  const Result r = invoke({"run", "--instance", "hybrid", "--x0", "1,1", "--ell", "5", "--variant", "basic",
                        "--summary", summary});
  CHECK(r.code == 0);
  CHECK(r.out.find("5.5555") != std::string::npos);
  CHECK(r.out.find("FAIL") == std::string::npos);
  const std::string text = read_file(summary);
  CHECK(text.rfind(summary_header() + "\n", 0) == 0);
  CHECK(text.find("hybrid,") != std::string::npos);
}

TEST_CASE("usage errors exit with 64", "[cli]") {
  CHECK(invoke({}).code == cli::kUsage);
  CHECK(invoke({"run", "--instance", "nowhere"}).code == cli::kUsage);
  CHECK(invoke({"run", "--instance", "tsp", "--variant", "augmented"}).code == cli::kUsage);
  CHECK(invoke({"run", "--instance", "hybrid", "--x0", "1,x"}).code == cli::kUsage);
  CHECK(invoke({"run", "--instance", "hybrid", "--x0", "1,2,3"}).code == cli::kUsage);
  CHECK(invoke({"run", "--instance", "tsp", "--backend", "continuous-shooting"}).code == cli::kUsage);
  CHECK(invoke({"run", "--instance", "tsp", "--variant", "disturbance"}).code == cli::kUsage);
  CHECK(invoke({"verify", "--instance", "tsp", "--set", path("absent.json")}).code == cli::kUsage);
  CHECK(invoke({"table", "--preset", "nothing"}).code == cli::kUsage);
}

TEST_CASE("an unreachable start exits with 2", "[cli]") {
  const std::string set = path("tsp_from_a.json");
  REQUIRE(invoke({"run", "--instance", "tsp", "--save-set", set}).code == 0);
  const Result r = invoke({"run", "--instance", "tsp", "--x0", "AB", "--load-set", set});
  CHECK(r.code == cli::kInfeasible);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("a perturbation out of reach exits with 2 and is reported", "[cli]") {
  const Result r = invoke({"run", "--instance", "tsp", "--variant", "disturbance", "--disturb-step", "0",
                        "--disturb-state", "ABAB"});
  CHECK(r.code == cli::kInfeasible);
  CHECK(r.out.find(to_string(RunStatus::kInfeasibleAfterDisturbance)) != std::string::npos);
}

TEST_CASE("verify accepts a fresh set and names a corrupted state", "[cli][verify]") {
  const std::string set = path("tsp_set.json");
  REQUIRE(invoke({"run", "--instance", "tsp", "--variant", "multi-policy", "--save-set", set}).code == 0);
  Result r = invoke({"verify", "--instance", "tsp", "--variant", "multi-policy", "--set", set});
  CHECK(r.code == 0);

  json j = json::parse(read_file(set));
  for (auto& e : j["entries"]) {
    if (e["state"] == "ACD") e["value"] = 5.5;
  }
  const std::string bad = path("tsp_bad.json");
  write_file_atomic(bad, j.dump(2));
  r = invoke({"verify", "--instance", "tsp", "--variant", "multi-policy", "--set", bad});
  CHECK(r.code == cli::kPropertyViolation);
  CHECK(r.out.find("ACD") != std::string::npos);
}

TEST_CASE("verify checks an augmented set by sampling", "[cli][verify]") {
  const ConstrainedDoubleIntegrator di = make_constrained_double_integrator();
  const SampleSet aug = augment_sample_set(simulate_policy(di.problem, di.base, di.x0), di.budget, "S0");
  const std::string set = path("aug_set.json");
  write_file_atomic(set, sample_set_to_json(aug).dump());
  const Result r = invoke({"verify", "--instance", "double-integrator", "--variant", "augmented", "--set", set,
                        "--samples", "300"});
  CHECK(r.code == 0);
  CHECK(r.out.find("300") != std::string::npos);
}

TEST_CASE("a loaded set is re-verified unless trusted", "[cli][verify]") {
  const std::string set = path("tsp_s0.json");
  REQUIRE(invoke({"run", "--instance", "tsp", "--save-set", set}).code == 0);
  Result r = invoke({"run", "--instance", "tsp", "--load-set", set});
  CHECK(r.code == 0);
  CHECK(r.out.find("ACDBA") != std::string::npos);

  json j = json::parse(read_file(set));
  auto& entries = j["entries"];
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i]["state"] == "ACDB") {
      entries.erase(i);
      break;
    }
  }
  const std::string holey = path("tsp_holey.json");
  write_file_atomic(holey, j.dump());
  r = invoke({"run", "--instance", "tsp", "--load-set", holey});
  CHECK(r.code == cli::kPropertyViolation);
  CHECK(r.err.find("ACD") != std::string::npos);
  r = invoke({"run", "--instance", "tsp", "--load-set", holey, "--trusted"});
  CHECK(r.code != cli::kPropertyViolation);
}

TEST_CASE("run artifacts are deterministic and reload", "[cli]") {
  const std::string a = path("a.csv"), b = path("b.csv"), ja = path("a.json");
  REQUIRE(invoke({"run", "--instance", "two-vehicle", "--variant", "multiagent", "--out-csv", a, "--out-json", ja})
              .code == 0);
  REQUIRE(invoke({"run", "--instance", "two-vehicle", "--variant", "multiagent", "--out-csv", b}).code == 0);
  CHECK(read_file(a) == read_file(b));
  CHECK_FALSE(read_file(a).empty());

  const json doc = json::parse(read_file(ja));
  CHECK(run_to_json(run_from_json(doc)) == doc);
  const Trajectory t = trajectory_from_csv(read_file(a));
  CHECK(t.states.back() == run_from_json(doc).trajectory.states.back());
}

TEST_CASE("config files set options", "[cli]") {
  const std::string cfg = path("tsp.toml");
  {
    std::ofstream os(cfg);
    os << "[run]\ninstance = \"tsp\"\nvariant = \"multi-policy\"\n";
  }
  const Result r = invoke({"--config", cfg, "run"});
  CHECK(r.code == 0);
  CHECK(r.out.find("ABCDA") != std::string::npos);
}

TEST_CASE("an empty table is only the header", "[cli][table]") {
  const std::string csv = path("empty.csv");
  std::ostringstream out, err;
  CHECK(cli::cmd_table({}, csv, out, err) == 0);
  CHECK(read_file(csv) == "instance,x0,set,J_mu0,J_rollout,mpc_cost,final_state\n");
  CHECK(out.str().find("J_mu0") != std::string::npos);
}

TEST_CASE("tour table rows improve with each added set", "[cli][table]") {
  const std::string csv = path("tsp_table.csv");
  const Result r = invoke({"table", "--preset", "tsp", "--csv", csv});
  CHECK(r.code == 0);
  std::istringstream in(read_file(csv));
  std::string line;
  std::getline(in, line);
  std::vector<std::string> rows;
  while (std::getline(in, line)) rows.push_back(line);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].find(",11,11,,ACDBA") != std::string::npos);
  CHECK(rows[1].find(",11,7,,ABCDA") != std::string::npos);
  CHECK(rows[2].find(",11,4,,ABDCA") != std::string::npos);
}

TEST_CASE("spiral preset lists both spiral states with their base costs", "[cli][table]") {
  const auto runs = cli::table_preset("spiral");
  REQUIRE(runs.size() == 2);
  const std::string csv = path("spiral.csv");
  const Result r = invoke({"table", "--preset", "spiral", "--no-mpc", "--csv", csv});
  CHECK(r.code == 0);
  CHECK(r.out.find("5.5556") != std::string::npos);
  CHECK(r.out.find("402.7778") != std::string::npos);
}
