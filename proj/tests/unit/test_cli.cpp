// Copyright 2026 The goalpose Authors
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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "goalpose/cli.hpp"
#include "support/fixtures.hpp"
#include "support/stub_server.hpp"

namespace fs = std::filesystem;
using goalpose::cli::Cli;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Cli cli(out, err);
  const int code = cli.run(args);
  return {code, out.str(), err.str()};
}

nlohmann::json snapshot(const std::string& out) {
  std::istringstream in(out);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("config: ", 0) == 0) return nlohmann::json::parse(line.substr(8));
  }
  return nullptr;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

}  // namespace

TEST(Seeds, Specs) {
  using goalpose::cli::parse_seeds;
  EXPECT_EQ(parse_seeds("3"), (std::vector<std::uint64_t>{3}));
  EXPECT_EQ(parse_seeds("0..3"), (std::vector<std::uint64_t>{0, 1, 2, 3}));
  EXPECT_EQ(parse_seeds("1, 4,9"), (std::vector<std::uint64_t>{1, 4, 9}));
  EXPECT_EQ(parse_seeds("0..1,7"), (std::vector<std::uint64_t>{0, 1, 7}));
  EXPECT_EQ(parse_seeds("0..49").size(), 50u);
  for (const char* bad : {"", "a", "3..1", "1,,2", "-1", "1..", "..2"}) {
    EXPECT_THROW(parse_seeds(bad), goalpose::Error) << bad;
  }
}

TEST(Cli, Version) {
  const auto r = run_cli({"--version"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, std::string("goalpose ") + goalpose::kVersion + "\n");
  EXPECT_STREQ(goalpose::kVersion, GOALPOSE_PROJECT_VERSION);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({"run", "--max-rounds", "many"}).code, 2);
  EXPECT_EQ(run_cli({"run", "--task", "fold_laundry"}).code, 2);
  EXPECT_EQ(run_cli({"run", "--task", "all"}).code, 2);
  EXPECT_EQ(run_cli({"rollout", "--k", "1"}).code, 2);
  EXPECT_EQ(run_cli({"run", "--representation", "quaternion"}).code, 2);
  EXPECT_EQ(run_cli({"validate"}).code, 2);  // --file is required
}

// Every option of every subcommand is described and shows up in --help, and
// the CLI reference page mentions it.
TEST(Cli, HelpDocumentsEveryOption) {
  std::ostringstream out, err;
  Cli cli(out, err);
  const std::string docs = slurp(fs::path(GOALPOSE_SOURCE_DIR) / "docs" / "cli.md");
  ASSERT_FALSE(docs.empty());
  auto check = [&](CLI::App* app, const std::string& help) {
    for (const CLI::Option* opt : app->get_options()) {
      const std::string name = opt->get_name();
      if (name == "--help" || name == "--help-all") continue;
      EXPECT_FALSE(opt->get_description().empty()) << app->get_name() << " " << name;
      EXPECT_NE(help.find(name), std::string::npos) << app->get_name() << " " << name;
      EXPECT_NE(docs.find("`" + name), std::string::npos) << "docs/cli.md lacks " << app->get_name() << " " << name;
    }
  };
  check(&cli.app(), cli.app().help());
  const auto subs = cli.app().get_subcommands([](CLI::App*) { return true; });
  ASSERT_EQ(subs.size(), 9u);
  for (CLI::App* sub : subs) {
    EXPECT_FALSE(sub->get_description().empty()) << sub->get_name();
    EXPECT_NE(docs.find("goalpose " + sub->get_name()), std::string::npos) << sub->get_name();
    const auto r = run_cli({sub->get_name(), "--help"});
    EXPECT_EQ(r.code, 0);
    check(sub, r.out);
  }
  for (const char* code : {"| 0 ", "| 1 ", "| 2 ", "| 3 ", "| 4 ", "| 5 ", "| 6 "}) {
    EXPECT_NE(docs.find(code), std::string::npos) << "exit code row " << code;
  }
}

TEST(Cli, FlagsOverrideConfigOverrideDefaults) {
  const auto dir = goalpose::testing::scratch("cli_precedence");
  spit(dir / "cfg.json", R"({"task": "stack_cube", "max_rounds": 3, "seeds": "5..6",
                             "representation": "euler", "out": ")" +
                             (dir / "from_config").string() + R"("})");
  const auto r = run_cli({"run", "--config", (dir / "cfg.json").string(), "--max-rounds", "9", "--seed", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto snap = snapshot(r.out);
  EXPECT_EQ(snap["task"], "stack_cube");          // config
  EXPECT_EQ(snap["max_rounds"], 9);               // flag beats config
  EXPECT_EQ(snap["seeds"], nlohmann::json({2}));  // flag beats config
  EXPECT_EQ(snap["representation"], "euler");
  EXPECT_EQ(snap["parse_abort_after"], 2);        // default
  EXPECT_TRUE(fs::exists(dir / "from_config" / "stack_cube_s2.json"));
  // The snapshot travels with the episode and reproduces it.
  const auto saved = goalpose::load_episode((dir / "from_config" / "stack_cube_s2.json").string());
  EXPECT_EQ(saved.config["run"], snap);
  spit(dir / "again.json", saved.config["run"].dump());
  const auto again = run_cli({"run", "--config", (dir / "again.json").string(), "--out", (dir / "b").string()});
  ASSERT_EQ(again.code, 0) << again.err;
  const auto e2 = goalpose::load_episode((dir / "b" / "stack_cube_s2.json").string());
  ASSERT_EQ(e2.rounds.size(), saved.rounds.size());
  for (std::size_t i = 0; i < e2.rounds.size(); ++i) {
    EXPECT_EQ(e2.rounds[i].assistant_text, saved.rounds[i].assistant_text);
    EXPECT_EQ(e2.rounds[i].world_hash, saved.rounds[i].world_hash);
  }
}

TEST(Cli, BadConfigFailsBeforeAnySideEffect) {
  const auto dir = goalpose::testing::scratch("cli_badcfg");
  const std::string out = (dir / "out").string();
  spit(dir / "typo.json", R"({"max_round": 3})");
  auto r = run_cli({"run", "--config", (dir / "typo.json").string(), "--out", out});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("max_round"), std::string::npos);
  spit(dir / "broken.json", "{not json");
  EXPECT_EQ(run_cli({"run", "--config", (dir / "broken.json").string(), "--out", out}).code, 2);
  EXPECT_EQ(run_cli({"run", "--config", (dir / "missing.json").string(), "--out", out}).code, 2);
  ::unsetenv("GOALPOSE_TEST_UNSET_KEY");
  r = run_cli({"eval", "--task", "all", "--policy", "remote", "--endpoint", "http://127.0.0.1:1/v1", "--model", "m",
               "--api-key-env", "GOALPOSE_TEST_UNSET_KEY", "--out", out});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("GOALPOSE_TEST_UNSET_KEY"), std::string::npos);
  EXPECT_EQ(run_cli({"run", "--policy", "remote", "--out", out}).code, 2);  // no endpoint
  EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, PolicyFailureExitsSix) {
  const auto dir = goalpose::testing::scratch("cli_policy");
  goalpose::testing::StubServer stub([](const std::string&, int) { return std::make_pair(500, std::string("down")); });
  ::setenv("GOALPOSE_TEST_KEY", "sk-test", 1);
  const auto r = run_cli({"run", "--task", "lift_can", "--policy", "remote", "--endpoint", stub.endpoint(),
                          "--model", "m", "--api-key-env", "GOALPOSE_TEST_KEY", "--max-retries", "0",
                          "--timeout", "5", "--out", (dir / "eps").string()});
  EXPECT_EQ(r.code, 6) << r.out << r.err;
  EXPECT_EQ(r.err.find("sk-test"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "eps" / "lift_can_s0.json"));  // the failed episode is still recorded
  EXPECT_GE(stub.calls(), 1);
}

TEST(Cli, RunExportValidateStatsReplay) {
  const auto dir = goalpose::testing::scratch("cli_pipeline");
  const std::string eps = (dir / "eps").string(), sft = (dir / "sft").string();
  auto r = run_cli({"eval", "--task", "all", "--seeds", "0..1", "--out", eps, "--save-episodes", "--json",
                    "--parallel", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = nlohmann::json::parse(slurp(dir / "eps" / "eval_report.json"));
  ASSERT_EQ(report["reports"].size(), 7u);
  for (const auto& rep : report["reports"]) EXPECT_DOUBLE_EQ(rep["success_rate"].get<double>(), 1.0);

  r = run_cli({"export-sft", "--in", (dir / "eps" / "episodes").string(), "--out", sft});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("exported 14 conversation(s), skipped 0"), std::string::npos) << r.out;

  EXPECT_EQ(run_cli({"validate", "--file", sft}).code, 0);
  EXPECT_EQ(run_cli({"validate", "--file", sft + "/conversations.jsonl"}).code, 0);
  EXPECT_EQ(run_cli({"validate", "--file", sft + "/manifest.json"}).code, 0);

  r = run_cli({"stats", "--file", sft, "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto stats = nlohmann::json::parse(r.out);
  EXPECT_EQ(stats["conversations"], 14);

  r = run_cli({"replay", "--dataset", sft});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("14 of 14"), std::string::npos);

  // Damage: one corrupted line, one missing frame.
  const auto jsonl = fs::path(sft) / "conversations.jsonl";
  std::string text = slurp(jsonl);
  const std::string original = text;
  text.insert(text.find('\n') + 1, "{\"schema\": \"goalpose.sft/1\"}\n");
  spit(jsonl, text);
  r = run_cli({"validate", "--file", jsonl.string()});
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
  EXPECT_EQ(run_cli({"validate", "--file", sft}).code, 4);
  spit(jsonl, original);
  fs::remove(fs::path(sft) / "images" / "lift_can_s0" / "round_01.png");
  EXPECT_EQ(run_cli({"validate", "--file", sft}).code, 4);
}

TEST(Cli, ReplayDetectsTampering) {
  const auto dir = goalpose::testing::scratch("cli_replay");
  ASSERT_EQ(run_cli({"run", "--task", "put_carrot_on_plate", "--seed", "3", "--out", (dir / "eps").string()}).code, 0);
  const auto path = dir / "eps" / "put_carrot_on_plate_s3.json";
  auto r = run_cli({"replay", "--episode", path.string(), "--frames", (dir / "frames").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("7 frame(s) compared"), std::string::npos) << r.out;
  const auto stored = dir / "eps" / "put_carrot_on_plate_s3_frames";
  ASSERT_TRUE(fs::exists(stored / "round_03.png"));
  EXPECT_TRUE(slurp(dir / "frames" / "round_03.png") == slurp(stored / "round_03.png"));

  auto j = nlohmann::json::parse(slurp(path));
  const auto pristine = j;
  j["rounds"][2]["world_hash"] = std::string(64, '0');
  spit(path, j.dump());
  EXPECT_EQ(run_cli({"replay", "--episode", path.string()}).code, 5);

  spit(path, pristine.dump());
  spit(stored / "round_02.png", slurp(stored / "round_01.png"));
  r = run_cli({"replay", "--episode", path.string()});
  EXPECT_EQ(r.code, 5);
  EXPECT_NE(r.err.find("round 2"), std::string::npos) << r.err;
}

TEST(Cli, RolloutThenObjective) {
  const auto dir = goalpose::testing::scratch("cli_rollout");
  const std::string out = (dir / "ro").string();
  auto r = run_cli({"rollout", "--task", "lift_can", "--seeds", "0..1", "--k", "3", "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(run_cli({"validate", "--file", out}).code, 0);
  EXPECT_EQ(run_cli({"validate", "--file", out + "/logprobs/lift_can_s0.json"}).code, 0);
  r = run_cli({"objective", "--rollouts", out, "--logprobs", out + "/logprobs/lift_can_s0.json",
               out + "/logprobs/lift_can_s1.json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("over 2 group(s)"), std::string::npos);
}

// The CLI path and the library path agree on a group with spread rewards.
TEST(Cli, ObjectiveMatchesLibrary) {
  const auto dir = goalpose::testing::scratch("cli_objective");
  goalpose::testing::MixedPolicy policy([](int k) { return k % 2 == 0; });
  auto g = goalpose::collect_group(goalpose::TaskSpec::make(goalpose::TaskName::kLiftCan), 4, 4, policy, {}, 1);
  goalpose::export_rollouts({g}, (dir / "ro").string(), {});
  auto lp = goalpose::logprob_template(g, -0.5);
  double shift = 0.0;
  for (auto& s : lp.samples) {
    for (auto& rd : s.rounds) {
      for (double& v : rd.current) v = std::min(0.0, v + (shift += 0.037) - 0.2);
    }
  }
  spit(dir / "lp.json", nlohmann::json(lp).dump());
  for (const std::string eps : {"0.2", "0.05", "inf"}) {
    const auto r = run_cli({"objective", "--rollouts", (dir / "ro").string(), "--logprobs",
                            (dir / "lp.json").string(), "--epsilon", eps});
    ASSERT_EQ(r.code, 0) << r.err;
    const double lib = goalpose::grpo_objective(g, lp, std::stod(eps));
    const double cli = std::stod(r.out.substr(r.out.find(' ') + 1));
    EXPECT_NEAR(cli, lib, 1e-10) << eps;
    EXPECT_NE(lib, 0.0);
  }
  // Log-probs for a different text: tokens no longer concatenate.
  lp.samples[0].rounds[0].tokens[0] += "x";
  spit(dir / "bad.json", nlohmann::json(lp).dump());
  EXPECT_EQ(run_cli({"objective", "--rollouts", (dir / "ro").string(), "--logprobs", (dir / "bad.json").string()}).code,
            4);
}

TEST(Cli, ExportSftFromRunDirectory) {
  const auto dir = goalpose::testing::scratch("cli_export");
  ASSERT_EQ(run_cli({"run", "--task", "drawer_close", "--seeds", "0..2", "--out", (dir / "eps").string()}).code, 0);
  const auto a = run_cli({"export-sft", "--in", (dir / "eps").string(), "--out", (dir / "a").string()});
  ASSERT_EQ(a.code, 0) << a.err;
  const auto b = run_cli({"export-sft", "--in", (dir / "eps").string(), "--out", (dir / "b").string(),
                          "--inline-images"});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(run_cli({"validate", "--file", (dir / "b").string()}).code, 0);
  EXPECT_FALSE(fs::exists(dir / "b" / "images"));
  EXPECT_EQ(run_cli({"export-sft", "--in", (dir / "nowhere").string(), "--out", (dir / "c").string()}).code, 3);
}
