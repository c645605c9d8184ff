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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "goalpose/dataset.hpp"
#include "goalpose/rl.hpp"
#include "support/fixtures.hpp"

namespace goalpose {
namespace {

namespace fs = std::filesystem;
using testing::MixedPolicy;
using testing::scratch;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Two-pass population moments, written independently of group_advantages.
std::pair<double, double> moments(const std::vector<double>& v) {
  long double m = 0;
  for (double x : v) m += x;
  m /= v.size();
  long double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return {static_cast<double>(m), static_cast<double>(std::sqrt(s / v.size()))};
}

TEST(Advantages, WorkedExamples) {
  const auto a = group_advantages({1, 0, 0, 1});
  const std::vector<double> want_a = {1, -1, -1, 1};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(a[i], want_a[i], 1e-12);
  EXPECT_EQ(group_advantages({1, 1, 1, 1}), std::vector<double>(4, 0.0));
  EXPECT_EQ(group_advantages({0, 0}), std::vector<double>(2, 0.0));
  const auto b = group_advantages({1, 0, 0, 0, 0});
  const std::vector<double> want_b = {2, -0.5, -0.5, -0.5, -0.5};
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(b[i], want_b[i], 1e-12);
}

TEST(Advantages, TooSmallGroup) {
  EXPECT_THROW(group_advantages({1}), Error);
  EXPECT_THROW(group_advantages({}), Error);
}

TEST(Advantages, StandardizedOnRandomGroups) {
  std::mt19937_64 rng(7);
  int checked = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 15);
    std::vector<double> r(k);
    for (auto& x : r) x = static_cast<double>(rng() % 2);
    const auto a = group_advantages(r);
    ASSERT_EQ(a.size(), r.size());
    if (std::all_of(r.begin(), r.end(), [&](double x) { return x == r[0]; })) {
      for (double x : a) EXPECT_EQ(x, 0.0);
      continue;
    }
    const auto [m, s] = moments(a);
    EXPECT_LE(std::abs(m), 1e-9);
    EXPECT_NEAR(s, 1.0, 1e-9);
    ++checked;
  }
  EXPECT_GT(checked, 1000);
}

// A group of single-round episodes with fixed assistant text, for objective
// arithmetic without running the simulator.
RolloutGroup synthetic_group(const std::vector<double>& adv, const std::vector<std::string>& texts) {
  RolloutGroup g;
  g.id = "synthetic";
  for (std::size_t i = 0; i < adv.size(); ++i) {
    Episode e;
    e.id = "synthetic_k" + std::to_string(i);
    Round r;
    r.index = 1;
    r.assistant_text = texts[i];
    e.rounds.push_back(r);
    g.episodes.push_back(e);
    g.rewards.push_back(adv[i] > 0 ? 1 : 0);
  }
  g.advantages = adv;
  return g;
}

TokenLogProbs single_token_lp(const RolloutGroup& g, const std::vector<double>& ratios) {
  TokenLogProbs lp{g.id, {}};
  for (std::size_t i = 0; i < g.episodes.size(); ++i) {
    lp.samples.push_back({g.episodes[i].id,
                          {{1, {g.episodes[i].rounds[0].assistant_text}, {std::log(ratios[i])}, {0.0}}}});
  }
  return lp;
}

TEST(GrpoObjective, HandClippedCase) {
  const RolloutGroup g = synthetic_group({1, -1}, {"a", "b"});
  const TokenLogProbs lp = single_token_lp(g, {1.5, 0.5});
  // 1/2 * (min(1.5, 1.2) + min(-0.5, -0.8)) = 0.2
  EXPECT_NEAR(grpo_objective(g, lp, 0.2), 0.2, 1e-12);
}

TEST(GrpoObjective, RatioOneGivesMeanAdvantage) {
  MixedPolicy mixed([](int k) { return k == 0 || k == 3; });
  const RolloutGroup g = collect_group(TaskSpec::make(TaskName::kLiftCan), 2, 4, mixed);
  const TokenLogProbs lp = logprob_template(g, -1.3);
  EXPECT_NEAR(grpo_objective(g, lp), 0.0, 1e-12);
  EXPECT_NEAR(grpo_objective(g, lp, kInf), 0.0, 1e-12);
}

TEST(GrpoObjective, ZeroAdvantagesGiveZero) {
  const RolloutGroup g = synthetic_group({0, 0, 0}, {"x y", "z", "w w w"});
  TokenLogProbs lp = logprob_template(g);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-3.0, 0.0);
  for (auto& s : lp.samples)
    for (auto& r : s.rounds)
      for (auto& v : r.current) v = d(rng);
  EXPECT_EQ(grpo_objective(g, lp), 0.0);
}

TEST(GrpoObjective, UnclippedEqualsImportanceWeightedMean) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-4.0, 0.0);
  const RolloutGroup g = synthetic_group({1.5, -0.5, -0.5, -0.5}, {"a b c", "d", "e f", "g h i j"});
  TokenLogProbs lp = logprob_template(g);
  double expect = 0.0;
  for (std::size_t k = 0; k < lp.samples.size(); ++k) {
    auto& r = lp.samples[k].rounds[0];
    double acc = 0.0;
    for (std::size_t j = 0; j < r.current.size(); ++j) {
      r.current[j] = d(rng);
      r.old[j] = d(rng);
      acc += std::exp(r.current[j] - r.old[j]) * g.advantages[k];
    }
    expect += acc / r.current.size();
  }
  expect /= lp.samples.size();
  EXPECT_EQ(grpo_objective(g, lp, kInf), expect);
}

TEST(GrpoObjective, NestingIsTokensThenRoundsThenSamples) {
  // Sample 0: two rounds with 1 and 3 tokens; sample 1: one round.
  RolloutGroup g = synthetic_group({1, -1}, {"a", "q"});
  Round extra;
  extra.index = 2;
  extra.assistant_text = "b c d";
  g.episodes[0].rounds.push_back(extra);
  TokenLogProbs lp = logprob_template(g);
  lp.samples[0].rounds[0].current = {std::log(1.1)};
  lp.samples[0].rounds[1].current = {std::log(0.9), std::log(1.0), std::log(1.1)};
  lp.samples[1].rounds[0].current = {std::log(1.05)};
  const double s0 = (1.1 + (0.9 + 1.0 + 1.1) / 3.0) / 2.0;
  const double s1 = -1.05;
  EXPECT_NEAR(grpo_objective(g, lp, kInf), (s0 + s1) / 2.0, 1e-12);
}

TEST(GrpoObjective, MonotoneInAdvantage) {
  // For a fixed ratio a larger advantage never lowers the objective.
  for (double ratio : {0.5, 0.9, 1.0, 1.3, 2.0}) {
    double prev = -kInf;
    for (double a = -2.0; a <= 2.0; a += 0.25) {
      const RolloutGroup g = synthetic_group({a, 0.0}, {"t", "u"});
      const double v = grpo_objective(g, single_token_lp(g, {ratio, 1.0}), 0.2);
      EXPECT_GE(v, prev) << "ratio " << ratio << " a " << a;
      prev = v;
    }
  }
}

TEST(GrpoObjective, OrderInvariant) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-2.0, 0.0);
  RolloutGroup g = synthetic_group({1, -1, -1, 1}, {"a b", "c", "d e f", "g"});
  TokenLogProbs lp = logprob_template(g);
  for (auto& s : lp.samples)
    for (auto& r : s.rounds)
      for (auto& v : r.current) v = d(rng);
  const double base = grpo_objective(g, lp);
  RolloutGroup h = g;
  std::vector<std::size_t> perm = {2, 0, 3, 1};
  for (std::size_t i = 0; i < perm.size(); ++i) {
    h.episodes[i] = g.episodes[perm[i]];
    h.rewards[i] = g.rewards[perm[i]];
    h.advantages[i] = g.advantages[perm[i]];
  }
  std::reverse(lp.samples.begin(), lp.samples.end());
  EXPECT_NEAR(grpo_objective(h, lp), base, 1e-15);
}

TEST(GrpoObjective, MisalignedInputs) {
  const RolloutGroup g = synthetic_group({1, -1}, {"a b", "c"});
  auto expect_misaligned = [&](TokenLogProbs lp) {
    try {
      grpo_objective(g, lp);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::kMisalignedLogProbs);
    }
  };
  TokenLogProbs lp = logprob_template(g);
  auto missing = lp;
  missing.samples.pop_back();
  expect_misaligned(missing);
  auto short_old = lp;
  short_old.samples[0].rounds[0].old.pop_back();
  expect_misaligned(short_old);
  auto retok = lp;
  retok.samples[0].rounds[0].tokens = {"a", "b"};  // drops the space
  expect_misaligned(retok);
  auto wrong_id = lp;
  wrong_id.samples[1].episode_id = "other";
  expect_misaligned(wrong_id);
  auto extra_round = lp;
  extra_round.samples[1].rounds.push_back(extra_round.samples[1].rounds[0]);
  expect_misaligned(extra_round);
}

TEST(LogProbs, JsonRoundTripAndSchema) {
  const RolloutGroup g = synthetic_group({1, -1}, {"a b", "c"});
  TokenLogProbs lp = logprob_template(g, -0.25);
  const nlohmann::json j = lp;
  EXPECT_TRUE(schema_by_id(kLogProbsSchemaId).valid(j));
  const TokenLogProbs back = j.get<TokenLogProbs>();
  EXPECT_EQ(nlohmann::json(back).dump(), j.dump());
  nlohmann::json bad = j;
  bad["samples"][0]["rounds"][0]["current"][0] = 0.5;  // not a log-probability
  EXPECT_THROW(bad.get<TokenLogProbs>(), Error);
}

TEST(CollectGroup, OracleGroupIsDegenerate) {
  OraclePolicy oracle;
  const RolloutGroup g = collect_group(TaskSpec::make(TaskName::kStackCube), 3, 4, oracle);
  ASSERT_EQ(g.k(), 4);
  EXPECT_EQ(g.rewards, std::vector<double>(4, 1.0));
  EXPECT_EQ(g.advantages, std::vector<double>(4, 0.0));
  EXPECT_EQ(g.id, "stack_cube_s3");
  for (int k = 0; k < 4; ++k) {
    EXPECT_EQ(g.episodes[k].id, "stack_cube_s3_k" + std::to_string(k));
    // identical initial world: same first scene text and frame
    EXPECT_EQ(g.episodes[k].rounds[0].scene_text, g.episodes[0].rounds[0].scene_text);
    EXPECT_EQ(*g.episodes[k].rounds[0].image.png, *g.episodes[0].rounds[0].image.png);
  }
}

TEST(CollectGroup, MixedStub) {
  MixedPolicy mixed([](int k) { return k == 0 || k == 3; });
  const RolloutGroup g =
      collect_group(TaskSpec::make(TaskName::kLiftCan), 1, 4, mixed, {}, 4);
  EXPECT_EQ(g.rewards, (std::vector<double>{1, 0, 0, 1}));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(g.advantages[i], g.rewards[i] ? 1.0 : -1.0, 1e-12);
}

TEST(CollectGroup, KOfOneRejected) {
  OraclePolicy oracle;
  try {
    collect_group(TaskSpec::make(TaskName::kLiftCan), 0, 1, oracle);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kInvalidArgument);
  }
}

TEST(CollectGroup, PolicyErrorsScoreZero) {
  class Flaky : public Policy {
   public:
    PolicyReply complete(const std::vector<Message>& m, const PolicyContext& ctx) override {
      if (ctx.sample_index == 1) throw Error(Errc::kTimeout, "slow");
      return oracle_.complete(m, ctx);
    }
    nlohmann::json describe() const override { return {{"kind", "flaky"}}; }
    OraclePolicy oracle_;
  } flaky;
  const RolloutGroup g = collect_group(TaskSpec::make(TaskName::kLiftCan), 0, 2, flaky);
  EXPECT_EQ(g.rewards, (std::vector<double>{1, 0}));
  EXPECT_EQ(g.episodes[1].error->code, "Timeout");
}

std::string slurp(const fs::path& p) { return read_file(p.string()); }

TEST(RolloutExport, CountsSchemaAndByteIdenticalReexport) {
  OraclePolicy oracle;
  MixedPolicy mixed([](int k) { return k % 2 == 0; });
  std::vector<RolloutGroup> groups = {
      collect_group(TaskSpec::make(TaskName::kLiftCan), 0, 4, oracle),
      collect_group(TaskSpec::make(TaskName::kDrawerOpen), 5, 4, mixed)};
  const fs::path a = scratch("rollouts_a");
  const fs::path b = scratch("rollouts_b");
  const Manifest m = export_rollouts(groups, a.string());
  EXPECT_EQ(m.records, 8);
  EXPECT_EQ(m.groups, 2);
  EXPECT_EQ(m.per_task.at("lift_can"), 4);
  EXPECT_EQ(m.per_task.at("drawer_open"), 4);
  EXPECT_TRUE(schema_by_id(kManifestSchemaId).valid(nlohmann::json::parse(slurp(a / kManifestFile))));

  const auto lines = read_jsonl((a / kRolloutDataFile).string());  // validates each line
  ASSERT_EQ(lines.size(), 8u);
  EXPECT_EQ(lines[4]["reward"], 1);
  EXPECT_EQ(lines[5]["reward"], 0);
  EXPECT_EQ(lines[5]["outcome"], "parse_abort");
  EXPECT_DOUBLE_EQ(lines[5]["advantage"].get<double>(), -1.0);
  EXPECT_EQ(lines[0]["group_id"], "lift_can_s0");

  const auto records = load_rollouts(a.string());
  const Manifest m2 = export_rollout_records(records, b.string());
  EXPECT_EQ(m2.sha256, m.sha256);
  EXPECT_EQ(slurp(a / kRolloutDataFile), slurp(b / kRolloutDataFile));
  EXPECT_EQ(slurp(a / kManifestFile), slurp(b / kManifestFile));
  int images = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a / "images")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a);
    EXPECT_EQ(slurp(entry.path()), slurp(b / rel)) << rel;
    ++images;
  }
  EXPECT_EQ(images, m.images);

  // Exporting the same groups again is byte-identical too.
  const fs::path c = scratch("rollouts_c");
  export_rollouts(groups, c.string());
  EXPECT_EQ(slurp(a / kRolloutDataFile), slurp(c / kRolloutDataFile));
}

TEST(RolloutExport, InlinedImagesRoundTrip) {
  OraclePolicy oracle;
  const RolloutGroup g = collect_group(TaskSpec::make(TaskName::kLiftCan), 0, 2, oracle);
  const fs::path a = scratch("rollouts_inline");
  const Manifest m = export_rollouts({g}, a.string(), {true});
  EXPECT_TRUE(m.inline_images);
  EXPECT_EQ(m.images, 0);
  EXPECT_FALSE(fs::exists(a / "images"));
  const auto recs = load_rollouts(a.string());
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(*recs[0].messages[1].images.at(0).png, *g.episodes[0].rounds[0].image.png);
}

TEST(RolloutExport, EmptyRejected) {
  EXPECT_THROW(export_rollouts({}, scratch("rollouts_empty").string()), Error);
}

}  // namespace
}  // namespace goalpose
