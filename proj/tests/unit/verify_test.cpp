#include <gtest/gtest.h>

#include <fstream>

#include "recast/errors.hpp"
#include "recast/llm/mock_provider.hpp"
#include "recast/records.hpp"
#include "recast/verify.hpp"
#include "test_support.hpp"

namespace recast::verify {
namespace {

using llm::PromptKind;
using llm::ScriptedProvider;
using nlohmann::json;

std::string yes(const std::string& why = "fine") { return json{{"analysis", why}, {"answer", "Yes"}}.dump(); }
std::string no(const std::string& why = "missing") { return json{{"analysis", why}, {"answer", "No"}}.dump(); }

Constraint tone() {
  return make_constraint(ConstraintKind::tone, "", {}, "Maintain a formal and academic tone.", Origin::generated);
}

TEST(VerifyRule, GoldenFixtures) {
  std::size_t n = 0;
  read_jsonl(testing::fixture_dir() / "validator_cases.jsonl", [&](const json& row, long line) {
    ++n;
    const auto c = parse_constraint(row.at("constraint"), line);
    const auto v = verify_rule(c, row.at("text").get<std::string>());
    EXPECT_EQ(v.satisfied, row.at("expected").get<bool>()) << row.at("name") << ": " << v.detail;
    EXPECT_EQ(v.method, Method::rule);
    EXPECT_EQ(v.constraint_id, c.id);
    EXPECT_FALSE(v.judge_analysis.has_value());
    if (row.contains("detail")) {
      EXPECT_EQ(v.detail, row.at("detail").get<std::string>()) << row.at("name");
    }
  });
  EXPECT_GE(n, 60u);
}

TEST(VerifyRule, RejectsModelConstraint) { EXPECT_THROW(verify_rule(tone(), "text"), InvalidArgument); }

TEST(VerifyRule, UnknownVariantIsRegistryError) {
  Constraint c = make_constraint(ConstraintKind::length_words, "exact", {{"count", 3}}, "x", Origin::extracted);
  EXPECT_THROW(verify_rule(c, "a b c"), RegistryError);
}

TEST(VerifyRule, Idempotent) {
  util::Rng rng(3);
  const auto c = make_constraint(ConstraintKind::length_words, "range", {{"min", 5}, {"max", 40}}, "x",
                                 Origin::extracted);
  for (int i = 0; i < 200; ++i) {
    const auto t = testing::random_text(rng);
    EXPECT_EQ(verify_rule(c, t), verify_rule(c, t));
  }
}

TEST(VerifyModel, YesFromScriptedJudge) {
  ScriptedProvider judge("judge");
  judge.set_default(PromptKind::judge, yes("formal register throughout"));
  const auto v = verify_model(tone(), "Explain tides.", "Tidal forces arise from gravitational gradients.", judge);
  EXPECT_TRUE(v.satisfied);
  EXPECT_EQ(v.method, Method::judge);
  ASSERT_TRUE(v.judge_analysis);
  EXPECT_EQ(*v.judge_analysis, "formal register throughout");
}

TEST(VerifyModel, RetriesUnparseableReplies) {
  ScriptedProvider judge("judge");
  judge.enqueue(PromptKind::judge, std::string("Maybe"));
  judge.enqueue(PromptKind::judge, std::string("{\"answer\": \"perhaps\"}"));
  judge.enqueue(PromptKind::judge, no());
  const auto v = verify_model(tone(), "i", "r", judge);
  EXPECT_FALSE(v.satisfied);
  EXPECT_EQ(judge.calls(PromptKind::judge), 3u);
}

TEST(VerifyModel, GivesUpAfterBudget) {
  ScriptedProvider judge("judge");
  judge.set_default(PromptKind::judge, "Maybe");
  EXPECT_THROW(verify_model(tone(), "i", "r", judge), JudgeProtocolError);
  EXPECT_EQ(judge.calls(PromptKind::judge), static_cast<std::size_t>(kJudgeRetries + 1));
}

TEST(VerifyModel, GatewayErrorPropagates) {
  ScriptedProvider judge("judge");
  judge.enqueue(PromptKind::judge, GatewayError(GatewayError::Kind::timeout, "slow"));
  EXPECT_THROW(verify_model(tone(), "i", "r", judge), GatewayError);
}

TEST(VerifyModel, RejectsRuleConstraint) {
  ScriptedProvider judge("judge");
  const auto c = make_constraint(ConstraintKind::no_commas, "default", {}, "x", Origin::extracted);
  EXPECT_THROW(verify_model(c, "i", "r", judge), InvalidArgument);
}

TEST(VerifyAll, RuleConstraintsNeverReachJudge) {
  ScriptedProvider judge("judge");
  judge.set_default(PromptKind::judge, yes());
  std::vector<Constraint> cs = {
      make_constraint(ConstraintKind::no_commas, "default", {}, "a", Origin::extracted),
      tone(),
      make_constraint(ConstraintKind::end_with, "default", {{"word", "HARMONY"}}, "b", Origin::extracted),
      make_constraint(ConstraintKind::topic, "", {}, "Discuss tides.", Origin::generated),
  };
  const auto out = verify_all(cs, "i", "We achieve HARMONY.", judge);
  ASSERT_EQ(out.size(), 4u);
  for (std::size_t i = 0; i < cs.size(); ++i) {
    EXPECT_EQ(out[i].constraint_id, cs[i].id);
    EXPECT_EQ(out[i].method, cs[i].is_rule() ? Method::rule : Method::judge);
  }
  EXPECT_EQ(judge.calls(), 2u);
}

TEST(VerifyAll, PartialResultsOnJudgeFailure) {
  ScriptedProvider judge("judge");
  judge.enqueue(PromptKind::judge, yes());
  judge.set_default(PromptKind::judge, "no idea");
  std::vector<Constraint> cs = {
      make_constraint(ConstraintKind::no_commas, "default", {}, "a", Origin::extracted),
      tone(),
      make_constraint(ConstraintKind::topic, "", {}, "Discuss tides.", Origin::generated),
  };
  try {
    verify_all(cs, "i", "r", judge);
    FAIL();
  } catch (const PartialVerdictsError& e) {
    ASSERT_EQ(e.partial().size(), 2u);
    EXPECT_TRUE(e.partial()[1].satisfied);
  }
}

TEST(VerdictJson, RoundTripAndSchema) {
  Verdict rule{"c0123456789abcdef", false, Method::rule, "comma at offset 1", std::nullopt};
  Verdict judged{"c0123456789abcdef", true, Method::judge, "judge x answered Yes", std::string("ok")};
  EXPECT_EQ(parse_verdict(to_json(rule)), rule);
  EXPECT_EQ(parse_verdict(to_json(judged)), judged);

  auto bad = to_json(rule);
  bad["judge_analysis"] = "no";
  EXPECT_THROW(parse_verdict(bad), ParseError);
  bad = to_json(rule);
  bad["method"] = "vibes";
  EXPECT_THROW(parse_verdict(bad), ParseError);
  bad = to_json(rule);
  bad["satisfied"] = "yes";
  EXPECT_THROW(parse_verdict(bad), ParseError);
}

}  // namespace
}  // namespace recast::verify
