#include <gtest/gtest.h>

#include <cstdlib>
#include <future>

#include "recast/errors.hpp"
#include "recast/llm/http_provider.hpp"
#include "recast/llm/mock_provider.hpp"
#include "recast/llm/parsing.hpp"
#include "recast/llm/prompts.hpp"
#include "recast/records.hpp"
#include "recast/util/hash.hpp"
#include "test_support.hpp"

namespace recast::llm {
namespace {

using nlohmann::json;
using testing::FakeChatServer;

std::size_t occurrences(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + needle.size())) ++n;
  return n;
}

std::string joined(const Messages& m) {
  std::string out;
  for (const auto& x : m) out += x.role + ":" + x.content + "\n";
  return out;
}

std::vector<Constraint> sample_pool() {
  return {
      make_constraint(ConstraintKind::no_commas, "default", {}, "Do not use any commas in your response.",
                      Origin::extracted),
      make_constraint(ConstraintKind::tone, "", {}, "Maintain a formal and academic tone.", Origin::generated),
      make_constraint(ConstraintKind::tone, "", {}, "Avoid slang.", Origin::generated),
  };
}

std::map<PromptKind, Slots> golden_slots() {
  const std::array<std::string, 4> cands = {"Describe tides.", "Explain tides briefly.", "Tides: go.",
                                            "What causes tides?"};
  auto rank_i = candidate_slots(cands);
  auto rank_r = candidate_slots(std::span(cands).first(3));
  rank_r["instruction"] = "Explain tides.";
  const auto pool = sample_pool();
  return {
      {PromptKind::constraint_gen,
       {{"response", "Tides rise twice a day."}, {"categories", category_list(kModelKinds)}}},
      {PromptKind::add_constraints, {{"instruction", "Explain tides."}, {"constraints", constraint_dictionary(pool)}}},
      {PromptKind::rank_instructions, rank_i},
      {PromptKind::rank_responses, rank_r},
      {PromptKind::judge,
       {{"instruction", "Explain tides."},
        {"response", "Tides rise twice a day."},
        {"constraint", "Maintain a formal and academic tone."}}},
  };
}

// Prompt wording is frozen in tests/golden. Set RECAST_UPDATE_GOLDEN=1 to
// rewrite the files after an intentional change.
TEST(Prompts, MatchGoldenFiles) {
  const bool update = std::getenv("RECAST_UPDATE_GOLDEN") != nullptr;
  for (const auto& [kind, slots] : golden_slots()) {
    const auto msgs = build_prompt(kind, slots);
    json j = json::array();
    for (const auto& m : msgs) j.push_back({{"role", m.role}, {"content", m.content}});
    const auto path = testing::golden_dir() / ("prompt_" + std::string(to_string(kind)) + ".json");
    if (update) {
      testing::write_file(path, j.dump(2) + "\n");
      continue;
    }
    ASSERT_TRUE(std::filesystem::exists(path)) << path;
    EXPECT_EQ(json::parse(testing::read_file(path)), j) << to_string(kind);
  }
}

TEST(Prompts, MissingSlotNamed) {
  try {
    build_prompt(PromptKind::judge, {{"instruction", "x"}, {"response", "y"}});
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("'constraint'"), std::string::npos);
  }
  EXPECT_THROW(build_prompt(PromptKind::rank_instructions, {{"A", "x"}}), InvalidArgument);
  EXPECT_THROW(build_prompt(PromptKind::rank_instructions, {{"A", "x"}, {"C", "y"}}), InvalidArgument);
  EXPECT_THROW(build_prompt(PromptKind::respond, {}), InvalidArgument);
}

TEST(Prompts, RankingPromptLabelsFourCandidates) {
  const auto text = joined(build_prompt(PromptKind::rank_instructions, golden_slots()[PromptKind::rank_instructions]));
  for (char c : std::string("ABCD")) EXPECT_EQ(occurrences(text, std::string("[") + c + "]"), 1u) << c;
  EXPECT_EQ(occurrences(text, "[E]"), 0u);
}

TEST(Prompts, CategoryListCoversAllModelTypes) {
  const auto list = category_list(kModelKinds);
  for (auto k : kModelKinds) EXPECT_NE(list.find("- " + std::string(to_string(k)) + ":"), std::string::npos);
  for (auto k : kRuleKinds) EXPECT_EQ(list.find("- " + std::string(to_string(k)) + ":"), std::string::npos);
}

TEST(Prompts, JudgePromptHoldsOneConstraint) {
  const auto text = joined(build_prompt(PromptKind::judge, golden_slots()[PromptKind::judge]));
  EXPECT_EQ(occurrences(text, "Maintain a formal and academic tone."), 1u);
}

TEST(Prompts, ConstraintDictionaryGroupsByType) {
  const auto dict = json::parse(constraint_dictionary(sample_pool()));
  EXPECT_EQ(dict["tone"].size(), 2u);
  EXPECT_EQ(dict["no_commas"][0], "Do not use any commas in your response.");
}

TEST(Prompts, ContentHashDistinguishesRoles) {
  Messages a = {{"system", "x"}, {"user", "y"}};
  Messages b = {{"user", "x"}, {"user", "y"}};
  Messages c = {{"system", "xy"}};
  EXPECT_NE(content_hash(a), content_hash(b));
  EXPECT_NE(content_hash(a), content_hash(c));
  EXPECT_EQ(content_hash(a), content_hash(Messages(a)));
}

TEST(ParseRanking, AcceptsCommonShapes) {
  EXPECT_EQ(parse_ranking("C > A > D > B", 4).order, (std::vector<char>{'C', 'A', 'D', 'B'}));
  EXPECT_EQ(parse_ranking(" b>d>a>c ", 4).order, (std::vector<char>{'B', 'D', 'A', 'C'}));
  EXPECT_EQ(parse_ranking("Ranking:\n[B, A, C].", 3).order, (std::vector<char>{'B', 'A', 'C'}));
  EXPECT_EQ(parse_ranking("\"A > B\"", 2).indices(), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(parse_ranking("Sure!\nD > C > B > A", 4).indices(), (std::vector<std::size_t>{3, 2, 1, 0}));
}

TEST(ParseRanking, RejectsNonPermutations) {
  EXPECT_THROW(parse_ranking("A > A > B > C", 4), RankingParseError);
  EXPECT_THROW(parse_ranking("A > B > C", 4), RankingParseError);
  EXPECT_THROW(parse_ranking("A > B > C > E", 4), RankingParseError);
  EXPECT_THROW(parse_ranking("AB > C > D", 3), RankingParseError);
  EXPECT_THROW(parse_ranking("", 2), RankingParseError);
  EXPECT_THROW(parse_ranking("A > B", 1), InvalidArgument);
  EXPECT_THROW(parse_ranking("A > B", 27), InvalidArgument);
}

TEST(ParseGenerated, DecodesDictionary) {
  const auto out = parse_generated_constraints(
      "Here you go:\n```json\n{\"Tone\": [\"Maintain a formal and academic tone.\"], \"role-playing\": \"Act as a "
      "guide.\", \"velocity\": [\"Go fast.\"], \"no_commas\": [\"x\"], \"emotion\": null}\n```");
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out.at(ConstraintKind::tone), (std::vector<std::string>{"Maintain a formal and academic tone."}));
  EXPECT_EQ(out.at(ConstraintKind::role_playing), (std::vector<std::string>{"Act as a guide."}));
}

TEST(ParseGenerated, Errors) {
  EXPECT_THROW(parse_generated_constraints("no json at all"), GenerationParseError);
  EXPECT_THROW(parse_generated_constraints("{\"tone\": 5}"), GenerationParseError);
}

TEST(ParseJudge, Answers) {
  EXPECT_TRUE(parse_judge_reply(R"({"analysis": "ok", "answer": "Yes"})").satisfied);
  EXPECT_FALSE(parse_judge_reply(R"({"analysis": "no", "answer": "no."})").satisfied);
  EXPECT_TRUE(parse_judge_reply("```json\n{\"answer\": \"YES\"}\n```").satisfied);
  EXPECT_THROW(parse_judge_reply("Maybe"), JudgeProtocolError);
  EXPECT_THROW(parse_judge_reply(R"({"answer": "Maybe"})"), JudgeProtocolError);
  EXPECT_THROW(parse_judge_reply(R"({"analysis": "x"})"), JudgeProtocolError);
}

TEST(ScriptedProvider, LookupOrder) {
  ScriptedProvider p("s");
  ChatRequest req;
  req.kind = PromptKind::judge;
  req.messages = {{"user", "hello"}};
  p.add_fixture(PromptKind::judge, content_hash(req.messages), "fixture");
  p.enqueue(PromptKind::judge, std::string("queued"));
  p.set_default(PromptKind::judge, "default");
  EXPECT_EQ(p.complete(req), "fixture");
  req.messages = {{"user", "other"}};
  EXPECT_EQ(p.complete(req), "queued");
  EXPECT_EQ(p.complete(req), "default");
  req.kind = PromptKind::respond;
  EXPECT_THROW(p.complete(req), GatewayError);
  p.set_echo(true);
  EXPECT_EQ(p.complete(req), "other");
  EXPECT_EQ(p.calls(), 5u);
  EXPECT_EQ(p.calls(PromptKind::judge), 3u);
}

TEST(SimulatedProvider, DeterministicAndWellFormed) {
  SimulatedProvider a("sim-a"), b("sim-a");
  ChatRequest gen;
  gen.kind = PromptKind::constraint_gen;
  gen.messages = build_prompt(PromptKind::constraint_gen, golden_slots()[PromptKind::constraint_gen]);
  EXPECT_EQ(a.complete(gen), b.complete(gen));
  const auto parsed = parse_generated_constraints(a.complete(gen));
  EXPECT_GE(parsed.size(), 5u);

  ChatRequest rank;
  rank.kind = PromptKind::rank_instructions;
  rank.messages = build_prompt(PromptKind::rank_instructions, golden_slots()[PromptKind::rank_instructions]);
  EXPECT_NO_THROW(parse_ranking(a.complete(rank), 4));

  ChatRequest judge;
  judge.kind = PromptKind::judge;
  judge.messages = build_prompt(PromptKind::judge, golden_slots()[PromptKind::judge]);
  EXPECT_TRUE(parse_judge_reply(a.complete(judge)).satisfied);
  auto slots = golden_slots()[PromptKind::judge];
  slots["constraint"] = "Write " + std::string(kUnsatisfiableMarker) + ".";
  judge.messages = build_prompt(PromptKind::judge, slots);
  EXPECT_FALSE(parse_judge_reply(a.complete(judge)).satisfied);
}

ChatRequest simple_request() {
  ChatRequest r;
  r.kind = PromptKind::respond;
  r.messages = response_request("Say hi.");
  return r;
}

ProviderConfig config_for(const FakeChatServer& server) {
  ProviderConfig cfg;
  cfg.name = "fake";
  cfg.endpoint = server.endpoint();
  cfg.model_id = "m-1";
  cfg.retry.backoff_base = std::chrono::milliseconds(1);
  cfg.timeout = std::chrono::milliseconds(5000);
  return cfg;
}

TEST(HttpProvider, RequestBodyUsesDeterministicDefaults) {
  json seen;
  FakeChatServer server([&](const json& body, int) {
    seen = body;
    return std::pair{200, FakeChatServer::completion("hi")};
  });
  HttpChatProvider p(config_for(server));
  EXPECT_EQ(p.complete(simple_request()), "hi");
  EXPECT_EQ(seen["model"], "m-1");
  EXPECT_EQ(seen["temperature"], 0.0);
  EXPECT_EQ(seen["top_p"], 1.0);
  EXPECT_EQ(seen["n"], 1);
  EXPECT_FALSE(seen.contains("max_tokens"));
  EXPECT_EQ(seen["messages"][0]["content"], "Say hi.");
}

TEST(HttpProvider, RetriesServerErrors) {
  FakeChatServer server([](const json&, int i) {
    if (i < 2) return std::pair{500, std::string("{}")};
    return std::pair{200, FakeChatServer::completion("third time")};
  });
  HttpChatProvider p(config_for(server));
  EXPECT_EQ(p.complete(simple_request()), "third time");
  EXPECT_EQ(server.calls(), 3);
}

TEST(HttpProvider, GivesUpAfterAttempts) {
  FakeChatServer server([](const json&, int) { return std::pair{503, std::string("{}")}; });
  HttpChatProvider p(config_for(server));
  try {
    p.complete(simple_request());
    FAIL();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.kind(), GatewayError::Kind::http_status);
    EXPECT_EQ(e.status(), 503);
  }
  EXPECT_EQ(server.calls(), 3);
}

TEST(HttpProvider, AuthFailureIsNotRetried) {
  FakeChatServer server([](const json&, int) { return std::pair{401, std::string("{}")}; });
  HttpChatProvider p(config_for(server));
  try {
    p.complete(simple_request());
    FAIL();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.kind(), GatewayError::Kind::auth);
  }
  EXPECT_EQ(server.calls(), 1);
}

TEST(HttpProvider, ClientErrorIsNotRetried) {
  FakeChatServer server([](const json&, int) { return std::pair{400, std::string("{}")}; });
  HttpChatProvider p(config_for(server));
  EXPECT_THROW(p.complete(simple_request()), GatewayError);
  EXPECT_EQ(server.calls(), 1);
}

TEST(HttpProvider, MissingKeyVariable) {
  FakeChatServer server([](const json&, int) { return std::pair{200, FakeChatServer::completion("x")}; });
  auto cfg = config_for(server);
  cfg.api_key_env = "RECAST_TEST_SURELY_UNSET_KEY";
  ::unsetenv(cfg.api_key_env.c_str());
  HttpChatProvider p(cfg);
  try {
    p.complete(simple_request());
    FAIL();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.kind(), GatewayError::Kind::auth);
    EXPECT_NE(std::string(e.what()).find("RECAST_TEST_SURELY_UNSET_KEY"), std::string::npos);
  }
  EXPECT_EQ(server.calls(), 0);
}

TEST(HttpProvider, SendsBearerKey) {
  FakeChatServer server([](const json&, int) { return std::pair{200, FakeChatServer::completion("x")}; });
  auto cfg = config_for(server);
  cfg.api_key_env = "RECAST_TEST_KEY";
  ::setenv("RECAST_TEST_KEY", "sk-test", 1);
  HttpChatProvider p(cfg);
  p.complete(simple_request());
  ASSERT_EQ(server.auth_headers().size(), 1u);
  EXPECT_EQ(server.auth_headers()[0], "Bearer sk-test");
}

TEST(HttpProvider, MalformedPayload) {
  FakeChatServer server([](const json&, int) { return std::pair{200, std::string("{\"choices\": []}")}; });
  HttpChatProvider p(config_for(server));
  try {
    p.complete(simple_request());
    FAIL();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.kind(), GatewayError::Kind::malformed_payload);
  }
}

TEST(HttpProvider, TransportFailure) {
  ProviderConfig cfg;
  cfg.name = "dead";
  cfg.endpoint = "http://127.0.0.1:1/v1/chat/completions";
  cfg.retry.attempts = 2;
  cfg.retry.backoff_base = std::chrono::milliseconds(1);
  cfg.timeout = std::chrono::milliseconds(500);
  HttpChatProvider p(cfg);
  EXPECT_THROW(p.complete(simple_request()), GatewayError);
}

TEST(HttpProvider, AdmissionLimitHolds) {
  FakeChatServer server([](const json&, int) { return std::pair{200, FakeChatServer::completion("ok")}; },
                        std::chrono::milliseconds(20));
  auto cfg = config_for(server);
  cfg.max_in_flight = 3;
  HttpChatProvider p(cfg);
  std::vector<std::future<std::string>> futs;
  for (int i = 0; i < 24; ++i) futs.push_back(std::async(std::launch::async, [&] { return p.complete(simple_request()); }));
  for (auto& f : futs) EXPECT_EQ(f.get(), "ok");
  EXPECT_LE(server.peak_concurrency(), 3);
  EXPECT_LE(p.peak_in_flight(), 3);
  EXPECT_GE(p.peak_in_flight(), 2);
}

TEST(HttpProvider, AuditLogStoresHashes) {
  testing::TempDir dir;
  FakeChatServer server([](const json&, int) { return std::pair{200, FakeChatServer::completion("reply text")}; });
  for (bool include_text : {false, true}) {
    const auto path = dir / (include_text ? "full.jsonl" : "hashes.jsonl");
    {
      auto audit = std::make_shared<AuditLog>(path, include_text);
      HttpChatProvider p(config_for(server), audit);
      p.complete(simple_request());
    }
    std::vector<json> lines;
    read_jsonl(path, [&](const json& j, long) { lines.push_back(j); });
    ASSERT_EQ(lines.size(), 1u);
    EXPECT_EQ(lines[0]["request_sha256"], content_hash(simple_request().messages));
    EXPECT_EQ(lines[0]["response_sha256"], util::sha256_hex(FakeChatServer::completion("reply text")));
    EXPECT_EQ(lines[0].contains("response"), include_text);
    EXPECT_EQ(lines[0].contains("messages"), include_text);
  }
}

TEST(ProviderConfig, ValidatesAndRoundTrips) {
  ProviderConfig cfg;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.name = "x";
  cfg.endpoint = "http://localhost:9/v1/chat/completions";
  cfg.model_id = "m";
  EXPECT_NO_THROW(cfg.validate());
  const auto back = provider_config_from_json(to_json(cfg));
  EXPECT_EQ(back.name, cfg.name);
  EXPECT_EQ(back.endpoint, cfg.endpoint);
  EXPECT_EQ(back.max_in_flight, cfg.max_in_flight);
  cfg.max_in_flight = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

}  // namespace
}  // namespace recast::llm
