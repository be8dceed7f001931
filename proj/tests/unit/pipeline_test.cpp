#include <gtest/gtest.h>

#include "recast/errors.hpp"
#include "recast/llm/mock_provider.hpp"
#include "recast/pipeline.hpp"
#include "test_support.hpp"

namespace recast::pipeline {
namespace {

using llm::PromptKind;
using llm::Ranking;
using llm::ScriptedProvider;
using llm::SimulatedProvider;
using nlohmann::json;

Ranking rk(const std::string& s) { return Ranking{std::vector<char>(s.begin(), s.end())}; }

Roster sim_roster() {
  Roster r;
  for (const char* n : {"sim-a", "sim-b", "sim-c", "sim-d"}) {
    auto p = std::make_shared<SimulatedProvider>(n);
    r.generators.push_back(p);
    r.rewriters.push_back(p);
    r.voters.push_back(p);
  }
  r.judge = std::make_shared<SimulatedProvider>("sim-judge");
  return r;
}

RecordContext sim_context(std::uint64_t seed = 7) {
  RecordContext ctx;
  ctx.roster = sim_roster();
  ctx.global_seed = seed;
  return ctx;
}

TEST(Borda, OracleExample) {
  const std::vector<Ranking> r = {rk("ABCD"), rk("BACD"), rk("BCAD"), rk("ABDC")};
  const auto res = borda_select(r);
  EXPECT_EQ(res.winner, 1u);
  EXPECT_EQ(res.tally, (std::vector<int>{9, 10, 4, 1}));
}

TEST(Borda, TieGoesToEarliestLabel) {
  const std::vector<Ranking> r = {rk("AB"), rk("BA")};
  EXPECT_EQ(borda_select(r).winner, 0u);
  const std::vector<Ranking> r3 = {rk("CBA"), rk("BCA")};
  EXPECT_EQ(borda_select(r3).winner, 1u);
}

TEST(Borda, RejectsBadInput) {
  EXPECT_THROW(borda_select(std::vector<Ranking>{}), InvalidArgument);
  EXPECT_THROW(borda_select(std::vector<Ranking>{rk("AB"), rk("ABC")}), InvalidArgument);
  EXPECT_THROW(borda_select(std::vector<Ranking>{rk("AA")}), InvalidArgument);
}

TEST(Roster, NamesMissingRole) {
  Roster r = sim_roster();
  r.judge.reset();
  try {
    r.require_generation();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("'judge'"), std::string::npos);
  }
  r = sim_roster();
  r.rewriters.resize(1);
  EXPECT_THROW(r.require_enhancement(), ConfigError);
  r = sim_roster();
  r.voters.clear();
  EXPECT_THROW(r.require_synthesis(), ConfigError);
}

SeedRecord seed() { return {"x1", "Explain how tides work.", "Tides rise and fall twice a day. The moon pulls water."}; }

TEST(BuildPool, RuleFirstThenJudgedModelConstraints) {
  ScriptedProvider gen("gen"), judge("judge");
  gen.set_default(PromptKind::constraint_gen,
                  R"({"tone": ["Maintain a formal and academic tone.", "Use slang."], "topic": ["Discuss tides."]})");
  judge.enqueue(PromptKind::judge, R"({"analysis": "", "answer": "Yes"})");
  judge.enqueue(PromptKind::judge, R"({"analysis": "", "answer": "No"})");
  judge.enqueue(PromptKind::judge, R"({"analysis": "", "answer": "Yes"})");
  const auto pool = build_pool(seed(), extract::ExtractionConfig{}, TemplateRegistry::builtin(), gen, judge);
  std::size_t rules = 0;
  while (rules < pool.constraints.size() && pool.constraints[rules].is_rule()) ++rules;
  EXPECT_GT(rules, 0u);
  EXPECT_EQ(pool.constraints.size() - rules, 2u);
  EXPECT_EQ(pool.rejected, 1u);
  EXPECT_EQ(pool.filter_verdicts.size(), 2u);
  EXPECT_EQ(judge.calls(), 3u);
}

TEST(BuildPool, GenerationRetriedOnce) {
  ScriptedProvider gen("gen"), judge("judge");
  gen.enqueue(PromptKind::constraint_gen, std::string("not json"));
  gen.enqueue(PromptKind::constraint_gen, std::string(R"({"topic": ["Discuss tides."]})"));
  judge.set_default(PromptKind::judge, R"({"answer": "Yes"})");
  const auto pool = build_pool(seed(), extract::ExtractionConfig{}, TemplateRegistry::builtin(), gen, judge);
  EXPECT_EQ(gen.calls(), 2u);
  EXPECT_EQ(pool.constraints.back().text, "Discuss tides.");

  ScriptedProvider bad("bad");
  bad.set_default(PromptKind::constraint_gen, "still not json");
  EXPECT_THROW(build_pool(seed(), extract::ExtractionConfig{}, TemplateRegistry::builtin(), bad, judge),
               GenerationParseError);
  EXPECT_EQ(bad.calls(), 2u);
}

std::vector<Constraint> small_pool() {
  return {make_constraint(ConstraintKind::no_commas, "default", {}, "Do not use any commas in your response.",
                          Origin::extracted)};
}

TEST(Enhance, DegradesWhenOneRewriterFails) {
  auto roster = sim_roster();
  auto broken = std::make_shared<ScriptedProvider>("broken");
  broken->enqueue(PromptKind::add_constraints, GatewayError(GatewayError::Kind::timeout, "timed out"));
  roster.rewriters[2] = broken;
  const auto out = enhance_instruction("Explain tides.", small_pool(), roster.rewriters, roster.voters);
  EXPECT_EQ(out.vote.candidate_providers.size(), 3u);
  ASSERT_EQ(out.vote.dropped.size(), 1u);
  EXPECT_NE(out.vote.dropped[0].find("broken"), std::string::npos);
  EXPECT_EQ(out.vote.ballots.size(), 4u);
  EXPECT_EQ(out.vote.tally.size(), 3u);
  EXPECT_FALSE(out.text.empty());
}

TEST(Enhance, FailsBelowTwoCandidates) {
  auto roster = sim_roster();
  for (std::size_t i = 1; i < roster.rewriters.size(); ++i) {
    auto p = std::make_shared<ScriptedProvider>("dead" + std::to_string(i));
    roster.rewriters[i] = p;  // no replies scripted: transport error
  }
  EXPECT_THROW(enhance_instruction("Explain tides.", small_pool(), roster.rewriters, roster.voters), Error);
}

TEST(Enhance, EmptyPoolRejected) {
  auto roster = sim_roster();
  EXPECT_THROW(enhance_instruction("Explain tides.", {}, roster.rewriters, roster.voters), InvalidArgument);
}

TEST(Enhance, UnparseableBallotRetriedThenDropped) {
  auto roster = sim_roster();
  auto flaky = std::make_shared<ScriptedProvider>("flaky");
  flaky->enqueue(PromptKind::rank_instructions, std::string("I like them all"));
  flaky->enqueue(PromptKind::rank_instructions, std::string("D > C > B > A"));
  auto hopeless = std::make_shared<ScriptedProvider>("hopeless");
  hopeless->set_default(PromptKind::rank_instructions, "no");
  std::vector<ProviderPtr> voters = {flaky, hopeless};
  const auto out = enhance_instruction("Explain tides.", small_pool(), roster.rewriters, voters);
  EXPECT_EQ(out.vote.voters, (std::vector<std::string>{"flaky"}));
  EXPECT_EQ(out.vote.ballots, (std::vector<std::string>{"D > C > B > A"}));
  EXPECT_EQ(out.vote.winner, 3u);
  EXPECT_EQ(hopeless->calls(), 2u);
}

TEST(Synthesize, PicksWinnerText) {
  auto roster = sim_roster();
  const auto out = synthesize_response("Explain tides.", roster.generators, roster.voters);
  EXPECT_EQ(out.vote.candidate_providers.size(), 4u);
  EXPECT_LT(out.vote.winner, 4u);
  EXPECT_NE(out.text.find("(" + out.vote.candidate_providers[out.vote.winner] + ")"), std::string::npos);
}

TEST(ProcessRecord, DeterministicAndMixed) {
  const auto ctx = sim_context();
  const auto a = process_record(seed(), ctx);
  const auto b = process_record(seed(), ctx);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  bool rule = false, model = false;
  for (const auto& c : a.constraints) (c.is_rule() ? rule : model) = true;
  EXPECT_TRUE(rule && model);
  EXPECT_GT(a.provenance.rejected_constraints, 0u);  // the planted constraint
  EXPECT_EQ(a.provenance.filter_verdicts.size(),
            static_cast<std::size_t>(std::count_if(a.constraints.begin(), a.constraints.end(),
                                                   [](const Constraint& c) { return !c.is_rule(); })));
}

TEST(ProcessRecord, VariantCap) {
  auto ctx = sim_context();
  ctx.variant_cap = 5;
  const auto r = process_record(seed(), ctx);
  EXPECT_EQ(r.constraints.size(), 5u);
}

class RunTest : public ::testing::Test {
 protected:
  testing::TempDir dir;
  std::filesystem::path seeds = dir / "seeds.jsonl";
  void SetUp() override { testing::write_seeds(seeds, testing::synthetic_seeds(12, 42)); }

  RunReport run_to(const std::filesystem::path& out, bool resume = false, std::size_t width = 3) {
    RunOptions o;
    o.input = seeds;
    o.output = out;
    o.width = width;
    o.resume = resume;
    return run(o, sim_context());
  }
};

TEST_F(RunTest, WidthDoesNotChangeOutput) {
  const auto r1 = run_to(dir / "a.jsonl", false, 1);
  run_to(dir / "b.jsonl", false, 4);
  EXPECT_EQ(r1.completed, 12u);
  EXPECT_EQ(r1.failed, 0u);
  EXPECT_EQ(testing::read_file(dir / "a.jsonl"), testing::read_file(dir / "b.jsonl"));
  const auto report = json::parse(testing::read_file(report_path(dir / "a.jsonl")));
  EXPECT_EQ(report["completed"], 12);
  EXPECT_GT(report["constraints_per_category"]["rule"].get<int>(), 0);
  EXPECT_GT(report["constraints_per_category"]["model"].get<int>(), 0);
}

TEST_F(RunTest, ResumeAfterTornWrite) {
  run_to(dir / "full.jsonl");
  const auto full = testing::read_file(dir / "full.jsonl");

  // Simulate a crash: five committed lines, a sixth half written, and a
  // checkpoint that only knows the first four.
  std::vector<std::string> lines;
  for (std::size_t pos = 0; pos < full.size();) {
    auto nl = full.find('\n', pos);
    lines.push_back(full.substr(pos, nl - pos + 1));
    pos = nl + 1;
  }
  ASSERT_EQ(lines.size(), 12u);
  std::string torn;
  for (int i = 0; i < 5; ++i) torn += lines[i];
  torn += lines[5].substr(0, lines[5].size() / 2);
  const auto out = dir / "torn.jsonl";
  testing::write_file(out, torn);
  std::string ck;
  for (int i = 0; i < 4; ++i) ck += "done\t" + json::parse(lines[i])["id"].get<std::string>() + "\n";
  ck += "done\ts0";  // torn checkpoint line
  testing::write_file(checkpoint_path(out), ck);

  const auto report = run_to(out, true);
  EXPECT_EQ(report.resumed, 4u);
  EXPECT_EQ(report.completed, 12u);
  EXPECT_EQ(testing::read_file(out), full);
}

TEST_F(RunTest, ResumeOfCompleteRunIsNoOp) {
  const auto out = dir / "o.jsonl";
  run_to(out);
  const auto before = testing::read_file(out);
  const auto report = run_to(out, true);
  EXPECT_EQ(report.resumed, 12u);
  EXPECT_EQ(testing::read_file(out), before);
}

TEST_F(RunTest, FailedRecordsRetriedInSeedOrder) {
  run_to(dir / "full.jsonl");
  const auto full = testing::read_file(dir / "full.jsonl");
  // Drop record s03 as if it had failed.
  auto recs = read_records(dir / "full.jsonl");
  std::string ck;
  std::vector<EnhancedRecord> kept;
  for (const auto& r : recs) {
    if (r.id == "s03") {
      ck += "failed\ts03\n";
      continue;
    }
    kept.push_back(r);
    ck += "done\t" + r.id + "\n";
  }
  const auto out = dir / "partial.jsonl";
  write_records(out, kept);
  testing::write_file(checkpoint_path(out), ck);
  const auto report = run_to(out, true);
  EXPECT_EQ(report.resumed, 11u);
  EXPECT_EQ(report.completed, 12u);
  EXPECT_EQ(testing::read_file(out), full);
}

TEST_F(RunTest, RecordFailureIsReportedNotFatal) {
  RunOptions o;
  o.input = seeds;
  o.output = dir / "o.jsonl";
  auto ctx = sim_context();
  auto judge = std::make_shared<ScriptedProvider>("bad-judge");
  judge->set_default(PromptKind::judge, "Perhaps");
  ctx.roster.judge = judge;
  const auto report = run(o, ctx);
  EXPECT_EQ(report.failed, 12u);
  EXPECT_EQ(report.completed, 0u);
  EXPECT_EQ(report.failures.size(), 12u);
}

TEST(Run, DuplicateSeedIdsRejected) {
  testing::TempDir dir;
  auto seeds = testing::synthetic_seeds(3, 1);
  seeds[2].id = seeds[0].id;
  testing::write_seeds(dir / "s.jsonl", seeds);
  RunOptions o;
  o.input = dir / "s.jsonl";
  o.output = dir / "o.jsonl";
  EXPECT_THROW(run(o, sim_context()), ParseError);
}

std::vector<EnhancedRecord> dataset(std::size_t n) {
  std::vector<EnhancedRecord> out;
  const auto ctx = sim_context();
  for (const auto& s : testing::synthetic_seeds(n, 99)) out.push_back(process_record(s, ctx));
  return out;
}

TEST(Benchmark, NestedPrefixesAndSampling) {
  const auto data = dataset(12);
  std::size_t qualifying = 0;
  for (const auto& r : data) qualifying += r.constraints.size() >= 15;
  ASSERT_GE(qualifying, 6u);

  BenchOptions opts;
  opts.sample_size = 6;
  opts.rng_seed = 3;
  const auto res = build_benchmark(data, opts, sim_roster());
  ASSERT_EQ(res.levels.size(), 4u);
  EXPECT_TRUE(res.failures.empty());
  EXPECT_EQ(res.sampled_ids.size(), 6u);
  for (std::size_t i = 0; i < res.levels[0].size(); ++i) {
    const auto& src = *std::find_if(data.begin(), data.end(),
                                    [&](const EnhancedRecord& r) { return r.id == res.levels[0][i].id; });
    EXPECT_EQ(res.levels[0][i].constraints.size(), 5u);
    EXPECT_EQ(res.levels[1][i].constraints.size(), 10u);
    EXPECT_EQ(res.levels[2][i].constraints.size(), 15u);
    EXPECT_EQ(res.levels[3][i].constraints.size(), src.constraints.size());
    for (std::size_t lv = 0; lv + 1 < 4; ++lv) {
      const auto& small = res.levels[lv][i].constraints;
      const auto& big = res.levels[lv + 1][i].constraints;
      EXPECT_TRUE(std::equal(small.begin(), small.end(), big.begin()));
      EXPECT_EQ(res.levels[lv][i].level, static_cast<int>(lv + 1));
    }
    EXPECT_EQ(res.levels[0][i].enhanced_response, src.enhanced_response);
  }

  const auto again = build_benchmark(data, opts, sim_roster());
  EXPECT_EQ(again.sampled_ids, res.sampled_ids);
  opts.rng_seed = 4;
  const auto other = build_benchmark(data, opts, sim_roster());
  EXPECT_EQ(other.sampled_ids.size(), 6u);
}

TEST(Benchmark, ShortfallNamed) {
  const auto data = dataset(3);
  BenchOptions opts;
  opts.sample_size = 10;
  try {
    build_benchmark(data, opts, sim_roster());
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("short by"), std::string::npos);
  }
}

TEST(Benchmark, OptionsValidated) {
  BenchOptions o;
  o.level_sizes = {5, 5, 15};
  EXPECT_THROW(o.validate(), ConfigError);
  o.level_sizes = {5, 10, 20};
  EXPECT_THROW(o.validate(), ConfigError);
  o.level_sizes = {5, 10, 15};
  o.sample_size = 0;
  EXPECT_THROW(o.validate(), ConfigError);
}

}  // namespace
}  // namespace recast::pipeline
