#include "recast/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <future>
#include <mutex>
#include <set>
#include <thread>
#include <variant>

#include <spdlog/spdlog.h>

#include "recast/errors.hpp"
#include "recast/llm/prompts.hpp"
#include "recast/text_metrics.hpp"
#include "recast/util/hash.hpp"
#include "recast/util/rng.hpp"
#include "recast/verify.hpp"

namespace recast::pipeline {
namespace {

std::string error_text(const std::string& provider, const std::exception& e) { return provider + ": " + e.what(); }

// Reply text or the failure message.
using Attempt = std::variant<std::string, std::string>;

llm::ChatRequest request_for(llm::PromptKind kind, llm::Messages messages) {
  llm::ChatRequest r;
  r.kind = kind;
  r.messages = std::move(messages);
  return r;
}

VoteOutcome run_vote(const llm::ChatRequest& candidate_request, std::span<const ProviderPtr> producers,
                     llm::PromptKind rank_kind, llm::Slots rank_slots, std::span<const ProviderPtr> voters) {
  std::vector<std::future<Attempt>> drafts;
  drafts.reserve(producers.size());
  for (const auto& p : producers) {
    drafts.push_back(std::async(std::launch::async, [&candidate_request, p]() -> Attempt {
      try {
        auto text = p->complete(candidate_request);
        if (text::trim(text).empty()) return Attempt(std::in_place_index<1>, p->name() + ": empty reply");
        return Attempt(std::in_place_index<0>, std::move(text));
      } catch (const std::exception& e) {
        return Attempt(std::in_place_index<1>, error_text(p->name(), e));
      }
    }));
  }

  VoteOutcome out;
  std::vector<std::string> candidates;
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    auto a = drafts[i].get();
    if (a.index() == 0) {
      candidates.push_back(std::move(std::get<0>(a)));
      out.vote.candidate_providers.push_back(producers[i]->name());
    } else {
      out.vote.dropped.push_back(std::move(std::get<1>(a)));
    }
  }
  if (candidates.size() < 2) {
    throw Error("only " + std::to_string(candidates.size()) + " candidate(s) produced; at least 2 are required");
  }
  if (candidates.size() > 26) throw Error("more than 26 candidates");

  for (auto& [label, text] : llm::candidate_slots(candidates)) rank_slots[label] = text;
  const auto rank_request = request_for(rank_kind, llm::build_prompt(rank_kind, rank_slots));
  const auto n = candidates.size();

  using Ballot = std::variant<llm::Ranking, std::string>;
  std::vector<std::future<Ballot>> ballots;
  for (const auto& v : voters) {
    ballots.push_back(std::async(std::launch::async, [&rank_request, v, n]() -> Ballot {
      std::string last;
      for (int attempt = 0; attempt < 2; ++attempt) {
        try {
          return llm::parse_ranking(v->complete(rank_request), n);
        } catch (const RankingParseError& e) {
          last = error_text(v->name(), e);
        } catch (const std::exception& e) {
          return error_text(v->name(), e);
        }
      }
      return last;
    }));
  }
  std::vector<llm::Ranking> rankings;
  for (std::size_t i = 0; i < ballots.size(); ++i) {
    auto b = ballots[i].get();
    if (auto* r = std::get_if<llm::Ranking>(&b)) {
      out.vote.voters.push_back(voters[i]->name());
      out.vote.ballots.push_back(std::string(r->order.begin(), r->order.end()));
      rankings.push_back(std::move(*r));
    } else {
      out.vote.dropped.push_back(std::move(std::get<std::string>(b)));
    }
  }
  if (rankings.empty()) throw Error("no valid ballots");

  // Ballots are stored in the canonical "A > B" form.
  for (auto& b : out.vote.ballots) {
    std::string s;
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (i > 0) s += " > ";
      s += b[i];
    }
    b = std::move(s);
  }

  auto result = borda_select(rankings);
  out.vote.tally = std::move(result.tally);
  out.vote.winner = result.winner;
  out.text = std::move(candidates[result.winner]);
  return out;
}

void count_constraints(const EnhancedRecord& r, RunReport& report) {
  for (const auto& c : r.constraints) {
    ++report.per_category[std::string(to_string(c.category()))];
    ++report.per_type[std::string(to_string(c.kind))];
  }
}

}  // namespace

void Roster::require_generation() const {
  if (generators.empty()) throw ConfigError("no provider has role 'generator'");
  if (!judge) throw ConfigError("no provider has role 'judge'");
}

void Roster::require_enhancement() const {
  if (rewriters.size() < 2) throw ConfigError("role 'rewriter' needs at least 2 providers");
  if (voters.empty()) throw ConfigError("no provider has role 'voter'");
}

void Roster::require_synthesis() const {
  if (generators.size() < 2) throw ConfigError("role 'generator' needs at least 2 providers");
  if (voters.empty()) throw ConfigError("no provider has role 'voter'");
}

BordaResult borda_select(std::span<const llm::Ranking> rankings) {
  if (rankings.empty()) throw InvalidArgument("borda_select: no rankings");
  const auto n = rankings.front().order.size();
  if (n == 0) throw InvalidArgument("borda_select: empty ranking");
  BordaResult out;
  out.tally.assign(n, 0);
  for (const auto& r : rankings) {
    if (r.order.size() != n) throw InvalidArgument("borda_select: rankings cover different label sets");
    std::vector<bool> seen(n, false);
    for (std::size_t pos = 0; pos < n; ++pos) {
      const auto idx = static_cast<std::size_t>(r.order[pos] - 'A');
      if (idx >= n || seen[idx]) throw InvalidArgument("borda_select: ranking is not a permutation");
      seen[idx] = true;
      out.tally[idx] += static_cast<int>(n - 1 - pos);
    }
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (out.tally[i] > out.tally[out.winner]) out.winner = i;
  }
  return out;
}

PoolResult build_pool(const SeedRecord& seed, const extract::ExtractionConfig& extraction,
                      const TemplateRegistry& registry, llm::ChatProvider& generator, llm::ChatProvider& judge) {
  PoolResult out;
  out.constraints = extract::extract_rule_constraints(seed.response, extraction, registry);

  const auto gen_request =
      request_for(llm::PromptKind::constraint_gen,
                  llm::build_prompt(llm::PromptKind::constraint_gen,
                                    {{"response", seed.response}, {"categories", llm::category_list(kModelKinds)}}));
  llm::GeneratedConstraints generated;
  for (int attempt = 0;; ++attempt) {
    try {
      generated = llm::parse_generated_constraints(generator.complete(gen_request));
      break;
    } catch (const GenerationParseError&) {
      if (attempt >= 1) throw;
    }
  }

  std::set<std::string> ids;
  for (const auto& c : out.constraints) ids.insert(c.id);
  for (const auto& [kind, texts] : generated) {
    for (const auto& t : texts) {
      auto c = make_constraint(kind, "", {}, t, Origin::generated);
      if (!ids.insert(c.id).second) continue;
      auto v = verify::verify_model(c, seed.instruction, seed.response, judge);
      if (v.satisfied) {
        out.constraints.push_back(std::move(c));
        out.filter_verdicts.push_back(std::move(v));
      } else {
        ++out.rejected;
      }
    }
  }
  return out;
}

VoteOutcome enhance_instruction(std::string_view instruction, std::span<const Constraint> pool,
                                std::span<const ProviderPtr> rewriters, std::span<const ProviderPtr> voters) {
  if (pool.empty()) throw InvalidArgument("enhance_instruction: constraint pool is empty");
  const auto request =
      request_for(llm::PromptKind::add_constraints,
                  llm::build_prompt(llm::PromptKind::add_constraints,
                                    {{"instruction", std::string(instruction)},
                                     {"constraints", llm::constraint_dictionary(pool)}}));
  return run_vote(request, rewriters, llm::PromptKind::rank_instructions, {}, voters);
}

VoteOutcome synthesize_response(std::string_view instruction, std::span<const ProviderPtr> generators,
                                std::span<const ProviderPtr> voters) {
  const auto request = request_for(llm::PromptKind::respond, llm::response_request(instruction));
  return run_vote(request, generators, llm::PromptKind::rank_responses, {{"instruction", std::string(instruction)}},
                  voters);
}

std::uint64_t order_seed(std::uint64_t seed, std::string_view record_id) {
  return util::derive_seed(util::derive_seed(seed, record_id), "constraint-order");
}

std::vector<Constraint> seeded_order(std::vector<Constraint> constraints, std::uint64_t seed) {
  util::Rng rng(seed);
  rng.shuffle(constraints);
  return constraints;
}

EnhancedRecord process_record(const SeedRecord& seed, const RecordContext& ctx) {
  ctx.roster.require_generation();
  ctx.roster.require_enhancement();
  ctx.roster.require_synthesis();

  EnhancedRecord r;
  r.id = seed.id;
  r.original = seed;
  r.provenance.rng_seed = util::derive_seed(ctx.global_seed, seed.id);
  r.provenance.generator = ctx.roster.generators.front()->name();
  r.provenance.judge = ctx.roster.judge->name();

  auto extraction = ctx.extraction;
  extraction.rng_seed = r.provenance.rng_seed;
  auto pool = build_pool(seed, extraction, *ctx.registry, *ctx.roster.generators.front(), *ctx.roster.judge);
  r.constraints = std::move(pool.constraints);
  r.provenance.rejected_constraints = pool.rejected;

  if (ctx.variant_cap && r.constraints.size() > *ctx.variant_cap) {
    r.constraints = seeded_order(std::move(r.constraints), order_seed(ctx.global_seed, seed.id));
    r.constraints.resize(*ctx.variant_cap);
  }
  for (auto& v : pool.filter_verdicts) {
    const bool kept = std::any_of(r.constraints.begin(), r.constraints.end(),
                                  [&](const Constraint& c) { return c.id == v.constraint_id; });
    if (kept) r.provenance.filter_verdicts.push_back(std::move(v));
  }

  auto instr = enhance_instruction(seed.instruction, r.constraints, ctx.roster.rewriters, ctx.roster.voters);
  r.enhanced_instruction = std::move(instr.text);
  r.provenance.instruction_vote = std::move(instr.vote);

  auto resp = synthesize_response(r.enhanced_instruction, ctx.roster.generators, ctx.roster.voters);
  r.enhanced_response = std::move(resp.text);
  r.provenance.response_vote = std::move(resp.vote);
  return r;
}

nlohmann::json to_json(const RunReport& r) {
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& [id, err] : r.failures) failures.push_back({{"id", id}, {"error", err}});
  return {{"total", r.total},
          {"completed", r.completed},
          {"failed", r.failed},
          {"resumed", r.resumed},
          {"failures", std::move(failures)},
          {"constraints_per_category", r.per_category},
          {"constraints_per_type", r.per_type}};
}

std::filesystem::path checkpoint_path(const std::filesystem::path& output) {
  auto p = output;
  p += ".ckpt";
  return p;
}

std::filesystem::path report_path(const std::filesystem::path& output) {
  auto p = output;
  p += ".report.json";
  return p;
}

namespace {

// Keeps the longest prefix of complete output lines that the checkpoint
// marks done and cuts the file there. Returns the surviving records.
std::vector<EnhancedRecord> recover(const std::filesystem::path& output, const std::filesystem::path& ckpt) {
  std::set<std::string> done;
  if (std::ifstream in(ckpt, std::ios::binary); in) {
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    while (true) {
      auto nl = content.find('\n', pos);
      if (nl == std::string::npos) break;  // torn tail
      std::string_view line(content.data() + pos, nl - pos);
      auto tab = line.find('\t');
      if (tab != std::string_view::npos) {
        const std::string status(line.substr(0, tab));
        const std::string id(line.substr(tab + 1));
        if (status == "done") {
          done.insert(id);
        } else {
          done.erase(id);
        }
      }
      pos = nl + 1;
    }
  }

  std::vector<EnhancedRecord> kept;
  std::uintmax_t keep_bytes = 0;
  if (std::ifstream in(output, std::ios::binary); in) {
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::set<std::string> seen;
    std::size_t pos = 0;
    long line_no = 0;
    while (true) {
      auto nl = content.find('\n', pos);
      if (nl == std::string::npos) break;
      ++line_no;
      auto j = nlohmann::json::parse(content.begin() + static_cast<std::ptrdiff_t>(pos),
                                     content.begin() + static_cast<std::ptrdiff_t>(nl), nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j["id"].is_string()) break;
      const auto id = j["id"].get<std::string>();
      if (!done.count(id) || !seen.insert(id).second) break;
      kept.push_back(parse_record(j, line_no));
      pos = nl + 1;
      keep_bytes = pos;
    }
    in.close();
    std::filesystem::resize_file(output, keep_bytes);
  }

  std::ofstream ck(ckpt, std::ios::binary | std::ios::trunc);
  if (!ck) throw Error("cannot write " + ckpt.string());
  for (const auto& r : kept) ck << "done\t" << r.id << '\n';
  return kept;
}

}  // namespace

RunReport run(const RunOptions& opts, const RecordContext& ctx) {
  if (opts.width < 1) throw ConfigError("pipeline width must be >= 1");
  ctx.roster.require_generation();
  ctx.roster.require_enhancement();
  ctx.roster.require_synthesis();
  const auto seeds = read_seeds(opts.input);
  const auto ckpt = checkpoint_path(opts.output);

  RunReport report;
  report.total = seeds.size();
  std::set<std::string> done;
  if (opts.resume && std::filesystem::exists(opts.output)) {
    for (const auto& r : recover(opts.output, ckpt)) {
      done.insert(r.id);
      count_constraints(r, report);
    }
    report.resumed = done.size();
    report.completed = done.size();
  } else {
    std::ofstream(opts.output, std::ios::binary | std::ios::trunc);
    std::ofstream(ckpt, std::ios::binary | std::ios::trunc);
  }

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (!done.count(seeds[i].id)) todo.push_back(i);
  }

  std::ofstream out(opts.output, std::ios::binary | std::ios::app);
  std::ofstream ck(ckpt, std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot write " + opts.output.string());
  if (!ck) throw Error("cannot write " + ckpt.string());

  using Outcome = std::variant<EnhancedRecord, std::string>;
  std::vector<std::optional<Outcome>> results(todo.size());
  std::mutex mu;
  std::condition_variable ready;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};

  auto worker = [&] {
    while (!stop) {
      const auto k = next.fetch_add(1);
      if (k >= todo.size()) return;
      const auto& seed = seeds[todo[k]];
      Outcome outcome;
      try {
        outcome = process_record(seed, ctx);
      } catch (const std::exception& e) {
        outcome = std::string(e.what());
      }
      {
        std::lock_guard lock(mu);
        results[k] = std::move(outcome);
      }
      ready.notify_all();
    }
  };

  std::vector<std::thread> threads;
  const auto width = std::min(opts.width, std::max<std::size_t>(todo.size(), 1));
  for (std::size_t t = 0; t < width; ++t) threads.emplace_back(worker);

  std::size_t commits = 0;
  try {
    for (std::size_t k = 0; k < todo.size(); ++k) {
      Outcome outcome;
      {
        std::unique_lock lock(mu);
        ready.wait(lock, [&] { return results[k].has_value(); });
        outcome = std::move(*results[k]);
        results[k].reset();
      }
      const auto& id = seeds[todo[k]].id;
      if (auto* rec = std::get_if<EnhancedRecord>(&outcome)) {
        out << to_json(*rec).dump() << '\n';
        out.flush();
        if (!out) throw Error("write failed for " + opts.output.string());
        ck << "done\t" << id << '\n';
        ++report.completed;
        count_constraints(*rec, report);
      } else {
        const auto& err = std::get<std::string>(outcome);
        spdlog::warn("record {} failed: {}", id, err);
        ck << "failed\t" << id << '\n';
        ++report.failed;
        report.failures.emplace_back(id, err);
      }
      ck.flush();
      if (!ck) throw Error("write failed for " + ckpt.string());
      ++commits;
      if (opts.stop_after && commits >= *opts.stop_after) std::_Exit(3);
    }
  } catch (...) {
    stop = true;
    for (auto& t : threads) t.join();
    throw;
  }
  for (auto& t : threads) t.join();

  // A resumed run appends retried failures after later records; put the
  // file back into seed order.
  if (report.resumed > 0 && !todo.empty()) {
    out.close();
    std::map<std::string, std::size_t> rank;
    for (std::size_t i = 0; i < seeds.size(); ++i) rank[seeds[i].id] = i;
    auto records = read_records(opts.output);
    const auto by_seed = [&](const EnhancedRecord& a, const EnhancedRecord& b) { return rank[a.id] < rank[b.id]; };
    if (!std::is_sorted(records.begin(), records.end(), by_seed)) {
      std::stable_sort(records.begin(), records.end(), by_seed);
      write_records(opts.output, records);
    }
  }

  std::ofstream rep(report_path(opts.output), std::ios::binary | std::ios::trunc);
  rep << to_json(report).dump(2) << '\n';
  return report;
}

void BenchOptions::validate() const {
  if (level_sizes.empty()) throw ConfigError("benchmark.level_sizes must not be empty");
  for (std::size_t i = 0; i < level_sizes.size(); ++i) {
    if (level_sizes[i] == 0) throw ConfigError("benchmark.level_sizes must be positive");
    if (i > 0 && level_sizes[i] <= level_sizes[i - 1]) {
      throw ConfigError("benchmark.level_sizes must be strictly increasing");
    }
  }
  if (level_sizes.back() > min_constraints) {
    throw ConfigError("benchmark.level_sizes may not exceed min_constraints");
  }
  if (sample_size == 0) throw ConfigError("benchmark.sample_size must be >= 1");
  if (width < 1) throw ConfigError("pipeline width must be >= 1");
}

BenchResult build_benchmark(const std::vector<EnhancedRecord>& dataset, const BenchOptions& opts,
                            const Roster& roster) {
  opts.validate();
  roster.require_enhancement();

  std::vector<std::size_t> qualifying;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset[i].constraints.size() >= opts.min_constraints) qualifying.push_back(i);
  }
  if (qualifying.size() < opts.sample_size) {
    throw Error("benchmark needs " + std::to_string(opts.sample_size) + " records with at least " +
                std::to_string(opts.min_constraints) + " constraints but only " + std::to_string(qualifying.size()) +
                " qualify (short by " + std::to_string(opts.sample_size - qualifying.size()) + ")");
  }
  util::Rng rng(opts.rng_seed);
  rng.shuffle(qualifying);
  qualifying.resize(opts.sample_size);
  std::sort(qualifying.begin(), qualifying.end());

  const auto n_levels = opts.level_sizes.size() + 1;
  using Outcome = std::variant<std::vector<EnhancedRecord>, std::string>;
  std::vector<Outcome> outcomes(qualifying.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const auto k = next.fetch_add(1);
      if (k >= qualifying.size()) return;
      const auto& src = dataset[qualifying[k]];
      try {
        const auto order = seeded_order(src.constraints, order_seed(opts.rng_seed, src.id));
        std::vector<EnhancedRecord> levels;
        for (std::size_t lv = 0; lv < n_levels; ++lv) {
          const auto size = lv < opts.level_sizes.size() ? opts.level_sizes[lv] : order.size();
          EnhancedRecord r = src;
          r.constraints.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(size));
          auto vote = enhance_instruction(src.original.instruction, r.constraints, roster.rewriters, roster.voters);
          r.enhanced_instruction = std::move(vote.text);
          r.provenance.instruction_vote = std::move(vote.vote);
          r.level = static_cast<int>(lv + 1);
          levels.push_back(std::move(r));
        }
        outcomes[k] = std::move(levels);
      } catch (const std::exception& e) {
        outcomes[k] = std::string(e.what());
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < std::min(opts.width, std::max<std::size_t>(qualifying.size(), 1)); ++t) {
    threads.emplace_back(worker);
  }
  for (auto& t : threads) t.join();

  BenchResult result;
  result.levels.resize(n_levels);
  for (std::size_t k = 0; k < qualifying.size(); ++k) {
    const auto& id = dataset[qualifying[k]].id;
    result.sampled_ids.push_back(id);
    if (auto* levels = std::get_if<0>(&outcomes[k])) {
      for (std::size_t lv = 0; lv < n_levels; ++lv) result.levels[lv].push_back(std::move((*levels)[lv]));
    } else {
      spdlog::warn("benchmark record {} failed: {}", id, std::get<1>(outcomes[k]));
      result.failures.emplace_back(id, std::get<1>(outcomes[k]));
    }
  }
  return result;
}

void write_benchmark(const std::filesystem::path& dir, const BenchResult& result) {
  std::filesystem::create_directories(dir);
  for (std::size_t lv = 0; lv < result.levels.size(); ++lv) {
    write_records(dir / ("level_" + std::to_string(lv + 1) + ".jsonl"), result.levels[lv]);
  }
}

}  // namespace recast::pipeline
