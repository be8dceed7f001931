#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "recast/constraint.hpp"
#include "recast/extract.hpp"
#include "recast/llm/parsing.hpp"
#include "recast/llm/provider.hpp"
#include "recast/records.hpp"
#include "recast/templates.hpp"

namespace recast::pipeline {

using ProviderPtr = std::shared_ptr<llm::ChatProvider>;

// Providers by role. The first generator also writes model constraints.
struct Roster {
  std::vector<ProviderPtr> generators;
  std::vector<ProviderPtr> rewriters;
  std::vector<ProviderPtr> voters;
  ProviderPtr judge;

  // Throws ConfigError naming the first role that is missing or short.
  void require_generation() const;  // generator + judge
  void require_enhancement() const;  // >= 2 rewriters, >= 1 voter
  void require_synthesis() const;    // >= 2 generators, >= 1 voter
};

struct BordaResult {
  std::size_t winner = 0;
  std::vector<int> tally;
};

// Position i of n earns n-1-i points; ties go to the earliest label. Throws
// InvalidArgument when there are no rankings or they disagree on n.
BordaResult borda_select(std::span<const llm::Ranking> rankings);

struct PoolResult {
  std::vector<Constraint> constraints;           // rule constraints, then kept model constraints
  std::vector<verify::Verdict> filter_verdicts;  // for the kept model constraints
  std::size_t rejected = 0;
};

// Extracted rule constraints plus generated model constraints that the judge
// accepts on the seed response. Generation replies get one retry.
PoolResult build_pool(const SeedRecord& seed, const extract::ExtractionConfig& extraction,
                      const TemplateRegistry& registry, llm::ChatProvider& generator, llm::ChatProvider& judge);

struct VoteOutcome {
  std::string text;
  VoteRecord vote;
};

// One candidate per rewriter, ranked by every voter. Failed rewriters and
// unparseable ballots (after one retry) are dropped. Throws InvalidArgument
// for an empty pool and Error when fewer than two candidates or no ballots
// remain.
VoteOutcome enhance_instruction(std::string_view instruction, std::span<const Constraint> pool,
                                std::span<const ProviderPtr> rewriters, std::span<const ProviderPtr> voters);

VoteOutcome synthesize_response(std::string_view instruction, std::span<const ProviderPtr> generators,
                                std::span<const ProviderPtr> voters);

// Seeded shuffle used both for the variant cap and for benchmark levels.
std::uint64_t order_seed(std::uint64_t seed, std::string_view record_id);
std::vector<Constraint> seeded_order(std::vector<Constraint> constraints, std::uint64_t seed);

struct RecordContext {
  Roster roster;
  extract::ExtractionConfig extraction;
  const TemplateRegistry* registry = &TemplateRegistry::builtin();
  std::uint64_t global_seed = 0;
  std::optional<std::size_t> variant_cap;
};

EnhancedRecord process_record(const SeedRecord& seed, const RecordContext& ctx);

struct RunOptions {
  std::filesystem::path input;
  std::filesystem::path output;
  std::size_t width = 4;
  bool resume = false;
  // Abandon the process right after this many commits. Test hook for
  // interrupted runs.
  std::optional<std::size_t> stop_after;
};

struct RunReport {
  std::size_t total = 0;
  std::size_t completed = 0;  // records present in the output, including resumed ones
  std::size_t failed = 0;
  std::size_t resumed = 0;
  std::vector<std::pair<std::string, std::string>> failures;
  std::map<std::string, std::size_t> per_category;
  std::map<std::string, std::size_t> per_type;
};

nlohmann::json to_json(const RunReport& r);

std::filesystem::path checkpoint_path(const std::filesystem::path& output);
std::filesystem::path report_path(const std::filesystem::path& output);

// Processes every seed and writes records in seed order. The checkpoint
// sidecar lists "done\t<id>" / "failed\t<id>" after each commit. On resume,
// output lines without a checkpoint entry are cut off and failed ids are
// tried again.
RunReport run(const RunOptions& opts, const RecordContext& ctx);

struct BenchOptions {
  std::size_t min_constraints = 15;
  std::size_t sample_size = 500;
  std::uint64_t rng_seed = 0;
  std::vector<std::size_t> level_sizes = {5, 10, 15};  // the last level takes all
  std::size_t width = 4;

  // Throws ConfigError unless sizes are positive, strictly increasing and
  // do not exceed min_constraints.
  void validate() const;
};

struct BenchResult {
  std::vector<std::string> sampled_ids;
  std::vector<std::vector<EnhancedRecord>> levels;
  std::vector<std::pair<std::string, std::string>> failures;
};

// Samples qualifying records, fixes a seeded constraint order per record and
// re-enhances the instruction for each prefix. Throws Error when too few
// records qualify.
BenchResult build_benchmark(const std::vector<EnhancedRecord>& dataset, const BenchOptions& opts,
                            const Roster& roster);

// Writes level_<k>.jsonl files into `dir`.
void write_benchmark(const std::filesystem::path& dir, const BenchResult& result);

}  // namespace recast::pipeline
