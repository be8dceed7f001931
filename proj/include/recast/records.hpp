#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "recast/constraint.hpp"
#include "recast/verify.hpp"

namespace recast {

struct SeedRecord {
  std::string id;
  std::string instruction;
  std::string response;

  friend bool operator==(const SeedRecord&, const SeedRecord&) = default;
};

// One round of candidate generation plus Borda voting.
struct VoteRecord {
  std::vector<std::string> candidate_providers;  // label order
  std::vector<std::string> voters;               // voters whose ballot counted
  std::vector<std::string> ballots;              // "B > A > C", aligned with voters
  std::vector<std::string> dropped;              // providers that failed, as "name: error"
  std::vector<int> tally;                        // Borda points per candidate
  std::size_t winner = 0;

  friend bool operator==(const VoteRecord&, const VoteRecord&) = default;
};

struct Provenance {
  std::string generator;
  std::string judge;
  std::uint64_t rng_seed = 0;
  std::size_t rejected_constraints = 0;
  std::vector<verify::Verdict> filter_verdicts;  // judge verdicts for kept model constraints
  VoteRecord instruction_vote;
  VoteRecord response_vote;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct EnhancedRecord {
  std::string id;
  SeedRecord original;
  std::vector<Constraint> constraints;
  std::string enhanced_instruction;
  std::string enhanced_response;
  Provenance provenance;
  std::optional<int> level;  // set on benchmark records

  friend bool operator==(const EnhancedRecord&, const EnhancedRecord&) = default;
};

nlohmann::json to_json(const SeedRecord& s);
nlohmann::json to_json(const VoteRecord& v);
nlohmann::json to_json(const EnhancedRecord& r);

// Schema-checked decoders. Errors are ParseError naming the field and line.
SeedRecord parse_seed(const nlohmann::json& j, long line = 0);
VoteRecord parse_vote(const nlohmann::json& j, long line = 0);
EnhancedRecord parse_record(const nlohmann::json& j, long line = 0);
std::vector<Constraint> parse_constraint_list(const nlohmann::json& j, const char* field, long line);

// Calls `fn(json, line_no)` for each non-blank line. Malformed JSON raises
// ParseError with the line number; an unreadable file raises Error.
void read_jsonl(const std::filesystem::path& path, const std::function<void(const nlohmann::json&, long)>& fn);

// Seeds with unique ids and non-empty fields.
std::vector<SeedRecord> read_seeds(const std::filesystem::path& path);
std::vector<EnhancedRecord> read_records(const std::filesystem::path& path);
void write_records(const std::filesystem::path& path, const std::vector<EnhancedRecord>& records);

}  // namespace recast
