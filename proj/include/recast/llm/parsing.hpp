#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "recast/constraint.hpp"

namespace recast::llm {

struct Ranking {
  std::vector<char> order;  // uppercase labels, best first

  // Zero-based candidate index per position.
  std::vector<std::size_t> indices() const;

  friend bool operator==(const Ranking&, const Ranking&) = default;
};

// Accepts "C > A > D > B" (any case and spacing) or a comma-separated list,
// optionally wrapped in brackets or quotes. The labels must be a permutation
// of the first n letters. Throws RankingParseError otherwise, and
// InvalidArgument when n is outside [2, 26].
Ranking parse_ranking(std::string_view reply, std::size_t n_candidates);

// First JSON object in a reply, tolerating code fences and surrounding prose.
std::optional<nlohmann::json> extract_json_object(std::string_view reply);

using GeneratedConstraints = std::map<ConstraintKind, std::vector<std::string>>;

// Decodes the {category: [constraint, ...]} dictionary. Keys are normalized
// (case, spaces and hyphens). Unknown and rule categories are dropped with a
// warning. Throws GenerationParseError when no dictionary can be decoded.
GeneratedConstraints parse_generated_constraints(std::string_view reply);

struct JudgeReply {
  bool satisfied = false;
  std::string analysis;
};

// Decodes {"analysis": ..., "answer": "Yes"|"No"}. Throws JudgeProtocolError
// on anything else.
JudgeReply parse_judge_reply(std::string_view reply);

}  // namespace recast::llm
