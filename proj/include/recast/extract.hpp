#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "recast/constraint.hpp"
#include "recast/templates.hpp"

namespace recast::extract {

enum class LengthLevel { words, sentences };

struct ExtractionConfig {
  std::size_t max_keywords = 2;
  std::set<std::string, std::less<>> stopwords = default_stopwords();
  std::uint64_t rng_seed = 0;
  std::set<ConstraintKind> enabled_extractors = {kRuleKinds.begin(), kRuleKinds.end()};

  static std::set<std::string, std::less<>> default_stopwords();

  // Throws InvalidArgument when an enabled extractor is not a rule type.
  void validate() const;
};

// Length variants the extractors can emit for each level.
std::span<const std::string_view> length_variants(LengthLevel level);

// Every (type, variant) pair the extractors render; checked against the
// template registry at startup.
std::vector<TemplateKey> required_template_keys();

// Parameters for a length constraint that `count` is guaranteed to satisfy
// under the validator semantics. Throws InvalidArgument for count == 0 or a
// variant that does not exist at that level.
Params derive_length_params(std::size_t count, LengthLevel level, std::string_view rule_variant);

struct KeywordCandidate {
  std::string keyword;
  std::size_t count = 0;

  friend bool operator==(const KeywordCandidate&, const KeywordCandidate&) = default;
};

// Up to config.max_keywords tokens ranked by frequency x length, skipping
// stopwords and tokens shorter than four characters.
std::vector<KeywordCandidate> select_keywords(std::string_view response, const ExtractionConfig& config);

// Mines rule constraints the response already satisfies. Throws
// InvalidArgument for an empty response.
std::vector<Constraint> extract_rule_constraints(std::string_view response, const ExtractionConfig& config,
                                                 const TemplateRegistry& registry = TemplateRegistry::builtin());

}  // namespace recast::extract
