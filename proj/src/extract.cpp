#include "recast/extract.hpp"

#include <algorithm>
#include <array>
#include <map>

#include "recast/errors.hpp"
#include "recast/text_metrics.hpp"
#include "recast/util/rng.hpp"

namespace recast::extract {
namespace {

constexpr std::array<std::string_view, 3> kWordVariants = {variant::kApproximate, variant::kBelow, variant::kRange};
constexpr std::array<std::string_view, 4> kSentenceVariants = {variant::kExact, variant::kApproximate,
                                                               variant::kBelow, variant::kRange};

std::int64_t round_to_nearest(std::int64_t value, std::int64_t step) { return (value + step / 2) / step * step; }
std::int64_t round_up(std::int64_t value, std::int64_t step) { return (value + step - 1) / step * step; }

std::size_t utf8_length(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

bool has_alnum(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || u >= 0x80;
  });
}

std::vector<ParamValue> ordered(const Params& params, std::initializer_list<std::string_view> keys) {
  std::vector<ParamValue> out;
  for (auto k : keys) out.push_back(params.find(k)->second);
  return out;
}

std::vector<ParamValue> length_args(const Params& params, std::string_view v) {
  if (v == variant::kRange) return ordered(params, {"min", "max"});
  if (v == variant::kBelow) return ordered(params, {"max"});
  if (v == variant::kExact) return ordered(params, {"count"});
  return ordered(params, {"target"});
}

}  // namespace

std::set<std::string, std::less<>> ExtractionConfig::default_stopwords() {
  return {
      "a",       "about",   "above",   "after",   "again",   "against", "all",     "also",    "am",
      "an",      "and",     "any",     "are",     "as",      "at",      "be",      "because", "been",
      "before",  "being",   "below",   "between", "both",    "but",     "by",      "can",     "could",
      "did",     "do",      "does",    "doing",   "down",    "during",  "each",    "even",    "every",
      "few",     "for",     "from",    "further", "had",     "has",     "have",    "having",  "he",
      "her",     "here",    "hers",    "herself", "him",     "himself", "his",     "how",     "however",
      "i",       "if",      "in",      "into",    "is",      "it",      "its",     "itself",  "just",
      "like",    "made",    "make",    "many",    "may",     "me",      "might",   "more",    "most",
      "much",    "must",    "my",      "myself",  "never",   "no",      "nor",     "not",     "now",
      "of",      "off",     "often",   "on",      "once",    "only",    "or",      "other",   "others",
      "our",     "ours",    "ourselves", "out",   "over",    "own",     "same",    "shall",   "she",
      "should",  "since",   "so",      "some",    "still",   "such",    "than",    "that",    "the",
      "their",   "theirs",  "them",    "themselves", "then", "there",   "these",   "they",    "this",
      "those",   "through", "thus",    "to",      "too",     "under",   "until",   "up",      "upon",
      "us",      "very",    "was",     "we",      "well",    "were",    "what",    "when",    "where",
      "whether", "which",   "while",   "who",     "whom",    "whose",   "why",     "will",    "with",
      "within",  "without", "would",   "yet",     "you",     "your",    "yours",   "yourself", "yourselves",
  };
}

void ExtractionConfig::validate() const {
  for (auto kind : enabled_extractors) {
    if (category_of(kind) != Category::rule) {
      throw InvalidArgument("extractor '" + std::string(to_string(kind)) + "' is not a rule-based type");
    }
  }
}

std::span<const std::string_view> length_variants(LengthLevel level) {
  if (level == LengthLevel::words) return kWordVariants;
  return kSentenceVariants;
}

std::vector<TemplateKey> required_template_keys() {
  std::vector<TemplateKey> keys;
  for (auto v : kWordVariants) keys.emplace_back(ConstraintKind::length_words, std::string(v));
  for (auto v : kSentenceVariants) keys.emplace_back(ConstraintKind::length_sentences, std::string(v));
  for (auto kind : kRuleKinds) {
    if (kind != ConstraintKind::length_words && kind != ConstraintKind::length_sentences) {
      keys.emplace_back(kind, std::string(variant::kDefault));
    }
  }
  return keys;
}

Params derive_length_params(std::size_t count, LengthLevel level, std::string_view v) {
  if (count == 0) throw InvalidArgument("derive_length_params: count must be positive");
  const auto n = static_cast<std::int64_t>(count);

  if (level == LengthLevel::words) {
    if (v == variant::kApproximate) {
      std::int64_t target = round_to_nearest(n, 10);
      // |n - t| <= 0.2 t, kept in integers.
      if (target == 0 || 5 * std::abs(n - target) > target) target = n;
      return {{"target", target}};
    }
    // Strictly above the count so "fewer than" wordings hold too.
    if (v == variant::kBelow) return {{"max", round_up(n + 1, 50)}};
    if (v == variant::kRange) {
      const std::int64_t lo = std::max<std::int64_t>(1, (8 * n / 10) / 10 * 10);
      const std::int64_t hi = round_up((12 * n + 9) / 10, 10);
      return {{"min", lo}, {"max", hi}};
    }
  } else {
    if (v == variant::kExact) return {{"count", n}};
    if (v == variant::kApproximate) return {{"target", n}};
    if (v == variant::kBelow) return {{"max", round_up(n + 1, 5)}};
    if (v == variant::kRange) return {{"min", std::max<std::int64_t>(1, n - 2)}, {"max", n + 2}};
  }
  throw InvalidArgument("derive_length_params: unknown variant '" + std::string(v) + "'");
}

std::vector<KeywordCandidate> select_keywords(std::string_view response, const ExtractionConfig& config) {
  if (config.max_keywords == 0) return {};

  struct Stat {
    std::string surface;
    std::size_t first_seen = 0;
    std::size_t frequency = 0;
  };
  std::map<std::string, Stat, std::less<>> stats;
  std::size_t position = 0;
  for (auto raw : text::split_words(response)) {
    auto token = text::strip_punctuation(raw);
    ++position;
    if (token.empty() || !has_alnum(token) || utf8_length(token) < 4) continue;
    auto key = text::ascii_lower(token);
    if (config.stopwords.contains(key)) continue;
    auto [it, inserted] = stats.try_emplace(key, Stat{std::string(token), position, 0});
    ++it->second.frequency;
  }

  std::vector<const Stat*> ranked;
  ranked.reserve(stats.size());
  for (const auto& [_, s] : stats) ranked.push_back(&s);
  std::sort(ranked.begin(), ranked.end(), [](const Stat* a, const Stat* b) {
    const auto sa = a->frequency * utf8_length(a->surface);
    const auto sb = b->frequency * utf8_length(b->surface);
    if (sa != sb) return sa > sb;
    return a->first_seen < b->first_seen;
  });

  std::vector<KeywordCandidate> out;
  for (const Stat* s : ranked) {
    if (out.size() >= config.max_keywords) break;
    out.push_back({s->surface, text::count_keyword(response, s->surface)});
  }
  return out;
}

std::vector<Constraint> extract_rule_constraints(std::string_view response, const ExtractionConfig& config,
                                                 const TemplateRegistry& registry) {
  if (text::trim(response).empty()) throw InvalidArgument("extract_rule_constraints: response is empty");
  config.validate();

  const auto profile = text::analyze(response);
  util::Rng rng(config.rng_seed);
  std::vector<Constraint> out;
  const auto enabled = [&](ConstraintKind k) { return config.enabled_extractors.contains(k); };

  const auto emit = [&](ConstraintKind kind, std::string_view v, Params params, const std::vector<ParamValue>& args) {
    auto text = registry.render(kind, v, args, rng);
    out.push_back(make_constraint(kind, std::string(v), std::move(params), std::move(text), Origin::extracted));
  };

  const auto emit_length = [&](ConstraintKind kind, LengthLevel level, std::size_t count) {
    auto variants = length_variants(level);
    const auto v = variants[rng.index(variants.size())];
    auto params = derive_length_params(count, level, v);
    auto args = length_args(params, v);
    emit(kind, v, std::move(params), args);
  };

  if (enabled(ConstraintKind::length_words) && profile.word_count > 0) {
    emit_length(ConstraintKind::length_words, LengthLevel::words, profile.word_count);
  }
  if (enabled(ConstraintKind::length_sentences) && profile.sentence_count > 0) {
    emit_length(ConstraintKind::length_sentences, LengthLevel::sentences, profile.sentence_count);
  }

  if (enabled(ConstraintKind::format) && !profile.detected_formats.empty()) {
    std::vector<text::FormatTag> tags(profile.detected_formats.begin(), profile.detected_formats.end());
    const auto tag = tags[rng.index(tags.size())];
    emit(ConstraintKind::format, variant::kDefault, {{"format", std::string(text::to_string(tag))}},
         {std::string(text::display_name(tag))});
  }

  if (enabled(ConstraintKind::keyword)) {
    for (const auto& kw : select_keywords(response, config)) {
      const auto count = static_cast<std::int64_t>(kw.count);
      emit(ConstraintKind::keyword, variant::kDefault, {{"keyword", kw.keyword}, {"count", count}},
           {kw.keyword, count});
    }
  }

  if (enabled(ConstraintKind::start_with) && profile.first_word && has_alnum(*profile.first_word)) {
    emit(ConstraintKind::start_with, variant::kDefault, {{"word", *profile.first_word}}, {*profile.first_word});
  }
  if (enabled(ConstraintKind::end_with) && profile.last_word && has_alnum(*profile.last_word)) {
    emit(ConstraintKind::end_with, variant::kDefault, {{"word", *profile.last_word}}, {*profile.last_word});
  }

  if (enabled(ConstraintKind::all_upper) && profile.case_class == text::CaseClass::all_upper) {
    emit(ConstraintKind::all_upper, variant::kDefault, {}, {});
  }
  if (enabled(ConstraintKind::all_lower) && profile.case_class == text::CaseClass::all_lower) {
    emit(ConstraintKind::all_lower, variant::kDefault, {}, {});
  }
  if (enabled(ConstraintKind::no_commas) && !profile.has_comma) {
    emit(ConstraintKind::no_commas, variant::kDefault, {}, {});
  }
  return out;
}

}  // namespace recast::extract
