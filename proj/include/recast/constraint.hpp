#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace recast {

enum class Category { rule, model };

// The 19 constraint types: 9 rule-verifiable, 10 judge-verifiable.
enum class ConstraintKind {
  // rule
  length_words,
  length_sentences,
  format,
  keyword,
  start_with,
  end_with,
  all_upper,
  all_lower,
  no_commas,
  // model
  tone,
  emotion,
  style,
  factuality,
  helpfulness,
  example,
  background_info,
  role_playing,
  topic,
  situation,
};

inline constexpr std::array<ConstraintKind, 9> kRuleKinds = {
    ConstraintKind::length_words, ConstraintKind::length_sentences, ConstraintKind::format,
    ConstraintKind::keyword,      ConstraintKind::start_with,       ConstraintKind::end_with,
    ConstraintKind::all_upper,    ConstraintKind::all_lower,        ConstraintKind::no_commas,
};

inline constexpr std::array<ConstraintKind, 10> kModelKinds = {
    ConstraintKind::tone,        ConstraintKind::emotion,         ConstraintKind::style,
    ConstraintKind::factuality,  ConstraintKind::helpfulness,     ConstraintKind::example,
    ConstraintKind::background_info, ConstraintKind::role_playing, ConstraintKind::topic,
    ConstraintKind::situation,
};

Category category_of(ConstraintKind kind);
std::string_view to_string(Category category);
std::string_view to_string(ConstraintKind kind);
std::optional<ConstraintKind> kind_from_string(std::string_view name);
std::optional<Category> category_from_string(std::string_view name);

// One-line definition of a model-based type, used when prompting for
// constraint generation.
std::string_view describe(ConstraintKind kind);

enum class Origin { extracted, generated };
std::string_view to_string(Origin origin);

// Length variants; every other rule type uses "default".
namespace variant {
inline constexpr std::string_view kDefault = "default";
inline constexpr std::string_view kApproximate = "approximate";
inline constexpr std::string_view kBelow = "below";
inline constexpr std::string_view kRange = "range";
inline constexpr std::string_view kExact = "exact";
}  // namespace variant

using ParamValue = std::variant<std::int64_t, std::string>;
using Params = std::map<std::string, ParamValue, std::less<>>;

struct Constraint {
  std::string id;
  ConstraintKind kind = ConstraintKind::tone;
  std::string rule_variant;  // empty for model constraints
  Params params;
  std::string text;
  Origin origin = Origin::generated;

  Category category() const { return category_of(kind); }
  bool is_rule() const { return category() == Category::rule; }

  std::int64_t int_param(std::string_view key) const;
  const std::string& string_param(std::string_view key) const;

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

// Content-addressed id over category, type, variant, params and text.
std::string content_id(const Constraint& c);

// Builds a constraint and assigns its content id.
Constraint make_constraint(ConstraintKind kind, std::string rule_variant, Params params, std::string text,
                           Origin origin);

nlohmann::json to_json(const Constraint& c);

// Validates against the published constraint schema. `id` and `origin` may
// be omitted (computed / defaulted by category). Throws ParseError naming
// the offending field.
Constraint parse_constraint(const nlohmann::json& record, long line = 0);

}  // namespace recast
