#include "recast/constraint.hpp"

#include "recast/errors.hpp"
#include "recast/text_metrics.hpp"
#include "recast/util/hash.hpp"

namespace recast {
namespace {

struct KindInfo {
  ConstraintKind kind;
  std::string_view name;
  std::string_view description;
};

constexpr std::array<KindInfo, 19> kKinds = {{
    {ConstraintKind::length_words, "length_words", "The response must have a given number of words."},
    {ConstraintKind::length_sentences, "length_sentences", "The response must have a given number of sentences."},
    {ConstraintKind::format, "format", "The response must follow a particular format."},
    {ConstraintKind::keyword, "keyword", "The response must include specific words or phrases."},
    {ConstraintKind::start_with, "start_with", "The response must begin with a specific word."},
    {ConstraintKind::end_with, "end_with", "The response must end with a specific word."},
    {ConstraintKind::all_upper, "all_upper", "The response must be written in capital letters only."},
    {ConstraintKind::all_lower, "all_lower", "The response must be written in lowercase letters only."},
    {ConstraintKind::no_commas, "no_commas", "The response must not contain commas."},
    {ConstraintKind::tone, "tone", "The response uses a specified tone."},
    {ConstraintKind::emotion, "emotion", "The response conveys a certain emotion."},
    {ConstraintKind::style, "style", "The response reflects a particular writing style."},
    {ConstraintKind::factuality, "factuality",
     "The response sticks to verifiable facts, or deliberately to imaginative content."},
    {ConstraintKind::helpfulness, "helpfulness", "The response provides useful, actionable information."},
    {ConstraintKind::example, "example", "The response contains explicit examples."},
    {ConstraintKind::background_info, "background_info",
     "The response draws on background knowledge from a specific field."},
    {ConstraintKind::role_playing, "role_playing", "The response is written from the perspective of a specific role."},
    {ConstraintKind::topic, "topic", "The response stays on a particular subject or theme."},
    {ConstraintKind::situation, "situation", "The response is framed within a specific scenario or setting."},
}};

const KindInfo& info(ConstraintKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k;
  }
  throw InvalidArgument("unknown constraint kind");
}

nlohmann::json params_to_json(const Params& params) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [key, value] : params) {
    std::visit([&](const auto& v) { out[key] = v; }, value);
  }
  return out;
}

// Parameters each (rule type, variant) needs for deterministic verification.
struct ParamSpec {
  std::string_view key;
  bool integer;
};
using Specs = std::vector<ParamSpec>;

std::optional<std::vector<ParamSpec>> required_params(ConstraintKind kind, std::string_view v) {
  using namespace variant;
  switch (kind) {
    case ConstraintKind::length_words:
      if (v == kApproximate) return Specs{{"target", true}};
      if (v == kBelow) return Specs{{"max", true}};
      if (v == kRange) return Specs{{"min", true}, {"max", true}};
      break;
    case ConstraintKind::length_sentences:
      if (v == kExact) return Specs{{"count", true}};
      if (v == kApproximate) return Specs{{"target", true}};
      if (v == kBelow) return Specs{{"max", true}};
      if (v == kRange) return Specs{{"min", true}, {"max", true}};
      break;
    case ConstraintKind::format:
      if (v == kDefault) return Specs{{"format", false}};
      break;
    case ConstraintKind::keyword:
      if (v == kDefault) return Specs{{"keyword", false}, {"count", true}};
      break;
    case ConstraintKind::start_with:
    case ConstraintKind::end_with:
      if (v == kDefault) return Specs{{"word", false}};
      break;
    case ConstraintKind::all_upper:
    case ConstraintKind::all_lower:
    case ConstraintKind::no_commas:
      if (v == kDefault) return Specs{};
      break;
    default:
      break;
  }
  return std::nullopt;
}

const nlohmann::json& require(const nlohmann::json& record, const char* field, long line) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) throw ParseError(field, "missing required field", line);
  return *it;
}

std::string require_string(const nlohmann::json& record, const char* field, long line) {
  const auto& v = require(record, field, line);
  if (!v.is_string()) throw ParseError(field, "expected string", line);
  return v.get<std::string>();
}

}  // namespace

Category category_of(ConstraintKind kind) {
  return static_cast<int>(kind) <= static_cast<int>(ConstraintKind::no_commas) ? Category::rule : Category::model;
}

std::string_view to_string(Category category) { return category == Category::rule ? "rule" : "model"; }

std::string_view to_string(ConstraintKind kind) { return info(kind).name; }

std::optional<ConstraintKind> kind_from_string(std::string_view name) {
  for (const auto& k : kKinds) {
    if (k.name == name) return k.kind;
  }
  return std::nullopt;
}

std::optional<Category> category_from_string(std::string_view name) {
  if (name == "rule") return Category::rule;
  if (name == "model") return Category::model;
  return std::nullopt;
}

std::string_view describe(ConstraintKind kind) { return info(kind).description; }

std::string_view to_string(Origin origin) { return origin == Origin::extracted ? "extracted" : "generated"; }

std::int64_t Constraint::int_param(std::string_view key) const {
  auto it = params.find(key);
  if (it == params.end() || !std::holds_alternative<std::int64_t>(it->second)) {
    throw InvalidArgument("constraint " + id + ": missing integer parameter '" + std::string(key) + "'");
  }
  return std::get<std::int64_t>(it->second);
}

const std::string& Constraint::string_param(std::string_view key) const {
  auto it = params.find(key);
  if (it == params.end() || !std::holds_alternative<std::string>(it->second)) {
    throw InvalidArgument("constraint " + id + ": missing string parameter '" + std::string(key) + "'");
  }
  return std::get<std::string>(it->second);
}

std::string content_id(const Constraint& c) {
  std::string material;
  material += to_string(c.category());
  material += '\x1f';
  material += to_string(c.kind);
  material += '\x1f';
  material += c.rule_variant;
  material += '\x1f';
  material += params_to_json(c.params).dump();
  material += '\x1f';
  material += c.text;
  return "c" + util::sha256_hex(material).substr(0, 16);
}

Constraint make_constraint(ConstraintKind kind, std::string rule_variant, Params params, std::string text,
                           Origin origin) {
  Constraint c;
  c.kind = kind;
  c.rule_variant = std::move(rule_variant);
  c.params = std::move(params);
  c.text = std::move(text);
  c.origin = origin;
  c.id = content_id(c);
  return c;
}

nlohmann::json to_json(const Constraint& c) {
  nlohmann::json j;
  j["id"] = c.id;
  j["category"] = to_string(c.category());
  j["type"] = to_string(c.kind);
  if (c.is_rule()) {
    j["rule_variant"] = c.rule_variant;
    j["params"] = params_to_json(c.params);
  }
  j["text"] = c.text;
  j["origin"] = to_string(c.origin);
  return j;
}

Constraint parse_constraint(const nlohmann::json& record, long line) {
  if (!record.is_object()) throw ParseError("<record>", "expected a JSON object", line);

  const std::string type_name = require_string(record, "type", line);
  auto kind = kind_from_string(type_name);
  if (!kind) throw ParseError("type", "unknown constraint type '" + type_name + "'", line);

  const std::string category_name = require_string(record, "category", line);
  auto category = category_from_string(category_name);
  if (!category) throw ParseError("category", "expected \"rule\" or \"model\"", line);
  if (*category != category_of(*kind)) {
    throw ParseError("category", "type '" + type_name + "' belongs to category '" +
                                     std::string(to_string(category_of(*kind))) + "'", line);
  }

  Constraint c;
  c.kind = *kind;
  c.text = require_string(record, "text", line);
  if (text::trim(c.text).empty()) throw ParseError("text", "must not be empty", line);

  if (*category == Category::rule) {
    auto vit = record.find("rule_variant");
    if (vit == record.end() || vit->is_null()) {
      c.rule_variant = variant::kDefault;
    } else if (vit->is_string()) {
      c.rule_variant = vit->get<std::string>();
    } else {
      throw ParseError("rule_variant", "expected string", line);
    }

    nlohmann::json params = nlohmann::json::object();
    if (auto pit = record.find("params"); pit != record.end() && !pit->is_null()) {
      if (!pit->is_object()) throw ParseError("params", "expected object", line);
      params = *pit;
    }
    auto specs = required_params(c.kind, c.rule_variant);
    if (!specs) {
      throw ParseError("rule_variant", "unknown variant '" + c.rule_variant + "' for type '" + type_name + "'", line);
    }
    for (const auto& spec : *specs) {
      const std::string field = "params." + std::string(spec.key);
      auto it = params.find(spec.key);
      if (it == params.end()) throw ParseError(field, "missing required parameter", line);
      if (spec.integer) {
        if (!it->is_number_integer()) throw ParseError(field, "expected integer", line);
        auto v = it->get<std::int64_t>();
        if (v < 0) throw ParseError(field, "must be non-negative", line);
        c.params.emplace(std::string(spec.key), v);
      } else {
        if (!it->is_string()) throw ParseError(field, "expected string", line);
        c.params.emplace(std::string(spec.key), it->get<std::string>());
      }
    }
    if (c.kind == ConstraintKind::format && !text::format_tag_from_string(c.string_param("format"))) {
      throw ParseError("params.format", "unknown format tag '" + c.string_param("format") + "'", line);
    }
    if (c.params.contains("min") && c.int_param("min") > c.int_param("max")) {
      throw ParseError("params.min", "range lower bound exceeds upper bound", line);
    }
  } else {
    if (auto vit = record.find("rule_variant"); vit != record.end() && !vit->is_null()) {
      throw ParseError("rule_variant", "model constraints carry no variant", line);
    }
    if (auto pit = record.find("params"); pit != record.end() && !pit->is_null() && !pit->empty()) {
      throw ParseError("params", "model constraints carry only text", line);
    }
  }

  if (auto oit = record.find("origin"); oit != record.end() && !oit->is_null()) {
    if (!oit->is_string()) throw ParseError("origin", "expected string", line);
    const auto origin = oit->get<std::string>();
    if (origin == "extracted") {
      c.origin = Origin::extracted;
    } else if (origin == "generated") {
      c.origin = Origin::generated;
    } else {
      throw ParseError("origin", "expected \"extracted\" or \"generated\"", line);
    }
  } else {
    c.origin = *category == Category::rule ? Origin::extracted : Origin::generated;
  }

  if (auto iit = record.find("id"); iit != record.end() && !iit->is_null()) {
    if (!iit->is_string() || iit->get<std::string>().empty()) throw ParseError("id", "expected non-empty string", line);
    c.id = iit->get<std::string>();
  } else {
    c.id = content_id(c);
  }
  return c;
}

}  // namespace recast
