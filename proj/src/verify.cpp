#include "recast/verify.hpp"

#include <cstdlib>

#include "recast/llm/parsing.hpp"
#include "recast/llm/prompts.hpp"
#include "recast/templates.hpp"
#include "recast/text_metrics.hpp"

namespace recast::verify {
namespace {

std::string range_detail(std::string_view metric, std::int64_t count, std::int64_t lo, std::int64_t hi, bool ok) {
  return std::string(metric) + "=" + std::to_string(count) + (ok ? " within [" : " outside [") + std::to_string(lo) +
         "," + std::to_string(hi) + "]";
}

Verdict length_verdict(const Constraint& c, std::string_view metric, std::int64_t count, bool words) {
  Verdict v{c.id, false, Method::rule, {}, std::nullopt};
  const auto& var = c.rule_variant;
  if (var == variant::kApproximate) {
    const auto target = c.int_param("target");
    // Words allow 20% either way, sentences two either way.
    const auto diff = std::llabs(count - target);
    v.satisfied = words ? 5 * diff <= target : diff <= 2;
    v.detail = std::string(metric) + "=" + std::to_string(count) + (v.satisfied ? " near " : " not near ") +
               std::to_string(target) + (words ? " (20%)" : " (2)");
  } else if (var == variant::kBelow) {
    const auto max = c.int_param("max");
    v.satisfied = count <= max;
    v.detail = std::string(metric) + "=" + std::to_string(count) + (v.satisfied ? " <= " : " > ") + std::to_string(max);
  } else if (var == variant::kRange) {
    const auto lo = c.int_param("min");
    const auto hi = c.int_param("max");
    v.satisfied = lo <= count && count <= hi;
    v.detail = range_detail(metric, count, lo, hi, v.satisfied);
  } else {
    const auto n = c.int_param("count");
    v.satisfied = count == n;
    v.detail = std::string(metric) + "=" + std::to_string(count) + (v.satisfied ? " == " : " != ") + std::to_string(n);
  }
  return v;
}

bool same_word(std::string_view token, std::string_view expected) {
  return text::iequals(text::strip_punctuation(token), text::strip_punctuation(text::trim(expected)));
}

}  // namespace

std::string_view to_string(Method m) { return m == Method::rule ? "rule" : "judge"; }

nlohmann::json to_json(const Verdict& v) {
  nlohmann::json j = {{"constraint_id", v.constraint_id},
                      {"satisfied", v.satisfied},
                      {"method", to_string(v.method)},
                      {"detail", v.detail}};
  if (v.judge_analysis) j["judge_analysis"] = *v.judge_analysis;
  return j;
}

Verdict parse_verdict(const nlohmann::json& j, long line) {
  if (!j.is_object()) throw ParseError("verdict", "expected an object", line);
  auto str = [&](const char* key) -> std::string {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) throw ParseError(key, "expected a string", line);
    return it->get<std::string>();
  };
  Verdict v;
  v.constraint_id = str("constraint_id");
  auto sat = j.find("satisfied");
  if (sat == j.end() || !sat->is_boolean()) throw ParseError("satisfied", "expected a boolean", line);
  v.satisfied = sat->get<bool>();
  const auto method = str("method");
  if (method == "rule") {
    v.method = Method::rule;
  } else if (method == "judge") {
    v.method = Method::judge;
  } else {
    throw ParseError("method", "expected \"rule\" or \"judge\"", line);
  }
  v.detail = j.contains("detail") ? str("detail") : std::string{};
  if (auto a = j.find("judge_analysis"); a != j.end() && !a->is_null()) {
    if (v.method == Method::rule) throw ParseError("judge_analysis", "not allowed on rule verdicts", line);
    if (!a->is_string()) throw ParseError("judge_analysis", "expected a string", line);
    v.judge_analysis = a->get<std::string>();
  }
  return v;
}

Verdict verify_rule(const Constraint& c, std::string_view response) {
  if (!c.is_rule()) {
    throw InvalidArgument("verify_rule: '" + std::string(to_string(c.kind)) + "' is a model-based constraint");
  }
  if (variant_arity(c.kind, c.rule_variant) < 0) {
    throw RegistryError("unknown variant '" + c.rule_variant + "' for " + std::string(to_string(c.kind)));
  }

  Verdict v{c.id, false, Method::rule, {}, std::nullopt};
  switch (c.kind) {
    case ConstraintKind::length_words:
      return length_verdict(c, "word_count", static_cast<std::int64_t>(text::count_words(response)), true);
    case ConstraintKind::length_sentences:
      return length_verdict(c, "sentence_count", static_cast<std::int64_t>(text::count_sentences(response)), false);
    case ConstraintKind::format: {
      const auto& name = c.string_param("format");
      auto tag = text::format_tag_from_string(name);
      if (!tag) throw RegistryError("unknown format '" + name + "'");
      v.satisfied = text::detect_formats(response).count(*tag) > 0;
      v.detail = "format " + name + (v.satisfied ? " detected" : " not detected");
      return v;
    }
    case ConstraintKind::keyword: {
      const auto& kw = c.string_param("keyword");
      const auto want = c.int_param("count");
      const auto got = static_cast<std::int64_t>(text::count_keyword(response, kw));
      v.satisfied = got >= want;
      v.detail = "keyword \"" + kw + "\" occurs " + std::to_string(got) + (v.satisfied ? " >= " : " < ") +
                 std::to_string(want);
      return v;
    }
    case ConstraintKind::start_with:
    case ConstraintKind::end_with: {
      const auto& word = c.string_param("word");
      auto words = text::split_words(response);
      if (words.empty()) {
        v.detail = "response has no words";
        return v;
      }
      const bool start = c.kind == ConstraintKind::start_with;
      const auto token = start ? words.front() : words.back();
      v.satisfied = same_word(token, word);
      v.detail = std::string(start ? "first" : "last") + " word \"" + std::string(text::strip_punctuation(token)) +
                 "\"" + (v.satisfied ? " matches " : " does not match ") + "\"" + word + "\"";
      return v;
    }
    case ConstraintKind::all_upper:
    case ConstraintKind::all_lower: {
      const auto want = c.kind == ConstraintKind::all_upper ? text::CaseClass::all_upper : text::CaseClass::all_lower;
      const auto got = text::classify_case(response);
      v.satisfied = got == want;
      v.detail = "case=" + std::string(text::to_string(got));
      return v;
    }
    case ConstraintKind::no_commas: {
      const auto pos = text::first_comma(response);
      v.satisfied = pos == std::string_view::npos;
      v.detail = v.satisfied ? "no commas" : "comma at offset " + std::to_string(pos);
      return v;
    }
    default:
      break;
  }
  throw InvalidArgument("verify_rule: unhandled type " + std::string(to_string(c.kind)));
}

Verdict verify_model(const Constraint& c, std::string_view instruction, std::string_view response,
                     llm::ChatProvider& judge) {
  if (c.is_rule()) {
    throw InvalidArgument("verify_model: '" + std::string(to_string(c.kind)) + "' is a rule-based constraint");
  }
  llm::ChatRequest request;
  request.kind = llm::PromptKind::judge;
  request.messages = llm::build_prompt(
      llm::PromptKind::judge,
      {{"instruction", std::string(instruction)}, {"response", std::string(response)}, {"constraint", c.text}});

  std::string last_error;
  for (int attempt = 0; attempt <= kJudgeRetries; ++attempt) {
    const auto reply = judge.complete(request);
    try {
      auto parsed = llm::parse_judge_reply(reply);
      return Verdict{c.id, parsed.satisfied, Method::judge,
                     std::string("judge ") + judge.name() + " answered " + (parsed.satisfied ? "Yes" : "No"),
                     std::move(parsed.analysis)};
    } catch (const JudgeProtocolError& e) {
      last_error = e.what();
    }
  }
  throw JudgeProtocolError("judge " + judge.name() + " gave no usable verdict for " + c.id + " after " +
                           std::to_string(kJudgeRetries + 1) + " attempts: " + last_error);
}

std::vector<Verdict> verify_all(std::span<const Constraint> constraints, std::string_view instruction,
                                std::string_view response, llm::ChatProvider& judge) {
  std::vector<Verdict> out;
  out.reserve(constraints.size());
  for (const auto& c : constraints) {
    if (c.is_rule()) {
      out.push_back(verify_rule(c, response));
      continue;
    }
    try {
      out.push_back(verify_model(c, instruction, response, judge));
    } catch (const JudgeProtocolError& e) {
      throw PartialVerdictsError(e.what(), std::move(out));
    } catch (const GatewayError& e) {
      throw PartialVerdictsError(e.what(), std::move(out));
    }
  }
  return out;
}

}  // namespace recast::verify
