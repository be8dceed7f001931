#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "recast/constraint.hpp"
#include "recast/errors.hpp"
#include "recast/llm/provider.hpp"

namespace recast::verify {

enum class Method { rule, judge };
std::string_view to_string(Method m);

struct Verdict {
  std::string constraint_id;
  bool satisfied = false;
  Method method = Method::rule;
  std::string detail;
  std::optional<std::string> judge_analysis;  // judge verdicts only

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

nlohmann::json to_json(const Verdict& v);
Verdict parse_verdict(const nlohmann::json& j, long line = 0);

// Judge replies that fail to parse are retried this many times.
inline constexpr int kJudgeRetries = 2;

// Deterministic check of a rule constraint. Throws InvalidArgument for a
// model constraint and RegistryError for an unknown variant.
Verdict verify_rule(const Constraint& constraint, std::string_view response);

// Asks `judge` whether `response` satisfies this one constraint. Throws
// JudgeProtocolError after the retry budget and lets GatewayError through.
Verdict verify_model(const Constraint& constraint, std::string_view instruction, std::string_view response,
                     llm::ChatProvider& judge);

// A judge failure part-way through a record; carries what was decided
// before it.
class PartialVerdictsError : public Error {
 public:
  PartialVerdictsError(const std::string& message, std::vector<Verdict> partial)
      : Error(message), partial_(std::move(partial)) {}
  const std::vector<Verdict>& partial() const { return partial_; }

 private:
  std::vector<Verdict> partial_;
};

// One verdict per constraint in input order. Rule constraints never reach
// the judge.
std::vector<Verdict> verify_all(std::span<const Constraint> constraints, std::string_view instruction,
                                std::string_view response, llm::ChatProvider& judge);

}  // namespace recast::verify
