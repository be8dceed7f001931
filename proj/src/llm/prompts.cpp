#include "recast/llm/prompts.hpp"

#include <json.hpp>

#include "recast/errors.hpp"
#include "recast/util/hash.hpp"

namespace recast::llm {
namespace {

constexpr std::string_view kConstraintGenSystem =
    "You are an expert annotator who describes the requirements a piece of writing already fulfils.";

constexpr std::string_view kConstraintGenTask =
    R"(Read the response below and work backwards from it. For every constraint category listed, write concrete requirements that this response already satisfies, phrased as imperative instructions a user could have given before the response was written (for example "Use a warm, encouraging tone." or "Illustrate each tip with a short everyday example.").

Constraint categories:
)";

constexpr std::string_view kConstraintGenRules = R"(
Guidelines:
1. Only write a constraint when the response clearly satisfies it.
2. Each constraint is one self-contained imperative sentence.
3. A category may hold several constraints; use an empty list when the category does not apply to this response.
4. Do not write constraints about length, letter case, punctuation, required keywords or output format.

Return only a JSON dictionary that maps each category name listed above to a list of constraint strings. Do not add any other text.

Response:
<<<
)";

constexpr std::string_view kAddConstraintsSystem =
    "You rewrite user instructions so that they state their requirements explicitly.";

constexpr std::string_view kRankInstructionsSystem =
    "You compare alternative phrasings of an instruction and rank them.";

constexpr std::string_view kRankResponsesSystem = "You compare candidate answers to an instruction and rank them.";

constexpr std::string_view kJudgeSystem = "You are an objective and fair validator of model responses.";

constexpr std::string_view kJudgeRules = R"(Decide whether the model response below satisfies ONE specific constraint taken from the input instruction.

Judgment rules:
- Treat the constraint as a single scoring point of the input instruction. Judge only whether the response meets that point; ignore how well it fulfils the rest of the instruction.
- A response can satisfy the constraint even when it is otherwise incomplete or inaccurate, and it can violate the constraint even when it is otherwise excellent.
- Answer "Yes" only when the constraint is clearly met; otherwise answer "No".

Example: the instruction asks for a 300-word essay in a formal register and the response has 120 words written formally. For the constraint "Write in a formal register." the answer is "Yes"; the length shortfall is irrelevant to this constraint.

Scoring details:
- Itemization: when the constraint asks for items, steps or points, check that each required item is present and separated as requested.
- Language use: when the constraint concerns tone, style, wording or language, assess the whole response, not just its opening.
- Required elements: when the constraint demands particular content (an example, a role, a setting, a topic), check that it is actually present rather than merely implied.
)";

constexpr std::string_view kJudgeOutput =
    R"(Return only a JSON object of the form {"analysis": "<brief reasoning>", "answer": "Yes"}, using "No" as the answer when the constraint is not met.)";

const std::string& require_slot(const Slots& slots, std::string_view name) {
  auto it = slots.find(name);
  if (it == slots.end()) throw InvalidArgument("build_prompt: missing slot '" + std::string(name) + "'");
  return it->second;
}

std::string fenced(std::string_view body) {
  std::string out = "<<<\n";
  out += body;
  out += "\n>>>";
  return out;
}

// Labeled candidates present in `slots`, contiguous from 'A'.
std::vector<std::string> collect_candidates(const Slots& slots) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < 26; ++i) {
    auto it = slots.find(std::string(1, candidate_label(i)));
    if (it == slots.end()) break;
    out.push_back(it->second);
  }
  if (out.size() < 2) {
    throw InvalidArgument("build_prompt: missing slot '" + std::string(1, candidate_label(out.size())) + "'");
  }
  return out;
}

std::string label_span(std::size_t n) {
  std::string out(1, 'A');
  out += "-";
  out += candidate_label(n - 1);
  return out;
}

std::string example_ranking(std::size_t n) {
  std::string out;
  for (std::size_t i = n; i-- > 0;) {
    out += candidate_label(i);
    if (i > 0) out += " > ";
  }
  return out;
}

std::string candidate_block(const std::vector<std::string>& candidates) {
  std::string out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out += "[";
    out += candidate_label(i);
    out += "]\n";
    out += fenced(candidates[i]);
    out += "\n\n";
  }
  return out;
}

std::string ranking_footer(std::size_t n) {
  return "Output only the ranking from best to worst as labels separated by \" > \" (for example: " +
         example_ranking(n) + "). Do not explain your choice.";
}

}  // namespace

std::string_view to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::constraint_gen: return "constraint_gen";
    case PromptKind::add_constraints: return "add_constraints";
    case PromptKind::rank_instructions: return "rank_instructions";
    case PromptKind::rank_responses: return "rank_responses";
    case PromptKind::judge: return "judge";
    case PromptKind::respond: return "respond";
  }
  return "unknown";
}

std::optional<PromptKind> prompt_kind_from_string(std::string_view name) {
  for (auto k : {PromptKind::constraint_gen, PromptKind::add_constraints, PromptKind::rank_instructions,
                 PromptKind::rank_responses, PromptKind::judge, PromptKind::respond}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::string content_hash(const Messages& messages) {
  std::string material;
  for (const auto& m : messages) {
    material += m.role;
    material += '\0';
    material += m.content;
    material += '\0';
  }
  return util::sha256_hex(material);
}

char candidate_label(std::size_t index) {
  if (index >= 26) throw InvalidArgument("candidate_label: at most 26 candidates");
  return static_cast<char>('A' + index);
}

std::string category_list(std::span<const ConstraintKind> kinds) {
  std::string out;
  for (auto kind : kinds) {
    out += "- ";
    out += to_string(kind);
    out += ": ";
    out += describe(kind);
    out += "\n";
  }
  return out;
}

std::string constraint_dictionary(std::span<const Constraint> constraints) {
  nlohmann::ordered_json dict = nlohmann::ordered_json::object();
  for (const auto& c : constraints) {
    auto& list = dict[std::string(to_string(c.kind))];
    if (list.is_null()) list = nlohmann::ordered_json::array();
    list.push_back(c.text);
  }
  return dict.dump(2);
}

Slots candidate_slots(std::span<const std::string> candidates) {
  Slots slots;
  for (std::size_t i = 0; i < candidates.size(); ++i) slots.emplace(std::string(1, candidate_label(i)), candidates[i]);
  return slots;
}

Messages response_request(std::string_view instruction) { return {{"user", std::string(instruction)}}; }

Messages build_prompt(PromptKind kind, const Slots& slots) {
  switch (kind) {
    case PromptKind::constraint_gen: {
      const auto& response = require_slot(slots, "response");
      const auto& categories = require_slot(slots, "categories");
      std::string user(kConstraintGenTask);
      user += categories;
      user += kConstraintGenRules;
      user += response;
      user += "\n>>>";
      return {{"system", std::string(kConstraintGenSystem)}, {"user", std::move(user)}};
    }
    case PromptKind::add_constraints: {
      const auto& instruction = require_slot(slots, "instruction");
      const auto& constraints = require_slot(slots, "constraints");
      std::string user = "Original instruction:\n" + fenced(instruction) + "\n\n";
      user += "Constraint dictionary (grouped by type):\n" + constraints + "\n\n";
      user +=
          "Rewrite the original instruction so that it keeps its task and intent and naturally incorporates every "
          "constraint in the dictionary that the original instruction does not already state. Merge related "
          "requirements into fluent sentences. Do not drop, weaken or contradict any constraint, and do not add "
          "requirements that are not listed.\n\n"
          "Output only the revised instruction, with no preamble or explanation.";
      return {{"system", std::string(kAddConstraintsSystem)}, {"user", std::move(user)}};
    }
    case PromptKind::rank_instructions: {
      auto candidates = collect_candidates(slots);
      const auto n = candidates.size();
      std::string user = "Below are " + std::to_string(n) + " candidate versions of the same instruction, labeled " +
                         label_span(n) + ". Rank them from best to worst using these criteria:\n";
      user += "1. Clarity of requirements: the instruction is unambiguous and directly actionable.\n";
      user += "2. Language fluency: the instruction is grammatically correct and easy to understand.\n\n";
      user += candidate_block(candidates);
      user += ranking_footer(n);
      return {{"system", std::string(kRankInstructionsSystem)}, {"user", std::move(user)}};
    }
    case PromptKind::rank_responses: {
      const auto& instruction = require_slot(slots, "instruction");
      auto candidates = collect_candidates(slots);
      const auto n = candidates.size();
      std::string user = "Instruction:\n" + fenced(instruction) + "\n\n";
      user += "Below are " + std::to_string(n) + " candidate responses to this instruction, labeled " +
              label_span(n) + ". Rank them from best to worst using these criteria:\n";
      user += "1. Instruction adherence: the response follows every requirement stated in the instruction.\n";
      user += "2. Helpfulness: the response fully addresses the request.\n";
      user += "3. Accuracy: the information is correct and reliable.\n";
      user += "4. Clarity: the response is well structured and easy to follow.\n";
      user += "5. Conciseness: the response avoids unnecessary detail.\n\n";
      user += candidate_block(candidates);
      user += ranking_footer(n);
      return {{"system", std::string(kRankResponsesSystem)}, {"user", std::move(user)}};
    }
    case PromptKind::judge: {
      const auto& instruction = require_slot(slots, "instruction");
      const auto& response = require_slot(slots, "response");
      const auto& constraint = require_slot(slots, "constraint");
      std::string user(kJudgeRules);
      user += "\nInput instruction:\n" + fenced(instruction) + "\n\n";
      user += "Model response:\n" + fenced(response) + "\n\n";
      user += "Constraint:\n" + fenced(constraint) + "\n\n";
      user += kJudgeOutput;
      return {{"system", std::string(kJudgeSystem)}, {"user", std::move(user)}};
    }
    case PromptKind::respond:
      break;
  }
  throw InvalidArgument("build_prompt: no template for kind '" + std::string(to_string(kind)) + "'");
}

}  // namespace recast::llm
