#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recast/constraint.hpp"
#include "recast/llm/provider.hpp"

namespace recast::llm {

using Slots = std::map<std::string, std::string, std::less<>>;

// Candidate label for position i (0 -> 'A'). Up to 26 candidates.
char candidate_label(std::size_t index);

// Required slots per kind:
//   constraint_gen     response, categories
//   add_constraints    instruction, constraints
//   rank_instructions  A, B, ... (contiguous from A, at least two)
//   rank_responses     instruction, A, B, ...
//   judge              instruction, response, constraint
// Throws InvalidArgument naming the first missing slot.
Messages build_prompt(PromptKind kind, const Slots& slots);

// "- name: definition" lines for the given model-based types.
std::string category_list(std::span<const ConstraintKind> kinds);

// Pretty JSON dictionary {type: [constraint text, ...]} in pool order.
std::string constraint_dictionary(std::span<const Constraint> constraints);

// Slots for a ranking prompt with candidates labeled in input order.
Slots candidate_slots(std::span<const std::string> candidates);

// The bare user turn sent to response generators.
Messages response_request(std::string_view instruction);

}  // namespace recast::llm
