#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace recast::llm {

// What a request is for. Prompt builders exist for every kind but `respond`,
// which sends the instruction as-is.
enum class PromptKind { constraint_gen, add_constraints, rank_instructions, rank_responses, judge, respond };

std::string_view to_string(PromptKind kind);
std::optional<PromptKind> prompt_kind_from_string(std::string_view name);

struct ChatMessage {
  std::string role;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

using Messages = std::vector<ChatMessage>;

// Defaults are the deterministic decoding settings used for every call.
struct GenerationSettings {
  double temperature = 0.0;
  double top_p = 1.0;
  int n = 1;
  std::optional<int> max_tokens;
};

struct ChatRequest {
  PromptKind kind = PromptKind::respond;
  Messages messages;
  GenerationSettings settings;
};

// SHA-256 over the role/content sequence.
std::string content_hash(const Messages& messages);

// A chat-completion endpoint. Implementations must be safe to call from
// several threads at once.
class ChatProvider {
 public:
  virtual ~ChatProvider() = default;

  virtual const std::string& name() const = 0;

  // Returns the assistant text of the first choice or throws GatewayError.
  virtual std::string complete(const ChatRequest& request) = 0;
};

}  // namespace recast::llm
