#pragma once

#include <atomic>
#include <cstddef>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

#include "recast/errors.hpp"
#include "recast/llm/provider.hpp"

namespace recast::llm {

// Test double with replies looked up in this order: fixture keyed by
// (kind, content hash), per-kind queue, per-kind default, echo of the last
// message. Anything else is a transport error.
class ScriptedProvider final : public ChatProvider {
 public:
  using Reply = std::variant<std::string, GatewayError>;

  explicit ScriptedProvider(std::string name) : name_(std::move(name)) {}

  const std::string& name() const override { return name_; }
  std::string complete(const ChatRequest& request) override;

  void add_fixture(PromptKind kind, const std::string& hash, std::string reply);
  void enqueue(PromptKind kind, Reply reply);
  void set_default(PromptKind kind, std::string reply);
  void set_echo(bool on);

  std::size_t calls() const;
  std::size_t calls(PromptKind kind) const;

 private:
  std::string name_;
  mutable std::mutex mu_;
  std::map<std::pair<PromptKind, std::string>, std::string> fixtures_;
  std::map<PromptKind, std::deque<Reply>> queues_;
  std::map<PromptKind, std::string> defaults_;
  std::map<PromptKind, std::size_t> counts_;
  bool echo_ = false;
};

// Phrase the simulated generator plants in one constraint per reply; the
// simulated judge always rejects it, so pool filtering is exercised.
inline constexpr std::string_view kUnsatisfiableMarker = "entirely in Sumerian cuneiform";

// Deterministic offline stand-in used by --mock. Every reply is a pure
// function of (provider name, prompt), so runs are byte-reproducible.
class SimulatedProvider final : public ChatProvider {
 public:
  explicit SimulatedProvider(std::string name) : name_(std::move(name)) {}

  const std::string& name() const override { return name_; }
  std::string complete(const ChatRequest& request) override;

  std::size_t calls() const { return calls_.load(); }

 private:
  std::string name_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace recast::llm
