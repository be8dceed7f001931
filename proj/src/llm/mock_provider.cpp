#include "recast/llm/mock_provider.hpp"

#include <array>
#include <vector>

#include <json.hpp>

#include "recast/constraint.hpp"
#include "recast/text_metrics.hpp"
#include "recast/util/hash.hpp"
#include "recast/util/rng.hpp"

namespace recast::llm {

std::string ScriptedProvider::complete(const ChatRequest& request) {
  std::lock_guard lock(mu_);
  ++counts_[request.kind];
  if (!fixtures_.empty()) {
    auto it = fixtures_.find({request.kind, content_hash(request.messages)});
    if (it != fixtures_.end()) return it->second;
  }
  if (auto q = queues_.find(request.kind); q != queues_.end() && !q->second.empty()) {
    Reply reply = std::move(q->second.front());
    q->second.pop_front();
    if (auto* err = std::get_if<GatewayError>(&reply)) throw *err;
    return std::get<std::string>(reply);
  }
  if (auto d = defaults_.find(request.kind); d != defaults_.end()) return d->second;
  if (echo_ && !request.messages.empty()) return request.messages.back().content;
  throw GatewayError(GatewayError::Kind::transport,
                     "scripted provider '" + name_ + "' has no reply for " + std::string(to_string(request.kind)));
}

void ScriptedProvider::add_fixture(PromptKind kind, const std::string& hash, std::string reply) {
  std::lock_guard lock(mu_);
  fixtures_[{kind, hash}] = std::move(reply);
}

void ScriptedProvider::enqueue(PromptKind kind, Reply reply) {
  std::lock_guard lock(mu_);
  queues_[kind].push_back(std::move(reply));
}

void ScriptedProvider::set_default(PromptKind kind, std::string reply) {
  std::lock_guard lock(mu_);
  defaults_[kind] = std::move(reply);
}

void ScriptedProvider::set_echo(bool on) {
  std::lock_guard lock(mu_);
  echo_ = on;
}

std::size_t ScriptedProvider::calls() const {
  std::lock_guard lock(mu_);
  std::size_t total = 0;
  for (const auto& [kind, n] : counts_) total += n;
  return total;
}

std::size_t ScriptedProvider::calls(PromptKind kind) const {
  std::lock_guard lock(mu_);
  auto it = counts_.find(kind);
  return it == counts_.end() ? 0 : it->second;
}

namespace {

std::string_view between(std::string_view s, std::string_view open, std::string_view close) {
  auto start = s.find(open);
  if (start == std::string_view::npos) return {};
  start += open.size();
  auto end = s.find(close, start);
  if (end == std::string_view::npos) end = s.size();
  return s.substr(start, end - start);
}

std::string_view last_user(const Messages& messages) {
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == "user") return it->content;
  }
  return messages.empty() ? std::string_view{} : std::string_view(messages.back().content);
}

std::string longest_word(std::string_view text) {
  std::string best;
  for (auto w : text::split_words(text)) {
    auto core = text::strip_punctuation(w);
    bool alpha = !core.empty();
    for (char c : core) alpha = alpha && std::isalpha(static_cast<unsigned char>(c));
    if (alpha && core.size() > best.size()) best = std::string(core);
  }
  return best.empty() ? "the subject" : text::ascii_lower(best);
}

std::vector<std::string> phrases(ConstraintKind kind, const std::string& subject) {
  switch (kind) {
    case ConstraintKind::tone:
      return {"Maintain a clear and informative tone.", "Keep the tone calm and matter-of-fact.",
              "Use a friendly, approachable tone."};
    case ConstraintKind::emotion:
      return {"Convey a sense of quiet confidence.", "Let a hopeful attitude come through.",
              "Express genuine curiosity about the subject."};
    case ConstraintKind::style:
      return {"Write in plain, direct prose.", "Favor short declarative sentences.",
              "Adopt an explanatory, textbook-like style."};
    case ConstraintKind::factuality:
      return {"Only state claims that are widely accepted as accurate.", "Avoid speculation presented as fact.",
              "Keep every factual statement verifiable."};
    case ConstraintKind::helpfulness:
      return {"Give the reader something they can act on.", "Answer the request directly before elaborating.",
              "Anticipate a natural follow-up question and address it."};
    case ConstraintKind::example:
      return {"Illustrate the main point with a concrete example.", "Include at least one practical illustration.",
              "Ground the explanation in a specific case."};
    case ConstraintKind::background_info:
      return {"Provide brief context before the main answer.", "Mention the background needed to follow the answer.",
              "Explain any term a newcomer might not know."};
    case ConstraintKind::role_playing:
      return {"Respond as a knowledgeable guide would.", "Take the perspective of an experienced practitioner.",
              "Answer as a patient tutor addressing a student."};
    case ConstraintKind::topic:
      return {"Keep the discussion centred on " + subject + ".", "Do not drift away from the topic of " + subject + ".",
              "Make " + subject + " the focus of the response."};
    case ConstraintKind::situation:
      return {"Assume the reader is encountering the topic for the first time.",
              "Frame the answer for someone with limited time.",
              "Address the reader as if they asked in an everyday setting."};
    default:
      return {};
  }
}

std::string simulate_generation(std::string_view prompt, util::Rng& rng) {
  const auto response = between(prompt, "Response:\n<<<\n", "\n>>>");
  const auto subject = longest_word(response);
  const auto skipped = rng.index(kModelKinds.size());
  const auto planted = rng.index(kModelKinds.size());

  nlohmann::ordered_json dict = nlohmann::ordered_json::object();
  for (std::size_t k = 0; k < kModelKinds.size(); ++k) {
    const auto kind = kModelKinds[k];
    auto list = nlohmann::ordered_json::array();
    if (k != skipped) {
      auto options = phrases(kind, subject);
      rng.shuffle(options);
      const auto take = 1 + rng.index(2);
      for (std::size_t i = 0; i < take && i < options.size(); ++i) list.push_back(options[i]);
    }
    if (k == planted) list.push_back("Write the response " + std::string(kUnsatisfiableMarker) + ".");
    dict[std::string(to_string(kind))] = std::move(list);
  }
  return dict.dump();
}

std::string simulate_rewrite(std::string_view prompt, std::uint64_t style) {
  const auto instruction = between(prompt, "Original instruction:\n<<<\n", "\n>>>");
  const auto dict_text = between(prompt, "(grouped by type):\n", "\n\nRewrite the original");
  auto dict = nlohmann::ordered_json::parse(dict_text.begin(), dict_text.end(), nullptr, false);
  std::vector<std::string> items;
  if (dict.is_object()) {
    for (const auto& [key, list] : dict.items()) {
      if (!list.is_array()) continue;
      for (const auto& t : list) {
        if (t.is_string()) items.push_back(t.get<std::string>());
      }
    }
  }
  std::string out(instruction);
  switch (style % 3) {
    case 0:
      out += "\n\nRequirements:";
      for (const auto& t : items) out += " " + t;
      break;
    case 1:
      for (const auto& t : items) out += " " + t;
      break;
    default:
      out += "\n";
      for (const auto& t : items) out += "\n- " + t;
      break;
  }
  return out;
}

std::string simulate_ranking(std::string_view prompt, util::Rng& rng) {
  auto count_text = between(prompt, "Below are ", " ");
  std::size_t n = 0;
  for (char c : count_text) {
    if (!std::isdigit(static_cast<unsigned char>(c))) break;
    n = n * 10 + static_cast<std::size_t>(c - '0');
  }
  if (n < 2 || n > 26) throw GatewayError(GatewayError::Kind::malformed_payload, "simulated ranker: bad prompt");
  std::vector<char> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back(static_cast<char>('A' + i));
  rng.shuffle(labels);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) out += " > ";
    out += labels[i];
  }
  return out;
}

std::string simulate_judge(std::string_view prompt) {
  const auto response = between(prompt, "Model response:\n<<<\n", "\n>>>\n\nConstraint:");
  const auto constraint = between(prompt, "Constraint:\n<<<\n", "\n>>>");
  nlohmann::ordered_json reply;
  if (constraint.find(kUnsatisfiableMarker) != std::string_view::npos) {
    reply["analysis"] = "The response is not written in the required script.";
    reply["answer"] = "No";
  } else if (text::trim(response).empty()) {
    reply["analysis"] = "The response is empty.";
    reply["answer"] = "No";
  } else {
    reply["analysis"] = "The response meets the stated requirement.";
    reply["answer"] = "Yes";
  }
  return reply.dump();
}

std::string simulate_response(std::string_view instruction, const std::string& name, util::Rng& rng) {
  static const std::array<std::string_view, 4> openers = {
      "Here is a considered answer.", "Below is a short response.", "This reply addresses the request.",
      "The following notes respond to the task."};
  static const std::array<std::string_view, 5> fillers = {
      "Each point is explained in plain language.", "The key ideas are presented in a logical order.",
      "Practical details are included where they help.", "Background is kept brief so the answer stays focused.",
      "A concrete example makes the main idea easier to follow."};
  std::string out(openers[rng.index(openers.size())]);
  auto words = text::split_words(instruction);
  out += " It concerns:";
  for (std::size_t i = 0; i < words.size() && i < 8; ++i) {
    out += " ";
    out += text::strip_punctuation(words[i]);
  }
  out += ".";
  const auto extra = 2 + rng.index(3);
  for (std::size_t i = 0; i < extra; ++i) {
    out += " ";
    out += fillers[rng.index(fillers.size())];
  }
  out += " (" + name + ")";
  return out;
}

}  // namespace

std::string SimulatedProvider::complete(const ChatRequest& request) {
  ++calls_;
  if (request.messages.empty()) throw InvalidArgument("complete: messages must not be empty");
  const auto hash = content_hash(request.messages);
  util::Rng rng(util::derive_seed(util::fnv1a64(name_), hash));
  const auto prompt = last_user(request.messages);
  switch (request.kind) {
    case PromptKind::constraint_gen: return simulate_generation(prompt, rng);
    case PromptKind::add_constraints: return simulate_rewrite(prompt, util::fnv1a64(name_));
    case PromptKind::rank_instructions:
    case PromptKind::rank_responses: return simulate_ranking(prompt, rng);
    case PromptKind::judge: return simulate_judge(prompt);
    case PromptKind::respond: return simulate_response(prompt, name_, rng);
  }
  throw InvalidArgument("simulated provider: unknown prompt kind");
}

}  // namespace recast::llm
