#include "recast/llm/parsing.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

#include <spdlog/spdlog.h>

#include "recast/errors.hpp"
#include "recast/text_metrics.hpp"

namespace recast::llm {
namespace {

bool is_wrapper(char c) { return c == '[' || c == ']' || c == '(' || c == ')' || c == '"' || c == '\'' || c == '`'; }

std::string_view strip_wrappers(std::string_view s) {
  s = text::trim(s);
  while (!s.empty() && (is_wrapper(s.front()) || std::isspace(static_cast<unsigned char>(s.front())))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (is_wrapper(s.back()) || s.back() == '.' ||
                        std::isspace(static_cast<unsigned char>(s.back())))) {
    s.remove_suffix(1);
  }
  return s;
}

// Lines that may carry the ranking: those with '>' first, then the rest,
// each in reply order.
std::vector<std::string_view> ranking_lines(std::string_view reply) {
  std::vector<std::string_view> arrows, others;
  std::size_t pos = 0;
  while (pos <= reply.size()) {
    auto end = reply.find('\n', pos);
    if (end == std::string_view::npos) end = reply.size();
    auto line = text::trim(reply.substr(pos, end - pos));
    if (!line.empty()) (line.find('>') != std::string_view::npos ? arrows : others).push_back(line);
    pos = end + 1;
  }
  arrows.insert(arrows.end(), others.begin(), others.end());
  return arrows;
}

std::string normalize_key(std::string_view key) {
  std::string out;
  for (char c : text::trim(key)) {
    if (c == ' ' || c == '-') {
      out += '_';
    } else {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

}  // namespace

std::vector<std::size_t> Ranking::indices() const {
  std::vector<std::size_t> out;
  out.reserve(order.size());
  for (char c : order) out.push_back(static_cast<std::size_t>(c - 'A'));
  return out;
}

namespace {

Ranking parse_ranking_line(std::string_view raw, std::size_t n_candidates) {
  auto line = strip_wrappers(raw);
  if (line.empty()) throw RankingParseError("empty ranking line");

  const char sep = line.find('>') != std::string_view::npos ? '>' : ',';
  Ranking ranking;
  std::vector<bool> seen(n_candidates, false);
  std::size_t pos = 0;
  while (pos <= line.size()) {
    auto end = line.find(sep, pos);
    if (end == std::string_view::npos) end = line.size();
    auto token = strip_wrappers(line.substr(pos, end - pos));
    if (token.size() != 1 || !std::isalpha(static_cast<unsigned char>(token[0]))) {
      throw RankingParseError("ranking token '" + std::string(token) + "' is not a single label");
    }
    const char label = static_cast<char>(std::toupper(static_cast<unsigned char>(token[0])));
    const auto idx = static_cast<std::size_t>(label - 'A');
    if (idx >= n_candidates) throw RankingParseError("unknown label '" + std::string(1, label) + "'");
    if (seen[idx]) throw RankingParseError("label '" + std::string(1, label) + "' repeated");
    seen[idx] = true;
    ranking.order.push_back(label);
    pos = end + 1;
  }
  if (ranking.order.size() != n_candidates) {
    throw RankingParseError("ranking lists " + std::to_string(ranking.order.size()) + " of " +
                            std::to_string(n_candidates) + " labels");
  }
  return ranking;
}

}  // namespace

Ranking parse_ranking(std::string_view reply, std::size_t n_candidates) {
  if (n_candidates < 2 || n_candidates > 26) throw InvalidArgument("parse_ranking: n must be in [2, 26]");
  const auto lines = ranking_lines(reply);
  if (lines.empty()) throw RankingParseError("empty ranking reply");
  // The first complete permutation wins; otherwise report why the most
  // likely line failed.
  std::optional<RankingParseError> first_error;
  for (auto line : lines) {
    try {
      return parse_ranking_line(line, n_candidates);
    } catch (const RankingParseError& e) {
      if (!first_error) first_error = e;
    }
  }
  throw *first_error;
}

std::optional<nlohmann::json> extract_json_object(std::string_view reply) {
  auto try_parse = [](std::string_view s) -> std::optional<nlohmann::json> {
    auto j = nlohmann::json::parse(s.begin(), s.end(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    return j;
  };
  if (auto j = try_parse(text::trim(reply))) return j;

  // Fenced block, with or without a language tag.
  auto fence = reply.find("```");
  if (fence != std::string_view::npos) {
    auto body_start = reply.find('\n', fence);
    auto close = body_start == std::string_view::npos ? std::string_view::npos : reply.find("```", body_start);
    if (close != std::string_view::npos) {
      if (auto j = try_parse(reply.substr(body_start + 1, close - body_start - 1))) return j;
    }
  }

  auto open = reply.find('{');
  auto last = reply.rfind('}');
  if (open != std::string_view::npos && last != std::string_view::npos && last > open) {
    if (auto j = try_parse(reply.substr(open, last - open + 1))) return j;
  }
  return std::nullopt;
}

GeneratedConstraints parse_generated_constraints(std::string_view reply) {
  auto parsed = extract_json_object(reply);
  if (!parsed) throw GenerationParseError("generator reply is not a JSON dictionary");

  GeneratedConstraints out;
  for (const auto& [raw_key, value] : parsed->items()) {
    const auto key = normalize_key(raw_key);
    auto kind = kind_from_string(key);
    if (!kind) {
      spdlog::warn("dropping unknown constraint category '{}'", raw_key);
      continue;
    }
    if (category_of(*kind) != Category::model) {
      spdlog::warn("dropping rule category '{}' from generator output", raw_key);
      continue;
    }
    auto& list = out[*kind];
    auto add = [&](const nlohmann::json& item) {
      if (!item.is_string()) {
        spdlog::warn("dropping non-string constraint under '{}'", key);
        return;
      }
      auto t = text::trim(item.get_ref<const std::string&>());
      if (!t.empty()) list.emplace_back(t);
    };
    if (value.is_array()) {
      for (const auto& item : value) add(item);
    } else if (value.is_string()) {
      add(value);
    } else if (!value.is_null()) {
      throw GenerationParseError("category '" + key + "' must map to a list of strings");
    }
    if (list.empty()) out.erase(*kind);
  }
  return out;
}

JudgeReply parse_judge_reply(std::string_view reply) {
  auto parsed = extract_json_object(reply);
  if (!parsed) throw JudgeProtocolError("judge reply is not a JSON object");
  auto it = parsed->find("answer");
  if (it == parsed->end() || !it->is_string()) throw JudgeProtocolError("judge reply lacks a string 'answer'");

  auto answer = text::ascii_lower(text::strip_punctuation(text::trim(it->get_ref<const std::string&>())));
  JudgeReply out;
  if (answer == "yes") {
    out.satisfied = true;
  } else if (answer != "no") {
    throw JudgeProtocolError("judge answer '" + it->get<std::string>() + "' is not Yes or No");
  }
  auto analysis = parsed->find("analysis");
  if (analysis != parsed->end() && analysis->is_string()) out.analysis = analysis->get<std::string>();
  return out;
}

}  // namespace recast::llm
