#include "recast/text_metrics.hpp"

#include <array>
#include <cctype>

#include <json.hpp>

#include "recast/errors.hpp"

namespace recast::text {
namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_terminator(unsigned char c) { return c == '.' || c == '!' || c == '?'; }

// Non-ASCII bytes belong to letters in any realistic response, so they count
// as sentence content.
bool is_content(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

// Typographic punctuation that LLM responses commonly wrap words in.
constexpr std::array<std::string_view, 9> kUnicodePunct = {
    "‘", "’", "“", "”", "–", "—", "…", "«", "»",
};

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::string_view ltrim(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && is_space(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

bool is_bullet_line(std::string_view line) {
  line = ltrim(line);
  std::size_t marker = 0;
  if (line.starts_with("-") || line.starts_with("*")) {
    marker = 1;
  } else if (line.starts_with("•")) {
    marker = std::string_view("•").size();
  } else {
    return false;
  }
  return line.size() > marker && is_space(static_cast<unsigned char>(line[marker]));
}

bool is_numbered_line(std::string_view line) {
  line = ltrim(line);
  std::size_t i = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i == 0 || i >= line.size()) return false;
  if (line[i] != '.' && line[i] != ')') return false;
  return i + 1 < line.size() && is_space(static_cast<unsigned char>(line[i + 1]));
}

bool is_table_separator(std::string_view line) {
  line = trim(line);
  bool pipe = false;
  bool dash = false;
  for (char c : line) {
    if (c == '|') {
      pipe = true;
    } else if (c == '-') {
      dash = true;
    } else if (c != ':' && c != ' ' && c != '\t') {
      return false;
    }
  }
  return pipe && dash;
}

bool is_heading_line(std::string_view line) {
  std::size_t hashes = 0;
  while (hashes < line.size() && line[hashes] == '#') ++hashes;
  return hashes >= 1 && hashes <= 6 && hashes < line.size() && line[hashes] == ' ';
}

bool is_json_container(std::string_view text) {
  std::string_view body = trim(text);
  if (body.empty() || (body.front() != '{' && body.front() != '[')) return false;
  auto value = nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
  return !value.is_discarded() && (value.is_object() || value.is_array());
}

}  // namespace

std::string_view to_string(FormatTag tag) {
  switch (tag) {
    case FormatTag::json: return "json";
    case FormatTag::bulleted_list: return "bulleted_list";
    case FormatTag::numbered_list: return "numbered_list";
    case FormatTag::markdown_table: return "markdown_table";
    case FormatTag::markdown_heading: return "markdown_heading";
  }
  return "unknown";
}

std::optional<FormatTag> format_tag_from_string(std::string_view name) {
  for (auto tag : {FormatTag::json, FormatTag::bulleted_list, FormatTag::numbered_list,
                   FormatTag::markdown_table, FormatTag::markdown_heading}) {
    if (to_string(tag) == name) return tag;
  }
  return std::nullopt;
}

std::string_view display_name(FormatTag tag) {
  switch (tag) {
    case FormatTag::json: return "json";
    case FormatTag::bulleted_list: return "bulleted list";
    case FormatTag::numbered_list: return "numbered list";
    case FormatTag::markdown_table: return "markdown table";
    case FormatTag::markdown_heading: return "markdown heading";
  }
  return "unknown";
}

std::string_view to_string(CaseClass c) {
  switch (c) {
    case CaseClass::all_upper: return "all_upper";
    case CaseClass::all_lower: return "all_lower";
    case CaseClass::mixed: return "mixed";
    case CaseClass::uncased: return "uncased";
  }
  return "unknown";
}

std::vector<std::string_view> split_words(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) words.push_back(text.substr(start, i - start));
  }
  return words;
}

std::size_t count_words(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (char ch : text) {
    bool space = is_space(static_cast<unsigned char>(ch));
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

std::size_t count_sentences(std::string_view text) {
  std::size_t count = 0;
  bool pending = false;
  bool in_run = false;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (is_terminator(c)) {
      if (!in_run && pending) {
        ++count;
        pending = false;
      }
      in_run = true;
      continue;
    }
    in_run = false;
    if (is_content(c)) pending = true;
  }
  if (pending) ++count;
  return count;
}

CaseClass classify_case(std::string_view text) {
  bool upper = false;
  bool lower = false;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (c >= 'A' && c <= 'Z') upper = true;
    if (c >= 'a' && c <= 'z') lower = true;
  }
  if (upper && lower) return CaseClass::mixed;
  if (upper) return CaseClass::all_upper;
  if (lower) return CaseClass::all_lower;
  return CaseClass::uncased;
}

std::size_t first_comma(std::string_view text) { return text.find(','); }

std::string_view strip_punctuation(std::string_view token) {
  bool changed = true;
  while (changed && !token.empty()) {
    changed = false;
    if (std::ispunct(static_cast<unsigned char>(token.front()))) {
      token.remove_prefix(1);
      changed = true;
      continue;
    }
    for (auto p : kUnicodePunct) {
      if (token.starts_with(p)) {
        token.remove_prefix(p.size());
        changed = true;
        break;
      }
    }
  }
  changed = true;
  while (changed && !token.empty()) {
    changed = false;
    if (std::ispunct(static_cast<unsigned char>(token.back()))) {
      token.remove_suffix(1);
      changed = true;
      continue;
    }
    for (auto p : kUnicodePunct) {
      if (token.ends_with(p)) {
        token.remove_suffix(p.size());
        changed = true;
        break;
      }
    }
  }
  return token;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::size_t count_keyword(std::string_view text, std::string_view keyword) {
  std::vector<std::string> needle;
  for (auto w : split_words(keyword)) {
    auto stripped = strip_punctuation(w);
    if (!stripped.empty()) needle.push_back(ascii_lower(stripped));
  }
  if (needle.empty()) throw InvalidArgument("count_keyword: keyword must contain at least one word");

  std::vector<std::string> hay;
  for (auto w : split_words(text)) hay.push_back(ascii_lower(strip_punctuation(w)));

  std::size_t hits = 0;
  std::size_t i = 0;
  while (i + needle.size() <= hay.size()) {
    bool match = true;
    for (std::size_t k = 0; k < needle.size(); ++k) {
      if (hay[i + k] != needle[k]) {
        match = false;
        break;
      }
    }
    if (match) {
      ++hits;
      i += needle.size();
    } else {
      ++i;
    }
  }
  return hits;
}

std::set<FormatTag> detect_formats(std::string_view text) {
  std::set<FormatTag> tags;
  if (is_json_container(text)) tags.insert(FormatTag::json);

  auto lines = split_lines(text);
  std::size_t bullets = 0;
  std::size_t numbered = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = lines[i];
    if (is_bullet_line(line)) ++bullets;
    if (is_numbered_line(line)) ++numbered;
    if (is_heading_line(line)) tags.insert(FormatTag::markdown_heading);
    if (i + 1 < lines.size() && line.find('|') != std::string_view::npos && !is_table_separator(line) &&
        is_table_separator(lines[i + 1])) {
      tags.insert(FormatTag::markdown_table);
    }
  }
  if (bullets >= 2) tags.insert(FormatTag::bulleted_list);
  if (numbered >= 2) tags.insert(FormatTag::numbered_list);
  return tags;
}

TextProfile analyze(std::string_view text) {
  TextProfile profile;
  auto words = split_words(text);
  profile.word_count = words.size();
  profile.sentence_count = count_sentences(text);
  profile.has_comma = first_comma(text) != std::string_view::npos;
  profile.case_class = classify_case(text);
  if (!words.empty()) {
    profile.first_word = std::string(strip_punctuation(words.front()));
    profile.last_word = std::string(strip_punctuation(words.back()));
  }
  profile.detected_formats = detect_formats(text);
  return profile;
}

}  // namespace recast::text
