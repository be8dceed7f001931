#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace recast::text {

enum class FormatTag { json, bulleted_list, numbered_list, markdown_table, markdown_heading };

enum class CaseClass { all_upper, all_lower, mixed, uncased };

std::string_view to_string(FormatTag tag);
std::optional<FormatTag> format_tag_from_string(std::string_view name);
// Human-readable form used when a tag is rendered into a constraint sentence.
std::string_view display_name(FormatTag tag);

std::string_view to_string(CaseClass c);

struct TextProfile {
  std::size_t word_count = 0;
  std::size_t sentence_count = 0;
  bool has_comma = false;
  CaseClass case_class = CaseClass::uncased;
  std::optional<std::string> first_word;
  std::optional<std::string> last_word;
  std::set<FormatTag> detected_formats;
};

// Word = maximal run of non-whitespace bytes. Sentence = maximal run of
// '.', '!' or '?' closing at least one alphanumeric character, plus one
// trailing unterminated sentence. Letter case only considers ASCII letters.
TextProfile analyze(std::string_view text);

std::vector<std::string_view> split_words(std::string_view text);
std::size_t count_words(std::string_view text);
std::size_t count_sentences(std::string_view text);
CaseClass classify_case(std::string_view text);

// Byte offset of the first ',' or npos.
std::size_t first_comma(std::string_view text);

// Removes leading and trailing punctuation (ASCII plus common typographic
// quotes, dashes and ellipsis) from a token.
std::string_view strip_punctuation(std::string_view token);

std::string ascii_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
std::string_view trim(std::string_view s);

// Case-insensitive, non-overlapping count of `keyword` as a contiguous
// sequence of punctuation-stripped whitespace tokens. Throws
// InvalidArgument when the keyword has no content.
std::size_t count_keyword(std::string_view text, std::string_view keyword);

std::set<FormatTag> detect_formats(std::string_view text);

}  // namespace recast::text
