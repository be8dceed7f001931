#include <gtest/gtest.h>

#include "recast/errors.hpp"
#include "recast/text_metrics.hpp"
#include "test_support.hpp"

namespace recast::text {
namespace {

struct CountCase {
  const char* text;
  std::size_t words;
  std::size_t sentences;
};

// Frozen from tests/oracles/reference_oracles.py.
TEST(TextMetrics, WordAndSentenceCountsMatchOracle) {
  const CountCase cases[] = {
      {"", 0, 0},
      {"Hi. Bye!", 2, 2},
      {"Wait... what?", 2, 2},
      {"3.14 is pi.", 3, 2},
      {"He said \"hi.\"", 3, 1},
      {"No terminator here", 3, 1},
      {"?!?", 1, 0},
      {"One! Two? Three... four", 4, 4},
  };
  for (const auto& c : cases) {
    EXPECT_EQ(count_words(c.text), c.words) << c.text;
    EXPECT_EQ(count_sentences(c.text), c.sentences) << c.text;
  }
}

TEST(TextMetrics, EmptyProfile) {
  const auto p = analyze("");
  EXPECT_EQ(p.word_count, 0u);
  EXPECT_EQ(p.sentence_count, 0u);
  EXPECT_EQ(p.case_class, CaseClass::uncased);
  EXPECT_FALSE(p.first_word.has_value());
  EXPECT_FALSE(p.last_word.has_value());
  EXPECT_TRUE(p.detected_formats.empty());
}

TEST(TextMetrics, CaseClasses) {
  EXPECT_EQ(classify_case("HELLO 123!"), CaseClass::all_upper);
  EXPECT_EQ(classify_case("hello there"), CaseClass::all_lower);
  EXPECT_EQ(classify_case("Hello"), CaseClass::mixed);
  EXPECT_EQ(classify_case("123 -- 456"), CaseClass::uncased);
  EXPECT_EQ(classify_case("ÉCOLE"), CaseClass::all_upper);  // only ASCII letters count
}

TEST(TextMetrics, FirstAndLastWordsAreStripped) {
  const auto p = analyze("\"Dear friend, ... we achieve HARMONY.\"");
  ASSERT_TRUE(p.first_word && p.last_word);
  EXPECT_EQ(*p.first_word, "Dear");
  EXPECT_EQ(*p.last_word, "HARMONY");
  EXPECT_TRUE(p.has_comma);
}

TEST(TextMetrics, StripPunctuationHandlesTypographicMarks) {
  EXPECT_EQ(strip_punctuation("“quoted”"), "quoted");
  EXPECT_EQ(strip_punctuation("—dash…"), "dash");
  EXPECT_EQ(strip_punctuation("don't"), "don't");
  EXPECT_EQ(strip_punctuation("..."), "");
}

TEST(TextMetrics, FirstComma) {
  EXPECT_EQ(first_comma("a, b"), 1u);
  EXPECT_EQ(first_comma("none here"), std::string_view::npos);
}

TEST(TextMetrics, KeywordCountsMatchOracle) {
  EXPECT_EQ(count_keyword("The Act of 1964 amended the act.", "act"), 2u);
  EXPECT_EQ(count_keyword("cattle", "cat"), 0u);
  EXPECT_EQ(count_keyword("", "x"), 0u);
  EXPECT_EQ(count_keyword("the act... the act... the act", "act"), 3u);
  EXPECT_EQ(count_keyword("The Civil Rights Act of 1964, and the civil rights act.", "The Civil Rights Act of 1964"),
            1u);
}

TEST(TextMetrics, KeywordMatchesAreNonOverlapping) {
  EXPECT_EQ(count_keyword("go go go", "go go"), 1u);
  EXPECT_EQ(count_keyword("go go go go", "go go"), 2u);
}

TEST(TextMetrics, EmptyKeywordIsRejected) {
  EXPECT_THROW(count_keyword("text", ""), InvalidArgument);
  EXPECT_THROW(count_keyword("text", "  ..."), InvalidArgument);
}

TEST(TextMetrics, DetectFormats) {
  EXPECT_EQ(detect_formats("{\"a\": 1}"), std::set<FormatTag>{FormatTag::json});
  EXPECT_EQ(detect_formats("[1, 2]"), std::set<FormatTag>{FormatTag::json});
  EXPECT_TRUE(detect_formats("\"just a string\"").empty());
  EXPECT_EQ(detect_formats("- x\n- y"), std::set<FormatTag>{FormatTag::bulleted_list});
  EXPECT_EQ(detect_formats("* x\n• y"), std::set<FormatTag>{FormatTag::bulleted_list});
  EXPECT_TRUE(detect_formats("- only one").empty());
  EXPECT_EQ(detect_formats("1. a\n2) b"), std::set<FormatTag>{FormatTag::numbered_list});
  EXPECT_EQ(detect_formats("| a | b |\n|---|:-:|\n| 1 | 2 |"), std::set<FormatTag>{FormatTag::markdown_table});
  EXPECT_TRUE(detect_formats("| a | b |\n| 1 | 2 |").empty());
  EXPECT_EQ(detect_formats("## Title\ntext"), std::set<FormatTag>{FormatTag::markdown_heading});
  EXPECT_TRUE(detect_formats("####### too deep").empty());
  EXPECT_TRUE(detect_formats("#hashtag").empty());
  EXPECT_TRUE(detect_formats("plain prose").empty());
  EXPECT_TRUE(detect_formats("-5 degrees\n-3 degrees").empty());
}

TEST(TextMetrics, FormatTagNamesRoundTrip) {
  for (auto tag : {FormatTag::json, FormatTag::bulleted_list, FormatTag::numbered_list, FormatTag::markdown_table,
                   FormatTag::markdown_heading}) {
    EXPECT_EQ(format_tag_from_string(to_string(tag)), tag);
  }
  EXPECT_FALSE(format_tag_from_string("yaml").has_value());
}

class TextProperties : public ::testing::Test {
 protected:
  util::Rng rng{20240601};
};

TEST_F(TextProperties, ProfileInvariantsHold) {
  for (int i = 0; i < 2000; ++i) {
    const auto t = testing::random_text(rng);
    const auto p = analyze(t);
    EXPECT_EQ(p.word_count == 0, split_words(t).empty());
    EXPECT_EQ(p.first_word.has_value(), p.word_count > 0);
    EXPECT_EQ(p.last_word.has_value(), p.word_count > 0);
    bool alpha = false;
    for (char c : t) alpha = alpha || std::isalpha(static_cast<unsigned char>(c));
    EXPECT_EQ(p.case_class == CaseClass::uncased, !alpha);
    EXPECT_EQ(analyze(t).sentence_count, p.sentence_count);
  }
}

TEST_F(TextProperties, WordCountIsAdditive) {
  for (int i = 0; i < 500; ++i) {
    const auto a = testing::random_text(rng);
    const auto b = testing::random_text(rng);
    EXPECT_EQ(count_words(a + " " + b), count_words(a) + count_words(b));
  }
}

TEST_F(TextProperties, SingleTokenKeywordNeverExceedsWordCount) {
  for (int i = 0; i < 500; ++i) {
    const auto t = testing::random_text(rng);
    const auto words = split_words(t);
    if (words.empty()) continue;
    auto kw = strip_punctuation(words[rng.index(words.size())]);
    if (kw.empty()) continue;
    EXPECT_LE(count_keyword(t, kw), count_words(t));
  }
}

TEST_F(TextProperties, JsonDetectionSurvivesReserialization) {
  int seen = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto t = testing::random_text(rng);
    if (!detect_formats(t).count(FormatTag::json)) continue;
    ++seen;
    const auto again = nlohmann::json::parse(std::string(trim(t))).dump();
    EXPECT_TRUE(detect_formats(again).count(FormatTag::json)) << t;
  }
  EXPECT_GT(seen, 10);
}

}  // namespace
}  // namespace recast::text
