#include "recast/templates.hpp"

#include "recast/errors.hpp"

namespace recast {
namespace {

struct BuiltinTemplate {
  ConstraintKind kind;
  std::string_view rule_variant;
  std::string_view text;
  std::vector<std::size_t> arg_order;
};

using K = ConstraintKind;

const std::vector<BuiltinTemplate>& builtin_templates() {
  static const std::vector<BuiltinTemplate> kTemplates = {
      // Word-level length.
      {K::length_words, variant::kApproximate, "Use around {} words.", {0}},
      {K::length_words, variant::kApproximate, "Limit your response to approximately {} words.", {0}},
      {K::length_words, variant::kApproximate, "Aim for around {} words in your answer.", {0}},
      {K::length_words, variant::kApproximate, "Keep your answer close to {} words.", {0}},
      {K::length_words, variant::kApproximate, "Provide a detailed response of approximately {} words.", {0}},
      {K::length_words, variant::kApproximate, "Your answer should be about {} words, plus or minus 20%.", {0}},
      {K::length_words, variant::kApproximate, "Aim for approximately {} words.", {0}},
      {K::length_words, variant::kApproximate, "Keep your answer around {} words.", {0}},
      {K::length_words, variant::kBelow, "Keep the answer under {} words.", {0}},
      {K::length_words, variant::kBelow, "No more than {} words.", {0}},
      {K::length_words, variant::kBelow, "Do not exceed {} words.", {0}},
      {K::length_words, variant::kBelow, "Strictly limit the answer to {} words.", {0}},
      {K::length_words, variant::kBelow, "Stay within {} words.", {0}},
      {K::length_words, variant::kBelow, "{} words maximum.", {0}},
      {K::length_words, variant::kBelow, "Use fewer than {} words.", {0}},
      {K::length_words, variant::kBelow, "Cap your response at {} words.", {0}},
      {K::length_words, variant::kBelow, "Answer in {} words or less.", {0}},
      {K::length_words, variant::kRange, "Limit the response to {}–{} words.", {0, 1}},
      {K::length_words, variant::kRange, "Respond in roughly {} to {} words.", {0, 1}},
      {K::length_words, variant::kRange, "Target a response between {} and {} words.", {0, 1}},
      {K::length_words, variant::kRange, "Answer in approximately {}–{} words.", {0, 1}},
      {K::length_words, variant::kRange, "Keep the response between {} and {} words.", {0, 1}},
      {K::length_words, variant::kRange, "Aim for {} to {} words in your reply.", {0, 1}},
      {K::length_words, variant::kRange, "Limit your answer to a length of {}–{} words.", {0, 1}},
      {K::length_words, variant::kRange, "Adhere to a word count of {} to {}.", {0, 1}},
      // Sentence-level length.
      {K::length_sentences, variant::kExact, "Provide exactly {} sentences in your answer.", {0}},
      {K::length_sentences, variant::kExact, "Use exactly {} sentences in your response.", {0}},
      {K::length_sentences, variant::kExact, "Your response must contain exactly {} sentences.", {0}},
      {K::length_sentences, variant::kExact, "Strictly use {} sentences in your answer.", {0}},
      {K::length_sentences, variant::kExact, "Adhere to a limit of exactly {} sentences.", {0}},
      {K::length_sentences, variant::kExact, "Structure your answer in exactly {} sentences.", {0}},
      {K::length_sentences, variant::kExact, "Craft a {}-sentence response.", {0}},
      {K::length_sentences, variant::kExact, "The answer shall comprise exactly {} sentences.", {0}},
      {K::length_sentences, variant::kApproximate, "Aim for approximately {} sentences (±2).", {0}},
      {K::length_sentences, variant::kApproximate, "Your answer should be around {} sentences, give or take a few.", {0}},
      {K::length_sentences, variant::kApproximate, "Target around {} sentences in your response.", {0}},
      {K::length_sentences, variant::kApproximate, "Keep your answer to roughly {} sentences.", {0}},
      {K::length_sentences, variant::kApproximate, "Respond with approximately {} sentences.", {0}},
      {K::length_sentences, variant::kApproximate, "The response should consist of approximately {} sentences.", {0}},
      {K::length_sentences, variant::kBelow, "Limit your response to {} sentences.", {0}},
      {K::length_sentences, variant::kBelow, "Use no more than {} sentences.", {0}},
      {K::length_sentences, variant::kBelow, "Do not exceed {} sentences in your response.", {0}},
      {K::length_sentences, variant::kBelow, "Cap your reply at {} sentences.", {0}},
      {K::length_sentences, variant::kBelow, "Stay within {} sentences.", {0}},
      {K::length_sentences, variant::kBelow, "Adhere to a maximum of {} sentences.", {0}},
      {K::length_sentences, variant::kRange, "Keep your answer to {}–{} sentences.", {0, 1}},
      {K::length_sentences, variant::kRange, "Respond in {} to {} sentences.", {0, 1}},
      {K::length_sentences, variant::kRange, "Provide a response of {}–{} sentences.", {0, 1}},
      {K::length_sentences, variant::kRange, "Aim for a response between {} and {} sentences.", {0, 1}},
      {K::length_sentences, variant::kRange, "Keep your reply within the range of {}–{} sentences.", {0, 1}},
      {K::length_sentences, variant::kRange, "The response should comprise {}–{} sentences.", {0, 1}},
      {K::length_sentences, variant::kRange, "Maintain a sentence count between {} and {}.", {0, 1}},
      {K::length_sentences, variant::kRange, "Provide an answer consisting of roughly {} to {} sentences.", {0, 1}},
      // Format.
      {K::format, variant::kDefault, "Respond in \"{}\" format.", {0}},
      {K::format, variant::kDefault, "Format your answer as valid \"{}\".", {0}},
      {K::format, variant::kDefault, "Provide the output strictly in \"{}\" format.", {0}},
      // Keyword; params are (keyword, count).
      {K::keyword, variant::kDefault, "Include the keywords \"{}\" {} times in your response.", {0, 1}},
      {K::keyword, variant::kDefault, "Your response must feature \"{}\" {} times.", {0, 1}},
      {K::keyword, variant::kDefault, "Use \"{}\" {} times when responding.", {0, 1}},
      {K::keyword, variant::kDefault, "Ensure your answer contains {} \"{}\".", {1, 0}},
      {K::keyword, variant::kDefault, "Incorporate {} \"{}\" into your answer.", {1, 0}},
      // Position-specific strings.
      {K::start_with, variant::kDefault, "Begin your response with the word \"{}\".", {0}},
      {K::start_with, variant::kDefault, "Start your answer with \"{}\".", {0}},
      {K::start_with, variant::kDefault, "Open your reply using \"{}\" as the first word.", {0}},
      {K::end_with, variant::kDefault, "End your response with the word \"{}\".", {0}},
      {K::end_with, variant::kDefault, "Make sure the last word of your reply is \"{}\".", {0}},
      {K::end_with, variant::kDefault, "Your response must terminate with \"{}\".", {0}},
      // Letter case.
      {K::all_upper, variant::kDefault, "Write your entire response in UPPERCASE.", {}},
      {K::all_upper, variant::kDefault, "Use ONLY CAPITAL LETTERS in your answer.", {}},
      {K::all_upper, variant::kDefault, "Type everything in CAPS LOCK.", {}},
      {K::all_lower, variant::kDefault, "Write your entire response in lowercase.", {}},
      {K::all_lower, variant::kDefault, "Use only small letters in your answer.", {}},
      {K::all_lower, variant::kDefault, "Avoid any capital letters in your reply.", {}},
      // Punctuation.
      {K::no_commas, variant::kDefault, "Do not use any commas in your response.", {}},
      {K::no_commas, variant::kDefault, "Avoid commas entirely in your answer.", {}},
      {K::no_commas, variant::kDefault, "Exclude all commas from your output.", {}},
  };
  return kTemplates;
}

std::string describe_key(ConstraintKind kind, std::string_view rule_variant) {
  return std::string(to_string(kind)) + "/" + std::string(rule_variant);
}

}  // namespace

std::size_t placeholder_count(std::string_view text) {
  std::size_t count = 0;
  for (std::size_t pos = text.find("{}"); pos != std::string_view::npos; pos = text.find("{}", pos + 2)) ++count;
  return count;
}

int variant_arity(ConstraintKind kind, std::string_view v) {
  using namespace variant;
  switch (kind) {
    case K::length_words:
      if (v == kApproximate || v == kBelow) return 1;
      if (v == kRange) return 2;
      return -1;
    case K::length_sentences:
      if (v == kExact || v == kApproximate || v == kBelow) return 1;
      if (v == kRange) return 2;
      return -1;
    case K::format:
    case K::start_with:
    case K::end_with:
      return v == kDefault ? 1 : -1;
    case K::keyword:
      return v == kDefault ? 2 : -1;
    case K::all_upper:
    case K::all_lower:
    case K::no_commas:
      return v == kDefault ? 0 : -1;
    default:
      return -1;
  }
}

std::string format_param(const ParamValue& value) {
  if (const auto* i = std::get_if<std::int64_t>(&value)) return std::to_string(*i);
  return std::get<std::string>(value);
}

TemplateRegistry::TemplateRegistry(bool allow_extensions) : allow_extensions_(allow_extensions) {
  for (const auto& t : builtin_templates()) {
    entries_[TemplateKey{t.kind, std::string(t.rule_variant)}].push_back(Template{std::string(t.text), t.arg_order});
  }
}

const TemplateRegistry& TemplateRegistry::builtin() {
  static const TemplateRegistry registry = [] {
    TemplateRegistry r;
    r.validate();
    return r;
  }();
  return registry;
}

void TemplateRegistry::add(ConstraintKind kind, std::string_view rule_variant, Template tmpl) {
  if (!allow_extensions_) throw RegistryError("registry extensions are disabled");
  const int arity = variant_arity(kind, rule_variant);
  if (arity < 0) throw RegistryError("unknown template key " + describe_key(kind, rule_variant));
  if (placeholder_count(tmpl.text) != static_cast<std::size_t>(arity) || tmpl.arg_order.size() != static_cast<std::size_t>(arity)) {
    throw RegistryError("template '" + tmpl.text + "' does not match arity " + std::to_string(arity) + " of " +
                        describe_key(kind, rule_variant));
  }
  for (auto idx : tmpl.arg_order) {
    if (idx >= static_cast<std::size_t>(arity)) throw RegistryError("template argument index out of range");
  }
  entries_[TemplateKey{kind, std::string(rule_variant)}].push_back(std::move(tmpl));
}

bool TemplateRegistry::contains(ConstraintKind kind, std::string_view rule_variant) const {
  return entries_.find(TemplateKey{kind, std::string(rule_variant)}) != entries_.end();
}

const std::vector<Template>& TemplateRegistry::templates(ConstraintKind kind, std::string_view rule_variant) const {
  auto it = entries_.find(TemplateKey{kind, std::string(rule_variant)});
  if (it == entries_.end()) throw RegistryError("no templates registered for " + describe_key(kind, rule_variant));
  return it->second;
}

std::vector<TemplateKey> TemplateRegistry::keys() const {
  std::vector<TemplateKey> out;
  out.reserve(entries_.size());
  for (const auto& [key, _] : entries_) out.push_back(key);
  return out;
}

std::string TemplateRegistry::render(ConstraintKind kind, std::string_view rule_variant,
                                     std::span<const ParamValue> params, util::Rng& rng) const {
  const auto& candidates = templates(kind, rule_variant);
  const int arity = variant_arity(kind, rule_variant);
  if (params.size() != static_cast<std::size_t>(arity)) {
    throw InvalidArgument("render " + describe_key(kind, rule_variant) + ": expected " + std::to_string(arity) +
                          " parameters, got " + std::to_string(params.size()));
  }
  const Template& chosen = candidates[rng.index(candidates.size())];

  std::string out;
  std::size_t slot = 0;
  std::string_view text = chosen.text;
  std::size_t pos = 0;
  for (std::size_t hit = text.find("{}"); hit != std::string_view::npos; hit = text.find("{}", pos)) {
    out.append(text.substr(pos, hit - pos));
    out += format_param(params[chosen.arg_order[slot++]]);
    pos = hit + 2;
  }
  out.append(text.substr(pos));
  return out;
}

void TemplateRegistry::validate() const {
  for (const auto& [key, list] : entries_) {
    const auto& [kind, v] = key;
    const int arity = variant_arity(kind, v);
    if (arity < 0) throw RegistryError("registry holds unknown key " + describe_key(kind, v));
    if (list.size() < 3) throw RegistryError(describe_key(kind, v) + " has fewer than 3 templates");
    for (const auto& t : list) {
      if (placeholder_count(t.text) != static_cast<std::size_t>(arity) ||
          t.arg_order.size() != static_cast<std::size_t>(arity)) {
        throw RegistryError("template '" + t.text + "' does not match arity of " + describe_key(kind, v));
      }
    }
  }
}

void TemplateRegistry::require(std::span<const TemplateKey> required) const {
  for (const auto& [kind, v] : required) {
    if (!contains(kind, v)) throw RegistryError("registry is missing templates for " + describe_key(kind, v));
  }
}

}  // namespace recast
