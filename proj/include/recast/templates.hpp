#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "recast/constraint.hpp"
#include "recast/util/rng.hpp"

namespace recast {

// A sentence with `{}` placeholders. Placeholder i (left to right) is filled
// with params[arg_order[i]], which lets templates that mention the count
// before the keyword share one parameter order.
struct Template {
  std::string text;
  std::vector<std::size_t> arg_order;
};

using TemplateKey = std::pair<ConstraintKind, std::string>;

// Number of `{}` placeholders in a template string.
std::size_t placeholder_count(std::string_view text);

// Parameter arity of a (rule type, variant) pair, or -1 when the pair is not
// part of the taxonomy.
int variant_arity(ConstraintKind kind, std::string_view rule_variant);

class TemplateRegistry {
 public:
  // Loads the built-in template set. Extra templates can only be added when
  // `allow_extensions` is set.
  explicit TemplateRegistry(bool allow_extensions = false);

  // Shared immutable instance holding only the built-in templates.
  static const TemplateRegistry& builtin();

  void add(ConstraintKind kind, std::string_view rule_variant, Template tmpl);

  bool contains(ConstraintKind kind, std::string_view rule_variant) const;
  const std::vector<Template>& templates(ConstraintKind kind, std::string_view rule_variant) const;
  std::vector<TemplateKey> keys() const;

  // Picks a template uniformly with `rng` and substitutes `params`.
  std::string render(ConstraintKind kind, std::string_view rule_variant, std::span<const ParamValue> params,
                     util::Rng& rng) const;

  // Every pair has >= 3 templates and every template's placeholder count
  // equals the pair's arity. Throws RegistryError otherwise.
  void validate() const;

  // Throws RegistryError naming the first pair in `required` that is absent.
  void require(std::span<const TemplateKey> required) const;

 private:
  bool allow_extensions_;
  std::map<TemplateKey, std::vector<Template>> entries_;
};

std::string format_param(const ParamValue& value);

}  // namespace recast
