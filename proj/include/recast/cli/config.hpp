#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "recast/extract.hpp"
#include "recast/llm/http_provider.hpp"
#include "recast/pipeline.hpp"
#include "recast/templates.hpp"

namespace recast::cli {

inline const std::set<std::string> kRoles = {"generator", "rewriter", "voter", "judge"};

struct ProviderEntry {
  llm::ProviderConfig provider;
  std::set<std::string> roles;
};

struct ExtraTemplate {
  ConstraintKind kind = ConstraintKind::length_words;
  std::string rule_variant;
  Template tmpl;
};

struct ServeConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::filesystem::path> store;
  std::size_t batch_parallelism = 8;
  int threads = 16;
};

struct AppConfig {
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> input;
  std::optional<std::filesystem::path> output;
  std::vector<ProviderEntry> providers;
  extract::ExtractionConfig extraction;
  std::size_t width = 4;
  std::optional<std::size_t> variant_cap;
  pipeline::BenchOptions bench;
  ServeConfig serve;
  std::optional<std::filesystem::path> audit_path;
  bool audit_include_text = false;
  bool allow_extra_templates = false;
  std::vector<ExtraTemplate> extra_templates;
};

// Strict decoder: unknown keys, wrong types and out-of-range values raise
// ConfigError with the offending key path.
AppConfig parse_config(const nlohmann::json& j);
AppConfig load_config(const std::filesystem::path& path);

// Built-in templates plus any configured extras.
std::shared_ptr<const TemplateRegistry> build_registry(const AppConfig& cfg);

// Providers grouped by role. With `mock`, every configured provider is
// replaced by a simulated one of the same name; with `mock` and no
// providers, a default simulated roster is used.
pipeline::Roster build_roster(const AppConfig& cfg, bool mock);

}  // namespace recast::cli
