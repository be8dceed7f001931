#include "recast/cli/config.hpp"

#include <fstream>

#include "recast/errors.hpp"
#include "recast/llm/mock_provider.hpp"

namespace recast::cli {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config: '" + path + "' " + what);
}

void check_object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(path, "must be an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) fail(path.empty() ? key : path + "." + key, "is not a recognized key");
  }
}

std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

std::int64_t get_int(const json& j, const std::string& path, std::int64_t min) {
  if (!j.is_number_integer()) fail(path, "must be an integer");
  const auto v = j.get<std::int64_t>();
  if (v < min) fail(path, "must be >= " + std::to_string(min));
  return v;
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "must be a string");
  return j.get<std::string>();
}

bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "must be a boolean");
  return j.get<bool>();
}

std::vector<std::string> get_strings(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "must be an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_string(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

ProviderEntry parse_provider(const json& j, const std::string& path) {
  check_object(j, path,
               {"name", "endpoint", "model", "api_key_env", "max_in_flight", "timeout_ms", "retry",
                "requests_per_second", "roles"});
  ProviderEntry e;
  auto& p = e.provider;
  if (!j.contains("name")) fail(join(path, "name"), "is required");
  p.name = get_string(j["name"], join(path, "name"));
  if (p.name.empty()) fail(join(path, "name"), "must not be empty");
  if (j.contains("endpoint")) p.endpoint = get_string(j["endpoint"], join(path, "endpoint"));
  p.model_id = j.contains("model") ? get_string(j["model"], join(path, "model")) : p.name;
  if (j.contains("api_key_env")) p.api_key_env = get_string(j["api_key_env"], join(path, "api_key_env"));
  if (j.contains("max_in_flight")) {
    p.max_in_flight = static_cast<int>(get_int(j["max_in_flight"], join(path, "max_in_flight"), 1));
  }
  if (j.contains("timeout_ms")) p.timeout = std::chrono::milliseconds(get_int(j["timeout_ms"], join(path, "timeout_ms"), 1));
  if (j.contains("retry")) {
    const auto rp = join(path, "retry");
    check_object(j["retry"], rp, {"attempts", "backoff_ms"});
    if (j["retry"].contains("attempts")) {
      p.retry.attempts = static_cast<int>(get_int(j["retry"]["attempts"], join(rp, "attempts"), 1));
    }
    if (j["retry"].contains("backoff_ms")) {
      p.retry.backoff_base = std::chrono::milliseconds(get_int(j["retry"]["backoff_ms"], join(rp, "backoff_ms"), 0));
    }
  }
  if (j.contains("requests_per_second") && !j["requests_per_second"].is_null()) {
    const auto& v = j["requests_per_second"];
    if (!v.is_number() || v.get<double>() <= 0) fail(join(path, "requests_per_second"), "must be a positive number");
    p.requests_per_second = v.get<double>();
  }
  if (!j.contains("roles")) fail(join(path, "roles"), "is required");
  for (const auto& role : get_strings(j["roles"], join(path, "roles"))) {
    if (!kRoles.count(role)) fail(join(path, "roles"), "has unknown role '" + role + "'");
    e.roles.insert(role);
  }
  return e;
}

void parse_extraction(const json& j, AppConfig& cfg) {
  check_object(j, "extraction", {"max_keywords", "enabled", "extra_stopwords"});
  if (j.contains("max_keywords")) {
    cfg.extraction.max_keywords = static_cast<std::size_t>(get_int(j["max_keywords"], "extraction.max_keywords", 0));
  }
  if (j.contains("enabled")) {
    cfg.extraction.enabled_extractors.clear();
    for (const auto& name : get_strings(j["enabled"], "extraction.enabled")) {
      auto kind = kind_from_string(name);
      if (!kind || category_of(*kind) != Category::rule) {
        fail("extraction.enabled", "has '" + name + "', which is not a rule-based type");
      }
      cfg.extraction.enabled_extractors.insert(*kind);
    }
  }
  if (j.contains("extra_stopwords")) {
    for (const auto& w : get_strings(j["extra_stopwords"], "extraction.extra_stopwords")) {
      cfg.extraction.stopwords.insert(w);
    }
  }
}

void parse_templates(const json& j, AppConfig& cfg) {
  check_object(j, "templates", {"allow_extra", "extra"});
  if (j.contains("allow_extra")) cfg.allow_extra_templates = get_bool(j["allow_extra"], "templates.allow_extra");
  if (!j.contains("extra")) return;
  const auto& extra = j["extra"];
  if (!extra.is_array()) fail("templates.extra", "must be an array");
  for (std::size_t i = 0; i < extra.size(); ++i) {
    const auto path = "templates.extra[" + std::to_string(i) + "]";
    check_object(extra[i], path, {"type", "variant", "text", "arg_order"});
    ExtraTemplate t;
    if (!extra[i].contains("type")) fail(join(path, "type"), "is required");
    const auto type = get_string(extra[i]["type"], join(path, "type"));
    auto kind = kind_from_string(type);
    if (!kind || category_of(*kind) != Category::rule) fail(join(path, "type"), "must be a rule-based type");
    t.kind = *kind;
    t.rule_variant =
        extra[i].contains("variant") ? get_string(extra[i]["variant"], join(path, "variant")) : std::string("default");
    if (!extra[i].contains("text")) fail(join(path, "text"), "is required");
    t.tmpl.text = get_string(extra[i]["text"], join(path, "text"));
    if (extra[i].contains("arg_order")) {
      const auto& order = extra[i]["arg_order"];
      if (!order.is_array()) fail(join(path, "arg_order"), "must be an array");
      for (const auto& o : order) t.tmpl.arg_order.push_back(static_cast<std::size_t>(get_int(o, join(path, "arg_order"), 0)));
    }
    cfg.extra_templates.push_back(std::move(t));
  }
}

}  // namespace

AppConfig parse_config(const json& j) {
  check_object(j, "", {"seed", "input", "output", "providers", "extraction", "pipeline", "benchmark", "serve", "audit",
                       "templates"});
  AppConfig cfg;
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<std::int64_t>() >= 0)) {
      fail("seed", "must be a non-negative integer");
    }
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("input")) cfg.input = get_string(j["input"], "input");
  if (j.contains("output")) cfg.output = get_string(j["output"], "output");

  if (j.contains("providers")) {
    const auto& list = j["providers"];
    if (!list.is_array()) fail("providers", "must be an array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < list.size(); ++i) {
      auto e = parse_provider(list[i], "providers[" + std::to_string(i) + "]");
      if (!names.insert(e.provider.name).second) fail("providers", "repeats the name '" + e.provider.name + "'");
      cfg.providers.push_back(std::move(e));
    }
  }
  if (j.contains("extraction")) parse_extraction(j["extraction"], cfg);

  if (j.contains("pipeline")) {
    const auto& p = j["pipeline"];
    check_object(p, "pipeline", {"width", "variant_cap"});
    if (p.contains("width")) cfg.width = static_cast<std::size_t>(get_int(p["width"], "pipeline.width", 1));
    if (p.contains("variant_cap") && !p["variant_cap"].is_null()) {
      const auto cap = get_int(p["variant_cap"], "pipeline.variant_cap", 1);
      if (cap != 5 && cap != 10 && cap != 15) fail("pipeline.variant_cap", "must be 5, 10, 15 or null");
      cfg.variant_cap = static_cast<std::size_t>(cap);
    }
  }

  if (j.contains("benchmark")) {
    const auto& b = j["benchmark"];
    check_object(b, "benchmark", {"min_constraints", "sample_size", "level_sizes", "seed"});
    if (b.contains("min_constraints")) {
      cfg.bench.min_constraints = static_cast<std::size_t>(get_int(b["min_constraints"], "benchmark.min_constraints", 1));
    }
    if (b.contains("sample_size")) {
      cfg.bench.sample_size = static_cast<std::size_t>(get_int(b["sample_size"], "benchmark.sample_size", 1));
    }
    if (b.contains("level_sizes")) {
      const auto& sizes = b["level_sizes"];
      if (!sizes.is_array() || sizes.size() != 3) fail("benchmark.level_sizes", "must be an array of three sizes");
      cfg.bench.level_sizes.clear();
      for (const auto& s : sizes) cfg.bench.level_sizes.push_back(static_cast<std::size_t>(get_int(s, "benchmark.level_sizes", 1)));
    }
    if (b.contains("seed")) cfg.bench.rng_seed = static_cast<std::uint64_t>(get_int(b["seed"], "benchmark.seed", 0));
  }

  if (j.contains("serve")) {
    const auto& s = j["serve"];
    check_object(s, "serve", {"host", "port", "store", "batch_parallelism", "threads"});
    if (s.contains("host")) cfg.serve.host = get_string(s["host"], "serve.host");
    if (s.contains("port")) {
      const auto port = get_int(s["port"], "serve.port", 0);
      if (port > 65535) fail("serve.port", "must be <= 65535");
      cfg.serve.port = static_cast<int>(port);
    }
    if (s.contains("store")) cfg.serve.store = get_string(s["store"], "serve.store");
    if (s.contains("batch_parallelism")) {
      cfg.serve.batch_parallelism = static_cast<std::size_t>(get_int(s["batch_parallelism"], "serve.batch_parallelism", 1));
    }
    if (s.contains("threads")) cfg.serve.threads = static_cast<int>(get_int(s["threads"], "serve.threads", 1));
  }

  if (j.contains("audit")) {
    const auto& a = j["audit"];
    check_object(a, "audit", {"path", "include_text"});
    if (a.contains("path")) cfg.audit_path = get_string(a["path"], "audit.path");
    if (a.contains("include_text")) cfg.audit_include_text = get_bool(a["include_text"], "audit.include_text");
  }
  if (j.contains("templates")) parse_templates(j["templates"], cfg);

  if (!cfg.allow_extra_templates && !cfg.extra_templates.empty()) {
    fail("templates.extra", "requires templates.allow_extra = true");
  }
  try {
    cfg.bench.validate();
    cfg.extraction.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config file " + path.string() + " is not valid JSON");
  return parse_config(j);
}

std::shared_ptr<const TemplateRegistry> build_registry(const AppConfig& cfg) {
  if (cfg.extra_templates.empty()) {
    return std::shared_ptr<const TemplateRegistry>(&TemplateRegistry::builtin(), [](const TemplateRegistry*) {});
  }
  auto reg = std::make_shared<TemplateRegistry>(true);
  try {
    for (const auto& t : cfg.extra_templates) reg->add(t.kind, t.rule_variant, t.tmpl);
    reg->validate();
  } catch (const RegistryError& e) {
    throw ConfigError(std::string("config: templates.extra: ") + e.what());
  }
  return reg;
}

pipeline::Roster build_roster(const AppConfig& cfg, bool mock) {
  pipeline::Roster roster;
  std::shared_ptr<llm::AuditLog> audit;
  if (cfg.audit_path && !mock) audit = std::make_shared<llm::AuditLog>(*cfg.audit_path, cfg.audit_include_text);

  auto add = [&](const std::shared_ptr<llm::ChatProvider>& p, const std::set<std::string>& roles) {
    if (roles.count("generator")) roster.generators.push_back(p);
    if (roles.count("rewriter")) roster.rewriters.push_back(p);
    if (roles.count("voter")) roster.voters.push_back(p);
    if (roles.count("judge") && !roster.judge) roster.judge = p;
  };

  if (mock && cfg.providers.empty()) {
    for (const char* name : {"sim-a", "sim-b", "sim-c", "sim-d"}) {
      add(std::make_shared<llm::SimulatedProvider>(name), {"generator", "rewriter", "voter"});
    }
    add(std::make_shared<llm::SimulatedProvider>("sim-judge"), {"judge"});
    return roster;
  }
  for (const auto& e : cfg.providers) {
    std::shared_ptr<llm::ChatProvider> p;
    if (mock) {
      p = std::make_shared<llm::SimulatedProvider>(e.provider.name);
    } else {
      p = std::make_shared<llm::HttpChatProvider>(e.provider, audit);
    }
    add(p, e.roles);
  }
  return roster;
}

}  // namespace recast::cli
