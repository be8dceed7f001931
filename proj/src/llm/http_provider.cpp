#include "recast/llm/http_provider.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "recast/errors.hpp"
#include "recast/util/hash.hpp"

namespace recast::llm {
namespace {

constexpr const char* kDefaultPath = "/v1/chat/completions";

std::string describe_transport(httplib::Error err) { return httplib::to_string(err); }

bool is_timeout(httplib::Error err) {
  return err == httplib::Error::Read || err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout;
}

std::string extract_content(const std::string& body) {
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw GatewayError(GatewayError::Kind::malformed_payload, "provider reply is not a JSON object");
  }
  auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) {
    throw GatewayError(GatewayError::Kind::malformed_payload, "provider reply has no choices");
  }
  const auto& first = (*choices)[0];
  if (!first.is_object() || !first.contains("message") || !first["message"].is_object() ||
      !first["message"].contains("content") || !first["message"]["content"].is_string()) {
    throw GatewayError(GatewayError::Kind::malformed_payload, "provider reply lacks choices[0].message.content");
  }
  return first["message"]["content"].get<std::string>();
}

}  // namespace

void ProviderConfig::validate() const {
  if (name.empty()) throw ConfigError("provider: name is required");
  if (endpoint.empty()) throw ConfigError("provider '" + name + "': endpoint is required");
  if (max_in_flight < 1) throw ConfigError("provider '" + name + "': max_in_flight must be >= 1");
  if (retry.attempts < 1) throw ConfigError("provider '" + name + "': retry.attempts must be >= 1");
  if (requests_per_second && *requests_per_second <= 0) {
    throw ConfigError("provider '" + name + "': requests_per_second must be > 0");
  }
}

ProviderConfig provider_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("provider entry must be an object");
  ProviderConfig cfg;
  try {
    cfg.name = j.at("name").get<std::string>();
    cfg.endpoint = j.value("endpoint", std::string{});
    cfg.model_id = j.value("model", cfg.name);
    cfg.api_key_env = j.value("api_key_env", std::string{});
    cfg.max_in_flight = j.value("max_in_flight", cfg.max_in_flight);
    cfg.timeout = std::chrono::milliseconds(j.value("timeout_ms", static_cast<long>(cfg.timeout.count())));
    if (auto r = j.find("retry"); r != j.end()) {
      cfg.retry.attempts = r->value("attempts", cfg.retry.attempts);
      cfg.retry.backoff_base =
          std::chrono::milliseconds(r->value("backoff_ms", static_cast<long>(cfg.retry.backoff_base.count())));
    }
    if (auto rps = j.find("requests_per_second"); rps != j.end() && !rps->is_null()) {
      cfg.requests_per_second = rps->get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("provider entry: ") + e.what());
  }
  return cfg;
}

nlohmann::json to_json(const ProviderConfig& cfg) {
  nlohmann::json j = {{"name", cfg.name},
                      {"endpoint", cfg.endpoint},
                      {"model", cfg.model_id},
                      {"api_key_env", cfg.api_key_env},
                      {"max_in_flight", cfg.max_in_flight},
                      {"timeout_ms", cfg.timeout.count()},
                      {"retry", {{"attempts", cfg.retry.attempts}, {"backoff_ms", cfg.retry.backoff_base.count()}}}};
  if (cfg.requests_per_second) j["requests_per_second"] = *cfg.requests_per_second;
  return j;
}

AuditLog::AuditLog(const std::filesystem::path& path, bool include_text)
    : out_(path, std::ios::app), include_text_(include_text) {
  if (!out_) throw Error("cannot open audit log " + path.string());
}

void AuditLog::record(const std::string& provider, const ChatRequest& request, const std::string& reply, int status,
                      int attempt, std::chrono::milliseconds latency) {
  nlohmann::json line = {{"provider", provider},
                         {"kind", to_string(request.kind)},
                         {"request_sha256", content_hash(request.messages)},
                         {"response_sha256", util::sha256_hex(reply)},
                         {"status", status},
                         {"attempt", attempt},
                         {"latency_ms", latency.count()}};
  if (include_text_) {
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : request.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    line["messages"] = std::move(msgs);
    line["response"] = reply;
  }
  append(line);
}

void AuditLog::record_failure(const std::string& provider, const ChatRequest& request, const std::string& error,
                              int attempt) {
  append({{"provider", provider},
          {"kind", to_string(request.kind)},
          {"request_sha256", content_hash(request.messages)},
          {"error", error},
          {"attempt", attempt}});
}

void AuditLog::append(const nlohmann::json& line) {
  std::lock_guard lock(mu_);
  out_ << line.dump() << '\n';
  out_.flush();
}

nlohmann::json chat_request_body(const std::string& model_id, const ChatRequest& request) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : request.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  nlohmann::json body = {{"model", model_id},
                         {"messages", std::move(msgs)},
                         {"temperature", request.settings.temperature},
                         {"top_p", request.settings.top_p},
                         {"n", request.settings.n}};
  if (request.settings.max_tokens) body["max_tokens"] = *request.settings.max_tokens;
  return body;
}

HttpChatProvider::HttpChatProvider(ProviderConfig cfg, std::shared_ptr<AuditLog> audit)
    : cfg_(std::move(cfg)), audit_(std::move(audit)) {
  cfg_.validate();
  auto scheme = cfg_.endpoint.find("://");
  if (scheme == std::string::npos) throw ConfigError("provider '" + cfg_.name + "': endpoint must be a URL");
  auto slash = cfg_.endpoint.find('/', scheme + 3);
  if (slash == std::string::npos) {
    base_ = cfg_.endpoint;
    path_ = kDefaultPath;
  } else {
    base_ = cfg_.endpoint.substr(0, slash);
    path_ = cfg_.endpoint.substr(slash);
  }
}

int HttpChatProvider::peak_in_flight() const {
  std::lock_guard lock(mu_);
  return peak_;
}

void HttpChatProvider::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return in_flight_ < cfg_.max_in_flight; });
  ++in_flight_;
  peak_ = std::max(peak_, in_flight_);
}

void HttpChatProvider::release() {
  {
    std::lock_guard lock(mu_);
    --in_flight_;
  }
  cv_.notify_one();
}

void HttpChatProvider::pace() {
  if (!cfg_.requests_per_second) return;
  const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(1.0 / *cfg_.requests_per_second));
  std::chrono::steady_clock::time_point start;
  {
    std::lock_guard lock(mu_);
    start = std::max(std::chrono::steady_clock::now(), next_start_);
    next_start_ = start + interval;
  }
  std::this_thread::sleep_until(start);
}

std::string HttpChatProvider::complete(const ChatRequest& request) {
  if (request.messages.empty()) throw InvalidArgument("complete: messages must not be empty");

  httplib::Headers headers;
  if (!cfg_.api_key_env.empty()) {
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw GatewayError(GatewayError::Kind::auth,
                         "provider '" + cfg_.name + "': environment variable " + cfg_.api_key_env + " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const auto body = chat_request_body(cfg_.model_id, request).dump();

  acquire();
  struct Release {
    HttpChatProvider* self;
    ~Release() { self->release(); }
  } guard{this};

  std::string last_error;
  GatewayError::Kind last_kind = GatewayError::Kind::transport;
  int last_status = 0;
  for (int attempt = 1; attempt <= cfg_.retry.attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(cfg_.retry.backoff_base * (1LL << (attempt - 2)));
    }
    pace();

    httplib::Client client(base_);
    const auto secs = cfg_.timeout.count() / 1000;
    const auto usecs = (cfg_.timeout.count() % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(path_, headers, body, "application/json");
    const auto latency =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);

    if (!res) {
      last_kind = is_timeout(res.error()) ? GatewayError::Kind::timeout : GatewayError::Kind::transport;
      last_error = "provider '" + cfg_.name + "': " + describe_transport(res.error());
      last_status = 0;
      if (audit_) audit_->record_failure(cfg_.name, request, last_error, attempt);
      spdlog::warn("{} (attempt {}/{})", last_error, attempt, cfg_.retry.attempts);
      continue;
    }
    if (audit_) audit_->record(cfg_.name, request, res->body, res->status, attempt, latency);

    if (res->status == 401 || res->status == 403) {
      throw GatewayError(GatewayError::Kind::auth,
                         "provider '" + cfg_.name + "': authentication rejected (HTTP " +
                             std::to_string(res->status) + ")",
                         res->status);
    }
    if (res->status >= 500 || res->status == 429) {
      last_kind = GatewayError::Kind::http_status;
      last_status = res->status;
      last_error = "provider '" + cfg_.name + "': HTTP " + std::to_string(res->status);
      spdlog::warn("{} (attempt {}/{})", last_error, attempt, cfg_.retry.attempts);
      continue;
    }
    if (res->status != 200) {
      throw GatewayError(GatewayError::Kind::http_status,
                         "provider '" + cfg_.name + "': HTTP " + std::to_string(res->status), res->status);
    }
    return extract_content(res->body);
  }
  throw GatewayError(last_kind, last_error + " after " + std::to_string(cfg_.retry.attempts) + " attempts",
                     last_status);
}

}  // namespace recast::llm
