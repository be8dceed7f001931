#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "recast/llm/provider.hpp"

namespace recast::llm {

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds backoff_base{200};
};

struct ProviderConfig {
  std::string name;
  std::string endpoint;     // full URL of the chat-completions route
  std::string model_id;
  std::string api_key_env;  // empty: send no Authorization header
  int max_in_flight = 4;
  std::chrono::milliseconds timeout{60000};
  RetryPolicy retry;
  std::optional<double> requests_per_second;

  // Throws ConfigError on an empty name or endpoint, max_in_flight < 1 or
  // attempts < 1.
  void validate() const;
};

ProviderConfig provider_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ProviderConfig& cfg);

// Append-only JSONL trail of provider exchanges. Full prompt and reply text
// is written only when `include_text` is set; hashes always are.
class AuditLog {
 public:
  AuditLog(const std::filesystem::path& path, bool include_text);

  void record(const std::string& provider, const ChatRequest& request, const std::string& reply, int status,
              int attempt, std::chrono::milliseconds latency);
  void record_failure(const std::string& provider, const ChatRequest& request, const std::string& error,
                      int attempt);

 private:
  void append(const nlohmann::json& line);

  std::mutex mu_;
  std::ofstream out_;
  bool include_text_;
};

// Chat-completions client with per-provider admission control, optional
// request pacing and exponential backoff on 5xx / 429 / transport errors.
// 401 and 403 are reported as auth failures without retrying.
class HttpChatProvider final : public ChatProvider {
 public:
  explicit HttpChatProvider(ProviderConfig cfg, std::shared_ptr<AuditLog> audit = nullptr);

  const std::string& name() const override { return cfg_.name; }
  std::string complete(const ChatRequest& request) override;

  const ProviderConfig& config() const { return cfg_; }
  // Highest number of concurrently admitted requests observed so far.
  int peak_in_flight() const;

 private:
  void acquire();
  void release();
  void pace();

  ProviderConfig cfg_;
  std::shared_ptr<AuditLog> audit_;
  std::string base_;  // scheme://host[:port]
  std::string path_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  int in_flight_ = 0;
  int peak_ = 0;
  std::chrono::steady_clock::time_point next_start_{};
};

// Request body sent for `request` under `model_id`.
nlohmann::json chat_request_body(const std::string& model_id, const ChatRequest& request);

}  // namespace recast::llm
