#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "recast/constraint.hpp"
#include "recast/errors.hpp"
#include "recast/llm/provider.hpp"

namespace httplib {
class Server;
}

namespace recast::eval {

using ConstraintStore = std::map<std::string, std::vector<Constraint>>;

// record id -> constraints, from a dataset or benchmark JSONL file.
ConstraintStore load_store(const std::filesystem::path& path);

// Request failure mapped to an HTTP status.
class RequestError : public Error {
 public:
  RequestError(int status, const std::string& message) : Error(message), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

struct ServiceOptions {
  std::size_t batch_parallelism = 8;
  int threads = 16;
};

class RewardService {
 public:
  RewardService(ConstraintStore store, std::shared_ptr<llm::ChatProvider> judge, ServiceOptions opts = {});
  ~RewardService();

  RewardService(const RewardService&) = delete;
  RewardService& operator=(const RewardService&) = delete;

  // Scores one request object. Throws RequestError with 400, 404 or 502.
  nlohmann::json score(const nlohmann::json& request) const;

  // Scores an array of requests in order. Each element is a result or
  // {"error", "status"}.
  nlohmann::json score_batch(const nlohmann::json& requests) const;

  // Binds and serves on a background thread. Port 0 picks a free port.
  // Returns the bound port; throws Error when binding fails.
  int start(const std::string& host, int port);
  // Serves on the calling thread until stop().
  void serve(const std::string& host, int port);
  void stop();

 private:
  void install_routes();

  ConstraintStore store_;
  std::shared_ptr<llm::ChatProvider> judge_;
  ServiceOptions opts_;
  std::unique_ptr<httplib::Server> server_;
  std::unique_ptr<std::thread> thread_;
};

}  // namespace recast::eval
