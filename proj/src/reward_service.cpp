#include "recast/reward_service.hpp"

#include <chrono>
#include <future>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "recast/metrics.hpp"
#include "recast/records.hpp"
#include "recast/verify.hpp"

namespace recast::eval {
namespace {

const std::string& required_string(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw RequestError(400, std::string("'") + key + "' must be a string");
  }
  return it->get_ref<const std::string&>();
}

nlohmann::json error_body(const std::string& message) { return {{"error", message}}; }

}  // namespace

ConstraintStore load_store(const std::filesystem::path& path) {
  ConstraintStore store;
  read_jsonl(path, [&](const nlohmann::json& j, long line) {
    if (!j.is_object()) throw ParseError("record", "expected an object", line);
    auto id = j.find("id");
    if (id == j.end() || !id->is_string()) throw ParseError("id", "expected a string", line);
    auto constraints = parse_constraint_list(j, "constraints", line);
    if (!store.emplace(id->get<std::string>(), std::move(constraints)).second) {
      throw ParseError("id", "duplicate id '" + id->get<std::string>() + "'", line);
    }
  });
  return store;
}

RewardService::RewardService(ConstraintStore store, std::shared_ptr<llm::ChatProvider> judge, ServiceOptions opts)
    : store_(std::move(store)), judge_(std::move(judge)), opts_(opts) {
  if (!judge_) throw ConfigError("reward service needs a judge provider");
  if (opts_.batch_parallelism < 1) opts_.batch_parallelism = 1;
}

RewardService::~RewardService() { stop(); }

nlohmann::json RewardService::score(const nlohmann::json& request) const {
  if (!request.is_object()) throw RequestError(400, "request must be a JSON object");
  const auto& instruction = required_string(request, "instruction");
  const auto& response = required_string(request, "response");

  std::vector<Constraint> inline_constraints;
  const std::vector<Constraint>* constraints = nullptr;
  if (auto c = request.find("constraints"); c != request.end() && !c->is_null()) {
    try {
      inline_constraints = parse_constraint_list(request, "constraints", 0);
    } catch (const ParseError& e) {
      throw RequestError(400, e.what());
    }
    constraints = &inline_constraints;
  } else if (auto r = request.find("record_id"); r != request.end() && !r->is_null()) {
    if (!r->is_string()) throw RequestError(400, "'record_id' must be a string");
    auto it = store_.find(r->get<std::string>());
    if (it == store_.end()) throw RequestError(404, "unknown record_id '" + r->get<std::string>() + "'");
    constraints = &it->second;
  } else {
    throw RequestError(400, "either 'record_id' or 'constraints' is required");
  }
  if (constraints->empty()) throw RequestError(400, "no constraints to score");

  std::vector<verify::Verdict> verdicts;
  try {
    verdicts = verify::verify_all(*constraints, instruction, response, *judge_);
  } catch (const verify::PartialVerdictsError& e) {
    throw RequestError(502, std::string("judge failure: ") + e.what());
  }

  nlohmann::json per = nlohmann::json::array();
  std::size_t satisfied = 0;
  for (const auto& v : verdicts) {
    satisfied += v.satisfied ? 1 : 0;
    per.push_back({{"id", v.constraint_id}, {"satisfied", v.satisfied}, {"method", verify::to_string(v.method)}});
  }
  nlohmann::json out = {{"reward", reward(verdicts)},
                        {"satisfied", satisfied},
                        {"total", verdicts.size()},
                        {"per_constraint", std::move(per)}};
  if (auto r = request.find("record_id"); r != request.end() && r->is_string()) out["record_id"] = *r;
  return out;
}

nlohmann::json RewardService::score_batch(const nlohmann::json& requests) const {
  if (!requests.is_array()) throw RequestError(400, "batch payload must be a JSON array");
  std::vector<nlohmann::json> results(requests.size());
  auto one = [&](std::size_t i) {
    try {
      results[i] = score(requests[i]);
    } catch (const RequestError& e) {
      results[i] = {{"error", e.what()}, {"status", e.status()}};
    } catch (const std::exception& e) {
      results[i] = {{"error", e.what()}, {"status", 500}};
    }
  };
  for (std::size_t start = 0; start < requests.size(); start += opts_.batch_parallelism) {
    const auto end = std::min(requests.size(), start + opts_.batch_parallelism);
    std::vector<std::future<void>> chunk;
    for (std::size_t i = start; i < end; ++i) chunk.push_back(std::async(std::launch::async, one, i));
    for (auto& f : chunk) f.get();
  }
  return nlohmann::json(std::move(results));
}

void RewardService::install_routes() {
  server_ = std::make_unique<httplib::Server>();
  const int threads = std::max(1, opts_.threads);
  server_->new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<std::size_t>(threads)); };

  auto handle = [this](const httplib::Request& req, httplib::Response& res, bool batch) {
    const auto started = std::chrono::steady_clock::now();
    nlohmann::json body;
    try {
      auto payload = nlohmann::json::parse(req.body, nullptr, false);
      if (payload.is_discarded()) throw RequestError(400, "request body is not valid JSON");
      body = batch ? score_batch(payload) : score(payload);
      res.status = 200;
    } catch (const RequestError& e) {
      res.status = e.status();
      body = error_body(e.what());
    } catch (const std::exception& e) {
      res.status = 500;
      body = error_body(e.what());
    }
    res.set_content(body.dump(), "application/json");
    const auto ms =
        std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - started).count() /
        1000.0;
    spdlog::info("{} {} status={} latency_ms={:.3f}", req.method, req.path, res.status, ms);
  };

  server_->Post("/v1/reward", [handle](const httplib::Request& req, httplib::Response& res) { handle(req, res, false); });
  server_->Post("/v1/reward/batch",
                [handle](const httplib::Request& req, httplib::Response& res) { handle(req, res, true); });
  server_->Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
    nlohmann::json body = {{"status", "ok"}, {"records", store_.size()}, {"judge", judge_->name()}};
    res.set_content(body.dump(), "application/json");
  });
}

int RewardService::start(const std::string& host, int port) {
  stop();
  install_routes();
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound <= 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::make_unique<std::thread>([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void RewardService::serve(const std::string& host, int port) {
  stop();
  install_routes();
  if (!server_->bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
  spdlog::info("reward service listening on {}:{}", host, port);
  server_->listen_after_bind();
}

void RewardService::stop() {
  if (server_) server_->stop();
  if (thread_ && thread_->joinable()) thread_->join();
  thread_.reset();
}

}  // namespace recast::eval
