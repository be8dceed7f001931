#include "test_support.hpp"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <httplib.h>

namespace recast::testing {
namespace {

const std::array<const char*, 48> kWords = {
    "garden",  "river",    "quickly", "system",  "light",   "history", "people",  "music",
    "simple",  "between",  "energy",  "market",  "ancient", "planet",  "window",  "careful",
    "recipe",  "travel",   "winter",  "network", "budget",  "student", "science", "mountain",
    "ocean",   "library",  "morning", "project", "balance", "journey", "teacher", "village",
    "the",     "and",      "of",      "to",      "a",       "in",      "is",      "it",
    "café",    "naïve",    "2024",    "3.5",     "x-ray",   "don't",   "e.g.",    "co-op"};

const std::array<const char*, 12> kTopics = {"gardening",  "astronomy", "cooking", "travel",   "music",   "history",
                                             "budgeting", "chess",     "cycling", "painting", "birding", "baking"};

std::string word(util::Rng& rng) { return kWords[rng.index(kWords.size())]; }

std::string sentence(util::Rng& rng, std::size_t max_words) {
  const auto n = 1 + rng.index(max_words);
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) s += rng.index(8) == 0 ? ", " : " ";
    auto w = word(rng);
    if (i == 0 && !w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
    s += w;
  }
  static const std::array<const char*, 6> ends = {".", ".", "!", "?", "...", ""};
  s += ends[rng.index(ends.size())];
  return s;
}

std::string prose(util::Rng& rng, std::size_t sentences, std::size_t max_words) {
  std::string out;
  for (std::size_t i = 0; i < sentences; ++i) {
    if (i > 0) out += rng.index(6) == 0 ? "\n" : " ";
    out += sentence(rng, max_words);
  }
  return out;
}

std::string apply_case(std::string s, util::Rng& rng) {
  switch (rng.index(5)) {
    case 0:
      for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      break;
    case 1:
      for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      break;
    default:
      break;
  }
  return s;
}

std::string block(util::Rng& rng) {
  switch (rng.index(6)) {
    case 0: {
      std::string s;
      const auto n = 2 + rng.index(4);
      for (std::size_t i = 0; i < n; ++i) s += std::string(rng.index(2) ? "- " : "* ") + sentence(rng, 6) + "\n";
      return s;
    }
    case 1: {
      std::string s;
      const auto n = 2 + rng.index(4);
      for (std::size_t i = 0; i < n; ++i) s += std::to_string(i + 1) + ". " + sentence(rng, 6) + "\n";
      return s;
    }
    case 2:
      return "| " + word(rng) + " | " + word(rng) + " |\n|---|---|\n| " + word(rng) + " | " + word(rng) + " |\n";
    case 3:
      return "## " + sentence(rng, 4) + "\n";
    case 4: {
      nlohmann::json j = {{"name", word(rng)}, {"count", rng.index(100)}, {"tags", {word(rng), word(rng)}}};
      return j.dump(rng.index(2) ? 2 : -1);
    }
    default:
      return "```\n" + word(rng) + "(" + word(rng) + ");\n```\n";
  }
}

}  // namespace

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  auto base = std::filesystem::temp_directory_path();
  path_ = base / ("recast-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

std::string random_text(util::Rng& rng) {
  std::string out;
  switch (rng.index(6)) {
    case 0:  // a whole JSON document
    {
      nlohmann::json j = nlohmann::json::object();
      const auto n = 1 + rng.index(4);
      for (std::size_t i = 0; i < n; ++i) j[word(rng) + std::to_string(i)] = sentence(rng, 5);
      out = rng.index(2) ? j.dump(2) : nlohmann::json::array({j, word(rng)}).dump();
      break;
    }
    case 1:  // very short
      out = sentence(rng, 3);
      break;
    default: {
      const auto parts = 1 + rng.index(4);
      for (std::size_t i = 0; i < parts; ++i) {
        if (!out.empty()) out += "\n\n";
        if (rng.index(3) == 0) {
          out += block(rng);
        } else {
          out += prose(rng, 1 + rng.index(12), 18);
        }
      }
      break;
    }
  }
  out = apply_case(std::move(out), rng);
  if (rng.index(10) == 0) out = "  \n" + out + "\n\t ";
  bool blank = true;
  for (char c : out) blank = blank && std::isspace(static_cast<unsigned char>(c));
  return blank ? "Fallback text." : out;
}

std::vector<SeedRecord> synthetic_seeds(std::size_t n, std::uint64_t seed) {
  util::Rng rng(seed);
  std::vector<SeedRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string topic = kTopics[rng.index(kTopics.size())];
    SeedRecord s;
    char id[32];
    std::snprintf(id, sizeof id, "s%02zu", i);
    s.id = id;
    s.instruction = "Write a short guide about " + topic + " for a beginner.";
    std::string body = "A beginner can enjoy " + topic + " with very little equipment. " +
                       prose(rng, 3 + rng.index(6), 14) + " Practice " + topic + " regularly to improve.";
    if (rng.index(3) == 0) body += "\n\n" + block(rng);
    if (rng.index(6) == 0) {
      for (auto& c : body) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    s.response = body;
    out.push_back(std::move(s));
  }
  return out;
}

void write_seeds(const std::filesystem::path& p, const std::vector<SeedRecord>& seeds) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  for (const auto& s : seeds) out << to_json(s).dump() << '\n';
}

FakeChatServer::FakeChatServer(Handler handler, std::chrono::milliseconds delay)
    : handler_(std::move(handler)), delay_(delay), server_(std::make_unique<httplib::Server>()) {
  server_->new_task_queue = [] { return new httplib::ThreadPool(64); };
  server_->Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
    const int index = calls_++;
    const int now = ++active_;
    int prev = peak_.load();
    while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
    }
    {
      std::lock_guard lock(mu_);
      auth_.push_back(req.get_header_value("Authorization"));
    }
    if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
    auto body = nlohmann::json::parse(req.body, nullptr, false);
    auto [status, reply] = handler_(body, index);
    --active_;
    res.status = status;
    res.set_content(reply, "application/json");
  });
  port_ = server_->bind_to_any_port("127.0.0.1");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

FakeChatServer::~FakeChatServer() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string FakeChatServer::endpoint() const {
  return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
}

std::vector<std::string> FakeChatServer::auth_headers() const {
  std::lock_guard lock(mu_);
  return auth_;
}

std::string FakeChatServer::completion(const std::string& content) {
  return nlohmann::json{{"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}}}}}
      .dump();
}

CommandResult run_recast(const std::string& args) {
  CommandResult r;
  const std::string cmd = std::string(RECAST_BIN) + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::filesystem::path golden_dir() { return RECAST_GOLDEN_DIR; }
std::filesystem::path fixture_dir() { return RECAST_FIXTURE_DIR; }

}  // namespace recast::testing
