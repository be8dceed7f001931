#include "recast/records.hpp"

#include <fstream>
#include <set>

#include "recast/errors.hpp"

namespace recast {
namespace {

const nlohmann::json& field(const nlohmann::json& j, const char* key, long line) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(key, "missing", line);
  return *it;
}

std::string string_field(const nlohmann::json& j, const char* key, long line, bool non_empty = false) {
  const auto& v = field(j, key, line);
  if (!v.is_string()) throw ParseError(key, "expected a string", line);
  auto s = v.get<std::string>();
  if (non_empty && s.empty()) throw ParseError(key, "must not be empty", line);
  return s;
}

std::vector<std::string> string_list(const nlohmann::json& j, const char* key, long line) {
  auto it = j.find(key);
  if (it == j.end()) return {};
  if (!it->is_array()) throw ParseError(key, "expected an array", line);
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) throw ParseError(key, "expected an array of strings", line);
    out.push_back(v.get<std::string>());
  }
  return out;
}

void require_object(const nlohmann::json& j, const char* what, long line) {
  if (!j.is_object()) throw ParseError(what, "expected an object", line);
}

}  // namespace

nlohmann::json to_json(const SeedRecord& s) {
  return {{"id", s.id}, {"prompt", s.instruction}, {"response", s.response}};
}

nlohmann::json to_json(const VoteRecord& v) {
  return {{"candidate_providers", v.candidate_providers},
          {"voters", v.voters},
          {"ballots", v.ballots},
          {"dropped", v.dropped},
          {"tally", v.tally},
          {"winner", v.winner}};
}

nlohmann::json to_json(const EnhancedRecord& r) {
  nlohmann::json constraints = nlohmann::json::array();
  for (const auto& c : r.constraints) constraints.push_back(to_json(c));
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& v : r.provenance.filter_verdicts) verdicts.push_back(verify::to_json(v));
  nlohmann::json j = {{"id", r.id},
                      {"original", to_json(r.original)},
                      {"constraints", std::move(constraints)},
                      {"enhanced_instruction", r.enhanced_instruction},
                      {"enhanced_response", r.enhanced_response},
                      {"provenance",
                       {{"generator", r.provenance.generator},
                        {"judge", r.provenance.judge},
                        {"rng_seed", r.provenance.rng_seed},
                        {"rejected_constraints", r.provenance.rejected_constraints},
                        {"filter_verdicts", std::move(verdicts)},
                        {"instruction_vote", to_json(r.provenance.instruction_vote)},
                        {"response_vote", to_json(r.provenance.response_vote)}}}};
  if (r.level) j["level"] = *r.level;
  return j;
}

SeedRecord parse_seed(const nlohmann::json& j, long line) {
  require_object(j, "record", line);
  SeedRecord s;
  s.id = string_field(j, "id", line, true);
  s.instruction = string_field(j, "prompt", line, true);
  s.response = string_field(j, "response", line, true);
  return s;
}

VoteRecord parse_vote(const nlohmann::json& j, long line) {
  require_object(j, "vote", line);
  VoteRecord v;
  v.candidate_providers = string_list(j, "candidate_providers", line);
  v.voters = string_list(j, "voters", line);
  v.ballots = string_list(j, "ballots", line);
  v.dropped = string_list(j, "dropped", line);
  if (auto t = j.find("tally"); t != j.end()) {
    if (!t->is_array()) throw ParseError("tally", "expected an array", line);
    for (const auto& x : *t) {
      if (!x.is_number_integer()) throw ParseError("tally", "expected integers", line);
      v.tally.push_back(x.get<int>());
    }
  }
  if (auto w = j.find("winner"); w != j.end()) {
    if (!w->is_number_unsigned()) throw ParseError("winner", "expected a non-negative integer", line);
    v.winner = w->get<std::size_t>();
  }
  return v;
}

std::vector<Constraint> parse_constraint_list(const nlohmann::json& j, const char* key, long line) {
  const auto& list = field(j, key, line);
  if (!list.is_array()) throw ParseError(key, "expected an array", line);
  std::vector<Constraint> out;
  out.reserve(list.size());
  for (const auto& c : list) out.push_back(parse_constraint(c, line));
  return out;
}

EnhancedRecord parse_record(const nlohmann::json& j, long line) {
  require_object(j, "record", line);
  EnhancedRecord r;
  r.id = string_field(j, "id", line, true);
  r.original = parse_seed(field(j, "original", line), line);
  r.constraints = parse_constraint_list(j, "constraints", line);
  r.enhanced_instruction = string_field(j, "enhanced_instruction", line, true);
  r.enhanced_response = string_field(j, "enhanced_response", line);
  if (auto p = j.find("provenance"); p != j.end()) {
    require_object(*p, "provenance", line);
    r.provenance.generator = p->value("generator", std::string{});
    r.provenance.judge = p->value("judge", std::string{});
    r.provenance.rng_seed = p->value("rng_seed", std::uint64_t{0});
    r.provenance.rejected_constraints = p->value("rejected_constraints", std::size_t{0});
    if (auto fv = p->find("filter_verdicts"); fv != p->end()) {
      if (!fv->is_array()) throw ParseError("filter_verdicts", "expected an array", line);
      for (const auto& v : *fv) r.provenance.filter_verdicts.push_back(verify::parse_verdict(v, line));
    }
    if (auto v = p->find("instruction_vote"); v != p->end()) r.provenance.instruction_vote = parse_vote(*v, line);
    if (auto v = p->find("response_vote"); v != p->end()) r.provenance.response_vote = parse_vote(*v, line);
  }
  if (auto lv = j.find("level"); lv != j.end() && !lv->is_null()) {
    if (!lv->is_number_integer() || lv->get<int>() < 1 || lv->get<int>() > 4) {
      throw ParseError("level", "expected an integer in [1, 4]", line);
    }
    r.level = lv->get<int>();
  }
  return r;
}

void read_jsonl(const std::filesystem::path& path, const std::function<void(const nlohmann::json&, long)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::string text;
  long line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError("<line>", "not valid JSON", line_no);
    fn(j, line_no);
  }
}

std::vector<SeedRecord> read_seeds(const std::filesystem::path& path) {
  std::vector<SeedRecord> out;
  std::set<std::string, std::less<>> ids;
  read_jsonl(path, [&](const nlohmann::json& j, long line) {
    auto s = parse_seed(j, line);
    if (!ids.insert(s.id).second) throw ParseError("id", "duplicate id '" + s.id + "'", line);
    out.push_back(std::move(s));
  });
  return out;
}

std::vector<EnhancedRecord> read_records(const std::filesystem::path& path) {
  std::vector<EnhancedRecord> out;
  read_jsonl(path, [&](const nlohmann::json& j, long line) { out.push_back(parse_record(j, line)); });
  return out;
}

void write_records(const std::filesystem::path& path, const std::vector<EnhancedRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& r : records) out << to_json(r).dump() << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace recast
