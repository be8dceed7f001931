#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "recast/constraint.hpp"
#include "recast/verify.hpp"

namespace recast::eval {

struct EvalEntry {
  std::string record_id;
  std::vector<Constraint> constraints;
  std::vector<verify::Verdict> verdicts;  // aligned with constraints
};

struct EvalSet {
  std::vector<EvalEntry> entries;
  std::optional<int> level_tag;
};

enum class Scope { all, rule_only, model_only };

// Fraction of entries whose scoped verdicts are all satisfied. An entry with
// nothing in scope counts as satisfied. Throws InvalidArgument for an empty
// set or misaligned verdicts.
double hard_satisfaction(const EvalSet& set, Scope scope);

struct LevelMetrics {
  double msr = 0;
  double rsr = 0;
  double osr = 0;
};

struct EvalReport {
  std::map<int, LevelMetrics> levels;
  double average = 0;  // mean over every level's three values
};

EvalReport report(const std::map<int, EvalSet>& level_sets);
// Same aggregation over already computed per-level values.
EvalReport report(const std::map<int, LevelMetrics>& level_values);

nlohmann::json to_json(const EvalReport& r);

// satisfied / total. Throws InvalidArgument for an empty list.
double reward(std::span<const verify::Verdict> verdicts);

struct AdvantageGroup {
  std::vector<double> rewards;
  double mean = 0;
  double stddev = 0;  // population
  std::vector<double> advantages;
};

// Standardizes rewards within a group; a zero-spread group gets all-zero
// advantages. Throws InvalidArgument for fewer than two rewards.
AdvantageGroup group_advantages(std::span<const double> rewards);

}  // namespace recast::eval
