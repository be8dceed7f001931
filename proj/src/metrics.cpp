#include "recast/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "recast/errors.hpp"

namespace recast::eval {

double hard_satisfaction(const EvalSet& set, Scope scope) {
  if (set.entries.empty()) throw InvalidArgument("hard_satisfaction: empty evaluation set");
  std::size_t satisfied = 0;
  for (const auto& e : set.entries) {
    if (e.constraints.size() != e.verdicts.size()) {
      throw InvalidArgument("hard_satisfaction: record " + e.record_id + " has " +
                            std::to_string(e.constraints.size()) + " constraints but " +
                            std::to_string(e.verdicts.size()) + " verdicts");
    }
    for (std::size_t i = 0; i < e.constraints.size(); ++i) {
      if (e.verdicts[i].constraint_id != e.constraints[i].id) {
        throw InvalidArgument("hard_satisfaction: record " + e.record_id + " verdict " + std::to_string(i) +
                              " is for " + e.verdicts[i].constraint_id + ", expected " + e.constraints[i].id);
      }
    }
    bool all = true;
    for (std::size_t i = 0; i < e.constraints.size() && all; ++i) {
      const bool rule = e.constraints[i].is_rule();
      if ((scope == Scope::rule_only && !rule) || (scope == Scope::model_only && rule)) continue;
      all = e.verdicts[i].satisfied;
    }
    if (all) ++satisfied;
  }
  return static_cast<double>(satisfied) / static_cast<double>(set.entries.size());
}

EvalReport report(const std::map<int, EvalSet>& level_sets) {
  std::map<int, LevelMetrics> values;
  for (const auto& [level, set] : level_sets) {
    values[level] = {hard_satisfaction(set, Scope::model_only), hard_satisfaction(set, Scope::rule_only),
                     hard_satisfaction(set, Scope::all)};
  }
  return report(values);
}

EvalReport report(const std::map<int, LevelMetrics>& level_values) {
  if (level_values.empty()) throw InvalidArgument("report: no levels");
  EvalReport r;
  r.levels = level_values;
  double sum = 0;
  for (const auto& [level, m] : level_values) sum += m.msr + m.rsr + m.osr;
  r.average = sum / static_cast<double>(3 * level_values.size());
  return r;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json levels = nlohmann::json::object();
  for (const auto& [level, m] : r.levels) {
    levels[std::to_string(level)] = {{"msr", m.msr}, {"rsr", m.rsr}, {"osr", m.osr}};
  }
  return {{"levels", std::move(levels)}, {"average", r.average}};
}

double reward(std::span<const verify::Verdict> verdicts) {
  if (verdicts.empty()) throw InvalidArgument("reward: no verdicts");
  std::size_t satisfied = 0;
  for (const auto& v : verdicts) satisfied += v.satisfied ? 1 : 0;
  return static_cast<double>(satisfied) / static_cast<double>(verdicts.size());
}

AdvantageGroup group_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) throw InvalidArgument("group_advantages: a group needs at least two rewards");
  AdvantageGroup g;
  g.rewards.assign(rewards.begin(), rewards.end());
  const auto n = static_cast<double>(rewards.size());
  double sum = 0;
  for (double r : rewards) sum += r;
  g.mean = sum / n;
  double sq = 0;
  for (double r : rewards) sq += (r - g.mean) * (r - g.mean);
  g.stddev = std::sqrt(sq / n);
  // Rounding in the mean can leave a tiny spread on a constant group.
  if (std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards.front(); })) {
    g.mean = rewards.front();
    g.stddev = 0;
  }
  g.advantages.reserve(rewards.size());
  for (double r : rewards) g.advantages.push_back(g.stddev > 0 ? (r - g.mean) / g.stddev : 0.0);
  return g;
}

}  // namespace recast::eval
