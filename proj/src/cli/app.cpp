#include "recast/cli/app.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "recast/cli/config.hpp"
#include "recast/errors.hpp"
#include "recast/metrics.hpp"
#include "recast/pipeline.hpp"
#include "recast/records.hpp"
#include "recast/reward_service.hpp"
#include "recast/util/hash.hpp"
#include "recast/verify.hpp"

namespace recast::cli {
namespace {

using nlohmann::json;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool mock = false;
  bool resume = false;
  std::string log_level = "warn";
};

struct IoArgs {
  std::string input;
  std::string output;
};

// Writes to a file, or to stdout for "-" / empty.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw Error("cannot write " + path);
    }
  }
  std::ostream& out() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
  void line(const json& j) { out() << j.dump() << '\n'; }

 private:
  std::ofstream file_;
};

std::filesystem::path input_path(const IoArgs& io, const AppConfig& cfg) {
  if (!io.input.empty()) return io.input;
  if (cfg.input) return *cfg.input;
  throw ConfigError("no input file given (use --input or the config 'input' key)");
}

std::string output_path(const IoArgs& io, const AppConfig& cfg) {
  if (!io.output.empty()) return io.output;
  if (cfg.output) return cfg.output->string();
  return "-";
}

extract::ExtractionConfig extraction_for(const AppConfig& cfg, const std::string& id) {
  auto e = cfg.extraction;
  e.rng_seed = util::derive_seed(cfg.seed, id);
  return e;
}

json constraints_json(const std::vector<Constraint>& cs) {
  json out = json::array();
  for (const auto& c : cs) out.push_back(to_json(c));
  return out;
}

int cmd_extract(const IoArgs& io, const AppConfig& cfg) {
  const auto registry = build_registry(cfg);
  const auto seeds = read_seeds(input_path(io, cfg));
  Sink sink(output_path(io, cfg));
  for (const auto& s : seeds) {
    auto j = to_json(s);
    j["constraints"] = constraints_json(extract::extract_rule_constraints(s.response, extraction_for(cfg, s.id), *registry));
    sink.line(j);
  }
  return kExitOk;
}

int cmd_generate(const IoArgs& io, const AppConfig& cfg, const pipeline::Roster& roster) {
  roster.require_generation();
  const auto registry = build_registry(cfg);
  const auto seeds = read_seeds(input_path(io, cfg));
  Sink sink(output_path(io, cfg));
  std::size_t failed = 0;
  for (const auto& s : seeds) {
    try {
      auto pool = pipeline::build_pool(s, extraction_for(cfg, s.id), *registry, *roster.generators.front(),
                                       *roster.judge);
      std::vector<Constraint> model;
      for (auto& c : pool.constraints) {
        if (!c.is_rule()) model.push_back(std::move(c));
      }
      auto j = to_json(s);
      j["constraints"] = constraints_json(model);
      j["rejected"] = pool.rejected;
      json verdicts = json::array();
      for (const auto& v : pool.filter_verdicts) verdicts.push_back(verify::to_json(v));
      j["filter_verdicts"] = std::move(verdicts);
      sink.line(j);
    } catch (const Error& e) {
      ++failed;
      spdlog::error("record {} failed: {}", s.id, e.what());
    }
  }
  if (failed > 0) spdlog::warn("{} of {} records failed", failed, seeds.size());
  return kExitOk;
}

int cmd_enhance(const IoArgs& io, const AppConfig& cfg, const pipeline::Roster& roster) {
  roster.require_enhancement();
  std::vector<json> lines;
  read_jsonl(input_path(io, cfg), [&](const json& j, long line) {
    if (!j.is_object()) throw ParseError("record", "expected an object", line);
    for (const char* key : {"id", "prompt"}) {
      if (!j.contains(key) || !j[key].is_string() || j[key].get<std::string>().empty()) {
        throw ParseError(key, "expected a non-empty string", line);
      }
    }
    parse_constraint_list(j, "constraints", line);
    lines.push_back(j);
  });
  Sink sink(output_path(io, cfg));
  for (auto& j : lines) {
    const auto id = j["id"].get<std::string>();
    try {
      const auto pool = parse_constraint_list(j, "constraints", 0);
      auto vote = pipeline::enhance_instruction(j["prompt"].get<std::string>(), pool, roster.rewriters, roster.voters);
      j["enhanced_instruction"] = vote.text;
      j["instruction_vote"] = to_json(vote.vote);
      sink.line(j);
    } catch (const Error& e) {
      spdlog::error("record {} failed: {}", id, e.what());
    }
  }
  return kExitOk;
}

int cmd_synthesize(const IoArgs& io, const AppConfig& cfg, const pipeline::Roster& roster) {
  roster.require_synthesis();
  std::vector<json> lines;
  read_jsonl(input_path(io, cfg), [&](const json& j, long line) {
    if (!j.is_object()) throw ParseError("record", "expected an object", line);
    if (!j.contains("id") || !j["id"].is_string()) throw ParseError("id", "expected a string", line);
    const char* key = j.contains("enhanced_instruction") ? "enhanced_instruction" : "prompt";
    if (!j.contains(key) || !j[key].is_string() || j[key].get<std::string>().empty()) {
      throw ParseError(key, "expected a non-empty string", line);
    }
    lines.push_back(j);
  });
  Sink sink(output_path(io, cfg));
  for (auto& j : lines) {
    const auto id = j["id"].get<std::string>();
    const auto instruction =
        j.contains("enhanced_instruction") ? j["enhanced_instruction"].get<std::string>() : j["prompt"].get<std::string>();
    try {
      auto vote = pipeline::synthesize_response(instruction, roster.generators, roster.voters);
      j["enhanced_response"] = vote.text;
      j["response_vote"] = to_json(vote.vote);
      sink.line(j);
    } catch (const Error& e) {
      spdlog::error("record {} failed: {}", id, e.what());
    }
  }
  return kExitOk;
}

int cmd_run(const IoArgs& io, const AppConfig& cfg, const pipeline::Roster& roster, const Globals& g,
            std::optional<std::size_t> width, std::optional<std::size_t> stop_after) {
  pipeline::RecordContext ctx;
  ctx.roster = roster;
  ctx.extraction = cfg.extraction;
  const auto registry = build_registry(cfg);
  ctx.registry = registry.get();
  ctx.global_seed = cfg.seed;
  ctx.variant_cap = cfg.variant_cap;

  pipeline::RunOptions opts;
  opts.input = input_path(io, cfg);
  const auto out = output_path(io, cfg);
  if (out == "-") throw ConfigError("run needs an output file (use --output or the config 'output' key)");
  opts.output = out;
  opts.width = width.value_or(cfg.width);
  opts.resume = g.resume;
  opts.stop_after = stop_after;
  const auto report = pipeline::run(opts, ctx);
  std::cout << pipeline::to_json(report).dump(2) << '\n';
  return kExitOk;
}

int cmd_bench(const IoArgs& io, const AppConfig& cfg, const pipeline::Roster& roster,
              std::optional<std::size_t> sample_size, std::optional<std::size_t> min_constraints) {
  auto opts = cfg.bench;
  opts.rng_seed = cfg.bench.rng_seed != 0 ? cfg.bench.rng_seed : cfg.seed;
  if (sample_size) opts.sample_size = *sample_size;
  if (min_constraints) opts.min_constraints = *min_constraints;
  opts.width = cfg.width;
  roster.require_enhancement();
  const auto out = output_path(io, cfg);
  if (out == "-") throw ConfigError("bench needs an output directory (use --output)");
  const auto dataset = read_records(input_path(io, cfg));
  const auto result = pipeline::build_benchmark(dataset, opts, roster);
  pipeline::write_benchmark(out, result);

  json failures = json::array();
  for (const auto& [id, err] : result.failures) failures.push_back({{"id", id}, {"error", err}});
  json sizes = json::array();
  for (const auto& lv : result.levels) sizes.push_back(lv.size());
  json summary = {{"sampled", result.sampled_ids}, {"records_per_level", sizes}, {"failures", failures}};
  std::ofstream(std::filesystem::path(out) / "summary.json") << summary.dump(2) << '\n';
  std::cout << summary.dump(2) << '\n';
  return kExitOk;
}

std::map<int, std::vector<EnhancedRecord>> load_bench(const std::filesystem::path& path) {
  std::map<int, std::vector<EnhancedRecord>> levels;
  auto add_file = [&](const std::filesystem::path& file, std::optional<int> level) {
    for (auto& r : read_records(file)) {
      const int lv = r.level.value_or(level.value_or(1));
      levels[lv].push_back(std::move(r));
    }
  };
  if (std::filesystem::is_directory(path)) {
    for (int lv = 1; lv <= 4; ++lv) {
      const auto file = path / ("level_" + std::to_string(lv) + ".jsonl");
      if (std::filesystem::exists(file)) add_file(file, lv);
    }
  } else {
    add_file(path, std::nullopt);
  }
  if (levels.empty()) throw Error("no benchmark records found under " + path.string());
  return levels;
}

int cmd_evaluate(const std::string& bench, const std::string& responses, const std::string& report_out,
                 const std::string& verdicts_out, const pipeline::Roster& roster) {
  const auto levels = load_bench(bench);

  // (id, level) -> response; level 0 matches any level.
  std::map<std::pair<std::string, int>, std::string> answers;
  read_jsonl(responses, [&](const json& j, long line) {
    if (!j.is_object()) throw ParseError("record", "expected an object", line);
    if (!j.contains("id") || !j["id"].is_string()) throw ParseError("id", "expected a string", line);
    if (!j.contains("response") || !j["response"].is_string()) throw ParseError("response", "expected a string", line);
    int level = 0;
    if (j.contains("level")) {
      if (!j["level"].is_number_integer()) throw ParseError("level", "expected an integer", line);
      level = j["level"].get<int>();
    }
    answers[{j["id"].get<std::string>(), level}] = j["response"].get<std::string>();
  });

  bool needs_judge = false;
  for (const auto& [lv, records] : levels) {
    for (const auto& r : records) {
      for (const auto& c : r.constraints) needs_judge = needs_judge || !c.is_rule();
    }
  }
  if (needs_judge && !roster.judge) throw ConfigError("no provider has role 'judge'");

  std::optional<Sink> verdict_sink;
  if (!verdicts_out.empty()) verdict_sink.emplace(verdicts_out);

  std::map<int, eval::EvalSet> sets;
  std::size_t missing = 0;
  for (const auto& [lv, records] : levels) {
    auto& set = sets[lv];
    set.level_tag = lv;
    for (const auto& r : records) {
      eval::EvalEntry e{r.id, r.constraints, {}};
      auto it = answers.find({r.id, lv});
      if (it == answers.end()) it = answers.find({r.id, 0});
      if (it == answers.end()) {
        ++missing;
        for (const auto& c : r.constraints) {
          e.verdicts.push_back({c.id, false, c.is_rule() ? verify::Method::rule : verify::Method::judge,
                                "no response", std::nullopt});
        }
      } else {
        e.verdicts = verify::verify_all(r.constraints, r.enhanced_instruction, it->second, *roster.judge);
      }
      if (verdict_sink) {
        json vs = json::array();
        for (const auto& v : e.verdicts) vs.push_back(verify::to_json(v));
        verdict_sink->line({{"id", r.id}, {"level", lv}, {"verdicts", std::move(vs)}});
      }
      set.entries.push_back(std::move(e));
    }
  }
  if (missing > 0) spdlog::warn("{} benchmark records had no response and count as unsatisfied", missing);

  auto report = eval::to_json(eval::report(sets));
  report["missing_responses"] = missing;
  Sink sink(report_out);
  sink.out() << report.dump(2) << '\n';
  return kExitOk;
}

int cmd_serve(const AppConfig& cfg, const pipeline::Roster& roster, const std::string& host, int port,
              const std::string& store_path) {
  if (!roster.judge) throw ConfigError("no provider has role 'judge'");
  eval::ConstraintStore store;
  std::optional<std::filesystem::path> path;
  if (!store_path.empty()) {
    path = store_path;
  } else if (cfg.serve.store) {
    path = cfg.serve.store;
  }
  if (path) store = eval::load_store(*path);
  eval::ServiceOptions opts;
  opts.batch_parallelism = cfg.serve.batch_parallelism;
  opts.threads = cfg.serve.threads;
  eval::RewardService service(std::move(store), roster.judge, opts);
  service.serve(host.empty() ? cfg.serve.host : host, port >= 0 ? port : cfg.serve.port);
  return kExitOk;
}

int cmd_stats(const IoArgs& io, const AppConfig& cfg, const std::string& tables_dir) {
  std::size_t records = 0;
  std::size_t total = 0;
  std::map<std::string, std::size_t> per_category;
  std::map<std::string, std::size_t> per_type;
  std::map<std::size_t, std::size_t> density;
  read_jsonl(input_path(io, cfg), [&](const json& j, long line) {
    if (!j.is_object()) throw ParseError("record", "expected an object", line);
    const auto cs = parse_constraint_list(j, "constraints", line);
    ++records;
    total += cs.size();
    ++density[cs.size()];
    for (const auto& c : cs) {
      ++per_category[std::string(to_string(c.category()))];
      ++per_type[std::string(to_string(c.kind))];
    }
  });
  json dens = json::object();
  for (const auto& [n, count] : density) dens[std::to_string(n)] = count;
  json out = {{"records", records},
              {"constraints", total},
              {"mean_constraints_per_record", records ? static_cast<double>(total) / records : 0.0},
              {"per_category", per_category},
              {"per_type", per_type},
              {"density", dens}};
  Sink sink(output_path(io, cfg));
  sink.out() << out.dump(2) << '\n';

  if (!tables_dir.empty()) {
    std::filesystem::create_directories(tables_dir);
    std::ofstream types(std::filesystem::path(tables_dir) / "type_histogram.csv");
    types << "category,type,count\n";
    for (const auto& [type, count] : per_type) {
      types << to_string(category_of(*kind_from_string(type))) << ',' << type << ',' << count << '\n';
    }
    std::ofstream dist(std::filesystem::path(tables_dir) / "density_histogram.csv");
    dist << "constraints_per_record,records\n";
    for (const auto& [n, count] : density) dist << n << ',' << count << '\n';
  }
  return kExitOk;
}

void setup_logging(const std::string& level) {
  auto logger = spdlog::stderr_color_mt("recast");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(level));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constraint extraction, instruction synthesis and verification toolkit", "recast"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "recast 0.1.0");

  Globals g;
  app.add_option("--config", g.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Global random seed (overrides the config)");
  app.add_flag("--mock", g.mock, "Use simulated offline providers");
  app.add_flag("--resume", g.resume, "Continue an interrupted run from its checkpoint");
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

  IoArgs io;
  auto add_io = [&io](CLI::App* sub, const char* input_help, const char* output_help) {
    sub->add_option("-i,--input", io.input, input_help);
    sub->add_option("-o,--output", io.output, output_help);
  };

  auto* extract = app.add_subcommand("extract", "Mine rule-based constraints from seed responses (offline)");
  add_io(extract, "Seed JSONL", "Output JSONL (default stdout)");

  auto* generate = app.add_subcommand("generate", "Generate and filter model-based constraints");
  add_io(generate, "Seed JSONL", "Output JSONL (default stdout)");

  auto* enhance = app.add_subcommand("enhance", "Rewrite instructions to carry their constraints");
  add_io(enhance, "JSONL with id, prompt and constraints", "Output JSONL (default stdout)");

  auto* synthesize = app.add_subcommand("synthesize", "Generate and vote on responses");
  add_io(synthesize, "JSONL with id and enhanced_instruction or prompt", "Output JSONL (default stdout)");

  auto* run = app.add_subcommand("run", "Full pipeline from seeds to enhanced records");
  add_io(run, "Seed JSONL", "Dataset JSONL");
  std::optional<std::size_t> width;
  std::optional<std::size_t> stop_after;
  run->add_option("--width", width, "Records processed concurrently")->check(CLI::PositiveNumber);
  run->add_option("--stop-after", stop_after)->group("");

  auto* bench = app.add_subcommand("bench", "Build the four-level nested benchmark");
  add_io(bench, "Dataset JSONL", "Output directory");
  std::optional<std::size_t> sample_size;
  std::optional<std::size_t> min_constraints;
  bench->add_option("--sample-size", sample_size, "Records to sample")->check(CLI::PositiveNumber);
  bench->add_option("--min-constraints", min_constraints, "Minimum pool size to qualify")
      ->check(CLI::PositiveNumber);

  auto* evaluate = app.add_subcommand("evaluate", "Score model outputs against a benchmark");
  std::string bench_path;
  std::string responses_path;
  std::string report_out = "-";
  std::string verdicts_out;
  evaluate->add_option("--bench", bench_path, "Benchmark directory or level file")->required();
  evaluate->add_option("--responses", responses_path, "JSONL of {id, level?, response}")->required();
  evaluate->add_option("-o,--output", report_out, "Report JSON (default stdout)");
  evaluate->add_option("--verdicts", verdicts_out, "Per-record verdict JSONL");

  auto* serve = app.add_subcommand("serve-reward", "Serve the reward HTTP API");
  std::string host;
  int port = -1;
  std::string store_path;
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port")->check(CLI::Range(0, 65535));
  serve->add_option("--store", store_path, "JSONL with id and constraints per record");

  auto* stats = app.add_subcommand("stats", "Constraint type and density histograms");
  add_io(stats, "Any JSONL whose lines carry a constraints array", "Output JSON (default stdout)");
  std::string tables_dir;
  stats->add_option("--tables", tables_dir, "Directory for CSV tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  setup_logging(g.log_level);
  try {
    AppConfig cfg = g.config.empty() ? AppConfig{} : load_config(g.config);
    if (g.seed) cfg.seed = *g.seed;
    auto roster = [&] { return build_roster(cfg, g.mock); };

    if (*extract) return cmd_extract(io, cfg);
    if (*generate) return cmd_generate(io, cfg, roster());
    if (*enhance) return cmd_enhance(io, cfg, roster());
    if (*synthesize) return cmd_synthesize(io, cfg, roster());
    if (*run) return cmd_run(io, cfg, roster(), g, width, stop_after);
    if (*bench) return cmd_bench(io, cfg, roster(), sample_size, min_constraints);
    if (*evaluate) return cmd_evaluate(bench_path, responses_path, report_out, verdicts_out, roster());
    if (*serve) return cmd_serve(cfg, roster(), host, port, store_path);
    if (*stats) return cmd_stats(io, cfg, tables_dir);
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  } catch (const ParseError& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace recast::cli
