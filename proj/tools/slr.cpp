// slr: generate datasets, score model responses, and serve the judge.

#include <csignal>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "slr/dataset.hpp"
#include "slr/llm_http.hpp"
#include "slr/metrics.hpp"
#include "slr/service.hpp"

using namespace slr;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Cycles through the reference rule listings; stands in for a model offline.
class CorpusReplayClient : public LlmClient {
 public:
  CorpusReplayClient() {
    for (const auto& c : reference_corpus()) replies_.push_back("```prolog\n" + render(c) + "\n```");
  }
  std::string complete(const std::string&) override {
    std::lock_guard<std::mutex> lock(mu_);
    return replies_[next_++ % replies_.size()];
  }

 private:
  std::mutex mu_;
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw std::runtime_error("cannot write " + path.string());
}

Split split_from_string(const std::string& s) {
  for (Split x : {Split::train, Split::eval, Split::test})
    if (to_string(x) == s) return x;
  throw std::invalid_argument("unknown split " + s);
}

struct GenerateArgs {
  std::string levels = "1-20";
  std::uint64_t seed = 0;
  std::string out;
  std::string splits;
  std::optional<int> train, eval, test;
  std::string format = "jsonl";
  std::string llm_client = "none";
  std::string config;
  int jobs = 1;
};

int run_generate(const GenerateArgs& a) {
  std::vector<LevelSpec> specs;
  {
    auto all = default_curriculum();
    if (!a.config.empty()) apply_curriculum_overrides(all, json::parse(read_text(a.config)));
    for (int l : parse_level_list(a.levels)) specs.push_back(all[static_cast<std::size_t>(l - 1)]);
  }
  BuildOptions opts;
  if (a.llm_client == "stub") {
    opts.llm_policy = LlmGuided{std::make_shared<CorpusReplayClient>(), 3};
  } else if (a.llm_client == "http") {
    opts.llm_policy = LlmGuided{std::make_shared<HttpLlmClient>(HttpLlmConfig::from_env()), 3};
  }
  if (!a.splits.empty() || a.train || a.eval || a.test) {
    SplitSizes sizes = specs.front().split_sizes;
    if (!a.splits.empty()) {
      char slash1 = 0, slash2 = 0;
      std::istringstream in(a.splits);
      if (!(in >> sizes.train >> slash1 >> sizes.eval >> slash2 >> sizes.test) || slash1 != '/' || slash2 != '/')
        throw std::invalid_argument("--splits expects TRAIN/EVAL/TEST, e.g. 20/5/10");
    }
    if (a.train || a.eval || a.test) {
      // Unset sizes keep each level's own values.
      for (auto& s : specs) {
        if (a.train) s.split_sizes.train = *a.train;
        if (a.eval) s.split_sizes.eval = *a.eval;
        if (a.test) s.split_sizes.test = *a.test;
      }
    } else {
      opts.split_sizes = sizes;
    }
  }
  const Dataset d = build_dataset(specs, a.seed, opts, a.jobs);
  save_dataset(d, a.out);
  for (const auto& w : d.manifest.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << json{{"out", a.out},
                    {"content_hash", d.manifest.content_hash},
                    {"train", d.train.size()},
                    {"eval", d.eval.size()},
                    {"test", d.test.size()}}
                   .dump()
            << "\n";
  return 0;
}

struct JudgeArgs {
  std::string dataset;
  std::string responses;
  std::string report;
  std::string pricing;
  std::string split = "test";
  std::string extraction = "last_fence";
  int jobs = 1;
  int timeout_ms = 5000;
};

std::int64_t usage_count(const json& usage, std::initializer_list<const char*> keys) {
  for (const char* k : keys)
    if (usage.contains(k)) return usage[k].get<std::int64_t>();
  return 0;
}

int run_judge(const JudgeArgs& a) {
  const Dataset d = load_dataset(a.dataset);
  const auto& records = d.split(split_from_string(a.split));

  std::map<std::string, std::string> responses;
  std::map<std::string, std::string> model_of;
  std::map<std::string, TokenCounts> usage;
  std::vector<std::string> duplicates;
  {
    std::istringstream in(read_text(a.responses));
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        throw std::runtime_error(a.responses + ":" + std::to_string(line_no) + ": " + e.what());
      }
      if (!j.is_object() || !j.contains("id") || !j["id"].is_string())
        throw std::runtime_error(a.responses + ":" + std::to_string(line_no) + ": each line needs a string id");
      const std::string id = j["id"].get<std::string>();
      if (responses.count(id)) {
        duplicates.push_back(id);
        continue;
      }
      responses[id] = j.value("response", std::string());
      if (j.contains("model") && j["model"].is_string()) {
        const std::string model = j["model"].get<std::string>();
        model_of[id] = model;
        TokenCounts t;
        if (j.contains("usage") && j["usage"].is_object()) {
          const json& u = j["usage"];
          t.input = usage_count(u, {"input_tokens", "input", "prompt_tokens"});
          t.output = usage_count(u, {"output_tokens", "output", "completion_tokens"});
          if (u.contains("cached_input_tokens") || u.contains("cached_input"))
            t.cached_input = usage_count(u, {"cached_input_tokens", "cached_input"});
        }
        usage[model] += t;
      }
    }
  }

  std::vector<JudgeTask> tasks;
  tasks.reserve(records.size());
  for (const auto& r : records) tasks.push_back(judge_task(r));
  std::vector<EvalItem> items;
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < records.size(); ++i) {
    EvalItem item{records[i].level, &tasks[i], std::nullopt};
    if (auto it = responses.find(records[i].id); it != responses.end()) {
      item.response = it->second;
    } else {
      missing.push_back(records[i].id);
    }
    items.push_back(std::move(item));
  }
  std::vector<std::string> unknown;
  for (const auto& [id, _] : responses)
    if (!std::any_of(records.begin(), records.end(), [&](const TaskRecord& r) { return r.id == id; }))
      unknown.push_back(id);

  ResourceLimits limits;
  limits.wall_timeout = std::chrono::milliseconds(a.timeout_ms);
  const EvalResult result = evaluate(items, limits, a.jobs, extraction_rule_from_string(a.extraction));

  std::optional<CostReport> cost;
  if (!a.pricing.empty()) {
    PricingTable table;
    if (a.pricing == "reference") {
      table = PricingTable::reference();
    } else if (fs::path(a.pricing).extension() == ".json") {
      table = PricingTable::from_json(json::parse(read_text(a.pricing)));
    } else {
      table = PricingTable::from_csv(read_text(a.pricing));
    }
    cost = compute_cost(usage, table);
  }

  json report = report_json(result.levels, cost);
  report["split"] = a.split;
  report["dataset_hash"] = d.manifest.content_hash;
  report["extraction"] = a.extraction;
  report["missing_ids"] = missing;
  report["unknown_ids"] = unknown;
  report["duplicate_ids"] = duplicates;
  json per_task = json::array();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Judgment& j = result.judgments[i];
    per_task.push_back({{"id", records[i].id},
                        {"level", records[i].level},
                        {"syntax", j.syntax},
                        {"overall", j.overall},
                        {"partial", j.partial_value()},
                        {"diagnostics", j.diagnostics}});
  }
  report["tasks"] = per_task;
  if (!missing.empty()) std::cerr << "warning: " << missing.size() << " tasks have no response; scored as syntax 0\n";
  write_text(a.report, report.dump(2) + "\n");
  std::cout << json{{"lrl", report["lrl"]}, {"syntax_pct", report["syntax_pct"]}, {"report", a.report}}.dump() << "\n";
  return 0;
}

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string dataset;
  int max_concurrency = 64;
  int timeout_ms = 5000;
  std::uint64_t max_depth = ResourceLimits{}.max_depth;
  std::uint64_t max_steps = ResourceLimits{}.max_steps;
};

JudgeService* g_service = nullptr;

int run_serve(const ServeArgs& a) {
  std::shared_ptr<const Dataset> d;
  if (!a.dataset.empty()) d = std::make_shared<const Dataset>(load_dataset(a.dataset));
  ServiceConfig cfg;
  cfg.max_concurrency = a.max_concurrency;
  cfg.limits.wall_timeout = std::chrono::milliseconds(a.timeout_ms);
  cfg.limits.max_depth = a.max_depth;
  cfg.limits.max_steps = a.max_steps;
  JudgeService service(cfg, d);
  const int port = service.bind(a.host, a.port);
  if (port < 0) throw std::runtime_error("cannot bind " + a.host + ":" + std::to_string(a.port));
  g_service = &service;
  std::signal(SIGINT, [](int) { g_service->stop(); });
  std::signal(SIGTERM, [](int) { g_service->stop(); });
  std::cerr << "serving on " << a.host << ":" << port << " (" << (d ? d->train.size() + d->eval.size() + d->test.size() : 0)
            << " tasks)\n";
  service.listen();
  g_service = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthesize logic reasoning tasks, judge hypotheses, and score model responses."};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Build a dataset of tasks for some curriculum levels");
  g->add_option("--levels", gen.levels, "Levels, e.g. 1-5 or 1,3,7-9")->capture_default_str();
  g->add_option("--seed", gen.seed, "Dataset seed")->required();
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--splits", gen.splits, "Split sizes for every level as TRAIN/EVAL/TEST");
  g->add_option("--train-size", gen.train, "Train tasks per level");
  g->add_option("--eval-size", gen.eval, "Eval tasks per level");
  g->add_option("--test-size", gen.test, "Test tasks per level");
  g->add_option("--format", gen.format, "Output format")->check(CLI::IsMember({"jsonl"}))->capture_default_str();
  g->add_option("--llm-client", gen.llm_client, "Source of model-guided rules: none (template pool), stub, http")
      ->check(CLI::IsMember({"none", "stub", "http"}))
      ->capture_default_str();
  g->add_option("--config", gen.config, "JSON file with curriculum overrides")->check(CLI::ExistingFile);
  g->add_option("--jobs", gen.jobs, "Levels built in parallel")->check(CLI::PositiveNumber)->capture_default_str();
  

  JudgeArgs jud;
  auto* j = app.add_subcommand("judge", "Score a JSONL file of model responses against a dataset");
  j->add_option("--dataset", jud.dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  j->add_option("--responses", jud.responses, "JSONL with id, response, and optional model and usage")
      ->required()
      ->check(CLI::ExistingFile);
  j->add_option("--report", jud.report, "Where to write the JSON report")->required();
  j->add_option("--pricing", jud.pricing, "Pricing CSV or JSON file, or 'reference' for the built-in table");
  j->add_option("--split", jud.split, "Split to score")->check(CLI::IsMember({"train", "eval", "test"}))->capture_default_str();
  j->add_option("--extraction", jud.extraction, "How to pull the program from a response")
      ->check(CLI::IsMember({"last_fence", "raw"}))
      ->capture_default_str();
  j->add_option("--jobs", jud.jobs, "Judging threads")->check(CLI::PositiveNumber)->capture_default_str();
  j->add_option("--timeout-ms", jud.timeout_ms, "Wall-clock budget per response")->check(CLI::PositiveNumber)->capture_default_str();

  ServeArgs srv;
  auto* s = app.add_subcommand("serve", "Run the HTTP judging service");
  s->add_option("--host", srv.host)->capture_default_str();
  s->add_option("--port", srv.port)->capture_default_str();
  s->add_option("--dataset", srv.dataset, "Dataset directory to preload")->check(CLI::ExistingDirectory);
  s->add_option("--max-concurrency", srv.max_concurrency)->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--timeout-ms", srv.timeout_ms, "Per-request wall-clock cap")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--max-depth", srv.max_depth)->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--max-steps", srv.max_steps)->check(CLI::PositiveNumber)->capture_default_str();

  int lang_level = 1;
  auto* l = app.add_subcommand("language", "Print a level's language as JSON");
  l->add_option("--level", lang_level)->check(CLI::Range(1, kLevels))->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*g) return run_generate(gen);
    if (*j) return run_judge(jud);
    if (*s) return run_serve(srv);
    if (*l) {
      std::cout << to_json(level_language(lang_level)).dump(2) << "\n";
      return 0;
    }
  } catch (const SynthesisFailure& e) {
    std::cerr << "error: " << e.what() << "\n" << e.diagnostics().dump(2) << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
