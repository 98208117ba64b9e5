#include "slr/judge.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <set>
#include <thread>

#include "slr/rules.hpp"
#include "slr/synthesizer.hpp"

namespace slr {

namespace {

bool redefines_language(const Atom& head, const Language& language) {
  if (language.find(head.predicate)) return true;
  return language.negative_target && head.predicate == *language.negative_target;
}

void note(std::vector<std::string>* out, std::string message) {
  if (out) out->push_back(std::move(message));
}

int check_program(const Program& program, const Language& language, std::vector<std::string>* diagnostics) {
  std::set<std::string> local;
  for (const auto& c : program.clauses) local.insert(c.head.key());
  int ok = 1;
  bool has_target = false;
  for (const auto& c : program.clauses) {
    if (redefines_language(c.head, language)) {
      note(diagnostics, "clause head " + c.head.key() + " redefines a background predicate");
      ok = 0;
      continue;
    }
    RuleValidation v = validate_rule(c, language, local);
    const bool body_ok = v.known_predicates && v.constants_in_domain;
    if (v.head_is_target) has_target = true;
    if (!body_ok) {
      for (const auto& p : v.problems)
        if (p.rfind("head ", 0) != 0) note(diagnostics, p);
      ok = 0;
    }
  }
  if (!has_target) {
    note(diagnostics, "no clause defines " + language.positive_target + "/1");
    ok = 0;
  }
  return ok;
}

}  // namespace

JudgeTask judge_task(const TaskInstance& task) {
  return JudgeTask{task.language, task.background(), task.positives, task.negatives};
}

double Judgment::partial_value() const {
  const double v = static_cast<double>(partial);
  return std::round(v * 1e6) / 1e6;
}

nlohmann::json to_json(const Judgment& j) {
  nlohmann::json examples = nlohmann::json::array();
  for (const auto& r : j.per_example)
    examples.push_back({{"query", render(r.query)},
                        {"expected", r.expected},
                        {"outcome", to_string(r.outcome)},
                        {"correct", r.correct}});
  return {{"syntax", j.syntax},
          {"overall", j.overall},
          {"partial", j.partial_value()},
          {"partial_exact", j.partial.str()},
          {"per_example", examples},
          {"diagnostics", j.diagnostics}};
}

int syntax_score(std::string_view hypothesis, const Language& language, std::vector<std::string>* diagnostics) {
  Program program;
  try {
    program = parse_program(hypothesis);
  } catch (const SyntaxError& e) {
    note(diagnostics, std::string("parse error: ") + e.what());
    return 0;
  }
  if (program.clauses.empty()) {
    note(diagnostics, "hypothesis is empty");
    return 0;
  }
  return check_program(program, language, diagnostics);
}

Judgment judge(std::string_view hypothesis, const JudgeTask& task, const ResourceLimits& limits) {
  limits.validate();
  const auto deadline = std::chrono::steady_clock::now() + limits.wall_timeout;
  Judgment j;
  j.syntax = syntax_score(hypothesis, task.language, &j.diagnostics);
  if (!j.syntax) return j;

  Program program = task.background;
  for (auto& c : parse_program(hypothesis).clauses) program.clauses.push_back(std::move(c));
  std::optional<Engine> engine;
  try {
    engine.emplace(program);
  } catch (const std::exception& e) {
    j.diagnostics.push_back(std::string("hypothesis cannot be loaded: ") + e.what());
  }

  std::size_t correct = 0;
  auto run = [&](const Atom& q, bool expected) {
    QueryResult r{q, expected, EntailmentOutcome::resource_exceeded("timeout"), false};
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (!engine) {
      r.outcome = EntailmentOutcome::resource_exceeded("unsupported");
    } else if (left.count() > 0) {
      ResourceLimits per_query = limits;
      per_query.wall_timeout = left;
      r.outcome = engine->entails(q, per_query);
    }
    if (r.outcome.is_resource_exceeded()) {
      j.diagnostics.push_back("query " + render(q) + ": resource limit exceeded (" + r.outcome.reason() + ")");
    } else {
      r.correct = r.outcome.is_entailed() == expected;
    }
    if (r.correct) ++correct;
    j.per_example.push_back(std::move(r));
  };
  for (const auto& q : task.positives) run(q, true);
  for (const auto& q : task.negatives) run(q, false);

  const std::size_t total = j.per_example.size();
  j.partial = total ? Rational(correct, total) : Rational(0);
  j.overall = total && correct == total ? 1 : 0;
  return j;
}

Judgment judge(std::string_view hypothesis, const TaskInstance& task, const ResourceLimits& limits) {
  return judge(hypothesis, judge_task(task), limits);
}

std::vector<Judgment> judge_batch(const std::vector<JudgeItem>& items, const ResourceLimits& limits, int parallelism) {
  if (parallelism < 1) throw std::invalid_argument("parallelism must be at least 1");
  limits.validate();
  for (const auto& item : items)
    if (!item.task) throw std::invalid_argument("judge_batch item without a task");
  std::vector<Judgment> out(items.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) out[i] = judge(items[i].hypothesis, *items[i].task, limits);
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(parallelism), items.size());
  if (threads <= 1) {
    worker();
    return out;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace slr
