// Scores a candidate hypothesis against a validation program: syntactic
// validity, perfect classification, and the fraction of examples classified
// correctly.
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "slr/engine.hpp"
#include "slr/language.hpp"
#include "slr/logic.hpp"
#include "slr/rational.hpp"

namespace slr {

struct TaskInstance;

/// What the judge needs from a task: the language for syntax checks, the
/// background and the labeled queries.
struct JudgeTask {
  Language language;
  Program background;
  std::vector<Atom> positives;
  std::vector<Atom> negatives;
};

JudgeTask judge_task(const TaskInstance& task);

struct QueryResult {
  Atom query;
  bool expected = false;
  EntailmentOutcome outcome = EntailmentOutcome::not_entailed();
  bool correct = false;
};

struct Judgment {
  int syntax = 0;
  int overall = 0;
  Rational partial = 0;
  std::vector<QueryResult> per_example;
  std::vector<std::string> diagnostics;

  /// partial rounded to six decimals.
  double partial_value() const;
};

/// Response fields: syntax, overall, partial (rounded), partial_exact
/// ("n/d"), per_example, diagnostics.
nlohmann::json to_json(const Judgment& j);

/// 1 iff the text parses, some clause defines the positive target/1, no
/// clause redefines a language predicate or the negative target, and every
/// body predicate is a language predicate, a builtin, or defined by the
/// hypothesis itself.
int syntax_score(std::string_view hypothesis, const Language& language, std::vector<std::string>* diagnostics = nullptr);

/// Each query runs with its own depth and step budgets; all queries share
/// one wall-clock deadline of limits.wall_timeout. A query that exceeds a
/// limit counts as misclassified.
Judgment judge(std::string_view hypothesis, const JudgeTask& task, const ResourceLimits& limits = {});
Judgment judge(std::string_view hypothesis, const TaskInstance& task, const ResourceLimits& limits = {});

struct JudgeItem {
  std::string hypothesis;
  const JudgeTask* task = nullptr;
};

/// Results in input order. Throws std::invalid_argument if parallelism < 1
/// or an item has no task.
std::vector<Judgment> judge_batch(const std::vector<JudgeItem>& items, const ResourceLimits& limits, int parallelism);

}  // namespace slr
