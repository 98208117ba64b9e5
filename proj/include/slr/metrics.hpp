// Scoring model responses over a dataset: per-level counts, the summed
// solve rate across levels, pooled tier and syntax percentages, and API cost.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "slr/curriculum.hpp"
#include "slr/judge.hpp"
#include "slr/rational.hpp"

namespace slr {

struct LevelStats {
  int level = 1;
  std::int64_t tasks = 0;
  std::int64_t solved = 0;
  std::int64_t syntax_valid = 0;
  Rational partial_sum = 0;

  void add(const Judgment& j);
  /// Throws std::invalid_argument when a count is negative or out of order.
  void validate() const;
};

/// Merges stats by level, sorted by level.
std::vector<LevelStats> merge_levels(const std::vector<LevelStats>& stats);

/// Sum over levels of solved / tasks. Throws std::invalid_argument if a level
/// has no tasks.
Rational lrl(const std::vector<LevelStats>& per_level);

/// Percentage of solved tasks pooled over each tier's levels. Tiers with no
/// tasks are omitted.
std::map<Tier, Rational> tier_accuracy(const std::vector<LevelStats>& per_level,
                                       const std::function<Tier(int)>& tier_of = tier_of_level);

/// Percentage of syntactically valid responses pooled over all levels; 0
/// when there are no tasks.
Rational syntax_proportion(const std::vector<LevelStats>& per_level);

/// Rational to a double rounded to `places` decimals.
double rounded(const Rational& r, int places = 6);

/// Exact decimal parse ("0.075" -> 3/40). Throws std::invalid_argument.
Rational parse_decimal(std::string_view text);

class UnknownModel : public std::out_of_range {
 public:
  explicit UnknownModel(const std::string& model) : std::out_of_range("no pricing for model " + model) {}
};

/// USD per million tokens.
struct ModelRates {
  Rational input = 0;
  std::optional<Rational> cached_input;
  Rational output = 0;
};

class PricingTable {
 public:
  /// Published per-model rates, as shipped in data/pricing.csv.
  static const PricingTable& reference();
  /// Header "model,input,cached_input,output"; cached_input may be empty.
  /// Throws std::invalid_argument on malformed rows or negative rates.
  static PricingTable from_csv(std::string_view text);
  /// {"model": {"input": r, "cached_input": r?, "output": r}, ...} with rates
  /// as numbers or decimal strings.
  static PricingTable from_json(const nlohmann::json& j);

  void set(const std::string& model, ModelRates rates);
  /// Throws UnknownModel.
  const ModelRates& at(const std::string& model) const;
  bool contains(const std::string& model) const { return rates_.count(model) > 0; }
  const std::map<std::string, ModelRates>& rows() const { return rates_; }

 private:
  std::map<std::string, ModelRates> rates_;
};

/// Input and cached counts are disjoint: `input` holds uncached prompt
/// tokens only.
struct TokenCounts {
  std::int64_t input = 0;
  std::optional<std::int64_t> cached_input;
  std::int64_t output = 0;

  TokenCounts& operator+=(const TokenCounts& o);
};

struct CostReport {
  std::map<std::string, Rational> per_model;
  Rational total = 0;
};

/// Cached tokens use the cached rate when the model has one and the input
/// rate otherwise. Throws UnknownModel, or std::invalid_argument for
/// negative counts.
CostReport compute_cost(const std::map<std::string, TokenCounts>& usage, const PricingTable& pricing);

enum class ExtractionRule {
  /// extract_program_text: last fenced block, else the longest parsing
  /// suffix.
  last_fence,
  /// The whole response.
  raw,
};

std::string to_string(ExtractionRule r);
ExtractionRule extraction_rule_from_string(std::string_view s);

/// Empty when nothing suitable is found.
std::string extract_hypothesis(std::string_view response, ExtractionRule rule);

struct EvalItem {
  int level = 1;
  const JudgeTask* task = nullptr;
  /// nullopt or empty text scores syntax 0.
  std::optional<std::string> response;
};

struct EvalResult {
  std::vector<Judgment> judgments;
  std::vector<LevelStats> levels;
};

EvalResult evaluate(const std::vector<EvalItem>& items, const ResourceLimits& limits, int parallelism,
                    ExtractionRule rule = ExtractionRule::last_fence);

/// levels[], lrl, syntax_pct, tier_accuracy_pct, cost (when given), and
/// pass_at_k (always null: single-sample scoring only).
nlohmann::json report_json(const std::vector<LevelStats>& levels, const std::optional<CostReport>& cost = std::nullopt);

}  // namespace slr
