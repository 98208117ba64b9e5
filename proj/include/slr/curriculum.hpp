// The twenty-level benchmark curriculum: per-level language and synthesis
// settings, split building with rule novelty between train and test, and a
// combinatorial size estimate.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slr/language.hpp"
#include "slr/rational.hpp"
#include "slr/rules.hpp"
#include "slr/synthesizer.hpp"

namespace slr {

enum class Tier { basic, easy, medium, hard };

std::string to_string(Tier t);
/// Throws std::invalid_argument.
Tier tier_from_string(std::string_view s);
/// basic for 1-5, easy 6-10, medium 11-15, hard 16-20.
Tier tier_of_level(int level);

struct SplitSizes {
  int train = 1000;
  int eval = 10;
  int test = 50;
  friend bool operator==(const SplitSizes&, const SplitSizes&) = default;
};

struct LevelSpec {
  int level = 1;
  Tier tier = Tier::basic;
  Language language;
  int kappa_total = 2;
  BackgroundPolicy background_policy = BackgroundPolicy::mirror;
  RuleLength rule_length;
  Rational llm_rule_fraction = 0;
  SplitSizes split_sizes;
};

std::vector<LevelSpec> default_curriculum();

/// Applies {"levels": {"<n>": {...}}} to matching specs. Keys: kappa_total,
/// rule_length [min, max], background_policy, llm_rule_fraction ("n/d" or a
/// decimal), split_sizes {train, eval, test}, language (a full language
/// object). Throws std::invalid_argument on unknown levels or keys.
void apply_curriculum_overrides(std::vector<LevelSpec>& specs, const nlohmann::json& config);

enum class Split { train, eval, test };
std::string to_string(Split s);

struct BuildOptions {
  /// Used for the llm_rule_fraction share of tasks. The offline default is
  /// the template pool.
  RulePolicy llm_policy = TemplatePool::reference();
  ResourceLimits limits;
  /// Replaces the level's split sizes when set.
  std::optional<SplitSizes> split_sizes;
  /// Synthesis attempts per task slot before the slot is given up.
  int slot_attempts = 40;
};

struct LevelBuild {
  LevelSpec spec;
  std::vector<TaskInstance> train, eval, test;
  std::vector<std::string> warnings;

  const std::vector<TaskInstance>& split(Split s) const;
};

/// Task seeds are derived from (dataset_seed, level, split, slot, attempt).
/// The test split is built first from its half of the rule space (see
/// is_test_rule), falling back to any rule once that half has no new task
/// left; train and eval then exclude every rule the test split used.
/// Duplicate tasks within a split are redrawn. Slots that stay unfilled are
/// reported in warnings. SynthesisFailure is rethrown with the level in its
/// message when every attempt for a slot fails to synthesize.
LevelBuild build_level(const LevelSpec& spec, std::uint64_t dataset_seed, const BuildOptions& options = {});

/// True if the canonical rule belongs to the half of the rule space the
/// test split draws from first.
bool is_test_rule(const Clause& rule);

/// Order-independent identity of a task: canonical rule plus the labeled,
/// id-anonymized per-train backgrounds.
std::string task_key(const TaskInstance& task);

struct NoveltyCollision {
  std::size_t train_index = 0;
  std::size_t test_index = 0;
  std::string canonical_rule;
};

/// Train/test pairs whose rules are equal up to variable renaming and
/// reordering of top-level body goals.
std::vector<NoveltyCollision> verify_novelty(const std::vector<TaskInstance>& train,
                                             const std::vector<TaskInstance>& test);

/// log10(|rules| * |backgrounds|), computed exactly on integers before the
/// logarithm.
///
/// Per car, A = number of grammatical assignments of one value to each
/// non-structural attribute. A train with n cars has A^n descriptions and
/// S = sum of A^n over the car range. Uniform levels draw kappa trains
/// independently: S^kappa. Mirror levels draw kappa/2 pairs; a twin
/// re-draws at most one attribute per car, giving (S * V)^(kappa/2) with
/// V = sum of d^n and d the largest attribute domain.
///
/// Rules of length r: (m * L)^r with m = min(max cars, r) car variables and
/// L = sum over attributes of (|domain| + 1), the +1 being the variable
/// form. Summed over the level's lengths. When llm_rule_fraction > 0 the
/// instantiations of every usable template are added.
double estimate_comb_size(const LevelSpec& spec);

}  // namespace slr
