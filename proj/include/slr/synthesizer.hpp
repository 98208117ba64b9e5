// Task synthesis: sample a ground-truth rule, then draw labeled train
// backgrounds by stratified rejection sampling until both quotas are met.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "slr/engine.hpp"
#include "slr/language.hpp"
#include "slr/logic.hpp"
#include "slr/rng.hpp"
#include "slr/rules.hpp"

namespace slr {

class SynthesisFailure : public std::runtime_error {
 public:
  SynthesisFailure(const std::string& what, nlohmann::json diagnostics)
      : std::runtime_error(what), diagnostics_(std::move(diagnostics)) {}
  const nlohmann::json& diagnostics() const { return diagnostics_; }

 private:
  nlohmann::json diagnostics_;
};

class MirrorFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BackgroundPolicy { uniform, mirror };

std::string to_string(BackgroundPolicy p);
/// Accepts "uniform" and "mirror". Throws std::invalid_argument otherwise.
BackgroundPolicy background_policy_from_string(std::string_view s);

struct RuleLength {
  int min = 1;
  int max = 1;
  friend bool operator==(const RuleLength&, const RuleLength&) = default;
};

struct TaskConfig {
  RulePolicy rule_policy = UniformPolicy{};
  RuleLength rule_length;
  BackgroundPolicy background_policy = BackgroundPolicy::uniform;
  int kappa_pos = 1;
  int kappa_neg = 1;
  std::uint64_t seed = 0;
  ResourceLimits limits;
  /// Draws allowed since the last accepted example before the rule is
  /// replaced.
  int max_attempts_per_example = 5000;
  int max_rule_resamples = 25;
  /// A rule is replaced early when its first `screen_probes` draws never
  /// produce both labels (uniform) or never form a twin pair (mirror).
  /// Zero disables the screen.
  int screen_probes = 64;
  /// Flips tried per base background when forming a mirror twin.
  int mirror_flips = 32;
  /// Rules for which this returns false are replaced like failed ones.
  std::function<bool(const Clause&)> rule_filter;

  /// Throws std::invalid_argument.
  void validate() const;
};

struct ExampleBackground {
  std::string train_id;
  std::vector<Atom> atoms;
};

struct LabeledExample {
  ExampleBackground background;
  Atom query;
  bool positive = false;
};

struct TaskInstance {
  Language language;
  Clause rule;
  /// Per-train blocks in train id order.
  std::vector<LabeledExample> examples;
  std::vector<Atom> positives;
  std::vector<Atom> negatives;
  /// (positive train, negative train) for mirror-sampled tasks.
  std::vector<std::pair<std::string, std::string>> twins;
  std::string prompt_logic;
  std::string prompt_nl;
  std::optional<int> level;
  std::uint64_t seed = 0;
  nlohmann::json metadata = nlohmann::json::object();

  /// Union of the per-example backgrounds.
  Program background() const;
  /// Background facts, then positive example facts, then one
  /// "% negative: q." line per negative.
  std::string validation_program() const;
};

/// Car ids are c<first_car>, c<first_car+1>, ...
ExampleBackground sample_background(const Language& language, Rng& rng, const std::string& train_id = "t1",
                                    int first_car = 1);

/// (y, q): q is the positive target applied to the train. Outcomes other
/// than entailment give y = false; `outcome` receives the raw result.
std::pair<bool, Atom> assign_label(const Clause& rule, const ExampleBackground& background, const Language& language,
                                   const ResourceLimits& limits, EntailmentOutcome* outcome = nullptr);

/// Twin backgrounds with the same car structure whose atoms differ only in
/// non-structural predicates of the rule body, one entailing its query and
/// one not. Returns (positive, negative) with train ids t1 and t2.
std::pair<ExampleBackground, ExampleBackground> mirror_pair(const Language& language, const Clause& rule, Rng& rng,
                                                            const ResourceLimits& limits = {}, int attempts = 64,
                                                            int flips = 32);

/// Background atoms rendered with the train id replaced by T and car ids by
/// C1, C2, ... in order of first appearance, sorted.
std::vector<std::string> anonymized_atoms(const ExampleBackground& background);

TaskInstance synthesize(const Language& language, const TaskConfig& config);

enum class PromptStyle { logic, natural };

std::string emit_prompt(const TaskInstance& task, PromptStyle style);

}  // namespace slr
