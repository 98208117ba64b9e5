// Ground-truth rule generation: uniform sampling over the language, a pool
// of structured templates, and model-guided generation through LlmClient.
#pragma once

#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "slr/language.hpp"
#include "slr/logic.hpp"
#include "slr/rng.hpp"

namespace slr {

class GenerationExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LlmUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Text completion service. Implementations throw LlmUnavailable on
/// transport failure.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

/// Replays canned replies in order, repeating the last one.
class StubLlmClient : public LlmClient {
 public:
  explicit StubLlmClient(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::string complete(const std::string& prompt) override;
  std::size_t calls() const { return calls_; }
  const std::string& last_prompt() const { return last_prompt_; }

 private:
  std::vector<std::string> replies_;
  std::size_t calls_ = 0;
  std::string last_prompt_;
};

struct RuleTemplate {
  std::string name;
  /// Clause text with typed holes such as {COLOR1}.
  std::string pattern;
  std::set<std::string> feature_tags;
  int effective_length = 0;
  /// Non-builtin body predicates other than the head's.
  std::set<std::string> predicates;
  /// Hole names in order of first appearance.
  std::vector<std::string> holes;
};

class TemplatePool {
 public:
  explicit TemplatePool(std::vector<RuleTemplate> templates);
  /// Parses "%% name" separated blocks.
  static TemplatePool from_text(std::string_view text);
  /// The built-in pool of twenty structured rule shapes.
  static const TemplatePool& reference();

  const std::vector<RuleTemplate>& templates() const { return templates_; }

  /// Templates usable in `language` whose effective length is closest to
  /// r_len. Empty if none is usable.
  std::vector<const RuleTemplate*> closest(const Language& language, int r_len) const;

 private:
  std::vector<RuleTemplate> templates_;
};

/// Every predicate the template uses exists in the language and every hole
/// type has a non-empty domain.
bool template_usable(const RuleTemplate& t, const Language& language);

/// The domain id of a hole: "COLOR1" -> "COLOR".
std::string hole_type(const std::string& hole);

/// Fills the holes with sampled in-domain constants and retargets the head
/// to the language's positive target.
Clause instantiate_template(const RuleTemplate& t, const Language& language, Rng& rng);

struct LlmGuided {
  std::shared_ptr<LlmClient> client;
  int retry_cap = 3;
};

struct UniformPolicy {};

using RulePolicy = std::variant<UniformPolicy, LlmGuided, TemplatePool>;

std::string policy_name(const RulePolicy& policy);

/// Probability that a uniform slot uses a ground constant rather than a
/// variable with a comparison companion.
inline constexpr double kGroundSlotProbability = 0.8;

/// r_len attribute or comparison literals; has_car links are not counted.
Clause sample_rule_uniform(const Language& language, int r_len, Rng& rng);

Clause generate_rule_llm(const TemplatePool& pool, const Language& language, int r_len, Rng& rng);
Clause generate_rule_llm(const LlmGuided& policy, const Language& language, int r_len, Rng& rng);

/// Dispatches on the policy.
Clause generate_rule(const RulePolicy& policy, const Language& language, int r_len, Rng& rng);

/// One indented "name(TYPE, ...)" line per predicate.
std::string describe_predicates(const Language& language);

/// The twenty reference rule listings shown to the model as examples, in
/// order.
std::vector<Clause> reference_corpus();

/// The prompt sent to an LlmClient for rule generation.
std::string rule_generation_prompt(const Language& language, int r_len);

struct RuleValidation {
  bool parses = true;
  bool head_is_target = false;
  bool known_predicates = false;
  bool constants_in_domain = false;
  bool contains_cut = false;
  std::vector<std::string> problems;

  bool ok() const { return parses && head_is_target && known_predicates && constants_in_domain; }
};

/// `local_predicates` ("name/arity") are accepted in bodies in addition to
/// the language and builtins.
RuleValidation validate_rule(const Clause& rule, const Language& language,
                             const std::set<std::string>& local_predicates = {});
RuleValidation validate_rule_text(std::string_view text, const Language& language);

/// Top-level body goals other than has_car/2 literals.
int rule_length(const Clause& rule);

/// negation, disjunction, aggregation, universal, arithmetic, comparison,
/// recursion, list, existential, cut.
std::set<std::string> feature_tags(const Clause& rule);

/// Predicate keys ("name/arity") of every literal in the body, including
/// goals nested in negation, disjunction, findall and forall.
std::set<std::string> body_predicates(const Clause& rule);

/// Text identifying a rule up to variable renaming and reordering of
/// top-level body goals.
std::string canonical_rule(const Clause& rule);

}  // namespace slr
