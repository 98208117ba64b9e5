// Vocabulary, grounding domains and grammar constraints of a task language,
// with the per-level presets of the train curriculum.
#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "slr/logic.hpp"

namespace slr {

// Domain ids with special handling: TRAIN and CAR range over the ids passed
// to herbrand_base, NUM is capped at the number of cars.
inline constexpr const char* kTrainType = "TRAIN";
inline constexpr const char* kCarType = "CAR";
inline constexpr const char* kNumType = "NUM";

struct PredicateSpec {
  std::string name;
  std::vector<std::string> arg_types;
  /// Probability that a sampled car carries a fact for this predicate.
  double presence = 1.0;
  /// Sentence for natural-language prompts; {0}, {1}, ... are the arguments.
  std::string sentence;

  std::size_t arity() const { return arg_types.size(); }
  /// A CAR-typed attribute: arity 2, first argument CAR.
  bool is_car_attribute() const;
  friend bool operator==(const PredicateSpec&, const PredicateSpec&) = default;
};

/// At most one value per car.
struct FunctionalAttribute {
  std::string predicate;
  friend bool operator==(const FunctionalAttribute&, const FunctionalAttribute&) = default;
};

/// When an atom matching `condition` is present, atoms matching `forbidden`
/// (under the condition's variable bindings) are excluded unless their last
/// argument is one of `allowed`.
struct MutualExclusion {
  Atom condition;
  Atom forbidden;
  std::vector<Term> allowed;
  friend bool operator==(const MutualExclusion&, const MutualExclusion&) = default;
};

using GrammarConstraint = std::variant<FunctionalAttribute, MutualExclusion>;

struct CarRange {
  int min = 1;
  int max = 1;
  friend bool operator==(const CarRange&, const CarRange&) = default;
};

class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

struct Language {
  std::vector<PredicateSpec> predicates;
  std::map<std::string, std::vector<Term>> domains;
  std::vector<GrammarConstraint> constraints;
  std::string positive_target = "eastbound";
  std::optional<std::string> negative_target = std::string("westbound");
  CarRange num_cars;

  const PredicateSpec* find(std::string_view name, std::size_t arity) const;
  const PredicateSpec* find(std::string_view name) const;
  bool has(std::string_view name) const { return find(name) != nullptr; }
  /// Domain values of a type id. TRAIN and CAR have none of their own.
  const std::vector<Term>& domain(const std::string& type) const;

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;

  friend bool operator==(const Language&, const Language&) = default;
};

/// has_car/2 and car_num/2 describe train structure rather than car looks.
bool is_structural(std::string_view predicate);

/// All well-typed ground atoms over the given ids, in predicate order then
/// argument domain order.
std::vector<Atom> herbrand_base(const Language& language, const std::vector<std::string>& train_ids,
                                const std::vector<std::string>& car_ids);

/// Type check against the language. TRAIN and CAR accept any constant; NUM
/// accepts 1..num_cars.max.
bool is_well_typed(const Atom& atom, const Language& language);

/// Drops atoms that break a grammar constraint, judged against the whole
/// set: the later of two values for a functional attribute, and atoms
/// forbidden by a mutual exclusion whose condition is present.
std::vector<Atom> filter_by_grammar(const std::vector<Atom>& atoms, const Language& language);

/// Descriptions of every constraint violation in a set of atoms; empty when
/// the set is well-typed and grammatical.
std::vector<std::string> grammar_violations(const std::vector<Atom>& atoms, const Language& language);

inline constexpr int kLevels = 20;

/// Preset for curriculum level 1..20. Throws RangeError outside that range.
Language level_language(int level);

/// The vocabulary's full predicate set in expansion order.
std::vector<PredicateSpec> full_vocabulary();

/// Natural-language rendering of a ground atom through its sentence template.
std::string atom_sentence(const Atom& atom, const Language& language);

nlohmann::json to_json(const Language& language);
/// Throws std::invalid_argument on malformed configs.
Language language_from_json(const nlohmann::json& j);

}  // namespace slr
