// Entailment checking for the object language: a top-down resolution engine
// with negation as failure and a closed builtin set, and a bottom-up
// fixpoint oracle for the function-free definite fragment.
#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "slr/logic.hpp"

namespace slr {

struct ResourceLimits {
  std::uint64_t max_depth = 10'000;
  std::uint64_t max_steps = 1'000'000;
  std::chrono::milliseconds wall_timeout{5000};

  /// Throws std::invalid_argument unless every limit is strictly positive.
  void validate() const;
};

class EntailmentOutcome {
 public:
  enum class Kind { entailed, not_entailed, resource_exceeded };

  static EntailmentOutcome entailed() { return EntailmentOutcome(Kind::entailed, {}); }
  static EntailmentOutcome not_entailed() { return EntailmentOutcome(Kind::not_entailed, {}); }
  static EntailmentOutcome resource_exceeded(std::string reason) {
    return EntailmentOutcome(Kind::resource_exceeded, std::move(reason));
  }

  Kind kind() const { return kind_; }
  bool is_entailed() const { return kind_ == Kind::entailed; }
  bool is_not_entailed() const { return kind_ == Kind::not_entailed; }
  bool is_resource_exceeded() const { return kind_ == Kind::resource_exceeded; }
  /// One of: depth, steps, timeout, memory, instantiation, type_error,
  /// evaluation_error. Empty unless resource_exceeded.
  const std::string& reason() const { return reason_; }

  friend bool operator==(const EntailmentOutcome&, const EntailmentOutcome&) = default;

 private:
  EntailmentOutcome(Kind k, std::string r) : kind_(k), reason_(std::move(r)) {}
  Kind kind_;
  std::string reason_;
};

std::string to_string(const EntailmentOutcome& outcome);

/// Raised by solve_all when the search runs out of budget or hits an
/// evaluation error. entails() reports the same conditions as an outcome.
class ResourceExceeded : public std::runtime_error {
 public:
  explicit ResourceExceeded(std::string reason)
      : std::runtime_error("resource limit exceeded: " + reason), reason_(std::move(reason)) {}
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string reason_;
};

class UnsupportedConstruct : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bindings of the goal's named variables, ordered by name. Unbound
/// variables appear as fresh `_G<n>` variables.
using Substitution = std::map<std::string, Term>;

/// A compiled program. Not thread-safe; use one instance per thread.
class Engine {
 public:
  explicit Engine(const Program& program);
  ~Engine();
  Engine(Engine&&) noexcept;
  Engine& operator=(Engine&&) noexcept;

  /// Precondition: query is ground (throws std::invalid_argument otherwise).
  EntailmentOutcome entails(const Atom& query, const ResourceLimits& limits = {});
  std::vector<Substitution> solve_all(const BodyGoal& goal, const ResourceLimits& limits = {});

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

EntailmentOutcome entails(const Program& program, const Atom& query, const ResourceLimits& limits = {});
std::vector<Substitution> solve_all(const Program& program, const BodyGoal& goal,
                                    const ResourceLimits& limits = {});

/// Standard order of terms: variables < integers < atoms < compounds.
/// Proper lists compare as nested '.'/2 compounds.
int compare_terms(const Term& a, const Term& b);

struct AtomLess {
  bool operator()(const Atom& a, const Atom& b) const;
};
using AtomSet = std::set<Atom, AtomLess>;

/// Least Herbrand model of a function-free definite program. Throws
/// UnsupportedConstruct for negation, builtins, disjunction or compound terms.
AtomSet forward_chain(const Program& program);

}  // namespace slr
