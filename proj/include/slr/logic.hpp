// Object-language AST: terms, atoms, body goals, clauses and programs, plus
// the text parser and canonical printer.
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace slr {

struct Term;

struct Constant {
  std::string name;
  friend bool operator==(const Constant&, const Constant&) = default;
};

struct Variable {
  std::string name;
  friend bool operator==(const Variable&, const Variable&) = default;
};

struct IntLiteral {
  std::int64_t value = 0;
  friend bool operator==(const IntLiteral&, const IntLiteral&) = default;
};

struct Compound {
  std::string functor;
  std::vector<Term> args;
  friend bool operator==(const Compound&, const Compound&);
};

/// `[a, b | Tail]`. A null tail denotes a proper list.
struct ListTerm {
  std::vector<Term> items;
  std::shared_ptr<const Term> tail;
  friend bool operator==(const ListTerm&, const ListTerm&);
};

struct Term {
  using Node = std::variant<Constant, Variable, IntLiteral, Compound, ListTerm>;
  Node node;

  static Term constant(std::string name) { return Term{Constant{std::move(name)}}; }
  static Term var(std::string name) { return Term{Variable{std::move(name)}}; }
  static Term integer(std::int64_t v) { return Term{IntLiteral{v}}; }
  static Term compound(std::string functor, std::vector<Term> args) {
    return Term{Compound{std::move(functor), std::move(args)}};
  }
  static Term list(std::vector<Term> items, std::shared_ptr<const Term> tail = nullptr) {
    return Term{ListTerm{std::move(items), std::move(tail)}};
  }

  bool is_variable() const { return std::holds_alternative<Variable>(node); }
  bool is_constant() const { return std::holds_alternative<Constant>(node); }
  bool is_integer() const { return std::holds_alternative<IntLiteral>(node); }
  bool is_compound() const { return std::holds_alternative<Compound>(node); }
  bool is_list() const { return std::holds_alternative<ListTerm>(node); }
  bool is_ground() const;

  friend bool operator==(const Term& a, const Term& b) { return a.node == b.node; }
};

inline bool operator==(const Compound& a, const Compound& b) {
  return a.functor == b.functor && a.args == b.args;
}

inline bool operator==(const ListTerm& a, const ListTerm& b) {
  if (a.items != b.items) return false;
  if (!a.tail || !b.tail) return !a.tail && !b.tail;
  return *a.tail == *b.tail;
}

struct Atom {
  std::string predicate;
  std::vector<Term> args;

  std::size_t arity() const { return args.size(); }
  /// "name/arity"
  std::string key() const;
  bool is_ground() const;
  friend bool operator==(const Atom&, const Atom&) = default;
};

struct BodyGoal;

struct Literal {
  Atom atom;
  friend bool operator==(const Literal&, const Literal&) = default;
};

struct Negation {
  std::vector<BodyGoal> goals;
  friend bool operator==(const Negation&, const Negation&);
};

/// Flat conjunction with at least two goals. Top-level clause bodies are
/// stored directly in Clause::body and never wrapped in a Conjunction.
struct Conjunction {
  std::vector<BodyGoal> goals;
  friend bool operator==(const Conjunction&, const Conjunction&);
};

struct Disjunction {
  std::vector<BodyGoal> branches;  // exactly two: left, right
  const BodyGoal& left() const { return branches.at(0); }
  const BodyGoal& right() const { return branches.at(1); }
  friend bool operator==(const Disjunction&, const Disjunction&);
};

struct BuiltinCall {
  std::string op;
  std::vector<Term> args;
  friend bool operator==(const BuiltinCall&, const BuiltinCall&);
};

struct BodyGoal {
  using Node = std::variant<Literal, Negation, Conjunction, Disjunction, BuiltinCall>;
  Node node;

  static BodyGoal literal(Atom a) { return BodyGoal{Literal{std::move(a)}}; }
  static BodyGoal builtin(std::string op, std::vector<Term> args) {
    return BodyGoal{BuiltinCall{std::move(op), std::move(args)}};
  }
  static BodyGoal negation(std::vector<BodyGoal> goals) { return BodyGoal{Negation{std::move(goals)}}; }
  static BodyGoal disjunction(BodyGoal l, BodyGoal r);

  friend bool operator==(const BodyGoal& a, const BodyGoal& b) { return a.node == b.node; }
};

inline bool operator==(const Negation& a, const Negation& b) { return a.goals == b.goals; }
inline bool operator==(const Conjunction& a, const Conjunction& b) { return a.goals == b.goals; }
inline bool operator==(const Disjunction& a, const Disjunction& b) { return a.branches == b.branches; }
inline bool operator==(const BuiltinCall& a, const BuiltinCall& b) {
  return a.op == b.op && a.args == b.args;
}

struct Clause {
  Atom head;
  std::vector<BodyGoal> body;

  bool is_fact() const { return body.empty(); }
  friend bool operator==(const Clause&, const Clause&) = default;
};

struct Program {
  std::vector<Clause> clauses;
  friend bool operator==(const Program&, const Program&) = default;
};

/// Closed builtin set understood by the engine and accepted by validation.
/// `!` is accepted (arity 0) but executes as `true`.
bool is_builtin(std::string_view name, std::size_t arity);

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(std::size_t offset, std::size_t line, std::size_t column, const std::string& message);

  std::size_t offset() const noexcept { return offset_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::size_t offset_, line_, column_;
  std::string message_;
};

Program parse_program(std::string_view text);
Clause parse_clause(std::string_view text);
/// A single term, optionally terminated by a period.
Term parse_term(std::string_view text);
/// A single atom, optionally terminated by a period.
Atom parse_atom(std::string_view text);

Term atom_to_term(const Atom& atom);
Atom term_to_atom(const Term& term);  // throws std::invalid_argument if not callable
Term goal_to_term(const BodyGoal& goal);
BodyGoal term_to_goal(const Term& term);  // throws std::invalid_argument
Term body_to_term(const std::vector<BodyGoal>& goals);

std::string render(const Term& term);
std::string render(const Atom& atom);
std::string render(const BodyGoal& goal);
std::string render(const Clause& clause);
/// One clause per line, each terminated by '\n'.
std::string render(const Program& program);

/// Pulls the clause text out of a free-form model reply: the last fenced
/// code block if any, otherwise the longest line-aligned suffix that parses.
/// Returns an empty string when nothing usable is found.
std::string extract_program_text(std::string_view reply);

}  // namespace slr
