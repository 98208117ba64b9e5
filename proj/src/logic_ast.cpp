#include "slr/logic.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace slr {

namespace {

constexpr std::array<std::string_view, 10> kComparisonOps = {
    "=", "\\=", "==", "is", "=:=", "=\\=", "<", ">", ">=", "=<"};

bool term_is_ground(const Term& t) {
  return std::visit(
      [](const auto& n) -> bool {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Variable>) {
          return false;
        } else if constexpr (std::is_same_v<N, Compound>) {
          return std::all_of(n.args.begin(), n.args.end(), term_is_ground);
        } else if constexpr (std::is_same_v<N, ListTerm>) {
          if (n.tail && !term_is_ground(*n.tail)) return false;
          return std::all_of(n.items.begin(), n.items.end(), term_is_ground);
        } else {
          return true;
        }
      },
      t.node);
}

void flatten_conjunction(const Term& t, std::vector<BodyGoal>& out) {
  if (const auto* c = std::get_if<Compound>(&t.node); c && c->functor == "," && c->args.size() == 2) {
    flatten_conjunction(c->args[0], out);
    flatten_conjunction(c->args[1], out);
    return;
  }
  out.push_back(term_to_goal(t));
}

}  // namespace

bool Term::is_ground() const { return term_is_ground(*this); }

std::string Atom::key() const { return predicate + "/" + std::to_string(args.size()); }

bool Atom::is_ground() const { return std::all_of(args.begin(), args.end(), term_is_ground); }

BodyGoal BodyGoal::disjunction(BodyGoal l, BodyGoal r) {
  Disjunction d;
  d.branches.push_back(std::move(l));
  d.branches.push_back(std::move(r));
  return BodyGoal{std::move(d)};
}

bool is_builtin(std::string_view name, std::size_t arity) {
  if (arity == 2 && std::find(kComparisonOps.begin(), kComparisonOps.end(), name) != kComparisonOps.end())
    return true;
  if (arity == 0) return name == "!";
  if (arity == 3) return name == "findall";
  if (arity == 2)
    return name == "forall" || name == "length" || name == "sort" || name == "member" ||
           name == "max_list" || name == "min_list";
  return false;
}

Term atom_to_term(const Atom& atom) {
  if (atom.args.empty()) return Term::constant(atom.predicate);
  return Term::compound(atom.predicate, atom.args);
}

Atom term_to_atom(const Term& term) {
  if (const auto* c = std::get_if<Constant>(&term.node)) return Atom{c->name, {}};
  if (const auto* c = std::get_if<Compound>(&term.node)) return Atom{c->functor, c->args};
  throw std::invalid_argument("term is not callable: " + render(term));
}

BodyGoal term_to_goal(const Term& term) {
  if (term.is_variable()) throw std::invalid_argument("variable used as a goal: " + render(term));
  if (term.is_integer() || term.is_list()) throw std::invalid_argument("term is not callable: " + render(term));
  if (const auto* c = std::get_if<Constant>(&term.node)) {
    if (c->name == "!") return BodyGoal::builtin("!", {});
    return BodyGoal::literal(Atom{c->name, {}});
  }
  const auto& c = std::get<Compound>(term.node);
  if (c.functor == "," && c.args.size() == 2) {
    Conjunction conj;
    flatten_conjunction(term, conj.goals);
    return BodyGoal{std::move(conj)};
  }
  if (c.functor == ";" && c.args.size() == 2)
    return BodyGoal::disjunction(term_to_goal(c.args[0]), term_to_goal(c.args[1]));
  if (c.functor == "\\+" && c.args.size() == 1) {
    Negation neg;
    flatten_conjunction(c.args[0], neg.goals);
    return BodyGoal{std::move(neg)};
  }
  if (c.functor == "->" || c.functor == "*->")
    throw std::invalid_argument("if-then-else is not supported");
  if (is_builtin(c.functor, c.args.size())) return BodyGoal::builtin(c.functor, c.args);
  return BodyGoal::literal(Atom{c.functor, c.args});
}

Term body_to_term(const std::vector<BodyGoal>& goals) {
  if (goals.empty()) return Term::constant("true");
  Term acc = goal_to_term(goals.back());
  for (auto it = goals.rbegin() + 1; it != goals.rend(); ++it)
    acc = Term::compound(",", {goal_to_term(*it), std::move(acc)});
  return acc;
}

Term goal_to_term(const BodyGoal& goal) {
  return std::visit(
      [](const auto& g) -> Term {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, Literal>) {
          return atom_to_term(g.atom);
        } else if constexpr (std::is_same_v<G, Negation>) {
          return Term::compound("\\+", {body_to_term(g.goals)});
        } else if constexpr (std::is_same_v<G, Conjunction>) {
          return body_to_term(g.goals);
        } else if constexpr (std::is_same_v<G, Disjunction>) {
          return Term::compound(";", {goal_to_term(g.left()), goal_to_term(g.right())});
        } else {
          if (g.args.empty()) return Term::constant(g.op);
          return Term::compound(g.op, g.args);
        }
      },
      goal.node);
}

std::string extract_program_text(std::string_view reply) {
  // Last fenced block wins.
  std::string_view fenced;
  bool found_fence = false;
  std::size_t pos = 0;
  while (true) {
    auto open = reply.find("```", pos);
    if (open == std::string_view::npos) break;
    auto line_end = reply.find('\n', open);
    if (line_end == std::string_view::npos) break;
    auto close = reply.find("```", line_end);
    if (close == std::string_view::npos) break;
    fenced = reply.substr(line_end + 1, close - line_end - 1);
    found_fence = true;
    pos = close + 3;
  }
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
  };
  if (found_fence) return trim(fenced);

  std::vector<std::size_t> starts{0};
  for (std::size_t i = 0; i < reply.size(); ++i)
    if (reply[i] == '\n' && i + 1 < reply.size()) starts.push_back(i + 1);
  for (std::size_t s : starts) {
    std::string candidate = trim(reply.substr(s));
    if (candidate.empty()) continue;
    try {
      if (!parse_program(candidate).clauses.empty()) return candidate;
    } catch (const SyntaxError&) {
    }
  }
  return {};
}

}  // namespace slr
