// Bottom-up fixpoint for function-free definite programs. Shares nothing
// with the resolution engine so the two can check each other.
#include <algorithm>
#include <map>

#include "slr/engine.hpp"

namespace slr {

namespace {

int rank(const Term& t) {
  if (t.is_variable()) return 0;
  if (t.is_integer()) return 1;
  if (std::holds_alternative<Constant>(t.node)) return 2;
  if (const auto* l = std::get_if<ListTerm>(&t.node); l && l->items.empty() && !l->tail) return 2;
  return 3;
}

const std::string& atom_name(const Term& t) {
  static const std::string nil = "[]";
  if (const auto* c = std::get_if<Constant>(&t.node)) return c->name;
  return nil;
}

// A compound or non-empty list viewed as functor, arity and argument terms.
struct CompoundView {
  std::string functor;
  std::vector<Term> args;
};

CompoundView view(const Term& t) {
  if (const auto* c = std::get_if<Compound>(&t.node)) return {c->functor, c->args};
  const auto& l = std::get<ListTerm>(t.node);
  Term rest = l.items.size() > 1 ? Term::list({l.items.begin() + 1, l.items.end()}, l.tail)
                                 : (l.tail ? *l.tail : Term::list({}));
  return {".", {l.items[0], rest}};
}

template <class T>
int three_way(const T& a, const T& b) {
  return a < b ? -1 : (b < a ? 1 : 0);
}

using Subst = std::map<std::string, Term>;

void check_function_free(const Atom& a) {
  for (const auto& t : a.args)
    if (!t.is_variable() && !t.is_integer() && !std::holds_alternative<Constant>(t.node))
      throw UnsupportedConstruct("compound term in " + render(a));
}

class Fixpoint {
 public:
  explicit Fixpoint(const Program& p) : program_(p) {
    for (const auto& c : p.clauses) {
      check_function_free(c.head);
      for (const auto& t : c.head.args)
        if (!t.is_variable()) universe_.push_back(t);
      for (const auto& g : c.body) {
        const auto* lit = std::get_if<Literal>(&g.node);
        if (!lit) throw UnsupportedConstruct("non-literal goal: " + render(g));
        check_function_free(lit->atom);
        for (const auto& t : lit->atom.args)
          if (!t.is_variable()) universe_.push_back(t);
      }
    }
    std::sort(universe_.begin(), universe_.end(), [](const Term& a, const Term& b) { return compare_terms(a, b) < 0; });
    universe_.erase(std::unique(universe_.begin(), universe_.end()), universe_.end());
  }

  AtomSet run() {
    bool changed = true;
    while (changed) {
      changed = false;
      by_key_.clear();
      for (const auto& a : model_) by_key_[a.key()].push_back(a);
      for (const auto& c : program_.clauses) {
        std::vector<Atom> derived;
        Subst s;
        join(c, 0, s, derived);
        for (auto& a : derived)
          if (model_.insert(std::move(a)).second) changed = true;
      }
    }
    return model_;
  }

 private:
  void join(const Clause& c, std::size_t i, Subst& s, std::vector<Atom>& out) {
    if (i == c.body.size()) {
      ground_head(c.head, 0, s, out);
      return;
    }
    const Atom& goal = std::get<Literal>(c.body[i].node).atom;
    auto it = by_key_.find(goal.key());
    if (it == by_key_.end()) return;
    for (const Atom& fact : it->second) {
      Subst next = s;
      if (match(goal, fact, next)) join(c, i + 1, next, out);
    }
  }

  static bool match(const Atom& pattern, const Atom& fact, Subst& s) {
    for (std::size_t k = 0; k < pattern.args.size(); ++k) {
      const Term& p = pattern.args[k];
      if (const auto* v = std::get_if<Variable>(&p.node)) {
        if (v->name == "_") continue;
        auto [it, inserted] = s.emplace(v->name, fact.args[k]);
        if (!inserted && !(it->second == fact.args[k])) return false;
      } else if (!(p == fact.args[k])) {
        return false;
      }
    }
    return true;
  }

  // Head variables not bound by the body range over every constant.
  void ground_head(const Atom& head, std::size_t k, Subst& s, std::vector<Atom>& out) {
    if (k == head.args.size()) {
      Atom a{head.predicate, {}};
      for (const auto& t : head.args) {
        if (const auto* v = std::get_if<Variable>(&t.node)) {
          a.args.push_back(s.at(v->name));
        } else {
          a.args.push_back(t);
        }
      }
      out.push_back(std::move(a));
      return;
    }
    const auto* v = std::get_if<Variable>(&head.args[k].node);
    if (!v || (v->name != "_" && s.count(v->name))) {
      ground_head(head, k + 1, s, out);
      return;
    }
    for (const auto& value : universe_) {
      Subst next = s;
      Atom h = head;
      if (v->name == "_") {
        h.args[k] = value;
      } else {
        next.emplace(v->name, value);
      }
      ground_head(h, k + 1, next, out);
    }
  }

  const Program& program_;
  std::vector<Term> universe_;
  AtomSet model_;
  std::map<std::string, std::vector<Atom>> by_key_;
};

}  // namespace

int compare_terms(const Term& a, const Term& b) {
  const int ra = rank(a), rb = rank(b);
  if (ra != rb) return ra < rb ? -1 : 1;
  switch (ra) {
    case 0: return three_way(std::get<Variable>(a.node).name, std::get<Variable>(b.node).name);
    case 1: return three_way(std::get<IntLiteral>(a.node).value, std::get<IntLiteral>(b.node).value);
    case 2: return three_way(atom_name(a), atom_name(b));
    default: break;
  }
  const CompoundView va = view(a), vb = view(b);
  if (va.args.size() != vb.args.size()) return va.args.size() < vb.args.size() ? -1 : 1;
  if (int c = three_way(va.functor, vb.functor); c != 0) return c;
  for (std::size_t i = 0; i < va.args.size(); ++i)
    if (int c = compare_terms(va.args[i], vb.args[i]); c != 0) return c;
  return 0;
}

bool AtomLess::operator()(const Atom& a, const Atom& b) const {
  return compare_terms(atom_to_term(a), atom_to_term(b)) < 0;
}

AtomSet forward_chain(const Program& program) { return Fixpoint(program).run(); }

}  // namespace slr
