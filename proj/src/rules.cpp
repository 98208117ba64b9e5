#include "slr/rules.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <regex>
#include <sstream>

#include "embedded_data.hpp"

namespace slr {

namespace {

const std::set<std::string> kArithmetic = {"is", "=:=", "=\\=", "<", ">", ">=", "=<"};
const std::set<std::string> kComparison = {"=", "\\=", "=="};
const std::set<std::string> kListOps = {"member", "sort", "length", "max_list", "min_list"};

// Visits `g` and every goal nested in it, including the goal arguments of
// findall/3 and forall/2. Goal arguments that are not callable are passed
// to `bad`.
void walk(const BodyGoal& g, const std::function<void(const BodyGoal&)>& f,
          const std::function<void(const std::string&)>& bad) {
  f(g);
  std::visit(
      [&](const auto& n) {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Negation> || std::is_same_v<N, Conjunction>) {
          for (const auto& sub : n.goals) walk(sub, f, bad);
        } else if constexpr (std::is_same_v<N, Disjunction>) {
          for (const auto& sub : n.branches) walk(sub, f, bad);
        } else if constexpr (std::is_same_v<N, BuiltinCall>) {
          std::vector<const Term*> goals;
          if (n.op == "findall" && n.args.size() == 3) goals.push_back(&n.args[1]);
          if (n.op == "forall" && n.args.size() == 2) goals = {&n.args[0], &n.args[1]};
          for (const Term* t : goals) {
            try {
              walk(term_to_goal(*t), f, bad);
            } catch (const std::invalid_argument& e) {
              bad(e.what());
            }
          }
        }
      },
      g.node);
}

void walk_rule(const Clause& rule, const std::function<void(const BodyGoal&)>& f,
               const std::function<void(const std::string&)>& bad = [](const std::string&) {}) {
  for (const auto& g : rule.body) walk(g, f, bad);
}

bool is_has_car(const BodyGoal& g) {
  const auto* lit = std::get_if<Literal>(&g.node);
  return lit && lit->atom.predicate == "has_car" && lit->atom.args.size() == 2;
}

// ---- variable renaming ------------------------------------------------------

void collect_vars(const Term& t, std::vector<std::string>& order) {
  std::visit(
      [&](const auto& n) {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Variable>) {
          if (n.name != "_" && std::find(order.begin(), order.end(), n.name) == order.end()) order.push_back(n.name);
        } else if constexpr (std::is_same_v<N, Compound>) {
          for (const auto& a : n.args) collect_vars(a, order);
        } else if constexpr (std::is_same_v<N, ListTerm>) {
          for (const auto& a : n.items) collect_vars(a, order);
          if (n.tail) collect_vars(*n.tail, order);
        }
      },
      t.node);
}

Term rename(const Term& t, const std::map<std::string, std::string>& names) {
  return std::visit(
      [&](const auto& n) -> Term {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Variable>) {
          auto it = names.find(n.name);
          return it == names.end() ? t : Term::var(it->second);
        } else if constexpr (std::is_same_v<N, Compound>) {
          std::vector<Term> args;
          for (const auto& a : n.args) args.push_back(rename(a, names));
          return Term::compound(n.functor, std::move(args));
        } else if constexpr (std::is_same_v<N, ListTerm>) {
          std::vector<Term> items;
          for (const auto& a : n.items) items.push_back(rename(a, names));
          std::shared_ptr<const Term> tail;
          if (n.tail) tail = std::make_shared<const Term>(rename(*n.tail, names));
          return Term::list(std::move(items), tail);
        } else {
          return t;
        }
      },
      t.node);
}

Term anonymize(const Term& t) {
  std::vector<std::string> vars;
  collect_vars(t, vars);
  std::map<std::string, std::string> names;
  for (const auto& v : vars) names[v] = "_";
  return rename(t, names);
}

// Renders a clause term with variables numbered by first occurrence.
std::string numbered(const Term& clause_term) {
  std::vector<std::string> vars;
  collect_vars(clause_term, vars);
  std::map<std::string, std::string> names;
  for (std::size_t i = 0; i < vars.size(); ++i) names[vars[i]] = "V" + std::to_string(i);
  return render(rename(clause_term, names));
}

// ---- templates ---------------------------------------------------------------

const std::regex& hole_regex() {
  static const std::regex re(R"(\{([A-Z]+)([0-9]+)\})");
  return re;
}

}  // namespace

std::string hole_type(const std::string& hole) {
  std::size_t end = 0;
  while (end < hole.size() && std::isupper(static_cast<unsigned char>(hole[end]))) ++end;
  return hole.substr(0, end);
}

namespace {

std::string fill_holes(const std::string& pattern, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t last = 0;
  for (auto it = std::sregex_iterator(pattern.begin(), pattern.end(), hole_regex()); it != std::sregex_iterator(); ++it) {
    out.append(pattern, last, static_cast<std::size_t>(it->position()) - last);
    out += values.at(it->str(1) + it->str(2));
    last = static_cast<std::size_t>(it->position() + it->length());
  }
  out.append(pattern, last);
  return out;
}

RuleTemplate make_template(std::string name, std::string pattern) {
  RuleTemplate t;
  t.name = std::move(name);
  t.pattern = std::move(pattern);
  std::map<std::string, std::string> placeholders;
  for (auto it = std::sregex_iterator(t.pattern.begin(), t.pattern.end(), hole_regex()); it != std::sregex_iterator(); ++it) {
    const std::string hole = it->str(1) + it->str(2);
    if (!placeholders.count(hole)) {
      t.holes.push_back(hole);
      placeholders[hole] = it->str(1) == kNumType ? it->str(2) : "hole_" + hole;
    }
  }
  Clause c = parse_clause(fill_holes(t.pattern, placeholders));
  t.effective_length = rule_length(c);
  t.feature_tags = feature_tags(c);
  const std::string self = c.head.key();
  for (const auto& key : body_predicates(c))
    if (key != self) t.predicates.insert(key);
  return t;
}

std::string trim(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}


// ---- uniform sampling -------------------------------------------------------

std::vector<Term> slot_domain(const Language& language, const PredicateSpec& p) {
  return language.domain(p.arg_types[1]);
}

std::string describe_constants(const Language& language) {
  std::string out;
  for (const auto& [type, values] : language.domains) {
    out += "  " + type + ": ";
    for (std::size_t i = 0; i < values.size(); ++i) out += (i ? ", " : "") + render(values[i]);
    out += "\n";
  }
  return out;
}

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
}

}  // namespace

bool template_usable(const RuleTemplate& t, const Language& language) {
  for (const auto& key : t.predicates) {
    const auto slash = key.rfind('/');
    if (!language.find(key.substr(0, slash), std::stoul(key.substr(slash + 1)))) return false;
  }
  for (const auto& h : t.holes)
    if (language.domain(hole_type(h)).empty()) return false;
  return true;
}

std::string describe_predicates(const Language& language) {
  std::string out;
  for (const auto& p : language.predicates) {
    out += "  " + p.name + "(";
    for (std::size_t i = 0; i < p.arg_types.size(); ++i) out += (i ? ", " : "") + p.arg_types[i];
    out += ")\n";
  }
  return out;
}

std::string StubLlmClient::complete(const std::string& prompt) {
  last_prompt_ = prompt;
  if (replies_.empty()) throw LlmUnavailable("stub client has no replies");
  const auto i = std::min(calls_, replies_.size() - 1);
  ++calls_;
  return replies_[i];
}

int rule_length(const Clause& rule) {
  return static_cast<int>(std::count_if(rule.body.begin(), rule.body.end(), [](const BodyGoal& g) { return !is_has_car(g); }));
}

std::set<std::string> feature_tags(const Clause& rule) {
  std::set<std::string> tags;
  for (const auto& g : rule.body)
    if (is_has_car(g)) tags.insert("existential");
  const std::string self = rule.head.key();
  walk_rule(rule, [&](const BodyGoal& g) {
    if (std::holds_alternative<Negation>(g.node)) tags.insert("negation");
    if (std::holds_alternative<Disjunction>(g.node)) tags.insert("disjunction");
    if (const auto* lit = std::get_if<Literal>(&g.node); lit && lit->atom.key() == self) tags.insert("recursion");
    if (const auto* b = std::get_if<BuiltinCall>(&g.node)) {
      if (b->op == "findall") tags.insert("aggregation");
      if (b->op == "forall") tags.insert("universal");
      if (b->op == "!") tags.insert("cut");
      if (kArithmetic.count(b->op)) tags.insert("arithmetic");
      if (kComparison.count(b->op)) tags.insert("comparison");
      if (kListOps.count(b->op)) tags.insert("list");
    }
  });
  return tags;
}

std::set<std::string> body_predicates(const Clause& rule) {
  std::set<std::string> keys;
  walk_rule(rule, [&](const BodyGoal& g) {
    if (const auto* lit = std::get_if<Literal>(&g.node)) keys.insert(lit->atom.key());
  });
  return keys;
}

RuleValidation validate_rule(const Clause& rule, const Language& language, const std::set<std::string>& local_predicates) {
  RuleValidation r;
  r.head_is_target = rule.head.predicate == language.positive_target && rule.head.args.size() == 1;
  if (!r.head_is_target) r.problems.push_back("head " + rule.head.key() + " is not " + language.positive_target + "/1");
  r.known_predicates = true;
  r.constants_in_domain = true;
  const std::string self = rule.head.key();
  walk_rule(
      rule,
      [&](const BodyGoal& g) {
        if (const auto* b = std::get_if<BuiltinCall>(&g.node); b && b->op == "!") r.contains_cut = true;
        const auto* lit = std::get_if<Literal>(&g.node);
        if (!lit) return;
        const Atom& a = lit->atom;
        const PredicateSpec* spec = language.find(a.predicate, a.args.size());
        if (!spec) {
          if (a.key() != self && !local_predicates.count(a.key())) {
            r.known_predicates = false;
            r.problems.push_back("unknown predicate " + a.key());
          }
          return;
        }
        for (std::size_t i = 0; i < a.args.size(); ++i) {
          const Term& arg = a.args[i];
          if (arg.is_variable()) continue;
          const auto& type = spec->arg_types[i];
          const bool id_type = type == kTrainType || type == kCarType;
          if (id_type || std::find(language.domain(type).begin(), language.domain(type).end(), arg) == language.domain(type).end()) {
            r.constants_in_domain = false;
            r.problems.push_back("constant " + render(arg) + " is not in " + type);
          }
        }
      },
      [&](const std::string& why) {
        r.known_predicates = false;
        r.problems.push_back(why);
      });
  return r;
}

RuleValidation validate_rule_text(std::string_view text, const Language& language) {
  try {
    Program p = parse_program(text);
    if (p.clauses.size() != 1) {
      RuleValidation r;
      r.parses = false;
      r.problems.push_back("expected exactly one clause, found " + std::to_string(p.clauses.size()));
      return r;
    }
    return validate_rule(p.clauses[0], language);
  } catch (const SyntaxError& e) {
    RuleValidation r;
    r.parses = false;
    r.problems.push_back(e.what());
    return r;
  }
}

std::string canonical_rule(const Clause& rule) {
  const Term head = atom_to_term(rule.head);
  std::vector<Term> goals;
  for (const auto& g : rule.body) goals.push_back(goal_to_term(g));
  std::vector<std::string> skeletons;
  for (const auto& g : goals) skeletons.push_back(render(anonymize(g)));

  std::vector<std::size_t> order(goals.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return skeletons[a] < skeletons[b]; });

  // Goals with equal skeletons may be permuted; the smallest rendering wins.
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && skeletons[order[j]] == skeletons[order[i]]) ++j;
    if (j - i > 1) groups.emplace_back(i, j);
    i = j;
  }
  std::size_t combos = 1;
  for (auto [b, e] : groups) {
    for (std::size_t k = 2; k <= e - b && combos <= 5040; ++k) combos *= k;
  }
  auto render_order = [&](const std::vector<std::size_t>& ord) {
    std::vector<Term> body;
    for (auto i : ord) body.push_back(goals[i]);
    Term t = head;
    if (!body.empty()) {
      Term conj = body.back();
      for (auto it = body.rbegin() + 1; it != body.rend(); ++it) conj = Term::compound(",", {*it, conj});
      t = Term::compound(":-", {head, conj});
    }
    return numbered(t);
  };
  std::string best = render_order(order);
  if (groups.empty() || combos > 5040) return best;

  for (auto [b, e] : groups) std::sort(order.begin() + static_cast<std::ptrdiff_t>(b), order.begin() + static_cast<std::ptrdiff_t>(e));
  std::function<void(std::size_t)> search = [&](std::size_t gi) {
    if (gi == groups.size()) {
      best = std::min(best, render_order(order));
      return;
    }
    auto [b, e] = groups[gi];
    auto first = order.begin() + static_cast<std::ptrdiff_t>(b), last = order.begin() + static_cast<std::ptrdiff_t>(e);
    do {
      search(gi + 1);
    } while (std::next_permutation(first, last));
  };
  search(0);
  return best;
}

// ---- templates -------------------------------------------------------------------

TemplatePool::TemplatePool(std::vector<RuleTemplate> templates) : templates_(std::move(templates)) {}

TemplatePool TemplatePool::from_text(std::string_view text) {
  std::vector<RuleTemplate> out;
  std::istringstream in{std::string(text)};
  std::string line, name, pattern;
  auto flush = [&] {
    if (!name.empty()) out.push_back(make_template(name, trim(pattern)));
    pattern.clear();
  };
  while (std::getline(in, line)) {
    if (line.rfind("%% ", 0) == 0) {
      flush();
      name = trim(line.substr(3));
    } else if (!name.empty()) {
      pattern += line + "\n";
    }
  }
  flush();
  return TemplatePool(std::move(out));
}

const TemplatePool& TemplatePool::reference() {
  static const TemplatePool pool = from_text(detail::embedded_file("rule_templates.pl"));
  return pool;
}

std::vector<const RuleTemplate*> TemplatePool::closest(const Language& language, int r_len) const {
  std::vector<const RuleTemplate*> best;
  int best_gap = 0;
  for (const auto& t : templates_) {
    if (!template_usable(t, language)) continue;
    const int gap = std::abs(t.effective_length - r_len);
    if (best.empty() || gap < best_gap) {
      best = {&t};
      best_gap = gap;
    } else if (gap == best_gap) {
      best.push_back(&t);
    }
  }
  return best;
}

Clause instantiate_template(const RuleTemplate& t, const Language& language, Rng& rng) {
  std::map<std::string, std::vector<std::string>> by_type;
  for (const auto& h : t.holes) by_type[hole_type(h)].push_back(h);
  std::map<std::string, std::string> values;
  for (const auto& [type, holes] : by_type) {
    std::vector<Term> pool = language.domain(type);
    if (pool.empty()) throw GenerationExhausted("language has no domain " + type + " for template " + t.name);
    const bool distinct = pool.size() >= holes.size();
    for (const auto& h : holes) {
      const auto i = rng.index(pool.size());
      values[h] = render(pool[i]);
      if (distinct) pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
    }
  }
  Clause c = parse_clause(fill_holes(t.pattern, values));
  c.head.predicate = language.positive_target;
  return c;
}

// ---- policies --------------------------------------------------------------------

std::string policy_name(const RulePolicy& policy) {
  if (std::holds_alternative<UniformPolicy>(policy)) return "uniform";
  if (std::holds_alternative<LlmGuided>(policy)) return "llm_guided";
  return "template_pool";
}

Clause sample_rule_uniform(const Language& language, int r_len, Rng& rng) {
  if (r_len < 1) throw std::invalid_argument("r_len must be at least 1");
  std::vector<const PredicateSpec*> attrs;
  for (const auto& p : language.predicates)
    if (p.is_car_attribute() && !slot_domain(language, p).empty()) attrs.push_back(&p);
  if (attrs.empty() || !language.find("has_car", 2)) throw GenerationExhausted("language has no car attributes to build a rule from");

  const int max_cars = std::max(1, std::min(language.num_cars.max, r_len));
  const Term train = Term::var("T");
  Clause rule{Atom{language.positive_target, {train}}, {}};
  std::vector<std::set<std::string>> used;  // per car variable: predicates already constrained
  std::vector<std::pair<Term, std::string>> value_vars;
  auto car_var = [](std::size_t i) { return Term::var("C" + std::to_string(i + 1)); };

  int budget = r_len;
  while (budget > 0) {
    std::size_t car = rng.index(used.size() + (static_cast<int>(used.size()) < max_cars ? 1 : 0));
    auto available = [&](std::size_t k) {
      std::vector<const PredicateSpec*> out;
      for (auto* p : attrs)
        if (k >= used.size() || !used[k].count(p->name)) out.push_back(p);
      return out;
    };
    auto options = available(car);
    if (options.empty()) {
      if (static_cast<int>(used.size()) >= max_cars)
        throw GenerationExhausted("rule length " + std::to_string(r_len) + " exceeds what the vocabulary can express");
      car = used.size();
      options = available(car);
    }
    if (car == used.size()) {
      used.emplace_back();
      rule.body.push_back(BodyGoal::literal(Atom{"has_car", {train, car_var(car)}}));
    }
    const PredicateSpec& pred = *options[rng.index(options.size())];
    used[car].insert(pred.name);
    const auto& dom = slot_domain(language, pred);
    const std::string& type = pred.arg_types[1];

    if (budget >= 2 && !rng.chance(kGroundSlotProbability)) {
      const Term v = Term::var("X" + std::to_string(value_vars.size() + 1));
      rule.body.push_back(BodyGoal::literal(Atom{pred.name, {car_var(car), v}}));
      std::vector<Term> same;
      for (const auto& [var, t] : value_vars)
        if (t == type) same.push_back(var);
      if (!same.empty() && rng.chance(0.5)) {
        const Term& other = same[rng.index(same.size())];
        rule.body.push_back(BodyGoal::builtin(rng.chance(0.5) ? "=" : "\\=", {v, other}));
      } else {
        rule.body.push_back(BodyGoal::builtin("\\=", {v, dom[rng.index(dom.size())]}));
      }
      value_vars.emplace_back(v, type);
      budget -= 2;
    } else {
      rule.body.push_back(BodyGoal::literal(Atom{pred.name, {car_var(car), dom[rng.index(dom.size())]}}));
      budget -= 1;
    }
  }
  return rule;
}

std::vector<Clause> reference_corpus() {
  return parse_program(detail::embedded_file("rule_corpus.pl")).clauses;
}

Clause generate_rule_llm(const TemplatePool& pool, const Language& language, int r_len, Rng& rng) {
  auto candidates = pool.closest(language, r_len);
  if (candidates.empty()) throw GenerationExhausted("no template fits the language");
  const RuleTemplate& t = *candidates[rng.index(candidates.size())];
  Clause c = instantiate_template(t, language, rng);
  auto report = validate_rule(c, language);
  if (!report.ok()) throw ValidationFailed("template " + t.name + ": " + report.problems.front());
  return c;
}

std::string rule_generation_prompt(const Language& language, int r_len) {
  std::string prompt(detail::embedded_file("rule_prompt.txt"));
  replace_all(prompt, "{CORPUS}", trim(std::string(detail::embedded_file("rule_corpus.pl"))));
  replace_all(prompt, "{TARGET}", language.positive_target);
  replace_all(prompt, "{PREDICATES}", describe_predicates(language));
  replace_all(prompt, "{CONSTANTS}", describe_constants(language));
  replace_all(prompt, "{LENGTH}", std::to_string(r_len));
  return prompt;
}

Clause generate_rule_llm(const LlmGuided& policy, const Language& language, int r_len, Rng&) {
  if (!policy.client) throw LlmUnavailable("no LLM client configured");
  const std::string prompt = rule_generation_prompt(language, r_len);
  std::string last_problem = "no attempts made";
  for (int attempt = 0; attempt < policy.retry_cap; ++attempt) {
    const std::string reply = policy.client->complete(prompt);
    const std::string text = extract_program_text(reply);
    if (text.empty()) {
      last_problem = "reply contains no rule";
      continue;
    }
    auto report = validate_rule_text(text, language);
    if (report.ok()) return parse_program(text).clauses.front();
    last_problem = report.problems.empty() ? "invalid rule" : report.problems.front();
  }
  throw ValidationFailed("no valid rule after " + std::to_string(policy.retry_cap) + " attempts: " + last_problem);
}

Clause generate_rule(const RulePolicy& policy, const Language& language, int r_len, Rng& rng) {
  return std::visit(
      [&](const auto& p) -> Clause {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, UniformPolicy>) {
          return sample_rule_uniform(language, r_len, rng);
        } else {
          return generate_rule_llm(p, language, r_len, rng);
        }
      },
      policy);
}

}  // namespace slr
