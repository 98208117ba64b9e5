#include "slr/language.hpp"

#include <algorithm>
#include <array>
#include <set>

namespace slr {

namespace {

Term c(const char* name) { return Term::constant(name); }

std::vector<Term> ints(int lo, int hi) {
  std::vector<Term> out;
  for (int i = lo; i <= hi; ++i) out.push_back(Term::integer(i));
  return out;
}

const std::map<std::string, std::vector<Term>>& full_domains() {
  static const std::map<std::string, std::vector<Term>> domains = {
      {"COLOR", {c("red"), c("blue"), c("green"), c("yellow"), c("white")}},
      {"LEN", {c("short"), c("long")}},
      {"WALL", {c("full"), c("railing")}},
      {"ROOF", {c("roof_foundation"), c("solid_roof"), c("braced_roof"), c("peaked_roof"), c("none")}},
      {"WHEELS", ints(2, 3)},
      {"LOADS", {c("blue_box"), c("golden_vase"), c("barrel"), c("diamond"), c("metal_pot"), c("oval_vase"), c("none")}},
      {"NPAY", ints(0, 3)},
      {"WINDOW", {c("full"), c("half"), c("none")}},
      {"CTYPE", {c("passenger"), c("freight"), c("mixed")}},
      {"NPAX", ints(0, 9)},
  };
  return domains;
}

struct LevelShape {
  std::size_t predicates;
  CarRange cars;
};

constexpr std::array<LevelShape, kLevels> kShapes = {{
    {5, {1, 1}}, {5, {1, 1}}, {5, {1, 1}}, {5, {2, 2}},  {5, {2, 2}},  {5, {2, 2}},  {6, {2, 2}},
    {6, {2, 3}}, {6, {2, 3}}, {7, {2, 3}}, {7, {2, 4}},  {9, {2, 4}},  {9, {4, 6}},  {9, {4, 6}},
    {9, {4, 6}}, {10, {5, 6}}, {10, {5, 6}}, {12, {5, 6}}, {12, {5, 6}}, {12, {5, 6}},
}};

std::vector<MutualExclusion> full_exclusions() {
  auto pat = [](std::string_view text) { return parse_atom(text); };
  return {
      {pat("car_type(C, passenger)"), pat("has_payload(C, L)"), {c("none")}},
      {pat("car_type(C, passenger)"), pat("load_num(C, N)"), {Term::integer(0)}},
      {pat("has_payload(C, none)"), pat("load_num(C, N)"), {Term::integer(0)}},
      {pat("load_num(C, 0)"), pat("has_payload(C, L)"), {c("none")}},
      {pat("car_type(C, freight)"), pat("passenger_num(C, N)"), {Term::integer(0)}},
  };
}

using Binding = std::map<std::string, Term>;

bool match(const Atom& pattern, const Atom& ground, Binding& b) {
  if (pattern.predicate != ground.predicate || pattern.args.size() != ground.args.size()) return false;
  for (std::size_t i = 0; i < pattern.args.size(); ++i) {
    const Term& p = pattern.args[i];
    if (const auto* v = std::get_if<Variable>(&p.node)) {
      if (v->name == "_") continue;
      auto [it, inserted] = b.emplace(v->name, ground.args[i]);
      if (!inserted && !(it->second == ground.args[i])) return false;
    } else if (!(p == ground.args[i])) {
      return false;
    }
  }
  return true;
}

bool contains(const std::vector<Term>& values, const Term& t) {
  return std::find(values.begin(), values.end(), t) != values.end();
}

// Index of the first atom in `atoms` whose presence forbids `a`, if any.
std::optional<std::size_t> excluded_by(const Atom& a, const std::vector<Atom>& atoms, const Language& language) {
  for (const auto& gc : language.constraints) {
    const auto* me = std::get_if<MutualExclusion>(&gc);
    if (!me || me->forbidden.predicate != a.predicate) continue;
    if (!a.args.empty() && contains(me->allowed, a.args.back())) continue;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      Binding b;
      if (match(me->condition, atoms[i], b) && match(me->forbidden, a, b)) return i;
    }
  }
  return std::nullopt;
}

std::string functional_key(const Atom& a) { return a.predicate + "\x1f" + render(a.args[0]); }

bool is_functional(const Language& language, const std::string& predicate) {
  for (const auto& gc : language.constraints)
    if (const auto* f = std::get_if<FunctionalAttribute>(&gc); f && f->predicate == predicate) return true;
  return false;
}

nlohmann::json term_json(const Term& t) {
  if (const auto* i = std::get_if<IntLiteral>(&t.node)) return i->value;
  if (const auto* k = std::get_if<Constant>(&t.node)) return k->name;
  throw std::invalid_argument("domain values must be constants or integers: " + render(t));
}

Term json_term(const nlohmann::json& j) {
  if (j.is_number_integer()) return Term::integer(j.get<std::int64_t>());
  if (j.is_string()) {
    Term t = parse_term(j.get<std::string>());
    if (!std::holds_alternative<Constant>(t.node)) throw std::invalid_argument("domain value is not a constant: " + j.dump());
    return t;
  }
  throw std::invalid_argument("domain value must be a string or integer: " + j.dump());
}

}  // namespace

bool PredicateSpec::is_car_attribute() const { return arg_types.size() == 2 && arg_types[0] == kCarType; }

bool is_structural(std::string_view predicate) { return predicate == "has_car" || predicate == "car_num"; }

const PredicateSpec* Language::find(std::string_view name, std::size_t arity) const {
  for (const auto& p : predicates)
    if (p.name == name && p.arity() == arity) return &p;
  return nullptr;
}

const PredicateSpec* Language::find(std::string_view name) const {
  for (const auto& p : predicates)
    if (p.name == name) return &p;
  return nullptr;
}

const std::vector<Term>& Language::domain(const std::string& type) const {
  static const std::vector<Term> none;
  auto it = domains.find(type);
  return it == domains.end() ? none : it->second;
}

void Language::validate() const {
  auto fail = [](const std::string& why) { throw std::invalid_argument("invalid language: " + why); };
  if (positive_target.empty()) fail("missing positive target");
  if (negative_target && *negative_target == positive_target) fail("targets must differ");
  if (num_cars.min < 1 || num_cars.max < num_cars.min) fail("car range must satisfy 1 <= min <= max");
  std::set<std::string> names;
  for (const auto& p : predicates) {
    if (p.name.empty() || !names.insert(p.name).second) fail("duplicate or empty predicate name " + p.name);
    if (p.name == positive_target || (negative_target && p.name == *negative_target))
      fail("predicate " + p.name + " clashes with a target");
    if (p.arg_types.empty()) fail("predicate " + p.name + " has no arguments");
    if (p.presence < 0.0 || p.presence > 1.0) fail("presence of " + p.name + " outside [0, 1]");
    for (const auto& t : p.arg_types) {
      if (t == kTrainType || t == kCarType) continue;
      if (domain(t).empty()) fail("domain " + t + " is missing or empty");
    }
  }
  for (const auto& [type, values] : domains) {
    if (values.empty()) fail("domain " + type + " is empty");
    for (const auto& v : values)
      if (!v.is_integer() && !std::holds_alternative<Constant>(v.node)) fail("domain " + type + " holds a non-constant");
  }
  for (const auto& gc : constraints) {
    if (const auto* f = std::get_if<FunctionalAttribute>(&gc)) {
      if (!has(f->predicate)) fail("functional constraint on unknown predicate " + f->predicate);
    } else {
      const auto& me = std::get<MutualExclusion>(gc);
      if (!find(me.condition.predicate, me.condition.args.size()) || !find(me.forbidden.predicate, me.forbidden.args.size()))
        fail("mutual exclusion over unknown predicate");
    }
  }
}

std::vector<PredicateSpec> full_vocabulary() {
  return {
      {"has_car", {kTrainType, kCarType}, 1.0, "Train {0} has a car {1}."},
      {"car_num", {kCarType, kNumType}, 1.0, "The car {0} is in position {1}."},
      {"car_color", {kCarType, "COLOR"}, 1.0, "The car {0} is {1}."},
      {"car_len", {kCarType, "LEN"}, 1.0, "The car {0} is {1}."},
      {"has_wall", {kCarType, "WALL"}, 1.0, "The car {0} has a {1} wall."},
      {"has_roof", {kCarType, "ROOF"}, 1.0, "The car {0} has roof {1}."},
      {"has_payload", {kCarType, "LOADS"}, 1.0, "The car {0} carries payload {1}."},
      {"load_num", {kCarType, "NPAY"}, 1.0, "The car {0} carries {1} loads."},
      {"has_wheel", {kCarType, "WHEELS"}, 1.0, "The car {0} has {1} wheels."},
      {"has_window", {kCarType, "WINDOW"}, 1.0, "The car {0} has window {1}."},
      {"car_type", {kCarType, "CTYPE"}, 1.0, "The car {0} is a {1} car."},
      {"passenger_num", {kCarType, "NPAX"}, 1.0, "The car {0} has {1} passengers."},
  };
}

Language level_language(int level) {
  if (level < 1 || level > kLevels) throw RangeError("level must be in 1.." + std::to_string(kLevels));
  const LevelShape& shape = kShapes[static_cast<std::size_t>(level - 1)];
  Language lang;
  auto vocab = full_vocabulary();
  lang.predicates.assign(vocab.begin(), vocab.begin() + static_cast<std::ptrdiff_t>(shape.predicates));
  lang.num_cars = shape.cars;
  lang.domains[kNumType] = ints(1, shape.cars.max);
  for (const auto& p : lang.predicates) {
    if (p.is_car_attribute()) lang.constraints.push_back(FunctionalAttribute{p.name});
    for (const auto& t : p.arg_types)
      if (auto it = full_domains().find(t); it != full_domains().end()) lang.domains[t] = it->second;
  }
  for (auto& me : full_exclusions())
    if (lang.has(me.condition.predicate) && lang.has(me.forbidden.predicate)) lang.constraints.push_back(std::move(me));
  return lang;
}

bool is_well_typed(const Atom& atom, const Language& language) {
  const PredicateSpec* spec = language.find(atom.predicate, atom.args.size());
  if (!spec) return false;
  for (std::size_t i = 0; i < atom.args.size(); ++i) {
    const auto& type = spec->arg_types[i];
    const Term& arg = atom.args[i];
    if (type == kTrainType || type == kCarType) {
      if (!std::holds_alternative<Constant>(arg.node)) return false;
    } else if (!contains(language.domain(type), arg)) {
      return false;
    }
  }
  return true;
}

std::vector<Atom> herbrand_base(const Language& language, const std::vector<std::string>& train_ids,
                                const std::vector<std::string>& car_ids) {
  if (train_ids.empty() || car_ids.empty()) throw std::invalid_argument("herbrand_base needs train and car ids");
  for (const auto& t : train_ids)
    if (std::find(car_ids.begin(), car_ids.end(), t) != car_ids.end())
      throw std::invalid_argument("train and car ids overlap: " + t);

  std::vector<Term> trains, cars;
  for (const auto& t : train_ids) trains.push_back(Term::constant(t));
  for (const auto& c : car_ids) cars.push_back(Term::constant(c));
  std::vector<Term> nums;
  for (const auto& n : language.domain(kNumType))
    if (n.is_integer() && std::get<IntLiteral>(n.node).value <= static_cast<std::int64_t>(car_ids.size())) nums.push_back(n);

  std::vector<Atom> out;
  for (const auto& p : language.predicates) {
    std::vector<const std::vector<Term>*> doms;
    for (const auto& t : p.arg_types) {
      if (t == kTrainType) doms.push_back(&trains);
      else if (t == kCarType) doms.push_back(&cars);
      else if (t == kNumType) doms.push_back(&nums);
      else doms.push_back(&language.domain(t));
    }
    if (std::any_of(doms.begin(), doms.end(), [](auto* d) { return d->empty(); })) continue;
    // Odometer over the argument domains, last argument fastest.
    std::vector<std::size_t> idx(doms.size(), 0);
    while (true) {
      Atom a{p.name, {}};
      for (std::size_t i = 0; i < doms.size(); ++i) a.args.push_back((*doms[i])[idx[i]]);
      out.push_back(std::move(a));
      std::size_t k = doms.size();
      while (k > 0 && ++idx[k - 1] == doms[k - 1]->size()) idx[--k] = 0;
      if (k == 0) break;
    }
  }
  return out;
}

std::vector<Atom> filter_by_grammar(const std::vector<Atom>& atoms, const Language& language) {
  std::vector<Atom> kept;
  std::set<std::string> seen;
  for (const auto& a : atoms) {
    if (!is_well_typed(a, language)) continue;
    if (is_functional(language, a.predicate) && !seen.insert(functional_key(a)).second) continue;
    kept.push_back(a);
  }
  std::vector<Atom> out;
  for (const auto& a : kept)
    if (!excluded_by(a, kept, language)) out.push_back(a);
  return out;
}

std::vector<std::string> grammar_violations(const std::vector<Atom>& atoms, const Language& language) {
  std::vector<std::string> out;
  std::map<std::string, std::string> values;
  for (const auto& a : atoms) {
    if (!is_well_typed(a, language)) {
      out.push_back("ill-typed atom " + render(a));
      continue;
    }
    if (is_functional(language, a.predicate)) {
      auto [it, inserted] = values.emplace(functional_key(a), render(a));
      if (!inserted) out.push_back("second value " + render(a) + " after " + it->second);
    }
    if (auto by = excluded_by(a, atoms, language)) out.push_back(render(a) + " excluded by " + render(atoms[*by]));
  }
  return out;
}

std::string atom_sentence(const Atom& atom, const Language& language) {
  const PredicateSpec* spec = language.find(atom.predicate, atom.args.size());
  if (!spec || spec->sentence.empty()) return render(atom) + ".";
  std::string out;
  const std::string& s = spec->sentence;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '{') {
      auto close = s.find('}', i);
      if (close != std::string::npos) {
        const auto k = static_cast<std::size_t>(std::stoul(s.substr(i + 1, close - i - 1)));
        if (k < atom.args.size()) {
          const Term& t = atom.args[k];
          if (const auto* name = std::get_if<Constant>(&t.node)) {
            out += name->name;
          } else {
            out += render(t);
          }
          i = close;
          continue;
        }
      }
    }
    out.push_back(s[i]);
  }
  return out;
}

nlohmann::json to_json(const Language& language) {
  nlohmann::json j;
  j["positive_target"] = language.positive_target;
  j["negative_target"] = language.negative_target ? nlohmann::json(*language.negative_target) : nlohmann::json(nullptr);
  j["num_cars"] = {{"min", language.num_cars.min}, {"max", language.num_cars.max}};
  j["predicates"] = nlohmann::json::array();
  for (const auto& p : language.predicates)
    j["predicates"].push_back(
        {{"name", p.name}, {"arg_types", p.arg_types}, {"presence", p.presence}, {"sentence", p.sentence}});
  j["domains"] = nlohmann::json::object();
  for (const auto& [type, values] : language.domains) {
    auto& arr = j["domains"][type] = nlohmann::json::array();
    for (const auto& v : values) arr.push_back(term_json(v));
  }
  j["constraints"] = nlohmann::json::array();
  for (const auto& gc : language.constraints) {
    if (const auto* f = std::get_if<FunctionalAttribute>(&gc)) {
      j["constraints"].push_back({{"kind", "functional"}, {"predicate", f->predicate}});
    } else {
      const auto& me = std::get<MutualExclusion>(gc);
      nlohmann::json allowed = nlohmann::json::array();
      for (const auto& v : me.allowed) allowed.push_back(term_json(v));
      j["constraints"].push_back({{"kind", "mutual_exclusion"},
                                  {"condition", render(me.condition)},
                                  {"forbidden", render(me.forbidden)},
                                  {"allowed", allowed}});
    }
  }
  return j;
}

Language language_from_json(const nlohmann::json& j) {
  try {
    Language lang;
    lang.positive_target = j.at("positive_target").get<std::string>();
    if (j.contains("negative_target") && !j["negative_target"].is_null()) {
      lang.negative_target = j["negative_target"].get<std::string>();
    } else {
      lang.negative_target.reset();
    }
    if (j.contains("num_cars")) lang.num_cars = {j["num_cars"].at("min").get<int>(), j["num_cars"].at("max").get<int>()};
    for (const auto& p : j.at("predicates")) {
      PredicateSpec spec;
      spec.name = p.at("name").get<std::string>();
      spec.arg_types = p.at("arg_types").get<std::vector<std::string>>();
      spec.presence = p.value("presence", 1.0);
      spec.sentence = p.value("sentence", std::string());
      lang.predicates.push_back(std::move(spec));
    }
    if (j.contains("domains")) {
      for (const auto& [type, values] : j["domains"].items()) {
        auto& dom = lang.domains[type];
        for (const auto& v : values) dom.push_back(json_term(v));
      }
    }
    if (j.contains("constraints")) {
      for (const auto& cj : j["constraints"]) {
        const auto kind = cj.at("kind").get<std::string>();
        if (kind == "functional") {
          lang.constraints.push_back(FunctionalAttribute{cj.at("predicate").get<std::string>()});
        } else if (kind == "mutual_exclusion") {
          MutualExclusion me{parse_atom(cj.at("condition").get<std::string>()),
                             parse_atom(cj.at("forbidden").get<std::string>()),
                             {}};
          for (const auto& v : cj.value("allowed", nlohmann::json::array())) me.allowed.push_back(json_term(v));
          lang.constraints.push_back(std::move(me));
        } else {
          throw std::invalid_argument("unknown constraint kind " + kind);
        }
      }
    }
    lang.validate();
    return lang;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed language config: ") + e.what());
  } catch (const SyntaxError& e) {
    throw std::invalid_argument(std::string("malformed language config: ") + e.what());
  }
}

}  // namespace slr
