#include "slr/synthesizer.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "embedded_data.hpp"

namespace slr {

namespace {

struct Fill {
  std::vector<LabeledExample> examples;
  std::vector<std::pair<std::size_t, std::size_t>> twins;  // indices into examples
  int attempts = 0;
  int discarded = 0;
};

struct Rejected {
  std::string reason;
  int attempts = 0;
  int discarded = 0;
};

std::string car_id(int n) { return "c" + std::to_string(n); }

// Values of `p` for `car` that keep the car's atoms grammatical.
std::vector<Term> allowed_values(const Language& language, const PredicateSpec& p, const Term& car,
                                 const std::vector<Atom>& car_atoms) {
  std::vector<Term> out;
  for (const auto& v : language.domain(p.arg_types[1])) {
    std::vector<Atom> trial = car_atoms;
    trial.push_back(Atom{p.name, {car, v}});
    if (grammar_violations(trial, language).empty()) out.push_back(v);
  }
  return out;
}

std::vector<Atom> atoms_of_car(const std::vector<Atom>& atoms, const Term& car, std::size_t skip = SIZE_MAX) {
  std::vector<Atom> out;
  for (std::size_t i = 0; i < atoms.size(); ++i)
    if (i != skip && atoms[i].predicate != "has_car" && atoms[i].args[0] == car) out.push_back(atoms[i]);
  return out;
}

// Renames the train and its cars. Cars are numbered in has_car order.
ExampleBackground relabel(const ExampleBackground& b, const std::string& train, int& next_car) {
  std::map<std::string, std::string> names{{b.train_id, train}};
  for (const auto& a : b.atoms)
    if (a.predicate == "has_car") names.emplace(render(a.args[1]), car_id(next_car++));
  ExampleBackground out{train, {}};
  for (auto a : b.atoms) {
    for (auto& t : a.args)
      if (const auto* c = std::get_if<Constant>(&t.node))
        if (auto it = names.find(c->name); it != names.end()) t = Term::constant(it->second);
    out.atoms.push_back(std::move(a));
  }
  return out;
}

Atom target_query(const Language& language, const std::string& train) {
  return Atom{language.positive_target, {Term::constant(train)}};
}

std::set<std::string> mirror_predicates(const Clause& rule) {
  std::set<std::string> out;
  for (const auto& key : body_predicates(rule)) {
    const std::string name = key.substr(0, key.rfind('/'));
    if (!is_structural(name)) out.insert(name);
  }
  return out;
}

// One flip trial: resamples a random non-empty subset of the rule-relevant
// attribute atoms. Returns nullopt if the result breaks the grammar.
std::optional<ExampleBackground> flip(const ExampleBackground& base, const Language& language,
                                      const std::set<std::string>& relevant, Rng& rng) {
  std::vector<std::size_t> slots;
  for (std::size_t i = 0; i < base.atoms.size(); ++i)
    if (relevant.count(base.atoms[i].predicate)) slots.push_back(i);
  if (slots.empty()) return std::nullopt;

  std::vector<std::size_t> chosen;
  for (auto s : slots)
    if (rng.chance(0.5)) chosen.push_back(s);
  if (chosen.empty()) chosen.push_back(rng.pick(slots));

  ExampleBackground out = base;
  for (auto s : chosen) {
    Atom& a = out.atoms[s];
    const PredicateSpec* spec = language.find(a.predicate, a.args.size());
    if (!spec) return std::nullopt;
    auto values = allowed_values(language, *spec, a.args[0], atoms_of_car(out.atoms, a.args[0], s));
    std::erase(values, a.args[1]);
    if (values.empty()) return std::nullopt;
    a.args[1] = rng.pick(values);
  }
  if (!grammar_violations(out.atoms, language).empty()) return std::nullopt;
  return out;
}

struct Draw {
  bool usable = false;
  bool positive = false;
};

Draw label_of(const Clause& rule, const ExampleBackground& b, const Language& language, const ResourceLimits& limits) {
  EntailmentOutcome o = EntailmentOutcome::not_entailed();
  auto [y, q] = assign_label(rule, b, language, limits, &o);
  return {!o.is_resource_exceeded(), y};
}

// A twin of `base` with the opposite label, if a flip finds one.
std::optional<ExampleBackground> twin_of(const ExampleBackground& base, bool base_label, const Clause& rule,
                                         const Language& language, const std::set<std::string>& relevant,
                                         const ResourceLimits& limits, int flips, Rng& rng) {
  for (int i = 0; i < flips; ++i) {
    auto candidate = flip(base, language, relevant, rng);
    if (!candidate) continue;
    Draw d = label_of(rule, *candidate, language, limits);
    if (d.usable && d.positive != base_label) return candidate;
  }
  return std::nullopt;
}

std::variant<Fill, Rejected> fill_uniform(const Clause& rule, const Language& language, const TaskConfig& cfg,
                                          Rng& rng) {
  std::vector<ExampleBackground> pos, neg;
  int since_accept = 0, attempts = 0, discarded = 0;
  bool seen_pos = false, seen_neg = false;
  while (static_cast<int>(pos.size()) < cfg.kappa_pos || static_cast<int>(neg.size()) < cfg.kappa_neg) {
    if (since_accept >= cfg.max_attempts_per_example) return Rejected{"attempt budget exhausted", attempts, discarded};
    if (cfg.screen_probes > 0 && attempts == cfg.screen_probes && !(seen_pos && seen_neg))
      return Rejected{seen_pos ? "rule held on every probe" : "rule failed on every probe", attempts, discarded};
    ++since_accept;
    ++attempts;
    ExampleBackground b = sample_background(language, rng, "t0");
    Draw d = label_of(rule, b, language, cfg.limits);
    if (!d.usable) {
      ++discarded;
      continue;
    }
    (d.positive ? seen_pos : seen_neg) = true;
    auto& bucket = d.positive ? pos : neg;
    if (static_cast<int>(bucket.size()) < (d.positive ? cfg.kappa_pos : cfg.kappa_neg)) {
      bucket.push_back(std::move(b));
      since_accept = 0;
    }
  }
  Fill f{{}, {}, attempts, discarded};
  for (auto& b : pos) f.examples.push_back({std::move(b), {}, true});
  for (auto& b : neg) f.examples.push_back({std::move(b), {}, false});
  return f;
}

std::variant<Fill, Rejected> fill_mirror(const Clause& rule, const Language& language, const TaskConfig& cfg,
                                         Rng& rng) {
  const auto relevant = mirror_predicates(rule);
  if (relevant.empty()) return Rejected{"rule body has no attribute to flip", 0, 0};
  Fill f;
  int since_accept = 0;
  while (static_cast<int>(f.twins.size()) < cfg.kappa_pos) {
    if (since_accept >= cfg.max_attempts_per_example)
      return Rejected{"attempt budget exhausted", f.attempts, f.discarded};
    if (cfg.screen_probes > 0 && f.attempts == cfg.screen_probes && f.twins.empty())
      return Rejected{"no twin pair within the probe budget", f.attempts, f.discarded};
    ++since_accept;
    ++f.attempts;
    ExampleBackground base = sample_background(language, rng, "t0");
    Draw d = label_of(rule, base, language, cfg.limits);
    if (!d.usable) {
      ++f.discarded;
      continue;
    }
    auto twin = twin_of(base, d.positive, rule, language, relevant, cfg.limits, cfg.mirror_flips, rng);
    if (!twin) continue;
    const std::size_t i = f.examples.size();
    f.examples.push_back({std::move(base), {}, d.positive});
    f.examples.push_back({std::move(*twin), {}, !d.positive});
    f.twins.emplace_back(d.positive ? i : i + 1, d.positive ? i + 1 : i);
    since_accept = 0;
  }
  return f;
}

std::string fill_template(std::string text, const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    const std::string hole = "{" + key + "}";
    for (auto pos = text.find(hole); pos != std::string::npos; pos = text.find(hole, pos + value.size()))
      text.replace(pos, hole.size(), value);
  }
  return text;
}

}  // namespace

std::string to_string(BackgroundPolicy p) { return p == BackgroundPolicy::mirror ? "mirror" : "uniform"; }

BackgroundPolicy background_policy_from_string(std::string_view s) {
  if (s == "uniform") return BackgroundPolicy::uniform;
  if (s == "mirror") return BackgroundPolicy::mirror;
  throw std::invalid_argument("unknown background policy: " + std::string(s));
}

void TaskConfig::validate() const {
  auto fail = [](const std::string& why) { throw std::invalid_argument("invalid task config: " + why); };
  if (kappa_pos < 1 || kappa_neg < 1) fail("kappa_pos and kappa_neg must be at least 1");
  if (background_policy == BackgroundPolicy::mirror && kappa_pos != kappa_neg)
    fail("mirror sampling needs kappa_pos == kappa_neg");
  if (rule_length.min < 1 || rule_length.max < rule_length.min) fail("rule length must satisfy 1 <= min <= max");
  if (max_attempts_per_example < 1 || max_rule_resamples < 0) fail("attempt budgets must be positive");
  if (screen_probes < 0 || mirror_flips < 1) fail("screen_probes >= 0 and mirror_flips >= 1 required");
  limits.validate();
}

Program TaskInstance::background() const {
  Program p;
  for (const auto& e : examples)
    for (const auto& a : e.background.atoms) p.clauses.push_back(Clause{a, {}});
  return p;
}

std::string TaskInstance::validation_program() const {
  std::string out = render(background());
  for (const auto& q : positives) out += render(q) + ".\n";
  for (const auto& q : negatives) out += "% negative: " + render(q) + ".\n";
  return out;
}

ExampleBackground sample_background(const Language& language, Rng& rng, const std::string& train_id, int first_car) {
  ExampleBackground b{train_id, {}};
  const Term train = Term::constant(train_id);
  const int cars = rng.between(language.num_cars.min, language.num_cars.max);
  const bool numbered = language.find("car_num", 2) != nullptr;
  const bool linked = language.find("has_car", 2) != nullptr;
  for (int i = 0; i < cars; ++i) {
    const Term car = Term::constant(car_id(first_car + i));
    if (linked) b.atoms.push_back(Atom{"has_car", {train, car}});
    std::vector<Atom> car_atoms;
    if (numbered) car_atoms.push_back(Atom{"car_num", {car, Term::integer(i + 1)}});
    for (const auto& p : language.predicates) {
      if (!p.is_car_attribute() || is_structural(p.name)) continue;
      if (p.presence < 1.0 && !rng.chance(p.presence)) continue;
      auto values = allowed_values(language, p, car, car_atoms);
      if (values.empty()) continue;
      car_atoms.push_back(Atom{p.name, {car, rng.pick(values)}});
    }
    b.atoms.insert(b.atoms.end(), car_atoms.begin(), car_atoms.end());
  }
  return b;
}

std::pair<bool, Atom> assign_label(const Clause& rule, const ExampleBackground& background, const Language& language,
                                   const ResourceLimits& limits, EntailmentOutcome* outcome) {
  Program p;
  p.clauses.push_back(rule);
  for (const auto& a : background.atoms) p.clauses.push_back(Clause{a, {}});
  Atom q = target_query(language, background.train_id);
  EntailmentOutcome o = entails(p, q, limits);
  if (outcome) *outcome = o;
  return {o.is_entailed(), std::move(q)};
}

std::pair<ExampleBackground, ExampleBackground> mirror_pair(const Language& language, const Clause& rule, Rng& rng,
                                                            const ResourceLimits& limits, int attempts, int flips) {
  const auto relevant = mirror_predicates(rule);
  if (relevant.empty()) throw MirrorFailure("rule body has no attribute to flip");
  for (int i = 0; i < attempts; ++i) {
    ExampleBackground base = sample_background(language, rng, "t0");
    Draw d = label_of(rule, base, language, limits);
    if (!d.usable) continue;
    auto twin = twin_of(base, d.positive, rule, language, relevant, limits, flips, rng);
    if (!twin) continue;
    int next_car = 1;
    ExampleBackground pos = relabel(d.positive ? base : *twin, "t1", next_car);
    ExampleBackground neg = relabel(d.positive ? *twin : base, "t2", next_car);
    return {std::move(pos), std::move(neg)};
  }
  throw MirrorFailure("no flip split the labels within " + std::to_string(attempts) + " backgrounds");
}

std::vector<std::string> anonymized_atoms(const ExampleBackground& background) {
  std::map<std::string, std::string> names{{background.train_id, "T"}};
  int next = 1;
  for (const auto& a : background.atoms)
    if (a.predicate == "has_car") names.emplace(render(a.args[1]), "C" + std::to_string(next++));
  std::vector<std::string> out;
  for (auto a : background.atoms) {
    for (auto& t : a.args)
      if (const auto* c = std::get_if<Constant>(&t.node))
        if (auto it = names.find(c->name); it != names.end()) t = Term::var(it->second);
    out.push_back(render(a));
  }
  std::sort(out.begin(), out.end());
  return out;
}

TaskInstance synthesize(const Language& language, const TaskConfig& config) {
  language.validate();
  config.validate();
  Rng rng(config.seed);
  nlohmann::json rejected = nlohmann::json::array();
  int total_attempts = 0;

  for (int round = 0; round <= config.max_rule_resamples; ++round) {
    const int r_len = rng.between(config.rule_length.min, config.rule_length.max);
    Clause rule;
    try {
      rule = generate_rule(config.rule_policy, language, r_len, rng);
    } catch (const GenerationExhausted& e) {
      rejected.push_back({{"rule", nullptr}, {"reason", e.what()}});
      continue;
    } catch (const ValidationFailed& e) {
      rejected.push_back({{"rule", nullptr}, {"reason", e.what()}});
      continue;
    }
    if (auto v = validate_rule(rule, language); !v.ok()) {
      rejected.push_back({{"rule", render(rule)}, {"reason", "invalid rule"}, {"problems", v.problems}});
      continue;
    }
    if (config.rule_filter && !config.rule_filter(rule)) {
      rejected.push_back({{"rule", render(rule)}, {"reason", "excluded by rule filter"}});
      continue;
    }

    auto filled = config.background_policy == BackgroundPolicy::mirror ? fill_mirror(rule, language, config, rng)
                                                                       : fill_uniform(rule, language, config, rng);
    if (auto* r = std::get_if<Rejected>(&filled)) {
      total_attempts += r->attempts;
      rejected.push_back({{"rule", render(rule)}, {"reason", r->reason}, {"attempts", r->attempts}});
      continue;
    }
    Fill& f = std::get<Fill>(filled);
    total_attempts += f.attempts;

    // Shuffle, then number trains and cars in the new order.
    std::vector<std::size_t> order(f.examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<std::size_t> position(order.size());
    TaskInstance task;
    task.language = language;
    task.rule = rule;
    task.seed = config.seed;
    int next_car = 1;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const LabeledExample& src = f.examples[order[k]];
      position[order[k]] = k;
      LabeledExample e;
      e.background = relabel(src.background, "t" + std::to_string(k + 1), next_car);
      e.query = target_query(language, e.background.train_id);
      e.positive = src.positive;
      (e.positive ? task.positives : task.negatives).push_back(e.query);
      task.examples.push_back(std::move(e));
    }
    for (auto [p, n] : f.twins)
      task.twins.emplace_back(task.examples[position[p]].background.train_id,
                              task.examples[position[n]].background.train_id);

    // Labels were assigned per train; confirm they hold over the union.
    Program full = task.background();
    full.clauses.insert(full.clauses.begin(), rule);
    Engine engine(full);
    bool consistent = true;
    for (const auto& e : task.examples) {
      auto o = engine.entails(e.query, config.limits);
      if (o.is_resource_exceeded() || o.is_entailed() != e.positive) consistent = false;
    }
    if (!consistent) {
      rejected.push_back({{"rule", render(rule)}, {"reason", "labels change over the combined background"}});
      continue;
    }

    std::vector<std::string> tags;
    for (const auto& t : feature_tags(rule)) tags.push_back(t);
    task.metadata = {{"rule_policy", policy_name(config.rule_policy)},
                     {"background_policy", to_string(config.background_policy)},
                     {"rule_length", rule_length(rule)},
                     {"requested_rule_length", r_len},
                     {"feature_tags", tags},
                     {"attempts", f.attempts},
                     {"total_attempts", total_attempts},
                     {"rule_resamples", round},
                     {"discarded_resource_exceeded", f.discarded}};
    task.prompt_logic = emit_prompt(task, PromptStyle::logic);
    task.prompt_nl = emit_prompt(task, PromptStyle::natural);
    return task;
  }
  nlohmann::json diagnostics = {{"rules_tried", config.max_rule_resamples + 1},
                                {"total_attempts", total_attempts},
                                {"rejected", rejected}};
  throw SynthesisFailure("no usable rule after " + std::to_string(config.max_rule_resamples + 1) + " tries",
                         std::move(diagnostics));
}

std::string emit_prompt(const TaskInstance& task, PromptStyle style) {
  const Language& lang = task.language;
  const std::string& target = lang.positive_target;
  std::string problem;
  if (style == PromptStyle::logic) {
    for (const auto& e : task.examples)
      for (const auto& a : e.background.atoms) problem += render(a) + ".\n";
    problem += "\n";
    for (const auto& e : task.examples) {
      if (e.positive) {
        problem += render(e.query) + ".\n";
      } else if (lang.negative_target) {
        problem += *lang.negative_target + "(" + e.background.train_id + ").\n";
      } else {
        problem += "% negative: " + render(e.query) + ".\n";
      }
    }
  } else {
    for (const auto& e : task.examples) {
      std::string line;
      for (const auto& a : e.background.atoms) line += (line.empty() ? "" : " ") + atom_sentence(a, lang);
      problem += line + "\n";
    }
    problem += "\n";
    for (const auto& e : task.examples) {
      const std::string& id = e.background.train_id;
      if (e.positive) {
        problem += "Train " + id + " is labeled " + target + ".\n";
      } else if (lang.negative_target) {
        problem += "Train " + id + " is labeled " + *lang.negative_target + ".\n";
      } else {
        problem += "Train " + id + " is not labeled " + target + ".\n";
      }
    }
  }
  const std::string negative_note = lang.negative_target
                                        ? "trains listed as " + *lang.negative_target + " are negative examples."
                                        : "every other train is a negative example.";
  const char* file = style == PromptStyle::logic ? "instructions_logic.txt" : "instructions_nl.txt";
  return fill_template(std::string(detail::embedded_file(file)), {{"PROBLEM", problem},
                                                                   {"TARGET", target},
                                                                   {"NEGATIVE_NOTE", negative_note},
                                                                   {"PREDICATES", describe_predicates(lang)}});
}

}  // namespace slr
