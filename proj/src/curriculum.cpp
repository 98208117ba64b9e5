#include "slr/curriculum.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>

namespace slr {

namespace {

struct Row {
  int kappa;
  RuleLength rule_length;
};

constexpr std::array<Row, kLevels> kRows = {{
    {2, {1, 1}},  {2, {1, 2}},  {4, {1, 2}},  {4, {1, 2}},  {6, {1, 2}},  {6, {1, 2}},  {6, {1, 2}},
    {8, {1, 2}},  {10, {2, 3}}, {12, {2, 3}}, {14, {2, 3}}, {16, {3, 4}}, {18, {3, 4}}, {20, {4, 5}},
    {22, {4, 5}}, {24, {4, 5}}, {26, {4, 5}}, {28, {4, 5}}, {30, {5, 5}}, {32, {5, 5}},
}};

constexpr int kLastMirrorLevel = 5;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

// Slot i of a split uses the model-guided policy when the running count
// floor(i * f) steps up, so every prefix of a split holds the exact share.
bool llm_slot(const Rational& fraction, int slot) {
  const BigInt num = boost::multiprecision::numerator(fraction);
  const BigInt den = boost::multiprecision::denominator(fraction);
  return BigInt((slot + 1) * num / den) > BigInt(slot * num / den);
}

std::vector<const PredicateSpec*> attributes(const Language& language) {
  std::vector<const PredicateSpec*> out;
  for (const auto& p : language.predicates)
    if (p.is_car_attribute() && !is_structural(p.name)) out.push_back(&p);
  return out;
}

// Grammatical value assignments for one car. Attributes that no mutual
// exclusion mentions multiply in; the rest are enumerated.
BigInt car_assignments(const Language& language) {
  std::set<std::string> linked;
  for (const auto& gc : language.constraints)
    if (const auto* me = std::get_if<MutualExclusion>(&gc)) {
      linked.insert(me->condition.predicate);
      linked.insert(me->forbidden.predicate);
    }
  BigInt free = 1;
  std::vector<const PredicateSpec*> tied;
  for (const auto* p : attributes(language)) {
    if (linked.count(p->name)) {
      tied.push_back(p);
    } else {
      free *= language.domain(p->arg_types[1]).size();
    }
  }
  const Term car = Term::constant("c");
  BigInt valid = 0;
  std::vector<std::size_t> idx(tied.size(), 0);
  while (true) {
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < tied.size(); ++i)
      atoms.push_back(Atom{tied[i]->name, {car, language.domain(tied[i]->arg_types[1])[idx[i]]}});
    if (grammar_violations(atoms, language).empty()) ++valid;
    std::size_t k = tied.size();
    while (k > 0 && ++idx[k - 1] == language.domain(tied[k - 1]->arg_types[1]).size()) idx[--k] = 0;
    if (k == 0) break;
  }
  return free * valid;
}

BigInt power_sum(const BigInt& base, CarRange cars) {
  BigInt total = 0;
  for (int n = cars.min; n <= cars.max; ++n) total += boost::multiprecision::pow(base, static_cast<unsigned>(n));
  return total;
}

double log10_of(const BigInt& x) {
  if (x <= 0) return 0.0;
  const std::string digits = x.str();
  const std::size_t lead = std::min<std::size_t>(digits.size(), 17);
  return static_cast<double>(digits.size() - lead) + std::log10(std::stod(digits.substr(0, lead)));
}

}  // namespace

std::string to_string(Tier t) {
  switch (t) {
    case Tier::basic: return "basic";
    case Tier::easy: return "easy";
    case Tier::medium: return "medium";
    case Tier::hard: return "hard";
  }
  return "basic";
}

Tier tier_from_string(std::string_view s) {
  for (Tier t : {Tier::basic, Tier::easy, Tier::medium, Tier::hard})
    if (to_string(t) == s) return t;
  throw std::invalid_argument("unknown tier: " + std::string(s));
}

Tier tier_of_level(int level) {
  if (level < 1 || level > kLevels) throw RangeError("level must be in 1.." + std::to_string(kLevels));
  return static_cast<Tier>((level - 1) / 5);
}

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::eval: return "eval";
    case Split::test: return "test";
  }
  return "train";
}

std::vector<LevelSpec> default_curriculum() {
  std::vector<LevelSpec> out;
  for (int level = 1; level <= kLevels; ++level) {
    const Row& row = kRows[static_cast<std::size_t>(level - 1)];
    LevelSpec s;
    s.level = level;
    s.tier = tier_of_level(level);
    s.language = level_language(level);
    s.kappa_total = row.kappa;
    s.background_policy = level <= kLastMirrorLevel ? BackgroundPolicy::mirror : BackgroundPolicy::uniform;
    s.rule_length = row.rule_length;
    s.llm_rule_fraction = level <= kLastMirrorLevel ? Rational(0) : Rational(3, 10);
    if (level == 1) s.split_sizes.train = 26;
    if (level == 2) s.split_sizes.train = 234;
    if (level == 3) s.split_sizes.train = 793;
    out.push_back(std::move(s));
  }
  return out;
}

void apply_curriculum_overrides(std::vector<LevelSpec>& specs, const nlohmann::json& config) {
  if (!config.is_object()) throw std::invalid_argument("curriculum config must be an object");
  if (!config.contains("levels")) return;
  const nlohmann::json& levels = config["levels"];
  if (!levels.is_object()) throw std::invalid_argument("curriculum config: levels must be an object");
  for (const auto& [key, o] : levels.items()) {
    auto it = std::find_if(specs.begin(), specs.end(), [&](const LevelSpec& s) { return std::to_string(s.level) == key; });
    if (it == specs.end()) throw std::invalid_argument("curriculum config: no level " + key);
    if (!o.is_object()) throw std::invalid_argument("curriculum config: level " + key + " must be an object");
    LevelSpec& s = *it;
    try {
      for (const auto& [name, v] : o.items()) {
        if (name == "kappa_total") {
          s.kappa_total = v.get<int>();
          if (s.kappa_total < 2) throw std::invalid_argument("kappa_total must be >= 2");
        } else if (name == "rule_length") {
          s.rule_length = RuleLength{v.at(0).get<int>(), v.at(1).get<int>()};
          if (s.rule_length.min < 1 || s.rule_length.min > s.rule_length.max)
            throw std::invalid_argument("rule_length must satisfy 1 <= min <= max");
        } else if (name == "background_policy") {
          s.background_policy = background_policy_from_string(v.get<std::string>());
        } else if (name == "llm_rule_fraction") {
          // Numbers are read to six decimals so 0.3 means exactly 3/10.
          s.llm_rule_fraction = v.is_string() ? Rational(v.get<std::string>())
                                              : Rational(static_cast<long long>(std::llround(v.get<double>() * 1e6)), 1000000);
          if (s.llm_rule_fraction < 0 || s.llm_rule_fraction > 1)
            throw std::invalid_argument("llm_rule_fraction must be in [0, 1]");
        } else if (name == "split_sizes") {
          s.split_sizes = SplitSizes{v.value("train", s.split_sizes.train), v.value("eval", s.split_sizes.eval),
                                     v.value("test", s.split_sizes.test)};
        } else if (name == "language") {
          s.language = language_from_json(v);
        } else {
          throw std::invalid_argument("unknown key " + name);
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("curriculum config: level " + key + ": " + e.what());
    } catch (const std::runtime_error& e) {
      throw std::invalid_argument("curriculum config: level " + key + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("curriculum config: level " + key + ": " + e.what());
    }
  }
}

const std::vector<TaskInstance>& LevelBuild::split(Split s) const {
  return s == Split::train ? train : s == Split::eval ? eval : test;
}

bool is_test_rule(const Clause& rule) { return (splitmix64(fnv1a(canonical_rule(rule))) & 1) == 1; }

std::string task_key(const TaskInstance& task) {
  std::vector<std::string> trains;
  for (const auto& e : task.examples) {
    std::string s = e.positive ? "+" : "-";
    for (const auto& a : anonymized_atoms(e.background)) s += a + ";";
    trains.push_back(std::move(s));
  }
  std::sort(trains.begin(), trains.end());
  std::string key = canonical_rule(task.rule);
  for (const auto& t : trains) key += "|" + t;
  return key;
}

LevelBuild build_level(const LevelSpec& spec, std::uint64_t dataset_seed, const BuildOptions& options) {
  LevelBuild out;
  out.spec = spec;
  const SplitSizes sizes = options.split_sizes.value_or(spec.split_sizes);
  // Canonical rules used by the test split. Test draws prefer its hash half
  // and claim rules from the other half only when its own half runs dry.
  std::set<std::string> test_rules;
  for (Split split : {Split::test, Split::eval, Split::train}) {
    auto& dst = split == Split::train ? out.train : split == Split::eval ? out.eval : out.test;
    const int wanted = split == Split::train ? sizes.train : split == Split::eval ? sizes.eval : sizes.test;
    const bool is_test = split == Split::test;
    const int rounds = is_test ? 2 : 1;
    std::set<std::string> seen;
    int unfilled = 0;
    for (int slot = 0; slot < wanted; ++slot) {
      TaskConfig cfg;
      if (llm_slot(spec.llm_rule_fraction, slot)) cfg.rule_policy = options.llm_policy;
      cfg.rule_length = spec.rule_length;
      cfg.background_policy = spec.background_policy;
      cfg.kappa_pos = spec.kappa_total / 2;
      cfg.kappa_neg = spec.kappa_total - cfg.kappa_pos;
      cfg.limits = options.limits;

      bool filled = false;
      int failures = 0;
      std::optional<SynthesisFailure> failure;
      for (int round = 0; round < rounds && !filled; ++round) {
        if (!is_test) {
          cfg.rule_filter = [&test_rules](const Clause& r) { return !test_rules.count(canonical_rule(r)); };
        } else if (round == 0) {
          cfg.rule_filter = [&test_rules](const Clause& r) {
            return is_test_rule(r) || test_rules.count(canonical_rule(r)) > 0;
          };
        } else {
          cfg.rule_filter = nullptr;
        }
        for (int i = 0; i < options.slot_attempts && !filled; ++i) {
          const int attempt = round * options.slot_attempts + i;
          cfg.seed = derive_seed({dataset_seed, static_cast<std::uint64_t>(spec.level),
                                  static_cast<std::uint64_t>(split), static_cast<std::uint64_t>(slot),
                                  static_cast<std::uint64_t>(attempt)});
          TaskInstance task;
          try {
            task = synthesize(spec.language, cfg);
          } catch (const SynthesisFailure& e) {
            failure.emplace(e);
            ++failures;
            continue;
          }
          if (!seen.insert(task_key(task)).second) continue;
          if (is_test) test_rules.insert(canonical_rule(task.rule));
          task.level = spec.level;
          task.metadata["level"] = spec.level;
          task.metadata["tier"] = to_string(spec.tier);
          task.metadata["split"] = to_string(split);
          task.metadata["slot"] = slot;
          task.metadata["attempt"] = attempt;
          dst.push_back(std::move(task));
          filled = true;
        }
      }
      if (filled) continue;
      if (failures == rounds * options.slot_attempts)
        throw SynthesisFailure("level " + std::to_string(spec.level) + ": " + failure->what(), failure->diagnostics());
      ++unfilled;
    }
    if (unfilled > 0)
      out.warnings.push_back("level " + std::to_string(spec.level) + " " + to_string(split) + ": " +
                             std::to_string(wanted - unfilled) + " of " + std::to_string(wanted) +
                             " distinct tasks found");
  }
  return out;
}

std::vector<NoveltyCollision> verify_novelty(const std::vector<TaskInstance>& train,
                                             const std::vector<TaskInstance>& test) {
  std::map<std::string, std::vector<std::size_t>> by_rule;
  for (std::size_t i = 0; i < train.size(); ++i) by_rule[canonical_rule(train[i].rule)].push_back(i);
  std::vector<NoveltyCollision> out;
  for (std::size_t j = 0; j < test.size(); ++j) {
    const std::string c = canonical_rule(test[j].rule);
    if (auto it = by_rule.find(c); it != by_rule.end())
      for (auto i : it->second) out.push_back({i, j, c});
  }
  return out;
}

double estimate_comb_size(const LevelSpec& spec) {
  const Language& lang = spec.language;
  const BigInt per_car = car_assignments(lang);
  const BigInt trains = power_sum(per_car, lang.num_cars);
  BigInt backgrounds;
  if (spec.background_policy == BackgroundPolicy::mirror) {
    std::size_t widest = 1;
    for (const auto* p : attributes(lang)) widest = std::max(widest, lang.domain(p->arg_types[1]).size());
    const BigInt twins = power_sum(BigInt(widest), lang.num_cars);
    backgrounds = boost::multiprecision::pow(trains * twins, static_cast<unsigned>(spec.kappa_total / 2));
  } else {
    backgrounds = boost::multiprecision::pow(trains, static_cast<unsigned>(spec.kappa_total));
  }

  BigInt literals = 0;
  for (const auto* p : attributes(lang)) literals += lang.domain(p->arg_types[1]).size() + 1;
  BigInt rules = 0;
  for (int r = spec.rule_length.min; r <= spec.rule_length.max; ++r) {
    const int cars = std::min(lang.num_cars.max, r);
    rules += boost::multiprecision::pow(BigInt(cars) * literals, static_cast<unsigned>(r));
  }
  if (spec.llm_rule_fraction > 0) {
    for (const auto& t : TemplatePool::reference().templates()) {
      if (!template_usable(t, lang)) continue;
      BigInt n = 1;
      for (const auto& h : t.holes) n *= lang.domain(hole_type(h)).size();
      rules += n;
    }
  }
  return log10_of(rules * backgrounds);
}

}  // namespace slr
