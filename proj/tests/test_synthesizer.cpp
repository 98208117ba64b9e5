#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>

#include "slr/synthesizer.hpp"

using namespace slr;

namespace {

// Vocabulary of the small red-train example: two colors, two lengths, one
// car per train. Lengths never appear in sampled backgrounds.
Language red_train_language() {
  Language l;
  l.positive_target = "is_red_train";
  l.negative_target = std::nullopt;
  l.predicates = {{"has_car", {kTrainType, kCarType}, 1.0, "Train {0} has a car {1}."},
                  {"car_color", {kCarType, "COLOR"}, 1.0, "The car {0} is {1}."},
                  {"car_len", {kCarType, "LEN"}, 0.0, "The car {0} is {1}."}};
  l.domains = {{"COLOR", {Term::constant("red"), Term::constant("blue")}},
               {"LEN", {Term::constant("short"), Term::constant("long")}}};
  l.constraints = {FunctionalAttribute{"car_color"}, FunctionalAttribute{"car_len"}};
  l.num_cars = {1, 1};
  return l;
}

ExampleBackground background(std::string train, std::vector<std::string> atoms) {
  ExampleBackground b{std::move(train), {}};
  for (const auto& a : atoms) b.atoms.push_back(parse_atom(a));
  return b;
}

std::map<std::string, int> predicate_counts(const Program& p) {
  std::map<std::string, int> out;
  for (const auto& c : p.clauses) ++out[c.head.predicate];
  return out;
}

std::map<std::string, int> predicate_counts(const std::vector<Atom>& atoms) {
  std::map<std::string, int> out;
  for (const auto& a : atoms) ++out[a.predicate];
  return out;
}

// Judges the rule against the task's combined background, independently of
// the per-train labeling the synthesizer did.
bool self_consistent(const TaskInstance& task) {
  Program p = task.background();
  p.clauses.push_back(task.rule);
  for (const auto& q : task.positives)
    if (!entails(p, q).is_entailed()) return false;
  for (const auto& q : task.negatives)
    if (!entails(p, q).is_not_entailed()) return false;
  return true;
}

// Predicates whose atoms differ between two twins after id anonymization.
std::set<std::string> differing_predicates(const ExampleBackground& a, const ExampleBackground& b) {
  auto x = anonymized_atoms(a), y = anonymized_atoms(b);
  std::vector<std::string> diff;
  std::set_symmetric_difference(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(diff));
  std::set<std::string> out;
  for (const auto& s : diff) out.insert(parse_atom(s).predicate);
  return out;
}

const ExampleBackground& train(const TaskInstance& task, const std::string& id) {
  for (const auto& e : task.examples)
    if (e.background.train_id == id) return e.background;
  throw std::out_of_range(id);
}

}  // namespace

TEST_CASE("labels of the red-train backgrounds") {
  const Language l = red_train_language();
  const Clause rule = parse_clause("is_red_train(T) :- has_car(T, C), car_color(C, red).");
  auto [y1, q1] = assign_label(rule, background("t1", {"has_car(t1, c1)", "car_color(c1, red)"}), l, {});
  CHECK(y1);
  CHECK(render(q1) == "is_red_train(t1)");
  auto [y2, q2] = assign_label(rule, background("t2", {"has_car(t2, c2)", "car_color(c2, blue)"}), l, {});
  CHECK_FALSE(y2);
  CHECK(render(q2) == "is_red_train(t2)");
  CHECK_FALSE(assign_label(rule, background("t3", {}), l, {}).first);

  EntailmentOutcome o = EntailmentOutcome::entailed();
  Clause broken = parse_clause("is_red_train(T) :- has_car(T, C), length(L, N).");
  CHECK_FALSE(assign_label(broken, background("t1", {"has_car(t1, c1)"}), l, {}, &o).first);
  CHECK(o == EntailmentOutcome::resource_exceeded("instantiation"));
}

TEST_CASE("red-train synthesis reproduces the reference task") {
  const Language l = red_train_language();
  TaskConfig cfg;
  cfg.rule_length = {1, 1};
  cfg.background_policy = BackgroundPolicy::mirror;
  cfg.seed = 3;
  TaskInstance task = synthesize(l, cfg);

  CHECK(render(task.rule) == "is_red_train(T) :- has_car(T, C1), car_color(C1, red).");
  CHECK(task.validation_program() ==
        "has_car(t1, c1).\ncar_color(c1, red).\nhas_car(t2, c2).\ncar_color(c2, blue).\n"
        "is_red_train(t1).\n% negative: is_red_train(t2).\n");
  Program vp = parse_program(task.validation_program());
  CHECK(predicate_counts(vp) == std::map<std::string, int>{{"car_color", 2}, {"has_car", 2}, {"is_red_train", 1}});
  CHECK(task.positives.size() == 1);
  CHECK(task.negatives.size() == 1);

  CHECK(task.prompt_logic.find("has_car(t1, c1).\ncar_color(c1, red).\nhas_car(t2, c2).\ncar_color(c2, blue).\n") !=
        std::string::npos);
  CHECK(task.prompt_logic.find("is_red_train(t1).\n% negative: is_red_train(t2).") != std::string::npos);
  CHECK(task.prompt_nl.find("Train t1 has a car c1. The car c1 is red.\nTrain t2 has a car c2. The car c2 is blue.\n") !=
        std::string::npos);
  CHECK(task.twins == std::vector<std::pair<std::string, std::string>>{{"t1", "t2"}});
  CHECK(self_consistent(task));
}

TEST_CASE("sample_background shapes") {
  const Language l = level_language(1);
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    ExampleBackground b = sample_background(l, rng);
    CHECK(predicate_counts(b.atoms) ==
          std::map<std::string, int>{{"car_color", 1}, {"car_len", 1}, {"car_num", 1}, {"has_car", 1}, {"has_wall", 1}});
  }
  Rng a(5), b(5);
  for (int i = 0; i < 20; ++i) {
    auto x = sample_background(level_language(12), a), y = sample_background(level_language(12), b);
    CHECK(x.atoms == y.atoms);
  }
}

TEST_CASE("sampled backgrounds are grammatical and well-typed") {
  for (int level : {6, 11, 16, 20}) {
    const Language l = level_language(level);
    Rng rng(static_cast<std::uint64_t>(level));
    for (int i = 0; i < 300; ++i) {
      ExampleBackground b = sample_background(l, rng, "t1", 1);
      CAPTURE(level);
      CHECK(grammar_violations(b.atoms, l).empty());
      const int cars = predicate_counts(b.atoms)["has_car"];
      CHECK(cars >= l.num_cars.min);
      CHECK(cars <= l.num_cars.max);
      std::vector<std::string> car_ids;
      for (int c = 1; c <= cars; ++c) car_ids.push_back("c" + std::to_string(c));
      auto base = herbrand_base(l, {"t1"}, car_ids);
      for (const auto& a : b.atoms) CHECK(std::find(base.begin(), base.end(), a) != base.end());
    }
  }
}

TEST_CASE("presence below one drops attributes") {
  Language l = level_language(1);
  for (auto& p : l.predicates)
    if (p.name == "has_wall") p.presence = 0.0;
  Rng rng(2);
  for (int i = 0; i < 100; ++i) CHECK(predicate_counts(sample_background(l, rng).atoms).count("has_wall") == 0);
}

TEST_CASE("mirror twins differ only in rule predicates") {
  const Language l = level_language(4);
  Rng rng(8);
  const Clause color = parse_clause("eastbound(T) :- has_car(T, C), car_color(C, red).");
  for (int i = 0; i < 50; ++i) {
    auto [pos, neg] = mirror_pair(l, color, rng);
    CHECK(assign_label(color, pos, l, {}).first);
    CHECK_FALSE(assign_label(color, neg, l, {}).first);
    CHECK(differing_predicates(pos, neg) == std::set<std::string>{"car_color"});
  }

  const Clause negated = parse_clause("eastbound(T) :- \\+ (has_car(T, C), car_color(C, red)).");
  for (int i = 0; i < 50; ++i) {
    auto [pos, neg] = mirror_pair(l, negated, rng);
    CHECK(assign_label(negated, pos, l, {}).first);
    CHECK_FALSE(assign_label(negated, neg, l, {}).first);
    CHECK(differing_predicates(pos, neg) == std::set<std::string>{"car_color"});
  }

  const Clause structural = parse_clause("eastbound(T) :- has_car(T, C), car_num(C, 2).");
  CHECK_THROWS_AS(mirror_pair(l, structural, rng), MirrorFailure);
}

TEST_CASE("uniform synthesis fills both quotas") {
  TaskConfig cfg;
  cfg.kappa_pos = 3;
  cfg.kappa_neg = 3;
  cfg.rule_length = {2, 3};
  cfg.seed = 42;
  TaskInstance task = synthesize(level_language(9), cfg);
  CHECK(task.positives.size() == 3);
  CHECK(task.negatives.size() == 3);
  CHECK(task.examples.size() == 6);
  std::set<std::string> trains, cars;
  for (const auto& e : task.examples) {
    trains.insert(e.background.train_id);
    for (const auto& a : e.background.atoms)
      if (a.predicate == "has_car") CHECK(cars.insert(render(a.args[1])).second);
  }
  CHECK(trains.size() == 6);
  CHECK(predicate_counts(task.background())["has_car"] == static_cast<int>(cars.size()));
  CHECK(self_consistent(task));
  CHECK(task.metadata.at("rule_policy") == "uniform");
}

TEST_CASE("synthesis is self-consistent and deterministic at every level") {
  for (int level = 1; level <= kLevels; ++level) {
    CAPTURE(level);
    const Language l = level_language(level);
    TaskConfig cfg;
    cfg.kappa_pos = cfg.kappa_neg = 2;
    cfg.rule_length = level < 9 ? RuleLength{1, 2} : RuleLength{2, 3};
    cfg.background_policy = level <= 5 ? BackgroundPolicy::mirror : BackgroundPolicy::uniform;
    if (level >= 6 && level % 2 == 0) cfg.rule_policy = TemplatePool::reference();
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      cfg.seed = derive_seed({static_cast<std::uint64_t>(level), seed});
      TaskInstance task = synthesize(l, cfg);
      CHECK(self_consistent(task));
      TaskInstance again = synthesize(l, cfg);
      CHECK(again.validation_program() == task.validation_program());
      CHECK(again.prompt_logic == task.prompt_logic);
      CHECK(again.prompt_nl == task.prompt_nl);
      CHECK(again.metadata == task.metadata);
      if (cfg.background_policy == BackgroundPolicy::mirror) {
        REQUIRE(task.twins.size() == 2);
        std::set<std::string> relevant;
        for (const auto& key : body_predicates(task.rule)) relevant.insert(key.substr(0, key.rfind('/')));
        for (const auto& [p, n] : task.twins)
          for (const auto& pred : differing_predicates(train(task, p), train(task, n))) CHECK(relevant.count(pred));
      }
    }
  }
}

TEST_CASE("a rule that holds everywhere exhausts the budget") {
  TaskConfig cfg;
  cfg.rule_policy = TemplatePool({RuleTemplate{"always", "eastbound(T) :- has_car(T, C).", {}, 0, {"has_car/2"}, {}}});
  cfg.max_attempts_per_example = 40;
  cfg.max_rule_resamples = 3;
  cfg.screen_probes = 0;
  try {
    synthesize(level_language(6), cfg);
    FAIL("expected SynthesisFailure");
  } catch (const SynthesisFailure& e) {
    CHECK(e.diagnostics().at("rules_tried") == 4);
    // One accepted positive, then 40 draws that never yield a negative.
    CHECK(e.diagnostics().at("total_attempts") == 4 * 41);
  }

  cfg.screen_probes = 10;
  try {
    synthesize(level_language(6), cfg);
    FAIL("expected SynthesisFailure");
  } catch (const SynthesisFailure& e) {
    CHECK(e.diagnostics().at("total_attempts") == 4 * 10);
    CHECK(e.diagnostics().at("rejected")[0].at("reason") == "rule held on every probe");
  }
}

TEST_CASE("task config validation") {
  TaskConfig cfg;
  cfg.kappa_neg = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.kappa_neg = 2;
  cfg.background_policy = BackgroundPolicy::mirror;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.kappa_pos = 2;
  CHECK_NOTHROW(cfg.validate());
  cfg.rule_length = {3, 2};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK(background_policy_from_string("mirror") == BackgroundPolicy::mirror);
  CHECK_THROWS_AS(background_policy_from_string("sideways"), std::invalid_argument);
}

TEST_CASE("prompts") {
  TaskConfig cfg;
  cfg.kappa_pos = cfg.kappa_neg = 2;
  cfg.background_policy = BackgroundPolicy::mirror;
  cfg.seed = 7;
  TaskInstance task = synthesize(level_language(2), cfg);
  const std::string nl = task.prompt_nl;
  std::size_t sentences = 0;
  for (auto pos = nl.find("has a car"); pos != std::string::npos; pos = nl.find("has a car", pos + 1)) ++sentences;
  CHECK(sentences == task.examples.size());
  CHECK(nl.find("is labeled westbound.") != std::string::npos);
  CHECK(task.prompt_logic.find("westbound(") != std::string::npos);
  CHECK(task.prompt_logic.find("car_color(CAR, COLOR)") != std::string::npos);
  for (const auto& q : task.positives) CHECK(task.prompt_logic.find(render(q) + ".") != std::string::npos);
  CHECK(emit_prompt(task, PromptStyle::logic) == task.prompt_logic);
}
