#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "embedded_data.hpp"
#include "fixtures.hpp"
#include "slr/rules.hpp"

using namespace slr;

namespace {

// Every variable standing for a car is introduced by has_car(T, C) before
// any other top-level use.
bool cars_linked(const Clause& rule) {
  std::set<std::string> linked;
  const Term train = rule.head.args.at(0);
  for (const auto& g : rule.body) {
    const auto* lit = std::get_if<Literal>(&g.node);
    if (!lit) continue;
    if (lit->atom.predicate == "has_car") {
      if (!(lit->atom.args[0] == train)) return false;
      linked.insert(render(lit->atom.args[1]));
    } else if (!linked.count(render(lit->atom.args[0]))) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("uniform level-1 rules of length one") {
  Language l = level_language(1);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    Clause r = sample_rule_uniform(l, 1, rng);
    CAPTURE(render(r));
    REQUIRE(r.body.size() == 2);
    CHECK(r.head.predicate == "eastbound");
    const auto& link = std::get<Literal>(r.body[0].node).atom;
    CHECK(link.predicate == "has_car");
    const auto& attr = std::get<Literal>(r.body[1].node).atom;
    CHECK(attr.args[0] == link.args[1]);
    CHECK(attr.args[1].is_ground());
    CHECK(rule_length(r) == 1);
    CHECK(validate_rule(r, l).ok());
  }
}

TEST_CASE("uniform rule length counts attribute and comparison literals") {
  Language l;
  l.predicates = {{"has_car", {kTrainType, kCarType}, 1.0, ""},
                  {"car_len", {kCarType, "LEN"}, 1.0, ""},
                  {"has_wall", {kCarType, "WALL"}, 1.0, ""}};
  l.domains = {{"LEN", {Term::constant("short"), Term::constant("long")}},
               {"WALL", {Term::constant("full"), Term::constant("railing")}}};
  l.num_cars = {2, 2};
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    Clause r = sample_rule_uniform(l, 2, rng);
    CHECK(rule_length(r) == 2);
    CHECK(cars_linked(r));
    CHECK(validate_rule(r, l).ok());
  }
}

TEST_CASE("uniform sampling is reproducible and valid at every level") {
  for (int level = 1; level <= kLevels; ++level) {
    Language l = level_language(level);
    for (int r_len = 1; r_len <= 5; ++r_len) {
      if (l.num_cars.max == 1 && r_len > 4) continue;  // one car has only four attributes
      Rng a(static_cast<std::uint64_t>(level * 100 + r_len)), b(static_cast<std::uint64_t>(level * 100 + r_len));
      for (int i = 0; i < 20; ++i) {
        Clause r = sample_rule_uniform(l, r_len, a);
        CAPTURE(render(r));
        CHECK(render(r) == render(sample_rule_uniform(l, r_len, b)));
        CHECK(rule_length(r) == r_len);
        CHECK(cars_linked(r));
        CHECK(validate_rule(r, l).ok());
      }
    }
  }
}

TEST_CASE("uniform sampling mixes ground and variable slots") {
  Language l = level_language(12);
  Rng rng(9);
  int companions = 0, total = 0;
  for (int i = 0; i < 500; ++i) {
    Clause r = sample_rule_uniform(l, 4, rng);
    for (const auto& g : r.body) {
      if (std::holds_alternative<BuiltinCall>(g.node)) ++companions;
      ++total;
    }
  }
  CHECK(companions > 0);
  CHECK(companions < total / 4);
}

TEST_CASE("uniform sampling without attributes is exhausted") {
  Language l;
  l.predicates = {{"has_car", {kTrainType, kCarType}, 1.0, ""}};
  Rng rng(1);
  CHECK_THROWS_AS(sample_rule_uniform(l, 1, rng), GenerationExhausted);
  CHECK_THROWS_AS(sample_rule_uniform(level_language(1), 0, rng), std::invalid_argument);
}

TEST_CASE("template pool mirrors the reference listings") {
  const auto& pool = TemplatePool::reference();
  REQUIRE(pool.templates().size() == 20);
  for (std::size_t i = 0; i < 20; ++i) {
    CAPTURE(i + 1);
    const auto& t = pool.templates()[i];
    const std::string_view listing = i == 14 ? fixtures::kRebasedRecursionRule : fixtures::kReferenceRules[i];
    Clause reference = parse_clause(listing);
    CHECK(t.effective_length == rule_length(reference));
    CHECK(t.feature_tags == feature_tags(reference));
  }
  CHECK(pool.templates()[2].feature_tags.count("negation") == 1);
  CHECK(pool.templates()[4].feature_tags.count("aggregation") == 1);
  CHECK(pool.templates()[8].feature_tags.count("universal") == 1);
}

TEST_CASE("corpus data file holds the reference listings") {
  Program corpus = parse_program(detail::embedded_file("rule_corpus.pl"));
  REQUIRE(corpus.clauses.size() == 20);
  for (std::size_t i = 0; i < 20; ++i) CHECK(corpus.clauses[i] == parse_clause(fixtures::kReferenceRules[i]));
}

TEST_CASE("template instantiation stays in domain") {
  const auto& pool = TemplatePool::reference();
  for (int level : {1, 8, 20}) {
    Language l = level_language(level);
    Rng rng(static_cast<std::uint64_t>(level));
    for (const auto& t : pool.templates()) {
      for (int i = 0; i < 20; ++i) {
        Clause c = instantiate_template(t, l, rng);
        CAPTURE(render(c));
        auto report = validate_rule(c, l);
        CHECK(report.ok());
        CHECK(report.constants_in_domain);
      }
    }
  }
}

TEST_CASE("template policy picks the closest length deterministically") {
  Language l = level_language(10);
  const auto& pool = TemplatePool::reference();
  for (int r_len = 1; r_len <= 5; ++r_len) {
    auto candidates = pool.closest(l, r_len);
    REQUIRE_FALSE(candidates.empty());
    const int gap = std::abs(candidates[0]->effective_length - r_len);
    for (const auto& t : pool.templates()) CHECK(std::abs(t.effective_length - r_len) >= gap);
  }
  Rng a(77), b(77);
  for (int i = 0; i < 10; ++i) CHECK(generate_rule_llm(pool, l, 5, a) == generate_rule_llm(pool, l, 5, b));

  // The count comparison template gets two different colors.
  const RuleTemplate& counting = pool.templates()[4];
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    Clause c = instantiate_template(counting, l, rng);
    const auto& first = std::get<BuiltinCall>(c.body[0].node);
    const auto& second = std::get<BuiltinCall>(c.body[1].node);
    CHECK_FALSE(first.args[1] == second.args[1]);
  }
}

TEST_CASE("model-guided generation through a stub client") {
  Language l = level_language(6);
  Rng rng(1);
  auto stub = std::make_shared<StubLlmClient>(std::vector<std::string>{
      "Here is a rule:\n```prolog\n" + std::string(fixtures::kReferenceRules[2]) + "\n```"});
  Clause c = generate_rule_llm(LlmGuided{stub, 3}, l, 2, rng);
  CHECK(feature_tags(c).count("negation") == 1);
  CHECK(stub->calls() == 1);
  CHECK(stub->last_prompt().find("car_color(CAR, COLOR)") != std::string::npos);
  CHECK(stub->last_prompt().find("findall(Car, has_car(Train, Car), Cars)") != std::string::npos);

  auto garbage = std::make_shared<StubLlmClient>(std::vector<std::string>{"eastbound(T) :- has_car("});
  CHECK_THROWS_AS(generate_rule_llm(LlmGuided{garbage, 3}, l, 2, rng), ValidationFailed);
  CHECK(garbage->calls() == 3);

  auto wrong_head = std::make_shared<StubLlmClient>(
      std::vector<std::string>{"westbound(T) :- has_car(T, C).", "eastbound(T) :- has_car(T, C), car_len(C, long)."});
  Clause second = generate_rule_llm(LlmGuided{wrong_head, 3}, l, 1, rng);
  CHECK(wrong_head->calls() == 2);
  CHECK(render(second) == "eastbound(T) :- has_car(T, C), car_len(C, long).");

  CHECK_THROWS_AS(generate_rule_llm(LlmGuided{nullptr, 3}, l, 1, rng), LlmUnavailable);
}

TEST_CASE("validate_rule") {
  Language l = level_language(1);
  auto v7 = validate_rule(parse_clause(fixtures::kReferenceRules[6]), l);
  CHECK(v7.ok());
  CHECK(validate_rule(parse_clause(fixtures::kReferenceRules[15]), l).ok());

  auto west = validate_rule(parse_clause("westbound(T) :- has_car(T, C)."), l);
  CHECK_FALSE(west.ok());
  CHECK_FALSE(west.head_is_target);

  auto engine = validate_rule(parse_clause("eastbound(T) :- has_car(T, C), has_engine(C, big)."), l);
  CHECK_FALSE(engine.ok());
  CHECK_FALSE(engine.known_predicates);

  auto purple = validate_rule(parse_clause("eastbound(T) :- has_car(T, C), car_color(C, purple)."), l);
  CHECK_FALSE(purple.constants_in_domain);

  auto cut = validate_rule(parse_clause("eastbound(T) :- has_car(T, C), !."), l);
  CHECK(cut.ok());
  CHECK(cut.contains_cut);

  auto helper = parse_clause("eastbound(T) :- has_car(T, C), red_car(C).");
  CHECK_FALSE(validate_rule(helper, l).ok());
  CHECK(validate_rule(helper, l, {"red_car/1"}).ok());

  CHECK_FALSE(validate_rule_text("eastbound(T) :- ", l).parses);
  CHECK_FALSE(validate_rule_text("a. b.", l).parses);
  CHECK_FALSE(validate_rule(parse_clause("eastbound(T) :- findall(X, Y, Z)."), l).known_predicates);
}

TEST_CASE("canonical rule identity") {
  auto canon = [](std::string_view text) { return canonical_rule(parse_clause(text)); };
  CHECK(canon("eastbound(T) :- has_car(T, C), car_color(C, red).") ==
        canon("eastbound(Train) :- has_car(Train, Car), car_color(Car, red)."));
  CHECK(canon("eastbound(T) :- has_car(T, C), car_len(C, long), car_color(C, red).") ==
        canon("eastbound(T) :- has_car(T, C), car_color(C, red), car_len(C, long)."));
  CHECK(canon("eastbound(T) :- has_car(T, A), has_car(T, B), car_color(A, red), car_len(B, long).") ==
        canon("eastbound(T) :- has_car(T, B), has_car(T, A), car_len(B, long), car_color(A, red)."));
  CHECK(canon("eastbound(T) :- has_car(T, C), car_color(C, red).") !=
        canon("eastbound(T) :- has_car(T, C), car_color(C, blue)."));
  CHECK(canon("eastbound(T) :- has_car(T, A), has_car(T, B), car_color(A, red), car_len(B, long).") !=
        canon("eastbound(T) :- has_car(T, A), has_car(T, B), car_color(A, red), car_len(A, long)."));
}
