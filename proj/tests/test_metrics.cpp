#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "slr/metrics.hpp"

using namespace slr;

namespace {

LevelStats stats(int level, std::int64_t tasks, std::int64_t solved, std::int64_t syntax = -1) {
  LevelStats s;
  s.level = level;
  s.tasks = tasks;
  s.solved = solved;
  s.syntax_valid = syntax < 0 ? tasks : syntax;
  return s;
}

JudgeTask red_train_task() {
  Language l;
  l.positive_target = "is_red_train";
  l.negative_target = std::nullopt;
  l.predicates = {{"has_car", {kTrainType, kCarType}, 1.0, ""}, {"car_color", {kCarType, "COLOR"}, 1.0, ""}};
  l.domains = {{"COLOR", {Term::constant("red"), Term::constant("blue")}}};
  return JudgeTask{l,
                   parse_program("has_car(t1, c1). car_color(c1, red). has_car(t2, c2). car_color(c2, blue)."),
                   {parse_atom("is_red_train(t1)")},
                   {parse_atom("is_red_train(t2)")}};
}

}  // namespace

TEST_CASE("lrl") {
  std::vector<LevelStats> all;
  for (int l = 1; l <= 20; ++l) all.push_back(stats(l, 50, 50));
  CHECK(lrl(all) == 20);

  CHECK(lrl({stats(1, 4, 4), stats(2, 4, 2), stats(3, 4, 1)}) == Rational(7, 4));

  std::vector<LevelStats> partial;
  for (int l = 1; l <= 20; ++l) partial.push_back(stats(l, 50, l == 1 ? 50 : l == 2 ? 25 : 0));
  double oracle = 0;
  for (const auto& s : partial) oracle += static_cast<double>(s.solved) / static_cast<double>(s.tasks);
  CHECK(static_cast<double>(lrl(partial)) == doctest::Approx(oracle));
  CHECK(lrl(partial) == Rational(3, 2));

  CHECK_THROWS_AS(lrl({stats(1, 0, 0)}), std::invalid_argument);
}

TEST_CASE("lrl properties") {
  std::mt19937 gen(5);
  for (int round = 0; round < 50; ++round) {
    std::vector<LevelStats> a, b;
    for (int l = 1; l <= 20; ++l) {
      const int tasks = 1 + static_cast<int>(gen() % 60);
      const int solved = static_cast<int>(gen() % static_cast<unsigned>(tasks + 1));
      (l <= 10 ? a : b).push_back(stats(l, tasks, solved));
    }
    std::vector<LevelStats> both = a;
    both.insert(both.end(), b.begin(), b.end());
    CHECK(lrl(both) == lrl(a) + lrl(b));
    CHECK(lrl(both) >= 0);
    CHECK(lrl(both) <= 20);
    std::shuffle(both.begin(), both.end(), gen);
    CHECK(lrl(both) == lrl(a) + lrl(b));
    CHECK(syntax_proportion(both) == 100);
  }
}

TEST_CASE("tier accuracy") {
  std::vector<LevelStats> levels;
  for (int l = 1; l <= 5; ++l) levels.push_back(stats(l, 50, 50));
  const int easy_solved[] = {40, 30, 25, 20, 10};
  for (int l = 6; l <= 10; ++l) levels.push_back(stats(l, 50, easy_solved[l - 6]));
  for (int l = 11; l <= 20; ++l) levels.push_back(stats(l, 50, l % 3));
  const auto acc = tier_accuracy(levels);
  CHECK(acc.at(Tier::basic) == 100);
  CHECK(acc.at(Tier::easy) == 50);

  // With equal-sized levels the tier percentages recompose to LRL / L.
  Rational recomposed = 0;
  for (const auto& [tier, pct] : acc) recomposed += pct / 100 * Rational(5, 20);
  CHECK(recomposed == lrl(levels) / 20);

  CHECK(tier_accuracy({stats(2, 10, 3)}).count(Tier::hard) == 0);
}

TEST_CASE("syntax proportion") {
  CHECK(syntax_proportion({stats(1, 10, 5)}) == 100);
  CHECK(syntax_proportion({stats(1, 60, 10, 20), stats(2, 40, 0, 14)}) == 34);
  CHECK(syntax_proportion({}) == 0);

  const JudgeTask task = red_train_task();
  const std::vector<std::string> hyps = {"is_red_train(T) :- has_car(T, C), car_color(C, red).", "garbage(",
                                         "is_red_train(T) :- has_car(T, _).", "", "foo(X) :- bar(X)."};
  LevelStats s;
  int bits = 0;
  for (const auto& h : hyps) {
    const Judgment j = judge(h, task);
    bits += j.syntax;
    s.add(j);
  }
  CHECK(syntax_proportion({s}) == Rational(bits * 100, static_cast<int>(hyps.size())));
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("level stats validation") {
  CHECK_THROWS(stats(1, 5, 4, 3).validate());
  CHECK_THROWS(stats(1, 5, 1, 6).validate());
  CHECK_NOTHROW(stats(1, 5, 3, 4).validate());
  const auto merged = merge_levels({stats(2, 3, 1), stats(1, 2, 2), stats(2, 5, 5)});
  REQUIRE(merged.size() == 2);
  CHECK(merged[0].level == 1);
  CHECK(merged[1].tasks == 8);
  CHECK(merged[1].solved == 6);
}

TEST_CASE("pricing") {
  const PricingTable& p = PricingTable::reference();
  CHECK(p.rows().size() == 25);
  CHECK(p.at("gpt-4o").output == 10);
  CHECK(p.at("gpt-4o-mini").cached_input == std::optional<Rational>(Rational(3, 40)));
  CHECK_FALSE(p.at("o1-pro").cached_input.has_value());
  for (const auto& [m, r] : p.rows()) {
    CAPTURE(m);
    CHECK(r.input >= 0);
    CHECK(r.output >= 0);
  }

  CHECK(compute_cost({{"gpt-4o", TokenCounts{0, std::nullopt, 1000000}}}, p).total == 10);
  CHECK(compute_cost({{"gpt-4o", TokenCounts{}}}, p).total == 0);
  CHECK(compute_cost({}, p).total == 0);

  const Rational expected = parse_decimal("2.00") * 2 + parse_decimal("8.00") * 1;
  const auto report = compute_cost({{"gpt-4.1", TokenCounts{2000000, std::nullopt, 1000000}}}, p);
  CHECK(report.total == expected);
  CHECK(report.total == 12);

  // Cached tokens only change the bill when reported.
  const auto cached = compute_cost({{"gpt-4.1", TokenCounts{1000000, 1000000, 0}}}, p);
  CHECK(cached.total == parse_decimal("2.50"));
  const auto no_rate = compute_cost({{"o1-pro", TokenCounts{0, 1000000, 0}}}, p);
  CHECK(no_rate.total == 150);

  const auto two = compute_cost(
      {{"gpt-4o", TokenCounts{1000000, std::nullopt, 0}}, {"o3", TokenCounts{0, std::nullopt, 500000}}}, p);
  CHECK(two.per_model.at("gpt-4o") == parse_decimal("2.5"));
  CHECK(two.per_model.at("o3") == 20);
  CHECK(two.total == parse_decimal("22.5"));

  CHECK_THROWS_AS(compute_cost({{"nope", TokenCounts{}}}, p), UnknownModel);
  CHECK_THROWS_AS(compute_cost({{"gpt-4o", TokenCounts{-1, std::nullopt, 0}}}, p), std::invalid_argument);
}

TEST_CASE("pricing loaders") {
  const auto csv = PricingTable::from_csv("model,input,cached_input,output\nm1,1.5,,3\n");
  CHECK(csv.at("m1").input == Rational(3, 2));
  CHECK_FALSE(csv.at("m1").cached_input);
  CHECK_THROWS(PricingTable::from_csv("model,input,cached_input,output\nm1,-1,,3\n"));
  CHECK_THROWS(PricingTable::from_csv("name,in,out\n"));

  const auto js = PricingTable::from_json(nlohmann::json::parse(R"({"m": {"input": "0.075", "output": 0.6}})"));
  CHECK(js.at("m").input == Rational(3, 40));
  CHECK(js.at("m").output == Rational(3, 5));

  CHECK(parse_decimal("0.025") == Rational(1, 40));
  CHECK(parse_decimal("-2") == -2);
  CHECK_THROWS(parse_decimal("1e3"));
  CHECK_THROWS(parse_decimal("."));
}

TEST_CASE("response extraction") {
  CHECK(extract_hypothesis("Here it is:\n```prolog\neastbound(T) :- has_car(T, C).\n```\nDone.", ExtractionRule::last_fence) ==
        "eastbound(T) :- has_car(T, C).");
  CHECK(extract_hypothesis("```\na.\n```\ntext\n```\nb :- a.\n```", ExtractionRule::last_fence) == "b :- a.");
  CHECK(extract_hypothesis("I think the rule is\neastbound(T) :- has_car(T, C), car_len(C, long).", ExtractionRule::last_fence) ==
        "eastbound(T) :- has_car(T, C), car_len(C, long).");
  CHECK(extract_hypothesis("no rule here", ExtractionRule::last_fence) == "");
  CHECK(extract_hypothesis("", ExtractionRule::last_fence) == "");
  CHECK(extract_hypothesis("  raw text  ", ExtractionRule::raw) == "raw text");
  CHECK(extraction_rule_from_string("raw") == ExtractionRule::raw);
  CHECK_THROWS(extraction_rule_from_string("first"));
}

TEST_CASE("evaluate") {
  const JudgeTask task = red_train_task();
  const std::vector<EvalItem> items = {
      {1, &task, "```\nis_red_train(T) :- has_car(T, C), car_color(C, red).\n```"},
      {1, &task, std::nullopt},
      {2, &task, "   "},
      {2, &task, "is_red_train(T) :- has_car(T, C), car_color(C, blue)."},
  };
  const EvalResult r = evaluate(items, {}, 2);
  REQUIRE(r.judgments.size() == 4);
  CHECK(r.judgments[0].overall == 1);
  CHECK(r.judgments[1].syntax == 0);
  CHECK(r.judgments[1].diagnostics.front() == "missing response");
  CHECK(r.judgments[2].syntax == 0);
  CHECK(r.judgments[3].syntax == 1);
  CHECK(r.judgments[3].partial == 0);
  REQUIRE(r.levels.size() == 2);
  CHECK(r.levels[0].tasks == 2);
  CHECK(r.levels[0].solved == 1);
  CHECK(r.levels[0].syntax_valid == 1);
  CHECK(r.levels[1].syntax_valid == 1);
  CHECK(lrl(r.levels) == Rational(1, 2));

  const EvalResult again = evaluate(items, {}, 1);
  CHECK(report_json(again.levels) == report_json(r.levels));
  const auto rep = report_json(r.levels, compute_cost({{"gpt-4o", TokenCounts{0, std::nullopt, 1000000}}},
                                                      PricingTable::reference()));
  CHECK(rep["lrl"] == 0.5);
  CHECK(rep["pass_at_k"].is_null());
  CHECK(rep["cost_usd"]["total"] == 10.0);
  CHECK(rep["tier_accuracy_pct"]["basic"] == 25.0);
}

TEST_CASE("rounding") {
  CHECK(rounded(Rational(1, 3)) == 0.333333);
  CHECK(rounded(Rational(2, 3), 2) == 0.67);
  CHECK(rounded(Rational(-1, 8), 2) == -0.13);
}
