#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "fixtures.hpp"
#include "slr/engine.hpp"

using namespace slr;

namespace {

EntailmentOutcome ask(std::string_view program, std::string_view query, const ResourceLimits& limits = {}) {
  return entails(parse_program(program), parse_atom(query), limits);
}

BodyGoal goal(std::string_view text) { return term_to_goal(parse_term(text)); }

// Two-car and three-car trains over the base vocabulary.
constexpr std::string_view kTrains = R"(
has_car(t1, c1). car_num(c1, 1). car_color(c1, red). car_len(c1, short). has_wall(c1, full).
has_car(t1, c2). car_num(c2, 2). car_color(c2, white). car_len(c2, long). has_wall(c2, railing).
has_car(t2, c3). car_num(c3, 1). car_color(c3, yellow). car_len(c3, short). has_wall(c3, full).
has_car(t2, c4). car_num(c4, 2). car_color(c4, green). car_len(c4, long). has_wall(c4, full).
has_car(t2, c5). car_num(c5, 3). car_color(c5, green). car_len(c5, long). has_wall(c5, railing).
)";

}  // namespace

TEST_CASE("worked example: red train entailed, blue train not") {
  std::string program = std::string(fixtures::kWorkedBackground) + std::string(fixtures::kWorkedRule);
  CHECK(ask(program, "is_red_train(t1)").is_entailed());
  CHECK(ask(program, "is_red_train(t2)").is_not_entailed());
}

TEST_CASE("findall/length counts cars: two cars entailed, three not") {
  std::string program = std::string(kTrains) + std::string(fixtures::kReferenceRules[7]);
  CHECK(ask(program, "eastbound(t1)").is_entailed());
  CHECK(ask(program, "eastbound(t2)").is_not_entailed());
}

TEST_CASE("unknown predicates fail") {
  CHECK(ask("a.", "nothing_here(x)").is_not_entailed());
  CHECK(ask("", "p").is_not_entailed());
}

TEST_CASE("non-ground query is rejected") {
  CHECK_THROWS_AS(ask("p(a).", "p(X)"), std::invalid_argument);
}

TEST_CASE("solve_all returns solutions in clause order") {
  Program p = parse_program("has_car(t1, c1). has_car(t1, c2). has_car(t2, c3).");
  auto subs = solve_all(p, goal("has_car(t1, C)"));
  REQUIRE(subs.size() == 2);
  CHECK(subs[0].at("C") == Term::constant("c1"));
  CHECK(subs[1].at("C") == Term::constant("c2"));

  CHECK(solve_all(Program{}, goal("car_color(C, red)")).empty());

  auto disj = solve_all(Program{}, goal("(X = 1 ; X = 2)"));
  REQUIRE(disj.size() == 2);
  CHECK(disj[0].at("X") == Term::integer(1));
  CHECK(disj[1].at("X") == Term::integer(2));
}

TEST_CASE("solve_all keeps duplicates and reports unbound variables") {
  Program p = parse_program("q(a). q(a). r(X, Y) :- q(X).");
  CHECK(solve_all(p, goal("q(X)")).size() == 2);
  auto subs = solve_all(p, goal("r(X, Y)"));
  REQUIRE(subs.size() == 2);
  CHECK(subs[0].at("X") == Term::constant("a"));
  CHECK(subs[0].at("Y").is_variable());
}

TEST_CASE("builtins") {
  Program none;
  auto one = [&](std::string_view g, std::string_view var) {
    auto subs = solve_all(none, goal(g));
    REQUIRE(subs.size() == 1);
    return subs[0].at(std::string(var));
  };
  CHECK(one("X is 2 + 3 * 4 - 1", "X") == Term::integer(13));
  CHECK(one("X is 7 // 2", "X") == Term::integer(3));
  CHECK(one("X is -7 mod 3", "X") == Term::integer(2));
  CHECK(one("sort([c, a, b, a], L)", "L") == parse_term("[a, b, c]"));
  CHECK(one("sort([b, 2, f(x), a, 1], L)", "L") == parse_term("[1, 2, a, b, f(x)]"));
  CHECK(one("length([a, b, c], N)", "N") == Term::integer(3));
  CHECK(one("max_list([3, 9, 2], M)", "M") == Term::integer(9));
  CHECK(one("min_list([3, 9, 2], M)", "M") == Term::integer(2));
  CHECK(one("findall(X, member(X, [a, b]), L)", "L") == parse_term("[a, b]"));
  CHECK(one("length(L, 2)", "L").is_list());

  CHECK(solve_all(none, goal("member(X, [a, b, c])")).size() == 3);
  CHECK(solve_all(none, goal("max_list([], M)")).empty());
  CHECK(solve_all(none, goal("a \\= b")).size() == 1);
  CHECK(solve_all(none, goal("a \\= a")).empty());
  CHECK(solve_all(none, goal("f(X) == f(X)")).size() == 1);
  CHECK(solve_all(none, goal("f(X) == f(Y)")).empty());
  CHECK(solve_all(none, goal("3 =:= 1 + 2")).size() == 1);
  CHECK(solve_all(none, goal("3 =\\= 1 + 2")).empty());
  CHECK(solve_all(none, goal("(2 < 3, 3 > 2, 2 >= 2, 2 =< 2)")).size() == 1);
  CHECK(solve_all(none, goal("forall(member(X, [1, 2]), X > 0)")).size() == 1);
  CHECK(solve_all(none, goal("forall(member(X, [1, -2]), X > 0)")).empty());
  CHECK(solve_all(none, goal("\\+ member(z, [a, b])")).size() == 1);
}

TEST_CASE("cut is neutral") {
  Program p = parse_program("q(a). q(b). p(X) :- q(X), !.");
  CHECK(solve_all(p, goal("p(X)")).size() == 2);
}

TEST_CASE("resource limits surface as ResourceExceeded") {
  CHECK(ask("p :- p.", "p") == EntailmentOutcome::resource_exceeded("depth"));

  ResourceLimits few;
  few.max_steps = 100;
  few.max_depth = 1'000'000;
  CHECK(ask("p :- p.", "p", few) == EntailmentOutcome::resource_exceeded("steps"));

  ResourceLimits quick;
  quick.max_steps = ~0ull;
  quick.max_depth = ~0ull >> 1;
  quick.wall_timeout = std::chrono::milliseconds(50);
  CHECK(ask("n(0). n(X) :- n(Y), X is Y + 1.", "n(-1)", quick).is_resource_exceeded());

  CHECK(ask("p :- X is Y + 1.", "p") == EntailmentOutcome::resource_exceeded("instantiation"));
  CHECK(ask("p :- X is a + 1.", "p") == EntailmentOutcome::resource_exceeded("type_error"));
  CHECK(ask("p :- X is 1 // 0.", "p") == EntailmentOutcome::resource_exceeded("evaluation_error"));

  // Left recursion and recursion through negation run under limits.
  CHECK(ask("e(a, b). path(X, Y) :- path(X, Z), e(Z, Y). path(X, Y) :- e(X, Y).", "path(a, b)")
            .is_resource_exceeded());
  CHECK(ask("p :- \\+ p.", "p") == EntailmentOutcome::resource_exceeded("depth"));

  CHECK_THROWS_AS(solve_all(parse_program("p :- p."), goal("p")), ResourceExceeded);

  ResourceLimits zero;
  zero.max_steps = 0;
  CHECK_THROWS_AS(ask("p.", "p", zero), std::invalid_argument);
}

TEST_CASE("engine instance is reusable across queries") {
  Engine e(parse_program(std::string(fixtures::kWorkedBackground) + std::string(fixtures::kWorkedRule)));
  for (int i = 0; i < 3; ++i) {
    CHECK(e.entails(parse_atom("is_red_train(t1)")).is_entailed());
    CHECK(e.entails(parse_atom("is_red_train(t2)")).is_not_entailed());
    CHECK(e.entails(parse_atom("loop_forever(t2)")).is_not_entailed());
  }
}

TEST_CASE("every reference listing runs on a typed background") {
  // Expected outcomes for t1 (red short, white long) and t2 (yellow, green, green).
  const std::array<std::pair<bool, bool>, 20> expected = {{
      {true, false},   // 1 red short car
      {true, true},    // 2 white or yellow car
      {false, true},   // 3 no red car
      {true, true},    // 4 two cars of different colors
      {false, true},   // 5 more green than yellow
      {false, true},   // 6 exactly one yellow car, others not yellow
      {true, false},   // 7 all colors distinct
      {true, false},   // 8 exactly two cars
      {false, false},  // 9 full-wall cars are long
      {false, false},  // 10 long cars are red or blue
      {false, false},  // 11 same as 10
      {false, false},  // 12 full-wall cars are white
      {false, true},   // 13 adjacent cars share a color
      {false, false},  // 14 exactly two yellow short cars
      {true, true},    // 15 (list recursion, not applicable to constants)
      {false, false},  // 16 short, long, short consecutive
      {true, false},   // 17 last car is white
      {true, true},    // 18 full-wall cars at position <= 3
      {true, true},    // 19 two cars differing in color or length
      {true, false},   // 20 all colors distinct
  }};
  Program trains = parse_program(kTrains);
  for (std::size_t i = 0; i < fixtures::kReferenceRules.size(); ++i) {
    CAPTURE(i + 1);
    Program p = trains;
    for (auto& c : parse_program(fixtures::kReferenceRules[i]).clauses) p.clauses.push_back(c);
    auto t1 = entails(p, parse_atom("eastbound(t1)"));
    auto t2 = entails(p, parse_atom("eastbound(t2)"));
    CHECK_FALSE(t1.is_resource_exceeded());
    CHECK_FALSE(t2.is_resource_exceeded());
    if (i == 14) {
      // Train constants are not lists, so the list recursion never applies.
      CHECK(t1.is_not_entailed());
      CHECK(t2.is_not_entailed());
      continue;
    }
    CHECK(t1.is_entailed() == expected[i].first);
    CHECK(t2.is_entailed() == expected[i].second);
  }
  Program rebased = trains;
  rebased.clauses.push_back(parse_clause(fixtures::kRebasedRecursionRule));
  CHECK(entails(rebased, parse_atom("eastbound(t1)")).is_entailed());
  CHECK(entails(rebased, parse_atom("eastbound(t2)")).is_entailed());
}

TEST_CASE("forward_chain") {
  Program red = parse_program(std::string(fixtures::kWorkedBackground) + std::string(fixtures::kWorkedRule));
  AtomSet model = forward_chain(red);
  CHECK(model.count(parse_atom("is_red_train(t1)")) == 1);
  CHECK(model.count(parse_atom("is_red_train(t2)")) == 0);

  CHECK(forward_chain(Program{}).empty());

  Program chain = parse_program(
      "edge(a, b). edge(b, c). edge(c, d).\n"
      "path(X, Y) :- edge(X, Y).\n"
      "path(X, Y) :- edge(X, Z), path(Z, Y).\n");
  std::size_t paths = 0;
  for (const auto& a : forward_chain(chain))
    if (a.predicate == "path") ++paths;
  CHECK(paths == 6);

  CHECK_THROWS_AS(forward_chain(parse_program("p :- \\+ q.")), UnsupportedConstruct);
  CHECK_THROWS_AS(forward_chain(parse_program("p(X) :- X = a.")), UnsupportedConstruct);
  CHECK_THROWS_AS(forward_chain(parse_program("p(f(a)).")), UnsupportedConstruct);
}

namespace {

// Function-free definite programs, stratified by predicate level so that
// top-down search always terminates: level-k rules only call lower levels.
struct ProgramGen {
  std::mt19937_64 rng;
  static constexpr std::array<const char*, 3> kConsts = {"a", "b", "c"};
  static constexpr std::array<const char*, 3> kVars = {"X", "Y", "Z"};
  int pick(int n) { return static_cast<int>(rng() % static_cast<unsigned>(n)); }

  // Predicates: level 0 {e/2, f/1}, level 1 {p/1, q/2}, level 2 {r/1}.
  struct Pred { const char* name; int arity; int level; };
  static constexpr std::array<Pred, 5> kPreds = {{{"e", 2, 0}, {"f", 1, 0}, {"p", 1, 1}, {"q", 2, 1}, {"r", 1, 2}}};

  Term arg(bool allow_var) {
    if (allow_var && pick(2)) return Term::var(kVars[static_cast<std::size_t>(pick(3))]);
    return Term::constant(kConsts[static_cast<std::size_t>(pick(3))]);
  }

  Atom atom(const Pred& p, bool allow_var) {
    Atom a{p.name, {}};
    for (int i = 0; i < p.arity; ++i) a.args.push_back(arg(allow_var));
    return a;
  }

  // dom/1 mentions every constant so both sides share one Herbrand universe.
  Program program() {
    Program prog = parse_program("dom(a). dom(b). dom(c).");
    for (int i = pick(8); i > 0; --i) prog.clauses.push_back(Clause{atom(kPreds[static_cast<std::size_t>(pick(2))], false), {}});
    for (int i = pick(5); i > 0; --i) {
      const Pred& head = kPreds[2 + static_cast<std::size_t>(pick(3))];
      Clause c{atom(head, true), {}};
      for (int j = pick(3); j >= 0; --j) {
        std::vector<const Pred*> lower;
        for (const auto& p : kPreds)
          if (p.level < head.level) lower.push_back(&p);
        c.body.push_back(BodyGoal::literal(atom(*lower[static_cast<std::size_t>(pick(static_cast<int>(lower.size())))], true)));
      }
      prog.clauses.push_back(std::move(c));
    }
    return prog;
  }

  std::vector<Atom> herbrand_base() {
    std::vector<Atom> out;
    for (const auto& p : kPreds) {
      if (p.arity == 1) {
        for (auto c : kConsts) out.push_back(Atom{p.name, {Term::constant(c)}});
      } else {
        for (auto c : kConsts)
          for (auto d : kConsts) out.push_back(Atom{p.name, {Term::constant(c), Term::constant(d)}});
      }
    }
    return out;
  }
};

}  // namespace

TEST_CASE("property: top-down entailment agrees with the bottom-up oracle") {
  ProgramGen g{std::mt19937_64{7}};
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    Program p = g.program();
    CAPTURE(render(p));
    AtomSet model = forward_chain(p);
    Engine engine(p);
    for (const auto& q : g.herbrand_base()) {
      CAPTURE(render(q));
      auto outcome = engine.entails(q);
      REQUIRE_FALSE(outcome.is_resource_exceeded());
      CHECK(outcome.is_entailed() == (model.count(q) == 1));
      ++checked;
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("property: adding facts never retracts an entailment") {
  ProgramGen g{std::mt19937_64{11}};
  for (int trial = 0; trial < 200; ++trial) {
    Program p = g.program();
    Program bigger = p;
    for (int i = 0; i < 3; ++i) bigger.clauses.push_back(Clause{g.atom(ProgramGen::kPreds[static_cast<std::size_t>(g.pick(2))], false), {}});
    Engine small(p), large(bigger);
    for (const auto& q : g.herbrand_base())
      if (small.entails(q).is_entailed()) CHECK(large.entails(q).is_entailed());
  }
}

TEST_CASE("property: exactly one of q and its negation is entailed") {
  ProgramGen g{std::mt19937_64{13}};
  for (int trial = 0; trial < 200; ++trial) {
    Program p = g.program();
    p.clauses.push_back(parse_clause("neg_r(V) :- \\+ r(V)."));
    Engine e(p);
    for (auto c : {"a", "b", "c"}) {
      auto pos = e.entails(Atom{"r", {Term::constant(c)}});
      auto neg = e.entails(Atom{"neg_r", {Term::constant(c)}});
      CHECK(pos.is_entailed() != neg.is_entailed());
    }
  }
}

TEST_CASE("property: repeated calls are deterministic") {
  ProgramGen g{std::mt19937_64{17}};
  for (int trial = 0; trial < 100; ++trial) {
    Program p = g.program();
    Engine e(p);
    auto first = e.solve_all(goal("q(A, B)"));
    auto second = solve_all(p, goal("q(A, B)"));
    CHECK(first == second);
    for (const auto& q : g.herbrand_base()) CHECK(e.entails(q) == entails(p, q));
  }
}
