// Shared test fixtures: the twenty reference rule listings used to seed the
// template pool and the LLM prompt, verbatim.
#pragma once

#include <array>
#include <string_view>

namespace slr::fixtures {

inline constexpr std::array<std::string_view, 20> kReferenceRules = {
    R"(eastbound(Train) :-
    has_car(Train, Car),
    car_color(Car, red),
    car_len(Car, short).)",
    R"(eastbound(Train) :-
    has_car(Train, Car),
    (car_color(Car, white) ; car_color(Car, yellow)).)",
    R"(eastbound(Train) :-
    \+ (has_car(Train, Car), car_color(Car, red)).)",
    R"(eastbound(Train) :-
    has_car(Train, CarA),
    has_car(Train, CarB),
    CarA \= CarB,
    car_color(CarA, Color1),
    car_color(CarB, Color2),
    Color1 \= Color2.)",
    R"(eastbound(Train) :-
    findall(Car, (has_car(Train, Car), car_color(Car, green)), Greens),
    findall(Car, (has_car(Train, Car), car_color(Car, yellow)), Yellows),
    length(Greens, G),
    length(Yellows, Y),
    G > Y.)",
    R"(eastbound(Train) :-
    findall(Car, (has_car(Train, Car), car_color(Car, yellow)), [YellowCar]),
    forall(
        (has_car(Train, Car), Car \= YellowCar),
        (car_color(Car, NotYellow),
        NotYellow \= yellow)
    ).)",
    R"(eastbound(Train) :-
    findall(Color, (has_car(Train, Car), car_color(Car, Color)), Colors),
    sort(Colors, UniqueColors),
    length(Colors, N),
    length(UniqueColors, N).)",
    R"(eastbound(Train) :-
    findall(Car, has_car(Train, Car), Cars),
    length(Cars, 2).)",
    R"(eastbound(Train) :-
    forall(
        (has_car(Train, Car), has_wall(Car, full)),
        car_len(Car, long)
    ).)",
    R"(eastbound(Train) :-
    forall(
        (has_car(Train, Car), car_len(Car, long)),
        (car_color(Car, Color), (Color = red ; Color = blue))
    ).)",
    R"(eastbound(Train) :-
    forall(
        (has_car(Train, Car), car_len(Car, long)),
        (car_color(Car, Color), (Color = red ; Color = blue))
    ).)",
    R"(eastbound(Train) :-
    forall(
      (has_car(Train, Car), has_wall(Car, full)),
      car_color(Car, white)
    ).)",
    R"(eastbound(Train) :-
    has_car(Train, CarA),
    has_car(Train, CarB),
    CarA \= CarB,
    car_num(CarA, N1),
    car_num(CarB, N2),
    (N2 =:= N1 + 1 ; N2 =:= N1 - 1),
    car_color(CarA, Color),
    car_color(CarB, Color).)",
    R"(eastbound(Train) :-
    findall(Car, (has_car(Train, Car), car_color(Car, yellow), car_len(Car, short)), L),
    length(L, 2).)",
    R"(eastbound([Car|Cars]) :-
    car_len(Car, long)
    ;
    eastbound(Cars).)",
    R"(eastbound(Train) :-
    has_car(Train, Car1), car_num(Car1, N),
    car_len(Car1, short),
    N2 is N+1, N3 is N+2,
    has_car(Train, Car2), car_num(Car2, N2), car_len(Car2, long),
    has_car(Train, Car3), car_num(Car3, N3), car_len(Car3, short).)",
    R"(eastbound(Train) :-
    findall(N, (has_car(Train, Car), car_num(Car, N)), Numbers),
    max_list(Numbers, Max),
    has_car(Train, LastCar),
    car_num(LastCar, Max),
    car_color(LastCar, white).)",
    R"(eastbound(Train) :-
    forall(
      (has_car(Train, Car), has_wall(Car, full)),
      (car_num(Car, N), N =< 3)
    ).)",
    R"(eastbound(Train) :-
    has_car(Train, CarA), has_car(Train, CarB), CarA \= CarB,
    car_color(CarA, ColA), car_len(CarA, LenA),
    car_color(CarB, ColB), car_len(CarB, LenB),
    (ColA \= ColB ; LenA \= LenB).)",
    R"(eastbound(Train) :-
    findall(Color, (has_car(Train, Car), car_color(Car, Color)), Colors),
    sort(Colors, UniqueColors),
    length(Colors, N), length(UniqueColors, N).)",
};

/// Listing 15 recurses over a list argument; tasks pass train constants, so
/// the executable form walks the train's cars collected from has_car/2.
inline constexpr std::string_view kRebasedRecursionRule =
    "eastbound(Train) :- findall(Car, has_car(Train, Car), Cars), member(Car, Cars), car_len(Car, long).";

inline constexpr std::string_view kWorkedRule = "is_red_train(T) :- has_car(T, C), car_color(C, red).";

inline constexpr std::string_view kWorkedBackground =
    "has_car(t1, c1).\ncar_color(c1, red).\nhas_car(t2, c2).\ncar_color(c2, blue).\n";

}  // namespace slr::fixtures
