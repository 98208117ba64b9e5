// Exact arithmetic for scores and counts.
#pragma once

#include <boost/multiprecision/cpp_int.hpp>

namespace slr {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

}  // namespace slr
