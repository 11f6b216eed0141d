#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>
#include <string>

namespace carnotkit {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parses "p" or "p/q" (optionally signed). Throws Error on malformed input.
inline Rat parse_rat(const std::string& s) {
  if (s.empty()) throw Error("empty rational literal");
  for (char c : s) {
    if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '/'))
      throw Error("malformed rational literal: " + s);
  }
  try {
    Rat r(s);
    return r;
  } catch (const std::exception&) {
    throw Error("malformed rational literal: " + s);
  }
}

/// Canonical form: "p" for integers, "p/q" otherwise (q > 0, gcd reduced).
inline std::string format_rat(const Rat& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

inline double to_double(const Rat& r) { return r.convert_to<double>(); }

inline Int factorial(int n) {
  Int f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace carnotkit
