#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <stdexcept>
#include <string>

namespace pirnsi {

using Rat = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Parse a plain decimal like "0.2" or "3/5" into an exact rational.
inline Rat rat_from_decimal(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("empty number");
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    BigInt num(s.substr(0, slash)), den(s.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator");
    return Rat(num, den);
  }
  bool neg = false;
  std::size_t i = 0;
  if (s[i] == '+' || s[i] == '-') {
    neg = s[i] == '-';
    ++i;
  }
  BigInt num = 0, den = 1;
  bool frac = false, any = false;
  for (; i < s.size(); ++i) {
    if (s[i] == '.') {
      if (frac) throw std::invalid_argument("bad number: " + s);
      frac = true;
      continue;
    }
    if (s[i] < '0' || s[i] > '9') throw std::invalid_argument("bad number: " + s);
    num = num * 10 + (s[i] - '0');
    if (frac) den *= 10;
    any = true;
  }
  if (!any) throw std::invalid_argument("bad number: " + s);
  Rat r(num, den);
  return neg ? -r : r;
}

/// Exact rational value of a finite double (doubles are dyadic).
inline Rat rat_from_double(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite value");
  if (x == 0.0) return Rat(0);
  int exp = 0;
  double m = std::frexp(x, &exp);  // x = m * 2^exp, |m| in [0.5, 1)
  std::int64_t mant = std::int64_t(std::ldexp(m, 53));
  exp -= 53;
  Rat r(mant);
  if (exp >= 0)
    r *= Rat(BigInt(1) << exp);
  else
    r /= Rat(BigInt(1) << -exp);
  return r;
}

inline double rat_to_double(const Rat& r) {
  return r.convert_to<double>();
}

}  // namespace pirnsi
