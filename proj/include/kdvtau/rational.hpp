#pragma once

#include <gmpxx.h>

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace kdvtau {

/// Exact rational scalar used throughout the symbolic half of the library.
using Rat = mpq_class;
using Int = mpz_class;

/// Parse "p", "-p", or "p/q" into a canonical rational.  Throws std::invalid_argument
/// on malformed input or zero denominator.
inline Rat rat_from_string(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("empty rational literal");
  mpq_t q;
  mpq_init(q);
  if (mpq_set_str(q, s.c_str(), 10) != 0) {
    mpq_clear(q);
    throw std::invalid_argument("malformed rational literal: '" + s + "'");
  }
  if (mpz_sgn(mpq_denref(q)) == 0) {
    mpq_clear(q);
    throw std::invalid_argument("zero denominator in rational literal: '" + s + "'");
  }
  mpq_canonicalize(q);
  Rat out(q);
  mpq_clear(q);
  return out;
}

inline std::string rat_to_string(const Rat& q) { return q.get_str(); }

inline double rat_to_double(const Rat& q) { return q.get_d(); }

/// n!! for n >= -1 (with (-1)!! = 0!! = 1).
inline Int double_factorial(long n) {
  if (n < -1) throw std::invalid_argument("double_factorial: n < -1");
  Int r = 1;
  for (long k = n; k >= 2; k -= 2) r *= k;
  return r;
}

inline Int factorial(long n) {
  if (n < 0) throw std::invalid_argument("factorial of negative");
  Int r = 1;
  for (long k = 2; k <= n; ++k) r *= k;
  return r;
}

inline Rat binom(long n, long k) {
  if (k < 0 || k > n) return Rat(0);
  Rat r = 1;
  for (long j = 0; j < k; ++j) r *= Rat(n - j, j + 1);
  return r;
}

}  // namespace kdvtau
