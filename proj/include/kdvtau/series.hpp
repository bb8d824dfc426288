#pragma once

#include <array>
#include <complex>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "kdvtau/gradedpoly.hpp"
#include "kdvtau/rational.hpp"

namespace kdvtau {

/// Thrown when a computation needs a series coefficient below the known window,
/// i.e. the supplied initial data was declared truncated too shallowly.
struct TruncationError : std::runtime_error {
  int power;
  explicit TruncationError(int p)
      : std::runtime_error("series coefficient at power " + std::to_string(p) +
                           " is below the known truncation window"),
        power(p) {}
};

inline bool is_zero_value(const Rat& x) { return x == 0; }
inline bool is_zero_value(const GradedPoly& p) { return p.is_zero(); }
inline bool is_zero_value(double x) { return x == 0.0; }
inline bool is_zero_value(const std::complex<double>& z) { return z == std::complex<double>(0.0); }

/// Laurent series in one variable with an explicit validity window.
///
/// Stored coefficients are exact; powers above the stored support are exactly zero;
/// powers below `lo_valid` are unknown (the series is only known modulo O(z^(lo_valid-1))).
/// `lo_valid == EXACT` means every power is known (finite support, zero below it).
template <class T>
class LaurentSeries {
 public:
  static constexpr int EXACT = std::numeric_limits<int>::min() / 2;

  std::map<int, T> c;   // power -> nonzero coefficient
  int lo_valid = EXACT;

  LaurentSeries() = default;
  static LaurentSeries zero() { return LaurentSeries(); }
  static LaurentSeries constant(const T& v) {
    LaurentSeries s;
    s.set(0, v);
    return s;
  }
  /// v * z^p
  static LaurentSeries monomial(const T& v, int p) {
    LaurentSeries s;
    s.set(p, v);
    return s;
  }

  bool exact() const { return lo_valid == EXACT; }
  bool known(int p) const { return exact() || p >= lo_valid; }

  void set(int p, const T& v) {
    if (is_zero_value(v))
      c.erase(p);
    else
      c[p] = v;
  }

  void add_to(int p, const T& v) {
    auto it = c.find(p);
    if (it == c.end()) {
      if (!is_zero_value(v)) c.emplace(p, v);
    } else {
      it->second = it->second + v;
      if (is_zero_value(it->second)) c.erase(it);
    }
  }

  T coeff(int p) const {
    if (!known(p)) throw TruncationError(p);
    auto it = c.find(p);
    return it == c.end() ? T(0) : it->second;
  }

  bool is_zero_known() const { return c.empty(); }

  /// Highest power that might be nonzero (stored top, or the unknown-region top).
  long hi_effective() const {
    long hi = std::numeric_limits<long>::min() / 4;
    if (!c.empty()) hi = c.rbegin()->first;
    if (!exact()) hi = std::max(hi, long(lo_valid) - 1);
    return hi;
  }

  /// Lowest stored power (only meaningful if !c.empty()).
  int lo_support() const { return c.empty() ? 0 : c.begin()->first; }

  /// Restrict the validity window (drops stored coefficients below `lo`).
  LaurentSeries truncated_below(int lo) const {
    LaurentSeries r = *this;
    if (!r.exact() && r.lo_valid >= lo) return r;
    r.lo_valid = lo;
    r.c.erase(r.c.begin(), r.c.lower_bound(lo));
    return r;
  }

  LaurentSeries shifted(int k) const {  // multiply by z^k
    LaurentSeries r;
    r.lo_valid = exact() ? EXACT : lo_valid + k;
    for (auto& [p, v] : c) r.c.emplace(p + k, v);
    return r;
  }

  friend LaurentSeries operator+(const LaurentSeries& a, const LaurentSeries& b) {
    LaurentSeries r = a;
    if (!b.exact()) r.lo_valid = r.exact() ? b.lo_valid : std::max(r.lo_valid, b.lo_valid);
    for (auto& [p, v] : b.c) r.add_to(p, v);
    if (!r.exact()) r.c.erase(r.c.begin(), r.c.lower_bound(r.lo_valid));
    return r;
  }
  friend LaurentSeries operator-(const LaurentSeries& a, const LaurentSeries& b) {
    return a + (b * T(-1));
  }
  LaurentSeries operator-() const { return *this * T(-1); }

  friend LaurentSeries operator*(const LaurentSeries& a, const T& s) {
    LaurentSeries r;
    if (is_zero_value(s)) return r;  // exactly zero
    r.lo_valid = a.lo_valid;
    for (auto& [p, v] : a.c) r.set(p, v * s);
    return r;
  }
  friend LaurentSeries operator*(const T& s, const LaurentSeries& a) { return a * s; }

  friend LaurentSeries operator*(const LaurentSeries& a, const LaurentSeries& b) {
    LaurentSeries r;
    long lo = std::numeric_limits<long>::min() / 2;
    if (!a.exact()) lo = std::max(lo, long(a.lo_valid) + b.hi_effective());
    if (!b.exact()) lo = std::max(lo, long(b.lo_valid) + a.hi_effective());
    bool res_exact = a.exact() && b.exact();
    if (!res_exact) r.lo_valid = int(lo);
    for (auto& [pa, va] : a.c)
      for (auto& [pb, vb] : b.c) {
        int p = pa + pb;
        if (!res_exact && p < r.lo_valid) continue;
        r.add_to(p, va * vb);
      }
    return r;
  }

  /// Multiplicative inverse; requires an invertible leading coefficient.
  /// An exact input with a nonzero tail has an infinite inverse tail, so the result is
  /// stored down to `lo_hint` and windowed there; a truncated input propagates its window.
  LaurentSeries inverse(int lo_hint = 0) const {
    if (c.empty()) throw std::domain_error("series inverse of zero");
    int h = c.rbegin()->first;
    const T lead = c.rbegin()->second;
    // f = lead * z^h * (1 + r) with r in strictly negative powers;
    // 1/f = (1/lead) z^-h sum_k (-r)^k.
    LaurentSeries r;
    for (auto& [p, v] : c) {
      if (p == h) continue;
      r.set(p - h, v / lead);
    }
    if (!exact()) r.lo_valid = lo_valid - h;
    const int n_lo = exact() ? lo_hint + h : lo_valid - h;  // window in normalized powers
    LaurentSeries acc = constant(T(1));
    LaurentSeries term = constant(T(1));
    for (int k = 1; k <= -n_lo; ++k) {
      term = (term * r).truncated_below(n_lo);
      if (term.c.empty()) break;
      acc = acc + (k % 2 ? -term : term);
    }
    LaurentSeries out;
    for (auto& [p, v] : acc.c) out.c.emplace(p - h, v / lead);
    if (exact())
      out.lo_valid = r.c.empty() ? EXACT : lo_hint;
    else
      out.lo_valid = lo_valid - 2 * h;
    out.c.erase(out.c.begin(), out.c.lower_bound(out.exact() ? EXACT + 1 : out.lo_valid));
    return out;
  }

  /// sqrt of a series of the form 1 + (strictly negative powers).
  /// Coefficients computed down to the validity window (or `lo_hint` when exact).
  LaurentSeries sqrt_unit(int lo_hint = 0) const {
    if (coeff_or_zero(0) != T(1) || hi_effective() > 0)
      throw std::domain_error("sqrt_unit: series must be 1 + O(1/z)");
    int lo = exact() ? lo_hint : lo_valid;
    LaurentSeries s = constant(T(1));
    // s_m = (f_m - sum_{i+j=m, i,j>=1} s_i s_j) / 2, indices are z^-m coefficients.
    for (int m = 1; -m >= lo; ++m) {
      T v = coeff_or_zero(-m);
      for (int i = 1; i < m; ++i) v = v - s.coeff_or_zero(-i) * s.coeff_or_zero(-(m - i));
      v = v / T(2);
      s.set(-m, v);
    }
    if (!exact())
      s.lo_valid = lo_valid;
    else if (!(c.size() == 1))
      s.lo_valid = lo;  // infinite tail, honest window
    return s;
  }

  T coeff_or_zero(int p) const {
    auto it = c.find(p);
    return it == c.end() ? T(0) : it->second;
  }

  std::string str(const std::string& var = "z") const {
    std::ostringstream os;
    bool first = true;
    for (auto it = c.rbegin(); it != c.rend(); ++it) {
      if (!first) os << " + ";
      first = false;
      os << "(" << coeff_str(it->second) << ")";
      if (it->first != 0) os << "*" << var << "^" << it->first;
    }
    if (first) os << "0";
    if (!exact()) os << " + O(" << var << "^" << (lo_valid - 1) << ")";
    return os.str();
  }

 private:
  static std::string coeff_str(const Rat& v) { return v.get_str(); }
  static std::string coeff_str(const GradedPoly& v) { return v.str(); }
  static std::string coeff_str(double v) { return std::to_string(v); }
  static std::string coeff_str(const std::complex<double>& v) {
    return std::to_string(v.real()) + (v.imag() < 0 ? "-" : "+") + std::to_string(std::abs(v.imag())) + "i";
  }
};

/// 2x2 matrix of Laurent series.
template <class T>
struct MatrixSeries {
  LaurentSeries<T> e[2][2];

  static MatrixSeries zero() { return {}; }

  friend MatrixSeries operator+(const MatrixSeries& a, const MatrixSeries& b) {
    MatrixSeries r;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) r.e[i][j] = a.e[i][j] + b.e[i][j];
    return r;
  }
  friend MatrixSeries operator-(const MatrixSeries& a, const MatrixSeries& b) {
    MatrixSeries r;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) r.e[i][j] = a.e[i][j] - b.e[i][j];
    return r;
  }
  friend MatrixSeries operator*(const MatrixSeries& a, const MatrixSeries& b) {
    MatrixSeries r;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        r.e[i][j] = a.e[i][0] * b.e[0][j] + a.e[i][1] * b.e[1][j];
    return r;
  }
  friend MatrixSeries operator*(const MatrixSeries& a, const LaurentSeries<T>& s) {
    MatrixSeries r;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) r.e[i][j] = a.e[i][j] * s;
    return r;
  }

  static MatrixSeries commutator(const MatrixSeries& a, const MatrixSeries& b) {
    return a * b - b * a;
  }

  LaurentSeries<T> trace() const { return e[0][0] + e[1][1]; }
  LaurentSeries<T> det() const { return e[0][0] * e[1][1] - e[0][1] * e[1][0]; }

  /// Coefficient matrix of z^p as a flat array {e00, e01, e10, e11}.
  std::array<T, 4> coeff_matrix(int p) const {
    return {e[0][0].coeff(p), e[0][1].coeff(p), e[1][0].coeff(p), e[1][1].coeff(p)};
  }

  MatrixSeries truncated_below(int lo) const {
    MatrixSeries r;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) r.e[i][j] = e[i][j].truncated_below(lo);
    return r;
  }
};

}  // namespace kdvtau
