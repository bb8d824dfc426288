#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <iterator>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "kdvtau/rational.hpp"

namespace kdvtau {

/// Monomial in the time variables: sorted multiset of t-indices (t_{k_1}...t_{k_N}).
using TKey = std::vector<int>;

/// Graded weight of a t-monomial: sum of (2k+1) over its indices.
inline int tkey_grade(const TKey& k) {
  int g = 0;
  for (int i : k) g += 2 * i + 1;
  return g;
}

inline TKey tkey_merge(const TKey& a, const TKey& b) {
  TKey r;
  r.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(r));
  return r;
}

inline std::string tkey_str(const TKey& k) {
  if (k.empty()) return "1";
  std::ostringstream os;
  for (size_t i = 0; i < k.size();) {
    size_t j = i;
    while (j < k.size() && k[j] == k[i]) ++j;
    if (i) os << "*";
    os << "t" << k[i];
    if (j - i > 1) os << "^" << (j - i);
    i = j;
  }
  return os.str();
}

/// Polynomial in t_0, t_1, ... truncated by graded weight: anything heavier than m
/// is dropped on insertion, so products stay exact modulo the stated truncation.
template <class C>
struct TruncatedTPoly {
  int m = 0;
  std::map<TKey, C> terms;

  TruncatedTPoly() = default;
  explicit TruncatedTPoly(int level) : m(level) {}

  void add_term(const TKey& k, const C& v) {
    if (tkey_grade(k) > m) return;
    auto it = terms.find(k);
    if (it == terms.end()) {
      if (!(v == C(0))) terms.emplace(k, v);
    } else {
      it->second = it->second + v;
      if (it->second == C(0)) terms.erase(it);
    }
  }

  C coeff(const TKey& k) const {
    auto it = terms.find(k);
    return it == terms.end() ? C(0) : it->second;
  }

  bool is_zero() const { return terms.empty(); }

  TruncatedTPoly& operator+=(const TruncatedTPoly& o) { return *this = *this + o; }
  friend TruncatedTPoly operator+(const TruncatedTPoly& a, const TruncatedTPoly& b) {
    TruncatedTPoly r(std::min(a.m, b.m));
    for (auto& [k, v] : a.terms) r.add_term(k, v);
    for (auto& [k, v] : b.terms) r.add_term(k, v);
    return r;
  }
  friend TruncatedTPoly operator-(const TruncatedTPoly& a, const TruncatedTPoly& b) {
    TruncatedTPoly r(std::min(a.m, b.m));
    for (auto& [k, v] : a.terms) r.add_term(k, v);
    for (auto& [k, v] : b.terms) r.add_term(k, C(0) - v);
    return r;
  }
  friend TruncatedTPoly operator*(const TruncatedTPoly& a, const TruncatedTPoly& b) {
    TruncatedTPoly r(std::min(a.m, b.m));
    for (auto& [ka, va] : a.terms)
      for (auto& [kb, vb] : b.terms) {
        if (tkey_grade(ka) + tkey_grade(kb) > r.m) continue;
        r.add_term(tkey_merge(ka, kb), va * vb);
      }
    return r;
  }
  friend TruncatedTPoly operator*(const TruncatedTPoly& a, const C& s) {
    TruncatedTPoly r(a.m);
    for (auto& [k, v] : a.terms) r.add_term(k, v * s);
    return r;
  }

  std::string str() const {
    std::ostringstream os;
    bool first = true;
    for (auto& [k, v] : terms) {
      if (!first) os << " + ";
      first = false;
      os << "(" << coeff_str(v) << ")*" << tkey_str(k);
    }
    if (first) os << "0";
    return os.str();
  }

 private:
  static std::string coeff_str(const Rat& v) { return v.get_str(); }
  static std::string coeff_str(double v) { return std::to_string(v); }
  static std::string coeff_str(const std::complex<double>& v) {
    std::ostringstream os;
    os << v.real() << (v.imag() < 0 ? "-" : "+") << std::abs(v.imag()) << "i";
    return os.str();
  }
};

inline Rat tp_log_constant(const Rat& c) {
  if (c != 1) throw std::domain_error("tp_log: a rational series needs constant term 1");
  return Rat(0);
}
inline std::complex<double> tp_log_constant(const std::complex<double>& c) {
  if (c == std::complex<double>(0)) throw std::domain_error("tp_log: zero constant term");
  return std::log(c);
}

/// Formal logarithm: log(c0 (1+g)) = log c0 + sum_{j>=1} (-1)^{j+1} g^j / j, where g has
/// strictly positive grade so the sum stops at j = m.
template <class C>
TruncatedTPoly<C> tp_log(const TruncatedTPoly<C>& f) {
  C c0 = f.coeff(TKey{});
  C lc = tp_log_constant(c0);
  TruncatedTPoly<C> g(f.m);
  for (auto& [k, v] : f.terms) {
    if (k.empty()) continue;
    g.add_term(k, v / c0);
  }
  TruncatedTPoly<C> acc(f.m);
  acc.add_term(TKey{}, lc);
  TruncatedTPoly<C> p = g;
  for (int j = 1; j <= f.m && !p.terms.empty(); ++j) {
    C cj = (j % 2 ? C(1) : C(0) - C(1)) / C(j);
    acc = acc + p * cj;
    p = p * g;
  }
  return acc;
}

inline std::complex<double> tp_to_c(const Rat& v) { return {rat_to_double(v), 0.0}; }
inline std::complex<double> tp_to_c(double v) { return {v, 0.0}; }
inline std::complex<double> tp_to_c(const std::complex<double>& v) { return v; }

/// Max absolute coefficient difference over monomials with at least `min_factors`
/// t-factors (graded level capped by both operands' truncation).
template <class CA, class CB>
double tp_max_diff(const TruncatedTPoly<CA>& a, const TruncatedTPoly<CB>& b, int min_factors,
                   TKey* worst = nullptr) {
  int m = std::min(a.m, b.m);
  std::map<TKey, std::complex<double>> d;
  for (auto& [k, v] : a.terms)
    if (tkey_grade(k) <= m) d[k] += tp_to_c(v);
  for (auto& [k, v] : b.terms)
    if (tkey_grade(k) <= m) d[k] -= tp_to_c(v);
  double mx = 0;
  for (auto& [k, v] : d) {
    if (int(k.size()) < min_factors) continue;
    double av = std::abs(v);
    if (av > mx) {
      mx = av;
      if (worst) *worst = k;
    }
  }
  return mx;
}

/// Pass to the rescaled times T_k = (2k+1)!! t_k: each monomial's coefficient is
/// divided by prod (2k_i+1)!!.
template <class C>
TruncatedTPoly<C> tp_in_normalized_times(const TruncatedTPoly<C>& f) {
  TruncatedTPoly<C> r(f.m);
  for (auto& [k, v] : f.terms) {
    Rat den(1);
    for (int ki : k) den *= Rat(double_factorial(2 * ki + 1));
    if constexpr (std::is_same_v<C, Rat>)
      r.add_term(k, v / den);
    else
      r.add_term(k, v * C(1.0 / rat_to_double(den)));
  }
  return r;
}

}  // namespace kdvtau
