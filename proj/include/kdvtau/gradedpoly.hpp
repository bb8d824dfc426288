#pragma once

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "kdvtau/gens.hpp"
#include "kdvtau/rational.hpp"

namespace kdvtau {

/// A monomial is a sorted list of (generator key, exponent) pairs with positive exponents.
using Monomial = std::vector<std::pair<uint32_t, uint32_t>>;

inline Monomial mono_mul(const Monomial& x, const Monomial& y) {
  Monomial out;
  out.reserve(x.size() + y.size());
  size_t i = 0, j = 0;
  while (i < x.size() && j < y.size()) {
    if (x[i].first < y[j].first)
      out.push_back(x[i++]);
    else if (y[j].first < x[i].first)
      out.push_back(y[j++]);
    else {
      out.emplace_back(x[i].first, x[i].second + y[j].second);
      ++i, ++j;
    }
  }
  while (i < x.size()) out.push_back(x[i++]);
  while (j < y.size()) out.push_back(y[j++]);
  return out;
}

inline int mono_degree(const Monomial& m) {
  int d = 0;
  for (auto& [k, e] : m) d += gen_degree(k) * int(e);
  return d;
}

/// Sparse multivariate polynomial over Rat with graded generators.
class GradedPoly {
 public:
  std::map<Monomial, Rat> terms;

  GradedPoly() = default;
  explicit GradedPoly(const Rat& c) {
    if (c != 0) terms[Monomial{}] = c;
  }
  explicit GradedPoly(long c) : GradedPoly(Rat(c)) {}

  static GradedPoly gen(uint32_t key) {
    GradedPoly p;
    p.terms[Monomial{{key, 1}}] = 1;
    return p;
  }

  bool is_zero() const { return terms.empty(); }

  /// Max total degree; -1 for the zero polynomial.
  int degree() const {
    int d = -1;
    for (auto& [m, c] : terms) d = std::max(d, mono_degree(m));
    return d;
  }

  bool is_homogeneous(int* deg_out = nullptr) const {
    int d = -2;
    for (auto& [m, c] : terms) {
      int dm = mono_degree(m);
      if (d == -2)
        d = dm;
      else if (d != dm)
        return false;
    }
    if (deg_out) *deg_out = (d == -2 ? -1 : d);
    return true;
  }

  void add_term(const Monomial& m, const Rat& c) {
    if (c == 0) return;
    auto it = terms.find(m);
    if (it == terms.end()) {
      terms.emplace(m, c);
    } else {
      it->second += c;
      if (it->second == 0) terms.erase(it);
    }
  }

  GradedPoly& operator+=(const GradedPoly& o) {
    for (auto& [m, c] : o.terms) add_term(m, c);
    return *this;
  }
  GradedPoly& operator-=(const GradedPoly& o) {
    for (auto& [m, c] : o.terms) add_term(m, -c);
    return *this;
  }
  friend GradedPoly operator+(GradedPoly x, const GradedPoly& y) { return x += y; }
  friend GradedPoly operator-(GradedPoly x, const GradedPoly& y) { return x -= y; }
  GradedPoly operator-() const {
    GradedPoly r;
    for (auto& [m, c] : terms) r.terms.emplace(m, -c);
    return r;
  }

  friend GradedPoly operator*(const GradedPoly& x, const GradedPoly& y) {
    GradedPoly r;
    for (auto& [mx, cx] : x.terms)
      for (auto& [my, cy] : y.terms) r.add_term(mono_mul(mx, my), cx * cy);
    return r;
  }
  GradedPoly& operator*=(const GradedPoly& o) { return *this = *this * o; }

  GradedPoly& operator*=(const Rat& s) {
    if (s == 0) {
      terms.clear();
      return *this;
    }
    for (auto& kv : terms) kv.second *= s;
    return *this;
  }
  friend GradedPoly operator*(GradedPoly x, const Rat& s) { return x *= s; }
  friend GradedPoly operator*(const Rat& s, GradedPoly x) { return x *= s; }
  GradedPoly& operator/=(const Rat& s) {
    if (s == 0) throw std::invalid_argument("GradedPoly: division by zero");
    for (auto& kv : terms) kv.second /= s;
    return *this;
  }
  friend GradedPoly operator/(GradedPoly x, const Rat& s) { return x /= s; }
  /// Division by another polynomial is defined only for nonzero constants
  /// (needed so series algorithms can stay generic in the coefficient ring).
  friend GradedPoly operator/(const GradedPoly& x, const GradedPoly& y) {
    if (y.terms.size() != 1 || !y.terms.begin()->first.empty())
      throw std::invalid_argument("GradedPoly: division only by nonzero constants");
    return x / y.terms.begin()->second;
  }

  bool operator==(const GradedPoly& o) const { return terms == o.terms; }
  bool operator!=(const GradedPoly& o) const { return !(*this == o); }

  GradedPoly pow(uint32_t e) const {
    GradedPoly r(Rat(1));
    for (uint32_t i = 0; i < e; ++i) r *= *this;
    return r;
  }

  /// Partial derivative with respect to one generator.
  GradedPoly diff(uint32_t key) const {
    GradedPoly r;
    for (auto& [m, c] : terms) {
      for (size_t i = 0; i < m.size(); ++i) {
        if (m[i].first != key) continue;
        Monomial dm = m;
        Rat dc = c * long(m[i].second);
        if (dm[i].second == 1)
          dm.erase(dm.begin() + long(i));
        else
          dm[i].second -= 1;
        r.add_term(dm, dc);
        break;
      }
    }
    return r;
  }

  /// Distinct generator keys appearing in the polynomial.
  std::vector<uint32_t> vars() const {
    std::vector<uint32_t> v;
    for (auto& [m, c] : terms)
      for (auto& [k, e] : m) v.push_back(k);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  }

  Rat coeff(const Monomial& m) const {
    auto it = terms.find(m);
    return it == terms.end() ? Rat(0) : it->second;
  }
  Rat constant_term() const { return coeff(Monomial{}); }

  /// Evaluate in an arbitrary commutative ring T.  `genval(key) -> T`, `from_rat(Rat) -> T`.
  template <class T, class GenVal, class FromRat>
  T evaluate(GenVal&& genval, FromRat&& from_rat) const {
    T acc = from_rat(Rat(0));
    for (auto& [m, c] : terms) {
      T t = from_rat(c);
      for (auto& [k, e] : m) {
        T g = genval(k);
        for (uint32_t i = 0; i < e; ++i) t = t * g;
      }
      acc = acc + t;
    }
    return acc;
  }

  /// Substitute polynomials for generators (generators not in the map stay themselves).
  GradedPoly substitute(const std::map<uint32_t, GradedPoly>& repl) const {
    return evaluate<GradedPoly>(
        [&](uint32_t k) {
          auto it = repl.find(k);
          return it == repl.end() ? GradedPoly::gen(k) : it->second;
        },
        [](const Rat& c) { return GradedPoly(c); });
  }

  std::string str() const {
    if (terms.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (auto& [m, c] : terms) {
      Rat a = c;
      if (!first) {
        os << (a < 0 ? " - " : " + ");
        if (a < 0) a = -a;
      } else if (a < 0) {
        os << "-";
        a = -a;
      }
      first = false;
      bool unit = (a == 1) && !m.empty();
      if (!unit) os << a.get_str();
      bool lead = unit;
      for (auto& [k, e] : m) {
        if (!lead) os << (unit ? "" : "*");
        lead = false;
        unit = false;
        os << gen_name(k);
        if (e > 1) os << "^" << e;
      }
    }
    return os.str();
  }
};

}  // namespace kdvtau
