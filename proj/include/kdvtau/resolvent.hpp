#pragma once

#include <optional>
#include <vector>

#include "kdvtau/walgebra.hpp"

namespace kdvtau {

/// Matrix-resolvent initial data: Laurent coefficients of the three generating series.
/// a[i-1] = a_i, b[i-1] = b_i, c[i-1] = c_i.  When `depth` is set, coefficients with
/// index > depth are unknown (computations needing them raise TruncationError);
/// otherwise the arrays are exact and everything beyond them is zero.
struct InitialData {
  std::vector<Rat> a, b, c;
  std::optional<int> depth;

  Rat at(const std::vector<Rat>& v, size_t i1) const {  // 1-based
    return i1 <= v.size() ? v[i1 - 1] : Rat(0);
  }
};

using RSeries = LaurentSeries<Rat>;
using RMatrix = MatrixSeries<Rat>;

/// Build the resolvent matrix series from initial data.
inline RMatrix assemble_w(const InitialData& d) {
  size_t n = std::max({d.a.size(), d.b.size(), d.c.size()});
  if (d.depth) n = std::max(n, size_t(*d.depth));
  RMatrix w;
  if (d.depth) {
    int dep = *d.depth;
    w.e[0][0].lo_valid = -dep;
    w.e[0][1].lo_valid = -dep;
    w.e[1][1].lo_valid = -dep;
    w.e[1][0].lo_valid = -(dep - 1);  // its z^-i coefficient is c_{i+1}
  }
  w.e[0][1].set(0, Rat(1));
  w.e[1][0].set(1, Rat(1));
  w.e[1][0].set(0, d.at(d.c, 1));
  for (size_t i = 1; i <= n; ++i) {
    if (!w.e[0][0].known(-int(i))) break;
    w.e[0][0].set(-int(i), d.at(d.a, i));
    w.e[0][1].set(-int(i), d.at(d.b, i));
    w.e[1][1].set(-int(i), -d.at(d.a, i));
    if (w.e[1][0].known(-int(i))) w.e[1][0].set(-int(i), d.at(d.c, i + 1));
  }
  return w;
}

/// Q(z) = -det W(z) for any coefficient ring.
template <class T>
LaurentSeries<T> q_from_w(const MatrixSeries<T>& w) {
  return -w.det();
}

/// sqrt(Q(z)/z) = 1 + O(1/z); `lo` caps the stored depth when the input is exact.
template <class T>
LaurentSeries<T> sqrt_qz(const MatrixSeries<T>& w, int lo) {
  return q_from_w(w).shifted(-1).sqrt_unit(lo);
}

/// M(z) = W(z) / sqrt(Q(z)/z); det M = -z identically.
template <class T>
MatrixSeries<T> m_from_w(const MatrixSeries<T>& w, int lo) {
  LaurentSeries<T> sinv = sqrt_qz(w, lo - 1).inverse(lo - 1);
  return (w * sinv).truncated_below(lo);
}

inline GMatrix m_symbolic(int lo) { return m_from_w(w_symbolic(-lo + 2), lo); }

/// U_n = [z^n M(z)]_+ - E21 * btilde_{n+1}: a polynomial 2x2 matrix (powers 0..n+1).
/// The trailing subtraction removes the would-be btilde_{n+1} constant in the (2,1) entry.
template <class T>
MatrixSeries<T> u_matrix_from_m(int n, const MatrixSeries<T>& m) {
  if (n < 0) throw std::invalid_argument("u_matrix: n must be >= 0");
  MatrixSeries<T> u;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int p = 0; p <= n + 1; ++p) u.e[i][j].set(p, m.e[i][j].coeff(p - n));
  u.e[1][0].add_to(0, -m.e[0][1].coeff(-(n + 1)));
  return u;
}

template <class T>
MatrixSeries<T> u_matrix(int n, const MatrixSeries<T>& w) {
  // M is only needed down to z^-(n+1); cap the working depth accordingly.
  return u_matrix_from_m(n, m_from_w(w.truncated_below(-(n + 3)), -(n + 1)));
}

/// Verify the Lax equation d_n W(z) = [U_n, W(z)] on symbolic initial data,
/// comparing all z-powers down to z^-z_lo.
inline bool lax_check(int n, int z_lo) {
  const int depth = z_lo + n + 3;
  GMatrix w = w_symbolic(depth);
  GMatrix lhs = bracket_matrix(hamiltonian(n), w);
  GMatrix un = u_matrix(n, w);
  GMatrix rhs = GMatrix::commutator(un, w);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      GSeries diff = lhs.e[i][j] - rhs.e[i][j];
      for (int p = n + 2; p >= -z_lo; --p)
        if (!diff.coeff(p).is_zero()) return false;
    }
  return true;
}

/// trace U_n = 0 for the symbolic U matrices.
inline bool u_traceless_check(int n_max) {
  for (int n = 0; n <= n_max; ++n) {
    GMatrix un = u_matrix(n, w_symbolic(n + 4));
    GSeries tr = un.trace();
    for (int p = 0; p <= n + 1; ++p)
      if (!tr.coeff(p).is_zero()) return false;
  }
  return true;
}

/// Check the generating identity
///   { sum_{n>=-1} H_n w^(-n-1), W(z) } = [M(w), W(z)]/(w - z) - (1 + btilde(w)) [E21, W(z)]
/// in the region |w| > |z|, for w-orders n = -1 .. n_max and z-powers down to z^-z_lo.
/// As with the Q-identity, the constant in (1 + btilde(w)) is exactly what makes the
/// w^0 (Casimir) order cancel.
inline bool m_generating_identity_check(int n_max, int z_lo) {
  const int depth = z_lo + n_max + 3;
  GMatrix wz = w_symbolic(depth);
  GMatrix mw = m_symbolic(-depth);
  auto mc = [&](int p) -> std::array<GradedPoly, 4> {
    if (p > 1) return {GradedPoly(), GradedPoly(), GradedPoly(), GradedPoly()};
    return mw.coeff_matrix(p);
  };
  GMatrix e21w;
  e21w.e[0][0] = -wz.e[0][1];
  e21w.e[1][0] = wz.e[0][0] - wz.e[1][1];
  e21w.e[1][1] = wz.e[0][1];

  for (int n = -1; n <= n_max; ++n) {
    GMatrix lhs;  // {H_n, W(z)}
    lhs = bracket_matrix(hamiltonian(n), wz);
    // [M(w),W(z)]/(w-z) at w^(-n-1):  sum_{l>=0} z^l [Mc_{l-n}, W(z)]
    GMatrix rhs;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) rhs.e[i][j].lo_valid = -depth + std::max(0, n + 1);
    for (int l = 0; l - n <= 1; ++l) {
      auto m = mc(l - n);
      GMatrix cm;
      cm.e[0][0] = GSeries::monomial(m[0], l);
      cm.e[0][1] = GSeries::monomial(m[1], l);
      cm.e[1][0] = GSeries::monomial(m[2], l);
      cm.e[1][1] = GSeries::monomial(m[3], l);
      rhs = rhs + (cm * wz - wz * cm);
    }
    // (1 + btilde(w)) coefficient at w^(-n-1): 1 at n=-1, else btilde_{n+1}
    GradedPoly bt = (n == -1) ? GradedPoly(Rat(1)) : mw.e[0][1].coeff(-(n + 1));
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) rhs.e[i][j] = rhs.e[i][j] - e21w.e[i][j] * bt;

    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        GSeries diff = lhs.e[i][j] - rhs.e[i][j];
        for (int p = n_max + 3; p >= -z_lo; --p)
          if (!diff.coeff(p).is_zero()) return false;
      }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Jet coordinates: u and its x-derivatives plus the flow-invariant q_i.
// ---------------------------------------------------------------------------

/// d/dx on jet polynomials: U_s -> U_{s+1}, Q_i -> 0 (the q_i are constants of every flow).
inline GradedPoly jet_dx(const GradedPoly& f) {
  GradedPoly r;
  for (uint32_t k : f.vars()) {
    if (key_fam(k) != Fam::U) continue;
    r += f.diff(k) * GradedPoly::gen(GU(key_idx(k) + 1));
  }
  return r;
}

/// Dictionary expressing a_i, b_i, c_i as polynomials in the jets U_s and the symbols Q_i.
/// Built degree-by-degree:
///   b_1 = U_0 + Q_1/2, c_1 = -U_0 + Q_1/2, a_1 = -U_1/2,
/// then for each d >= 2 the pair (b_d, c_d) from  q_d = b_d + c_d + (known)  and
///   d_0 a_{d-1} = c_d - b_d + (known),  and a_d from  d_0 b_d = -2 a_d + (known).
class JetDictionary {
 public:
  explicit JetDictionary(int max_index) : max_(max_index) {
    map_[GB(1)] = GradedPoly::gen(GU(0)) + GradedPoly(Rat(1, 2)) * GradedPoly::gen(GQ(1));
    map_[GC(1)] = -GradedPoly::gen(GU(0)) + GradedPoly(Rat(1, 2)) * GradedPoly::gen(GQ(1));
    map_[GA(1)] = GradedPoly(Rat(-1, 2)) * GradedPoly::gen(GU(1));
    for (int d = 2; d <= max_index; ++d) {
      // (i) q_d = b_d + c_d + conv  =>  b_d + c_d = Q_d - to_jets(conv)
      GradedPoly conv = q_sym(d) - GradedPoly::gen(GB(d)) - GradedPoly::gen(GC(d));
      require_known(conv, d, 0);
      GradedPoly sum = GradedPoly::gen(GQ(d)) - to_jets(conv);
      // (ii) d_0 a_{d-1} = c_d - b_d + R  =>  c_d - b_d = dx(jets(a_{d-1})) - to_jets(R)
      GradedPoly e = derivation(0, GradedPoly::gen(GA(d - 1)));
      GradedPoly r = e - GradedPoly::gen(GC(d)) + GradedPoly::gen(GB(d));
      require_known(r, d, 0);
      GradedPoly diff = jet_dx(map_.at(GA(d - 1))) - to_jets(r);
      map_[GB(d)] = (sum - diff) / Rat(2);
      map_[GC(d)] = (sum + diff) / Rat(2);
      // (iii) d_0 b_d = -2 a_d + R'  =>  a_d = (dx(jets(b_d)) - to_jets(R')) / (-2)
      GradedPoly e2 = derivation(0, GradedPoly::gen(GB(d)));
      GradedPoly r2 = e2 + Rat(2) * GradedPoly::gen(GA(d));
      require_known(r2, d, 1);
      map_[GA(d)] = (jet_dx(map_.at(GB(d))) - to_jets(r2)) / Rat(-2);
    }
  }

  /// Substitute the dictionary into an a/b/c polynomial (q symbols pass through).
  GradedPoly to_jets(const GradedPoly& f) const {
    return f.evaluate<GradedPoly>(
        [&](uint32_t k) {
          if (key_fam(k) == Fam::U || key_fam(k) == Fam::Q) return GradedPoly::gen(k);
          auto it = map_.find(k);
          if (it == map_.end())
            throw std::logic_error("JetDictionary: generator beyond built range: " + gen_name(k));
          return it->second;
        },
        [](const Rat& c) { return GradedPoly(c); });
  }

  const GradedPoly& of(uint32_t key) const { return map_.at(key); }
  int max_index() const { return max_; }

 private:
  void require_known(const GradedPoly& f, int d, int allow_bc_d) const {
    for (uint32_t k : f.vars()) {
      int i = int(key_idx(k));
      bool ok = false;
      if (key_fam(k) == Fam::A) ok = i <= d - 1;
      if (key_fam(k) == Fam::B || key_fam(k) == Fam::C) ok = i <= (allow_bc_d ? d : d - 1);
      if (!ok) throw std::logic_error("jet dictionary triangular solve hit unknown " + gen_name(k));
    }
  }

  int max_;
  std::map<uint32_t, GradedPoly> map_;
};

inline const JetDictionary& jet_dictionary(int max_index) {
  static std::mutex mu;
  static std::map<int, JetDictionary> cache;
  std::lock_guard<std::mutex> lk(mu);
  auto it = cache.lower_bound(max_index);
  if (it != cache.end()) return it->second;
  return cache.emplace(max_index, JetDictionary(max_index)).first->second;
}

/// The n-th flow of u as a jet polynomial (pure differential polynomial:
/// the q-dependence cancels identically).
inline GradedPoly flow_polynomial(int n) {
  GradedPoly u_abc = (GradedPoly::gen(GB(1)) - GradedPoly::gen(GC(1))) / Rat(2);
  GradedPoly d = derivation(n, u_abc);
  int max_index = 0;
  for (uint32_t k : d.vars()) max_index = std::max(max_index, int(key_idx(k)));
  return jet_dictionary(max_index).to_jets(d);
}

/// Numeric jet data extracted from initial data: u(0), u_x(0), ..., u^{(count-1)}(0)
/// together with the invariants q_1 .. q_count.
struct JetValues {
  std::vector<Rat> ujet;  // ujet[s] = value of U_s
  std::vector<Rat> q;     // q[i-1] = value of q_i
};

inline JetValues jet_change(const InitialData& data, int count) {
  RMatrix w = assemble_w(data);
  auto value_of = [&](const GradedPoly& f) {
    return f.evaluate<Rat>(
        [&](uint32_t k) -> Rat {
          int i = int(key_idx(k));
          switch (key_fam(k)) {
            case Fam::A:
              return w.e[0][0].coeff(-i);
            case Fam::B:
              return w.e[0][1].coeff(-i);
            case Fam::C:
              return w.e[1][0].coeff(1 - i);
            default:
              throw std::logic_error("jet_change: unexpected symbol");
          }
        },
        [](const Rat& c) { return c; });
  };
  JetValues out;
  GradedPoly cur = (GradedPoly::gen(GB(1)) - GradedPoly::gen(GC(1))) / Rat(2);
  for (int s = 0; s < count; ++s) {
    out.ujet.push_back(value_of(cur));
    cur = derivation(0, cur);
  }
  for (int i = 1; i <= count; ++i) out.q.push_back(value_of(q_sym(i)));
  return out;
}

/// Inverse change: evaluate the dictionary on jet values to rebuild initial data.
inline InitialData jet_change_inverse(const JetValues& jv, int index_max) {
  const JetDictionary& dict = jet_dictionary(index_max);
  auto value_of = [&](const GradedPoly& f) {
    return f.evaluate<Rat>(
        [&](uint32_t k) -> Rat {
          uint32_t i = key_idx(k);
          if (key_fam(k) == Fam::U)
            return i < jv.ujet.size() ? jv.ujet[i] : throw TruncationError(-int(i));
          if (key_fam(k) == Fam::Q)
            return i <= jv.q.size() ? jv.q[i - 1] : throw TruncationError(-int(i));
          throw std::logic_error("jet_change_inverse: unexpected symbol");
        },
        [](const Rat& c) { return c; });
  };
  InitialData d;
  for (int i = 1; i <= index_max; ++i) {
    d.a.push_back(value_of(dict.of(GA(i))));
    d.b.push_back(value_of(dict.of(GB(i))));
    d.c.push_back(value_of(dict.of(GC(i))));
  }
  return d;
}

}  // namespace kdvtau
