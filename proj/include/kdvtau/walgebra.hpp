#pragma once

#include <mutex>

#include "kdvtau/bracket.hpp"
#include "kdvtau/series.hpp"

namespace kdvtau {

using GSeries = LaurentSeries<GradedPoly>;
using GMatrix = MatrixSeries<GradedPoly>;

/// The generic resolvent-shaped matrix series with formal generator entries,
///   W(z) = [[0,1],[z+c1,0]] + sum_{i>=1} [[a_i, b_i],[c_{i+1}, -a_i]] z^-i,
/// carrying coefficients down to z^-depth.
inline GMatrix w_symbolic(int depth) {
  GMatrix w;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) w.e[i][j].lo_valid = -depth;
  w.e[0][1].set(0, GradedPoly(Rat(1)));
  w.e[1][0].set(1, GradedPoly(Rat(1)));
  w.e[1][0].set(0, GradedPoly::gen(GC(1)));
  for (int i = 1; i <= depth; ++i) {
    w.e[0][0].set(-i, GradedPoly::gen(GA(i)));
    w.e[0][1].set(-i, GradedPoly::gen(GB(i)));
    w.e[1][0].set(-i, GradedPoly::gen(GC(i + 1)));
    w.e[1][1].set(-i, -GradedPoly::gen(GA(i)));
  }
  return w;
}

/// Q(z) = -det W(z) = z + sum_{i>=1} q_i z^(1-i), with q_i polynomial in the generators.
/// The returned series carries q_1 .. q_depth (window at z^(1-depth)).
inline GSeries q_symbolic(int depth) {
  GMatrix w = w_symbolic(depth + 1);
  GSeries q = -w.det();
  return q.truncated_below(1 - depth);
}

/// q_i as a polynomial in the generators.
inline GradedPoly q_sym(int i) { return q_symbolic(i).coeff(1 - i); }

/// Hamiltonian densities: sqrt(Q(z)/z) = 1 + (1/2) sum_{n>=-1} H_n z^(-n-2).
/// H_{-1} = q_1 is the Casimir; deg H_n = 2n+4.
inline GradedPoly hamiltonian(int n) {
  if (n < -1) throw std::invalid_argument("hamiltonian: n must be >= -1");
  static std::map<int, GradedPoly> cache;
  static std::mutex mu;
  {
    std::lock_guard<std::mutex> lk(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
  }
  GSeries qz = q_symbolic(n + 3).shifted(-1);  // 1 + q_1/z + ...
  GradedPoly h = qz.sqrt_unit().coeff(-(n + 2)) * Rat(2);
  std::lock_guard<std::mutex> lk(mu);
  return cache.emplace(n, h).first->second;
}

/// The commuting derivations d_n = {H_n, -}.
inline GradedPoly derivation(int n, const GradedPoly& f) {
  return poly_bracket(hamiltonian(n), f);
}

/// Apply the bracket {f, -} to a series coefficient-by-coefficient.
inline GSeries bracket_series(const GradedPoly& f, const GSeries& s) {
  GSeries r;
  r.lo_valid = s.lo_valid;
  for (auto& [p, v] : s.c) r.set(p, poly_bracket(f, v));
  return r;
}

inline GMatrix bracket_matrix(const GradedPoly& f, const GMatrix& m) {
  GMatrix r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r.e[i][j] = bracket_series(f, m.e[i][j]);
  return r;
}

/// Check the generating identity
///   {Q(w), W(z)} = [W(w), W(z)] / (w - z) - (1 + b(w)) [E21, W(z)]
/// (expansion region |w| > |z|) for all w-powers in [1-w_orders, 1] with the z-series
/// compared down to z^-z_orders.  Returns true when every coefficient matches.
///
/// Note the (1 + b(w)) factor: the w^0 order (the Casimir order {q_1, -} = 0) requires the
/// constant term, which a bare b(w) would miss; all strictly negative w-orders are
/// insensitive to it.
inline bool q_generating_identity_check(int w_orders, int z_orders) {
  const int depth = z_orders + w_orders + 1;
  GMatrix wz = w_symbolic(depth);
  // constant coefficient matrices of W(w)
  auto wc = [&](int p) -> std::array<GradedPoly, 4> {
    if (p > 1 || p < -depth) return {GradedPoly(), GradedPoly(), GradedPoly(), GradedPoly()};
    return wz.coeff_matrix(p);
  };
  GMatrix e21w;  // [E21, W(z)] = [[-W12, 0], [W11 - W22, W12]]
  e21w.e[0][0] = -wz.e[0][1];
  e21w.e[1][0] = wz.e[0][0] - wz.e[1][1];
  e21w.e[1][1] = wz.e[0][1];

  for (int nu = 1; nu >= 1 - w_orders; --nu) {
    // LHS: {q_{1-nu}, W(z)}   (q_0 := the constant 1, which brackets to zero)
    GMatrix lhs;
    if (nu < 1) lhs = bracket_matrix(q_sym(1 - nu), wz);
    // RHS: sum_{l=0..-nu} z^l [Wc_{nu+l+1}, W(z)]  -  (1 + b(w))|_{w^nu} [E21, W(z)]
    GMatrix rhs;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) rhs.e[i][j].lo_valid = -depth;
    for (int l = 0; l + nu <= 1 && l <= z_orders + 1; ++l) {
      if (l + nu + 1 > 1) continue;
      auto m = wc(nu + l + 1);
      GMatrix cm;
      cm.e[0][0] = LaurentSeries<GradedPoly>::monomial(m[0], l);
      cm.e[0][1] = LaurentSeries<GradedPoly>::monomial(m[1], l);
      cm.e[1][0] = LaurentSeries<GradedPoly>::monomial(m[2], l);
      cm.e[1][1] = LaurentSeries<GradedPoly>::monomial(m[3], l);
      rhs = rhs + (cm * wz - wz * cm);
    }
    GradedPoly bw;  // coefficient of w^nu in 1 + b(w)
    if (nu == 0)
      bw = GradedPoly(Rat(1));
    else if (nu < 0)
      bw = GradedPoly::gen(GB(uint32_t(-nu)));
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) rhs.e[i][j] = rhs.e[i][j] - e21w.e[i][j] * bw;

    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        GSeries diff = lhs.e[i][j] - rhs.e[i][j];
        for (int p = w_orders + 2; p >= -z_orders; --p)
          if (!diff.coeff(p).is_zero()) return false;
      }
  }
  return true;
}

}  // namespace kdvtau
