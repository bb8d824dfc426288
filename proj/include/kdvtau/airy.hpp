#pragma once

#include "kdvtau/npoint.hpp"
#include "kdvtau/roots.hpp"

namespace kdvtau {

namespace detail {
inline Rat rat_pow(const Rat& x, long e) {
  Rat r(1);
  for (long i = 0; i < e; ++i) r *= x;
  return r;
}
}  // namespace detail

/// Matrix-resolvent coefficients of the Airy operator d^2/dx^2 + 2x: the nonzero
/// entries sit at a_{3k-2}, b_{3k}, c_{3k-1}; everything else vanishes.
inline InitialData airy_data(int depth) {
  if (depth < 1) throw std::invalid_argument("airy_data: depth must be >= 1");
  InitialData d;
  d.a.assign(size_t(depth), Rat(0));
  d.b.assign(size_t(depth), Rat(0));
  d.c.assign(size_t(depth), Rat(0));
  for (int k = 1; 3 * k - 2 <= depth; ++k) {
    Rat p24 = detail::rat_pow(Rat(24), k);
    d.a[size_t(3 * k - 2) - 1] =
        Rat(-1, 2) * Rat(double_factorial(6 * k - 5)) / (p24 * Rat(factorial(k - 1)));
    Rat base = Rat(double_factorial(6 * k - 1)) / (p24 * Rat(factorial(k)));
    if (3 * k <= depth) d.b[size_t(3 * k) - 1] = base;
    if (3 * k - 1 <= depth) d.c[size_t(3 * k - 1) - 1] = -Rat(6 * k + 1, 6 * k - 1) * base;
  }
  return d;
}

/// The same spectral data in the tau-normalization: a carries one less power of 24
/// and c sits one index later (at 3k).  This is the data whose log-tau coefficients
/// are the psi-class intersection numbers times products of odd double factorials.
inline InitialData airy_tau_data(int depth) {
  if (depth < 1) throw std::invalid_argument("airy_tau_data: depth must be >= 1");
  InitialData d;
  d.a.assign(size_t(depth), Rat(0));
  d.b.assign(size_t(depth), Rat(0));
  d.c.assign(size_t(depth), Rat(0));
  for (int k = 1; 3 * k - 2 <= depth; ++k) {
    Rat p24 = detail::rat_pow(Rat(24), k);
    d.a[size_t(3 * k - 2) - 1] =
        Rat(-1, 2) * Rat(24) * Rat(double_factorial(6 * k - 5)) / (p24 * Rat(factorial(k - 1)));
    Rat base = Rat(double_factorial(6 * k - 1)) / (p24 * Rat(factorial(k)));
    if (3 * k <= depth) {
      d.b[size_t(3 * k) - 1] = base;
      d.c[size_t(3 * k) - 1] = -Rat(6 * k + 1, 6 * k - 1) * base;
    }
  }
  return d;
}

/// Airy coefficients with the diagonal scaled as in airy_tau_data (one factor 24
/// larger than airy_data) but the off-diagonal index pattern of airy_data.  This is
/// the scaling in which the exceptional real branch point of the (3n+1)-truncations
/// sits near z = 1; with the airy_data diagonal it collapses toward the origin.
inline InitialData airy_branch_data(int depth) {
  InitialData d = airy_data(depth);
  for (int k = 1; 3 * k - 2 <= depth; ++k) d.a[size_t(3 * k - 2) - 1] *= 24;
  return d;
}

/// <tau_{k_1} ... tau_{k_N}>: intersection numbers of psi-classes on the moduli
/// spaces of stable curves, computed as the N-point coefficient of the Airy tau
/// data divided by prod (2k_i+1)!!.  Zero unless sum(k) - N + 3 = 3g with integer
/// g >= 0.  One-point numbers are out of reach of the N-point trace formula.
inline Rat intersection_number(const std::vector<int>& k) {
  if (k.size() < 2)
    throw std::invalid_argument("intersection_number: need at least two indices");
  long ks = 0;
  for (int ki : k) {
    if (ki < 0) throw std::invalid_argument("intersection_number: negative index");
    ks += ki;
  }
  long dim = ks - long(k.size()) + 3;
  if (dim < 0 || dim % 3 != 0) return Rat(0);
  int depth = int(std::max(long(1), ks + long(k.size()) - 1)) + 2;
  NPointEngine<Rat> eng(assemble_w(airy_tau_data(depth)));
  Rat f = eng.coeff(k);
  for (int ki : k) f /= Rat(double_factorial(2L * ki + 1));
  return f;
}

/// m-truncated log tau of the Airy tau data, written in the times t_k that enter
/// the series as t_k/(2k+1)!! (the intersection-number generating convention).
inline TruncatedTPoly<Rat> wk_truncation(int m) {
  NPointEngine<Rat> eng(assemble_w(airy_tau_data(m + 2)));
  return tp_in_normalized_times(truncate_logtau(eng, m));
}

/// Known quadratic-and-up part of that expansion through weight 9, for comparison.
/// The t0*t2 coefficient is 1/24 = <tau_0 tau_2>, forced by the string equation.
inline TruncatedTPoly<Rat> wk_reference(int m = 9) {
  if (m < 2 || m > 9) throw std::invalid_argument("wk_reference: need 2 <= m <= 9");
  TruncatedTPoly<Rat> f(m);
  f.add_term({0, 0, 0}, Rat(1, 6));
  f.add_term({1, 1}, Rat(1, 48));
  f.add_term({0, 2}, Rat(1, 24));
  f.add_term({1, 1, 1}, Rat(1, 72));
  f.add_term({0, 1, 2}, Rat(1, 12));
  f.add_term({0, 0, 3}, Rat(1, 48));
  f.add_term({0, 0, 0, 1}, Rat(1, 6));
  f.add_term({0, 0, 0, 1, 1}, Rat(1, 6));
  f.add_term({0, 0, 0, 0, 2}, Rat(1, 24));
  return f;
}

/// W truncated after its first g inverse-power terms: entries a(z) = sum_{i<=g}
/// a_i z^-i, b(z) = 1 + sum_{i<=g} b_i z^-i, c(z) = z + sum_{j<=g+1} c_j z^{1-j},
/// with the Airy coefficients.  Exact finite Laurent matrix.
namespace detail {
inline RMatrix g_truncation(const InitialData& full, int g) {
  InitialData d;
  d.a.assign(full.a.begin(), full.a.begin() + g);
  d.b.assign(full.b.begin(), full.b.begin() + g);
  d.c.assign(full.c.begin(), full.c.begin() + g + 1);
  return assemble_w(d);
}
}  // namespace detail

inline RMatrix truncated_matrix(int g) {
  if (g < 1) throw std::invalid_argument("truncated_matrix: g must be >= 1");
  return detail::g_truncation(airy_data(g + 1), g);
}

/// z^{2g} * (a^2 + bc) for the g-truncation of airy_branch_data: the monic
/// degree-(2g+1) polynomial whose roots are the finite branch points.
/// Coefficients ascending.
inline std::vector<Rat> branch_polynomial(int g) {
  if (g < 1) throw std::invalid_argument("branch_polynomial: g must be >= 1");
  RMatrix w = detail::g_truncation(airy_branch_data(g + 1), g);
  RSeries q = w.e[0][0] * w.e[0][0] + w.e[0][1] * w.e[1][0];
  std::vector<Rat> p;
  for (int i = 0; i <= 2 * g + 1; ++i) p.push_back(q.coeff_or_zero(i - 2 * g));
  return p;
}

/// True when the branch polynomial of the g-truncation has a double root at z = 0
/// (constant and linear coefficients vanish exactly).
inline bool double_point_at_zero(int g) {
  std::vector<Rat> p = branch_polynomial(g);
  return p.size() >= 2 && p[0] == 0 && p[1] == 0;
}

struct BranchStats {
  std::vector<Cx> roots;  // all 6n+3 finite branch points
  Cx real_root;           // the root closest to z = 1
  int real_count = 0;     // 1 when that root is real to tolerance
  int inner_count = 0, outer_count = 0;
  double inner_radius = 0.0, outer_radius = 0.0;
};

/// Branch points of the (3n+1)-truncation: one root near z = 1, the rest split by
/// two-means clustering of log|z| into an inner and an outer circle; radii are the
/// per-cluster geometric means.
inline BranchStats branch_stats(int n) {
  if (n < 1) throw std::invalid_argument("branch_stats: n must be >= 1");
  BranchStats st;
  st.roots = find_roots(branch_polynomial(3 * n + 1));

  size_t i1 = 0;
  for (size_t i = 1; i < st.roots.size(); ++i)
    if (std::abs(st.roots[i] - 1.0) < std::abs(st.roots[i1] - 1.0)) i1 = i;
  st.real_root = st.roots[i1];
  st.real_count = std::abs(st.real_root.imag()) <= 1e-8 * (1 + std::abs(st.real_root.real()));

  std::vector<double> lg;
  for (size_t i = 0; i < st.roots.size(); ++i)
    if (i != i1) lg.push_back(std::log(std::max(std::abs(st.roots[i]), 1e-300)));
  double c1 = *std::min_element(lg.begin(), lg.end());
  double c2 = *std::max_element(lg.begin(), lg.end());
  for (int it = 0; it < 100; ++it) {
    double s1 = 0, s2 = 0;
    int n1 = 0, n2 = 0;
    for (double v : lg)
      (std::abs(v - c1) <= std::abs(v - c2) ? (s1 += v, ++n1) : (s2 += v, ++n2));
    double d1 = n1 ? s1 / n1 : c1, d2 = n2 ? s2 / n2 : c2;
    bool done = d1 == c1 && d2 == c2;
    c1 = d1;
    c2 = d2;
    if (done) break;
  }
  for (double v : lg)
    (std::abs(v - c1) <= std::abs(v - c2) ? ++st.inner_count : ++st.outer_count);
  st.inner_radius = std::exp(c1);
  st.outer_radius = std::exp(c2);
  return st;
}

}  // namespace kdvtau
