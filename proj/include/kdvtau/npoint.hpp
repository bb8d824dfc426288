#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <vector>

#include "kdvtau/resolvent.hpp"
#include "kdvtau/tpoly.hpp"

namespace kdvtau {

template <class T>
using Mat2 = std::array<T, 4>;

template <class T>
Mat2<T> mat2_mul(const Mat2<T>& x, const Mat2<T>& y) {
  return {x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3],
          x[2] * y[0] + x[3] * y[2], x[2] * y[1] + x[3] * y[3]};
}

/// N-point generating-series engine.
///
/// Computes Taylor coefficients F_{k_1...k_N} of log tau from the trace formula
///   -(1/N) sum_{s in S_N} tr[M(z_{s_1})...M(z_{s_N})] / ((z_{s_1}-z_{s_2})...(z_{s_N}-z_{s_1}))
///   - delta_{N,2} (z_1+z_2)/(z_1-z_2)^2,
/// with M = W/sqrt(Q/z), expanded in a fixed modulus ordering of the variables.
/// The S_N sum is reduced to (N-1)! cyclic representatives (trace and denominator are
/// rotation invariant, cancelling the 1/N), and each representative is keyed by its
/// cyclic word of (k, expansion-direction) pairs so repeated words are evaluated once.
template <class T>
class NPointEngine {
 public:
  explicit NPointEngine(MatrixSeries<T> w) : w_(std::move(w)) {}

  /// F_{k_1...k_N}; requires N >= 2 and k_j >= 0.
  T coeff(const std::vector<int>& k) {
    if (k.size() < 2) throw std::invalid_argument("npoint: N must be >= 2");
    for (int kj : k)
      if (kj < 0) throw std::invalid_argument("npoint: indices must be >= 0");
    auto it = cache_.find(k);
    if (it != cache_.end()) return it->second;
    std::vector<int> expo(k.size()), rank(k.size());
    for (size_t j = 0; j < k.size(); ++j) expo[j] = -k[j] - 1;
    std::iota(rank.begin(), rank.end(), 0);
    T v = series_coeff(expo, rank);
    cache_.emplace(k, v);
    return v;
  }

  /// Raw coefficient of z_1^{E_1}...z_N^{E_N} of the full combined series (trace sum
  /// plus the two-point subtraction) in the region where smaller rank means larger
  /// modulus; rank must be a permutation of 0..N-1.
  T series_coeff(const std::vector<int>& expo, const std::vector<int>& rank) {
    const int n = int(expo.size());
    if (n < 2) throw std::invalid_argument("npoint: N must be >= 2");
    {
      std::vector<int> chk = rank;
      std::sort(chk.begin(), chk.end());
      for (int i = 0; i < n; ++i)
        if (chk[i] != i) throw std::invalid_argument("npoint: rank must be a permutation");
    }
    long esum = 0;
    for (int e : expo) esum += e;
    const int depth = int(std::max(long(1), -(esum + 1)));
    ensure_depth(depth);

    // cycle position 0 is pinned to the outermost variable so both of its edge
    // expansions run in bounded geometric direction
    int v0 = 0;
    while (rank[v0] != 0) ++v0;
    std::vector<int> rest;
    for (int j = 0; j < n; ++j)
      if (j != v0) rest.push_back(j);
    std::sort(rest.begin(), rest.end());

    std::map<std::vector<long long>, T> memo;
    T total(0);
    std::vector<int> kk(n);
    std::vector<char> dir(n);
    do {
      kk[0] = -expo[v0] - 1;
      for (int i = 1; i < n; ++i) kk[i] = -expo[rest[i - 1]] - 1;
      for (int i = 0; i < n; ++i) {
        int a = i == 0 ? v0 : rest[i - 1];
        int b = i == n - 1 ? v0 : rest[i];
        dir[i] = rank[a] < rank[b];
      }
      std::vector<long long> key = canonical_key(kk, dir);
      auto it = memo.find(key);
      if (it != memo.end()) {
        total = total + it->second;
      } else {
        T v = eval_word(kk, dir, depth);
        memo.emplace(std::move(key), v);
        total = total + v;
      }
    } while (std::next_permutation(rest.begin(), rest.end()));

    T result = T(0) - total;
    if (n == 2) result = result - two_point_subtraction(expo, rank);
    return result;
  }

 private:
  void ensure_depth(int d) {
    if (d <= depth_) return;
    MatrixSeries<T> m = m_from_w(w_.truncated_below(-(d + 2)), -d);
    mc_.assign(size_t(d) + 2, Mat2<T>{T(0), T(0), T(0), T(0)});
    for (int p = 1; p >= -d; --p) {
      auto cm = m.coeff_matrix(p);
      mc_[size_t(1 - p)] = {cm[0], cm[1], cm[2], cm[3]};
    }
    depth_ = d;
  }

  const Mat2<T>& mpow(int p) const { return mc_[size_t(1 - p)]; }

  static std::vector<long long> canonical_key(const std::vector<int>& kk,
                                              const std::vector<char>& dir) {
    const int n = int(kk.size());
    std::vector<long long> word(n), best;
    for (int r = 0; r < n; ++r) {
      for (int i = 0; i < n; ++i) {
        int s = (i + r) % n;
        word[i] = 2LL * kk[s] + (dir[s] ? 1 : 0);
      }
      if (best.empty() || word < best) best = word;
    }
    return best;
  }

  /// One cyclic word: position 0 must be outer on both adjacent edges
  /// (dir[0] true, dir[n-1] false); returns the signed trace-coefficient sum.
  T eval_word(const std::vector<int>& kk, const std::vector<char>& dir, int depth) {
    const int n = int(kk.size());
    if (!dir[0] || dir[n - 1]) throw std::logic_error("npoint: bad word orientation");
    int sgn = 1;
    for (char d : dir)
      if (!d) sgn = -sgn;
    std::vector<int> E(n);
    for (int i = 0; i < n; ++i) E[i] = -kk[i] - 1;

    T total(0);
    for (int l0 = 0; E[0] + l0 + 2 <= 1; ++l0) {
      // chain across positions 1..n-2, keyed by the pending edge index
      std::map<int, Mat2<T>> state;
      state.emplace(l0, Mat2<T>{T(1), T(0), T(0), T(1)});
      for (int j = 1; j <= n - 2; ++j) {
        std::map<int, Mat2<T>> next;
        for (auto& [lp, mat] : state) {
          int phi = dir[j - 1] ? lp : -lp - 1;
          if (dir[j]) {
            for (int l = 0;; ++l) {  // p rises with l
              int p = E[j] - phi + l + 1;
              if (p > 1) break;
              if (p < -depth) continue;
              accumulate(next, l, mat, p);
            }
          } else {
            for (int l = 0;; ++l) {  // p falls with l
              int p = E[j] - phi - l;
              if (p < -depth) break;
              if (p > 1) continue;
              accumulate(next, l, mat, p);
            }
          }
        }
        state = std::move(next);
      }
      // close the cycle: last position consumes the pending edge and edge n-1
      for (int ln = 0; E[0] + l0 + ln + 2 <= 1; ++ln) {
        int p0 = E[0] + l0 + ln + 2;
        if (p0 < -depth) continue;
        for (auto& [lp, mat] : state) {
          int phi = dir[n - 2] ? lp : -lp - 1;
          int pl = E[n - 1] - phi - ln;
          if (pl > 1 || pl < -depth) continue;
          Mat2<T> t = mat2_mul(mat2_mul(mpow(p0), mat), mpow(pl));
          total = total + t[0] + t[3];
        }
      }
    }
    return sgn > 0 ? total : T(0) - total;
  }

  void accumulate(std::map<int, Mat2<T>>& next, int l, const Mat2<T>& mat, int p) {
    Mat2<T> prod = mat2_mul(mat, mpow(p));
    auto it = next.find(l);
    if (it == next.end()) {
      next.emplace(l, std::move(prod));
    } else {
      for (int i = 0; i < 4; ++i) it->second[i] = it->second[i] + prod[i];
    }
  }

  /// Coefficient of z_1^{E_1} z_2^{E_2} of (z_1+z_2)/(z_1-z_2)^2 expanded with the
  /// rank-0 variable outermost.
  T two_point_subtraction(const std::vector<int>& expo, const std::vector<int>& rank) const {
    int ea = rank[0] == 0 ? expo[0] : expo[1];
    int eb = rank[0] == 0 ? expo[1] : expo[0];
    if (ea + eb != -1) return T(0);
    T v(0);
    if (-ea >= 1) v = v + T(-ea);
    if (eb >= 1) v = v + T(eb);
    return v;
  }

  MatrixSeries<T> w_;
  int depth_ = 0;
  std::vector<Mat2<T>> mc_;
  std::map<std::vector<int>, T> cache_;
};

inline NPointEngine<Rat> make_engine(const InitialData& d) {
  return NPointEngine<Rat>(assemble_w(d));
}

/// W(z) -> f(z) W(z) with f = 1 + f_1/z + ... (finite list): returns the initial data
/// of the rescaled matrix.  The KdV solution and all F-coefficients are unchanged.
inline InitialData scale_initial_data(const InitialData& d, const std::vector<Rat>& f) {
  if (d.depth) throw std::invalid_argument("scale_initial_data: needs exact data");
  RMatrix w = assemble_w(d);
  RSeries fs = RSeries::constant(Rat(1));
  for (size_t i = 0; i < f.size(); ++i) fs.add_to(-int(i) - 1, f[i]);
  RSeries wa = w.e[0][0] * fs, wb = w.e[0][1] * fs, wc = w.e[1][0] * fs;
  size_t len = std::max({d.a.size(), d.b.size(), d.c.size() + 1}) + f.size();
  InitialData out;
  for (size_t i = 1; i <= len; ++i) {
    out.a.push_back(wa.coeff(-int(i)));
    out.b.push_back(wb.coeff(-int(i)));
    out.c.push_back(wc.coeff(1 - int(i)));
  }
  return out;
}

/// Exact coefficient table: all sorted index tuples of length n with graded weight
/// 2*sum(k) + n at most max_order.
struct CoeffTable {
  std::map<std::vector<int>, Rat> entries;
  int max_graded_degree = 0;
};

namespace detail {
inline void sorted_tuples_rec(int slots, int lo, int budget, std::vector<int>& cur,
                              std::vector<std::vector<int>>& out) {
  if (slots == 0) {
    out.push_back(cur);
    return;
  }
  for (int k = lo; k <= budget; ++k) {
    cur.push_back(k);
    sorted_tuples_rec(slots - 1, k, budget - k, cur, out);
    cur.pop_back();
  }
}
}  // namespace detail

/// All nondecreasing tuples (k_1 <= ... <= k_n) with sum <= ksum_max.
inline std::vector<std::vector<int>> sorted_tuples(int n, int ksum_max) {
  std::vector<std::vector<int>> out;
  if (n < 0 || ksum_max < 0) return out;
  std::vector<int> cur;
  detail::sorted_tuples_rec(n, 0, ksum_max, cur, out);
  return out;
}

inline CoeffTable npoint_coeffs(NPointEngine<Rat>& eng, int n, int max_order) {
  if (n < 2) throw std::invalid_argument("npoint_coeffs: N must be >= 2");
  CoeffTable t;
  t.max_graded_degree = max_order;
  for (auto& k : sorted_tuples(n, (max_order - n) / 2)) t.entries[k] = eng.coeff(k);
  return t;
}

/// Number of orderings quotient: prod of factorials of index multiplicities.
inline Rat tuple_automorphisms(const std::vector<int>& k) {
  Int r = 1;
  for (size_t i = 0; i < k.size();) {
    size_t j = i;
    while (j < k.size() && k[j] == k[i]) ++j;
    r *= factorial(long(j - i));
    i = j;
  }
  return Rat(r);
}

/// m-truncation of log tau: sum over N >= 2 of (1/N!) sum F_{k_1..k_N} t_{k_1}..t_{k_N},
/// keeping graded weight 2*sum(k)+N <= m.  No constant or linear part exists (log tau is
/// defined modulo alpha + sum beta_i t_i).
inline TruncatedTPoly<Rat> truncate_logtau(NPointEngine<Rat>& eng, int m) {
  if (m < 2) throw std::invalid_argument("truncate_logtau: m must be >= 2");
  TruncatedTPoly<Rat> f(m);
  for (int n = 2; n <= m; ++n)
    for (auto& k : sorted_tuples(n, (m - n) / 2))
      f.add_term(k, eng.coeff(k) / tuple_automorphisms(k));
  return f;
}

/// Residuals of the flow identities on F-coefficients: for r = 0..order compares
/// d_x^r d_{t_flow} u against the corresponding differential polynomial evaluated at
/// U_s = F_{0...0} (s+2 zeros), all at t = 0.  Zero residuals mean the KdV equation
/// holds for the tau function generated by this data.
inline std::vector<Rat> kdv_identity_check(NPointEngine<Rat>& eng, int flow, int order) {
  std::vector<Rat> res;
  GradedPoly fp = flow_polynomial(flow);
  for (int r = 0; r <= order; ++r) {
    std::vector<int> lk(size_t(r) + 2, 0);
    lk.push_back(flow);
    Rat lhs = eng.coeff(lk);
    Rat rhs = fp.evaluate<Rat>(
        [&](uint32_t key) -> Rat {
          if (key_fam(key) != Fam::U)
            throw std::logic_error("kdv_identity_check: unexpected symbol");
          std::vector<int> zk(size_t(key_idx(key)) + 2, 0);
          return eng.coeff(zk);
        },
        [](const Rat& c) { return c; });
    res.push_back(lhs - rhs);
    fp = jet_dx(fp);
  }
  return res;
}

}  // namespace kdvtau
