#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "kdvtau/parallel.hpp"
#include "kdvtau/periods.hpp"
#include "kdvtau/tpoly.hpp"

namespace kdvtau {

/// Summation window for theta(u) = sum over n in Z^g of exp(<n,Bn>/2 + <n,u>).
/// The box |n_i| <= radius carries everything above the Gaussian tail; tail_bound
/// estimates what the box drops, relative to the largest retained term.
struct ThetaParams {
  Eigen::MatrixXcd B;
  double lambda = 0;      // smallest eigenvalue of -Re B
  int radius = 0;
  double tail_bound = 0;
};

namespace detail {

/// Bound on the lattice sum outside the box of the given radius, relative to the
/// peak term exp(rho^2 / (2 lambda)), rho = |Re u|.  Shell s contributes at most
/// (2s+1)^g - (2s-1)^g points, each below exp(-lambda (s - rho/lambda)^2 / 2); a
/// polynomial derivative factor of total order D is majorized by
/// (1 + sqrt(g) s dir_norm)^D.
inline double theta_tail(int g, double lambda, double rho, int radius, int deriv_order,
                         double dir_norm) {
  double rstar = rho / lambda;
  double tail = 0;
  for (int s = radius + 1; s <= radius + 2000; ++s) {
    double count = std::pow(2.0 * s + 1, g) - std::pow(2.0 * s - 1, g);
    double lg = std::log(count) + deriv_order * std::log1p(std::sqrt(double(g)) * s * dir_norm);
    double arg = s > rstar ? s - rstar : 0.0;
    lg -= 0.5 * lambda * arg * arg;
    double term = lg < -700 ? 0.0 : std::exp(lg);
    tail += term;
    if (term < 1e-3 * tail * std::numeric_limits<double>::epsilon()) break;
  }
  return tail;
}

}  // namespace detail

/// Build the summation window for arguments with |Re u| up to re_u_norm.  When the
/// sum will be differentiated termwise, deriv_order and dir_norm describe the worst
/// polynomial factor (total order, largest direction 2-norm) so the radius absorbs
/// its growth.  Negative definiteness of Re B is established by a Cholesky
/// factorization of -Re B.
inline ThetaParams theta_params(const Eigen::MatrixXcd& B, double re_u_norm = 0.0,
                                int deriv_order = 0, double dir_norm = 0.0,
                                double eps = 1e-14) {
  const int g = int(B.rows());
  if (B.cols() != g || g < 1) throw std::invalid_argument("theta_params: B must be square");
  Eigen::MatrixXd nre = -0.5 * (B.real() + B.real().transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(nre);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("theta_params: real part of B must be negative definite");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(nre);
  double lambda = es.eigenvalues().minCoeff();

  ThetaParams p;
  p.B = B;
  p.lambda = lambda;
  p.radius = int(std::ceil(re_u_norm / lambda + std::sqrt(2.0 * -std::log(eps) / lambda)));
  p.tail_bound = detail::theta_tail(g, lambda, re_u_norm, p.radius, deriv_order, dir_norm);
  while (p.tail_bound > 1e-12) {
    if (++p.radius > 400)
      throw std::runtime_error("theta_params: summation window would be unreasonably large");
    p.tail_bound = detail::theta_tail(g, lambda, re_u_norm, p.radius, deriv_order, dir_norm);
  }
  return p;
}

/// theta(u) over the box |n_i| <= R, where R is the stored radius re-derived for
/// this argument's |Re u| if that needs more room.  Terms are added in a fixed
/// odometer order.
inline Cx theta_eval(const Eigen::VectorXcd& u, const ThetaParams& p) {
  const int g = int(p.B.rows());
  if (int(u.size()) != g) throw std::invalid_argument("theta_eval: argument size != genus");
  double rho = u.real().norm();
  int need = int(std::ceil(rho / p.lambda + std::sqrt(2.0 * -std::log(1e-14) / p.lambda)));
  int radius = std::max(p.radius, need);
  while (detail::theta_tail(g, p.lambda, rho, radius, 0, 0) > 1e-12) {
    if (++radius > 400)
      throw std::runtime_error("theta_eval: summation window would be unreasonably large");
  }

  std::vector<int> n(size_t(g), -radius);
  Cx total(0);
  while (true) {
    Cx e(0);
    for (int i = 0; i < g; ++i) {
      Cx row(0);
      for (int j = 0; j < g; ++j) row += p.B(i, j) * double(n[size_t(j)]);
      e += double(n[size_t(i)]) * (0.5 * row + u(i));
    }
    total += std::exp(e);
    int i = 0;
    while (i < g && n[size_t(i)] == radius) {
      n[size_t(i)] = -radius;
      ++i;
    }
    if (i == g) break;
    ++n[size_t(i)];
  }
  return total;
}

/// Time directions of the theta argument sum_k t_k d^(k) - u0.  For the standard
/// KdV times d^(k) = V^(k)/(2k+1)!!; filling d with the raw V vectors instead
/// produces the expansion in the trace-formula normalization.
struct DirectionSet {
  std::vector<Eigen::VectorXcd> d;
  Eigen::VectorXcd u0;
};

inline DirectionSet directions(const PeriodData& pd, const Eigen::VectorXcd& u0) {
  DirectionSet ds;
  ds.u0 = u0;
  for (int k = 0; k <= pd.K; ++k)
    ds.d.push_back(pd.V[size_t(k)] / rat_to_double(Rat(double_factorial(2 * k + 1))));
  return ds;
}

/// Summation window sized for the full Taylor pass of theta(sum t_k d^(k) - u0)
/// at graded level m.
inline ThetaParams theta_params_for(const Eigen::MatrixXcd& B, const DirectionSet& ds, int m,
                                    double eps = 1e-14) {
  double dir_norm = 0;
  for (const auto& d : ds.d) dir_norm = std::max(dir_norm, d.norm());
  return theta_params(B, ds.u0.real().norm(), m, dir_norm, eps);
}

namespace detail {

/// All t-monomial keys with indices at most K and graded weight at most m,
/// paired with (index, multiplicity) run-length forms.
inline std::vector<TKey> theta_keys(int K, int m) {
  std::vector<TKey> keys;
  TKey cur;
  // depth-first over nondecreasing index sequences within the weight budget
  struct Rec {
    int K, m;
    std::vector<TKey>* out;
    void walk(TKey& cur, int lo, int weight) {
      out->push_back(cur);
      for (int k = lo; k <= K; ++k) {
        if (weight + 2 * k + 1 > m) break;
        cur.push_back(k);
        walk(cur, k, weight + 2 * k + 1);
        cur.pop_back();
      }
    }
  } rec{K, m, &keys};
  rec.walk(cur, 0, 0);
  return keys;
}

inline double key_automorphisms(const TKey& k) {
  double r = 1;
  for (size_t i = 0; i < k.size();) {
    size_t j = i;
    int c = 1;
    while (j + 1 < k.size() && k[j + 1] == k[i]) ++j, ++c;
    for (int f = 2; f <= c; ++f) r *= f;
    i = j + 1;
  }
  return r;
}

}  // namespace detail

/// Taylor coefficients of theta(sum_k t_k d^(k) - u0) up to graded level m, by
/// termwise differentiation of the lattice sum: the monomial t_{k_1}...t_{k_r}
/// receives sum_n exp(<n,Bn>/2 - <n,u0>) <n,d^(k_1)>...<n,d^(k_r)> divided by the
/// multiplicity factorials.  The lattice box is split into slabs along the first
/// index and reduced in slab order, so the result is thread-count independent.
inline TruncatedTPoly<Cx> theta_taylor(const DirectionSet& ds, const ThetaParams& p, int m) {
  const int g = int(p.B.rows());
  if (int(ds.u0.size()) != g) throw std::invalid_argument("theta_taylor: base point size != genus");
  for (const auto& d : ds.d)
    if (int(d.size()) != g) throw std::invalid_argument("theta_taylor: direction size != genus");
  const int K = int(ds.d.size()) - 1;
  const int R = p.radius;
  const std::vector<TKey> keys = detail::theta_keys(K, m);

  // run-length encode each key once: list of (direction index, multiplicity)
  std::vector<std::vector<std::pair<int, int>>> runs(keys.size());
  int max_mult = 0;
  for (size_t ki = 0; ki < keys.size(); ++ki) {
    const TKey& key = keys[ki];
    for (size_t i = 0; i < key.size();) {
      size_t j = i;
      while (j + 1 < key.size() && key[j + 1] == key[i]) ++j;
      int mult = int(j - i + 1);
      runs[ki].push_back({key[i], mult});
      max_mult = std::max(max_mult, mult);
      i = j + 1;
    }
  }

  const int slabs = 2 * R + 1;
  std::vector<std::vector<Cx>> partial;
  partial.resize(size_t(slabs));
  std::vector<double> peak(size_t(slabs), 0.0);
  parallel_for(slabs, [&](int si) {
    std::vector<Cx> acc(keys.size(), Cx(0));
    double mx = 0;
    std::vector<int> n(size_t(g), -R);
    n[0] = si - R;
    std::vector<std::vector<Cx>> pw(size_t(K) + 1, std::vector<Cx>(size_t(max_mult) + 1, Cx(1)));
    while (true) {
      Cx e(0);
      for (int i = 0; i < g; ++i) {
        Cx row(0);
        for (int j = 0; j < g; ++j) row += p.B(i, j) * double(n[size_t(j)]);
        e += double(n[size_t(i)]) * (0.5 * row - ds.u0(i));
      }
      Cx base = std::exp(e);
      mx = std::max(mx, std::abs(base));
      for (int k = 0; k <= K; ++k) {
        Cx dot(0);
        for (int i = 0; i < g; ++i) dot += double(n[size_t(i)]) * ds.d[size_t(k)](i);
        for (int c = 1; c <= max_mult; ++c) pw[size_t(k)][size_t(c)] = pw[size_t(k)][size_t(c) - 1] * dot;
      }
      for (size_t ki = 0; ki < keys.size(); ++ki) {
        Cx v = base;
        for (auto& [k, mult] : runs[ki]) v *= pw[size_t(k)][size_t(mult)];
        acc[ki] += v;
      }
      int i = 1;  // first index is pinned to the slab
      while (i < g && n[size_t(i)] == R) {
        n[size_t(i)] = -R;
        ++i;
      }
      if (i == g) break;
      ++n[size_t(i)];
    }
    partial[size_t(si)] = std::move(acc);
    peak[size_t(si)] = mx;
  });

  std::vector<Cx> sums(keys.size(), Cx(0));
  double mx = 0;
  for (int si = 0; si < slabs; ++si) {
    for (size_t ki = 0; ki < keys.size(); ++ki) sums[ki] += partial[size_t(si)][ki];
    mx = std::max(mx, peak[size_t(si)]);
  }
  if (std::abs(sums[0]) < 1e-8 * mx)
    throw std::domain_error("theta_taylor: the base point lies on the theta divisor");

  TruncatedTPoly<Cx> out(m);
  for (size_t ki = 0; ki < keys.size(); ++ki)
    out.add_term(keys[ki], sums[ki] / detail::key_automorphisms(keys[ki]));
  return out;
}

/// Theta-side m-truncation of log tau in the standard times:
///   (1/2) sum_{i,j} q_{ij} t_i t_j / ((2i+1)!!(2j+1)!!)
///     + log theta(sum_k t_k V^(k)/(2k+1)!! - u0).
/// Matches the exact engine's truncation, passed to normalized times, on every
/// monomial with at least three t-factors.
inline TruncatedTPoly<Cx> theta_logtau(const PeriodData& pd, const Eigen::VectorXcd& u0, int m,
                                       double eps = 1e-14) {
  if (m < 0) throw std::invalid_argument("theta_logtau: m must be >= 0");
  const int K = std::max(0, (m - 1) / 2);
  if (pd.K < K)
    throw std::invalid_argument("theta_logtau: period data holds too few direction vectors");
  DirectionSet ds = directions(pd, u0);
  ds.d.resize(size_t(K) + 1);
  ThetaParams p = theta_params_for(pd.B, ds, m, eps);
  TruncatedTPoly<Cx> lt = tp_log(theta_taylor(ds, p, m));
  for (int i = 0; i <= K; ++i)
    for (int j = i; j <= K; ++j) {
      if ((2 * i + 1) + (2 * j + 1) > m) continue;
      double den = rat_to_double(Rat(double_factorial(2 * i + 1)) * Rat(double_factorial(2 * j + 1)));
      Cx q = pd.qreg(i, j) / den;
      lt.add_term(TKey{i, j}, i == j ? 0.5 * q : q);
    }
  return lt;
}

}  // namespace kdvtau
