#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "kdvtau/curve.hpp"

namespace kdvtau {

struct PeriodOptions {
  double quad_tol = 1e-11;    // relative target for every period quadrature
  int max_doublings = 10;     // cut quadrature starts at 64 nodes, caps at 64*2^10
  int max_refine = 9;         // path quadrature: at most 2^9 times the base step count
  double clearance = 1e-2;    // routing offset around cuts, as a fraction of scale
  double zfar_factor = 4.0;   // |z_far| = factor * max |branch point|
  int tail_terms = 40;        // terms kept in the expansion of the Abel map at infinity
};

/// Everything the theta side needs from the curve: normalized first-kind periods,
/// second-kind periods, the expansion coefficients of the second-kind differentials,
/// and the parity vector entering the divisor shift.  b-cycle orientations are
/// canonicalized so that Re B has negative diagonal; the period matrix is then checked
/// to be symmetric with negative-definite real part.
struct PeriodData {
  int g = 0;
  int K = 0;
  Eigen::MatrixXcd alpha;  // alpha(i-1,m-1): coefficient of z^{g-m} in (2w/dz) * omega_i
  Eigen::MatrixXcd B;      // period matrix: B(i-1,j-1) = integral of omega_i over b_j
  std::vector<Eigen::VectorXcd> V;      // V[k] = b-periods of the second-kind Omega^(k)
  std::vector<Eigen::VectorXcd> V_exp;  // the same vectors from the expansion of omega_i
  Eigen::MatrixXcd qreg;   // qreg(k,i) = regular expansion coefficient q_{ki}; symmetric
  Eigen::VectorXcd varpi;  // pi*i*(1,0,1,0,...) + (1/2) B * ones
  double cond_a = 0;       // condition number of the raw a-period matrix
};

/// Divisor of the matrix polynomial (zeros of b with w = -a) and its shifted Abel map.
struct DivisorData {
  std::vector<Cx> z, w;        // the g divisor points
  Eigen::VectorXcd aj;         // sum over the divisor of the Abel maps from infinity
  Eigen::VectorXcd u0_raw;     // aj - varpi
  Eigen::VectorXcd u0;         // u0_raw reduced mod the lattice 2 pi i M + B N
  Eigen::VectorXi lattice_m, lattice_n;  // the integers removed by the reduction
};

namespace detail {

// ---- series helpers -------------------------------------------------------

/// Maclaurin coefficients of (1 + q_1 t + ... + q_d t^d)^{-1/2}, n terms.
inline std::vector<Cx> inv_sqrt_series(const std::vector<Cx>& q, int n) {
  std::vector<Cx> s(size_t(n), Cx(0));
  s[0] = Cx(1);
  for (int m = 1; m < n; ++m) {
    // coefficient of t^m in S^2 P vanishes: 2 s_m + sum_{0<i<m} s_i s_{m-i}
    //                                            + sum_c q_c sum_{i+j=m-c} s_i s_j = 0
    Cx acc(0);
    for (int i = 1; i < m; ++i) acc += s[size_t(i)] * s[size_t(m - i)];
    for (int c = 1; c <= std::min(m, int(q.size())); ++c) {
      Cx conv(0);
      for (int i = 0; i <= m - c; ++i) conv += s[size_t(i)] * s[size_t(m - c - i)];
      acc += q[size_t(c) - 1] * conv;
    }
    s[size_t(m)] = -acc / 2.0;
  }
  return s;
}

/// Maclaurin coefficients of (1 + q_1 t + ... + q_d t^d)^{+1/2}, n terms.
inline std::vector<Cx> sqrt_series(const std::vector<Cx>& q, int n) {
  std::vector<Cx> u(size_t(n), Cx(0));
  u[0] = Cx(1);
  for (int m = 1; m < n; ++m) {
    // coefficient of t^m in U^2 - P vanishes
    Cx acc(0);
    for (int i = 1; i < m; ++i) acc += u[size_t(i)] * u[size_t(m - i)];
    Cx pm = m <= int(q.size()) ? q[size_t(m) - 1] : Cx(0);
    u[size_t(m)] = (pm - acc) / 2.0;
  }
  return u;
}

// ---- quadrature around one cut -------------------------------------------

/// Loop integrals of z^p dz/(2w), p = 0..pmax, around one cut, with an arbitrary but
/// internally consistent sheet orientation.  Uses the cosine substitution: on the cut
/// z = m + h cos(theta) the factor (z-e1)(z-e2) contributes -h^2 sin^2(theta) and the
/// endpoint singularities cancel, leaving the midpoint rule on a smooth periodic
/// integrand with spectral accuracy.  Node counts double until two levels agree.
inline std::vector<Cx> cut_loop_integrals(const SpectralCurve& curve, const Cut& cut, int pmax,
                                          const PeriodOptions& opt) {
  const Cx m = cut.mid(), h = (cut.e2 - cut.e1) / 2.0;
  auto level = [&](int n) {
    // continue sqrt(R) from the cut midpoint outward, R = Q / ((z-e1)(z-e2))
    std::vector<Cx> rho(size_t(n), Cx(0));
    std::vector<Cx> zs(size_t(n), Cx(0));
    auto rval = [&](int l) {
      double th = M_PI * (l + 0.5) / n;
      Cx z = m + h * std::cos(th);
      zs[size_t(l)] = z;
      return eval_q(curve, z) / ((z - cut.e1) * (z - cut.e2));
    };
    int mid = n / 2;
    Cx rm = rval(mid);
    rho[size_t(mid)] = std::sqrt(rm);
    for (int l = mid + 1; l < n; ++l) {
      Cx r = std::sqrt(rval(l));
      rho[size_t(l)] = std::abs(r - rho[size_t(l) - 1]) <= std::abs(r + rho[size_t(l) - 1]) ? r : -r;
    }
    for (int l = mid - 1; l >= 0; --l) {
      Cx r = std::sqrt(rval(l));
      rho[size_t(l)] = std::abs(r - rho[size_t(l) + 1]) <= std::abs(r + rho[size_t(l) + 1]) ? r : -r;
    }
    std::vector<Cx> acc(size_t(pmax) + 1, Cx(0));
    for (int l = 0; l < n; ++l) {
      Cx f = Cx(1) / rho[size_t(l)];
      for (int p = 0; p <= pmax; ++p) {
        acc[size_t(p)] += f;
        f *= zs[size_t(l)];
      }
    }
    for (Cx& v : acc) v *= Cx(0, -1) * (M_PI / n);
    return acc;
  };
  int n = 64;
  std::vector<Cx> prev = level(n);
  for (int d = 0; d < opt.max_doublings; ++d) {
    n *= 2;
    std::vector<Cx> next = level(n);
    double diff = 0, mag = 0;
    for (int p = 0; p <= pmax; ++p) {
      diff = std::max(diff, std::abs(next[size_t(p)] - prev[size_t(p)]));
      mag = std::max(mag, std::abs(next[size_t(p)]));
    }
    if (diff <= opt.quad_tol * (1.0 + mag)) return next;
    prev = std::move(next);
  }
  throw std::runtime_error("cut_loop_integrals: quadrature failed to settle");
}

// ---- routing around the cut system ----------------------------------------

/// Straight-line visibility routing between waypoints, keeping a clearance delta
/// from every obstacle segment.  Obstacles are the finite cuts plus the truncated ray.
struct Router {
  std::vector<std::array<Cx, 2>> obstacles;
  double delta = 0;
  std::vector<Cx> nodes;  // offset rectangle corners around every obstacle

  Router(const CutSystem& cs, double delta_) : delta(delta_) {
    for (const Cut& c : cs.cuts) obstacles.push_back({c.e1, c.e2});
    obstacles.push_back({cs.ray_base, cs.ray_far()});
    for (const auto& ob : obstacles) {
      Cx t = ob[1] - ob[0];
      t /= std::abs(t);
      Cx nrm = t * Cx(0, 1);
      double off = 1.4 * delta;
      nodes.push_back(ob[0] - off * t + off * nrm);
      nodes.push_back(ob[0] - off * t - off * nrm);
      nodes.push_back(ob[1] + off * t + off * nrm);
      nodes.push_back(ob[1] + off * t - off * nrm);
    }
  }

  bool edge_clear(Cx a, Cx b) const {
    for (const auto& ob : obstacles)
      if (geom::dist_seg_seg(a, b, ob[0], ob[1]) < 0.85 * delta) return false;
    return true;
  }

  /// Shortest clear polyline from `from` to `to` (both must already have clearance).
  std::vector<Cx> route(Cx from, Cx to) const {
    if (edge_clear(from, to)) return {from, to};
    std::vector<Cx> pts = nodes;
    pts.push_back(from);
    pts.push_back(to);
    const size_t n = pts.size(), src = n - 2, dst = n - 1;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n, inf);
    std::vector<int> par(n, -1);
    using QE = std::pair<double, size_t>;
    std::priority_queue<QE, std::vector<QE>, std::greater<>> pq;
    dist[src] = 0;
    pq.push({0, src});
    while (!pq.empty()) {
      auto [dcur, u] = pq.top();
      pq.pop();
      if (dcur > dist[u]) continue;
      if (u == dst) break;
      for (size_t v = 0; v < n; ++v) {
        if (v == u || dist[u] + std::abs(pts[v] - pts[u]) >= dist[v]) continue;
        if (!edge_clear(pts[u], pts[v])) continue;
        dist[v] = dist[u] + std::abs(pts[v] - pts[u]);
        par[v] = int(u);
        pq.push({dist[v], v});
      }
    }
    if (dist[dst] == inf) throw std::runtime_error("Router: no clear path around the cut system");
    std::vector<Cx> path;
    for (int v = int(dst); v != -1; v = par[size_t(v)]) path.push_back(pts[size_t(v)]);
    std::reverse(path.begin(), path.end());
    return path;
  }
};

// ---- integration along a polyline with sheet tracking ----------------------

/// Integrals of z^p dz/(2w), p = 0..pmax, along a polyline, powers all at once.
/// w = sqrt(Q) is continued from seed_w at the first vertex; w_end receives the
/// continued value at the last vertex.  Composite Gauss-Legendre with steps bounded
/// so the total argument variation of Q per step stays well below pi, refined until
/// two levels agree.  A level whose sign tracking ever becomes ambiguous is thrown
/// away and refined instead of being trusted.
inline std::vector<Cx> integrate_polyline(const SpectralCurve& curve, const std::vector<Cx>& path,
                                          Cx seed_w, int pmax, const PeriodOptions& opt,
                                          Cx* w_end) {
  static const double gl8x[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                 0.9602898564975363};
  static const double gl8w[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                 0.1012285362903763};
  if (std::abs(seed_w * seed_w - eval_q(curve, path.front())) >
      1e-8 * (1.0 + std::abs(seed_w * seed_w)))
    throw std::logic_error("integrate_polyline: seed is not on the curve");

  auto inv_dist_sum = [&](Cx z) {
    double inv = 0;
    for (const Cx& e : curve.branch_points) inv += 1.0 / std::abs(z - e);
    return inv;
  };
  auto track = [&](Cx w_prev, Cx z, bool* ok) {
    Cx w = std::sqrt(eval_q(curve, z));
    Cx pick = std::abs(w - w_prev) <= std::abs(w + w_prev) ? w : -w;
    if (std::abs(pick - w_prev) > 0.7 * std::abs(pick + w_prev)) *ok = false;
    return pick;
  };

  auto level = [&](int refine, Cx* wend, bool* ok) -> std::vector<Cx> {
    std::vector<Cx> acc(size_t(pmax) + 1, Cx(0));
    Cx w_ref = seed_w;
    for (size_t v = 0; v + 1 < path.size(); ++v) {
      Cx a = path[v], b = path[v + 1];
      double len = std::abs(b - a);
      if (len == 0) continue;
      double inv = 0;
      for (int smp = 0; smp <= 32; ++smp) inv = std::max(inv, inv_dist_sum(a + (b - a) * (smp / 32.0)));
      double h = 0.25 / inv;
      double npieces = std::ceil(len / h) * refine;
      if (npieces > 5e6) throw std::runtime_error("integrate_polyline: path needs too many steps");
      int pieces = std::max(1, int(npieces));
      Cx dz = (b - a) / double(pieces);
      std::array<double, 8> xs;
      for (int i = 0; i < 4; ++i) {
        xs[size_t(3 - i)] = -gl8x[i];
        xs[size_t(4 + i)] = gl8x[i];
      }
      for (int pc = 0; pc < pieces; ++pc) {
        Cx za = a + dz * double(pc);
        Cx mid = za + dz * 0.5, half = dz * 0.5;
        for (int i = 0; i < 8; ++i) {
          Cx z = mid + half * xs[size_t(i)];
          Cx w = track(w_ref, z, ok);
          w_ref = w;
          double wt = gl8w[i < 4 ? 3 - i : i - 4];
          Cx f = wt * half / (2.0 * w);
          for (int p = 0; p <= pmax; ++p) {
            acc[size_t(p)] += f;
            f *= z;
          }
        }
        w_ref = track(w_ref, za + dz, ok);  // land on the piece endpoint
      }
    }
    *wend = w_ref;
    return acc;
  };

  int refine = 1;
  bool have_prev = false;
  Cx wend_prev;
  std::vector<Cx> prev;
  for (int d = 0; d <= opt.max_refine; ++d, refine *= 2) {
    Cx wend;
    bool ok = true;
    std::vector<Cx> next = level(refine, &wend, &ok);
    if (!ok) {
      have_prev = false;  // tracking was ambiguous: distrust this level entirely
      continue;
    }
    if (have_prev) {
      double diff = 0, mag = 0;
      for (int p = 0; p <= pmax; ++p) {
        diff = std::max(diff, std::abs(next[size_t(p)] - prev[size_t(p)]));
        mag = std::max(mag, std::abs(next[size_t(p)]));
      }
      if (diff <= opt.quad_tol * (1.0 + mag) &&
          std::abs(wend - wend_prev) <= 1e-9 * (1.0 + std::abs(wend))) {
        if (w_end) *w_end = wend;
        return next;
      }
    }
    prev = std::move(next);
    wend_prev = wend;
    have_prev = true;
  }
  throw std::runtime_error("integrate_polyline: refinement failed to settle");
}

/// Routing offset: the requested clearance, shrunk when cuts or the ray come closer
/// to each other than that.
inline double route_clearance(const CutSystem& cs, const PeriodOptions& opt) {
  double delta = opt.clearance * cs.scale;
  for (size_t i = 0; i < cs.cuts.size(); ++i) {
    for (size_t j = i + 1; j < cs.cuts.size(); ++j)
      delta = std::min(delta, 0.3 * geom::dist_seg_seg(cs.cuts[i].e1, cs.cuts[i].e2,
                                                       cs.cuts[j].e1, cs.cuts[j].e2));
    delta = std::min(delta, 0.3 * geom::dist_seg_seg(cs.cuts[i].e1, cs.cuts[i].e2, cs.ray_base,
                                                     cs.ray_far()));
  }
  return delta;
}

inline int winding_number(const std::vector<Cx>& closed, Cx p) {
  double total = 0;
  for (size_t i = 0; i + 1 < closed.size(); ++i)
    total += std::arg((closed[i + 1] - p) / (closed[i] - p));
  double turns = total / (2 * M_PI);
  int w = int(std::lround(turns));
  if (std::abs(turns - w) > 0.05)
    throw std::runtime_error("winding_number: point too close to the contour");
  return w;
}

/// Closed polyline realizing the cycle through cut j and the ray: it crosses cut j
/// once at its midpoint, crosses the ray once, and stays clear of everything else.
inline std::vector<Cx> b_loop(const CutSystem& cs, size_t j, const Router& router) {
  const Cut& cut = cs.cuts[j];
  Cx t = (cut.e2 - cut.e1) / std::abs(cut.e2 - cut.e1);
  Cx nrm = t * Cx(0, 1);
  Cx s1 = cut.mid() + router.delta * nrm;
  Cx s2 = cut.mid() - router.delta * nrm;

  // ray crossing point: walk out along the ray to a spot with good clearance
  Cx rnrm = cs.ray_dir * Cx(0, 1);
  double best = -1;
  Cx rc;
  for (int i = 1; i <= 64; ++i) {
    Cx cand = cs.ray_base + cs.ray_dir * (cs.scale * (0.15 + 0.045 * i));
    double clear = std::numeric_limits<double>::infinity();
    for (const Cut& c : cs.cuts) clear = std::min(clear, geom::dist_point_seg(cand, c.e1, c.e2));
    if (clear > best) {
      best = clear;
      rc = cand;
    }
  }
  Cx r1 = rc + router.delta * rnrm;
  Cx r2 = rc - router.delta * rnrm;

  std::vector<Cx> loop = router.route(s1, r1);
  loop.push_back(r2);  // hop across the ray
  std::vector<Cx> back = router.route(r2, s2);
  loop.insert(loop.end(), back.begin() + 1, back.end());
  loop.push_back(s1);  // hop across cut j
  return loop;
}

inline void check_b_loop_topology(const std::vector<Cx>& loop, const CutSystem& cs, size_t j) {
  for (size_t i = 0; i < cs.cuts.size(); ++i) {
    int w1 = winding_number(loop, cs.cuts[i].e1);
    int w2 = winding_number(loop, cs.cuts[i].e2);
    if (i == j) {
      if (std::abs(w1 - w2) != 1 || std::min(std::abs(w1), std::abs(w2)) != 0)
        throw std::runtime_error("b_loop: loop does not cross its own cut exactly once");
    } else if (w1 != 0 || w2 != 0) {
      throw std::runtime_error("b_loop: loop winds around a foreign cut");
    }
  }
  if (std::abs(winding_number(loop, cs.ray_base)) != 1)
    throw std::runtime_error("b_loop: loop does not cross the ray exactly once");
}

}  // namespace detail

/// Second-kind coefficients c_{k,1..g+k} of Omega^(k): the first k kill the positive
/// expansion powers below the leading one (triangular in the series s), the last g
/// are fixed by vanishing loop integrals around every cut (same matrix as the
/// first-kind normalization).  Returned row-major per k.
namespace detail {
struct SecondKind {
  std::vector<std::vector<Cx>> c;  // c[k][l-1] = c_{kl}, l = 1..g+k
};

inline SecondKind second_kind_coeffs(int g, int K, const std::vector<Cx>& s,
                                     const Eigen::MatrixXcd& rawA,
                                     const Eigen::PartialPivLU<Eigen::MatrixXcd>& luT) {
  SecondKind sk;
  sk.c.resize(size_t(K) + 1);
  for (int k = 0; k <= K; ++k) {
    std::vector<Cx> c(size_t(g + k), Cx(0));
    for (int jj = 1; jj <= k; ++jj) {  // kill z^{k-jj-1/2}: sum_{i=0..jj} c_i s_{jj-i} = 0
      Cx acc = s[size_t(jj)];
      for (int i = 1; i < jj; ++i) acc += c[size_t(i) - 1] * s[size_t(jj - i)];
      c[size_t(jj) - 1] = -acc;
    }
    // vanishing loop integrals: sum_{l=k+1}^{k+g} c_l RawA(g+k-l, j) = -known part;
    // with m = l - k the system matrix is rawA(g-m, j), the transpose of the
    // first-kind normalization matrix
    Eigen::VectorXcd rhs(g);
    for (int j = 1; j <= g; ++j) {
      Cx acc = rawA(g + k, j - 1);
      for (int l = 1; l <= k; ++l) acc += c[size_t(l) - 1] * rawA(g + k - l, j - 1);
      rhs(j - 1) = -acc;
    }
    Eigen::VectorXcd sol = luT.solve(rhs);
    for (int mth = 1; mth <= g; ++mth) c[size_t(k + mth) - 1] = sol(mth - 1);
    sk.c[size_t(k)] = std::move(c);
  }
  return sk;
}
}  // namespace detail

inline PeriodData periods(const SpectralCurve& curve, const CutSystem& cs, int K,
                          const PeriodOptions& opt = {}) {
  const int g = curve.g;
  if (int(cs.cuts.size()) != g) throw std::invalid_argument("periods: cut count != genus");
  if (K < 0) throw std::invalid_argument("periods: K must be >= 0");
  const int pmax = g + K;

  // raw loop integrals of z^p dz/(2w) around every cut
  Eigen::MatrixXcd rawA(pmax + 1, g);
  for (int j = 0; j < g; ++j) {
    std::vector<Cx> col = detail::cut_loop_integrals(curve, cs.cuts[size_t(j)], pmax, opt);
    for (int p = 0; p <= pmax; ++p) rawA(p, j) = col[size_t(p)];
  }

  // first-kind normalization: alpha * M = 2 pi i * Id with M(m-1,j-1) = rawA(g-m, j)
  Eigen::MatrixXcd M(g, g);
  for (int m = 1; m <= g; ++m)
    for (int j = 1; j <= g; ++j) M(m - 1, j - 1) = rawA(g - m, j - 1);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
  double cond = svd.singularValues()(0) / svd.singularValues()(g - 1);
  Eigen::PartialPivLU<Eigen::MatrixXcd> luT(M.transpose().eval());
  Eigen::MatrixXcd alpha = Cx(0, 2 * M_PI) * M.inverse();
  {
    Eigen::MatrixXcd resid = alpha * M - Cx(0, 2 * M_PI) * Eigen::MatrixXcd::Identity(g, g);
    if (resid.cwiseAbs().maxCoeff() > 1e-9 * 2 * M_PI)
      throw std::runtime_error("periods: loop-integral normalization residual too large (condition " +
                               std::to_string(cond) + ")");
  }

  // raw b-integrals along explicit loops through each cut and the ray
  detail::Router router(cs, detail::route_clearance(cs, opt));
  Eigen::MatrixXcd rawB(pmax + 1, g);
  for (int j = 0; j < g; ++j) {
    std::vector<Cx> loop = detail::b_loop(cs, size_t(j), router);
    detail::check_b_loop_topology(loop, cs, size_t(j));
    Cx seed = std::sqrt(eval_q(curve, loop.front()));
    std::vector<Cx> ints = detail::integrate_polyline(curve, loop, seed, pmax, opt, nullptr);
    for (int p = 0; p <= pmax; ++p) rawB(p, j) = ints[size_t(p)];
  }

  // orientation canonicalization: a negative-definite real part forces the diagonal
  // negative, so flip any b-cycle whose diagonal entry has positive real part
  Eigen::MatrixXcd Bslice(g, g);
  for (int m = 1; m <= g; ++m)
    for (int j = 0; j < g; ++j) Bslice(m - 1, j) = rawB(g - m, j);
  Eigen::MatrixXcd B = alpha * Bslice;
  for (int j = 0; j < g; ++j)
    if (B(j, j).real() > 0) {
      B.col(j) *= -1;
      rawB.col(j) *= -1;
    }

  // the routed loops realize each b-class only up to added a-cycles, which
  // shift b-periods by 2 pi i integers and show up as an asymmetry of B; the
  // defect must be integral (its real part must vanish), which certifies the
  // homology bookkeeping, and subtracting it restores a symplectic basis
  double bmag = B.cwiseAbs().maxCoeff();
  for (int i = 0; i < g; ++i)
    for (int j = i + 1; j < g; ++j) {
      Cx d = B(i, j) - B(j, i);
      double turns = d.imag() / (2 * M_PI);
      long n = std::lround(turns);
      if (std::abs(d.real()) > 1e-6 * (1.0 + bmag) || std::abs(turns - double(n)) > 1e-5)
        throw std::runtime_error("periods: b-loop asymmetry is not an integer multiple of 2 pi i");
      if (n != 0) {
        B(i, j) -= Cx(0, 2 * M_PI) * double(n);
        rawB.col(j) -= double(n) * rawA.col(i);
      }
    }

  bmag = B.cwiseAbs().maxCoeff();
  if ((B - B.transpose()).cwiseAbs().maxCoeff() > 1e-8 * bmag)
    throw std::runtime_error("periods: period matrix is not symmetric");
  {
    Eigen::MatrixXd reB = B.real();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (reB + reB.transpose()));
    if (es.eigenvalues().maxCoeff() >= 0)
      throw std::runtime_error("periods: real part of the period matrix is not negative definite");
  }

  // second-kind differentials and their periods
  int sterms = std::max(2 * K + 3, 2 * opt.tail_terms + 2);
  std::vector<Cx> s = detail::inv_sqrt_series(curve.q, sterms);
  detail::SecondKind sk = detail::second_kind_coeffs(g, K, s, rawA, luT);

  std::vector<Eigen::VectorXcd> V(size_t(K) + 1), V1(size_t(K) + 1);
  Eigen::MatrixXcd qreg(K + 1, K + 1);
  for (int k = 0; k <= K; ++k) {
    Eigen::VectorXcd v(g);
    for (int i = 0; i < g; ++i) {
      Cx acc = rawB(g + k, i);
      for (int l = 1; l <= g + k; ++l) acc += sk.c[size_t(k)][size_t(l) - 1] * rawB(g + k - l, i);
      v(i) = double(2 * k + 1) * acc;
    }
    V[size_t(k)] = v;
    Eigen::VectorXcd v1(g);
    for (int i = 0; i < g; ++i) {
      Cx acc(0);
      for (int m = 1; m <= std::min(g, k + 1); ++m) acc += alpha(i, m - 1) * s[size_t(k + 1 - m)];
      v1(i) = acc;
    }
    V1[size_t(k)] = v1;
    for (int i = 0; i <= K; ++i) {
      Cx acc = s[size_t(k + 1 + i)];
      for (int l = 1; l <= std::min(g + k, k + 1 + i); ++l)
        acc += sk.c[size_t(k)][size_t(l) - 1] * s[size_t(k + 1 + i - l)];
      qreg(k, i) = double(2 * k + 1) * acc;
    }
  }
  for (int k = 0; k <= K; ++k) {
    double rel = (V[size_t(k)] - V1[size_t(k)]).cwiseAbs().maxCoeff() /
                 (1.0 + V[size_t(k)].cwiseAbs().maxCoeff());
    if (rel > 1e-7)
      throw std::runtime_error("periods: second-kind periods disagree with the expansion route");
  }
  if ((qreg - qreg.transpose()).cwiseAbs().maxCoeff() > 1e-7 * (1.0 + qreg.cwiseAbs().maxCoeff()))
    throw std::runtime_error("periods: regular expansion coefficients are not symmetric");

  Eigen::VectorXcd varpi(g);
  for (int j = 0; j < g; ++j) varpi(j) = (j % 2 == 0) ? Cx(0, M_PI) : Cx(0);
  varpi += 0.5 * B * Eigen::VectorXcd::Ones(g);

  PeriodData pd;
  pd.g = g;
  pd.K = K;
  pd.alpha = std::move(alpha);
  pd.B = std::move(B);
  pd.V = std::move(V);
  pd.V_exp = std::move(V1);
  pd.qreg = std::move(qreg);
  pd.varpi = std::move(varpi);
  pd.cond_a = cond;
  return pd;
}

/// Reduce u modulo the lattice {2 pi i m + B n}: returns the remainder and fills m, n.
inline Eigen::VectorXcd lattice_reduce(const Eigen::VectorXcd& u, const Eigen::MatrixXcd& B,
                                       Eigen::VectorXi* m_out, Eigen::VectorXi* n_out) {
  const int g = int(u.size());
  Eigen::MatrixXd reB = B.real();
  Eigen::VectorXd n0d = reB.fullPivLu().solve(u.real());
  Eigen::VectorXi n_base(g);
  for (int i = 0; i < g; ++i) n_base(i) = int(std::lround(n0d(i)));
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXcd best_r;
  Eigen::VectorXi best_n, best_m;
  std::vector<int> shift(size_t(g), -1);
  while (true) {
    Eigen::VectorXi n(g);
    for (int i = 0; i < g; ++i) n(i) = n_base(i) + shift[size_t(i)];
    Eigen::VectorXcd r = u - B * n.cast<double>().cast<Cx>();
    Eigen::VectorXi m(g);
    for (int i = 0; i < g; ++i) m(i) = int(std::lround(r(i).imag() / (2 * M_PI)));
    for (int i = 0; i < g; ++i) r(i) -= Cx(0, 2 * M_PI) * double(m(i));
    if (r.norm() < best) {
      best = r.norm();
      best_r = r;
      best_n = n;
      best_m = m;
    }
    int i = 0;
    while (i < g && shift[size_t(i)] == 1) {
      shift[size_t(i)] = -1;
      ++i;
    }
    if (i == g) break;
    ++shift[size_t(i)];
  }
  if (m_out) *m_out = best_m;
  if (n_out) *n_out = best_n;
  return best_r;
}

inline DivisorData divisor_and_u0(const MatrixPolyG& wp, const SpectralCurve& curve,
                                  const CutSystem& cs, const PeriodData& pd,
                                  const PeriodOptions& opt = {}) {
  const int g = curve.g;
  // divisor points: zeros of b with w = -a
  std::vector<Cx> basc(size_t(g) + 1);
  basc[size_t(g)] = Cx(1);
  for (int i = 1; i <= g; ++i) basc[size_t(g - i)] = wp.b[size_t(i) - 1];
  std::vector<Cx> zroots = find_roots(basc);
  for (size_t i = 0; i < zroots.size(); ++i)
    for (size_t j = i + 1; j < zroots.size(); ++j)
      if (std::abs(zroots[i] - zroots[j]) < 1e-8 * cs.scale)
        throw std::invalid_argument("divisor_and_u0: divisor points collide");
  double delta = detail::route_clearance(cs, opt);
  for (const Cx& z : zroots) {
    for (const Cx& e : curve.branch_points)
      if (std::abs(z - e) < 1e-6 * cs.scale)
        throw std::invalid_argument("divisor_and_u0: divisor point at a branch point");
    for (const Cut& c : cs.cuts)
      if (geom::dist_point_seg(z, c.e1, c.e2) < 2 * delta)
        throw std::invalid_argument("divisor_and_u0: divisor point too close to a cut");
    if (geom::dist_point_seg(z, cs.ray_base, cs.ray_far()) < 2 * delta)
      throw std::invalid_argument("divisor_and_u0: divisor point too close to the ray");
  }
  std::vector<Cx> wvals;
  for (const Cx& z : zroots) {
    Cx w = -eval_a(wp, z);
    if (std::abs(w * w - eval_q(curve, z)) > 1e-8 * (1.0 + std::abs(w * w)))
      throw std::invalid_argument("divisor_and_u0: matrix data is inconsistent (w^2 != Q at a zero of b)");
    wvals.push_back(w);
  }

  // base point of the Abel map: track from far out on the sheet where w has the
  // principal large-z expansion, entering along the direction opposite the ray
  double emax = 0;
  for (const Cx& e : curve.branch_points) emax = std::max(emax, std::abs(e));
  Cx zfar = -cs.ray_dir * (opt.zfar_factor * std::max(emax, 1e-3));
  Cx zeta = std::exp(-0.5 * std::log(zfar));  // principal 1/sqrt(z_far)
  std::vector<Cx> u = detail::sqrt_series(curve.q, opt.tail_terms + 1);
  Cx useries(0);
  {
    Cx zp(1);
    for (int l = 0; l <= opt.tail_terms; ++l) {
      useries += u[size_t(l)] * zp;
      zp *= zeta * zeta;
    }
  }
  Cx wfar = std::pow(zeta, -(2 * g + 1)) * useries;
  if (std::abs(wfar * wfar - eval_q(curve, zfar)) > 1e-8 * std::abs(wfar * wfar))
    throw std::runtime_error("divisor_and_u0: expansion seed does not satisfy the curve");

  // tail of the Abel map from infinity to z_far, in the local coordinate
  int ktail = opt.tail_terms;
  std::vector<Cx> s = detail::inv_sqrt_series(curve.q, ktail + 2);
  Eigen::VectorXcd tail = Eigen::VectorXcd::Zero(g);
  for (int k = 0; k <= ktail; ++k) {
    Eigen::VectorXcd vk(g);
    for (int i = 0; i < g; ++i) {
      Cx acc(0);
      for (int m = 1; m <= std::min(g, k + 1); ++m) acc += pd.alpha(i, m - 1) * s[size_t(k + 1 - m)];
      vk(i) = acc;
    }
    tail -= vk * (std::pow(zeta, 2 * k + 1) / double(2 * k + 1));
  }

  detail::Router router(cs, delta);
  Eigen::VectorXcd aj = Eigen::VectorXcd::Zero(g);
  for (size_t jroot = 0; jroot < zroots.size(); ++jroot) {
    std::vector<Cx> path = router.route(zfar, zroots[jroot]);
    Cx wend;
    std::vector<Cx> ints =
        detail::integrate_polyline(curve, path, wfar, g - 1, opt, &wend);
    Eigen::VectorXcd leg(g);
    for (int i = 0; i < g; ++i) {
      Cx acc(0);
      for (int m = 1; m <= g; ++m) acc += pd.alpha(i, m - 1) * ints[size_t(g - m)];
      leg(i) = acc;
    }
    Cx wj = wvals[jroot];
    double ref = std::max(std::abs(wj), std::abs(wend));
    if (std::abs(wend - wj) <= 1e-6 * ref) {
      aj += tail + leg;
    } else if (std::abs(wend + wj) <= 1e-6 * ref) {
      aj -= tail + leg;  // the tracked path ended on the other sheet
    } else {
      throw std::runtime_error("divisor_and_u0: cannot identify the sheet of a divisor point");
    }
  }

  DivisorData dd;
  dd.z = std::move(zroots);
  dd.w = std::move(wvals);
  dd.aj = aj;
  dd.u0_raw = aj - pd.varpi;
  dd.u0 = lattice_reduce(dd.u0_raw, pd.B, &dd.lattice_m, &dd.lattice_n);
  return dd;
}

/// Result of aligning computed period data with tabulated reference values.
struct MatchResult {
  std::vector<int> perm;   // perm[new] = old cut label (0-based)
  std::vector<int> sign;   // sign[new] = orientation factor applied to the pair
  Eigen::MatrixXi shift;   // symmetric integer matrix removed from Im B / (2 pi)
  double residual = 0;     // max entrywise |B - B_ref| after the alignment
  bool relabeled = false;  // true when the relabeling is not the identity
};

/// Align a period computation with a reference period matrix by relabeling cuts.
/// The admissible changes of basis that keep the diagonal convention are signed
/// permutations of the cut labels (each pair a_i, b_i may be reversed together)
/// combined with integer shifts B -> B - 2 pi i N for symmetric N, which absorb
/// the loop-homotopy choices a tabulation may have baked in.  All permutations
/// are searched for g <= 6, only the dihedral ones of the angular cut order
/// beyond that.  Reversing every pair at once leaves B unchanged, so when vref
/// (a reference for V[0]) is given it picks the overall sign.  Applies the
/// winning relabeling to pd (and dd if given) and returns what was done.
inline MatchResult match_reference(PeriodData& pd, DivisorData* dd, const Eigen::MatrixXcd& Bref,
                                   const Eigen::VectorXcd* vref = nullptr) {
  const int g = pd.g;
  std::vector<std::vector<int>> perms;
  if (g <= 6) {
    std::vector<int> p(size_t(g), 0);
    for (int i = 0; i < g; ++i) p[size_t(i)] = i;
    do perms.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
  } else {
    for (int rot = 0; rot < g; ++rot) {
      std::vector<int> p(size_t(g), 0), q(size_t(g), 0);
      for (int i = 0; i < g; ++i) p[size_t(i)] = (i + rot) % g;
      for (int i = 0; i < g; ++i) q[size_t(i)] = (2 * g - 1 - i + rot) % g;
      perms.push_back(p);
      perms.push_back(q);
    }
  }
  double best = std::numeric_limits<double>::infinity();
  double best_vdist = std::numeric_limits<double>::infinity();
  std::vector<int> bestp, bests;
  Eigen::MatrixXi bestN;
  for (const auto& p : perms) {
    for (unsigned mask = 0; mask < (1u << g); ++mask) {
      std::vector<int> s(size_t(g), 1);
      for (int i = 0; i < g; ++i)
        if (mask & (1u << i)) s[size_t(i)] = -1;
      Eigen::MatrixXcd Bp(g, g);
      for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j)
          Bp(i, j) = double(s[size_t(i)] * s[size_t(j)]) * pd.B(p[size_t(i)], p[size_t(j)]);
      Eigen::MatrixXi N(g, g);
      for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j)
          N(i, j) = int(std::lround((Bp(i, j).imag() - Bref(i, j).imag()) / (2 * M_PI)));
      if ((N - N.transpose()).cwiseAbs().maxCoeff() != 0) continue;  // not a basis change
      double res = 0;
      for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j)
          res = std::max(res, std::abs(Bp(i, j) - Cx(0, 2 * M_PI) * double(N(i, j)) - Bref(i, j)));
      double vdist = 0;  // breaks the overall-sign tie, harmless otherwise
      if (vref)
        for (int i = 0; i < g; ++i)
          vdist = std::max(vdist, std::abs(double(s[size_t(i)]) * pd.V[0](p[size_t(i)]) - (*vref)(i)));
      else
        vdist = s[0] < 0 ? 1 : 0;
      if (res < best - 1e-12 || (res < best + 1e-12 && vdist < best_vdist)) {
        best = res;
        best_vdist = vdist;
        bestp = p;
        bests = s;
        bestN = N;
      }
    }
  }
  if (bestp.empty()) throw std::runtime_error("match_reference: no admissible relabeling");

  // apply: relabel, remove the integer shift, recompute varpi and u0
  Eigen::MatrixXcd Bp(g, g);
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j)
      Bp(i, j) = double(bests[size_t(i)] * bests[size_t(j)]) *
                     pd.B(bestp[size_t(i)], bestp[size_t(j)]) -
                 Cx(0, 2 * M_PI) * double(bestN(i, j));
  pd.B = Bp;
  auto relabel_vec = [&](const Eigen::VectorXcd& v) {
    Eigen::VectorXcd r(g);
    for (int i = 0; i < g; ++i) r(i) = double(bests[size_t(i)]) * v(bestp[size_t(i)]);
    return r;
  };
  for (auto& v : pd.V) v = relabel_vec(v);
  for (auto& v : pd.V_exp) v = relabel_vec(v);
  Eigen::MatrixXcd alpha_p(g, g);
  for (int i = 0; i < g; ++i)
    alpha_p.row(i) = double(bests[size_t(i)]) * pd.alpha.row(bestp[size_t(i)]);
  pd.alpha = alpha_p;
  Eigen::VectorXcd varpi(g);
  for (int j = 0; j < g; ++j) varpi(j) = (j % 2 == 0) ? Cx(0, M_PI) : Cx(0);
  pd.varpi = varpi + 0.5 * pd.B * Eigen::VectorXcd::Ones(g);
  if (dd) {
    dd->aj = relabel_vec(dd->aj);
    dd->u0_raw = dd->aj - pd.varpi;
    dd->u0 = lattice_reduce(dd->u0_raw, pd.B, &dd->lattice_m, &dd->lattice_n);
  }

  MatchResult mr;
  mr.perm = bestp;
  mr.sign = bests;
  mr.shift = bestN;
  mr.residual = best;
  mr.relabeled = false;
  for (int i = 0; i < g; ++i)
    if (bestp[size_t(i)] != i || bests[size_t(i)] != 1) mr.relabeled = true;
  return mr;
}

}  // namespace kdvtau
