#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "kdvtau/resolvent.hpp"
#include "kdvtau/roots.hpp"

namespace kdvtau {

/// Raised when the spectral curve degenerates (two branch points collide).
struct DoublePointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Traceless 2x2 matrix polynomial [[a, b], [c, -a]] with deg a <= g-1, b monic of
/// degree g, c monic of degree g+1.  Coefficients are stored top-down: a[i-1] is the
/// coefficient of z^{g-i} in a(z), and likewise for b and c after their leading 1.
struct MatrixPolyG {
  int g = 0;
  std::vector<Cx> a, b, c;  // sizes g, g, g+1
};

inline MatrixPolyG matrix_poly(int g, std::vector<Cx> a, std::vector<Cx> b, std::vector<Cx> c) {
  if (g < 1) throw std::invalid_argument("matrix_poly: genus must be >= 1");
  if (a.size() != size_t(g) || b.size() != size_t(g) || c.size() != size_t(g) + 1)
    throw std::invalid_argument("matrix_poly: coefficient counts must be g, g, g+1");
  return MatrixPolyG{g, std::move(a), std::move(b), std::move(c)};
}

/// Truncate series initial data at the g-th term and clear denominators with z^g:
/// the series coefficients a_i, b_i, c_i become the polynomial coefficients verbatim.
inline MatrixPolyG matrix_poly(const InitialData& d, int g) {
  if (g < 1) throw std::invalid_argument("matrix_poly: genus must be >= 1");
  if (d.depth && *d.depth < g + 1) throw TruncationError(-(g + 1));
  std::vector<Cx> a(size_t(g), Cx(0)), b(size_t(g), Cx(0)), c(size_t(g) + 1, Cx(0));
  for (int i = 1; i <= g; ++i) {
    a[size_t(i) - 1] = rat_to_double(d.at(d.a, size_t(i)));
    b[size_t(i) - 1] = rat_to_double(d.at(d.b, size_t(i)));
  }
  for (int i = 1; i <= g + 1; ++i) c[size_t(i) - 1] = rat_to_double(d.at(d.c, size_t(i)));
  return MatrixPolyG{g, std::move(a), std::move(b), std::move(c)};
}

namespace detail {

inline Cx eval_monic(const std::vector<Cx>& tail, Cx z) {  // z^n + tail[0] z^{n-1} + ...
  Cx v(1);
  for (const Cx& t : tail) v = v * z + t;
  return v;
}

inline Cx eval_desc(const std::vector<Cx>& coef, Cx z) {  // coef[0] z^{n-1} + ... + coef[n-1]
  Cx v(0);
  for (const Cx& t : coef) v = v * z + t;
  return v;
}

/// Product of two descending coefficient arrays (full arrays, leading term included).
inline std::vector<Cx> poly_mul_desc(const std::vector<Cx>& p, const std::vector<Cx>& q) {
  if (p.empty() || q.empty()) return {};
  std::vector<Cx> r(p.size() + q.size() - 1, Cx(0));
  for (size_t i = 0; i < p.size(); ++i)
    for (size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
  return r;
}

}  // namespace detail

inline Cx eval_a(const MatrixPolyG& w, Cx z) { return detail::eval_desc(w.a, z); }
inline Cx eval_b(const MatrixPolyG& w, Cx z) { return detail::eval_monic(w.b, z); }
inline Cx eval_c(const MatrixPolyG& w, Cx z) { return detail::eval_monic(w.c, z); }

/// Coefficients q_1..q_{2g+1} of Q(z) = -det W(z) = a^2 + bc = z^{2g+1} + q_1 z^{2g} + ...
inline std::vector<Cx> q_coefficients(const MatrixPolyG& w) {
  std::vector<Cx> bf(w.b.size() + 1), cf(w.c.size() + 1);
  bf[0] = Cx(1);
  std::copy(w.b.begin(), w.b.end(), bf.begin() + 1);
  cf[0] = Cx(1);
  std::copy(w.c.begin(), w.c.end(), cf.begin() + 1);
  std::vector<Cx> q = detail::poly_mul_desc(bf, cf);  // degree 2g+1, size 2g+2
  if (!w.a.empty()) {
    std::vector<Cx> aa = detail::poly_mul_desc(w.a, w.a);  // degree 2g-2, size 2g-1
    for (size_t i = 0; i < aa.size(); ++i) q[q.size() - aa.size() + i] += aa[i];
  }
  q.erase(q.begin());  // drop the leading 1
  return q;
}

/// The g+1 Casimirs of the degree-counting Poisson structure restricted to the
/// g-truncated coefficient algebra: q_1 = b_1 + c_1 and
/// q_{g+k+1} = sum_{i=k}^{g} (a_i a_{g+k-i} + b_i c_{g+k+1-i}), k = 1..g.
/// They coincide with the matching coefficients of -det W.
inline std::vector<Cx> casimirs_g(const MatrixPolyG& w) {
  const int g = w.g;
  std::vector<Cx> cas;
  cas.reserve(size_t(g) + 1);
  cas.push_back(w.b[0] + w.c[0]);
  for (int k = 1; k <= g; ++k) {
    Cx s(0);
    for (int i = k; i <= g; ++i)
      s += w.a[size_t(i) - 1] * w.a[size_t(g + k - i) - 1] +
           w.b[size_t(i) - 1] * w.c[size_t(g + k + 1 - i) - 1];
    cas.push_back(s);
  }
  return cas;
}

/// Hyperelliptic curve w^2 = Q(z) = z^{2g+1} + q_1 z^{2g} + ... + q_{2g+1} with one
/// branch point at infinity and 2g+1 finite, pairwise distinct branch points.
struct SpectralCurve {
  int g = 0;
  std::vector<Cx> q;              // q[j-1] = q_j
  std::vector<Cx> branch_points;  // the 2g+1 roots of Q
};

inline Cx eval_q(const SpectralCurve& c, Cx z) { return detail::eval_monic(c.q, z); }

inline SpectralCurve spectral_curve(int g, std::vector<Cx> q) {
  if (g < 1) throw std::invalid_argument("spectral_curve: genus must be >= 1");
  if (q.size() != 2 * size_t(g) + 1)
    throw std::invalid_argument("spectral_curve: need 2g+1 coefficients");
  std::vector<Cx> asc(q.size() + 1);
  asc.back() = Cx(1);
  for (size_t j = 0; j < q.size(); ++j) asc[q.size() - 1 - j] = q[j];
  std::vector<Cx> roots = find_roots(asc);

  double scale = 1.0;
  for (const Cx& r : roots) scale = std::max(scale, std::abs(r));
  double sep = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < roots.size(); ++i)
    for (size_t j = i + 1; j < roots.size(); ++j)
      sep = std::min(sep, std::abs(roots[i] - roots[j]));
  if (!(sep > 1e-6 * scale))
    throw DoublePointError("spectral_curve: branch points collide (separation " +
                           std::to_string(sep) + "), curve is singular");

  // Root-quality gate: elementary symmetric functions must reproduce q_1 and q_{2g+1}.
  Cx sum(0), prod(1);
  for (const Cx& r : roots) {
    sum += r;
    prod *= r;
  }
  double qs = std::max({1.0, std::abs(q.front()), std::abs(q.back())});
  if (std::abs(sum + q.front()) > 1e-10 * std::max(qs, scale * roots.size()) ||
      std::abs(prod + q.back()) > 1e-10 * std::max(qs, std::pow(scale, double(roots.size()))))
    throw RootError("spectral_curve: root set inconsistent with coefficients");

  return SpectralCurve{g, std::move(q), std::move(roots)};
}

inline SpectralCurve spectral_curve(const MatrixPolyG& w) {
  return spectral_curve(w.g, q_coefficients(w));
}

// --- planar geometry used by cut construction and period paths ---

namespace geom {

inline double cross(Cx u, Cx v) { return u.real() * v.imag() - u.imag() * v.real(); }

inline double dist_point_seg(Cx p, Cx a, Cx b) {
  Cx ab = b - a;
  double l2 = std::norm(ab);
  if (l2 == 0.0) return std::abs(p - a);
  double t = ((p - a) * std::conj(ab)).real() / l2;
  t = std::clamp(t, 0.0, 1.0);
  return std::abs(p - (a + t * ab));
}

inline bool segs_properly_cross(Cx a, Cx b, Cx c, Cx d) {
  double o1 = cross(b - a, c - a), o2 = cross(b - a, d - a);
  double o3 = cross(d - c, a - c), o4 = cross(d - c, b - c);
  return ((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0));
}

/// Minimum distance between closed segments [a,b] and [c,d]; zero when they cross.
inline double dist_seg_seg(Cx a, Cx b, Cx c, Cx d) {
  if (segs_properly_cross(a, b, c, d)) return 0.0;
  return std::min(std::min(dist_point_seg(c, a, b), dist_point_seg(d, a, b)),
                  std::min(dist_point_seg(a, c, d), dist_point_seg(b, c, d)));
}

}  // namespace geom

/// A finite branch cut: the straight segment joining two branch points.
struct Cut {
  Cx e1, e2;
  Cx mid() const { return (e1 + e2) / 2.0; }
};

/// Cut system: g pairwise disjoint finite cuts plus a ray to infinity from the
/// remaining branch point.  Cuts are sorted by the angle of their midpoints; this
/// ordering is the homology labeling (a_i loops around cut i, b_i crosses a_i and
/// the ray).
struct CutSystem {
  std::vector<Cut> cuts;
  Cx ray_base;
  Cx ray_dir;     // unit vector
  double scale;   // configuration diameter
  /// Far endpoint standing in for infinity in geometric predicates.
  Cx ray_far() const { return ray_base + ray_dir * (1e3 * scale); }
};

namespace detail {

/// Minimum-total-length perfect pairing of pts (even count) by subset DP.
/// Euclidean minimality makes the result non-crossing for points in general position.
inline std::vector<std::array<int, 2>> min_length_pairing(const std::vector<Cx>& pts) {
  const int n = int(pts.size());
  if (n % 2) throw std::logic_error("min_length_pairing: odd point count");
  if (n > 24) throw std::runtime_error("min_length_pairing: too many branch points");
  const size_t full = size_t(1) << n;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> f(full, inf);
  std::vector<int> choice(full, -1);
  f[0] = 0.0;
  for (size_t s = 1; s < full; ++s) {
    int i = 0;
    while (!(s >> i & 1)) ++i;
    for (int j = i + 1; j < n; ++j) {
      if (!(s >> j & 1)) continue;
      size_t s2 = s & ~(size_t(1) << i) & ~(size_t(1) << j);
      if (f[s2] == inf) continue;
      double cost = f[s2] + std::abs(pts[size_t(i)] - pts[size_t(j)]);
      if (cost < f[s]) {
        f[s] = cost;
        choice[s] = j;
      }
    }
  }
  std::vector<std::array<int, 2>> pairs;
  size_t s = full - 1;
  while (s) {
    int i = 0;
    while (!(s >> i & 1)) ++i;
    int j = choice[s];
    if (j < 0) throw std::runtime_error("min_length_pairing: no pairing found");
    pairs.push_back({i, j});
    s = s & ~(size_t(1) << i) & ~(size_t(1) << j);
  }
  return pairs;
}

}  // namespace detail

/// Pair 2g branch points into g disjoint cuts of minimum total length, take the
/// leftover point farthest from those cuts as the base of the ray to infinity, and
/// point the ray along the direction of maximum clearance from the cuts.
/// Ties in the leftover choice prefer the real axis and then the rightmost point,
/// so three collinear real points get the cut between the two left ones and the
/// ray from the rightmost.
inline CutSystem build_cuts(const SpectralCurve& curve) {
  const std::vector<Cx>& pts = curve.branch_points;
  const int n = int(pts.size());

  double scale = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) scale = std::max(scale, std::abs(pts[size_t(i)] - pts[size_t(j)]));
  if (!(scale > 0)) throw std::runtime_error("build_cuts: degenerate configuration");
  const double tie = 1e-9 * scale;

  struct Option {
    int leftover = -1;
    std::vector<Cut> cuts;
    double d = -1;  // distance from leftover to the pairing
    Cx ray_dir;
  };
  auto cuts_admissible = [&](const std::vector<Cut>& cuts) {
    // pairwise disjoint, and clear of every branch point not among their endpoints
    for (size_t i = 0; i < cuts.size(); ++i) {
      for (size_t j = i + 1; j < cuts.size(); ++j)
        if (geom::dist_seg_seg(cuts[i].e1, cuts[i].e2, cuts[j].e1, cuts[j].e2) < 1e-9 * scale)
          return false;
      for (int p = 0; p < n; ++p) {
        Cx z = pts[size_t(p)];
        if (std::abs(z - cuts[i].e1) < 1e-12 * scale || std::abs(z - cuts[i].e2) < 1e-12 * scale)
          continue;
        if (geom::dist_point_seg(z, cuts[i].e1, cuts[i].e2) < 1e-9 * scale) return false;
      }
    }
    return true;
  };
  // Ray direction from `base`: maximize clearance from the cuts, with a small outward
  // bias (away from the centroid of the other branch points) breaking the ties that
  // occur when every escape direction clears the cuts equally well.
  auto best_ray = [&](Cx base, const std::vector<Cut>& cuts, Cx outward, double* clearance) {
    const int ndir = 1440;
    double bestscore = -std::numeric_limits<double>::infinity();
    Cx bestdir(1, 0);
    for (int k = 0; k < ndir; ++k) {
      double phi = 2 * M_PI * k / ndir;
      Cx dir(std::cos(phi), std::sin(phi));
      Cx far = base + dir * (1e3 * scale);
      double clear = std::numeric_limits<double>::infinity();
      for (const Cut& c : cuts) clear = std::min(clear, geom::dist_seg_seg(base, far, c.e1, c.e2));
      double score = clear + 1e-4 * scale * (dir.real() * outward.real() + dir.imag() * outward.imag());
      if (score > bestscore) {
        bestscore = score;
        bestdir = dir;
        *clearance = clear;
      }
    }
    return bestdir;
  };

  Option best;
  for (int r = 0; r < n; ++r) {
    std::vector<Cx> rest;
    for (int i = 0; i < n; ++i)
      if (i != r) rest.push_back(pts[size_t(i)]);
    std::vector<Cut> cuts;
    for (auto& pr : detail::min_length_pairing(rest))
      cuts.push_back(Cut{rest[size_t(pr[0])], rest[size_t(pr[1])]});
    if (!cuts_admissible(cuts)) continue;
    double d = std::numeric_limits<double>::infinity();
    for (const Cut& c : cuts) d = std::min(d, geom::dist_point_seg(pts[size_t(r)], c.e1, c.e2));
    if (!(d > 1e-7 * scale)) continue;  // leftover would sit on a cut
    Cx centroid(0);
    for (int i = 0; i < n; ++i)
      if (i != r) centroid += pts[size_t(i)];
    centroid /= double(n - 1);
    Cx outward = pts[size_t(r)] - centroid;
    outward = std::abs(outward) < 1e-12 * scale ? Cx(1, 0) : outward / std::abs(outward);
    double clearance = 0;
    Cx dir = best_ray(pts[size_t(r)], cuts, outward, &clearance);
    if (!(clearance > 1e-7 * scale)) continue;  // caged: every ray hits a cut
    bool better = false;
    if (best.leftover < 0 || d > best.d + tie) {
      better = true;
    } else if (d > best.d - tie) {
      double imr = std::abs(pts[size_t(r)].imag()), imb = std::abs(pts[size_t(best.leftover)].imag());
      if (imr < imb - tie)
        better = true;
      else if (imr < imb + tie && pts[size_t(r)].real() > pts[size_t(best.leftover)].real() + tie)
        better = true;
    }
    if (better) best = Option{r, std::move(cuts), d, dir};
  }
  if (best.leftover < 0)
    throw std::runtime_error("build_cuts: no branch point admits disjoint cuts and a clear ray");

  std::vector<Cut> cuts = std::move(best.cuts);
  std::sort(cuts.begin(), cuts.end(),
            [](const Cut& x, const Cut& y) { return std::arg(x.mid()) < std::arg(y.mid()); });
  return CutSystem{std::move(cuts), pts[size_t(best.leftover)], best.ray_dir, scale};
}

}  // namespace kdvtau
