#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include "kdvtau/rational.hpp"

namespace kdvtau {

using Cx = std::complex<double>;

struct RootError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline Cx horner(const std::vector<Cx>& c, Cx z) {
  Cx v(0);
  for (size_t k = c.size(); k-- > 0;) v = v * z + c[k];
  return v;
}

inline Cx horner_deriv(const std::vector<Cx>& c, Cx z) {
  Cx v(0);
  for (size_t k = c.size(); k-- > 1;) v = v * z + double(k) * c[k];
  return v;
}

/// Backward-error scale: |p(z)| below eps * sum |c_k||z|^k is numerically zero.
inline double residual_scale(const std::vector<Cx>& c, Cx z) {
  double s = 0, az = std::abs(z), zp = 1;
  for (const Cx& ck : c) {
    s += std::abs(ck) * zp;
    zp *= az;
  }
  return s;
}

}  // namespace detail

/// All complex roots of c[0] + c[1] z + ... + c[d] z^d (multiplicities repeated).
/// Roots at the origin are split off exactly; the rest are found by simultaneous
/// Aberth-Ehrlich iteration from a detuned circle, then polished with Newton steps
/// while that improves the residual.  Throws RootError when the iteration stalls or
/// a residual fails its backward-error bound.
inline std::vector<Cx> find_roots(std::vector<Cx> c, double tol = 1e-13) {
  while (!c.empty() && std::abs(c.back()) == 0.0) c.pop_back();
  if (c.size() < 2) throw std::invalid_argument("find_roots: degree must be >= 1");

  std::vector<Cx> roots;
  size_t nz = 0;
  while (nz < c.size() - 1 && std::abs(c[nz]) == 0.0) ++nz;
  roots.assign(nz, Cx(0, 0));
  c.erase(c.begin(), c.begin() + long(nz));
  const size_t d = c.size() - 1;
  if (d == 0) return roots;

  for (Cx& ck : c) ck /= c.back();

  // initial guesses from the Newton polygon: the upper convex hull of the points
  // (k, log|c_k|) has one edge per root-modulus cluster, with slope = -log radius
  // and horizontal extent = cluster size.  Each cluster starts evenly spread on
  // its circle, angles detuned so no symmetry of the polynomial is shared.
  std::vector<Cx> z(d);
  std::vector<size_t> hull;
  {
    std::vector<double> y(d + 1);
    for (size_t k = 0; k <= d; ++k)
      y[k] = c[k] == Cx(0) ? -std::numeric_limits<double>::infinity()
                           : std::log(std::abs(c[k]));
    for (size_t k = 0; k <= d; ++k) {
      if (!std::isfinite(y[k])) continue;
      while (hull.size() >= 2) {
        size_t k1 = hull[hull.size() - 2], k2 = hull.back();
        if ((y[k2] - y[k1]) * double(k - k1) <= (y[k] - y[k1]) * double(k2 - k1))
          hull.pop_back();
        else
          break;
      }
      hull.push_back(k);
    }
    size_t idx = 0;
    for (size_t e = 0; e + 1 < hull.size(); ++e) {
      size_t k1 = hull[e], k2 = hull[e + 1];
      double r = std::exp((y[k1] - y[k2]) / double(k2 - k1));
      for (size_t m = 0; m < k2 - k1; ++m, ++idx) {
        double th = 2.0 * M_PI * (double(m) + 0.354) / double(k2 - k1) +
                    0.618 + 0.7632 * double(e);
        double rr = r * (1.0 + 0.04 * std::cos(7.3 * double(idx) + 1.1));
        z[idx] = rr * Cx(std::cos(th), std::sin(th));
      }
    }
  }
  const std::vector<Cx> z0 = z;

  bool settled = false;
  for (int iter = 0; iter < 500 && !settled; ++iter) {
    settled = true;
    for (size_t i = 0; i < d; ++i) {
      if (!std::isfinite(z[i].real()) || !std::isfinite(z[i].imag())) {
        // diverged iterate: restart it near its launch circle, rotated so the
        // retry does not retrace the path that escaped
        z[i] = z0[i] * Cx(std::cos(0.9 * (iter + 1)), std::sin(0.9 * (iter + 1)));
        settled = false;
        continue;
      }
      Cx p = detail::horner(c, z[i]);
      if (std::abs(p) <= 1e-16 * detail::residual_scale(c, z[i])) continue;
      Cx pd = detail::horner_deriv(c, z[i]);
      if (pd == Cx(0)) {  // stationary start: nudge off the critical point
        z[i] += Cx(1e-6 * (1 + std::abs(z[i])), 1e-6);
        settled = false;
        continue;
      }
      Cx ratio = p / pd;
      Cx s(0);
      for (size_t j = 0; j < d; ++j)
        if (j != i) s += 1.0 / (z[i] - z[j]);
      Cx denom = Cx(1) - ratio * s;
      Cx step = denom == Cx(0) ? ratio : ratio / denom;
      z[i] -= step;
      if (!(std::abs(step) <= tol * (1.0 + std::abs(z[i])))) settled = false;
    }
  }
  if (!settled) throw RootError("find_roots: Aberth iteration did not converge");

  for (size_t i = 0; i < d; ++i) {  // Newton polish, kept only while it helps
    for (int it = 0; it < 4; ++it) {
      Cx p = detail::horner(c, z[i]);
      Cx pd = detail::horner_deriv(c, z[i]);
      if (pd == Cx(0)) break;
      Cx cand = z[i] - p / pd;
      if (std::abs(detail::horner(c, cand)) < std::abs(p))
        z[i] = cand;
      else
        break;
    }
    if (!(std::abs(detail::horner(c, z[i])) <= 1e-10 * detail::residual_scale(c, z[i])))
      throw RootError("find_roots: residual check failed");
  }

  roots.insert(roots.end(), z.begin(), z.end());
  return roots;
}

/// log2 |x| of an exact rational, accurate to double precision even when x itself
/// is far outside double range.
inline double log2_abs(const Rat& x) {
  if (x == 0) return -std::numeric_limits<double>::infinity();
  signed long en = 0, ed = 0;
  double mn = mpz_get_d_2exp(&en, x.get_num_mpz_t());
  double md = mpz_get_d_2exp(&ed, x.get_den_mpz_t());
  return (std::log2(std::abs(mn)) + double(en)) - (std::log2(md) + double(ed));
}

/// Roots of a polynomial with exact rational coefficients.  The variable is rescaled
/// by a power of two chosen from the end-coefficient ratio (the geometric mean of the
/// root moduli) and the whole polynomial is shifted to unit magnitude, all exactly,
/// so coefficient ranges far beyond double precision survive the conversion.
inline std::vector<Cx> find_roots(const std::vector<Rat>& p) {
  size_t n = p.size();
  while (n > 0 && p[n - 1] == 0) --n;
  if (n < 2) throw std::invalid_argument("find_roots: degree must be >= 1");
  size_t lo = 0;
  while (p[lo] == 0) ++lo;

  long j = 0;
  if (lo < n - 1) j = std::lround((log2_abs(p[lo]) - log2_abs(p[n - 1])) / double(n - 1 - lo));

  double mx = -std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < n; ++k)
    if (p[k] != 0) mx = std::max(mx, log2_abs(p[k]) + double(j) * double(k));
  long shift = std::lround(mx);

  std::vector<Cx> c(n, Cx(0, 0));
  for (size_t k = 0; k < n; ++k) {
    if (p[k] == 0) continue;
    long e = j * long(k) - shift;
    Rat s = p[k];
    if (e >= 0)
      mpq_mul_2exp(s.get_mpq_t(), s.get_mpq_t(), static_cast<unsigned long>(e));
    else
      mpq_div_2exp(s.get_mpq_t(), s.get_mpq_t(), static_cast<unsigned long>(-e));
    c[k] = Cx(rat_to_double(s), 0.0);
  }

  std::vector<Cx> r = find_roots(c);
  double lam = std::exp2(double(j));
  for (Cx& z : r) z *= lam;
  return r;
}

}  // namespace kdvtau
