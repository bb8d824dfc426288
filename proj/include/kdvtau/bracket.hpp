#pragma once

#include "kdvtau/gradedpoly.hpp"

namespace kdvtau {

/// Poisson bracket of two generators of the A/B/C algebra.
///
/// The table is the coefficient-wise content of the generating-series relations
///   {a(z), a(w)} = 0
///   {a(z), b(w)} = -(b(z) - b(w)) / (z - w)
///   {a(z), c(w)} =  (c(z) - c(w)) / (z - w) - b(z)
///   {b(z), b(w)} = 0
///   {b(z), c(w)} = -2 (a(z) - a(w)) / (z - w)
///   {c(z), c(w)} =  2 (a(z) - a(w))
/// with a(z) = sum a_i z^-i, b(z) = sum b_i z^-i, c(z) = sum c_i z^(1-i).
inline GradedPoly gen_bracket(uint32_t x, uint32_t y) {
  Fam fx = key_fam(x), fy = key_fam(y);
  uint32_t i = key_idx(x), j = key_idx(y);
  if (fx == Fam::U || fx == Fam::Q || fy == Fam::U || fy == Fam::Q)
    throw std::invalid_argument("gen_bracket: defined only on the a/b/c generators");
  // Reduce to the ordered cases via antisymmetry.
  if (fx > fy) return -gen_bracket(y, x);

  if (fx == Fam::A && fy == Fam::A) return GradedPoly();
  if (fx == Fam::A && fy == Fam::B) return GradedPoly::gen(GB(i + j - 1));
  if (fx == Fam::A && fy == Fam::C) {
    if (j == 1) return -GradedPoly::gen(GB(i));
    return -GradedPoly::gen(GC(i + j - 1));
  }
  if (fx == Fam::B && fy == Fam::B) return GradedPoly();
  if (fx == Fam::B && fy == Fam::C) {
    if (j == 1) return GradedPoly();
    return Rat(2) * GradedPoly::gen(GA(i + j - 2));
  }
  // C with C: only pairs involving c_1 survive.
  if (i >= 2 && j == 1) return Rat(2) * GradedPoly::gen(GA(i - 1));
  if (i == 1 && j >= 2) return Rat(-2) * GradedPoly::gen(GA(j - 1));
  return GradedPoly();
}

/// Bracket extended to polynomials by bilinearity and the Leibniz rule:
/// {f, g} = sum_{x,y} df/dx dg/dy {x, y}.
inline GradedPoly poly_bracket(const GradedPoly& f, const GradedPoly& g) {
  GradedPoly out;
  auto vf = f.vars();
  auto vg = g.vars();
  for (uint32_t x : vf) {
    GradedPoly fx = f.diff(x);
    for (uint32_t y : vg) {
      GradedPoly pb = gen_bracket(x, y);
      if (pb.is_zero()) continue;
      out += fx * g.diff(y) * pb;
    }
  }
  return out;
}

}  // namespace kdvtau
