#pragma once

#include <ostream>
#include <random>
#include <vector>

#include "kdvtau/airy.hpp"
#include "kdvtau/npoint.hpp"
#include "kdvtau/resolvent.hpp"

// Re-runnable exact identity suites.  Each prints one line per sub-check to the
// given stream and returns whether everything held; the command-line driver and
// the acceptance gate both call these so there is a single source of truth for
// what "the symbolic layer is healthy" means.

namespace kdvtau {

namespace detail {

inline bool suite_note(std::ostream& os, const char* name, bool ok) {
  os << "  " << (ok ? "ok  " : "FAIL") << "  " << name << '\n';
  return ok;
}

}  // namespace detail

/// The zeroth and first flows act on the low generators exactly as displayed.
inline bool fields_suite(std::ostream& os) {
  auto g = [](uint32_t k) { return GradedPoly::gen(k); };
  auto c = [](long n, long d = 1) { return GradedPoly(Rat(n, d)); };
  GradedPoly a1 = g(GA(1)), a2 = g(GA(2)), a3 = g(GA(3));
  GradedPoly b1 = g(GB(1)), b2 = g(GB(2)), b3 = g(GB(3)), b4 = g(GB(4));
  GradedPoly c1 = g(GC(1)), c2 = g(GC(2)), c3 = g(GC(3)), c4 = g(GC(4));

  bool ok = true;
  ok &= detail::suite_note(os, "d0 a1", derivation(0, a1) == c2 - b2 + b1 * b1 - b1 * c1);
  ok &= detail::suite_note(os, "d0 b1", derivation(0, b1) == c(-2) * a1);
  ok &= detail::suite_note(os, "d0 c1", derivation(0, c1) == c(2) * a1);
  ok &= detail::suite_note(os, "d0 a2", derivation(0, a2) == c3 - b3 + b2 * (b1 - c1));
  ok &= detail::suite_note(os, "d0 b2", derivation(0, b2) == c(-2) * a2);
  ok &= detail::suite_note(os, "d0 c2", derivation(0, c2) == c(2) * (a2 + a1 * (c1 - b1)));

  ok &= detail::suite_note(
      os, "d1 a1",
      derivation(1, a1) == c3 - b3 + c(1, 2) * b2 * (c(3) * b1 - c1) -
                               c(1, 2) * c2 * (b1 + c1) - c(1, 2) * b1 * (b1 * b1 - c1 * c1));
  ok &= detail::suite_note(os, "d1 b1", derivation(1, b1) == c(-2) * a2 + a1 * (b1 + c1));
  ok &= detail::suite_note(os, "d1 c1", derivation(1, c1) == c(2) * a2 - a1 * (b1 + c1));
  ok &= detail::suite_note(
      os, "d1 a2",
      derivation(1, a2) == c4 - b4 + c(1, 2) * (b3 + c3) * (b1 - c1) -
                               c(1, 2) * b2 * (c(2) * c2 - c(2) * b2 + b1 * b1 - c1 * c1));
  ok &= detail::suite_note(os, "d1 b2",
                           derivation(1, b2) == c(-2) * a3 + a2 * (c1 - b1) + c(2) * a1 * b2);
  ok &= detail::suite_note(
      os, "d1 c2",
      derivation(1, c2) ==
          c(2) * a3 + a2 * (c1 - b1) - c(2) * a1 * b2 + a1 * (b1 * b1 - c1 * c1));
  return ok;
}

/// Lax equations d_n W = [U_n, W] through z^{-8} for the first three flows,
/// plus tracelessness of the U matrices.
inline bool lax_suite(std::ostream& os) {
  bool ok = true;
  for (int n = 0; n <= 2; ++n) {
    std::string name = "d_" + std::to_string(n) + " W = [U_" + std::to_string(n) +
                       ", W]   (to z^-8)";
    ok &= detail::suite_note(os, name.c_str(), lax_check(n, 8));
  }
  ok &= detail::suite_note(os, "tr U_n = 0, n <= 3", u_traceless_check(3));
  return ok;
}

/// Commutativity of the Hamiltonians and the Casimir property of b1 + c1.
inline bool hamiltonian_suite(std::ostream& os) {
  bool ok = true;
  for (int n = -1; n <= 4; ++n)
    for (int m = n; m <= 4; ++m) {
      std::string name = "{H_" + std::to_string(n) + ", H_" + std::to_string(m) + "} = 0";
      ok &= detail::suite_note(os, name.c_str(),
                               poly_bracket(hamiltonian(n), hamiltonian(m)).is_zero());
    }
  GradedPoly cas = GradedPoly::gen(GB(1)) + GradedPoly::gen(GC(1));
  bool kills = true;
  for (uint32_t i = 1; i <= 8; ++i) {
    kills &= poly_bracket(cas, GradedPoly::gen(GA(i))).is_zero();
    kills &= poly_bracket(cas, GradedPoly::gen(GB(i))).is_zero();
    kills &= poly_bracket(cas, GradedPoly::gen(GC(i))).is_zero();
  }
  ok &= detail::suite_note(os, "{b1 + c1, generators of index <= 8} = 0", kills);
  return ok;
}

/// Small rational data sets for the flow-identity fuzz: entries p/q with
/// |p| <= 6, 1 <= q <= 6, depth 4.  Deterministic.
inline std::vector<InitialData> fuzzed_initial_data(int count, unsigned seed = 417u) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> num(-6, 6), den(1, 6);
  std::vector<InitialData> out;
  for (int s = 0; s < count; ++s) {
    InitialData d;
    for (int i = 0; i < 4; ++i) {
      d.a.push_back(Rat(num(rng), den(rng)));
      d.b.push_back(Rat(num(rng), den(rng)));
      d.c.push_back(Rat(num(rng), den(rng)));
    }
    out.push_back(std::move(d));
  }
  return out;
}

/// u_{t1} = 3 u u_x + (1/4) u_xxx, differentiated up to three more times in x,
/// as exact identities on the two-point coefficients: for the Airy point and
/// for fuzzed rational data.
inline bool kdv_suite(std::ostream& os) {
  bool ok = true;
  auto all_zero = [](const std::vector<Rat>& r) {
    for (const Rat& v : r)
      if (v != 0) return false;
    return true;
  };
  {
    NPointEngine<Rat> eng = make_engine(airy_data(8));
    ok &= detail::suite_note(os, "flow identity, Airy data",
                             all_zero(kdv_identity_check(eng, 1, 3)));
  }
  int s = 0;
  for (const InitialData& d : fuzzed_initial_data(3)) {
    NPointEngine<Rat> eng = make_engine(d);
    std::string name = "flow identity, fuzzed data #" + std::to_string(++s);
    ok &= detail::suite_note(os, name.c_str(), all_zero(kdv_identity_check(eng, 1, 3)));
  }
  return ok;
}

}  // namespace kdvtau
