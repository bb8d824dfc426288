#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>

#include "kdvtau/npoint.hpp"

using namespace kdvtau;

namespace {

InitialData sample1() {
  InitialData d;
  d.a = {Rat(1, 2), Rat(-1, 3)};
  d.b = {Rat(2), Rat(0), Rat(1, 5)};
  d.c = {Rat(-1), Rat(1, 4)};
  return d;
}

Rat rpow(const Rat& x, int e) {
  Rat r(1);
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

/// Initial data whose tau function generates psi-class intersection numbers:
/// a at indices 3k-2, b and c at indices 3k.
InitialData airy_tau(int len) {
  InitialData d;
  d.a.assign(size_t(len), Rat(0));
  d.b.assign(size_t(len), Rat(0));
  d.c.assign(size_t(len), Rat(0));
  for (int k = 1; 3 * k - 2 <= len; ++k) {
    Rat base = Rat(double_factorial(6 * k - 1)) / (rpow(Rat(24), k) * Rat(factorial(k)));
    d.a[size_t(3 * k - 2) - 1] =
        Rat(-1, 2) * Rat(double_factorial(6 * k - 5)) / (rpow(Rat(24), k - 1) * Rat(factorial(k - 1)));
    if (3 * k <= len) {
      d.b[size_t(3 * k) - 1] = base;
      d.c[size_t(3 * k) - 1] = -Rat(6 * k + 1, 6 * k - 1) * base;
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Brute-force oracle: expand the trace formula as a plain multivariate Laurent
// polynomial (every edge factor as an explicit geometric sum, every matrix entry
// as an explicit coefficient list) and read off one coefficient.  No cyclic
// quotient, no chain recursion, no memoization — only pruning by what the
// remaining factors can still contribute, with bounds that provably cover every
// solution of the exponent equations.
// ---------------------------------------------------------------------------

using Mono = std::vector<int>;
using MPoly = std::map<Mono, Rat>;
struct MMat {
  MPoly e[2][2];
};

struct Bounds {
  std::vector<int> lo, hi;  // per-variable exponent contribution of remaining factors
  long tlo = 0, thi = 0;    // total-degree contribution of remaining factors
};

MPoly mp_mul(const MPoly& x, const MPoly& y, const std::vector<int>& expo, const Bounds& rem) {
  MPoly r;
  const int n = int(expo.size());
  for (auto& [ma, va] : x)
    for (auto& [mb, vb] : y) {
      Mono m(size_t(n), 0);
      bool ok = true;
      long tdeg = 0;
      for (int j = 0; j < n && ok; ++j) {
        m[size_t(j)] = ma[size_t(j)] + mb[size_t(j)];
        tdeg += m[size_t(j)];
        if (m[size_t(j)] + rem.lo[size_t(j)] > expo[size_t(j)] ||
            m[size_t(j)] + rem.hi[size_t(j)] < expo[size_t(j)])
          ok = false;
      }
      long target = 0;
      for (int e : expo) target += e;
      if (ok && (tdeg + rem.tlo > target || tdeg + rem.thi < target)) ok = false;
      if (!ok) continue;
      auto it = r.find(m);
      if (it == r.end())
        r.emplace(std::move(m), va * vb);
      else {
        it->second += va * vb;
        if (it->second == 0) r.erase(it);
      }
    }
  return r;
}

MMat mmat_mul(const MMat& a, const MMat& b, const std::vector<int>& expo, const Bounds& rem) {
  MMat r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      MPoly s = mp_mul(a.e[i][0], b.e[0][j], expo, rem);
      for (auto& [m, v] : mp_mul(a.e[i][1], b.e[1][j], expo, rem)) {
        auto it = s.find(m);
        if (it == s.end())
          s.emplace(m, v);
        else {
          it->second += v;
          if (it->second == 0) s.erase(it);
        }
      }
      r.e[i][j] = std::move(s);
    }
  return r;
}

MMat mmat_scale(const MMat& a, const MPoly& s, const std::vector<int>& expo, const Bounds& rem) {
  MMat r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r.e[i][j] = mp_mul(a.e[i][j], s, expo, rem);
  return r;
}

Rat oracle_series_coeff(const InitialData& data, const std::vector<int>& expo,
                        const std::vector<int>& rank) {
  const int n = int(expo.size());
  long esum = 0;
  int maxa = 0;
  for (int e : expo) {
    esum += e;
    maxa = std::max(maxa, std::abs(e));
  }
  const int depth = int(std::max(1L, -(esum + 1)));
  // every solution of the exponent equations has all geometric indices below this
  const int L = n * (maxa + depth + 3) + 5;

  RMatrix msers = m_from_w(assemble_w(data).truncated_below(-(depth + 2)), -depth);
  auto mentry = [&](int var, int p) {
    MMat w;
    auto cm = msers.coeff_matrix(p);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        if (cm[size_t(2 * i + j)] == 0) continue;
        Mono m(size_t(n), 0);
        m[size_t(var)] = p;
        w.e[i][j].emplace(std::move(m), cm[size_t(2 * i + j)]);
      }
    return w;
  };

  int v0 = 0;
  while (rank[size_t(v0)] != 0) ++v0;
  std::vector<int> rest;
  for (int j = 0; j < n; ++j)
    if (j != v0) rest.push_back(j);
  std::sort(rest.begin(), rest.end());

  Rat total(0);
  do {
    std::vector<int> cyc{v0};
    cyc.insert(cyc.end(), rest.begin(), rest.end());
    // factor sequence: M(z_{cyc[0]}), edge(0,1), M(z_{cyc[1]}), edge(1,2), ..., edge(n-1,0)
    struct Factor {
      bool edge;
      int va, vb;  // edge endpoints (cycle order) or va = matrix variable
    };
    std::vector<Factor> fs;
    for (int i = 0; i < n; ++i) {
      fs.push_back({false, cyc[size_t(i)], 0});
      fs.push_back({true, cyc[size_t(i)], cyc[size_t((i + 1) % n)]});
    }
    // per-factor support bounds, then suffix-accumulate
    std::vector<Bounds> suffix(fs.size() + 1);
    suffix[fs.size()] = {std::vector<int>(size_t(n), 0), std::vector<int>(size_t(n), 0), 0, 0};
    for (int f = int(fs.size()) - 1; f >= 0; --f) {
      Bounds b = suffix[size_t(f) + 1];
      if (!fs[size_t(f)].edge) {
        b.lo[size_t(fs[size_t(f)].va)] += -depth;
        b.hi[size_t(fs[size_t(f)].va)] += 1;
        b.tlo += -depth;
        b.thi += 1;
      } else {
        int x = fs[size_t(f)].va, y = fs[size_t(f)].vb;
        int outer = rank[size_t(x)] < rank[size_t(y)] ? x : y;
        int inner = outer == x ? y : x;
        b.lo[size_t(outer)] += -L - 1;
        b.hi[size_t(outer)] += -1;
        b.hi[size_t(inner)] += L;
        b.tlo += -1;
        b.thi += -1;
      }
      suffix[size_t(f)] = std::move(b);
    }

    MMat acc;
    {
      Mono one(size_t(n), 0);
      acc.e[0][0].emplace(one, Rat(1));
      acc.e[1][1].emplace(one, Rat(1));
    }
    for (size_t f = 0; f < fs.size(); ++f) {
      const Bounds& rem = suffix[f + 1];
      if (!fs[f].edge) {
        MMat mm;
        bool first = true;
        for (int p = 1; p >= -depth; --p) {
          MMat term = mentry(fs[f].va, p);
          if (first) {
            mm = term;
            first = false;
          } else {
            for (int i = 0; i < 2; ++i)
              for (int j = 0; j < 2; ++j)
                for (auto& [m, v] : term.e[i][j]) mm.e[i][j][m] += v;
          }
        }
        acc = mmat_mul(acc, mm, expo, rem);
      } else {
        int x = fs[f].va, y = fs[f].vb;
        bool xouter = rank[size_t(x)] < rank[size_t(y)];
        int outer = xouter ? x : y, inner = xouter ? y : x;
        Rat sgn = xouter ? Rat(1) : Rat(-1);
        MPoly ep;
        for (int l = 0; l <= L; ++l) {
          Mono m(size_t(n), 0);
          m[size_t(outer)] = -l - 1;
          m[size_t(inner)] = l;
          ep.emplace(std::move(m), sgn);
        }
        acc = mmat_scale(acc, ep, expo, rem);
      }
    }
    Mono tgt(expo.begin(), expo.end());
    auto c0 = acc.e[0][0].find(tgt);
    auto c1 = acc.e[1][1].find(tgt);
    if (c0 != acc.e[0][0].end()) total += c0->second;
    if (c1 != acc.e[1][1].end()) total += c1->second;
  } while (std::next_permutation(rest.begin(), rest.end()));

  Rat result = -total;
  if (n == 2) {
    // the two-point subtraction, expanded from scratch
    int a = rank[0] == 0 ? 0 : 1, b = 1 - a;
    MPoly geo;  // 1/(z_a - z_b)
    for (int l = 0; l <= L; ++l) {
      Mono m(2, 0);
      m[size_t(a)] = -l - 1;
      m[size_t(b)] = l;
      geo.emplace(std::move(m), Rat(1));
    }
    MPoly lin;
    {
      Mono m1(2, 0), m2(2, 0);
      m1[0] = 1;
      m2[1] = 1;
      lin.emplace(m1, Rat(1));
      lin.emplace(m2, Rat(1));
    }
    Bounds none{std::vector<int>(2, 0), std::vector<int>(2, 0), 0, 0};
    Bounds wide{std::vector<int>(2, -2 * L - 2), std::vector<int>(2, 2 * L + 2), -4 * L, 4 * L};
    MPoly sq = mp_mul(geo, geo, expo, wide);
    MPoly del = mp_mul(sq, lin, expo, none);
    auto it = del.find(Mono(expo.begin(), expo.end()));
    if (it != del.end()) result -= it->second;
  }
  return result;
}

Rat oracle_coeff(const InitialData& data, const std::vector<int>& k) {
  std::vector<int> expo(k.size()), rank(k.size());
  for (size_t j = 0; j < k.size(); ++j) expo[j] = -k[j] - 1;
  std::iota(rank.begin(), rank.end(), 0);
  return oracle_series_coeff(data, expo, rank);
}

}  // namespace

TEST_CASE("vacuum data: every coefficient of the combined series vanishes") {
  InitialData vac;
  NPointEngine<Rat> eng(assemble_w(vac));
  for (int e1 = -4; e1 <= -1; ++e1)
    for (int e2 = -3; e2 <= 3; ++e2) {
      CAPTURE(e1);
      CAPTURE(e2);
      CHECK(eng.series_coeff({e1, e2}, {0, 1}) == 0);
    }
  CHECK(eng.coeff({0, 0, 0}) == 0);
  CHECK(eng.coeff({1, 0, 2}) == 0);
}

TEST_CASE("two-point frozen values") {
  InitialData cg;  // only c_1 = gamma
  cg.c = {Rat(5, 3)};
  NPointEngine<Rat> eng(assemble_w(cg));
  CHECK(eng.coeff({0, 0}) == Rat(-5, 6));  // -gamma/2 = (b1-c1)/2

  InitialData ai = airy_tau(8);
  NPointEngine<Rat> eair(assemble_w(ai));
  CHECK(eair.coeff({0, 0}) == 0);
  CHECK(eair.coeff({0, 2}) == Rat(5, 8));
  CHECK(eair.coeff({1, 1}) == Rat(3, 8));
  CHECK(eair.coeff({0, 3}) == 0);  // dimension constraint
  CHECK(eair.coeff({0, 0, 0}) == 1);
  CHECK(eair.coeff({1, 1, 1}) == Rat(9, 4));
}

TEST_CASE("engine matches the brute-force expansion oracle") {
  InitialData d = sample1();
  NPointEngine<Rat> eng(assemble_w(d));
  for (int k1 = 0; k1 <= 3; ++k1)
    for (int k2 = k1; k2 <= 3; ++k2) {
      CAPTURE(k1);
      CAPTURE(k2);
      CHECK(eng.coeff({k1, k2}) == oracle_coeff(d, {k1, k2}));
    }
  for (std::vector<int> k : {std::vector<int>{0, 0, 0},
                             {0, 0, 1},
                             {0, 1, 1},
                             {0, 0, 2},
                             {1, 1, 1},
                             {0, 0, 0, 0},
                             {0, 0, 0, 1}}) {
    CAPTURE(k);
    CHECK(eng.coeff(k) == oracle_coeff(d, k));
  }
}

TEST_CASE("combined series has no coefficients at non-negative powers") {
  InitialData d = sample1();
  NPointEngine<Rat> eng(assemble_w(d));
  // two variables: full grid against the oracle, including the subtraction-cancelled part
  for (int e1 = -7; e1 <= -1; ++e1)
    for (int e2 = -3; e2 <= 3; ++e2) {
      Rat v = eng.series_coeff({e1, e2}, {0, 1});
      CAPTURE(e1);
      CAPTURE(e2);
      CHECK(v == oracle_series_coeff(d, {e1, e2}, {0, 1}));
      if (e2 >= 0) CHECK(v == 0);
    }
  for (int e1 : {-1, -3, -5})
    for (int e2 = -2; e2 <= 2; ++e2)
      for (int e3 = -2; e3 <= 2; ++e3) {
        Rat v = eng.series_coeff({e1, e2, e3}, {0, 1, 2});
        CAPTURE(e1);
        CAPTURE(e2);
        CAPTURE(e3);
        if (e2 >= 0 || e3 >= 0) CHECK(v == 0);
      }
  for (std::vector<int> e : {std::vector<int>{-1, -1, -1, 0},
                             {-2, 0, -1, -1},
                             {-1, 1, -2, -3},
                             {-3, 0, 0, -1}})
    CHECK(eng.series_coeff(e, {0, 1, 2, 3}) == 0);
}

TEST_CASE("region independence and symmetry") {
  InitialData d = sample1();
  NPointEngine<Rat> eng(assemble_w(d));
  // same Taylor coefficient extracted in three different modulus orderings
  for (std::vector<int> k : {std::vector<int>{0, 1}, {2, 0}, {1, 3}}) {
    std::vector<int> expo{-k[0] - 1, -k[1] - 1};
    Rat base = eng.series_coeff(expo, {0, 1});
    CHECK(base == eng.series_coeff(expo, {1, 0}));
    CHECK(base == oracle_series_coeff(d, expo, {1, 0}));
  }
  for (std::vector<int> k : {std::vector<int>{0, 0, 1}, {0, 1, 2}}) {
    std::vector<int> expo{-k[0] - 1, -k[1] - 1, -k[2] - 1};
    Rat base = eng.series_coeff(expo, {0, 1, 2});
    CHECK(base == eng.series_coeff(expo, {2, 1, 0}));
    CHECK(base == eng.series_coeff(expo, {1, 2, 0}));
    CHECK(base == oracle_series_coeff(d, expo, {2, 1, 0}));
  }
  // permuting the index tuple permutes nothing
  CHECK(eng.coeff({0, 2}) == eng.coeff({2, 0}));
  CHECK(eng.coeff({1, 0, 2}) == eng.coeff({2, 0, 1}));
  CHECK(eng.coeff({0, 0, 1}) == eng.coeff({1, 0, 0}));
}

TEST_CASE("scalar gauge invariance") {
  InitialData d = sample1();
  InitialData s = scale_initial_data(d, {Rat(1, 2), Rat(-1, 3)});
  CHECK(s.b[0] == d.b[0] + Rat(1, 2));  // f folds into the series coefficients
  NPointEngine<Rat> e1(assemble_w(d)), e2(assemble_w(s));
  for (std::vector<int> k : {std::vector<int>{0, 0},
                             {0, 1},
                             {1, 2},
                             {0, 3},
                             {0, 0, 0},
                             {0, 0, 1},
                             {0, 0, 0, 0}}) {
    CAPTURE(k);
    CHECK(e1.coeff(k) == e2.coeff(k));
  }
}

TEST_CASE("all-zero index coefficients are the jets of u") {
  for (InitialData d : {sample1(), airy_tau(8)}) {
    NPointEngine<Rat> eng(assemble_w(d));
    JetValues jv = jet_change(d, 7);
    for (int s = 0; s <= 4; ++s) {
      std::vector<int> k(size_t(s) + 2, 0);
      CAPTURE(s);
      CHECK(eng.coeff(k) == jv.ujet[size_t(s)]);
    }
  }
}

TEST_CASE("nine-point all-zero coefficient agrees with the seventh jet") {
  InitialData d = airy_tau(10);
  NPointEngine<Rat> eng(assemble_w(d));
  JetValues jv = jet_change(d, 8);
  CHECK(eng.coeff(std::vector<int>(9, 0)) == jv.ujet[7]);
}

TEST_CASE("symbolic coefficients: grading and variable support") {
  NPointEngine<GradedPoly> eng(w_symbolic(9));
  GradedPoly f00 = eng.coeff({0, 0});
  CHECK(f00 == (GradedPoly::gen(GB(1)) - GradedPoly::gen(GC(1))) / Rat(2));
  GradedPoly f000 = eng.coeff({0, 0, 0});
  CHECK(f000 == GradedPoly(Rat(-2)) * GradedPoly::gen(GA(1)));

  for (std::vector<int> k : {std::vector<int>{0, 1}, {0, 0, 0}, {1, 2}, {0, 0, 1}}) {
    GradedPoly f = eng.coeff(k);
    int n = int(k.size()), ksum = 0;
    for (int ki : k) ksum += ki;
    int deg = 0;
    CAPTURE(k);
    CHECK(f.is_homogeneous(&deg));
    CHECK(deg == 2 * ksum + n);
    int g = ksum + n / 2;
    for (uint32_t key : f.vars()) {
      int bound = key_fam(key) == Fam::C ? g + 1 : g;
      CHECK(int(key_idx(key)) <= bound);
    }
  }

  // numeric evaluation of the symbolic answer matches the numeric engine
  InitialData d = sample1();
  RMatrix w = assemble_w(d);
  NPointEngine<Rat> neng(assemble_w(d));
  GradedPoly f12 = eng.coeff({1, 2});
  Rat val = f12.evaluate<Rat>(
      [&](uint32_t key) -> Rat {
        int i = int(key_idx(key));
        switch (key_fam(key)) {
          case Fam::A:
            return w.e[0][0].coeff(-i);
          case Fam::B:
            return w.e[0][1].coeff(-i);
          default:
            return w.e[1][0].coeff(1 - i);
        }
      },
      [](const Rat& c) { return c; });
  CHECK(val == neng.coeff({1, 2}));
}

TEST_CASE("coefficient tables and log tau truncation") {
  InitialData vac;
  NPointEngine<Rat> evac(assemble_w(vac));
  CHECK(truncate_logtau(evac, 6).is_zero());

  InitialData d = sample1();
  NPointEngine<Rat> eng(assemble_w(d));

  CoeffTable t2 = npoint_coeffs(eng, 2, 8);
  CHECK(t2.entries.size() == 6);  // (0,0) (0,1) (0,2) (0,3) (1,1) (1,2)
  CHECK(t2.entries.at({0, 1}) == eng.coeff({0, 1}));

  TruncatedTPoly<Rat> f2 = truncate_logtau(eng, 2);
  CHECK(f2.terms.size() == 1);
  CHECK(f2.coeff({0, 0}) == eng.coeff({0, 0}) / 2);

  TruncatedTPoly<Rat> f5 = truncate_logtau(eng, 5);
  CHECK(f5.coeff({0, 0, 0}) == eng.coeff({0, 0, 0}) / 6);
  CHECK(f5.coeff({0, 0, 1}) == eng.coeff({0, 0, 1}) / 2);
  CHECK(f5.coeff({0, 1}) == eng.coeff({0, 1}));
  CHECK(f5.coeff({0, 0, 0, 0, 0}) == eng.coeff({0, 0, 0, 0, 0}) / 120);
  for (auto& [k, v] : f5.terms) {
    CHECK(tkey_grade(k) <= 5);
    CHECK(k.size() >= 2);  // no constant or linear part
  }
}

TEST_CASE("KdV flow identities on coefficients") {
  InitialData vac;
  NPointEngine<Rat> evac(assemble_w(vac));
  for (Rat r : kdv_identity_check(evac, 1, 1)) CHECK(r == 0);

  NPointEngine<Rat> eair(assemble_w(airy_tau(12)));
  for (Rat r : kdv_identity_check(eair, 1, 3)) CHECK(r == 0);
  for (Rat r : kdv_identity_check(eair, 2, 1)) CHECK(r == 0);

  NPointEngine<Rat> efuz(assemble_w(sample1()));
  for (Rat r : kdv_identity_check(efuz, 1, 2)) CHECK(r == 0);
  for (Rat r : kdv_identity_check(efuz, 2, 1)) CHECK(r == 0);
}

TEST_CASE("declared truncation depth propagates as an error") {
  InitialData d = sample1();
  d.depth = 3;
  NPointEngine<Rat> eng(assemble_w(d));
  CHECK(eng.coeff({0, 0}) == (d.b[0] - d.c[0]) / 2);  // shallow request still fine
  CHECK_THROWS_AS((void)eng.coeff({2, 2}), TruncationError);
}
