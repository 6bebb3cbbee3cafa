#include <catch2/catch_amalgamated.hpp>

#include "frablocks/oracle.hpp"
#include "frablocks/plmap.hpp"

using namespace frablocks;

namespace {

PLMap tent(const Rat& x0, const Rat& y0, const Rat& x1, const Rat& y1, const Rat& x2,
           const Rat& y2) {
  return PLMap::make({{x0, y0}, {x1, y1}, {x2, y2}});
}

}  // namespace

TEST_CASE("diameter basics") {
  CHECK(diameter(PLMap::constant(rat(1, 2))) == 0);
  CHECK(diameter(PLMap::linear(Rat(0), Rat(1))) == 1);

  // Grid oracle first: osc of the tent (0,1/3),(1/2,2/3),(1,1/3) brackets 1/3.
  PLMap t = tent(Rat(0), rat(1, 3), rat(1, 2), rat(2, 3), Rat(1), rat(1, 3));
  double osc = map_osc_grid(t.bp, 4096);
  CHECK(std::abs(osc - 1.0 / 3.0) < 1e-3);
  CHECK(diameter(t) == rat(1, 3));
}

TEST_CASE("compose basics") {
  PLMap id = PLMap::identity();
  PLMap t = tent(Rat(0), rat(1, 3), rat(1, 2), rat(2, 3), Rat(1), rat(1, 3));
  CHECK(compose(id, t) == t);
  CHECK(compose(t, id) == t);

  PLMap half = PLMap::linear(Rat(0), rat(1, 2));
  CHECK(compose(half, id) == half);

  // Identity outer map: composed diameter equals the tent's, cross-checked on a grid.
  PLMap c = compose(id, t);
  CHECK(std::abs(map_osc_grid(c.bp, 4096) - to_double(diameter(c))) < 1e-3);
  CHECK(diameter(c) == rat(1, 3));
}

TEST_CASE("compose evaluates pointwise") {
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    PLMap xi = random_plmap(rng);
    PLMap zeta = random_plmap(rng);
    PLMap c = compose(xi, zeta);
    for (int i = 0; i <= 16; ++i) {
      Rat t(i, 16);
      CHECK(c(t) == xi(zeta(t)));
    }
  }
}

TEST_CASE("compose never grows the outer diameter") {
  Rng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    PLMap xi = random_plmap(rng);
    PLMap zeta = random_plmap(rng);
    CHECK(diameter(compose(xi, zeta)) <= diameter(xi));
  }
}

TEST_CASE("modulus of continuity: small outer oscillation shrinks composites") {
  Rng rng(43);
  for (int trial = 0; trial < 50; ++trial) {
    PLMap xi = random_plmap(rng);
    Rat eps(1, rng.pick(2, 6));
    Rat smax = pl_slope_max(xi.bp);
    if (smax == 0) continue;
    Rat delta = eps / smax;
    // Any zeta with diameter < delta gives diameter(xi o zeta) < eps.
    Rat bound = delta * rat(7, 8);
    PLMap zeta = random_small_plmap(rng, bound);
    REQUIRE(diameter(zeta) < delta);
    CHECK(diameter(compose(xi, zeta)) < eps);
  }
}

TEST_CASE("sort_family on a non-crossing pair is the identity") {
  PLMap lo = PLMap::linear(Rat(0), rat(1, 4));
  PLMap hi = PLMap::linear(rat(1, 2), Rat(1));
  auto sorted = sort_family({lo, hi});
  REQUIRE(sorted.size() == 2);
  CHECK(sorted[0] == lo);
  CHECK(sorted[1] == hi);
}

TEST_CASE("sort_family of two crossing lines gives the min and max tents") {
  PLMap up = PLMap::linear(Rat(0), Rat(1));
  PLMap down = PLMap::linear(Rat(1), Rat(0));
  auto sorted = sort_family({up, down});
  REQUIRE(sorted.size() == 2);
  CHECK(sorted[0] == tent(Rat(0), Rat(0), rat(1, 2), rat(1, 2), Rat(1), Rat(0)));
  CHECK(sorted[1] == tent(Rat(0), Rat(1), rat(1, 2), rat(1, 2), Rat(1), Rat(1)));
}

TEST_CASE("sort_family output is sorted and preserves pointwise multisets") {
  Rng rng(44);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<PLMap> fam;
    long long j = rng.pick(2, 5);
    for (long long i = 0; i < j; ++i) fam.push_back(random_plmap(rng));
    auto sorted = sort_family(fam);
    REQUIRE(sorted.size() == fam.size());
    CHECK(family_sorted(sorted));
    for (int i = 0; i <= 12; ++i) {
      Rat t(i, 12);
      std::vector<Rat> a, b;
      for (const auto& m : fam) a.push_back(m(t));
      for (const auto& m : sorted) b.push_back(m(t));
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      CHECK(a == b);
    }
  }
}

TEST_CASE("sorting a family of diameter < eps keeps diameters < 2 eps") {
  Rng rng(45);
  for (int trial = 0; trial < 60; ++trial) {
    Rat eps(1, 4);
    std::vector<PLMap> fam;
    long long j = rng.pick(2, 5);
    for (long long i = 0; i < j; ++i) fam.push_back(random_small_plmap(rng, eps));
    for (const auto& m : fam) REQUIRE(diameter(m) < eps);
    for (const auto& m : sort_family(fam)) CHECK(diameter(m) < 2 * eps);
  }
}

TEST_CASE("preimage intervals") {
  PLMap id = PLMap::identity();
  auto iv = preimage_intervals(id, rat(1, 4), rat(1, 2));
  REQUIRE(iv.size() == 1);
  CHECK(iv[0].a == rat(1, 4));
  CHECK(iv[0].b == rat(1, 2));

  PLMap t = tent(Rat(0), Rat(0), rat(1, 2), Rat(1), Rat(1), Rat(0));
  iv = preimage_intervals(t, rat(1, 2), Rat(1));
  REQUIRE(iv.size() == 1);
  CHECK(iv[0].a == rat(1, 4));
  CHECK(iv[0].b == rat(3, 4));
  CHECK(intervals_total_length(iv) == rat(1, 2));

  CHECK(preimage_intervals(PLMap::constant(rat(1, 2)), Rat(0), rat(1, 4)).empty());
}

TEST_CASE("preimage length matches a grid counting oracle") {
  Rng rng(46);
  for (int trial = 0; trial < 40; ++trial) {
    PLMap m = random_plmap(rng);
    Rat a = rng.rat_grid(8, 0, 4);
    Rat b = a + rng.rat_grid(8, 1, 4);
    if (b > 1) b = Rat(1);
    auto iv = preimage_intervals(m, a, b);
    // Count grid points landing inside [a,b]; the preimage length brackets the
    // count within one grid step per interval endpoint pair.
    const long long R = 4096;
    long long inside = 0;
    for (long long i = 0; i <= R; ++i) {
      Rat t(i, R);
      Rat y = m(t);
      if (a <= y && y <= b) ++inside;
    }
    double measured = static_cast<double>(inside) / static_cast<double>(R + 1);
    double slack = 4.0 * static_cast<double>(m.bp.size()) / static_cast<double>(R);
    CHECK(std::abs(measured - to_double(intervals_total_length(iv))) < slack + 1e-9);
  }
}

TEST_CASE("family matching sup agrees with dense sampling") {
  Rng rng(47);
  for (int trial = 0; trial < 20; ++trial) {
    long long j = rng.pick(2, 4);
    std::vector<PLFn> as, bs;
    for (long long i = 0; i < j; ++i) {
      as.push_back(random_plmap(rng).bp);
      bs.push_back(random_plmap(rng).bp);
    }
    Rat sup = pl_family_match_sup(as, bs);
    Rat sampled(0);
    for (int i = 0; i <= 96; ++i) {
      Rat t(i, 96);
      std::vector<Rat> va, vb;
      for (const auto& f : as) va.push_back(pl_eval(f, t));
      for (const auto& f : bs) vb.push_back(pl_eval(f, t));
      std::sort(va.begin(), va.end());
      std::sort(vb.begin(), vb.end());
      for (std::size_t u = 0; u < va.size(); ++u)
        sampled = rat_max(sampled, rat_abs(va[u] - vb[u]));
    }
    CHECK(sampled <= sup);
    CHECK(to_double(sup) - to_double(sampled) < 0.1);
  }
}
