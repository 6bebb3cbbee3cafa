#include <catch2/catch_amalgamated.hpp>

#include "frablocks/constructors.hpp"
#include "frablocks/oracle.hpp"

using namespace frablocks;

TEST_CASE("bottleneck brute force brackets known values") {
  Block b = razak(2, 1);
  TraceMeasure leb = lebesgue(b);
  GridSpec grid{64, 1};

  Brackets eq = bottleneck_brute(leb, leb, grid);
  CHECK(eq.lower == 0);
  CHECK(eq.upper <= rat(2, 64));

  TraceMeasure half = uniform_on(b, Rat(0), rat(1, 2));
  Brackets br = bottleneck_brute(leb, half, grid);
  CHECK(br.lower <= rat(1, 2));
  CHECK(br.upper >= rat(1, 2));
  CHECK(br.upper - br.lower <= rat(2, 64));
}

TEST_CASE("quantile bottleneck sits inside the oracle brackets") {
  Rng rng(81);
  Block b = razak(2, 1);
  GridSpec grid{48, 1};
  for (int trial = 0; trial < 25; ++trial) {
    TraceMeasure x = random_measure(rng, b);
    TraceMeasure y = random_measure(rng, b);
    Rat d = bottleneck(x, y);
    Brackets br = bottleneck_brute(x, y, grid);
    CHECK(br.lower <= d);
    CHECK(d <= br.upper);
  }
}

TEST_CASE("rank oracle on the identity") {
  CHECK(k0_rank(identity_hom(gen_razak(2, 1))) == 1);
  CHECK(k0_rank(identity_hom(gen_razak(3, 2))) == 1);
}

TEST_CASE("matching brute force agrees with the sorted formula") {
  Rng rng(82);
  for (int trial = 0; trial < 200; ++trial) {
    long long sz = rng.pick(1, 6);
    std::vector<Rat> f, h;
    for (long long i = 0; i < sz; ++i) {
      f.push_back(rng.rat_grid(16, 0, 16));
      h.push_back(rng.rat_grid(16, 0, 16));
    }
    PointMultiset F = RatMultiset::of(f);
    PointMultiset H = RatMultiset::of(h);
    CHECK(matching_brute(F, H) == match_distance(F, H));
  }
}

TEST_CASE("sorted matching equals exhaustive matching for a monotone element") {
  Rng rng(83);
  TestElement f = test_element({{Rat(0), Rat(1)}, {Rat(1), Rat(0)}}, Rat(1));
  for (int trial = 0; trial < 50; ++trial) {
    long long sz = rng.pick(1, 5);
    std::vector<Rat> a, b;
    for (long long i = 0; i < sz; ++i) {
      a.push_back(rng.rat_grid(12, 0, 12));
      b.push_back(rng.rat_grid(12, 0, 12));
    }
    PointMultiset F = RatMultiset::of(a);
    PointMultiset H = RatMultiset::of(b);
    // Monotone g: the eigenvalue gap of the sorted pairing is optimal.
    Rat brute = matching_brute(F, H, {f});
    std::vector<Rat> fa = F.flatten(), hb = H.flatten();
    Rat sorted_gap(0);
    for (std::size_t i = 0; i < fa.size(); ++i)
      sorted_gap = rat_max(sorted_gap, rat_abs(pl_eval(f.g1, fa[i]) - pl_eval(f.g1, hb[i])));
    CHECK(brute == sorted_gap);
  }
}

TEST_CASE("sampling oracle agrees with exact pullback traces") {
  DiagonalHom id = identity_hom(razak(2, 1));
  TestElement f = test_element({{Rat(0), Rat(1)}, {Rat(1), Rat(0)}}, Rat(1));
  TraceMeasure leb = lebesgue(razak(2, 1));
  SampleEstimate est = pullback_sample(id, leb, f, 20000, 7);
  CHECK(std::abs(est.value - 0.5) < 5 * est.stderr_ + 1e-9);

  TestElement zero = test_element({{Rat(0), Rat(0)}, {Rat(1), Rat(0)}}, Rat(1));
  CHECK(pullback_sample(id, leb, zero, 100, 7).value == 0.0);

  Rng rng(84);
  for (int trial = 0; trial < 20; ++trial) {
    DiagonalHom e = razak_embed(2, 1, rng.pick(2, 3));
    TraceMeasure tau = random_measure(rng, e.cod);
    TestElement g = random_test_element(rng, BlockKind::Razak);
    TraceMeasure sigma = pullback_trace(e, tau);
    Rat exact = trace_value(sigma, g);
    SampleEstimate mc = pullback_sample(e, tau, g, 20000, 1000 + trial);
    CHECK(std::abs(mc.value - to_double(exact)) < 5 * mc.stderr_ + 1e-6);
  }
}

TEST_CASE("oracles are deterministic given the seed") {
  DiagonalHom e = razak_embed(2, 1, 2);
  TraceMeasure leb = lebesgue(e.cod);
  TestElement f = test_element({{Rat(0), Rat(1)}, {Rat(1), Rat(0)}}, Rat(1));
  SampleEstimate a = pullback_sample(e, leb, f, 5000, 99);
  SampleEstimate b = pullback_sample(e, leb, f, 5000, 99);
  CHECK(a.value == b.value);
}
