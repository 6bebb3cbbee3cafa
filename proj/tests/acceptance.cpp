// Acceptance suite: one line per criterion, all quantities exact rationals.
// Exits nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "frablocks/amalgamation.hpp"
#include "frablocks/limits.hpp"
#include "frablocks/oracle.hpp"
#include "frablocks/verify.hpp"

using namespace frablocks;

namespace {

int failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void report(int idx, const std::string& name, bool pass, const Timer& t,
            const std::string& detail = "") {
  std::printf("criterion %2d %-24s %s  [%6.2f s]%s%s\n", idx, name.c_str(),
              pass ? "PASS" : "FAIL", t.seconds(), detail.empty() ? "" : "  ",
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

// 1. Constructor K-theory formulas, exactly, against the rank oracle.
void criterion1() {
  Timer t;
  bool ok = true;
  std::string bad;
  auto check = [&](bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      bad = what;
    }
  };
  for (long long n = 2; n <= 4; ++n)
    for (long long k = 1; k <= 3; ++k)
      for (long long p : {3, 5}) {
        for (long long j = 0; j <= n - 1; ++j) {
          DiagonalHom h = gen_embed(n, k, p, j);
          check(k0(h).value == 2 * j - (n - 1) && k0_rank(h) == k0(h).value,
                "gen_embed(" + std::to_string(n) + "," + std::to_string(k) + "," +
                    std::to_string(p) + "," + std::to_string(j) + ")");
        }
        for (long long j = 0; j <= p; ++j) {
          DiagonalHom h = gen_amplify(n, k, p, j);
          check(k0(h).value == 2 * j - p && k0_rank(h) == k0(h).value, "gen_amplify");
        }
        for (long long j = -(n - 1) * p; j <= (n - 1) * p; ++j) {
          if (((n - 1) * p - j) % 2 == 1 && (k - 1) * p < k) continue;  // infeasible zeros
          DiagonalHom h = gen_rho(n, k, p, j);
          check(k0(h).value == j && k0_rank(h) == k0(h).value, "gen_rho");
        }
      }
  report(1, "K0 formulas", ok, t, bad);
}

// 2. Diameter bounds of the embedding constructors.
void criterion2() {
  Timer t;
  bool ok = true;
  for (long long n = 1; n <= 4 && ok; ++n)
    for (long long k = 1; k <= 3 && ok; ++k)
      for (long long p : {3, 5})
        if (!(diameter(razak_embed(n, k, p)) <= Rat(1, p))) ok = false;
  for (long long n = 2; n <= 4 && ok; ++n)
    for (long long k = 1; k <= 3 && ok; ++k)
      for (long long p : {3, 5})
        for (long long j = 0; j <= n - 1 && ok; ++j)
          if (!(diameter(gen_embed(n, k, p, j)) <= Rat(1, p))) ok = false;
  report(2, "diameter bounds", ok, t);
}

// 3. The pullback of the Lebesgue trace stays within 3/p of it.
void criterion3() {
  Timer t;
  bool ok = true;
  std::string bad;
  for (long long p = 2; p <= 20 && ok; ++p)
    for (long long n = 1; n <= 3 && ok; ++n)
      for (long long k = 1; k <= 3 && ok; ++k) {
        DiagonalHom e = razak_embed(n, k, p);
        TraceMeasure mu = pullback_trace(e, lebesgue(e.cod));
        if (!(bottleneck(mu, lebesgue(e.dom)) <= Rat(3, p))) {
          ok = false;
          bad = "p=" + std::to_string(p) + " n=" + std::to_string(n) +
                " k=" + std::to_string(k);
        }
      }
  report(3, "measure transport", ok, t, bad);
}

// 4/5/6. Property suites at their stated trial counts.
void criterion_suite(int idx, const std::string& name, const SuiteReport& rep, Timer& t) {
  report(idx, name, rep.pass, t,
         rep.pass ? "" : std::to_string(rep.failures) + " violations; " +
                             (rep.witnesses.empty() ? "" : rep.witnesses.front()));
}

// 7. Randomized near-amalgamation instances return passing certificates.
void criterion7() {
  Timer t;
  SuiteReport razak_rep;
  razak_rep.name = "nap-razak";
  parallel_trials(50, 70, [](Rng& rng) -> std::string {
    TpPair pair = random_razak_pair(rng, 2, 1, 12, Rat(1, 100));
    TestElement f = random_test_element(rng, BlockKind::Razak);
    NapResult res = nap_razak(pair.phi1, pair.tau, pair.phi2, pair.tau, {f}, Rat(1, 10));
    if (!res.cert.pass || !res.cert.tracePreserved)
      return "razak certificate failed, sup " + rat_str(res.cert.supFiberDist);
    return "";
  }, razak_rep);
  SuiteReport gen_rep;
  gen_rep.name = "nap-gen";
  parallel_trials(25, 71, [](Rng& rng) -> std::string {
    TpPair pair = random_gen_pair(rng, 2, 1, 5, Rat(1, 100));
    TestElement f = random_test_element(rng, BlockKind::GenRazak);
    NapResult res =
        nap_gen(pair.phi1, pair.tau, pair.phi2, pair.tau, {f}, Rat(1, 8), ClassTag::k1());
    if (!res.cert.pass || !res.cert.tracePreserved || res.cert.k0Record[1] != 1)
      return "gen certificate failed, sup " + rat_str(res.cert.supFiberDist);
    return "";
  }, gen_rep);
  bool ok = razak_rep.pass && gen_rep.pass;
  std::string bad;
  if (!razak_rep.witnesses.empty()) bad = razak_rep.witnesses.front();
  if (bad.empty() && !gen_rep.witnesses.empty()) bad = gen_rep.witnesses.front();
  report(7, "NAP end-to-end", ok, t, bad);
}

// 8. Sequence generators validate stepwise with the stated K-theory.
void criterion8() {
  Timer t;
  bool ok = true;
  std::string bad;
  InductiveSequence w = w_sequence(4);
  SequenceReport wr = validate_sequence(w);
  if (!(wr.ok && w.stages.size() == 4 && w.stages[3].block == razak(24, 115))) {
    ok = false;
    bad = "w sequence";
  }
  InductiveSequence z = z0_sequence(3);
  SequenceReport zr = validate_sequence(z);
  if (!(zr.ok && z.stages.size() == 3)) {
    ok = false;
    bad = "z0 sequence";
  }
  for (std::size_t i = 0; i < z.steps.size(); ++i)
    if (k0(z.steps[i]).value != 1 || z.step_params[i] % 2 == 0) {
      ok = false;
      bad = "z0 step parameters";
    }
  InductiveSequence u = z0_uhf_sequence({2}, 2);
  SequenceReport ur = validate_sequence(u);
  if (!(ur.ok && ur.composite_k0 == 4)) {
    ok = false;
    bad = "uhf composite K0 = " + std::to_string(ur.composite_k0);
  }
  report(8, "sequences", ok, t, bad);
}

// 9. The identity against its K-reversal: interior fibers agree, the fibers at
// infinity are exactly 2 apart for the separating element.
void criterion9() {
  Timer t;
  Block B = gen_razak(2, 1);
  DiagonalHom id = identity_hom(B);
  DiagonalHom swapped = reverse_k(id);
  TestElement f = test_element({{Rat(0), Rat(-1)}, {Rat(1), Rat(0)}},
                               {{Rat(0), Rat(1)}, {Rat(1), Rat(0)}}, Rat(1));
  bool ok = true;
  for (int i = 0; i <= 16 && ok; ++i)
    if (fiber_udist(id, swapped, {f}, FiberPoint::interior(Rat(i, 16))).value != 0) ok = false;
  if (fiber_udist(id, swapped, {f}, FiberPoint::inf1()).value != 2) ok = false;
  if (fiber_udist(id, swapped, {f}, FiberPoint::inf2()).value != 2) ok = false;
  report(9, "swap obstruction", ok, t);
}

// 10. Oracle concordance.
void criterion10() {
  Timer t;
  bool ok = true;
  std::string bad;
  {
    Rng rng(100);
    Block b = razak(2, 1);
    GridSpec grid{48, 1};
    for (int i = 0; i < 100 && ok; ++i) {
      TraceMeasure x = random_measure(rng, b);
      TraceMeasure y = random_measure(rng, b);
      Rat d = bottleneck(x, y);
      Brackets br = bottleneck_brute(x, y, grid);
      if (!(br.lower <= d && d <= br.upper)) {
        ok = false;
        bad = "bottleneck outside oracle brackets";
      }
    }
  }
  {
    Rng rng(101);
    for (int i = 0; i < 200 && ok; ++i) {
      long long n = 2 * rng.pick(1, 2);
      long long p = 2 * rng.pick(1, 2) + 1;
      long long j = rng.pick(0, n - 1);
      DiagonalHom e = gen_embed(n, 1, p, j);
      long long kp = rng.pick(2, 4);
      DiagonalHom a = gen_amplify(e.cod.n, e.cod.k, kp, rng.pick(0, kp));
      DiagonalHom c = compose(e, a);
      if (k0(c).value != k0_rank(c)) {
        ok = false;
        bad = "k0 disagrees with the rank oracle";
      }
    }
  }
  {
    Rng rng(102);
    for (int i = 0; i < 500 && ok; ++i) {
      long long sz = rng.pick(1, 6);
      std::vector<Rat> f, h;
      for (long long q = 0; q < sz; ++q) {
        f.push_back(rng.rat_grid(16, 0, 16));
        h.push_back(rng.rat_grid(16, 0, 16));
      }
      PointMultiset F = RatMultiset::of(f);
      PointMultiset H = RatMultiset::of(h);
      if (match_distance(F, H) != matching_brute(F, H)) {
        ok = false;
        bad = "match_distance disagrees with brute force";
      }
    }
  }
  report(10, "oracle concordance", ok, t, bad);
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  {
    Timer t;
    criterion_suite(4, "trace-equal closeness", verify_rewriting2(500, 4001), t);
  }
  {
    Timer t;
    criterion_suite(5, "counting lemma", verify_littlecounting(500, 4002), t);
  }
  {
    Timer t;
    criterion_suite(6, "fiber Lipschitz bound", verify_dist1(300, 4003), t);
  }
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
