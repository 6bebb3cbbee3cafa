#pragma once

#include <atomic>
#include <functional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "frablocks/amalgamation.hpp"
#include "frablocks/constructors.hpp"
#include "frablocks/limits.hpp"
#include "frablocks/oracle.hpp"

namespace frablocks {

// ---- randomized instance generators ------------------------------------------

// Measure with densities within a factor 3/2 of each other: transition maps
// between such measures have slopes at most 9/4.
inline TraceMeasure random_tame_measure(Rng& rng, const Block& block, long long max_pieces = 3,
                                        long long grid = 12) {
  long long np = rng.pick(1, max_pieces);
  std::vector<Rat> cuts = {Rat(0), Rat(1)};
  for (long long i = 1; i < np; ++i) cuts.push_back(rng.rat_grid(grid, 1, grid - 1));
  sort_unique(cuts);
  std::vector<long long> w(cuts.size() - 1);
  Rat W(0);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    w[i] = rng.pick(2, 3);
    W += Rat(w[i]) * (cuts[i + 1] - cuts[i]);
  }
  TraceMeasure m;
  m.block = block;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    m.pieces.push_back({cuts[i], cuts[i + 1], Rat(w[i]) * (cuts[i + 1] - cuts[i]) / W});
  m.check();
  return m;
}

// Blend towards a fresh measure until the bottleneck distance drops below the
// target; exact arithmetic, terminating (the blend weight halves each round).
inline TraceMeasure perturb_measure(Rng& rng, const TraceMeasure& base, const Rat& delta) {
  TraceMeasure fresh = random_tame_measure(rng, base.block);
  Rat theta(1, 4);
  for (;;) {
    TraceMeasure mix = add_measures(scale_measure(base, Rat(1) - theta),
                                    scale_measure(fresh, theta));
    if (bottleneck(base, mix) <= delta) return mix;
    theta /= 2;
  }
}

// A small-diameter embedding variant: the equal-endpoint tents get a custom
// depth; the family stays sorted for any depth below 1/(2p).
inline DiagonalHom embed_variant(const DiagonalHom& embed, long long p, long long depth_den) {
  DiagonalHom out = embed;
  for (auto& xi : out.xis) {
    if (xi.bp.size() == 3 && xi.at0() == xi.at1()) {
      Rat s = xi.at0();
      xi = PLMap::make({{Rat(0), s}, {rat(1, 2), s - Rat(1, depth_den * p)}, {Rat(1), s}});
    }
  }
  return out;
}

// A pair of trace-preserving diagonal homs out of a common (A, sigma) into a
// common (B, tau): an embedding factor (so composite diameters stay below 1/p)
// behind transitions that differ by at most delta, plus tent-depth variation.
struct TpPair {
  DiagonalHom phi1, phi2;
  TraceMeasure sigma, tau;
};

inline TpPair random_razak_pair(Rng& rng, long long n, long long k, long long p,
                                const Rat& delta = Rat(1, 8)) {
  DiagonalHom embed1 = razak_embed(n, k, p);
  DiagonalHom embed2 = embed_variant(embed1, p, 2 + rng.pick(0, 2));
  TraceMeasure tau = random_tame_measure(rng, embed1.cod);
  TraceMeasure mid1 = pullback_trace(embed1, tau);
  TraceMeasure sigma = perturb_measure(rng, mid1, delta);
  DiagonalHom phi1 = compose(transition_hom(sigma, mid1), embed1);
  TraceMeasure mid2 = pullback_trace(embed2, tau);
  DiagonalHom phi2 = compose(transition_hom(sigma, mid2), embed2);
  return {std::move(phi1), std::move(phi2), std::move(sigma), std::move(tau)};
}

// Generalised pair with unit K-theory through gen_embed(n,k,p,n/2).
inline TpPair random_gen_pair(Rng& rng, long long n, long long k, long long p,
                              const Rat& delta = Rat(1, 8)) {
  DiagonalHom embed1 = gen_embed(n, k, p, n / 2, false);
  DiagonalHom embed2 = embed_variant(gen_embed(n, k, p, n / 2, rng.coin()), p, 2 + rng.pick(0, 2));
  TraceMeasure tau = random_tame_measure(rng, embed1.cod);
  TraceMeasure mid1 = pullback_trace(embed1, tau);
  TraceMeasure sigma = perturb_measure(rng, mid1, delta);
  DiagonalHom phi1 = compose(transition_hom(sigma, mid1), embed1);
  TraceMeasure mid2 = pullback_trace(embed2, tau);
  DiagonalHom phi2 = compose(transition_hom(sigma, mid2), embed2);
  return {std::move(phi1), std::move(phi2), std::move(sigma), std::move(tau)};
}

// ---- named property suites -----------------------------------------------------

struct SuiteReport {
  std::string name;
  long long trials = 0;
  long long failures = 0;
  bool pass = false;
  std::vector<std::string> witnesses;

  void fail(const std::string& w) {
    ++failures;
    if (witnesses.size() < 8) witnesses.push_back(w);
  }
};

inline long long env_thread_cap() {
  if (const char* s = std::getenv("FRABLOCKS_THREADS")) {
    long long v = std::atoll(s);
    if (v >= 1) return v;
  }
  long long hw = static_cast<long long>(std::thread::hardware_concurrency());
  return hw > 0 ? std::min<long long>(hw, 8) : 1;
}

// Runs per-trial work with per-trial seeds; results are merged in trial order,
// so the report does not depend on the thread count.
inline void parallel_trials(long long trials, std::uint64_t seed,
                            const std::function<std::string(Rng&)>& trial, SuiteReport& rep) {
  rep.trials = trials;
  std::vector<std::string> results(static_cast<std::size_t>(trials));
  long long threads = std::min<long long>(env_thread_cap(), std::max<long long>(1, trials));
  std::vector<std::thread> pool;
  std::atomic<long long> next{0};
  auto work = [&]() {
    for (;;) {
      long long i = next.fetch_add(1);
      if (i >= trials) return;
      Rng rng(seed * 1000003ULL + static_cast<std::uint64_t>(i));
      try {
        results[static_cast<std::size_t>(i)] = trial(rng);
      } catch (const std::exception& e) {
        results[static_cast<std::size_t>(i)] = std::string("exception: ") + e.what();
      }
    }
  };
  for (long long t = 0; t < threads; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  for (const auto& r : results)
    if (!r.empty()) rep.fail(r);
  rep.pass = rep.failures == 0;
}

// Trace-equal small-diameter pairs stay close: d_diag < 3 eps. The generator
// raises the embedding parameter until the diameters drop below eps exactly.
inline SuiteReport verify_rewriting2(long long trials, std::uint64_t seed) {
  SuiteReport rep;
  rep.name = "rewriting2";
  parallel_trials(trials, seed, [](Rng& rng) -> std::string {
    bool gen = rng.coin();
    Rat eps = rng.coin() ? Rat(1, 4) : Rat(1, 10);
    long long p = 1;
    while (Rat(5, 4 * p) >= eps) ++p;
    if (gen && p % 2 == 0) ++p;
    TpPair pair;
    bool sized = false;
    for (int attempt = 0; attempt < 4 && !sized; ++attempt) {
      pair = gen ? random_gen_pair(rng, 2, 1, p) : random_razak_pair(rng, 2, 1, p);
      sized = diameter(pair.phi1) < eps && diameter(pair.phi2) < eps;
      p = gen ? 2 * p + 1 : 2 * p;
    }
    if (!sized) return "generated diameters exceed eps";
    if (pullback_trace(pair.phi1, pair.tau) != pair.sigma) return "trace mismatch 1";
    if (pullback_trace(pair.phi2, pair.tau) != pair.sigma) return "trace mismatch 2";
    Rat dd = d_diag(pair.phi1, pair.phi2);
    if (!(dd < 3 * eps))
      return "d_diag " + rat_str(dd) + " not below 3 eps " + rat_str(3 * eps);
    return "";
  }, rep);
  return rep;
}

// Sorted-gap closeness with interval density controls removals: eps is
// computed from the generated pair so that the counting hypotheses hold
// exactly (eps-close in sorted order, every eps-interval meets both multisets
// at least ell times), and the conclusion b_ell <= 3 eps is checked.
inline SuiteReport verify_littlecounting(long long trials, std::uint64_t seed) {
  SuiteReport rep;
  rep.name = "littlecounting";
  parallel_trials(trials, seed, [](Rng& rng) -> std::string {
    long long ell = rng.pick(0, 3);
    long long sz = rng.pick(std::max<long long>(4, 2 * ell + 1), 10);
    std::vector<Rat> f, h;
    for (long long i = 0; i < sz; ++i) {
      Rat base(i, sz);
      f.push_back(rat_min(Rat(1), base + Rat(rng.pick(0, 4), 16 * sz)));
      h.push_back(rat_min(Rat(1), base + Rat(rng.pick(0, 4), 16 * sz)));
    }
    PointMultiset F = RatMultiset::of(f);
    PointMultiset H = RatMultiset::of(h);
    std::vector<Rat> fs = F.flatten(), hs = H.flatten();
    // Smallest eps making every open interval of diameter >= eps meet the
    // points at least ell times: window spans plus the edge gaps.
    Rat density(0);
    if (ell > 0) {
      for (const auto* v : {&fs, &hs}) {
        for (std::size_t i = 0; i + static_cast<std::size_t>(ell) < v->size(); ++i)
          density = rat_max(density, (*v)[i + static_cast<std::size_t>(ell)] - (*v)[i]);
        density = rat_max(density, (*v)[static_cast<std::size_t>(ell) - 1] - Rat(0));
        density = rat_max(density, Rat(1) - (*v)[v->size() - static_cast<std::size_t>(ell)]);
      }
    }
    Rat eps = rat_max(match_distance(F, H), density) + Rat(1, 64 * sz);
    BellResult r = b_ell(F, H, ell);
    if (!r.exact) return "expected exhaustive evaluation";
    if (!(r.value <= 3 * eps))
      return "b_ell " + rat_str(r.value) + " above 3 eps " + rat_str(3 * eps);
    return "";
  }, rep);
  return rep;
}

// Fiberwise unitary distances are Lipschitz in the diagonal distance.
inline SuiteReport verify_dist1(long long trials, std::uint64_t seed) {
  SuiteReport rep;
  rep.name = "dist1";
  parallel_trials(trials, seed, [](Rng& rng) -> std::string {
    bool gen = rng.coin();
    long long p = gen ? 3 : rng.pick(2, 3);
    TpPair pair = gen ? random_gen_pair(rng, 2, 1, p) : random_razak_pair(rng, 2, 1, p);
    TestElement f = random_test_element(rng, pair.phi1.dom.kind);
    Rat dd = d_diag(pair.phi1, pair.phi2);
    Rat sup = sup_interior_udist(pair.phi1, pair.phi2, f);
    if (!(sup <= f.lipschitz * dd))
      return "sup " + rat_str(sup) + " above L*d_diag " + rat_str(f.lipschitz * dd);
    if (!gen) {
      auto dinf = fiber_udist(pair.phi1, pair.phi2, {f}, FiberPoint::inf());
      auto d0 = fiber_udist(pair.phi1, pair.phi2, {f}, FiberPoint::interior(Rat(0)));
      if (dinf.value != d0.value) return "infinity fiber differs from the 0 fiber";
    }
    return "";
  }, rep);
  return rep;
}

// Transition maps stay within the bottleneck distance of the identity.
inline SuiteReport verify_measuring(long long trials, std::uint64_t seed) {
  SuiteReport rep;
  rep.name = "measuring";
  parallel_trials(trials, seed, [](Rng& rng) -> std::string {
    Block b = rng.coin() ? razak(2, 1) : gen_razak(2, 1);
    TraceMeasure s = random_measure(rng, b);
    TraceMeasure t = random_measure(rng, b);
    PLMap xi = transition_plmap(s, t);
    Rat d = pl_max_abs_diff(xi.bp, PLMap::identity().bp);
    Rat bb = bottleneck(s, t);
    if (!(d <= bb)) return "transition distance " + rat_str(d) + " above b " + rat_str(bb);
    return "";
  }, rep);
  return rep;
}

// Pullbacks of the Lebesgue trace under the standard embeddings approach it.
inline SuiteReport verify_measuring2(long long trials, std::uint64_t seed) {
  SuiteReport rep;
  rep.name = "measuring2";
  (void)seed;
  long long count = 0;
  for (long long p = 2; count < trials; ++p) {
    for (long long n : {1, 2, 3}) {
      for (long long k : {1, 2}) {
        if (count >= trials) break;
        ++count;
        DiagonalHom e = razak_embed(n, k, p);
        TraceMeasure mu = pullback_trace(e, lebesgue(e.cod));
        if (!(bottleneck(mu, lebesgue(e.dom)) <= Rat(3, p)))
          rep.fail("pullback of p=" + std::to_string(p) + " outside 3/p");
      }
    }
  }
  rep.trials = count;
  rep.pass = rep.failures == 0;
  return rep;
}

// Sorting doubles diameters at worst; composition never grows the inner one;
// small outer oscillation shrinks composites.
inline SuiteReport verify_diameterfacts(long long trials, std::uint64_t seed) {
  SuiteReport rep;
  rep.name = "diameterfacts";
  parallel_trials(trials, seed, [](Rng& rng) -> std::string {
    Rat eps(1, rng.pick(2, 6));
    std::vector<PLMap> fam;
    long long j = rng.pick(2, 5);
    for (long long i = 0; i < j; ++i) fam.push_back(random_small_plmap(rng, eps));
    for (const auto& m : sort_family(fam))
      if (!(diameter(m) < 2 * eps)) return "sorted diameter not below 2 eps";
    PLMap xi = random_plmap(rng);
    PLMap zeta = random_plmap(rng);
    if (!(diameter(compose(xi, zeta)) <= diameter(xi))) return "composition grew diameter";
    Rat smax = pl_slope_max(xi.bp);
    if (smax > 0) {
      PLMap small = random_small_plmap(rng, eps / smax * Rat(7, 8));
      if (!(diameter(compose(xi, small)) < eps)) return "modulus of continuity violated";
    }
    return "";
  }, rep);
  return rep;
}

// Constructor K-theory formulas against the rank oracle and multiplicativity.
inline SuiteReport verify_ktheory2(long long trials, std::uint64_t seed) {
  SuiteReport rep;
  rep.name = "ktheory2";
  parallel_trials(trials, seed, [](Rng& rng) -> std::string {
    long long n = 2 * rng.pick(1, 2);
    long long k = rng.pick(1, 2);
    long long p = 2 * rng.pick(1, 2) + 1;
    long long j = rng.pick(0, n - 1);
    DiagonalHom e = gen_embed(n, k, p, j);
    if (k0(e).value != 2 * j - (n - 1)) return "embedding K0 formula";
    if (k0_rank(e) != k0(e).value) return "rank oracle disagrees on the embedding";
    long long kp = rng.pick(2, 4);
    long long j2 = rng.pick(0, kp);
    DiagonalHom a = gen_amplify(e.cod.n, e.cod.k, kp, j2);
    if (k0(a).value != 2 * j2 - kp) return "amplification K0 formula";
    DiagonalHom c = compose(e, a);
    if (k0(c).value != k0(e).value * k0(a).value) return "composite K0 not multiplicative";
    if (k0_rank(c) != k0(c).value) return "rank oracle disagrees on the composite";
    return "";
  }, rep);
  return rep;
}

// Stable point padding: canonical equality after padding, exact.
inline SuiteReport verify_kgen2(long long trials, std::uint64_t seed) {
  SuiteReport rep;
  rep.name = "kgen2";
  parallel_trials(trials, seed, [](Rng& rng) -> std::string {
    Block b = gen_razak(rng.pick(2, 3), rng.pick(1, 2));
    auto random_rep_of_dim = [&](long long target) {
      RepDescriptor r;
      r.block = b;
      long long remaining = target;
      while (remaining >= b.fiber_dim() && rng.coin()) {
        r.points.add(rng.rat_grid(16, 0, 16));
        remaining -= b.fiber_dim();
      }
      while (remaining >= b.k && rng.coin()) {
        if (rng.coin())
          ++r.r1;
        else
          ++r.r2;
        remaining -= b.k;
      }
      r.r0 = remaining;
      return r;
    };
    long long dim = rng.pick(b.fiber_dim(), 20);
    RepDescriptor r1 = random_rep_of_dim(dim);
    RepDescriptor r2 = random_rep_of_dim(dim);
    if (rep_k0(r1).value != rep_k0(r2).value) {
      // Adjust by swapping infinity multiplicities of the second.
      long long delta = rep_k0(r1).value - rep_k0(r2).value;
      if (delta % 2 != 0) return "";  // parity mismatch; skip the trial
      long long shift = delta / 2;
      if (shift > 0) {
        if (r2.r2 < shift) return "";
        r2.r1 += shift;
        r2.r2 -= shift;
      } else {
        if (r2.r1 < -shift) return "";
        r2.r1 += shift;
        r2.r2 -= shift;
      }
    }
    StablePoints sp = stable_points(r1, r2);  // throws if verification fails
    RepDescriptor v1 = r1, v2 = r2;
    for (const auto& x : sp.xs) v1.points.add(x);
    for (const auto& y : sp.ys) v2.points.add(y);
    if (canonical_rep(v1) != canonical_rep(v2)) return "padding equality failed";
    return "";
  }, rep);
  return rep;
}

// Composing with the next sequence step extends interior closeness to the
// fibers at infinity: interior-close unit-K pairs into a stage get certified
// infinity bounds below the target after one more embedding step.
inline SuiteReport verify_onemore(long long trials, std::uint64_t seed) {
  SuiteReport rep;
  rep.name = "onemore";
  InductiveSequence seq = z0_sequence(3);
  parallel_trials(trials, seed, [&seq](Rng& rng) -> std::string {
    const Stage& s1 = seq.stages[0];
    const Stage& s2 = seq.stages[1];
    const Rat eps(1, 4);
    // Two unit-K trace-preserving maps stage 1 -> stage 2 sharing their
    // associated maps (interleaved splits), so the interior distance vanishes.
    long long p1 = seq.step_params[0];
    DiagonalHom e1 = gen_embed(s1.block.n, s1.block.k, p1, s1.block.n / 2, false);
    DiagonalHom e2 = gen_embed(s1.block.n, s1.block.k, p1, s1.block.n / 2, rng.coin());
    TraceMeasure mid = pullback_trace(e1, s2.trace);
    DiagonalHom trans = transition_hom(s1.trace, mid);
    DiagonalHom psi1 = compose(trans, e1);
    DiagonalHom psi2 = compose(trans, e2);
    TestElement f = random_test_element(rng, BlockKind::GenRazak);
    Rat interior = sup_interior_udist(psi1, psi2, f);
    if (!(interior < eps / 3)) return "interior distance not small";
    // Compose with the next step and check the fibers at infinity.
    long long p = seq.step_params[1];
    auto [rho1, rho2] = detail::boundary_stacks(psi1, psi2, false);
    auto [rho3, rho4] = detail::boundary_stacks(psi1, psi2, true);
    StablePoints sp1 = stable_points(rho1, rho2);
    StablePoints sp2 = stable_points(rho3, rho4);
    if (2 * std::max(sp1.j, sp2.j) + 1 > p) return "step parameter below padding";
    std::vector<Rat> odd, even;
    for (long long r = 1; r <= p - 1; r += 2) odd.push_back(Rat(r, p));
    for (long long r = 2; r <= p - 1; r += 2) even.push_back(Rat(r, p));
    Rat i1 = detail::infinity_bound(psi1, psi2, sp1, odd, odd, {f});
    Rat i2 = detail::infinity_bound(psi1, psi2, sp2, even, even, {f});
    if (!(i1 < eps && i2 < eps))
      return "infinity bound " + rat_str(rat_max(i1, i2)) + " not below " + rat_str(eps);
    return "";
  }, rep);
  return rep;
}

inline SuiteReport run_suite(const std::string& name, long long trials, std::uint64_t seed) {
  if (name == "rewriting2") return verify_rewriting2(trials, seed);
  if (name == "littlecounting") return verify_littlecounting(trials, seed);
  if (name == "dist1") return verify_dist1(trials, seed);
  if (name == "measuring") return verify_measuring(trials, seed);
  if (name == "measuring2") return verify_measuring2(trials, seed);
  if (name == "diameterfacts") return verify_diameterfacts(trials, seed);
  if (name == "ktheory2") return verify_ktheory2(trials, seed);
  if (name == "kgen2") return verify_kgen2(trials, seed);
  if (name == "onemore") return verify_onemore(trials, seed);
  throw Error("unknown verification suite: " + name);
}

inline std::vector<std::string> suite_names() {
  return {"rewriting2", "littlecounting", "dist1",    "measuring", "measuring2",
          "diameterfacts", "ktheory2",   "kgen2", "onemore"};
}

}  // namespace frablocks
