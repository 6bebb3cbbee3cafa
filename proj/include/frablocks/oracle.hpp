#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "frablocks/constructors.hpp"
#include "frablocks/hom.hpp"
#include "frablocks/measure.hpp"

namespace frablocks {

struct GridSpec {
  long long resolution = 100;  // >= 2
  std::uint64_t seed = 1;
};

struct Brackets {
  Rat lower, upper;
};

namespace detail {

// Smallest r >= 0 with nu((a-r, b+r)) >= target; exact (PL in r).
inline Rat min_enlargement(const TraceMeasure& nu, const Rat& a, const Rat& b, const Rat& target) {
  if (target <= diffuse_mass_on(nu, a, b)) return Rat(0);
  std::vector<Rat> rs = {Rat(0)};
  for (const auto& p : nu.pieces) {
    for (const Rat& e : {p.a, p.b}) {
      if (e < a) rs.push_back(a - e);
      if (e > b) rs.push_back(e - b);
    }
  }
  rs.push_back(rat_max(a, Rat(1) - b));  // enlargement covering [0,1]
  sort_unique(rs);
  auto mass = [&](const Rat& r) {
    return diffuse_mass_on(nu, rat_max(Rat(0), a - r), rat_min(Rat(1), b + r));
  };
  for (std::size_t i = 0; i + 1 < rs.size(); ++i) {
    Rat m0 = mass(rs[i]);
    Rat m1 = mass(rs[i + 1]);
    if (m1 < target) continue;
    if (m0 >= target) return rs[i];
    // Linear between the candidate radii.
    return rs[i] + (rs[i + 1] - rs[i]) * (target - m0) / (m1 - m0);
  }
  throw Error("enlargement target exceeds total mass");
}

}  // namespace detail

// Interval-enumeration bracket for the bottleneck distance: the sup over
// grid-aligned open intervals is a lower bound; endpoint perturbation costs at
// most 1/resolution per side.
inline Brackets bottleneck_brute(const TraceMeasure& mu, const TraceMeasure& nu,
                                 const GridSpec& grid) {
  if (grid.resolution < 2) throw Error("grid resolution must be >= 2");
  if (!mu.diffuse() || !nu.diffuse()) throw Error("bottleneck oracle needs diffuse inputs");
  Rat lower(0);
  const long long R = grid.resolution;
  for (long long i = 0; i < R; ++i) {
    for (long long j = i + 1; j <= R; ++j) {
      Rat a(i, R), b(j, R);
      Rat r1 = detail::min_enlargement(nu, a, b, diffuse_mass_on(mu, a, b));
      Rat r2 = detail::min_enlargement(mu, a, b, diffuse_mass_on(nu, a, b));
      lower = rat_max(lower, rat_max(r1, r2));
    }
  }
  return {lower, lower + Rat(2, R)};
}

// K0 through the rank bookkeeping of the generating projection: an interior
// point contributes rank 2nk, the infinity representations k+1 and k-1, each
// zero row 1. Independent of the representation-theoretic route.
inline long long k0_rank(const DiagonalHom& h) {
  if (h.cod.kind != BlockKind::GenRazak) throw Error("rank oracle needs a generalised codomain");
  const long long n = h.dom.n, k = h.dom.k;
  auto rank = [&](const RepDescriptor& rep) {
    return 2 * n * k * rep.points.size() + (k + 1) * rep.r1 + (k - 1) * rep.r2 + rep.r0;
  };
  long long diff = rank(h.split->repA) - rank(h.split->repB);
  if (diff % 2 != 0) throw Error("odd rank difference: corrupted boundary data");
  return diff / 2;
}

// Exhaustive optimal matching over all bijections (|F| <= 8). With test
// elements, the per-pair gap is the scalar-block eigenvalue gap.
inline Rat matching_brute(const PointMultiset& F, const PointMultiset& H,
                          const std::vector<TestElement>& G = {}) {
  if (F.size() != H.size()) throw Error("matching oracle needs equal sizes");
  if (F.size() > 8) throw Error("matching oracle limited to 8 points");
  std::vector<Rat> f = F.flatten();
  std::vector<Rat> h = H.flatten();
  auto gap = [&](const Rat& s, const Rat& t) {
    if (G.empty()) return rat_abs(s - t);
    Rat g(0);
    for (const auto& el : G) {
      g = rat_max(g, rat_abs(pl_eval(el.g1, s) - pl_eval(el.g1, t)));
      if (el.g2) g = rat_max(g, rat_abs(pl_eval(*el.g2, s) - pl_eval(*el.g2, t)));
    }
    return g;
  };
  std::vector<std::size_t> perm(h.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  Rat best(-1);
  do {
    Rat cur(0);
    for (std::size_t i = 0; i < f.size(); ++i) cur = rat_max(cur, gap(f[i], h[perm[i]]));
    if (best < 0 || cur < best) best = cur;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline double pl_eval_d(const PLFn& f, double t) {
  if (t <= to_double(f.front().x)) return to_double(f.front().y);
  if (t >= to_double(f.back().x)) return to_double(f.back().y);
  std::size_t lo = 0, hi = f.size() - 1;
  while (lo + 1 < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (to_double(f[mid].x) <= t)
      lo = mid;
    else
      hi = mid;
  }
  double x0 = to_double(f[lo].x), x1 = to_double(f[lo + 1].x);
  double y0 = to_double(f[lo].y), y1 = to_double(f[lo + 1].y);
  return y0 + (y1 - y0) * (t - x0) / (x1 - x0);
}

struct SampleEstimate {
  double value = 0;
  double stderr_ = 0;
  long long samples = 0;
};

// Monte-Carlo estimate of tau(phi(f)) via fiber eigenvalue averages.
inline SampleEstimate pullback_sample(const DiagonalHom& h, const TraceMeasure& tau,
                                      const TestElement& f, long long samples,
                                      std::uint64_t seed) {
  if (!tau.diffuse()) throw Error("sampling oracle needs a diffuse trace");
  f.check(h.dom.kind);
  // Float quantile of tau.
  struct Seg {
    double u0, u1, t0, t1;
  };
  std::vector<Seg> segs;
  double u = 0;
  for (const auto& p : tau.pieces) {
    double m = to_double(p.mass);
    if (m <= 0) continue;
    segs.push_back({u, u + m, to_double(p.a), to_double(p.b)});
    u += m;
  }
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> unif(0.0, u);
  const bool gen = h.dom.kind == BlockKind::GenRazak;
  double sum = 0, sumsq = 0;
  for (long long s = 0; s < samples; ++s) {
    double x = unif(eng);
    double t = segs.back().t1;
    for (const auto& sg : segs)
      if (x <= sg.u1) {
        t = sg.t0 + (sg.t1 - sg.t0) * (x - sg.u0) / (sg.u1 - sg.u0);
        break;
      }
    double acc = 0;
    for (const auto& xi : h.xis) {
      double y = pl_eval_d(xi.bp, t);
      double v = pl_eval_d(f.g1, y);
      if (gen) v = (v + pl_eval_d(*f.g2, y)) / 2;
      acc += v;
    }
    acc /= static_cast<double>(h.xis.size());
    sum += acc;
    sumsq += acc * acc;
  }
  double mean = sum / static_cast<double>(samples);
  double var = std::max(0.0, sumsq / static_cast<double>(samples) - mean * mean);
  return {mean, std::sqrt(var / static_cast<double>(samples)), samples};
}

// Float grid sampler for map oscillation, used to cross-check exact diameters.
inline double map_osc_grid(const PLFn& f, long long resolution) {
  double lo = 1e300, hi = -1e300;
  for (long long i = 0; i <= resolution; ++i) {
    double v = pl_eval_d(f, static_cast<double>(i) / static_cast<double>(resolution));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi - lo;
}

// ---- deterministic random generators for trials -----------------------------

struct Rng {
  std::mt19937_64 eng;
  explicit Rng(std::uint64_t seed) : eng(seed) {}

  long long pick(long long lo, long long hi) {  // inclusive
    return std::uniform_int_distribution<long long>(lo, hi)(eng);
  }
  Rat rat_grid(long long den, long long lo_num, long long hi_num) {
    return Rat(pick(lo_num, hi_num), den);
  }
  bool coin() { return pick(0, 1) == 1; }
};

// Faithful diffuse probability measure with a few uniform pieces; density
// ratios stay bounded by the weight range.
inline TraceMeasure random_measure(Rng& rng, const Block& block, long long max_pieces = 4,
                                   long long grid = 16) {
  long long np = rng.pick(1, max_pieces);
  std::vector<Rat> cuts = {Rat(0), Rat(1)};
  for (long long i = 1; i < np; ++i) cuts.push_back(rng.rat_grid(grid, 1, grid - 1));
  sort_unique(cuts);
  std::vector<long long> w(cuts.size() - 1);
  Rat W(0);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    w[i] = rng.pick(1, 8);
    W += Rat(w[i]) * (cuts[i + 1] - cuts[i]);
  }
  TraceMeasure m;
  m.block = block;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    m.pieces.push_back({cuts[i], cuts[i + 1], Rat(w[i]) * (cuts[i + 1] - cuts[i]) / W});
  m.check();
  return m;
}

// 1-Lipschitz PL contraction vanishing at 1.
inline PLFn random_lip_graph(Rng& rng, long long segments = 3, long long grid = 8) {
  std::vector<Rat> xs = {Rat(0), Rat(1)};
  for (long long i = 1; i < segments; ++i) xs.push_back(rng.rat_grid(grid, 1, grid - 1));
  sort_unique(xs);
  PLFn g(xs.size());
  g.back() = {xs.back(), Rat(0)};
  for (std::size_t i = xs.size() - 1; i-- > 0;) {
    Rat dx = xs[i + 1] - xs[i];
    Rat slope = Rat(rng.pick(-2, 2), 2);  // in [-1,1]
    Rat y = g[i + 1].y - slope * dx;
    if (y > 1) y = Rat(1);
    if (y < -1) y = Rat(-1);
    g[i] = {xs[i], y};
  }
  return g;
}

inline TestElement random_test_element(Rng& rng, BlockKind kind) {
  if (kind == BlockKind::Razak) return test_element(random_lip_graph(rng), Rat(1));
  return test_element(random_lip_graph(rng), random_lip_graph(rng), Rat(1));
}

inline PLMap random_plmap(Rng& rng, long long segments = 3, long long grid = 12) {
  std::vector<Rat> xs = {Rat(0), Rat(1)};
  for (long long i = 1; i < segments; ++i) xs.push_back(rng.rat_grid(grid, 1, grid - 1));
  sort_unique(xs);
  PLFn f;
  for (const auto& x : xs) f.push_back({x, rng.rat_grid(grid, 0, grid)});
  return PLMap::make(std::move(f));
}

// PL map with oscillation strictly below the bound (for diameter trials).
inline PLMap random_small_plmap(Rng& rng, const Rat& bound, long long segments = 3,
                                long long grid = 64) {
  Rat base = rng.rat_grid(grid, 0, grid / 2);
  std::vector<Rat> xs = {Rat(0), Rat(1)};
  for (long long i = 1; i < segments; ++i) xs.push_back(rng.rat_grid(grid, 1, grid - 1));
  sort_unique(xs);
  PLFn f;
  for (const auto& x : xs) {
    Rat off = bound * Rat(rng.pick(0, 7), 8);
    Rat y = base + off;
    if (y > 1) y = Rat(1);
    f.push_back({x, y});
  }
  return PLMap::make(std::move(f));
}

}  // namespace frablocks
