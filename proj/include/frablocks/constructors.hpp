#pragma once

#include <utility>
#include <vector>

#include "frablocks/hom.hpp"

namespace frablocks {

namespace detail {

// The standard small-diameter map family used by the embedding constructors:
// pb maps into a block with parameters (pn, (pn-1)k), where b = pn-1. Rising
// maps are linear with rise 1/p; equal-endpoint maps are downward tents of
// depth 1/(2p), which keeps the family pointwise sorted.
inline std::vector<PLMap> embed_maps(long long n, long long p) {
  const long long b = p * n - 1;
  std::vector<PLMap> xis;
  xis.reserve(static_cast<std::size_t>(p * b));
  for (long long i = 1; i <= p * b; ++i) {
    long long j0 = (i + p + b) / (b + 1) - 1;  // ceil((i+p)/(b+1)) - 1
    if (j0 < 0) j0 = 0;
    long long j1 = (i - 1) / b;
    Rat s0(j0, p);
    Rat s1(j1 + 1, p);
    if (s0 < s1) {
      xis.push_back(PLMap::linear(s0, s1));
    } else if (s0 == s1) {
      Rat d(1, 2 * p);
      xis.push_back(PLMap::make({{Rat(0), s0}, {Rat(1, 2), s0 - d}, {Rat(1), s0}}));
    } else {
      throw Error("embedding maps must not descend across groups");
    }
  }
  return xis;
}

inline std::vector<Rat> grid_points(long long p, bool odd) {
  std::vector<Rat> pts;
  for (long long m = odd ? 1 : 2; m <= p - 1; m += 2) pts.push_back(Rat(m, p));
  return pts;
}

}  // namespace detail

// A_{n,k} -> A_{pn,(pn-1)k} with diameter <= 1/p.
inline DiagonalHom razak_embed(long long n, long long k, long long p) {
  if (p < 1) throw Error("razak_embed needs p >= 1");
  Block dom = razak(n, k);
  Block cod = razak(p * n, (p * n - 1) * k);
  return make_hom(dom, cod, detail::embed_maps(n, p));
}

// A_{n,k} -> A_{n,k k'}: the k'-fold amplification.
inline DiagonalHom razak_amplify(long long n, long long k, long long kp) {
  if (kp < 1) throw Error("razak_amplify needs k' >= 1");
  Block dom = razak(n, k);
  Block cod = razak(n, k * kp);
  std::vector<PLMap> xis(static_cast<std::size_t>(kp), PLMap::identity());
  return make_hom(dom, cod, std::move(xis));
}

// B_{n,k} -> B_{pn,(pn-1)k}, p odd, 0 <= j <= n-1, K0 = 2j-(n-1). The two
// boundary blocks interleave the odd and even p-grid points; `even_in_a`
// selects the opposite interleaving (same maps, same K0).
inline DiagonalHom gen_embed(long long n, long long k, long long p, long long j,
                             bool even_in_a = false) {
  if (p < 3 || p % 2 == 0) throw Error("gen_embed needs odd p >= 3");
  if (n < 2) throw Error("gen_embed needs n >= 2");
  if (j < 0 || j > n - 1) throw Error("gen_embed needs 0 <= j <= n-1");
  Block dom = gen_razak(n, k);
  Block cod = gen_razak(p * n, (p * n - 1) * k);
  RepDescriptor a = rep_inf(dom, j, n - 1 - j);
  RepDescriptor b = rep_inf(dom, n - 1 - j, j);
  for (const auto& t : detail::grid_points(p, !even_in_a)) a.points.add(t);
  for (const auto& t : detail::grid_points(p, even_in_a)) b.points.add(t);
  return make_hom(dom, cod, detail::embed_maps(n, p), BoundarySplit{std::move(a), std::move(b)});
}

// B_{n,k} -> B_{n,k k'}, 0 <= j <= k', K0 = 2j-k'.
inline DiagonalHom gen_amplify(long long n, long long k, long long kp, long long j) {
  if (kp < 1) throw Error("gen_amplify needs k' >= 1");
  if (j < 0 || j > kp) throw Error("gen_amplify needs 0 <= j <= k'");
  Block dom = gen_razak(n, k);
  Block cod = gen_razak(n, k * kp);
  std::vector<PLMap> xis(static_cast<std::size_t>(kp), PLMap::identity());
  RepDescriptor a = rep_inf(dom, j, kp - j);
  RepDescriptor b = rep_inf(dom, kp - j, j);
  return make_hom(dom, cod, std::move(xis), BoundarySplit{std::move(a), std::move(b)});
}

// B_{n,k} -> B_{nk,(nk-1)k'}, |j| <= (n-1)k', K0 = j. Odd (n-1)k'-j needs
// (k-1)k' >= k to place the compensating zero blocks.
inline DiagonalHom gen_rho(long long n, long long k, long long kp, long long j) {
  if (n < 2 || kp < 2) throw Error("gen_rho needs n >= 2 and k' >= 2");
  const long long K = (n - 1) * kp;
  if (j < -K || j > K) throw Error("gen_rho needs |j| <= (n-1)k'");
  Block dom = gen_razak(n, k);
  Block cod = gen_razak(n * k, (n * k - 1) * kp);
  std::vector<PLMap> xis;
  xis.reserve(static_cast<std::size_t>((n * k - 1) * kp));
  const long long rising = (n - 1) * kp;
  for (long long i = 0; i < rising; ++i) xis.push_back(PLMap::linear(Rat(0), Rat(1)));
  for (long long i = rising; i < (n * k - 1) * kp; ++i)
    xis.push_back(PLMap::make({{Rat(0), Rat(1)}, {Rat(1, 2), Rat(1, 2)}, {Rat(1), Rat(1)}}));

  const long long z = (k - 1) * kp;
  RepDescriptor a, b;
  if ((K - j) % 2 == 0) {
    long long r = (K - j) / 2;
    a = rep_inf(dom, K - r, r, z);
    b = rep_inf(dom, r, K - r, z);
  } else if (K - j == 1) {
    if (z < k) throw Error("gen_rho with odd (n-1)k'-j needs (k-1)k' >= k");
    a = rep_inf(dom, K, 1, z - k);
    b = rep_inf(dom, 0, K - 1, z + k);
  } else {
    if (z < k) throw Error("gen_rho with odd (n-1)k'-j needs (k-1)k' >= k");
    long long r = (K - j - 1) / 2;
    a = rep_inf(dom, K - r - 1, r, z + k);
    b = rep_inf(dom, r + 1, K - r, z - k);
  }
  return make_hom(dom, cod, std::move(xis), BoundarySplit{std::move(a), std::move(b)});
}

// Closed form of the Lebesgue pullback under the standard embedding family
// (independent of the codomain kind): each rising map pushes to the uniform
// measure on its level interval, each tent to the uniform measure on its
// half-step range.
inline TraceMeasure embed_pullback_lebesgue(const Block& dom, long long p) {
  const long long n = dom.n;
  const long long b = p * n - 1;
  auto rises = [&](long long j0) { return j0 == 0 ? b - p + 1 : b + 1 - p + j0; };
  auto flats = [&](long long j0) { return j0 >= 1 && j0 <= p - 1 ? p - j0 : 0; };
  TraceMeasure m;
  m.block = dom;
  for (long long h = 0; h < 2 * p; ++h) {
    Rat mass = Rat(rises(h / 2), 2);
    if (h % 2 == 1) mass += Rat(flats((h + 1) / 2));
    m.pieces.push_back({Rat(h, 2 * p), Rat(h + 1, 2 * p), mass / (p * b)});
  }
  m.check();
  return m;
}

// The diagonal automorphism matching two faithful diffuse traces:
// (A, sigma) -> (A, tau), trivial on K-theory.
inline DiagonalHom transition_hom(const TraceMeasure& sigma, const TraceMeasure& tau) {
  if (sigma.block != tau.block) throw Error("transition needs a common block");
  PLMap xi = transition_plmap(sigma, tau);
  std::optional<BoundarySplit> split;
  if (sigma.block.kind == BlockKind::GenRazak)
    split = BoundarySplit{rep_inf(sigma.block, 1, 0), rep_inf(sigma.block, 0, 1)};
  return make_hom(sigma.block, sigma.block, {std::move(xi)}, std::move(split));
}

}  // namespace frablocks
