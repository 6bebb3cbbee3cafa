#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "frablocks/block.hpp"
#include "frablocks/multiset.hpp"
#include "frablocks/plfn.hpp"

namespace frablocks {

// A finite-dimensional representation of a block up to unitary equivalence:
// interior evaluation points (multiset over [0,1]; 0 and 1 are allowed in raw
// descriptors and removed by expansion), multiplicities of the representations
// at infinity and the zero summand dimension.
struct RepDescriptor {
  Block block;
  RatMultiset points;
  long long r1 = 0;
  long long r2 = 0;  // always 0 in the Razak case
  long long r0 = 0;

  void check() const {
    block.check();
    if (r1 < 0 || r2 < 0 || r0 < 0) throw Error("negative multiplicity in representation");
    if (block.kind == BlockKind::Razak && r2 != 0)
      throw Error("second infinity representation only exists for generalised blocks");
    for (const auto& [v, m] : points.items)
      if (v < 0 || v > 1) throw Error("representation point outside [0,1]");
  }

  long long dim() const {
    return points.size() * block.fiber_dim() + (r1 + r2) * block.inf_dim() + r0;
  }

  friend bool operator==(const RepDescriptor& a, const RepDescriptor& b) {
    return a.block == b.block && a.points == b.points && a.r1 == b.r1 && a.r2 == b.r2 &&
           a.r0 == b.r0;
  }
  friend bool operator!=(const RepDescriptor& a, const RepDescriptor& b) { return !(a == b); }
};

inline RepDescriptor rep_zero(const Block& b, long long r0 = 0) {
  RepDescriptor r;
  r.block = b;
  r.r0 = r0;
  return r;
}

inline RepDescriptor rep_points(const Block& b, std::vector<Rat> pts) {
  RepDescriptor r;
  r.block = b;
  r.points = RatMultiset::of(std::move(pts));
  r.check();
  return r;
}

inline RepDescriptor rep_inf(const Block& b, long long r1, long long r2 = 0, long long r0 = 0) {
  RepDescriptor r;
  r.block = b;
  r.r1 = r1;
  r.r2 = r2;
  r.r0 = r0;
  r.check();
  return r;
}

inline RepDescriptor direct_sum(const RepDescriptor& a, const RepDescriptor& b) {
  if (a.block != b.block) throw Error("direct sum of representations over different blocks");
  RepDescriptor out = a;
  out.points.add_all(b.points);
  out.r1 += b.r1;
  out.r2 += b.r2;
  out.r0 += b.r0;
  return out;
}

inline RepDescriptor rep_scale(const RepDescriptor& a, long long m) {
  if (m < 0) throw Error("negative representation multiplicity");
  RepDescriptor out = a;
  out.points = RatMultiset{};
  out.points.add_all(a.points, m);
  out.r1 *= m;
  out.r2 *= m;
  out.r0 *= m;
  return out;
}

// Full decomposition into irreducibles: the boundary points 0 and 1 are
// replaced by their infinity/zero constituents. Two representations are
// unitarily equivalent iff their expansions are equal.
inline RepDescriptor expand(const RepDescriptor& rep) {
  rep.check();
  RepDescriptor out = rep;
  out.points = RatMultiset{};
  const long long n = rep.block.n;
  const long long k = rep.block.k;
  const bool gen = rep.block.kind == BlockKind::GenRazak;
  for (const auto& [v, m] : rep.points.items) {
    if (v == 0) {
      out.r1 += n * m;
      if (gen) out.r2 += n * m;
    } else if (v == 1) {
      out.r1 += (n - 1) * m;
      if (gen) out.r2 += (n - 1) * m;
      out.r0 += (gen ? 2 : 1) * k * m;
    } else {
      out.points.add(v, m);
    }
  }
  return out;
}

// The unique normal form with points in [0,1) and r1 < n (Razak) or
// min(r1, r2) < n (generalised): n-fold stacks of infinity representations are
// re-bundled into evaluations at 0.
inline RepDescriptor canonical_rep(const RepDescriptor& rep) {
  RepDescriptor out = expand(rep);
  const long long n = rep.block.n;
  if (rep.block.kind == BlockKind::Razak) {
    long long q = out.r1 / n;
    if (q > 0) {
      out.r1 -= q * n;
      out.points.add(Rat(0), q);
    }
  } else {
    long long q = std::min(out.r1, out.r2) / n;
    if (q > 0) {
      out.r1 -= q * n;
      out.r2 -= q * n;
      out.points.add(Rat(0), q);
    }
  }
  return out;
}

inline bool rep_equiv(const RepDescriptor& a, const RepDescriptor& b) {
  return expand(a) == expand(b);
}

struct K0Value {
  long long value = 0;
  bool razak_trivial = false;  // Razak blocks have no K0 obstruction
};

// K0 of a representation of a generalised block: r1 - r2, invariant under
// expansion and canonicalisation.
inline K0Value rep_k0(const RepDescriptor& rep) {
  if (rep.block.kind == BlockKind::Razak) return {0, true};
  RepDescriptor e = expand(rep);
  return {e.r1 - e.r2, false};
}

// Scalar-block model of a self-adjoint element: fibers are g1(t) (and g2(t))
// times the identity on each n*k block. g(1) = 0 keeps the element inside the
// block; `lipschitz` is a declared upper bound for the slopes.
struct TestElement {
  PLFn g1;
  std::optional<PLFn> g2;  // absent for Razak
  Rat lipschitz;

  void check(BlockKind kind) const {
    pl_check(g1);
    if (g1.front().x != 0 || g1.back().x != 1) throw Error("test element domain must be [0,1]");
    if (g1.back().y != 0) throw Error("test element must vanish at 1");
    if (pl_slope_max(g1) > lipschitz) throw Error("declared Lipschitz bound too small");
    if (kind == BlockKind::GenRazak) {
      if (!g2) throw Error("generalised block test element needs g2");
      pl_check(*g2);
      if (g2->front().x != 0 || g2->back().x != 1) throw Error("test element domain must be [0,1]");
      if (g2->back().y != 0) throw Error("test element must vanish at 1");
      if (pl_slope_max(*g2) > lipschitz) throw Error("declared Lipschitz bound too small");
    } else if (g2) {
      throw Error("razak block test element must not carry g2");
    }
  }
};

inline TestElement test_element(PLFn g1, Rat lip) {
  TestElement f{std::move(g1), std::nullopt, std::move(lip)};
  f.check(BlockKind::Razak);
  return f;
}

inline TestElement test_element(PLFn g1, PLFn g2, Rat lip) {
  TestElement f{std::move(g1), std::move(g2), std::move(lip)};
  f.check(BlockKind::GenRazak);
  return f;
}

// Eigenvalue multiset of pi(f) with multiplicities; cardinality equals dim(pi).
inline RatMultiset eigenvalues(const RepDescriptor& rep, const TestElement& f) {
  rep.check();
  f.check(rep.block.kind);
  const long long n = rep.block.n;
  const long long k = rep.block.k;
  const bool gen = rep.block.kind == BlockKind::GenRazak;
  RatMultiset out;
  for (const auto& [v, m] : rep.points.items) {
    out.add(pl_eval(f.g1, v), m * n * k);
    if (gen) out.add(pl_eval(*f.g2, v), m * n * k);
  }
  if (rep.r1 > 0) out.add(pl_eval(f.g1, Rat(0)), rep.r1 * k);
  if (rep.r2 > 0) out.add(pl_eval(*f.g2, Rat(0)), rep.r2 * k);
  if (rep.r0 > 0) out.add(Rat(0), rep.r0);
  return out;
}

}  // namespace frablocks
