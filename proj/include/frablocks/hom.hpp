#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "frablocks/block.hpp"
#include "frablocks/measure.hpp"
#include "frablocks/multiset.hpp"
#include "frablocks/plmap.hpp"
#include "frablocks/rep.hpp"

namespace frablocks {

// Boundary data of a diagonal homomorphism into a generalised block: the
// representations of the domain appearing as the two matrix blocks at 0.
struct BoundarySplit {
  RepDescriptor repA;  // pi_{phi,inf1}
  RepDescriptor repB;  // pi_{phi,inf2}
};

struct DiagonalHom {
  Block dom, cod;
  std::vector<PLMap> xis;  // pointwise nondecreasing family
  std::optional<BoundarySplit> split;  // present iff cod is generalised

  long long family_size() const { return static_cast<long long>(xis.size()); }
};

struct Check {
  std::string name;
  bool ok;
  std::string detail;
};

struct ValidationCertificate {
  std::vector<Check> checks;
  bool valid = true;
  bool all_finite_to_one = true;

  void add(std::string name, bool ok, std::string detail = "") {
    if (!ok) valid = false;
    checks.push_back({std::move(name), ok, std::move(detail)});
  }
};

// Multiset of map values at t, as a raw representation of the domain.
inline RepDescriptor boundary_rep(const DiagonalHom& h, const Rat& t) {
  RepDescriptor r;
  r.block = h.dom;
  for (const auto& xi : h.xis) r.points.add(xi(t));
  return r;
}

namespace detail {

// Divides every constituent multiplicity of an expanded representation by q.
inline std::optional<RepDescriptor> rep_divide(const RepDescriptor& e, long long q) {
  RepDescriptor out;
  out.block = e.block;
  if (e.r1 % q || e.r2 % q || e.r0 % q) return std::nullopt;
  out.r1 = e.r1 / q;
  out.r2 = e.r2 / q;
  out.r0 = e.r0 / q;
  for (const auto& [v, m] : e.points.items) {
    if (m % q) return std::nullopt;
    out.points.add(v, m / q);
  }
  return out;
}

}  // namespace detail

// The representation at infinity of a hom into a Razak block, derived from the
// fiber at 0 (the fiber is n_cod stacked copies of it).
inline RepDescriptor derived_inf_rep(const DiagonalHom& h) {
  if (h.cod.kind != BlockKind::Razak) throw Error("derived boundary exists for Razak codomains");
  RepDescriptor e = expand(boundary_rep(h, Rat(0)));
  auto a = detail::rep_divide(e, h.cod.n);
  if (!a) throw Error("fiber at 0 does not split into n_cod equal stacks");
  return *a;
}

inline RepDescriptor fiber_rep(const DiagonalHom& h, const FiberPoint& at) {
  switch (at.tag) {
    case FiberPoint::Interior:
      return boundary_rep(h, at.t);
    case FiberPoint::Inf:
      return derived_inf_rep(h);
    case FiberPoint::Inf1:
      if (!h.split) throw Error("no boundary split");
      return h.split->repA;
    case FiberPoint::Inf2:
      if (!h.split) throw Error("no boundary split");
      return h.split->repB;
  }
  throw Error("bad fiber point");
}

inline ValidationCertificate validate(const DiagonalHom& h) {
  ValidationCertificate cert;
  try {
    h.dom.check();
    h.cod.check();
    cert.add("block-params", true);
  } catch (const Error& e) {
    cert.add("block-params", false, e.what());
    return cert;
  }
  cert.add("kind-compat", h.dom.kind == h.cod.kind,
           "mixed-kind embeddings are out of scope");
  if (!cert.valid) return cert;

  const long long fd = h.dom.fiber_dim();
  const long long fc = h.cod.fiber_dim();
  bool divides = fc % fd == 0;
  cert.add("fiber-divisibility", divides,
           std::to_string(fd) + " | " + std::to_string(fc));
  if (!divides) return cert;
  bool count_ok = h.family_size() == fc / fd;
  cert.add("family-size", count_ok,
           "expected " + std::to_string(fc / fd) + ", got " + std::to_string(h.family_size()));
  if (!count_ok) return cert;

  bool sorted = true;
  std::string where;
  for (std::size_t i = 1; i < h.xis.size(); ++i) {
    if (pl_min_diff(h.xis[i - 1].bp, h.xis[i].bp) < 0) {
      sorted = false;
      where = "maps " + std::to_string(i - 1) + "," + std::to_string(i) + " cross";
      break;
    }
  }
  cert.add("maps-sorted", sorted, where);

  for (const auto& xi : h.xis)
    if (!xi.finite_to_one()) cert.all_finite_to_one = false;

  const bool gen = h.cod.kind == BlockKind::GenRazak;
  if (gen) {
    if (!h.split) {
      cert.add("boundary-split", false, "generalised codomain needs a boundary split");
      return cert;
    }
    bool dims_ok = false;
    try {
      h.split->repA.check();
      h.split->repB.check();
      dims_ok = h.split->repA.block == h.dom && h.split->repB.block == h.dom &&
                h.split->repA.dim() == h.cod.k && h.split->repB.dim() == h.cod.k;
    } catch (const Error&) {
    }
    cert.add("split-dims", dims_ok,
             "each block at 0 must be a dim-" + std::to_string(h.cod.k) +
                 " representation of the domain");
    if (!dims_ok) return cert;

    RepDescriptor at0 = expand(boundary_rep(h, Rat(0)));
    RepDescriptor expA = expand(h.split->repA);
    RepDescriptor expB = expand(h.split->repB);
    RepDescriptor want0 = rep_scale(direct_sum(expA, expB), h.cod.n);
    cert.add("boundary-0", at0 == want0,
             "fiber at 0 must be n_cod stacked copies of the split");

    RepDescriptor at1 = expand(boundary_rep(h, Rat(1)));
    RepDescriptor want1 = rep_scale(direct_sum(expA, expB), h.cod.n - 1);
    want1.r0 += 2 * h.cod.k;
    cert.add("boundary-1", at1 == want1,
             "fiber at 1 must be (n_cod-1) stacked copies of the split plus 2 k_cod zeros");
  } else {
    if (h.split) {
      cert.add("boundary-split", false, "Razak codomain carries no split");
      return cert;
    }
    RepDescriptor at0 = expand(boundary_rep(h, Rat(0)));
    auto a = detail::rep_divide(at0, h.cod.n);
    cert.add("boundary-0", a.has_value(), "fiber at 0 must split into n_cod equal stacks");
    if (!a) return cert;
    bool dim_ok = a->dim() == h.cod.k;
    cert.add("inf-dim", dim_ok, "stack dimension must be k_cod");
    RepDescriptor at1 = expand(boundary_rep(h, Rat(1)));
    RepDescriptor want1 = rep_scale(*a, h.cod.n - 1);
    want1.r0 += h.cod.k;
    cert.add("boundary-1", at1 == want1,
             "fiber at 1 must be (n_cod-1) stacked copies plus k_cod zeros");
  }
  return cert;
}

inline DiagonalHom make_hom(Block dom, Block cod, std::vector<PLMap> xis,
                            std::optional<BoundarySplit> split = std::nullopt) {
  DiagonalHom h{std::move(dom), std::move(cod), std::move(xis), std::move(split)};
  ValidationCertificate cert = validate(h);
  if (!cert.valid) {
    std::string msg = "invalid diagonal homomorphism:";
    for (const auto& c : cert.checks)
      if (!c.ok) msg += " [" + c.name + "] " + c.detail;
    throw Error(msg);
  }
  return h;
}

inline DiagonalHom identity_hom(const Block& b) {
  std::optional<BoundarySplit> split;
  if (b.kind == BlockKind::GenRazak) split = BoundarySplit{rep_inf(b, 1, 0), rep_inf(b, 0, 1)};
  return make_hom(b, b, {PLMap::identity()}, std::move(split));
}

inline Rat diameter(const DiagonalHom& h) {
  Rat d(0);
  for (const auto& xi : h.xis) d = rat_max(d, diameter(xi));
  return d;
}

inline Rat d_diag(const DiagonalHom& a, const DiagonalHom& b) {
  if (a.dom != b.dom || a.cod != b.cod || a.xis.size() != b.xis.size())
    throw Error("diagonal distance needs equal shapes");
  Rat d(0);
  for (std::size_t i = 0; i < a.xis.size(); ++i)
    d = rat_max(d, pl_max_abs_diff(a.xis[i].bp, b.xis[i].bp));
  return d;
}

// A representation of the codomain pushed through the hom, as a representation
// of the domain. Dimension is preserved.
inline RepDescriptor push_rep_through(const RepDescriptor& rep, const DiagonalHom& h) {
  if (rep.block != h.cod) throw Error("representation must live over the codomain");
  RepDescriptor out;
  out.block = h.dom;
  for (const auto& [s, m] : rep.points.items)
    for (const auto& xi : h.xis) out.points.add(xi(s), m);
  if (h.cod.kind == BlockKind::GenRazak) {
    out = direct_sum(out, rep_scale(h.split->repA, rep.r1));
    out = direct_sum(out, rep_scale(h.split->repB, rep.r2));
  } else if (rep.r1 > 0) {
    out = direct_sum(out, rep_scale(derived_inf_rep(h), rep.r1));
  }
  out.r0 += rep.r0;
  return out;
}

// psi after phi without re-sorting the product family: the value multisets,
// boundary data and traces are those of the composite, but the family is not
// pointwise ordered. Used where large products are only evaluated.
inline DiagonalHom compose_raw(const DiagonalHom& phi, const DiagonalHom& psi) {
  if (phi.cod != psi.dom) throw Error("composition needs cod(phi) == dom(psi)");
  std::vector<PLMap> maps;
  maps.reserve(phi.xis.size() * psi.xis.size());
  for (const auto& zeta : psi.xis)
    for (const auto& xi : phi.xis) maps.push_back(compose(xi, zeta));
  std::optional<BoundarySplit> split;
  if (psi.cod.kind == BlockKind::GenRazak)
    split = BoundarySplit{push_rep_through(psi.split->repA, phi),
                          push_rep_through(psi.split->repB, phi)};
  return DiagonalHom{phi.dom, psi.cod, std::move(maps), std::move(split)};
}

// psi after phi. Associated maps are the pairwise compositions, re-sorted.
inline DiagonalHom compose(const DiagonalHom& phi, const DiagonalHom& psi) {
  DiagonalHom h = compose_raw(phi, psi);
  h.xis = sort_family(h.xis);
  return h;
}

inline K0Value k0(const DiagonalHom& h) {
  if (h.cod.kind == BlockKind::Razak) return {0, true};
  return rep_k0(h.split->repA);
}

// Conjugation by the block-swapping unitary of the codomain: same associated
// maps, boundary blocks exchanged, K0 negated.
inline DiagonalHom reverse_k(const DiagonalHom& h) {
  if (h.cod.kind != BlockKind::GenRazak) throw Error("reverse_k needs a generalised codomain");
  DiagonalHom out = h;
  std::swap(out.split->repA, out.split->repB);
  return out;
}

// Pullback of a faithful diffuse trace: the average of the pushforwards of the
// codomain measure under the associated maps. Exact.
inline TraceMeasure pullback_trace(const DiagonalHom& h, const TraceMeasure& tau) {
  if (tau.block != h.cod) throw Error("trace must live on the codomain");
  if (!tau.diffuse()) throw Error("pullback needs a diffuse trace");
  struct Contribution {
    Rat lo, hi, mass;
  };
  std::vector<Contribution> contrib;
  for (const auto& xi : h.xis) {
    for (std::size_t i = 1; i < xi.bp.size(); ++i) {
      const BP& p = xi.bp[i - 1];
      const BP& q = xi.bp[i];
      if (p.y == q.y) {
        if (diffuse_mass_on(tau, p.x, q.x) > 0)
          throw Error("constant segment carries positive mass: pullback is not diffuse");
        continue;
      }
      for (const auto& pc : tau.pieces) {
        if (pc.mass == 0) continue;
        Rat c = rat_max(pc.a, p.x);
        Rat d = rat_min(pc.b, q.x);
        if (!(c < d)) continue;
        Rat mass = pc.mass * (d - c) / (pc.b - pc.a);
        Rat y1 = p.y + (q.y - p.y) * (c - p.x) / (q.x - p.x);
        Rat y2 = p.y + (q.y - p.y) * (d - p.x) / (q.x - p.x);
        if (y2 < y1) std::swap(y1, y2);
        contrib.push_back({y1, y2, mass});
      }
    }
  }
  // Density sweep over the elementary y-grid.
  std::vector<Rat> ys = {Rat(0), Rat(1)};
  ys.reserve(2 * contrib.size() + 2);
  for (const auto& c : contrib) {
    ys.push_back(c.lo);
    ys.push_back(c.hi);
  }
  sort_unique(ys);
  struct Event {
    Rat x, density;
  };
  std::vector<Event> events;
  events.reserve(2 * contrib.size());
  for (const auto& c : contrib) {
    Rat density = c.mass / (c.hi - c.lo);
    events.push_back({c.lo, density});
    events.push_back({c.hi, -density});
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.x < b.x; });
  TraceMeasure out;
  out.block = h.dom;
  const Rat j(static_cast<long long>(h.xis.size()));
  std::size_t e = 0;
  Rat density(0);
  for (std::size_t i = 0; i + 1 < ys.size(); ++i) {
    while (e < events.size() && events[e].x <= ys[i]) density += events[e++].density;
    out.pieces.push_back({ys[i], ys[i + 1], density * (ys[i + 1] - ys[i]) / j});
  }
  // Merge equal-density neighbours.
  std::vector<Piece> merged;
  for (const auto& p : out.pieces) {
    if (!merged.empty()) {
      Piece& q = merged.back();
      if (q.mass * (p.b - p.a) == p.mass * (q.b - q.a)) {
        q.b = p.b;
        q.mass += p.mass;
        continue;
      }
    }
    merged.push_back(p);
  }
  out.pieces = std::move(merged);
  out.check();
  return out;
}

// The graphs t -> g(xi_i(t)) of a test element along the associated maps; the
// fiber eigenvalue multiset at t is this family's value multiset (each value
// with uniform multiplicity n*k).
inline std::vector<PLFn> eig_family(const DiagonalHom& h, const TestElement& f) {
  f.check(h.dom.kind);
  std::vector<PLFn> fam;
  fam.reserve(h.xis.size() * (h.dom.kind == BlockKind::GenRazak ? 2 : 1));
  for (const auto& xi : h.xis) fam.push_back(pl_compose(f.g1, xi.bp));
  if (h.dom.kind == BlockKind::GenRazak)
    for (const auto& xi : h.xis) fam.push_back(pl_compose(*f.g2, xi.bp));
  return fam;
}

// Exact sup over t in [0,1] of the eigenvalue matching distance between the
// fibers of two homs, for a single test element.
inline Rat sup_interior_udist(const DiagonalHom& a, const DiagonalHom& b, const TestElement& f) {
  if (a.dom != b.dom || a.cod.fiber_dim() / a.dom.fiber_dim() !=
                            b.cod.fiber_dim() / b.dom.fiber_dim())
    throw Error("fiber comparison needs equal shapes");
  return pl_family_match_sup(eig_family(a, f), eig_family(b, f));
}

struct FiberDist {
  Rat value;
  bool exact = true;  // false: certified upper bound
};

namespace detail {

struct Summand {
  int cls;  // 0 interior, 1 infinity, 2 zero
  Rat t;    // interior point, meaningless otherwise
  bool second = false;  // infinity index for generalised blocks
};

inline std::vector<Summand> summands(const RepDescriptor& rep) {
  RepDescriptor e = expand(rep);
  std::vector<Summand> out;
  for (const auto& [v, m] : e.points.items)
    for (long long i = 0; i < m; ++i) out.push_back({0, v, false});
  for (long long i = 0; i < e.r1; ++i) out.push_back({1, Rat(0), false});
  for (long long i = 0; i < e.r2; ++i) out.push_back({1, Rat(0), true});
  if (e.r0 > 0) out.push_back({2, Rat(static_cast<long long>(e.r0)), false});
  return out;
}

inline Rat summand_gap(const Summand& x, const Summand& y, const TestElement& f, BlockKind kind) {
  if (x.cls != y.cls) throw Error("incompatible summands");
  if (x.cls == 2) return Rat(0);
  if (x.cls == 1) {
    const PLFn& gx = x.second ? *f.g2 : f.g1;
    const PLFn& gy = y.second ? *f.g2 : f.g1;
    return rat_abs(pl_eval(gx, Rat(0)) - pl_eval(gy, Rat(0)));
  }
  Rat d = rat_abs(pl_eval(f.g1, x.t) - pl_eval(f.g1, y.t));
  if (kind == BlockKind::GenRazak) d = rat_max(d, rat_abs(pl_eval(*f.g2, x.t) - pl_eval(*f.g2, y.t)));
  return d;
}

}  // namespace detail

// Matching estimator for the unitary distance between two fiber
// representations relative to G. Exact eigenvalue matching for a single test
// element; for several, a bijection between irreducible summands (exhaustive
// up to 8 per class, else sorted), flagged as an upper bound.
inline FiberDist fiber_udist(const DiagonalHom& phi, const DiagonalHom& psi,
                             const std::vector<TestElement>& G, const FiberPoint& at) {
  if (G.empty()) return {Rat(0), true};
  RepDescriptor r1 = fiber_rep(phi, at);
  RepDescriptor r2 = fiber_rep(psi, at);
  if (r1.dim() != r2.dim()) throw Error("fiber dimensions differ");
  if (G.size() == 1)
    return {match_distance(eigenvalues(r1, G[0]), eigenvalues(r2, G[0])), true};

  const BlockKind kind = phi.dom.kind;
  auto s1 = detail::summands(r1);
  auto s2 = detail::summands(r2);
  auto cls_count = [](const std::vector<detail::Summand>& s, int cls) {
    return std::count_if(s.begin(), s.end(), [&](const auto& x) { return x.cls == cls; });
  };
  for (int cls : {0, 1, 2})
    if (cls_count(s1, cls) != cls_count(s2, cls)) {
      // No summand bijection; bound by the spread of the union of eigenvalues.
      Rat bound(0);
      for (const auto& f : G) {
        RatMultiset e1 = eigenvalues(r1, f);
        RatMultiset e2 = eigenvalues(r2, f);
        Rat lo = rat_min(e1.items.front().first, e2.items.front().first);
        Rat hi = rat_max(e1.items.back().first, e2.items.back().first);
        bound = rat_max(bound, hi - lo);
      }
      return {bound, false};
    }

  auto gap_all = [&](const detail::Summand& x, const detail::Summand& y) {
    Rat g(0);
    for (const auto& f : G) g = rat_max(g, detail::summand_gap(x, y, f, kind));
    return g;
  };
  auto match_class = [&](int cls) {
    std::vector<detail::Summand> a, b;
    for (const auto& s : s1)
      if (s.cls == cls) a.push_back(s);
    for (const auto& s : s2)
      if (s.cls == cls) b.push_back(s);
    if (a.empty()) return std::pair<Rat, bool>{Rat(0), true};
    if (a.size() <= 8) {
      std::vector<std::size_t> perm(a.size());
      for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
      Rat best(-1);
      do {
        Rat cur(0);
        for (std::size_t i = 0; i < perm.size(); ++i)
          cur = rat_max(cur, gap_all(a[i], b[perm[i]]));
        if (best < 0 || cur < best) best = cur;
      } while (std::next_permutation(perm.begin(), perm.end()));
      return std::pair<Rat, bool>{best, true};
    }
    auto key = [](const detail::Summand& s) { return std::pair<Rat, bool>(s.t, s.second); };
    std::sort(a.begin(), a.end(), [&](const auto& x, const auto& y) { return key(x) < key(y); });
    std::sort(b.begin(), b.end(), [&](const auto& x, const auto& y) { return key(x) < key(y); });
    Rat cur(0);
    for (std::size_t i = 0; i < a.size(); ++i) cur = rat_max(cur, gap_all(a[i], b[i]));
    return std::pair<Rat, bool>{cur, false};
  };
  Rat value(0);
  bool exact = true;
  for (int cls : {0, 1, 2}) {
    auto [v, ex] = match_class(cls);
    value = rat_max(value, v);
    exact = exact && ex;
  }
  return {value, exact};
}

inline bool all_finite_to_one(const DiagonalHom& h) {
  for (const auto& xi : h.xis)
    if (!xi.finite_to_one()) return false;
  return true;
}

inline Rat max_slope(const DiagonalHom& h) {
  Rat s(0);
  for (const auto& xi : h.xis) s = rat_max(s, pl_slope_max(xi.bp));
  return s;
}

}  // namespace frablocks
