#pragma once

#include <algorithm>
#include <optional>
#include <utility>
#include <vector>

#include "frablocks/block.hpp"
#include "frablocks/multiset.hpp"
#include "frablocks/plmap.hpp"
#include "frablocks/rep.hpp"

namespace frablocks {

using PointMultiset = RatMultiset;

// One uniform-density piece of the diffuse part.
struct Piece {
  Rat a, b, mass;
};

// A trace of a block as a measure: atoms at the points at infinity plus a
// piecewise-uniform diffuse part covering [0,1]. Total mass 1 for traces;
// sub-probability functionals are representable and flagged by callers.
struct TraceMeasure {
  Block block;
  Rat atom1 = Rat(0);
  Rat atom2 = Rat(0);
  std::vector<Piece> pieces;

  void check() const {
    block.check();
    if (atom1 < 0 || atom2 < 0) throw Error("negative atom mass");
    if (block.kind == BlockKind::Razak && atom2 != 0)
      throw Error("second infinity atom only exists for generalised blocks");
    if (pieces.empty()) throw Error("diffuse part must cover [0,1]");
    if (pieces.front().a != 0 || pieces.back().b != 1)
      throw Error("diffuse pieces must cover [0,1]");
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      if (!(pieces[i].a < pieces[i].b)) throw Error("empty piece");
      if (pieces[i].mass < 0) throw Error("negative piece mass");
      if (i > 0 && pieces[i - 1].b != pieces[i].a) throw Error("pieces must be contiguous");
    }
  }

  Rat diffuse_mass() const {
    Rat s(0);
    for (const auto& p : pieces) s += p.mass;
    return s;
  }
  Rat total_mass() const { return atom1 + atom2 + diffuse_mass(); }
  bool faithful() const {
    for (const auto& p : pieces)
      if (p.mass == 0) return false;
    return true;
  }
  bool diffuse() const { return atom1 == 0 && atom2 == 0; }
  bool probability() const { return total_mass() == 1; }

  friend bool operator==(const TraceMeasure& x, const TraceMeasure& y) {
    if (x.block != y.block || x.atom1 != y.atom1 || x.atom2 != y.atom2) return false;
    return normalized_pieces(x) == normalized_pieces(y);
  }
  friend bool operator!=(const TraceMeasure& x, const TraceMeasure& y) { return !(x == y); }

 private:
  // Pieces with equal density merged, for structural comparison of measures.
  static std::vector<std::pair<Rat, Rat>> normalized_pieces(const TraceMeasure& m) {
    std::vector<std::pair<Rat, Rat>> segs;  // (right endpoint, density)
    for (const auto& p : m.pieces) {
      Rat density = p.mass / (p.b - p.a);
      if (!segs.empty() && segs.back().second == density)
        segs.back().first = p.b;
      else
        segs.push_back({p.b, density});
    }
    return segs;
  }
};

inline TraceMeasure lebesgue(const Block& b) {
  TraceMeasure m;
  m.block = b;
  m.pieces = {{Rat(0), Rat(1), Rat(1)}};
  return m;
}

inline TraceMeasure uniform_on(const Block& blk, const Rat& a, const Rat& b) {
  TraceMeasure m;
  m.block = blk;
  if (a > 0) m.pieces.push_back({Rat(0), a, Rat(0)});
  m.pieces.push_back({a, b, Rat(1)});
  if (b < 1) m.pieces.push_back({b, Rat(1), Rat(0)});
  m.check();
  return m;
}

// Mass of the diffuse part on [lo,hi].
inline Rat diffuse_mass_on(const TraceMeasure& m, const Rat& lo, const Rat& hi) {
  if (lo > hi) throw Error("interval with lo > hi");
  Rat s(0);
  for (const auto& p : m.pieces) {
    Rat c = rat_max(p.a, lo);
    Rat d = rat_min(p.b, hi);
    if (c < d) s += p.mass * (d - c) / (p.b - p.a);
  }
  return s;
}

inline Rat cdf_at(const TraceMeasure& m, const Rat& t) { return diffuse_mass_on(m, Rat(0), t); }

namespace detail {

// Quantile of the diffuse part as closed u-segments [u0,u1] -> [t0,t1];
// zero-mass pieces are skipped, producing jumps between segments.
struct QSeg {
  Rat u0, u1, t0, t1;
};

inline std::vector<QSeg> quantile_segments(const TraceMeasure& m) {
  std::vector<QSeg> segs;
  Rat u(0);
  for (const auto& p : m.pieces) {
    if (p.mass == 0) continue;
    segs.push_back({u, u + p.mass, p.a, p.b});
    u += p.mass;
  }
  if (segs.empty()) throw Error("measure with zero diffuse mass has no quantile");
  return segs;
}

inline Rat qseg_eval(const QSeg& s, const Rat& u) {
  return s.t0 + (s.t1 - s.t0) * (u - s.u0) / (s.u1 - s.u0);
}

}  // namespace detail

// Optimal matching (bottleneck) distance between diffuse measures on [0,1] of
// equal total mass: the uniform distance between their quantile functions,
// evaluated exactly segment against segment (one-sided values at jumps).
inline Rat bottleneck(const TraceMeasure& mu, const TraceMeasure& nu) {
  if (!mu.diffuse() || !nu.diffuse())
    throw Error("bottleneck compares diffuse parts; compare atoms with atom_gap");
  if (mu.diffuse_mass() != nu.diffuse_mass())
    throw Error("bottleneck needs equal total mass");
  auto a = detail::quantile_segments(mu);
  auto b = detail::quantile_segments(nu);
  std::vector<Rat> us;
  for (const auto& s : a) {
    us.push_back(s.u0);
    us.push_back(s.u1);
  }
  for (const auto& s : b) {
    us.push_back(s.u0);
    us.push_back(s.u1);
  }
  sort_unique(us);
  Rat best(0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t c = 0; c + 1 < us.size(); ++c) {
    const Rat& u0 = us[c];
    const Rat& u1 = us[c + 1];
    while (a[ia].u1 <= u0 && ia + 1 < a.size()) ++ia;
    while (b[ib].u1 <= u0 && ib + 1 < b.size()) ++ib;
    best = rat_max(best, rat_abs(detail::qseg_eval(a[ia], u0) - detail::qseg_eval(b[ib], u0)));
    best = rat_max(best, rat_abs(detail::qseg_eval(a[ia], u1) - detail::qseg_eval(b[ib], u1)));
  }
  return best;
}

// Difference of the infinity atoms, compared coordinatewise.
inline Rat atom_gap(const TraceMeasure& mu, const TraceMeasure& nu) {
  if (mu.block.kind != nu.block.kind) throw Error("atom_gap needs a common block kind");
  return rat_max(rat_abs(mu.atom1 - nu.atom1), rat_abs(mu.atom2 - nu.atom2));
}

// Max sorted gap between equal-size multisets = optimal matching distance.
inline Rat match_distance(const PointMultiset& F, const PointMultiset& H) {
  if (F.size() != H.size()) throw Error("match_distance needs equal sizes");
  if (F.size() == 0) throw Error("match_distance of empty multisets");
  Rat best(0);
  std::size_t i = 0, j = 0;
  long long ci = 0, cj = 0;  // consumed within current items
  while (i < F.items.size()) {
    long long take = std::min(F.items[i].second - ci, H.items[j].second - cj);
    best = rat_max(best, rat_abs(F.items[i].first - H.items[j].first));
    ci += take;
    cj += take;
    if (ci == F.items[i].second) {
      ++i;
      ci = 0;
    }
    if (cj == H.items[j].second) {
      ++j;
      cj = 0;
    }
  }
  return best;
}

struct BellResult {
  Rat value;
  bool exact = true;  // false: certified upper bound via the sorted-window argument
};

namespace detail {

inline void removal_combos(const std::vector<Rat>& v, std::size_t count, std::size_t start,
                           std::vector<std::size_t>& cur, std::vector<std::vector<std::size_t>>& out) {
  if (cur.size() == count) {
    out.push_back(cur);
    return;
  }
  for (std::size_t i = start; i < v.size(); ++i) {
    // Equal values: only remove a run's prefix, avoiding duplicate multisets.
    if (i > start && v[i] == v[i - 1] && (cur.empty() || cur.back() != i - 1)) continue;
    cur.push_back(i);
    removal_combos(v, count, i + 1, cur, out);
    cur.pop_back();
  }
}

inline Rat match_flat(const std::vector<Rat>& f, const std::vector<Rat>& h) {
  Rat best(0);
  for (std::size_t i = 0; i < f.size(); ++i) best = rat_max(best, rat_abs(f[i] - h[i]));
  return best;
}

}  // namespace detail

// Adversarial-removal matching distance: the worst matching distance after
// deleting equal numbers (at most ell) of elements from each side. Exhaustive
// up to 12 elements; beyond that the sorted-window bound from the counting
// lemma's proof, flagged as an upper bound.
inline BellResult b_ell(const PointMultiset& F, const PointMultiset& H, long long ell) {
  if (F.size() != H.size()) throw Error("b_ell needs equal sizes");
  if (ell < 0 || ell > F.size()) throw Error("b_ell removal budget out of range");
  const std::vector<Rat> f = F.flatten();
  const std::vector<Rat> h = H.flatten();
  const std::size_t j = f.size();
  if (j <= 12) {
    Rat best(0);
    for (std::size_t s = 0; s <= static_cast<std::size_t>(ell); ++s) {
      if (s == j) break;  // nothing left to match
      std::vector<std::vector<std::size_t>> fc, hc;
      std::vector<std::size_t> cur;
      detail::removal_combos(f, s, 0, cur, fc);
      detail::removal_combos(h, s, 0, cur, hc);
      std::vector<Rat> fr, hr;
      fr.reserve(j - s);
      hr.reserve(j - s);
      for (const auto& rf : fc) {
        fr.clear();
        std::size_t p = 0;
        for (std::size_t i = 0; i < j; ++i) {
          if (p < rf.size() && rf[p] == i) {
            ++p;
            continue;
          }
          fr.push_back(f[i]);
        }
        for (const auto& rh : hc) {
          hr.clear();
          std::size_t q = 0;
          for (std::size_t i = 0; i < j; ++i) {
            if (q < rh.size() && rh[q] == i) {
              ++q;
              continue;
            }
            hr.push_back(h[i]);
          }
          best = rat_max(best, detail::match_flat(fr, hr));
        }
      }
    }
    return {best, true};
  }
  // Sorted-window bound: a removal of at most ell elements shifts sorted
  // positions by at most ell.
  Rat bound(0);
  for (std::size_t i = 0; i < j; ++i) {
    std::size_t hi = std::min(i + static_cast<std::size_t>(ell), j - 1);
    bound = rat_max(bound, rat_abs(f[i] - h[i]));
    bound = rat_max(bound, rat_abs(f[hi] - h[i]));
    bound = rat_max(bound, rat_abs(f[i] - h[hi]));
    bound = rat_max(bound, rat_abs(f[hi] - h[hi]));
  }
  return {bound, false};
}

// The quantile transport taking tau's diffuse part to sigma's:
// xi(t) = quantile_sigma(cdf_tau(t)), a PL homeomorphism of [0,1].
inline PLMap transition_plmap(const TraceMeasure& sigma, const TraceMeasure& tau) {
  if (sigma.block != tau.block) throw Error("transition needs a common block");
  if (!sigma.diffuse() || !tau.diffuse() || !sigma.faithful() || !tau.faithful())
    throw Error("transition needs faithful diffuse measures");
  if (!sigma.probability() || !tau.probability())
    throw Error("transition needs probability measures");
  std::vector<Rat> ts;
  for (const auto& p : tau.pieces) {
    ts.push_back(p.a);
    ts.push_back(p.b);
  }
  // Preimages under cdf_tau of sigma's cumulative boundary values.
  auto qtau = detail::quantile_segments(tau);
  Rat c(0);
  for (const auto& p : sigma.pieces) {
    c += p.mass;
    for (const auto& s : qtau)
      if (s.u0 <= c && c <= s.u1) {
        ts.push_back(detail::qseg_eval(s, c));
        break;
      }
  }
  sort_unique(ts);
  auto qsigma = detail::quantile_segments(sigma);
  PLFn bp;
  for (const auto& t : ts) {
    Rat u = cdf_at(tau, t);
    Rat y;
    bool found = false;
    for (const auto& s : qsigma)
      if (s.u0 <= u && u <= s.u1) {
        y = detail::qseg_eval(s, u);
        found = true;
        break;
      }
    if (!found) throw Error("quantile lookup failed");
    bp.push_back({t, y});
  }
  return PLMap::make(std::move(bp));
}

// Exact pushforward of a diffuse measure under a PL map; it exists as a
// piecewise-uniform measure iff no constant segment carries positive mass.
inline TraceMeasure pushforward(const TraceMeasure& mu, const PLMap& xi) {
  if (!mu.diffuse()) throw Error("pushforward needs a diffuse measure");
  struct Contribution {
    Rat lo, hi, mass;
  };
  std::vector<Contribution> contrib;
  std::vector<Rat> ys = {Rat(0), Rat(1)};
  for (std::size_t i = 1; i < xi.bp.size(); ++i) {
    const BP& p = xi.bp[i - 1];
    const BP& q = xi.bp[i];
    if (p.y == q.y) {
      if (diffuse_mass_on(mu, p.x, q.x) > 0)
        throw Error("constant segment carries positive mass: pushforward has an interior atom");
      continue;
    }
    for (const auto& pc : mu.pieces) {
      if (pc.mass == 0) continue;
      Rat c = rat_max(pc.a, p.x);
      Rat d = rat_min(pc.b, q.x);
      if (!(c < d)) continue;
      Rat mass = pc.mass * (d - c) / (pc.b - pc.a);
      Rat y1 = p.y + (q.y - p.y) * (c - p.x) / (q.x - p.x);
      Rat y2 = p.y + (q.y - p.y) * (d - p.x) / (q.x - p.x);
      if (y2 < y1) std::swap(y1, y2);
      contrib.push_back({y1, y2, mass});
      ys.push_back(y1);
      ys.push_back(y2);
    }
  }
  sort_unique(ys);
  TraceMeasure out;
  out.block = mu.block;
  for (std::size_t i = 0; i + 1 < ys.size(); ++i) {
    Rat lo = ys[i], hi = ys[i + 1];
    Rat mass(0);
    for (const auto& c : contrib) {
      Rat l = rat_max(c.lo, lo);
      Rat h = rat_min(c.hi, hi);
      if (l < h) mass += c.mass * (h - l) / (c.hi - c.lo);
    }
    out.pieces.push_back({lo, hi, mass});
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

inline TraceMeasure scale_measure(const TraceMeasure& m, const Rat& c) {
  TraceMeasure out = m;
  out.atom1 *= c;
  out.atom2 *= c;
  for (auto& p : out.pieces) p.mass *= c;
  return out;
}

inline TraceMeasure add_measures(const TraceMeasure& x, const TraceMeasure& y) {
  if (x.block != y.block) throw Error("adding measures over different blocks");
  TraceMeasure out;
  out.block = x.block;
  out.atom1 = x.atom1 + y.atom1;
  out.atom2 = x.atom2 + y.atom2;
  std::vector<Rat> ys;
  for (const auto& p : x.pieces) {
    ys.push_back(p.a);
    ys.push_back(p.b);
  }
  for (const auto& p : y.pieces) {
    ys.push_back(p.a);
    ys.push_back(p.b);
  }
  sort_unique(ys);
  for (std::size_t i = 0; i + 1 < ys.size(); ++i)
    out.pieces.push_back({ys[i], ys[i + 1],
                          diffuse_mass_on(x, ys[i], ys[i + 1]) + diffuse_mass_on(y, ys[i], ys[i + 1])});
  out.check();
  return out;
}

// Integral of the PL function g against the diffuse part (exact).
inline Rat integrate_pl(const TraceMeasure& m, const PLFn& g) {
  Rat s(0);
  for (const auto& p : m.pieces) {
    if (p.mass == 0) continue;
    Rat density = p.mass / (p.b - p.a);
    // Trapezoid over g's mesh restricted to [a,b].
    std::vector<Rat> xs = {p.a, p.b};
    for (const auto& q : g)
      if (q.x > p.a && q.x < p.b) xs.push_back(q.x);
    sort_unique(xs);
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
      s += density * (xs[i + 1] - xs[i]) * (pl_eval(g, xs[i]) + pl_eval(g, xs[i + 1])) / 2;
  }
  return s;
}

// tau(f) for the scalar-block model: the normalized fiber trace is g1 (Razak)
// or (g1+g2)/2 (generalised); atoms evaluate the boundary scalars.
inline Rat trace_value(const TraceMeasure& tau, const TestElement& f) {
  f.check(tau.block.kind);
  Rat s(0);
  if (tau.block.kind == BlockKind::Razak) {
    s += integrate_pl(tau, f.g1);
    s += tau.atom1 * pl_eval(f.g1, Rat(0));
  } else {
    s += (integrate_pl(tau, f.g1) + integrate_pl(tau, *f.g2)) / 2;
    s += tau.atom1 * pl_eval(f.g1, Rat(0));
    s += tau.atom2 * pl_eval(*f.g2, Rat(0));
  }
  return s;
}

}  // namespace frablocks
