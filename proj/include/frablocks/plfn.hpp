#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "frablocks/rational.hpp"

namespace frablocks {

// A poly-line y(x): breakpoints with strictly increasing x, linear in between.
// Used both for associated maps [0,1]->[0,1] and for scalar test functions
// [0,1]->Q (no range restriction at this layer).
struct BP {
  Rat x, y;

  friend bool operator==(const BP& a, const BP& b) { return a.x == b.x && a.y == b.y; }
};

using PLFn = std::vector<BP>;

inline void pl_check(const PLFn& f) {
  if (f.size() < 2) throw Error("poly-line needs at least two breakpoints");
  for (std::size_t i = 1; i < f.size(); ++i)
    if (!(f[i - 1].x < f[i].x)) throw Error("poly-line breakpoints must have strictly increasing x");
}

inline Rat pl_eval(const PLFn& f, const Rat& t) {
  if (t < f.front().x || t > f.back().x) throw Error("poly-line evaluated outside its domain");
  // Last index with x <= t.
  std::size_t lo = 0, hi = f.size() - 1;
  while (lo < hi) {
    std::size_t mid = (lo + hi + 1) / 2;
    if (f[mid].x <= t)
      lo = mid;
    else
      hi = mid - 1;
  }
  if (f[lo].x == t) return f[lo].y;
  const BP& a = f[lo];
  const BP& b = f[lo + 1];
  return a.y + (b.y - a.y) * (t - a.x) / (b.x - a.x);
}

// Drops interior breakpoints lying on the segment through their neighbours.
inline PLFn pl_normalize(PLFn f) {
  pl_check(f);
  PLFn out;
  out.reserve(f.size());
  out.push_back(f.front());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) {
    const BP& a = out.back();
    const BP& b = f[i];
    const BP& c = f[i + 1];
    // Collinear iff (b.y-a.y)*(c.x-b.x) == (c.y-b.y)*(b.x-a.x).
    if ((b.y - a.y) * (c.x - b.x) == (c.y - b.y) * (b.x - a.x)) continue;
    out.push_back(b);
  }
  out.push_back(f.back());
  return out;
}

inline Rat pl_min_y(const PLFn& f) {
  Rat m = f.front().y;
  for (const auto& p : f) m = rat_min(m, p.y);
  return m;
}

inline Rat pl_max_y(const PLFn& f) {
  Rat m = f.front().y;
  for (const auto& p : f) m = rat_max(m, p.y);
  return m;
}

// Oscillation max y - min y; PL functions attain both at breakpoints.
inline Rat pl_osc(const PLFn& f) { return pl_max_y(f) - pl_min_y(f); }

inline Rat pl_slope_max(const PLFn& f) {
  Rat m(0);
  for (std::size_t i = 1; i < f.size(); ++i)
    m = rat_max(m, rat_abs((f[i].y - f[i - 1].y) / (f[i].x - f[i - 1].x)));
  return m;
}

// Valid upper bound for the oscillation over any window of given length.
inline Rat pl_osc_window_bound(const PLFn& f, const Rat& len) {
  return rat_min(pl_osc(f), pl_slope_max(f) * len);
}

inline bool pl_finite_to_one(const PLFn& f) {
  for (std::size_t i = 1; i < f.size(); ++i)
    if (f[i].y == f[i - 1].y) return false;
  return true;
}

inline std::vector<Rat> pl_xs(const PLFn& f) {
  std::vector<Rat> xs;
  xs.reserve(f.size());
  for (const auto& p : f) xs.push_back(p.x);
  return xs;
}

inline void sort_unique(std::vector<Rat>& xs) {
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
}

// Rebuilds f with the given x values inserted (values outside the domain are ignored).
inline PLFn pl_refine(const PLFn& f, const std::vector<Rat>& add) {
  std::vector<Rat> xs = pl_xs(f);
  for (const auto& x : add)
    if (x >= f.front().x && x <= f.back().x) xs.push_back(x);
  sort_unique(xs);
  PLFn out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back({x, pl_eval(f, x)});
  return out;
}

// f after g: t -> f(g(t)). Exact; the result's breakpoints are g's breakpoints
// together with the preimages under g of f's breakpoint abscissae.
inline PLFn pl_compose(const PLFn& f, const PLFn& g) {
  std::vector<Rat> ts = pl_xs(g);
  for (std::size_t i = 1; i < g.size(); ++i) {
    const BP& a = g[i - 1];
    const BP& b = g[i];
    if (a.y == b.y) continue;
    const Rat ylo = rat_min(a.y, b.y);
    const Rat yhi = rat_max(a.y, b.y);
    for (const auto& c : f) {
      if (c.x <= ylo || c.x >= yhi) continue;
      ts.push_back(a.x + (b.x - a.x) * (c.x - a.y) / (b.y - a.y));
    }
  }
  sort_unique(ts);
  PLFn out;
  out.reserve(ts.size());
  for (const auto& t : ts) out.push_back({t, pl_eval(f, pl_eval(g, t))});
  return pl_normalize(out);
}

// max |f - g| over the common domain (exact: the difference is linear between
// merged breakpoints).
inline Rat pl_max_abs_diff(const PLFn& f, const PLFn& g) {
  std::vector<Rat> xs = pl_xs(f);
  for (const auto& p : g) xs.push_back(p.x);
  sort_unique(xs);
  Rat m(0);
  for (const auto& x : xs) m = rat_max(m, rat_abs(pl_eval(f, x) - pl_eval(g, x)));
  return m;
}

// min (g - f); >= 0 iff f <= g pointwise.
inline Rat pl_min_diff(const PLFn& f, const PLFn& g) {
  std::vector<Rat> xs = pl_xs(f);
  for (const auto& p : g) xs.push_back(p.x);
  sort_unique(xs);
  bool first = true;
  Rat m(0);
  for (const auto& x : xs) {
    Rat d = pl_eval(g, x) - pl_eval(f, x);
    if (first || d < m) m = d;
    first = false;
  }
  return m;
}

struct Interval {
  Rat a, b;  // closed, a <= b
};

// Exact preimage f^{-1}([lo,hi]) as a merged union of closed intervals.
inline std::vector<Interval> pl_preimage_intervals(const PLFn& f, const Rat& lo, const Rat& hi) {
  if (lo > hi) throw Error("preimage window with lo > hi");
  std::vector<Interval> raw;
  for (std::size_t i = 1; i < f.size(); ++i) {
    const BP& p = f[i - 1];
    const BP& q = f[i];
    if (p.y == q.y) {
      if (lo <= p.y && p.y <= hi) raw.push_back({p.x, q.x});
      continue;
    }
    const Rat ymin = rat_min(p.y, q.y);
    const Rat ymax = rat_max(p.y, q.y);
    const Rat l = rat_max(lo, ymin);
    const Rat h = rat_min(hi, ymax);
    if (l > h) continue;
    auto invert = [&](const Rat& y) { return p.x + (q.x - p.x) * (y - p.y) / (q.y - p.y); };
    Rat t1 = invert(l), t2 = invert(h);
    if (t1 > t2) std::swap(t1, t2);
    raw.push_back({t1, t2});
  }
  std::sort(raw.begin(), raw.end(), [](const Interval& u, const Interval& v) {
    return u.a < v.a || (u.a == v.a && u.b < v.b);
  });
  std::vector<Interval> merged;
  for (const auto& iv : raw) {
    if (!merged.empty() && iv.a <= merged.back().b)
      merged.back().b = rat_max(merged.back().b, iv.b);
    else
      merged.push_back(iv);
  }
  return merged;
}

inline Rat intervals_total_length(const std::vector<Interval>& ivs) {
  Rat s(0);
  for (const auto& iv : ivs) s += iv.b - iv.a;
  return s;
}

namespace detail {

// Interior crossing of two lines known from their values at the cell ends;
// only called when the sign of (u - v) strictly flips across the cell.
inline Rat cell_crossing(const Rat& a, const Rat& b, const Rat& dua, const Rat& dub) {
  return a + (b - a) * dua / (dua - dub);
}

}  // namespace detail

// Pointwise order statistics of a family over a common domain. Exact: the
// output mesh carries every pairwise crossing, so each order statistic is
// linear between consecutive output breakpoints.
inline std::vector<PLFn> pl_sort_family(const std::vector<PLFn>& fs) {
  if (fs.empty()) return {};
  const std::size_t j = fs.size();
  std::vector<Rat> xs;
  for (const auto& f : fs)
    for (const auto& p : f) xs.push_back(p.x);
  sort_unique(xs);

  // Values of every map at every mesh point.
  std::vector<std::vector<Rat>> vals(xs.size(), std::vector<Rat>());
  for (std::size_t m = 0; m < xs.size(); ++m) {
    vals[m].reserve(j);
    for (const auto& f : fs) vals[m].push_back(pl_eval(f, xs[m]));
  }

  // Crossings are only solved inside cells whose value order changes; sorting
  // each cell's endpoint columns detects that cheaply.
  std::vector<Rat> cross;
  std::vector<std::size_t> idx(j);
  for (std::size_t m = 0; m + 1 < xs.size(); ++m) {
    const auto& va = vals[m];
    const auto& vb = vals[m + 1];
    for (std::size_t u = 0; u < j; ++u) idx[u] = u;
    std::sort(idx.begin(), idx.end(), [&](std::size_t u, std::size_t v) {
      if (va[u] != va[v]) return va[u] < va[v];
      return vb[u] < vb[v];
    });
    bool monotone = true;
    for (std::size_t u = 1; u < j; ++u)
      if (vb[idx[u - 1]] > vb[idx[u]]) {
        monotone = false;
        break;
      }
    if (monotone) continue;
    for (std::size_t u = 0; u < j; ++u)
      for (std::size_t w = u + 1; w < j; ++w) {
        Rat da = va[idx[u]] - va[idx[w]];  // <= 0 by the sort
        Rat db = vb[idx[u]] - vb[idx[w]];
        if (da < 0 && db > 0)
          cross.push_back(detail::cell_crossing(xs[m], xs[m + 1], da, db));
      }
  }
  if (!cross.empty()) {
    for (const auto& c : cross) xs.push_back(c);
    sort_unique(xs);
  }

  std::vector<PLFn> out(j);
  for (auto& f : out) f.reserve(xs.size());
  std::vector<Rat> column(j);
  for (const auto& x : xs) {
    for (std::size_t u = 0; u < j; ++u) column[u] = pl_eval(fs[u], x);
    std::sort(column.begin(), column.end());
    for (std::size_t u = 0; u < j; ++u) out[u].push_back({x, column[u]});
  }
  for (auto& f : out) f = pl_normalize(std::move(f));
  return out;
}

// sup over the common domain of the optimal matching distance between the two
// pointwise value multisets. Requires |as| == |bs|. Exact: within-family
// crossings are added to the evaluation set, so between consecutive evaluation
// points both families' order statistics are linear and the per-index absolute
// difference is convex.
inline Rat pl_family_match_sup(const std::vector<PLFn>& as, const std::vector<PLFn>& bs) {
  if (as.size() != bs.size()) throw Error("family matching needs equal sizes");
  if (as.empty()) return Rat(0);
  const std::size_t j = as.size();

  std::vector<Rat> xs;
  for (const auto& f : as)
    for (const auto& p : f) xs.push_back(p.x);
  for (const auto& f : bs)
    for (const auto& p : f) xs.push_back(p.x);
  sort_unique(xs);

  auto column = [&](const std::vector<PLFn>& fs, const Rat& x) {
    std::vector<Rat> c;
    c.reserve(fs.size());
    for (const auto& f : fs) c.push_back(pl_eval(f, x));
    return c;
  };

  // Within-family crossings per cell; sorted-neighbour detection keeps the
  // typical cost near j log j per cell.
  auto cell_crossings = [&](const std::vector<Rat>& la, const std::vector<Rat>& ra,
                            const Rat& x0, const Rat& x1, std::vector<Rat>& sink) {
    std::vector<std::size_t> idx(la.size());
    for (std::size_t u = 0; u < idx.size(); ++u) idx[u] = u;
    std::sort(idx.begin(), idx.end(), [&](std::size_t u, std::size_t v) {
      if (la[u] != la[v]) return la[u] < la[v];
      return ra[u] < ra[v];
    });
    bool sorted_right = true;
    for (std::size_t m = 1; m < idx.size(); ++m)
      if (ra[idx[m - 1]] > ra[idx[m]]) {
        sorted_right = false;
        break;
      }
    if (sorted_right) return;
    for (std::size_t m = 0; m < idx.size(); ++m)
      for (std::size_t w = m + 1; w < idx.size(); ++w) {
        std::size_t u = idx[m], v = idx[w];
        Rat da = la[u] - la[v];
        Rat db = ra[u] - ra[v];
        if ((da > 0 && db < 0) || (da < 0 && db > 0))
          sink.push_back(detail::cell_crossing(x0, x1, da, db));
      }
  };

  Rat best(0);
  auto eval_at = [&](const Rat& x) {
    std::vector<Rat> ca = column(as, x);
    std::vector<Rat> cb = column(bs, x);
    std::sort(ca.begin(), ca.end());
    std::sort(cb.begin(), cb.end());
    for (std::size_t u = 0; u < j; ++u) best = rat_max(best, rat_abs(ca[u] - cb[u]));
  };

  eval_at(xs[0]);
  for (std::size_t m = 0; m + 1 < xs.size(); ++m) {
    eval_at(xs[m + 1]);
    std::vector<Rat> extra;
    std::vector<Rat> la = column(as, xs[m]);
    std::vector<Rat> ra = column(as, xs[m + 1]);
    cell_crossings(la, ra, xs[m], xs[m + 1], extra);
    std::vector<Rat> lb = column(bs, xs[m]);
    std::vector<Rat> rb = column(bs, xs[m + 1]);
    cell_crossings(lb, rb, xs[m], xs[m + 1], extra);
    sort_unique(extra);
    for (const auto& x : extra) eval_at(x);
  }
  return best;
}

}  // namespace frablocks
