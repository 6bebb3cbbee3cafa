#pragma once

#include <utility>
#include <vector>

#include "frablocks/plfn.hpp"

namespace frablocks {

// A piecewise-linear continuous map [0,1] -> [0,1] with exact rational
// breakpoints; the carrier of associated maps of diagonal homomorphisms.
struct PLMap {
  PLFn bp;

  static PLMap make(PLFn f) {
    pl_check(f);
    if (f.front().x != 0 || f.back().x != 1) throw Error("map domain must be [0,1]");
    for (const auto& p : f)
      if (p.y < 0 || p.y > 1) throw Error("map range must lie in [0,1]");
    return PLMap{pl_normalize(std::move(f))};
  }

  static PLMap identity() { return make({{Rat(0), Rat(0)}, {Rat(1), Rat(1)}}); }
  static PLMap constant(const Rat& y) { return make({{Rat(0), y}, {Rat(1), y}}); }
  static PLMap linear(const Rat& y0, const Rat& y1) { return make({{Rat(0), y0}, {Rat(1), y1}}); }

  Rat operator()(const Rat& t) const { return pl_eval(bp, t); }
  Rat at0() const { return bp.front().y; }
  Rat at1() const { return bp.back().y; }
  bool finite_to_one() const { return pl_finite_to_one(bp); }

  friend bool operator==(const PLMap& a, const PLMap& b) {
    if (a.bp.size() != b.bp.size()) return false;
    for (std::size_t i = 0; i < a.bp.size(); ++i)
      if (a.bp[i].x != b.bp[i].x || a.bp[i].y != b.bp[i].y) return false;
    return true;
  }
};

inline Rat diameter(const PLMap& m) { return pl_osc(m.bp); }

// xi after zeta. diameter(result) <= diameter(xi).
inline PLMap compose(const PLMap& xi, const PLMap& zeta) {
  return PLMap{pl_compose(xi.bp, zeta.bp)};
}

// True iff the family is pointwise nondecreasing in the index.
inline bool family_sorted(const std::vector<PLMap>& xis) {
  for (std::size_t i = 1; i < xis.size(); ++i)
    if (pl_min_diff(xis[i - 1].bp, xis[i].bp) < 0) return false;
  return true;
}

inline std::vector<PLMap> sort_family(const std::vector<PLMap>& xis) {
  if (family_sorted(xis)) return xis;
  std::vector<PLFn> fs;
  fs.reserve(xis.size());
  for (const auto& m : xis) fs.push_back(m.bp);
  std::vector<PLFn> sorted = pl_sort_family(fs);
  std::vector<PLMap> out;
  out.reserve(sorted.size());
  for (auto& f : sorted) out.push_back(PLMap{std::move(f)});
  return out;
}

inline std::vector<Interval> preimage_intervals(const PLMap& m, const Rat& a, const Rat& b) {
  if (a < 0 || b > 1 || a > b) throw Error("preimage window must satisfy 0 <= a <= b <= 1");
  return pl_preimage_intervals(m.bp, a, b);
}

}  // namespace frablocks
