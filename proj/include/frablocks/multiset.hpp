#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "frablocks/rational.hpp"

namespace frablocks {

// Finite multiset of rationals, stored sorted with multiplicities.
struct RatMultiset {
  std::vector<std::pair<Rat, long long>> items;  // sorted by value, mult > 0

  static RatMultiset of(std::vector<Rat> vals) {
    std::sort(vals.begin(), vals.end());
    RatMultiset m;
    for (auto& v : vals) {
      if (!m.items.empty() && m.items.back().first == v)
        ++m.items.back().second;
      else
        m.items.push_back({std::move(v), 1});
    }
    return m;
  }

  void add(const Rat& v, long long mult = 1) {
    if (mult == 0) return;
    if (mult < 0) throw Error("multiset with negative multiplicity");
    auto it = std::lower_bound(items.begin(), items.end(), v,
                               [](const auto& p, const Rat& x) { return p.first < x; });
    if (it != items.end() && it->first == v)
      it->second += mult;
    else
      items.insert(it, {v, mult});
  }

  void add_all(const RatMultiset& other, long long scale = 1) {
    for (const auto& [v, m] : other.items) add(v, m * scale);
  }

  // Removes one copy; throws if absent.
  void remove(const Rat& v) {
    auto it = std::lower_bound(items.begin(), items.end(), v,
                               [](const auto& p, const Rat& x) { return p.first < x; });
    if (it == items.end() || it->first != v) throw Error("removing a value absent from multiset");
    if (--it->second == 0) items.erase(it);
  }

  long long count(const Rat& v) const {
    auto it = std::lower_bound(items.begin(), items.end(), v,
                               [](const auto& p, const Rat& x) { return p.first < x; });
    return (it != items.end() && it->first == v) ? it->second : 0;
  }

  long long size() const {
    long long s = 0;
    for (const auto& [v, m] : items) s += m;
    return s;
  }

  bool empty() const { return items.empty(); }

  std::vector<Rat> flatten() const {
    std::vector<Rat> out;
    out.reserve(static_cast<std::size_t>(size()));
    for (const auto& [v, m] : items)
      for (long long i = 0; i < m; ++i) out.push_back(v);
    return out;
  }

  friend bool operator==(const RatMultiset& a, const RatMultiset& b) { return a.items == b.items; }
  friend bool operator!=(const RatMultiset& a, const RatMultiset& b) { return !(a == b); }
};

// Multiset intersection (pointwise min of multiplicities).
inline RatMultiset multiset_common(const RatMultiset& a, const RatMultiset& b) {
  RatMultiset out;
  std::size_t i = 0, j = 0;
  while (i < a.items.size() && j < b.items.size()) {
    if (a.items[i].first < b.items[j].first)
      ++i;
    else if (b.items[j].first < a.items[i].first)
      ++j;
    else {
      out.items.push_back({a.items[i].first, std::min(a.items[i].second, b.items[j].second)});
      ++i;
      ++j;
    }
  }
  return out;
}

// a minus b (multiplicities clipped at zero).
inline RatMultiset multiset_minus(const RatMultiset& a, const RatMultiset& b) {
  RatMultiset out;
  std::size_t i = 0, j = 0;
  while (i < a.items.size()) {
    while (j < b.items.size() && b.items[j].first < a.items[i].first) ++j;
    long long m = a.items[i].second;
    if (j < b.items.size() && b.items[j].first == a.items[i].first)
      m -= std::min(m, b.items[j].second);
    if (m > 0) out.items.push_back({a.items[i].first, m});
    ++i;
  }
  return out;
}

}  // namespace frablocks
