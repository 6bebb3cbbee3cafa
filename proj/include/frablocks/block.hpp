#pragma once

#include <cstdint>
#include <string>

#include "frablocks/rational.hpp"

namespace frablocks {

enum class BlockKind { Razak, GenRazak };

// A (generalised) Razak block identified by its kind and parameters.
struct Block {
  BlockKind kind = BlockKind::Razak;
  long long n = 1;
  long long k = 1;

  void check() const {
    if (n < 1 || k < 1) throw Error("block parameters must satisfy n >= 1, k >= 1");
  }

  long long fiber_dim() const { return (kind == BlockKind::Razak ? 1 : 2) * n * k; }
  long long inf_dim() const { return k; }

  std::string str() const {
    return (kind == BlockKind::Razak ? "A_{" : "B_{") + std::to_string(n) + "," +
           std::to_string(k) + "}";
  }

  friend bool operator==(const Block& a, const Block& b) {
    return a.kind == b.kind && a.n == b.n && a.k == b.k;
  }
  friend bool operator!=(const Block& a, const Block& b) { return !(a == b); }
};

inline Block razak(long long n, long long k) {
  Block b{BlockKind::Razak, n, k};
  b.check();
  return b;
}

inline Block gen_razak(long long n, long long k) {
  Block b{BlockKind::GenRazak, n, k};
  b.check();
  return b;
}

// A point of the spectrum at which fibers are compared.
struct FiberPoint {
  enum Tag { Interior, Inf, Inf1, Inf2 } tag = Interior;
  Rat t;  // meaningful for Interior only

  static FiberPoint interior(Rat t) { return {Interior, std::move(t)}; }
  static FiberPoint inf() { return {Inf, Rat(0)}; }
  static FiberPoint inf1() { return {Inf1, Rat(0)}; }
  static FiberPoint inf2() { return {Inf2, Rat(0)}; }
};

}  // namespace frablocks
