#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "frablocks/amalgamation.hpp"
#include "frablocks/constructors.hpp"
#include "frablocks/hom.hpp"
#include "frablocks/measure.hpp"

namespace frablocks {

struct Stage {
  Block block;
  TraceMeasure trace;
};

// Stage parameters past the materialization cap, kept symbolically.
struct SymbolicStage {
  BigInt n, k;
};

struct InductiveSequence {
  ClassTag tag;
  std::vector<Stage> stages;
  std::vector<DiagonalHom> steps;      // steps[i]: stages[i] -> stages[i+1]
  std::vector<long long> step_params;  // p (embeddings) or k' (amplifications)
  std::vector<char> step_kinds;        // 'e' embedding, 'a' amplification
  std::vector<SymbolicStage> symbolic;
};

namespace detail {

constexpr long long kFiberCap = 1000000;

// Pull the Lebesgue trace of the last materialized stage back along the steps.
inline void assign_traces(InductiveSequence& seq) {
  if (seq.stages.empty()) return;
  seq.stages.back().trace = lebesgue(seq.stages.back().block);
  for (std::size_t i = seq.steps.size(); i-- > 0;)
    seq.stages[i].trace = pullback_trace(seq.steps[i], seq.stages[i + 1].trace);
}

// Dimension-count padding bound in big integers, for symbolic stages.
inline BigInt symbolic_pad_bound(const BigInt& q, const BigInt& n, const BigInt& k, bool gen) {
  BigInt zunit = (gen ? 2 : 1) * k;
  BigInt fiber = (gen ? 2 : 1) * n * k;
  return q / zunit + q / fiber + (q / k) / n + 1;
}

}  // namespace detail

// The Razak-block sequence: A_{1,1} with step p = i+1 at the i-th step; the
// stage parameters follow n_{i+1} = (i+1) n_i, k_{i+1} = (n_{i+1}-1) k_i.
inline InductiveSequence w_sequence(long long stages_count) {
  if (stages_count < 1) throw Error("sequence needs at least one stage");
  InductiveSequence seq;
  seq.tag = ClassTag::w();
  Block cur = razak(1, 1);
  seq.stages.push_back({cur, lebesgue(cur)});
  for (long long i = 0; i + 1 < stages_count; ++i) {
    long long p = i + 2;
    Block next = razak(p * cur.n, (p * cur.n - 1) * cur.k);
    if (next.fiber_dim() > detail::kFiberCap) {
      BigInt n(cur.n), k(cur.k);
      for (long long r = i; r + 1 < stages_count; ++r) {
        n = BigInt(r + 2) * n;
        k = (n - 1) * k;
        seq.symbolic.push_back({n, k});
      }
      break;
    }
    seq.steps.push_back(razak_embed(cur.n, cur.k, p));
    seq.step_params.push_back(p);
    seq.step_kinds.push_back('e');
    seq.stages.push_back({next, lebesgue(next)});
    cur = next;
  }
  detail::assign_traces(seq);
  return seq;
}

// The odd step parameter demanded by the stable-uniqueness padding: enough to
// pad representation pairs of every earlier stage at the boundary-stack
// dimension of the current stage.
inline std::pair<long long, bool> z0_step_parameter(const InductiveSequence& seq,
                                                    const Block& cur) {
  long long q = (cur.n - 1) * cur.k;
  long long bound = 0;
  bool exact = true;
  for (const auto& st : seq.stages) {
    PointBound pb = point_bound(q, st.block);
    bound = std::max(bound, pb.value);
    exact = exact && pb.exact;
  }
  long long p = std::max<long long>(3, 2 * bound + 1);
  if (p % 2 == 0) ++p;
  return {p, exact};
}

// The generalised sequence: B_{2,1} with unit-K embedding steps (j = n/2).
inline InductiveSequence z0_sequence(long long stages_count) {
  if (stages_count < 1) throw Error("sequence needs at least one stage");
  InductiveSequence seq;
  seq.tag = ClassTag::k1();
  Block cur = gen_razak(2, 1);
  seq.stages.push_back({cur, lebesgue(cur)});
  for (long long i = 0; i + 1 < stages_count; ++i) {
    auto [p, exact] = z0_step_parameter(seq, cur);
    Block next = gen_razak(p * cur.n, (p * cur.n - 1) * cur.k);
    if (next.fiber_dim() > detail::kFiberCap) {
      BigInt n(cur.n), k(cur.k);
      for (long long r = i; r + 1 < stages_count; ++r) {
        BigInt q = (n - 1) * k;
        BigInt pb = 2 * detail::symbolic_pad_bound(q, n, k, true) + 1;
        if (pb % 2 == 0) ++pb;
        if (pb < 3) pb = 3;
        n = pb * n;
        k = (n - 1) * k;
        seq.symbolic.push_back({n, k});
      }
      break;
    }
    seq.steps.push_back(gen_embed(cur.n, cur.k, p, cur.n / 2));
    seq.step_params.push_back(p);
    seq.step_kinds.push_back('e');
    seq.stages.push_back({next, lebesgue(next)});
    cur = next;
  }
  detail::assign_traces(seq);
  return seq;
}

// The UHF-tensored sequence: each cycle is a unit-K embedding step followed by
// an amplification of K-theory p (j = k' = p), cycling through the primes.
// The embedding steps use the minimal odd parameter.
inline InductiveSequence z0_uhf_sequence(const std::vector<long long>& primes,
                                         long long cycles) {
  if (primes.empty()) throw Error("supernatural sequence needs at least one prime");
  if (cycles < 0) throw Error("cycle count must be nonnegative");
  InductiveSequence seq;
  seq.tag = ClassTag::kp(primes);
  Block cur = gen_razak(2, 1);
  seq.stages.push_back({cur, lebesgue(cur)});
  for (long long c = 0; c < cycles; ++c) {
    const long long p = 3;
    Block next = gen_razak(p * cur.n, (p * cur.n - 1) * cur.k);
    if (next.fiber_dim() > detail::kFiberCap) break;
    seq.steps.push_back(gen_embed(cur.n, cur.k, p, cur.n / 2));
    seq.step_params.push_back(p);
    seq.step_kinds.push_back('e');
    seq.stages.push_back({next, lebesgue(next)});
    cur = next;

    long long pr = primes[static_cast<std::size_t>(c) % primes.size()];
    Block amp = gen_razak(cur.n, cur.k * pr);
    if (amp.fiber_dim() > detail::kFiberCap) break;
    seq.steps.push_back(gen_amplify(cur.n, cur.k, pr, pr));
    seq.step_params.push_back(pr);
    seq.step_kinds.push_back('a');
    seq.stages.push_back({amp, lebesgue(amp)});
    cur = amp;
  }
  detail::assign_traces(seq);
  return seq;
}

struct SequenceReport {
  bool ok = true;
  std::vector<Check> checks;
  long long composite_k0 = 1;

  void add(std::string name, bool good, std::string detail = "") {
    if (!good) ok = false;
    checks.push_back({std::move(name), good, std::move(detail)});
  }
};

inline SequenceReport validate_sequence(const InductiveSequence& seq) {
  SequenceReport rep;
  for (std::size_t i = 0; i < seq.steps.size(); ++i) {
    const DiagonalHom& h = seq.steps[i];
    std::string tagstr = "step-" + std::to_string(i);
    ValidationCertificate cert = validate(h);
    rep.add(tagstr + "-valid", cert.valid);
    rep.add(tagstr + "-blocks",
            h.dom == seq.stages[i].block && h.cod == seq.stages[i + 1].block);
    rep.add(tagstr + "-trace",
            pullback_trace(h, seq.stages[i + 1].trace) == seq.stages[i].trace,
            "exact trace pullback");
    if (seq.tag.kind != ClassTag::W) {
      long long kv = k0(h).value;
      rep.add(tagstr + "-k0", seq.tag.allows(kv), "K0 = " + std::to_string(kv));
      rep.composite_k0 *= kv;
    }
  }
  return rep;
}

// ---- genericity harness -------------------------------------------------------

struct GenericityCertificate {
  bool pass = false;
  long long stage_i = -1, stage_k = -1, stage_final = -1;
  Rat epsilon;
  Rat supFiberDist;
  bool supExact = false;
  bool tracePreserved = false;
  Rat infDist1, infDist2;
  bool infChecked = false;
  long long required_stages = 0;  // when failing: a stage-count estimate
  std::string notes;
};

namespace detail {

constexpr std::size_t kHarnessBudget = 20000;

// A trace-preserving class morphism C -> stage k, when one of the recognised
// constructor patterns lands exactly on the stage block.
inline std::optional<DiagonalHom> stage_morphism(const Block& C, const TraceMeasure& tauC,
                                                 const Stage& target) {
  std::vector<DiagonalHom> chain;
  if (!(C == target.block)) {
    if (C.kind != target.block.kind) return std::nullopt;
    if (target.block.n % C.n != 0) return std::nullopt;
    long long p = target.block.n / C.n;
    if (C.kind == BlockKind::Razak) {
      if (p > 1) chain.push_back(razak_embed(C.n, C.k, p));
    } else {
      if (p == 1) return std::nullopt;  // equal n but unequal k: no unit-K amplification
      if (p % 2 == 0 || C.n % 2 != 0) return std::nullopt;
      chain.push_back(gen_embed(C.n, C.k, p, C.n / 2));
    }
    Block mid = chain.empty() ? C : chain.back().cod;
    if (target.block.k % mid.k != 0) return std::nullopt;
    long long amp = target.block.k / mid.k;
    if (amp > 1) {
      if (C.kind == BlockKind::Razak) {
        chain.push_back(razak_amplify(mid.n, mid.k, amp));
      } else {
        if (amp % 2 == 0) return std::nullopt;  // unit K-theory needs odd k'
        chain.push_back(gen_amplify(mid.n, mid.k, amp, (amp + 1) / 2));
      }
    }
    if (chain.empty() || !(chain.back().cod == target.block)) return std::nullopt;
  }
  TraceMeasure pulled = target.trace;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) pulled = pullback_trace(*it, pulled);
  DiagonalHom eta = transition_hom(tauC, pulled);
  for (const auto& h : chain) eta = compose(eta, h);
  return eta;
}

}  // namespace detail

// Checks the approximate-dominance condition of a generic sequence for one
// datum: a trace-preserving psi out of a stage, pushed back into the sequence
// through a stage morphism eta, must approach the sequence's own connecting
// maps. Certificates are fiberwise and exact.
inline GenericityCertificate genericity_certify(const InductiveSequence& seq, const Block& C,
                                                const TraceMeasure& tauC,
                                                const DiagonalHom& psi,
                                                const std::vector<TestElement>& F,
                                                const Rat& eps) {
  GenericityCertificate cert;
  cert.epsilon = eps;
  if (!(psi.cod == C)) throw Error("psi must land in the named block");
  if (!validate(psi).valid) throw Error("psi is not a valid diagonal homomorphism");

  // Locate the source stage.
  TraceMeasure pulled = pullback_trace(psi, tauC);
  for (std::size_t i = 0; i < seq.stages.size(); ++i)
    if (seq.stages[i].block == psi.dom && seq.stages[i].trace == pulled) {
      cert.stage_i = static_cast<long long>(i);
      break;
    }
  if (cert.stage_i < 0) throw Error("psi is not trace-preserving out of any stage");

  // Find a stage morphism out of C.
  std::optional<DiagonalHom> eta;
  for (std::size_t k = 0; k < seq.stages.size(); ++k) {
    eta = detail::stage_morphism(C, tauC, seq.stages[k]);
    if (eta) {
      cert.stage_k = static_cast<long long>(k);
      break;
    }
  }
  if (!eta) {
    cert.notes = "no constructor chain embeds the block into the materialized stages";
    cert.required_stages = static_cast<long long>(seq.stages.size()) + 1;
    return cert;
  }

  const Rat L = detail::max_lipschitz(F);
  const std::size_t i = static_cast<std::size_t>(cert.stage_i);
  const std::size_t k = static_cast<std::size_t>(cert.stage_k);

  DiagonalHom left = identity_hom(seq.stages[i].block);   // steps i..m composed
  DiagonalHom right = compose_raw(psi, *eta);             // eta after psi, then steps k..m
  for (std::size_t s = i; s < k; ++s) left = compose_raw(left, seq.steps[s]);

  for (std::size_t m = std::max(i, k); m < seq.stages.size(); ++m) {
    if (m > std::max(i, k)) {
      const DiagonalHom& step = seq.steps[m - 1];
      if (left.xis.size() * step.xis.size() > detail::kHarnessBudget ||
          right.xis.size() * step.xis.size() > detail::kHarnessBudget) {
        cert.notes = "composite family exceeds the desk-scale budget";
        cert.required_stages = static_cast<long long>(m);
        return cert;
      }
      left = compose_raw(left, step);
      right = compose_raw(right, step);
    }
    cert.stage_final = static_cast<long long>(m);

    Rat dist;
    bool exact;
    if (F.size() == 1) {
      dist = sup_interior_udist(left, right, F[0]);
      exact = true;
    } else {
      std::vector<PLFn> a, b;
      for (const auto& xi : left.xis) a.push_back(xi.bp);
      for (const auto& xi : right.xis) b.push_back(xi.bp);
      dist = F.empty() ? Rat(0) : L * pl_family_match_sup(a, b);
      exact = F.empty();
    }
    cert.supFiberDist = dist;
    cert.supExact = exact;
    if (!(dist < eps)) continue;

    cert.tracePreserved =
        pullback_trace(left, seq.stages[m].trace) == seq.stages[i].trace &&
        pullback_trace(right, seq.stages[m].trace) == seq.stages[i].trace;

    // Generalised sequences: certify the fibers at infinity after one more
    // sequence step, via the stable padding and sorted point matching.
    if (seq.tag.kind != ClassTag::W) {
      if (m + 1 >= seq.stages.size() || seq.step_kinds[m] != 'e') {
        cert.notes = "no further embedding step to certify the fibers at infinity";
        cert.required_stages = static_cast<long long>(m) + 2;
        return cert;
      }
      long long p = seq.step_params[m];
      auto [rho1, rho2] = detail::boundary_stacks(left, right, false);
      auto [rho3, rho4] = detail::boundary_stacks(left, right, true);
      StablePoints sp1 = stable_points(rho1, rho2);
      StablePoints sp2 = stable_points(rho3, rho4);
      if (2 * std::max(sp1.j, sp2.j) + 1 > p) {
        cert.notes = "sequence step parameter below the padding requirement";
        return cert;
      }
      std::vector<Rat> odd, even;
      for (long long r = 1; r <= p - 1; r += 2) odd.push_back(Rat(r, p));
      for (long long r = 2; r <= p - 1; r += 2) even.push_back(Rat(r, p));
      cert.infDist1 = detail::infinity_bound(left, right, sp1, odd, odd, F);
      cert.infDist2 = detail::infinity_bound(left, right, sp2, even, even, F);
      cert.infChecked = true;
      if (!(cert.infDist1 < eps && cert.infDist2 < eps)) continue;
      cert.supFiberDist = rat_max(dist, rat_max(cert.infDist1, cert.infDist2));
    }
    cert.pass = cert.tracePreserved;
    return cert;
  }
  cert.required_stages = static_cast<long long>(seq.stages.size()) + 1;
  cert.notes = "distance bound not reached within the materialized stages";
  return cert;
}

}  // namespace frablocks
