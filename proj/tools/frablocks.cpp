#include <CLI11.hpp>

#include <chrono>
#include <functional>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "frablocks/amalgamation.hpp"
#include "frablocks/json_io.hpp"
#include "frablocks/limits.hpp"
#include "frablocks/oracle.hpp"
#include "frablocks/verify.hpp"

using namespace frablocks;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Inline JSON or a path to a JSON file.
Json load_json(const std::string& spec) {
  std::string text = spec;
  if (!spec.empty() && spec[0] != '{' && spec[0] != '[' && spec[0] != '"')
    text = read_file(spec);
  try {
    return Json::parse(text);
  } catch (const std::exception& e) {
    throw Error("malformed JSON in '" + spec + "': " + e.what());
  }
}

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

struct Report {
  Json j;
  std::uint64_t digest = 1469598103934665603ULL;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  explicit Report(const std::vector<std::string>& argv_echo) {
    std::string cmd;
    for (const auto& a : argv_echo) cmd += (cmd.empty() ? "" : " ") + a;
    j["command"] = cmd;
  }
  void ingest(const std::string& payload) { digest = fnv1a(payload, digest); }
  void ingest(const Json& payload) { ingest(payload.dump()); }

  int emit(bool summary, int code) {
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(digest));
    j["inputs"] = std::string(hex);
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - start)
                  .count();
    j["timing_ms"] = ms;
    if (summary) {
      std::cout << "command: " << j["command"].get<std::string>() << "\n";
      if (j.contains("error")) std::cout << "error: " << j["error"].get<std::string>() << "\n";
      if (j.contains("results"))
        for (auto& [key, val] : j["results"].items())
          std::cout << "  " << key << ": " << val.dump() << "\n";
      if (j.contains("pass"))
        std::cout << "pass: " << (j["pass"].get<bool>() ? "yes" : "no") << "\n";
    } else {
      std::cout << j.dump(2) << "\n";
    }
    return code;
  }
};

TraceMeasure load_measure(const std::string& spec, const Block& b, Report& rep) {
  if (spec == "lebesgue") return lebesgue(b);
  Json j = load_json(spec);
  rep.ingest(j);
  return measure_from_json(j, b);
}

std::vector<TestElement> load_elements(const std::string& spec, Report& rep) {
  if (spec.empty()) return {};
  Json j = load_json(spec);
  rep.ingest(j);
  std::vector<TestElement> out;
  if (j.is_array())
    for (const auto& e : j) out.push_back(test_element_from_json(e));
  else
    out.push_back(test_element_from_json(j));
  return out;
}

ClassTag parse_class(const std::string& name, const std::string& primes_csv) {
  if (name == "W" || name == "w") return ClassTag::w();
  if (name == "K0") return ClassTag::k0();
  if (name == "K1") return ClassTag::k1();
  if (name == "Kp") {
    std::vector<long long> primes;
    std::stringstream ss(primes_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) primes.push_back(std::stoll(tok));
    return ClassTag::kp(primes);
  }
  throw Error("class must be one of W, K0, K1, Kp");
}

Json cert_to_json(const NapCertificate& c) {
  Json j;
  j["epsilon"] = rat_str(c.epsilon);
  j["tracePreserved"] = c.tracePreserved;
  j["supFiberDist"] = rat_str(c.supFiberDist);
  j["supExact"] = c.supExact;
  j["interiorDist"] = rat_str(c.interiorDist);
  j["interiorExact"] = c.interiorExact;
  j["infDist1"] = rat_str(c.infDist1);
  j["infDist2"] = rat_str(c.infDist2);
  j["k0"] = c.k0Record;
  j["meshResolution"] = rat_str(c.meshResolution);
  j["p"] = c.pUsed;
  j["padding"] = c.padding;
  j["lipschitz"] = rat_str(c.lipschitz);
  j["testElements"] = static_cast<long long>(c.G.size());
  if (!c.notes.empty()) j["notes"] = c.notes;
  j["pass"] = c.pass;
  return j;
}

Json tail_to_json(const FinalEmbedFactor& t) {
  Json j;
  j["present"] = t.present;
  if (t.present) {
    j["n"] = t.n;
    j["k"] = t.k;
    j["p"] = t.p;
    j["j"] = t.j;
    j["even_in_a"] = t.even_in_a;
  }
  return j;
}

Json sequence_to_json(const InductiveSequence& seq) {
  Json j;
  j["class"] = seq.tag.str();
  Json stages = Json::array();
  for (const auto& st : seq.stages) {
    Json s;
    s["block"] = to_json(st.block);
    s["trace"] = to_json(st.trace);
    stages.push_back(s);
  }
  j["stages"] = stages;
  Json steps = Json::array();
  for (std::size_t i = 0; i < seq.steps.size(); ++i) {
    Json s;
    s["hom"] = to_json(seq.steps[i]);
    s["param"] = seq.step_params[i];
    s["kind"] = std::string(1, seq.step_kinds[i]);
    steps.push_back(s);
  }
  j["steps"] = steps;
  Json sym = Json::array();
  for (const auto& s : seq.symbolic) sym.push_back(Json::array({s.n.str(), s.k.str()}));
  if (!sym.empty()) j["symbolic"] = sym;
  return j;
}

InductiveSequence sequence_from_json(const Json& j) {
  InductiveSequence seq;
  std::string cls = j.at("class").get<std::string>();
  if (cls == "W")
    seq.tag = ClassTag::w();
  else if (cls == "K0")
    seq.tag = ClassTag::k0();
  else if (cls == "K1")
    seq.tag = ClassTag::k1();
  else if (cls.rfind("Kp:", 0) == 0) {
    std::vector<long long> primes;
    std::stringstream ss(cls.substr(3));
    std::string tok;
    while (std::getline(ss, tok, ',')) primes.push_back(std::stoll(tok));
    seq.tag = ClassTag::kp(primes);
  } else {
    throw Error("unknown sequence class " + cls);
  }
  for (const auto& st : j.at("stages")) {
    Block b = block_from_json(st.at("block"));
    seq.stages.push_back({b, measure_from_json(st.at("trace"), b)});
  }
  for (const auto& st : j.at("steps")) {
    seq.steps.push_back(hom_from_json(st.at("hom")));
    seq.step_params.push_back(st.at("param").get<long long>());
    seq.step_kinds.push_back(st.at("kind").get<std::string>()[0]);
  }
  return seq;
}

void write_out(const std::string& path, const Json& j) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"computation engine for subhomogeneous building blocks"};
  app.require_subcommand(1);
  std::string format = "json";
  app.add_option("--format", format)->check(CLI::IsMember({"json", "summary"}));

  std::vector<std::string> argv_echo(argv, argv + argc);
  Report rep(argv_echo);
  int exit_code = 0;

  // ---- block -------------------------------------------------------------
  auto* blockcmd = app.add_subcommand("block", "representation utilities");
  std::string opt_block, opt_rep, opt_elem;
  blockcmd->add_option("--block", opt_block)->required();
  blockcmd->add_option("--rep", opt_rep);
  blockcmd->add_option("--f", opt_elem);
  auto* block_canon = blockcmd->add_subcommand("canon", "canonical form of a representation");
  auto* block_k0 = blockcmd->add_subcommand("k0", "K0 of a representation");
  auto* block_eigs = blockcmd->add_subcommand("eigs", "eigenvalues of a test element");

  // ---- hom ---------------------------------------------------------------
  auto* homcmd = app.add_subcommand("hom", "diagonal homomorphisms");
  std::string h_kind, h_hom, h_first, h_second, h_tau = "lebesgue", h_sigma, h_out;
  long long h_n = 2, h_k = 1, h_p = 3, h_kp = 2, h_j = 0;
  bool h_even = false;
  auto* hom_construct = homcmd->add_subcommand("construct", "build a named constructor");
  hom_construct->add_option("--kind", h_kind)->required();
  hom_construct->add_option("--n", h_n);
  hom_construct->add_option("--k", h_k);
  hom_construct->add_option("--p", h_p);
  hom_construct->add_option("--kp", h_kp);
  hom_construct->add_option("--j", h_j);
  hom_construct->add_flag("--even-in-a", h_even);
  hom_construct->add_option("--block", opt_block);
  hom_construct->add_option("--sigma", h_sigma);
  hom_construct->add_option("--tau", h_tau);
  hom_construct->add_option("--out", h_out);
  auto* hom_validate = homcmd->add_subcommand("validate", "check the invariants");
  hom_validate->add_option("--hom", h_hom)->required();
  auto* hom_compose = homcmd->add_subcommand("compose", "compose two homs");
  hom_compose->add_option("--first", h_first)->required();
  hom_compose->add_option("--second", h_second)->required();
  hom_compose->add_option("--out", h_out);
  auto* hom_diameter = homcmd->add_subcommand("diameter", "diameter of a hom");
  hom_diameter->add_option("--hom", h_hom)->required();
  auto* hom_k0 = homcmd->add_subcommand("k0", "K0 of a hom with the rank cross-check");
  hom_k0->add_option("--hom", h_hom)->required();
  auto* hom_reverse = homcmd->add_subcommand("reverse", "swap the boundary blocks");
  hom_reverse->add_option("--hom", h_hom)->required();
  hom_reverse->add_option("--out", h_out);
  auto* hom_pullback = homcmd->add_subcommand("pullback", "pull a trace back");
  hom_pullback->add_option("--hom", h_hom)->required();
  hom_pullback->add_option("--tau", h_tau);
  auto* hom_ddiag = homcmd->add_subcommand("ddiag", "diagonal distance");
  hom_ddiag->add_option("--first", h_first)->required();
  hom_ddiag->add_option("--second", h_second)->required();

  // ---- trace -------------------------------------------------------------
  auto* tracecmd = app.add_subcommand("trace", "trace measures");
  std::string t_mu, t_nu, t_map, t_elem;
  tracecmd->add_option("--block", opt_block)->required();
  auto* trace_transition = tracecmd->add_subcommand("transition", "quantile transport map");
  trace_transition->add_option("--sigma", t_mu)->required();
  trace_transition->add_option("--tau", t_nu)->required();
  auto* trace_push = tracecmd->add_subcommand("pushforward", "pushforward of a measure");
  trace_push->add_option("--mu", t_mu)->required();
  trace_push->add_option("--map", t_map)->required();
  auto* trace_gap = tracecmd->add_subcommand("atomgap", "atom difference");
  trace_gap->add_option("--mu", t_mu)->required();
  trace_gap->add_option("--nu", t_nu)->required();
  auto* trace_val = tracecmd->add_subcommand("value", "trace of a test element");
  trace_val->add_option("--tau", t_mu)->required();
  trace_val->add_option("--f", t_elem)->required();

  // ---- dist --------------------------------------------------------------
  auto* distcmd = app.add_subcommand("dist", "distances");
  std::string d_mu, d_nu, d_F, d_H, d_at = "inf1", d_G;
  long long d_ell = 0;
  auto* dist_bottleneck = distcmd->add_subcommand("bottleneck", "measure distance");
  dist_bottleneck->add_option("--block", opt_block)->required();
  dist_bottleneck->add_option("--mu", d_mu)->required();
  dist_bottleneck->add_option("--nu", d_nu)->required();
  auto* dist_match = distcmd->add_subcommand("match", "sorted matching distance");
  dist_match->add_option("--F", d_F)->required();
  dist_match->add_option("--H", d_H)->required();
  auto* dist_bell = distcmd->add_subcommand("bell", "adversarial-removal distance");
  dist_bell->add_option("--F", d_F)->required();
  dist_bell->add_option("--H", d_H)->required();
  dist_bell->add_option("--ell", d_ell);
  auto* dist_fiber = distcmd->add_subcommand("fiber", "fiberwise unitary distance");
  dist_fiber->add_option("--first", h_first)->required();
  dist_fiber->add_option("--second", h_second)->required();
  dist_fiber->add_option("--G", d_G)->required();
  dist_fiber->add_option("--at", d_at);

  // ---- jep / nap ----------------------------------------------------------
  std::string class_name = "W", primes_csv = "2";
  auto* jepcmd = app.add_subcommand("jep", "joint embedding");
  std::string j_blocka, j_blockb, j_sigma, j_tau, j_out1, j_out2;
  jepcmd->add_option("--class", class_name);
  jepcmd->add_option("--primes", primes_csv);
  jepcmd->add_option("--block-a", j_blocka)->required();
  jepcmd->add_option("--sigma", j_sigma)->required();
  jepcmd->add_option("--block-b", j_blockb)->required();
  jepcmd->add_option("--tau", j_tau)->required();
  jepcmd->add_option("--out1", j_out1);
  jepcmd->add_option("--out2", j_out2);

  auto* napcmd = app.add_subcommand("nap", "near amalgamation with certificate");
  std::string n_phi1, n_phi2, n_tau1, n_tau2, n_G, n_eps = "1/10";
  napcmd->add_option("--class", class_name);
  napcmd->add_option("--primes", primes_csv);
  napcmd->add_option("--phi1", n_phi1)->required();
  napcmd->add_option("--tau1", n_tau1)->required();
  napcmd->add_option("--phi2", n_phi2)->required();
  napcmd->add_option("--tau2", n_tau2)->required();
  napcmd->add_option("--G", n_G);
  napcmd->add_option("--eps", n_eps);

  // ---- sequence / certify / verify ----------------------------------------
  auto* seqcmd = app.add_subcommand("sequence", "inductive sequence generators");
  std::string s_kind, s_out;
  long long s_steps = 3;
  seqcmd->add_option("kind", s_kind)->required()->check(CLI::IsMember({"w", "z0", "z0uhf"}));
  seqcmd->add_option("--steps", s_steps);
  seqcmd->add_option("--primes", primes_csv);
  seqcmd->add_option("--out", s_out);

  auto* certcmd = app.add_subcommand("certify", "genericity certification");
  std::string c_seq, c_psi, c_eps = "1/4", c_tau = "lebesgue", c_G;
  auto* cert_generic = certcmd->add_subcommand("generic", "approximate dominance harness");
  cert_generic->add_option("--seq", c_seq)->required();
  cert_generic->add_option("--psi", c_psi)->required();
  cert_generic->add_option("--eps", c_eps);
  cert_generic->add_option("--tau", c_tau);
  cert_generic->add_option("--G", c_G);

  auto* verifycmd = app.add_subcommand("verify", "named cross-validation suites");
  std::string v_suite;
  long long v_trials = 100;
  std::uint64_t v_seed = 1;
  verifycmd->add_option("suite", v_suite)->required();
  verifycmd->add_option("--trials", v_trials);
  verifycmd->add_option("--seed", v_seed);

  // Let global options (--format) appear after subcommand arguments.
  std::function<void(CLI::App*)> enable_fallthrough = [&](CLI::App* cmd) {
    for (auto* sub : cmd->get_subcommands([](CLI::App*) { return true; })) {
      sub->fallthrough();
      enable_fallthrough(sub);
    }
  };
  enable_fallthrough(&app);

  CLI11_PARSE(app, argc, argv);

  try {
    Json results;
    if (*blockcmd) {
      Json bj = load_json(opt_block);
      rep.ingest(bj);
      Block b = block_from_json(bj);
      if (*block_canon || *block_k0) {
        Json rj = load_json(opt_rep);
        rep.ingest(rj);
        RepDescriptor r = rep_from_json(rj, b);
        if (*block_canon) {
          RepDescriptor c = canonical_rep(r);
          results["canonical"] = to_json(c);
          results["dimension"] = c.dim();
        } else {
          K0Value v = rep_k0(r);
          results["k0"] = v.value;
          results["razak_trivial"] = v.razak_trivial;
        }
      } else if (*block_eigs) {
        Json rj = load_json(opt_rep);
        Json fj = load_json(opt_elem);
        rep.ingest(rj);
        rep.ingest(fj);
        RepDescriptor r = rep_from_json(rj, b);
        TestElement f = test_element_from_json(fj);
        Json eigs = Json::array();
        for (const auto& [v, m] : eigenvalues(r, f).items)
          eigs.push_back(Json::array({rat_str(v), m}));
        results["eigenvalues"] = eigs;
      } else {
        throw Error("block needs a subcommand: canon, k0, eigs");
      }
    } else if (*homcmd) {
      if (*hom_construct) {
        DiagonalHom h;
        if (h_kind == "razak-embed") {
          h = razak_embed(h_n, h_k, h_p);
        } else if (h_kind == "razak-amplify") {
          h = razak_amplify(h_n, h_k, h_kp);
        } else if (h_kind == "gen-embed") {
          h = gen_embed(h_n, h_k, h_p, h_j, h_even);
        } else if (h_kind == "gen-amplify") {
          h = gen_amplify(h_n, h_k, h_kp, h_j);
        } else if (h_kind == "gen-rho") {
          h = gen_rho(h_n, h_k, h_kp, h_j);
        } else if (h_kind == "transition") {
          Json bj = load_json(opt_block);
          rep.ingest(bj);
          Block b = block_from_json(bj);
          TraceMeasure sg = load_measure(h_sigma, b, rep);
          TraceMeasure tu = load_measure(h_tau, b, rep);
          h = transition_hom(sg, tu);
        } else {
          throw Error("unknown constructor kind: " + h_kind);
        }
        results["hom"] = to_json(h);
        results["diameter"] = rat_str(diameter(h));
        if (h.cod.kind == BlockKind::GenRazak) results["k0"] = k0(h).value;
        write_out(h_out, to_json(h));
      } else if (*hom_validate) {
        Json hj = load_json(h_hom);
        rep.ingest(hj);
        ValidationCertificate cert = validate(hom_from_json(hj));
        results["certificate"] = to_json(cert);
        if (!cert.valid) exit_code = 1;
      } else if (*hom_compose) {
        Json a = load_json(h_first), b = load_json(h_second);
        rep.ingest(a);
        rep.ingest(b);
        DiagonalHom h = compose(hom_from_json(a), hom_from_json(b));
        results["hom"] = to_json(h);
        results["diameter"] = rat_str(diameter(h));
        write_out(h_out, to_json(h));
      } else if (*hom_diameter) {
        Json hj = load_json(h_hom);
        rep.ingest(hj);
        results["diameter"] = rat_str(diameter(hom_from_json(hj)));
      } else if (*hom_k0) {
        Json hj = load_json(h_hom);
        rep.ingest(hj);
        DiagonalHom h = hom_from_json(hj);
        K0Value v = k0(h);
        results["k0"] = v.value;
        results["razak_trivial"] = v.razak_trivial;
        if (!v.razak_trivial) results["k0_rank_oracle"] = k0_rank(h);
      } else if (*hom_reverse) {
        Json hj = load_json(h_hom);
        rep.ingest(hj);
        DiagonalHom h = reverse_k(hom_from_json(hj));
        results["hom"] = to_json(h);
        results["k0"] = k0(h).value;
        write_out(h_out, to_json(h));
      } else if (*hom_pullback) {
        Json hj = load_json(h_hom);
        rep.ingest(hj);
        DiagonalHom h = hom_from_json(hj);
        TraceMeasure tau = load_measure(h_tau, h.cod, rep);
        results["sigma"] = to_json(pullback_trace(h, tau));
      } else if (*hom_ddiag) {
        Json a = load_json(h_first), b = load_json(h_second);
        rep.ingest(a);
        rep.ingest(b);
        results["d_diag"] = rat_str(d_diag(hom_from_json(a), hom_from_json(b)));
      } else {
        throw Error("hom needs a subcommand");
      }
    } else if (*tracecmd) {
      Json bj = load_json(opt_block);
      rep.ingest(bj);
      Block b = block_from_json(bj);
      if (*trace_transition) {
        TraceMeasure s = load_measure(t_mu, b, rep);
        TraceMeasure t = load_measure(t_nu, b, rep);
        results["map"] = to_json(transition_plmap(s, t));
      } else if (*trace_push) {
        TraceMeasure m = load_measure(t_mu, b, rep);
        Json mj = load_json(t_map);
        rep.ingest(mj);
        results["measure"] = to_json(pushforward(m, plmap_from_json(mj)));
      } else if (*trace_gap) {
        results["atom_gap"] =
            rat_str(atom_gap(load_measure(t_mu, b, rep), load_measure(t_nu, b, rep)));
      } else if (*trace_val) {
        TraceMeasure tau = load_measure(t_mu, b, rep);
        Json fj = load_json(t_elem);
        rep.ingest(fj);
        results["value"] = rat_str(trace_value(tau, test_element_from_json(fj)));
      } else {
        throw Error("trace needs a subcommand");
      }
    } else if (*distcmd) {
      if (*dist_bottleneck) {
        Json bj = load_json(opt_block);
        rep.ingest(bj);
        Block b = block_from_json(bj);
        TraceMeasure m = load_measure(d_mu, b, rep);
        TraceMeasure n = load_measure(d_nu, b, rep);
        results["bottleneck"] = rat_str(bottleneck(m, n));
        results["atom_gap"] = rat_str(atom_gap(m, n));
      } else if (*dist_match || *dist_bell) {
        auto load_points = [&](const std::string& spec) {
          Json j = load_json(spec);
          rep.ingest(j);
          std::vector<Rat> pts;
          for (const auto& v : j) pts.push_back(rat_from_json(v));
          return RatMultiset::of(std::move(pts));
        };
        PointMultiset F = load_points(d_F);
        PointMultiset H = load_points(d_H);
        if (*dist_match) {
          results["match_distance"] = rat_str(match_distance(F, H));
        } else {
          BellResult r = b_ell(F, H, d_ell);
          results["b_ell"] = rat_str(r.value);
          results["exact"] = r.exact;
        }
      } else if (*dist_fiber) {
        Json a = load_json(h_first), b = load_json(h_second);
        rep.ingest(a);
        rep.ingest(b);
        DiagonalHom h1 = hom_from_json(a);
        DiagonalHom h2 = hom_from_json(b);
        std::vector<TestElement> G = load_elements(d_G, rep);
        FiberPoint at = d_at == "inf"    ? FiberPoint::inf()
                        : d_at == "inf1" ? FiberPoint::inf1()
                        : d_at == "inf2" ? FiberPoint::inf2()
                                         : FiberPoint::interior(parse_rat(d_at));
        FiberDist d = fiber_udist(h1, h2, G, at);
        results["distance"] = rat_str(d.value);
        results["exact"] = d.exact;
      } else {
        throw Error("dist needs a subcommand");
      }
    } else if (*jepcmd) {
      ClassTag tag = parse_class(class_name, primes_csv);
      Json ba = load_json(j_blocka), bb = load_json(j_blockb);
      rep.ingest(ba);
      rep.ingest(bb);
      Block A = block_from_json(ba), B = block_from_json(bb);
      TraceMeasure s = load_measure(j_sigma, A, rep);
      TraceMeasure t = load_measure(j_tau, B, rep);
      JepResult res = jep(A, s, B, t, tag);
      results["D"] = to_json(res.D);
      results["lambda"] = to_json(res.lambda);
      bool preserved = pullback_trace(res.psi1, res.lambda) == s &&
                       pullback_trace(res.psi2, res.lambda) == t;
      results["trace_preserved"] = preserved;
      if (tag.kind != ClassTag::W)
        results["k0"] = Json::array({k0(res.psi1).value, k0(res.psi2).value});
      write_out(j_out1, to_json(res.psi1));
      write_out(j_out2, to_json(res.psi2));
      if (!preserved) exit_code = 1;
    } else if (*napcmd) {
      ClassTag tag = parse_class(class_name, primes_csv);
      Json p1 = load_json(n_phi1), p2 = load_json(n_phi2);
      rep.ingest(p1);
      rep.ingest(p2);
      DiagonalHom phi1 = hom_from_json(p1);
      DiagonalHom phi2 = hom_from_json(p2);
      TraceMeasure tau1 = load_measure(n_tau1, phi1.cod, rep);
      TraceMeasure tau2 = load_measure(n_tau2, phi2.cod, rep);
      std::vector<TestElement> G = load_elements(n_G, rep);
      Rat eps = parse_rat(n_eps);
      NapResult res = tag.kind == ClassTag::W
                          ? nap_razak(phi1, tau1, phi2, tau2, G, eps)
                          : nap_gen(phi1, tau1, phi2, tau2, G, eps, tag);
      results["D"] = to_json(res.D);
      results["certificate"] = cert_to_json(res.cert);
      results["tail1"] = tail_to_json(res.tail1);
      results["tail2"] = tail_to_json(res.tail2);
      rep.j["pass"] = res.cert.pass;
      if (!res.cert.pass) exit_code = 1;
    } else if (*seqcmd) {
      InductiveSequence seq;
      if (s_kind == "w") {
        seq = w_sequence(s_steps);
      } else if (s_kind == "z0") {
        seq = z0_sequence(s_steps);
      } else {
        ClassTag tag = parse_class("Kp", primes_csv);
        seq = z0_uhf_sequence(tag.primes, s_steps);
      }
      SequenceReport srep = validate_sequence(seq);
      Json checks = Json::array();
      for (const auto& c : srep.checks) {
        Json e;
        e["name"] = c.name;
        e["ok"] = c.ok;
        checks.push_back(e);
      }
      results["sequence"] = sequence_to_json(seq);
      results["checks"] = checks;
      results["valid"] = srep.ok;
      if (seq.tag.kind != ClassTag::W) results["composite_k0"] = srep.composite_k0;
      write_out(s_out, sequence_to_json(seq));
      if (!srep.ok) exit_code = 1;
    } else if (*certcmd) {
      Json sj = load_json(c_seq), pj = load_json(c_psi);
      rep.ingest(sj);
      rep.ingest(pj);
      InductiveSequence seq = sequence_from_json(sj);
      DiagonalHom psi = hom_from_json(pj);
      TraceMeasure tauC = load_measure(c_tau, psi.cod, rep);
      std::vector<TestElement> F = load_elements(c_G, rep);
      if (F.empty()) {
        // Default separating element: g1 = 1 - t, g2 = 0.
        PLFn g1 = {{Rat(0), Rat(1)}, {Rat(1), Rat(0)}};
        if (psi.dom.kind == BlockKind::GenRazak)
          F.push_back(test_element(g1, PLFn{{Rat(0), Rat(0)}, {Rat(1), Rat(0)}}, Rat(1)));
        else
          F.push_back(test_element(g1, Rat(1)));
      }
      GenericityCertificate cert =
          genericity_certify(seq, psi.cod, tauC, psi, F, parse_rat(c_eps));
      Json cj;
      cj["pass"] = cert.pass;
      cj["stage_i"] = cert.stage_i;
      cj["stage_k"] = cert.stage_k;
      cj["stage_final"] = cert.stage_final;
      cj["epsilon"] = rat_str(cert.epsilon);
      cj["supFiberDist"] = rat_str(cert.supFiberDist);
      cj["supExact"] = cert.supExact;
      cj["tracePreserved"] = cert.tracePreserved;
      if (cert.infChecked) {
        cj["infDist1"] = rat_str(cert.infDist1);
        cj["infDist2"] = rat_str(cert.infDist2);
      }
      if (cert.required_stages > 0) cj["required_stages"] = cert.required_stages;
      if (!cert.notes.empty()) cj["notes"] = cert.notes;
      results["certificate"] = cj;
      rep.j["pass"] = cert.pass;
      if (!cert.pass) exit_code = 1;
    } else if (*verifycmd) {
      rep.j["seed"] = v_seed;
      SuiteReport srep = run_suite(v_suite, v_trials, v_seed);
      results["suite"] = srep.name;
      results["trials"] = srep.trials;
      results["failures"] = srep.failures;
      if (!srep.witnesses.empty()) {
        Json w = Json::array();
        for (const auto& s : srep.witnesses) w.push_back(s);
        results["witnesses"] = w;
      }
      rep.j["pass"] = srep.pass;
      if (!srep.pass) exit_code = 1;
    }
    rep.j["results"] = results;
  } catch (const Error& e) {
    rep.j["error"] = e.what();
    return rep.emit(format == "summary", 2);
  } catch (const std::exception& e) {
    rep.j["error"] = e.what();
    return rep.emit(format == "summary", 2);
  }
  return rep.emit(format == "summary", exit_code);
}
