#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "frablocks/hom.hpp"
#include "frablocks/measure.hpp"

namespace frablocks {

using Json = nlohmann::ordered_json;

inline Json to_json(const Rat& r) { return rat_str(r); }

inline Rat rat_from_json(const Json& j) {
  if (j.is_number_integer()) return Rat(j.get<long long>());
  if (j.is_string()) return parse_rat(j.get<std::string>());
  throw Error("expected a rational as \"num/den\" string");
}

inline Json to_json(const Block& b) {
  Json j;
  j["kind"] = b.kind == BlockKind::Razak ? "razak" : "gen";
  j["n"] = b.n;
  j["k"] = b.k;
  return j;
}

inline Block block_from_json(const Json& j) {
  std::string kind = j.at("kind").get<std::string>();
  long long n = j.at("n").get<long long>();
  long long k = j.at("k").get<long long>();
  if (kind == "razak") return razak(n, k);
  if (kind == "gen") return gen_razak(n, k);
  throw Error("block kind must be \"razak\" or \"gen\"");
}

inline Json plfn_to_json(const PLFn& f) {
  Json bp = Json::array();
  for (const auto& p : f) bp.push_back(Json::array({rat_str(p.x), rat_str(p.y)}));
  Json j;
  j["bp"] = bp;
  return j;
}

inline PLFn plfn_from_json(const Json& j) {
  PLFn f;
  for (const auto& p : j.at("bp")) f.push_back({rat_from_json(p.at(0)), rat_from_json(p.at(1))});
  pl_check(f);
  return f;
}

inline Json to_json(const PLMap& m) { return plfn_to_json(m.bp); }

inline PLMap plmap_from_json(const Json& j) { return PLMap::make(plfn_from_json(j)); }

inline Json to_json(const RepDescriptor& r) {
  Json pts = Json::array();
  for (const auto& [v, m] : r.points.items)
    for (long long i = 0; i < m; ++i) pts.push_back(rat_str(v));
  Json j;
  j["points"] = pts;
  j["r1"] = r.r1;
  j["r2"] = r.r2;
  j["r0"] = r.r0;
  return j;
}

inline RepDescriptor rep_from_json(const Json& j, const Block& block) {
  RepDescriptor r;
  r.block = block;
  std::vector<Rat> pts;
  for (const auto& p : j.at("points")) pts.push_back(rat_from_json(p));
  r.points = RatMultiset::of(std::move(pts));
  r.r1 = j.value("r1", 0LL);
  r.r2 = j.value("r2", 0LL);
  r.r0 = j.value("r0", 0LL);
  r.check();
  return r;
}

inline Json to_json(const TraceMeasure& m) {
  Json j;
  j["atom1"] = rat_str(m.atom1);
  j["atom2"] = rat_str(m.atom2);
  Json pieces = Json::array();
  for (const auto& p : m.pieces)
    pieces.push_back(Json::array({rat_str(p.a), rat_str(p.b), rat_str(p.mass)}));
  j["pieces"] = pieces;
  return j;
}

inline TraceMeasure measure_from_json(const Json& j, const Block& block) {
  TraceMeasure m;
  m.block = block;
  m.atom1 = rat_from_json(j.at("atom1"));
  m.atom2 = rat_from_json(j.at("atom2"));
  for (const auto& p : j.at("pieces"))
    m.pieces.push_back({rat_from_json(p.at(0)), rat_from_json(p.at(1)), rat_from_json(p.at(2))});
  m.check();
  return m;
}

inline Json to_json(const TestElement& f) {
  Json j;
  j["g1"] = plfn_to_json(f.g1);
  if (f.g2) j["g2"] = plfn_to_json(*f.g2);
  j["lipschitz"] = rat_str(f.lipschitz);
  return j;
}

inline TestElement test_element_from_json(const Json& j) {
  if (j.contains("g2"))
    return test_element(plfn_from_json(j.at("g1")), plfn_from_json(j.at("g2")),
                        rat_from_json(j.at("lipschitz")));
  return test_element(plfn_from_json(j.at("g1")), rat_from_json(j.at("lipschitz")));
}

inline Json to_json(const DiagonalHom& h) {
  Json j;
  j["dom"] = to_json(h.dom);
  j["cod"] = to_json(h.cod);
  Json xis = Json::array();
  for (const auto& xi : h.xis) xis.push_back(to_json(xi));
  j["xis"] = xis;
  if (h.split) {
    j["splitA"] = to_json(h.split->repA);
    j["splitB"] = to_json(h.split->repB);
  }
  return j;
}

inline DiagonalHom hom_from_json(const Json& j) {
  DiagonalHom h;
  h.dom = block_from_json(j.at("dom"));
  h.cod = block_from_json(j.at("cod"));
  for (const auto& x : j.at("xis")) h.xis.push_back(plmap_from_json(x));
  if (j.contains("splitA"))
    h.split = BoundarySplit{rep_from_json(j.at("splitA"), h.dom),
                            rep_from_json(j.at("splitB"), h.dom)};
  return h;
}

inline Json to_json(const ValidationCertificate& c) {
  Json j;
  j["valid"] = c.valid;
  j["all_finite_to_one"] = c.all_finite_to_one;
  Json checks = Json::array();
  for (const auto& ch : c.checks) {
    Json e;
    e["name"] = ch.name;
    e["ok"] = ch.ok;
    if (!ch.detail.empty()) e["detail"] = ch.detail;
    checks.push_back(e);
  }
  j["checks"] = checks;
  return j;
}

}  // namespace frablocks
