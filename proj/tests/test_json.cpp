#include <catch2/catch_amalgamated.hpp>

#include "frablocks/constructors.hpp"
#include "frablocks/json_io.hpp"
#include "frablocks/oracle.hpp"

using namespace frablocks;

TEST_CASE("block json round trip") {
  Json j = to_json(gen_razak(3, 2));
  CHECK(j.dump() == R"({"kind":"gen","n":3,"k":2})");
  CHECK(block_from_json(j) == gen_razak(3, 2));
  CHECK(block_from_json(to_json(razak(2, 1))) == razak(2, 1));
}

TEST_CASE("plmap json matches the documented shape") {
  PLMap t = PLMap::make({{Rat(0), Rat(0)}, {rat(1, 2), Rat(1)}, {Rat(1), Rat(0)}});
  Json j = to_json(t);
  CHECK(j.dump() == R"({"bp":[["0","0"],["1/2","1"],["1","0"]]})");
  CHECK(plmap_from_json(j) == t);
}

TEST_CASE("measure json matches the documented shape") {
  Block b = razak(2, 1);
  TraceMeasure m;
  m.block = b;
  m.pieces = {{Rat(0), rat(1, 2), rat(3, 4)}, {rat(1, 2), Rat(1), rat(1, 4)}};
  Json j = to_json(m);
  CHECK(j.dump() ==
        R"({"atom1":"0","atom2":"0","pieces":[["0","1/2","3/4"],["1/2","1","1/4"]]})");
  CHECK(measure_from_json(j, b) == m);
}

TEST_CASE("structured values survive a json round trip") {
  Rng rng(91);
  for (int trial = 0; trial < 25; ++trial) {
    Block b = rng.coin() ? razak(rng.pick(1, 3), rng.pick(1, 3))
                         : gen_razak(rng.pick(2, 3), rng.pick(1, 3));
    TraceMeasure m = random_measure(rng, b);
    CHECK(measure_from_json(to_json(m), b) == m);

    TestElement f = random_test_element(rng, b.kind);
    TestElement f2 = test_element_from_json(to_json(f));
    CHECK(f2.g1 == f.g1);
    CHECK(f2.lipschitz == f.lipschitz);

    PLMap map = random_plmap(rng);
    CHECK(plmap_from_json(to_json(map)) == map);
  }
}

TEST_CASE("hom json round trip") {
  DiagonalHom h = gen_embed(2, 1, 3, 1);
  Json j = to_json(h);
  DiagonalHom h2 = hom_from_json(j);
  CHECK(h2.dom == h.dom);
  CHECK(h2.cod == h.cod);
  CHECK(h2.xis.size() == h.xis.size());
  CHECK(d_diag(h, h2) == 0);
  CHECK(h2.split->repA == h.split->repA);
  CHECK(validate(h2).valid);

  DiagonalHom r = razak_embed(2, 1, 2);
  DiagonalHom r2 = hom_from_json(to_json(r));
  CHECK_FALSE(r2.split.has_value());
  CHECK(validate(r2).valid);
}

TEST_CASE("malformed json reports a useful error") {
  CHECK_THROWS_AS(rat_from_json(Json("1/0")), Error);
  Json bad;
  bad["kind"] = "other";
  bad["n"] = 2;
  bad["k"] = 1;
  CHECK_THROWS_AS(block_from_json(bad), Error);
}
