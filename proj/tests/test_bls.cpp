#include <catch2/catch_amalgamated.hpp>

#include "zef/bls/pairing.hpp"
#include "zef/rng.hpp"

using namespace zef;
using namespace zef::bls;

TEST_CASE("scalar field arithmetic") {
    Rng rng(1);
    Fr a = Fr::random(rng), b = Fr::random(rng), c = Fr::random(rng);

    CHECK(a + b == b + a);
    CHECK((a + b) + c == a + (b + c));
    CHECK(a * b == b * a);
    CHECK((a * b) * c == a * (b * c));
    CHECK(a * (b + c) == a * b + a * c);
    CHECK(a + Fr::zero() == a);
    CHECK(a * Fr::one() == a);
    CHECK(a + a.neg() == Fr::zero());
    CHECK(a * a.inverse() == Fr::one());
    CHECK(Fr::from_int(6) == Fr::from_int(2) * Fr::from_int(3));

    // canonical little-endian roundtrip
    uint8_t le[32];
    a.to_le_bytes(le);
    CHECK(Fr::from_le_bytes(le) == a);

    Writer w;
    a.encode(w);
    Bytes bts = w.take();
    Reader r(bts);
    CHECK(Fr::decode(r) == a);
}

TEST_CASE("base field and extension towers") {
    Rng rng(2);
    auto rand_fp = [&rng] {
        Fp x = Fp::from_int(rng.u64());
        for (int i = 0; i < 5; i++) x = x * Fp::from_int(rng.u64()) + Fp::from_int(rng.u64());
        return x;
    };
    Fp a = rand_fp(), b = rand_fp();
    CHECK(a * b == b * a);
    CHECK(a * a.inverse() == Fp::one());
    CHECK((a + b) * (a + b) == a * a + a * b + a * b + b * b);

    Fp2 x{a, b}, y{b, a};
    CHECK(x * y == y * x);
    CHECK(x * x.inverse() == Fp2::one());
    CHECK(x.square() == x * x);

    Fp6 u{x, y, x + y};
    CHECK(u * u.inverse() == Fp6::one());
    CHECK(u.square() == u * u);

    Fp12 f{u, Fp6{y, x, x}};
    CHECK(f * f.inverse() == Fp12::one());
    CHECK(f.square() == f * f);

    // Frobenius is the p-power map: order divides 12
    Fp12 g = f;
    for (int i = 0; i < 12; i++) g = g.frobenius();
    CHECK(g == f);
    CHECK(f.frobenius().frobenius() == f.frobenius_sq());
}

TEST_CASE("group generators match standard encodings") {
    CHECK(to_hex(g1_bytes(g1_generator())) ==
          "97f1d3a73197d7942695638c4fa9ac0fc3688c4f9774b905a14e3a3f171bac58"
          "6c55e83ff97a1aeffb3af00adb22c6bb");
    CHECK(to_hex(g2_bytes(g2_generator())) ==
          "93e02b6052719f607dacd3a088274f65596bd0d09920b61ab5da61bbdc7f5049"
          "334cf11213945d57e5ac7d055d042b7e024aa2b2f08f0a91260805272dc51051"
          "c6e47ad4fa403b02b4510b647ae3d1770bac0326a805bbefd48056c8c121bdb8");
}

TEST_CASE("curve group laws") {
    Rng rng(3);
    const G1& g = g1_generator();
    Fr a = Fr::random(rng), b = Fr::random(rng);

    CHECK(g.mul(a) + g.mul(b) == g.mul(a + b));
    CHECK(g.mul(a).mul(b) == g.mul(a * b));
    CHECK((g.mul(a) + g.mul(a).neg()).is_infinity());
    CHECK(g.mul(Fr::zero()).is_infinity());
    CHECK((g + G1::infinity()) == g);
    CHECK(g.dbl() == g + g);

    // multiplying by the group order gives infinity
    Fr r_minus_1 = Fr::zero() + Fr::one().neg();
    CHECK((g.mul(r_minus_1) + g).is_infinity());

    const G2& h = g2_generator();
    CHECK(h.mul(a) + h.mul(b) == h.mul(a + b));
    CHECK((h.mul(r_minus_1) + h).is_infinity());
}

TEST_CASE("msm equals naive sum") {
    Rng rng(4);
    const G1& g = g1_generator();
    std::vector<G1> points;
    std::vector<Fr> scalars;
    G1 naive = G1::infinity();
    for (int i = 0; i < 9; i++) {
        Fr s = Fr::random(rng);
        G1 p = g.mul(Fr::random(rng));
        naive = naive + p.mul(s);
        points.push_back(p);
        scalars.push_back(s);
    }
    CHECK(G1::msm(points, scalars) == naive);

    std::vector<G2> points2;
    G2 naive2 = G2::infinity();
    for (int i = 0; i < 4; i++) {
        G2 p = g2_generator().mul(Fr::random(rng));
        naive2 = naive2 + p.mul(scalars[i]);
        points2.push_back(p);
    }
    CHECK(G2::msm(points2, std::vector<Fr>(scalars.begin(), scalars.begin() + 4)) == naive2);
}

TEST_CASE("point serialization") {
    Rng rng(5);
    G1 p = g1_generator().mul(Fr::random(rng));
    auto b = g1_bytes(p);
    REQUIRE(b.size() == 48);
    auto q = g1_deserialize(b.data());
    REQUIRE(q);
    CHECK(*q == p);

    G2 p2 = g2_generator().mul(Fr::random(rng));
    auto b2 = g2_bytes(p2);
    REQUIRE(b2.size() == 96);
    auto q2 = g2_deserialize(b2.data());
    REQUIRE(q2);
    CHECK(*q2 == p2);

    // infinity encoding
    auto binf = g1_bytes(G1::infinity());
    auto qinf = g1_deserialize(binf.data());
    REQUIRE(qinf);
    CHECK(qinf->is_infinity());

    // corrupted bytes are refused
    auto bad = g1_bytes(p);
    bad[1] ^= 0xff;
    auto maybe = g1_deserialize(bad.data());
    if (maybe) CHECK(!(*maybe == p));  // x may still be on curve; point must differ
    bad = g1_bytes(p);
    bad[0] = 0x1f;  // invalid flag pattern (compressed bit cleared)
    CHECK(!g1_deserialize(bad.data()));
}

TEST_CASE("hash to curve") {
    G1 p = hash_to_g1("domain-a", Bytes{1, 2});
    CHECK(!p.is_infinity());
    CHECK(p == hash_to_g1("domain-a", Bytes{1, 2}));
    CHECK(!(p == hash_to_g1("domain-b", Bytes{1, 2})));
    CHECK(!(p == hash_to_g1("domain-a", Bytes{1, 3})));
    // result is in the prime-order subgroup
    Fr r_minus_1 = Fr::zero() + Fr::one().neg();
    CHECK((p.mul(r_minus_1) + p).is_infinity());
}

TEST_CASE("pairing identities") {
    Rng rng(6);
    const G1& g = g1_generator();
    const G2& h = g2_generator();
    Fr a = Fr::random(rng), b = Fr::random(rng);

    Fp12 e_ab = pairing(g.mul(a), h.mul(b));
    CHECK(e_ab == pairing(g.mul(b), h.mul(a)));
    CHECK(e_ab == gt_pow(pairing(g, h), a * b));
    CHECK(!pairing(g, h).is_one());

    // bilinearity in each slot
    CHECK(pairing(g.mul(a) + g.mul(b), h) == pairing(g.mul(a), h) * pairing(g.mul(b), h));
    CHECK(pairing(g, h.mul(a) + h.mul(b)) == pairing(g, h.mul(a)) * pairing(g, h.mul(b)));

    // product form used by every verifier: e(aP, Q) e(-P, aQ) = 1
    CHECK(multi_pairing({{g.mul(a), h}, {g.neg(), h.mul(a)}}).is_one());

    // multi_pairing equals the product of individual pairings
    Fp12 m = multi_pairing({{g.mul(a), h.mul(b)}, {g.mul(b), h}, {g, h.mul(a)}});
    CHECK(m == pairing(g.mul(a), h.mul(b)) * pairing(g.mul(b), h) * pairing(g, h.mul(a)));

    // pairing output has order r
    CHECK(Fp12::pow(pairing(g, h), Fr::MOD.data(), 4).is_one());

    // pairs with an infinity component contribute nothing
    CHECK(multi_pairing({{G1::infinity(), h}}).is_one());
    CHECK(multi_pairing({{g, G2::infinity()}}).is_one());
    CHECK(multi_pairing({{g.mul(a), h}, {G1::infinity(), h.mul(b)}}) == pairing(g.mul(a), h));
}

TEST_CASE("gt exponentiation") {
    Rng rng(7);
    Fp12 e = pairing(g1_generator(), g2_generator());
    Fr a = Fr::random(rng), b = Fr::random(rng);
    CHECK(gt_pow(gt_pow(e, a), b) == gt_pow(e, a * b));
    CHECK(gt_pow(e, a) * gt_pow(e, b) == gt_pow(e, a + b));
    CHECK(gt_pow(e, Fr::one()) == e);
}
