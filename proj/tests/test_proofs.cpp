#include <catch2/catch_amalgamated.hpp>

#include "zef/rangeproof.hpp"
#include "zef/sigma.hpp"

using namespace zef;
using bls::Fr;
using bls::G1;
using bls::G2;

TEST_CASE("sigma proofs over linked equations") {
    Rng rng(41);
    const G1& g = bls::g1_generator();
    G1 u = g.mul(Fr::from_int(11));
    const G2& h = bls::g2_generator();

    // prove knowledge of (a, b) with X = g^a u^b, Y = h^a, and a + 2b = 17
    Fr a = Fr::from_int(5), b = Fr::from_int(6);
    G1 X = g.mul(a) + u.mul(b);
    G2 Y = h.mul(a);

    SigmaSystem sys;
    size_t wa = sys.fresh(), wb = sys.fresh();
    sys.g1_eqs.push_back({X, {{g, wa}, {u, wb}}});
    sys.g2_eqs.push_back({Y, {{h, wa}}});
    sys.lin_eqs.push_back({Fr::from_int(17), {{Fr::one(), wa}, {Fr::from_int(2), wb}}});

    Transcript tp("sigma-test");
    SigmaProof proof = sigma_prove(sys, {a, b}, tp, rng);

    Transcript tv("sigma-test");
    CHECK(sigma_verify(sys, proof, tv));

    SECTION("wrong linear constant fails") {
        auto bad = sys;
        bad.lin_eqs[0].constant = Fr::from_int(18);
        Transcript t2("sigma-test");
        CHECK(!sigma_verify(bad, proof, t2));
    }
    SECTION("wrong target fails") {
        auto bad = sys;
        bad.g1_eqs[0].target = X + g;
        Transcript t2("sigma-test");
        CHECK(!sigma_verify(bad, proof, t2));
    }
    SECTION("tampered response fails") {
        auto bad = proof;
        bad.responses[1] = bad.responses[1] + Fr::one();
        Transcript t2("sigma-test");
        CHECK(!sigma_verify(sys, bad, t2));
    }
    SECTION("transcript binding: different context fails") {
        Transcript t2("sigma-test-other");
        CHECK(!sigma_verify(sys, proof, t2));
    }
    SECTION("proof roundtrips") {
        Writer w;
        proof.encode(w);
        Bytes bts = w.take();
        Reader r(bts);
        auto back = SigmaProof::decode(r);
        Transcript t2("sigma-test");
        CHECK(sigma_verify(sys, back, t2));
    }
    SECTION("wrong witness cannot prove") {
        Transcript t2("sigma-test");
        SigmaProof forged = sigma_prove(sys, {a, b + Fr::one()}, t2, rng);
        Transcript t3("sigma-test");
        CHECK(!sigma_verify(sys, forged, t3));
    }
}

static RangeProof prove_range(uint64_t value, const G1& base, Fr& rho_out, Rng& rng) {
    RangeProver prover(value, base, rng);
    Transcript tr("range-test");
    prover.absorb_announcements(tr, "rp");
    rho_out = prover.rho_weighted_sum();
    return prover.finish(tr, "rp");
}

// full verification: challenge split plus the batched bit equations
static bool check_range(const RangeProof& rp, const G1& base, uint64_t seed) {
    RangeVerifier v(rp, base);
    Transcript tr("range-test");
    v.absorb_announcements(tr, "rp");
    if (!v.finish(tr, "rp")) return false;
    RangeBatch batch{Rng(seed)};
    batch.add(rp, base);
    return batch.verify();
}

TEST_CASE("bit range proofs") {
    Rng rng(42);
    G1 base = bls::hash_to_g1("range-base", Bytes{1});

    SECTION("boundary values prove and verify") {
        for (uint64_t v : {uint64_t(0), uint64_t(1), uint64_t(0x80000000),
                           uint64_t(kValueMax)}) {
            CAPTURE(v);
            Fr rho;
            RangeProof rp = prove_range(v, base, rho, rng);
            CHECK(rp.well_formed());
            CHECK(check_range(rp, base, 7));
            CHECK(check_range(rp, base, 8));  // any weighting accepts honest proofs

            // the weighted bit commitments reconstruct base^v g^rho
            RangeVerifier ver(rp, base);
            G1 lhs = ver.weighted_bit_sum();
            G1 rhs = base.mul(Fr::from_int(v)) + bls::g1_generator().mul(rho);
            CHECK(lhs == rhs);
        }
    }

    SECTION("a non-bit commitment is rejected") {
        Fr rho;
        RangeProof rp = prove_range(5, base, rho, rng);
        // replace bit 0 commitment with a commitment to 2
        rp.bits[0] = base.mul(Fr::from_int(2)) + bls::g1_generator().mul(Fr::from_int(9));
        CHECK(!check_range(rp, base, 7));
    }

    SECTION("tampered responses are rejected") {
        Fr rho;
        RangeProof rp = prove_range(12345, base, rho, rng);
        auto bad = rp;
        bad.ors[3].z0 = bad.ors[3].z0 + Fr::one();
        CHECK(!check_range(bad, base, 7));
        bad = rp;
        bad.ors[3].c0 = bad.ors[3].c0 + Fr::one();
        CHECK(!check_range(bad, base, 7));
        bad = rp;
        bad.ors[3].a1 = bad.ors[3].a1 + base;
        CHECK(!check_range(bad, base, 7));
    }

    SECTION("proof does not transfer to another base") {
        Fr rho;
        RangeProof rp = prove_range(77, base, rho, rng);
        G1 other = bls::hash_to_g1("range-base", Bytes{2});
        CHECK(check_range(rp, base, 7));
        CHECK(!check_range(rp, other, 7));
    }

    SECTION("wire roundtrip") {
        Fr rho;
        RangeProof rp = prove_range(0xdeadbeef, base, rho, rng);
        Writer w;
        rp.encode(w);
        Bytes bts = w.take();
        Reader r(bts);
        RangeProof back = RangeProof::decode(r);
        REQUIRE(r.done());
        CHECK(check_range(back, base, 7));
    }

    SECTION("batch isolates nothing: one bad proof fails the whole batch") {
        Fr rho1, rho2;
        RangeProof good = prove_range(10, base, rho1, rng);
        RangeProof bad = prove_range(20, base, rho2, rng);
        bad.bits[2] = bad.bits[2] + base;
        RangeBatch batch{Rng(uint64_t(9))};
        batch.add(good, base);
        batch.add(bad, base);
        CHECK(!batch.verify());
    }
}

TEST_CASE("powers of two weighting") {
    const G1& g = bls::g1_generator();
    std::vector<G1> ps;
    for (int i = 0; i < 5; i++) ps.push_back(g.mul(Fr::from_int(i + 1)));
    // sum 2^i * (i+1): 1 + 4 + 12 + 32 + 80 = 129
    CHECK(weighted_by_powers_of_two(ps) == g.mul(Fr::from_int(129)));
}
