#include <catch2/catch_amalgamated.hpp>

#include "zef/coconut.hpp"

using namespace zef;
using namespace zef::coconut;
using bls::Fr;
using bls::G1;

// every size-t subset of {1..n} as index lists
static std::vector<std::vector<uint32_t>> subsets(uint32_t n, uint32_t t) {
    std::vector<std::vector<uint32_t>> out;
    for (uint32_t mask = 0; mask < (1u << n); mask++) {
        if (uint32_t(__builtin_popcount(mask)) != t) continue;
        std::vector<uint32_t> s;
        for (uint32_t i = 0; i < n; i++)
            if (mask & (1u << i)) s.push_back(i + 1);
        out.push_back(std::move(s));
    }
    return out;
}

TEST_CASE("threshold issuance, all configurations up to five authorities") {
    Rng rng(31);
    Params params = Params::setup(3, "coconut-test");

    for (uint32_t n = 1; n <= 5; n++) {
        for (uint32_t t = 1; t <= n; t++) {
            CAPTURE(n, t);
            auto kg = keygen(params, t, n, rng);
            REQUIRE(kg.ok());
            const auto& out = kg.value();
            REQUIRE(out.shares.size() == n);
            REQUIRE(out.share_vks.size() == n);

            std::vector<Fr> attrs{Fr::random(rng), Fr::random(rng), Fr::random(rng)};
            auto [factors, req] = prepare_blind_sign(params, attrs, "ctx", rng);
            G1 h = bls::hash_to_g1("blind-sign-base", bls::g1_bytes(req.cm));

            // each authority issues a share; each share verifies on its own key
            std::vector<Credential> creds;
            for (uint32_t i = 0; i < n; i++) {
                auto bs = blind_sign(params, out.shares[i], req, "ctx");
                REQUIRE(bs.ok());
                creds.push_back(unblind(params, out.share_vks[i], h, bs.value(), factors));
                CHECK(plain_verify(params, out.share_vks[i], creds.back(), attrs));
            }

            // independent oracle: interpolate the master secret from the first
            // t shares and sign directly
            std::vector<uint32_t> first(t);
            for (uint32_t i = 0; i < t; i++) first[i] = i + 1;
            auto ell = lagrange_at_zero(first);
            Fr x0 = Fr::zero();
            std::vector<Fr> y0(params.q, Fr::zero());
            for (uint32_t i = 0; i < t; i++) {
                x0 = x0 + ell[i] * out.shares[i].x;
                for (uint32_t a = 0; a < params.q; a++)
                    y0[a] = y0[a] + ell[i] * out.shares[i].y[a];
            }
            Fr e = x0;
            for (uint32_t a = 0; a < params.q; a++) e = e + y0[a] * attrs[a];
            Credential direct{h, h.mul(e)};
            CHECK(plain_verify(params, out.aggregate_vk, direct, attrs));

            // every subset of t shares aggregates to the same bytes as the oracle
            Writer wd;
            direct.encode(wd);
            for (const auto& s : subsets(n, t)) {
                std::vector<std::pair<uint32_t, Credential>> picked;
                for (uint32_t idx : s) picked.push_back({idx, creds[idx - 1]});
                auto agg = agg_cred(picked, t);
                REQUIRE(agg.ok());
                Writer wa;
                agg.value().encode(wa);
                CHECK(wa.out == wd.out);
                CHECK(plain_verify(params, out.aggregate_vk, agg.value(), attrs));
            }
        }
    }
}

TEST_CASE("aggregation failure modes") {
    Rng rng(32);
    Params params = Params::setup(3, "coconut-test");
    auto kg = keygen(params, 3, 4, rng);
    REQUIRE(kg.ok());
    const auto& out = kg.value();

    std::vector<Fr> attrs{Fr::from_int(5), Fr::from_int(6), Fr::from_int(7)};
    auto [factors, req] = prepare_blind_sign(params, attrs, "ctx", rng);
    G1 h = bls::hash_to_g1("blind-sign-base", bls::g1_bytes(req.cm));
    std::vector<Credential> creds;
    for (uint32_t i = 0; i < 4; i++) {
        auto bs = blind_sign(params, out.shares[i], req, "ctx");
        REQUIRE(bs.ok());
        creds.push_back(unblind(params, out.share_vks[i], h, bs.value(), factors));
    }

    SECTION("wrong share count") {
        auto r = agg_cred({{1, creds[0]}, {2, creds[1]}}, 3);
        CHECK(r.error().code == Err::WrongShareCount);
    }
    SECTION("duplicate evaluation point") {
        auto r = agg_cred({{1, creds[0]}, {1, creds[0]}, {2, creds[1]}}, 3);
        CHECK(r.error().code == Err::DuplicatePoint);
    }
    SECTION("mismatched base point") {
        Credential alien{bls::g1_generator(), creds[2].s};
        auto r = agg_cred({{1, creds[0]}, {2, creds[1]}, {3, alien}}, 3);
        CHECK(r.error().code == Err::InvalidShare);
    }
    SECTION("corrupted share makes an invalid credential") {
        Credential bad = creds[2];
        bad.s = bad.s + bls::g1_generator();
        auto r = agg_cred({{1, creds[0]}, {2, creds[1]}, {3, bad}}, 3);
        REQUIRE(r.ok());
        CHECK(!plain_verify(params, out.aggregate_vk, r.value(), attrs));
    }
    SECTION("fewer than threshold shares interpolate to garbage") {
        auto r = agg_cred({{1, creds[0]}, {2, creds[1]}}, 2);
        REQUIRE(r.ok());  // arithmetic succeeds
        CHECK(!plain_verify(params, out.aggregate_vk, r.value(), attrs));
    }
    SECTION("subset independence across distinct subsets") {
        auto a = agg_cred({{1, creds[0]}, {2, creds[1]}, {4, creds[3]}}, 3);
        auto b = agg_cred({{2, creds[1]}, {3, creds[2]}, {4, creds[3]}}, 3);
        REQUIRE(a.ok());
        REQUIRE(b.ok());
        Writer wa, wb;
        a.value().encode(wa);
        b.value().encode(wb);
        CHECK(wa.out == wb.out);
    }
}

TEST_CASE("blind sign request validation") {
    Rng rng(33);
    Params params = Params::setup(3, "coconut-test");
    auto kg = keygen(params, 2, 3, rng);
    std::vector<Fr> attrs{Fr::from_int(1), Fr::from_int(2), Fr::from_int(3)};
    auto [factors, req] = prepare_blind_sign(params, attrs, "ctx", rng);

    // context binds the proof
    CHECK(!blind_sign(params, kg.value().shares[0], req, "other-ctx").ok());

    // tampered commitment refused
    auto bad = req;
    bad.cm = bad.cm + Params::g1();
    CHECK(!blind_sign(params, kg.value().shares[0], bad, "ctx").ok());

    // tampered ciphertext refused
    bad = req;
    bad.cs[1] = bad.cs[1] + Params::g1();
    CHECK(!blind_sign(params, kg.value().shares[0], bad, "ctx").ok());

    // wire roundtrip still signs
    Writer w;
    req.encode(w);
    Bytes b = w.take();
    Reader r(b);
    auto back = BlindSignRequest::decode(r);
    REQUIRE(r.done());
    CHECK(blind_sign(params, kg.value().shares[0], back, "ctx").ok());
}

TEST_CASE("credential presentation") {
    Rng rng(34);
    Params params = Params::setup(3, "coconut-test");
    auto kg = keygen(params, 2, 3, rng);
    const auto& out = kg.value();
    std::vector<Fr> attrs{Fr::random(rng), Fr::random(rng), Fr::random(rng)};
    auto [factors, req] = prepare_blind_sign(params, attrs, "ctx", rng);
    G1 h = bls::hash_to_g1("blind-sign-base", bls::g1_bytes(req.cm));
    std::vector<std::pair<uint32_t, Credential>> picked;
    for (uint32_t i = 0; i < 2; i++) {
        auto bs = blind_sign(params, out.shares[i], req, "ctx");
        picked.push_back({i + 1, unblind(params, out.share_vks[i], h, bs.value(), factors)});
    }
    Credential cred = agg_cred(picked, 2).value();

    Presentation p = prove_cred(params, out.aggregate_vk, cred, attrs, "show", rng);
    CHECK(verify_cred(params, out.aggregate_vk, p, "show"));
    CHECK(!verify_cred(params, out.aggregate_vk, p, "steal"));

    // presentations are unlinkable randomizations but all verify
    Presentation p2 = prove_cred(params, out.aggregate_vk, cred, attrs, "show", rng);
    CHECK(verify_cred(params, out.aggregate_vk, p2, "show"));
    CHECK(!(bls::g1_bytes(p.h1) == bls::g1_bytes(p2.h1)));

    // tampering is caught
    Presentation bad = p;
    bad.kappa = bad.kappa + Params::g2();
    CHECK(!verify_cred(params, out.aggregate_vk, bad, "show"));
    bad = p;
    bad.s1 = bad.s1 + bls::g1_generator();
    CHECK(!verify_cred(params, out.aggregate_vk, bad, "show"));

    // wire roundtrip
    Writer w;
    p.encode(w);
    Bytes b = w.take();
    Reader r(b);
    Presentation back = Presentation::decode(r);
    REQUIRE(r.done());
    CHECK(verify_cred(params, out.aggregate_vk, back, "show"));

    // wrong attributes cannot produce a valid presentation
    std::vector<Fr> wrong = attrs;
    wrong[1] = wrong[1] + Fr::one();
    Presentation forged = prove_cred(params, out.aggregate_vk, cred, wrong, "show", rng);
    CHECK(!verify_cred(params, out.aggregate_vk, forged, "show"));
}

TEST_CASE("params and keys roundtrip") {
    Rng rng(35);
    Params params = Params::setup(3, "coconut-test");
    Writer w;
    params.encode(w);
    Bytes b = w.take();
    Reader r(b);
    Params back = Params::decode(r);
    CHECK(back.digest == params.digest);

    auto kg = keygen(params, 2, 3, rng);
    Writer w2;
    kg.value().aggregate_vk.encode(w2);
    Bytes b2 = w2.take();
    Reader r2(b2);
    VerKey vk = VerKey::decode(r2);
    CHECK(vk.digest() == kg.value().aggregate_vk.digest());

    Writer w3;
    kg.value().shares[1].encode(w3);
    Bytes b3 = w3.take();
    Reader r3(b3);
    SecretShare s = SecretShare::decode(r3);
    CHECK(s.index == 2);
    CHECK(s.x == kg.value().shares[1].x);

    CHECK(!keygen(params, 4, 3, rng).ok());
    CHECK(!keygen(params, 0, 3, rng).ok());
}
