#include <catch2/catch_amalgamated.hpp>

#include "zef/coins.hpp"

using namespace zef;
using namespace zef::coins;
using bls::Fr;
using bls::G1;

namespace {

struct Issuers {
    Params params = default_params();
    coconut::KeyGenOutput keys;
    uint32_t t = 0;

    static Issuers make(uint32_t t, uint32_t n, uint64_t seed) {
        Rng rng(seed);
        Issuers is;
        is.t = t;
        auto kg = coconut::keygen(is.params, t, n, rng);
        REQUIRE(kg.ok());
        is.keys = kg.value();
        return is;
    }
    const coconut::VerKey& vk() const { return keys.aggregate_vk; }

    // run issuance with the first t authorities and hand back finished coins
    std::vector<OpaqueCoin> issue(const BuiltRequest& built, const std::vector<OutputSpec>& outs) {
        size_t d = built.request.outputs.size();
        std::vector<std::vector<std::pair<uint32_t, coconut::Credential>>> parts(d);
        for (uint32_t i = 0; i < t; i++) {
            auto shares = issue_blind_coins(keys.shares[i], built.request);
            REQUIRE(shares.size() == d);
            for (size_t j = 0; j < d; j++) {
                auto cred = unblind_output(params, keys.share_vks[i], built.request.outputs[j],
                                           built.secrets[j], shares[j]);
                parts[j].push_back({i + 1, cred});
            }
        }
        std::vector<OpaqueCoin> coins;
        for (size_t j = 0; j < d; j++) {
            auto agg = coconut::agg_cred(parts[j], t);
            REQUIRE(agg.ok());
            coins.push_back(OpaqueCoin{outs[j].account, outs[j].index, outs[j].seed,
                                       outs[j].value, agg.value()});
        }
        return coins;
    }
};

}  // namespace

TEST_CASE("blinded coin pipeline") {
    auto is = Issuers::make(3, 4, 51);
    Rng rng(52);
    Uid alice = Uid::root(1), bob = Uid::root(2);

    // bootstrap coins from pure withdrawals: (3) and (4)
    std::vector<SpendInput> mint_in{{std::nullopt, 3}, {std::nullopt, 4}};
    std::vector<OutputSpec> mint_out{{alice, 0, Fr::random(rng), 3},
                                     {alice, 1, Fr::random(rng), 4}};
    auto mint = coin_request(is.params, is.vk(), mint_in, mint_out, rng);
    REQUIRE(mint.ok());
    std::vector<InputFact> mint_facts{{std::nullopt, 3}, {std::nullopt, 4}};
    REQUIRE(verify_coin_request(is.params, is.vk(), mint.value().request, mint_facts).ok());
    auto coins = is.issue(mint.value(), mint_out);
    REQUIRE(coins.size() == 2);
    CHECK(coins[0].verify(is.params, is.vk()));
    CHECK(coins[1].verify(is.params, is.vk()));

    // spend (3, 4) plus withdrawal 1 into (6, 2)
    std::vector<SpendInput> spends{{coins[0], 0}, {coins[1], 1}};
    std::vector<OutputSpec> outs{{bob, 0, Fr::random(rng), 6}, {alice, 7, Fr::random(rng), 2}};
    auto built = coin_request(is.params, is.vk(), spends, outs, rng);
    REQUIRE(built.ok());
    std::vector<InputFact> facts{{coin_key(alice, 0), 0}, {coin_key(alice, 1), 1}};
    REQUIRE(verify_coin_request(is.params, is.vk(), built.value().request, facts).ok());

    SECTION("issued outputs verify as coins on the aggregate key") {
        auto next = is.issue(built.value(), outs);
        CHECK(next[0].verify(is.params, is.vk()));
        CHECK(next[1].verify(is.params, is.vk()));
        // wrong attribute set does not verify
        OpaqueCoin wrong = next[0];
        wrong.value = 7;
        CHECK(!wrong.verify(is.params, is.vk()));
        wrong = next[0];
        wrong.index = 1;
        CHECK(!wrong.verify(is.params, is.vk()));
        wrong = next[0];
        wrong.account = alice;
        CHECK(!wrong.verify(is.params, is.vk()));
    }

    SECTION("issuance is deterministic") {
        auto s1 = issue_blind_coins(is.keys.shares[0], built.value().request);
        auto s2 = issue_blind_coins(is.keys.shares[0], built.value().request);
        REQUIRE(s1.size() == s2.size());
        for (size_t j = 0; j < s1.size(); j++)
            CHECK(bls::g1_bytes(s1[j].s_tilde) == bls::g1_bytes(s2[j].s_tilde));
    }

    SECTION("authority facts bind the verification") {
        // wrong withdrawal amount
        std::vector<InputFact> f1{{coin_key(alice, 0), 0}, {coin_key(alice, 1), 2}};
        CHECK(!verify_coin_request(is.params, is.vk(), built.value().request, f1).ok());
        // wrong coin key (different index): the transcript commits to the
        // facts, so verification diverges before any pairing work
        std::vector<InputFact> f2{{coin_key(alice, 0), 0}, {coin_key(alice, 5), 1}};
        CHECK(!verify_coin_request(is.params, is.vk(), built.value().request, f2).ok());
        // wrong account in the key
        std::vector<InputFact> f3{{coin_key(bob, 0), 0}, {coin_key(alice, 1), 1}};
        CHECK(!verify_coin_request(is.params, is.vk(), built.value().request, f3).ok());
        // missing key for a coin input
        std::vector<InputFact> f4{{std::nullopt, 0}, {coin_key(alice, 1), 1}};
        CHECK(!verify_coin_request(is.params, is.vk(), built.value().request, f4).ok());
        // wrong fact count
        std::vector<InputFact> f5{{coin_key(alice, 0), 0}};
        CHECK(!verify_coin_request(is.params, is.vk(), built.value().request, f5).ok());
    }

    SECTION("forged input credential is pinpointed") {
        // a wallet can prove consistently against a credential it never held;
        // the pairing check catches it and names the offending position
        auto bad = coins;
        bad[1].sigma.s = bad[1].sigma.s + Params::g1();
        std::vector<SpendInput> sp{{bad[0], 0}, {bad[1], 1}};
        auto b = coin_request(is.params, is.vk(), sp, outs, rng);
        REQUIRE(b.ok());
        auto r = verify_coin_request(is.params, is.vk(), b.value().request, facts);
        REQUIRE(!r.ok());
        CHECK(r.error().code == Err::InvalidInputCoin);
        CHECK(r.error().arg == 1);
    }

    SECTION("tampered requests are rejected") {
        auto m = built.value().request;
        m.outputs[0].cv = m.outputs[0].cv + Params::g1();
        CHECK(!verify_coin_request(is.params, is.vk(), m, facts).ok());

        m = built.value().request;
        m.outputs[0].ck = m.outputs[0].ck + Params::g1();
        CHECK(!verify_coin_request(is.params, is.vk(), m, facts).ok());

        m = built.value().request;
        m.outputs[0].cm = m.outputs[0].cm + Params::g1();
        CHECK(!verify_coin_request(is.params, is.vk(), m, facts).ok());

        m = built.value().request;
        m.inputs[0].kappa = m.inputs[0].kappa + Params::g2();
        CHECK(!verify_coin_request(is.params, is.vk(), m, facts).ok());

        m = built.value().request;
        std::swap(m.outputs[0], m.outputs[1]);
        CHECK(!verify_coin_request(is.params, is.vk(), m, facts).ok());

        // swapped inputs against ordered facts
        m = built.value().request;
        std::swap(m.inputs[0], m.inputs[1]);
        std::vector<InputFact> same = facts;
        CHECK(!verify_coin_request(is.params, is.vk(), m, same).ok());
    }

    SECTION("conservation is enforced at build time") {
        std::vector<OutputSpec> fat{{bob, 0, Fr::random(rng), 6}, {alice, 7, Fr::random(rng), 3}};
        auto r = coin_request(is.params, is.vk(), spends, fat, rng);
        REQUIRE(!r.ok());
        CHECK(r.error().code == Err::ConservationViolated);
    }

    SECTION("value bounds") {
        std::vector<SpendInput> in{{std::nullopt, uint64_t(kValueMax) + 1}};
        std::vector<OutputSpec> out{{bob, 0, Fr::random(rng), uint64_t(kValueMax) + 1}};
        auto r = coin_request(is.params, is.vk(), in, out, rng);
        REQUIRE(!r.ok());
        CHECK(r.error().code == Err::ValueOutOfRange);

        std::vector<SpendInput> in2{{std::nullopt, kValueMax}};
        std::vector<OutputSpec> out2{{bob, 0, Fr::random(rng), kValueMax}};
        auto r2 = coin_request(is.params, is.vk(), in2, out2, rng);
        REQUIRE(r2.ok());
        std::vector<InputFact> fx{{std::nullopt, kValueMax}};
        CHECK(verify_coin_request(is.params, is.vk(), r2.value().request, fx).ok());
    }

    SECTION("request wire roundtrip") {
        Writer w;
        built.value().request.encode(w);
        Bytes b = w.take();
        Reader r(b);
        auto back = CoinRequest::decode(r);
        REQUIRE(r.done());
        CHECK(back.outputs_hash() == built.value().request.outputs_hash());
        CHECK(verify_coin_request(is.params, is.vk(), back, facts).ok());
    }

    SECTION("request building is deterministic per rng seed") {
        Rng r1(777), r2(777), r3(778);
        auto b1 = coin_request(is.params, is.vk(), spends, outs, r1);
        auto b2 = coin_request(is.params, is.vk(), spends, outs, r2);
        auto b3 = coin_request(is.params, is.vk(), spends, outs, r3);
        Writer w1, w2, w3;
        b1.value().request.encode(w1);
        b2.value().request.encode(w2);
        b3.value().request.encode(w3);
        CHECK(w1.out == w2.out);
        CHECK(w1.out != w3.out);
    }

    SECTION("coin file roundtrip") {
        Writer w;
        coins[0].encode(w);
        Bytes b = w.take();
        Reader r(b);
        auto back = OpaqueCoin::decode(r);
        REQUIRE(r.done());
        CHECK(back.verify(is.params, is.vk()));
        CHECK(back.account == alice);
        CHECK(back.index == 0);
        CHECK(back.value == 3);
    }
}

TEST_CASE("coin keys are positionally unique") {
    Uid a = Uid::root(1), b = Uid::root(2);
    CHECK(coin_key(a, 0) == coin_key(a, 0));
    CHECK(!(coin_key(a, 0) == coin_key(a, 1)));
    CHECK(!(coin_key(a, 0) == coin_key(b, 0)));
    CHECK(!(coin_key(a.child(1), 0) == coin_key(a, 0)));
}

TEST_CASE("presentation checks against the account key") {
    auto is = Issuers::make(2, 3, 53);
    Rng rng(54);
    Uid alice = Uid::root(1);

    std::vector<SpendInput> mint_in{{std::nullopt, 9}};
    std::vector<OutputSpec> mint_out{{alice, 4, Fr::random(rng), 9}};
    auto mint = coin_request(is.params, is.vk(), mint_in, mint_out, rng);
    REQUIRE(mint.ok());
    auto coins = is.issue(mint.value(), mint_out);

    std::vector<SpendInput> spends{{coins[0], 0}};
    std::vector<OutputSpec> outs{{alice, 5, Fr::random(rng), 9}};
    auto built = coin_request(is.params, is.vk(), spends, outs, rng);
    REQUIRE(built.ok());

    const auto& pres = built.value().request.inputs[0];
    CHECK(verify_presentation(is.vk(), pres, coin_key(alice, 4)));
    CHECK(!verify_presentation(is.vk(), pres, coin_key(alice, 5)));
    CHECK(!verify_presentation(is.vk(), pres, coin_key(Uid::root(2), 4)));

    // presentation bytes survive the wire
    Writer w;
    pres.encode(w);
    Bytes b = w.take();
    Reader r(b);
    auto back = InputPresentation::decode(r);
    REQUIRE(r.done());
    CHECK(verify_presentation(is.vk(), back, coin_key(alice, 4)));
}
