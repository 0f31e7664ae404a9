#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace zef;

static KeyPair key_from(uint64_t seed) {
    Rng rng(seed);
    return KeyPair::generate(rng);
}

static Digest seed_of(uint8_t b) {
    Digest d;
    d.v.fill(b);
    return d;
}

// run the full cycle: spends certify, creation request is voted by every
// authority, votes aggregate into coins
static Result<std::vector<TransparentCoin>> mint(TestNet& net, TransparentSpendPlan& plan,
                                                 std::map<Uid, const KeyPair*> owners,
                                                 std::map<Uid, uint64_t>& seqs) {
    for (auto& [account, op] : plan.ops) {
        auto cert = net.run_op(*owners.at(account), account, seqs[account]++, op);
        if (!cert.ok()) return cert.error();
        plan.creation.spends.push_back(cert.value());
    }
    std::vector<std::vector<Vote>> votes(plan.creation.outputs.size());
    for (size_t i = 0; i < net.engines.size(); i++) {
        auto vs = handle_transparent_coin_creation(*net.committee, "auth-" + std::to_string(i),
                                                   net.keys[i], plan.creation);
        if (!vs.ok()) return vs.error();
        for (size_t j = 0; j < vs.value().size(); j++) votes[j].push_back(vs.value()[j]);
    }
    return aggregate_transparent_coins(*net.committee, plan.creation.outputs, votes);
}

TEST_CASE("transparent coin cycle") {
    KeyPair alice = key_from(21), bob = key_from(22);
    Uid a = Uid::root(1), b = Uid::root(2);
    auto net = TestNet::make(4, 1, 200,
                             {{a, alice.public_key(), 100}, {b, bob.public_key(), 100}});
    std::map<Uid, const KeyPair*> owners{{a, &alice}, {b, &bob}};
    std::map<Uid, uint64_t> seqs;

    // bootstrap: pure withdrawals (2, 2) -> one coin of 4 for bob's account
    std::vector<TransparentCoinBody> outs{{b, 4, seed_of(1)}};
    auto plan = build_transparent_spends(
        *net.committee, {{a, std::nullopt, 2}, {b, std::nullopt, 2}}, outs);
    REQUIRE(plan.ok());
    auto coins = mint(net, plan.value(), owners, seqs);
    REQUIRE(coins.ok());
    REQUIRE(coins.value().size() == 1);
    CHECK(coins.value()[0].verify(*net.committee).ok());
    CHECK(coins.value()[0].body().value == 4);
    for (auto& e : net.engines) {
        CHECK(e.find(a)->balance == 98);
        CHECK(e.find(b)->balance == 98);
    }

    TransparentCoin coin4 = coins.value()[0];

    SECTION("burn a coin into new coins") {
        // (coin 4 owned by b) + withdrawal 3 from a -> coins (5, 2)
        std::vector<TransparentCoinBody> outs2{{a, 5, seed_of(2)}, {b, 2, seed_of(3)}};
        auto plan2 = build_transparent_spends(
            *net.committee, {{b, coin4, 0}, {a, std::nullopt, 3}}, outs2);
        REQUIRE(plan2.ok());
        auto coins2 = mint(net, plan2.value(), owners, seqs);
        REQUIRE(coins2.ok());
        REQUIRE(coins2.value().size() == 2);
        for (auto& c : coins2.value()) CHECK(c.verify(*net.committee).ok());
        // the burned seed is now in b's spent set
        for (auto& e : net.engines)
            CHECK(e.find(b)->spent.count(coin4.body().marker().key()) == 1);

        // replaying the creation request yields the same coins (idempotent)
        auto vs = handle_transparent_coin_creation(*net.committee, "auth-0", net.keys[0],
                                                   plan2.value().creation);
        REQUIRE(vs.ok());
        Writer w1, w2;
        vs.value()[0].encode(w1);
        Vote::make("auth-0", outs2[0].digest(), net.keys[0]).encode(w2);
        CHECK(w1.out == w2.out);

        // double spend of the same coin is refused at request time
        std::vector<TransparentCoinBody> outs3{{a, 4, seed_of(4)}};
        auto plan3 = build_transparent_spends(*net.committee, {{b, coin4, 0}}, outs3);
        REQUIRE(plan3.ok());
        auto sr = SignedRequest::sign(
            Request{b, seqs[b], plan3.value().ops[0].second}, bob);
        auto r = net.engines[0].handle_request(sr);
        REQUIRE(!r.ok());
        CHECK(r.error().code == Err::AlreadySpent);
    }

    SECTION("conservation violations") {
        // builder catches a bad sum
        auto bad = build_transparent_spends(*net.committee, {{a, std::nullopt, 2}},
                                            {{b, 5, seed_of(5)}});
        REQUIRE(!bad.ok());
        CHECK(bad.error().code == Err::ConservationViolated);

        // authority catches a doctored creation request
        std::vector<TransparentCoinBody> outs2{{b, 3, seed_of(6)}};
        auto plan2 = build_transparent_spends(*net.committee, {{a, std::nullopt, 3}}, outs2);
        REQUIRE(plan2.ok());
        auto cert = net.run_op(alice, a, seqs[a]++, plan2.value().ops[0].second);
        REQUIRE(cert.ok());
        CreateTransparentCoins doctored;
        doctored.spends = {cert.value()};
        doctored.outputs = {{b, 30, seed_of(6)}};  // inflated after certification
        auto vs = handle_transparent_coin_creation(*net.committee, "auth-0", net.keys[0],
                                                   doctored);
        REQUIRE(!vs.ok());
        CHECK(vs.error().code == Err::HashMismatch);
    }

    SECTION("duplicate input coin") {
        auto dup = build_transparent_spends(*net.committee, {{b, coin4, 0}, {b, coin4, 0}},
                                            {{a, 8, seed_of(7)}});
        REQUIRE(!dup.ok());
        CHECK(dup.error().code == Err::DuplicateSpentMarker);
    }

    SECTION("withdrawal certificate listed twice cannot double-fund") {
        // one debit of 5, listed twice to pretend 10 went in
        std::vector<TransparentCoinBody> outs2{{b, 10, seed_of(9)}};
        OpSpend sp{5, SpentMarker::none(), {}, transparent_outputs_hash(outs2)};
        auto cert = net.run_op(alice, a, seqs[a]++, sp);
        REQUIRE(cert.ok());
        CreateTransparentCoins m;
        m.spends = {cert.value(), cert.value()};
        m.outputs = outs2;
        auto vs = handle_transparent_coin_creation(*net.committee, "auth-0", net.keys[0], m);
        REQUIRE(!vs.ok());
        CHECK(vs.error().code == Err::DuplicateSpentMarker);
    }

    SECTION("duplicate output seeds refused at aggregation") {
        std::vector<TransparentCoinBody> outs2{{a, 1, seed_of(8)}, {b, 1, seed_of(8)}};
        auto agg = aggregate_transparent_coins(*net.committee, outs2, {{}, {}});
        REQUIRE(!agg.ok());
        CHECK(agg.error().code == Err::DuplicateSpentMarker);
    }

    SECTION("redeem into an account") {
        auto redeem = net.run_op(
            bob, b, seqs[b]++,
            OpSpendAndTransfer{a, TransparentRedeem{coin4.encoded()}});
        REQUIRE(redeem.ok());
        for (auto& e : net.engines) {
            CHECK(e.find(a)->balance == 102);  // 98 + 4
            CHECK(e.find(b)->spent.count(coin4.body().marker().key()) == 1);
        }
        // second redemption refused
        auto again = SignedRequest::sign(
            Request{b, seqs[b], OpSpendAndTransfer{a, TransparentRedeem{coin4.encoded()}}}, bob);
        CHECK(net.engines[0].handle_request(again).error().code == Err::AlreadySpent);

        // spendable oracle agrees: coin no longer counts for b
        std::vector<Certificate> certs;
        for (auto& [id, st] : net.engines[0].accounts())
            for (auto& c : st.confirmed) certs.push_back(c);
        std::vector<KnownCoin> known{{b, coin4.body().marker(), 4}};
        CHECK(compute_spendable(*net.committee, certs, known, a) == 102);
        CHECK(compute_spendable(*net.committee, certs, known, b) == 98);
    }

    SECTION("wrong owner cannot burn the coin") {
        // coin belongs to b; a tries to spend it
        auto stolen = build_transparent_spends(*net.committee, {{a, coin4, 0}},
                                               {{a, 4, seed_of(9)}});
        REQUIRE(!stolen.ok());
        CHECK(stolen.error().code == Err::InvalidCertificate);

        // force the op through anyway: engine validation refuses
        OpSpend op;
        op.withdrawal = 0;
        op.marker = coin4.body().marker();
        op.credential = coin4.encoded();
        op.outputs_hash = seed_of(9);
        auto sr = SignedRequest::sign(Request{a, seqs[a], op}, alice);
        auto r = net.engines[0].handle_request(sr);
        REQUIRE(!r.ok());
        CHECK(r.error().code == Err::BadCoinSignature);
    }

    SECTION("creation request roundtrips on the wire") {
        std::vector<TransparentCoinBody> outs2{{a, 4, seed_of(10)}};
        auto plan2 = build_transparent_spends(*net.committee, {{b, coin4, 0}}, outs2);
        REQUIRE(plan2.ok());
        auto cert = net.run_op(bob, b, seqs[b]++, plan2.value().ops[0].second);
        REQUIRE(cert.ok());
        plan2.value().creation.spends.push_back(cert.value());
        Writer w;
        plan2.value().creation.encode(w);
        Bytes bts = w.take();
        Reader r(bts);
        auto back = CreateTransparentCoins::decode(r);
        REQUIRE(r.done());
        CHECK(back.outputs_hash() == plan2.value().creation.outputs_hash());
        auto vs = handle_transparent_coin_creation(*net.committee, "auth-2", net.keys[2], back);
        REQUIRE(vs.ok());
        CHECK(vs.value().size() == 1);
    }
}

TEST_CASE("opaque and transparent markers share one spent set") {
    KeyPair alice = key_from(23);
    Uid a = Uid::root(1);
    auto net = TestNet::make(4, 1, 201, {{a, alice.public_key(), 100}});

    // same 32 bytes as index-bytes vs seed: different kinds, both can be spent
    SpentMarker m1 = SpentMarker::opaque(7);
    SpentMarker m2 = SpentMarker::transparent(seed_of(7));
    CHECK(!(m1 == m2));
    CHECK(m1.key() != m2.key());

    AccountState st;
    st.spent.insert(m1.key());
    CHECK(st.spent.count(m2.key()) == 0);
    st.spent.insert(m2.key());
    CHECK(st.spent.size() == 2);

    // marker kind survives the wire
    Writer w;
    m2.encode(w);
    Bytes bts = w.take();
    Reader r(bts);
    CHECK(SpentMarker::decode(r) == m2);
}
