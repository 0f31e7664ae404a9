#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace zef;

static KeyPair key_from(uint64_t seed) {
    Rng rng(seed);
    return KeyPair::generate(rng);
}

TEST_CASE("transfer lifecycle") {
    KeyPair alice = key_from(1), bob = key_from(2);
    Uid a = Uid::root(1), b = Uid::root(2);
    auto net = TestNet::make(4, 1, 99,
                             {{a, alice.public_key(), 100}, {b, bob.public_key(), 50}});

    SignedRequest sr = SignedRequest::sign(Request{a, 0, OpTransfer{b, 30}}, alice);

    SECTION("vote, re-vote, lock") {
        auto v1 = net.engines[0].handle_request(sr);
        REQUIRE(v1.ok());
        auto v2 = net.engines[0].handle_request(sr);
        REQUIRE(v2.ok());
        Writer w1, w2;
        v1.value().encode(w1);
        v2.value().encode(w2);
        CHECK(w1.out == w2.out);  // byte-identical re-vote

        auto other = SignedRequest::sign(Request{a, 0, OpTransfer{b, 31}}, alice);
        auto locked = net.engines[0].handle_request(other);
        REQUIRE(!locked.ok());
        CHECK(locked.error().code == Err::AccountLocked);
    }

    SECTION("bad owner signature") {
        auto forged = SignedRequest::sign(Request{a, 0, OpTransfer{b, 30}}, bob);
        auto r = net.engines[0].handle_request(forged);
        REQUIRE(!r.ok());
        CHECK(r.error().code == Err::BadOwnerSignature);
    }

    SECTION("wrong sequence") {
        auto ahead = SignedRequest::sign(Request{a, 5, OpTransfer{b, 30}}, alice);
        auto r = net.engines[0].handle_request(ahead);
        REQUIRE(!r.ok());
        CHECK(r.error().code == Err::WrongSequence);
        CHECK(r.error().arg == 0);
    }

    SECTION("insufficient funds and zero amount") {
        auto big = SignedRequest::sign(Request{a, 0, OpTransfer{b, 101}}, alice);
        CHECK(net.engines[0].handle_request(big).error().code == Err::InsufficientFunds);
        auto zero = SignedRequest::sign(Request{a, 0, OpTransfer{b, 0}}, alice);
        CHECK(net.engines[0].handle_request(zero).error().code == Err::InsufficientFunds);
    }

    SECTION("confirm executes once") {
        auto cert = net.certify(sr);
        REQUIRE(cert.ok());
        REQUIRE(net.confirm_all(cert.value()).ok());
        for (auto& e : net.engines) {
            CHECK(e.find(a)->balance == 70);
            CHECK(e.find(b)->balance == 80);
            CHECK(e.find(a)->next_sequence == 1);
            CHECK(!e.find(a)->pending);
            CHECK(e.find(a)->confirmed.size() == 1);
            CHECK(e.find(b)->received.size() == 1);
        }
        // idempotent redelivery of both certificate and credit
        REQUIRE(net.confirm_all(cert.value()).ok());
        auto msgs = derive_cross_shard(cert.value());
        REQUIRE(msgs.size() == 1);
        for (auto& e : net.engines) e.handle_cross_shard(msgs[0]);
        for (auto& e : net.engines) {
            CHECK(e.find(a)->balance == 70);
            CHECK(e.find(b)->balance == 80);
            CHECK(e.find(b)->received.size() == 1);
        }
    }

    SECTION("unknown account") {
        auto r = net.engines[0].handle_request(
            SignedRequest::sign(Request{Uid::root(42), 0, OpTransfer{b, 1}}, alice));
        CHECK(r.error().code == Err::InactiveAccount);
    }
}

TEST_CASE("open activate close sweep") {
    KeyPair alice = key_from(3), carol = key_from(4);
    Uid a = Uid::root(1);
    auto net = TestNet::make(4, 1, 100, {{a, alice.public_key(), 100}});

    // wrong child id refused
    auto bad = SignedRequest::sign(
        Request{a, 0, OpOpenAccount{a.child(3), carol.public_key()}}, alice);
    CHECK(net.engines[0].handle_request(bad).error().code == Err::WrongChildId);

    Uid child = a.child(0);
    auto open = net.run_op(alice, a, 0, OpOpenAccount{child, carol.public_key()});
    REQUIRE(open.ok());
    for (auto& e : net.engines) {
        REQUIRE(e.find(child));
        CHECK(e.find(child)->active());
        CHECK(*e.find(child)->owner == carol.public_key());
        CHECK(e.find(child)->balance == 0);
    }

    // fund the child, then child pays back
    REQUIRE(net.run_op(alice, a, 1, OpTransfer{child, 40}).ok());
    REQUIRE(net.run_op(carol, child, 0, OpTransfer{a, 10}).ok());
    for (auto& e : net.engines) {
        CHECK(e.find(child)->balance == 30);
        CHECK(e.find(a)->balance == 70);
    }

    auto close = net.run_op(carol, child, 1, OpCloseAccount{});
    REQUIRE(close.ok());
    for (auto& e : net.engines) CHECK(e.find(child) == nullptr);  // physically deleted

    // no further requests or confirmations for the closed account
    auto dead = SignedRequest::sign(Request{child, 2, OpTransfer{a, 1}}, carol);
    CHECK(net.engines[0].handle_request(dead).error().code == Err::InactiveAccount);

    SECTION("late credit recreates ownerless, replayed activation stays dead") {
        REQUIRE(net.run_op(alice, a, 2, OpTransfer{child, 5}).ok());
        for (auto& e : net.engines) {
            REQUIRE(e.find(child));
            CHECK(!e.find(child)->active());
            CHECK(e.find(child)->balance == 5);
        }
        // replay the original activation; the dedup set must block it
        auto msgs = derive_cross_shard(open.value());
        REQUIRE(msgs.size() == 1);
        for (auto& e : net.engines) e.handle_cross_shard(msgs[0]);
        for (auto& e : net.engines) CHECK(!e.find(child)->active());

        // the record can never activate again: parent moved past sequence 0
        CHECK(!net.engines[0].can_become_active(child));
        CHECK(net.engines[0].sweep() == 1);
        CHECK(net.engines[0].find(child) == nullptr);
    }

    SECTION("re-open of the same child id is impossible") {
        auto again = SignedRequest::sign(
            Request{a, 2, OpOpenAccount{child, carol.public_key()}}, alice);
        CHECK(net.engines[0].handle_request(again).error().code == Err::WrongChildId);
    }
}

TEST_CASE("missing earlier certificates") {
    KeyPair alice = key_from(5);
    Uid a = Uid::root(1), b = Uid::root(2);
    auto net = TestNet::make(4, 1, 101, {{a, alice.public_key(), 100}, {b, {}, 0}});

    auto sr0 = SignedRequest::sign(Request{a, 0, OpTransfer{b, 1}}, alice);
    auto c0 = net.certify(sr0);
    REQUIRE(c0.ok());
    REQUIRE(net.confirm_all(c0.value()).ok());
    auto sr1 = SignedRequest::sign(Request{a, 1, OpTransfer{b, 2}}, alice);
    auto c1 = net.certify(sr1);
    REQUIRE(c1.ok());

    // a fresh engine that saw neither certificate
    AccountEngine late(*net.committee, "auth-0", net.keys[0]);
    auto r = late.handle_confirmation(c1.value());
    REQUIRE(!r.ok());
    CHECK(r.error().code == Err::MissingEarlierCertificates);
    CHECK(r.error().arg == 0);  // replay from sequence 0

    REQUIRE(late.handle_confirmation(c0.value()).ok());
    auto r2 = late.handle_confirmation(c1.value());
    REQUIRE(r2.ok());
    CHECK(late.find(a)->next_sequence == 2);
}

TEST_CASE("credit before activate converges") {
    KeyPair alice = key_from(6), carol = key_from(7);
    Uid a = Uid::root(1);
    Uid child = a.child(0);
    auto net = TestNet::make(4, 1, 102, {{a, alice.public_key(), 100}});

    auto open = net.run_op(alice, a, 0, OpOpenAccount{child, carol.public_key()});
    REQUIRE(open.ok());
    auto pay = net.run_op(alice, a, 1, OpTransfer{child, 25});
    REQUIRE(pay.ok());

    // deliver to a fresh engine in the reverse order: credit, then activate
    AccountEngine late(*net.committee, "auth-1", net.keys[1]);
    auto credit = derive_cross_shard(pay.value())[0];
    auto activate = derive_cross_shard(open.value())[0];
    late.handle_cross_shard(credit);
    REQUIRE(late.find(child));
    CHECK(!late.find(child)->active());
    CHECK(late.find(child)->balance == 25);
    late.handle_cross_shard(activate);
    CHECK(late.find(child)->active());
    CHECK(late.find(child)->balance == 25);
    CHECK(late.find(child)->received.size() == 2);

    // agreement view matches an engine that saw the natural order
    REQUIRE(late.handle_confirmation(open.value()).ok());
    REQUIRE(late.handle_confirmation(pay.value()).ok());
    CHECK(late.active_fingerprint() == net.engines[0].active_fingerprint());
}

TEST_CASE("agreement under shuffled delivery") {
    KeyPair alice = key_from(8), bob = key_from(9);
    Uid a = Uid::root(1), b = Uid::root(2);
    auto net = TestNet::make(4, 1, 103,
                             {{a, alice.public_key(), 60}, {b, bob.public_key(), 40}});

    std::vector<Certificate> certs;
    std::vector<CrossShardMessage> msgs;
    auto push = [&](Result<Certificate> c) {
        REQUIRE(c.ok());
        certs.push_back(c.value());
        for (auto& m : derive_cross_shard(c.value())) msgs.push_back(m);
    };
    push(net.run_op(alice, a, 0, OpTransfer{b, 10}));
    push(net.run_op(bob, b, 0, OpTransfer{a, 5}));
    push(net.run_op(alice, a, 1, OpTransfer{b, 7}));
    push(net.run_op(bob, b, 1, OpTransfer{a, 2}));
    push(net.run_op(alice, a, 2, OpChangeKey{key_from(10).public_key()}));

    Rng rng(2024);
    for (int trial = 0; trial < 20; trial++) {
        AccountEngine fresh(*net.committee, "auth-2", net.keys[2]);
        // random interleaving; per-account cert order is forced by retry
        std::vector<size_t> order(certs.size());
        for (size_t i = 0; i < order.size(); i++) order[i] = i;
        for (size_t i = order.size(); i > 1; i--) {
            size_t j = rng.u64() % i;
            std::swap(order[i - 1], order[j]);
        }
        std::vector<size_t> todo(order.begin(), order.end());
        while (!todo.empty()) {
            for (auto it = todo.begin(); it != todo.end();) {
                auto r = fresh.handle_confirmation(certs[*it]);
                if (r.ok()) {
                    for (auto& m : r.value()) fresh.handle_cross_shard(m);
                    it = todo.erase(it);
                } else {
                    REQUIRE(r.error().code == Err::MissingEarlierCertificates);
                    ++it;
                }
            }
        }
        CHECK(fresh.active_fingerprint() == net.engines[0].active_fingerprint());
    }
}

TEST_CASE("spendable oracle") {
    KeyPair alice = key_from(11), bob = key_from(12);
    Uid a = Uid::root(1), b = Uid::root(2);
    auto net = TestNet::make(4, 1, 104,
                             {{a, alice.public_key(), 10}, {b, bob.public_key(), 0}});

    CHECK(compute_spendable(*net.committee, {}, {}, a) == 10);
    CHECK(compute_spendable(*net.committee, {}, {}, b) == 0);

    std::vector<Certificate> certs;
    auto t = net.run_op(alice, a, 0, OpTransfer{b, 4});
    REQUIRE(t.ok());
    certs.push_back(t.value());
    CHECK(compute_spendable(*net.committee, certs, {}, a) == 6);
    CHECK(compute_spendable(*net.committee, certs, {}, b) == 4);

    // coins enter the sum only while unspent
    std::vector<KnownCoin> coins{{a, SpentMarker::opaque(0), 3}, {a, SpentMarker::opaque(1), 5}};
    CHECK(compute_spendable(*net.committee, certs, coins, a) == 14);
    Digest h{};
    auto spend = net.run_op(alice, a, 1, OpSpend{0, SpentMarker::opaque(1), {}, h});
    // the engine refuses an opaque marker without a credential, so build the
    // cert shape directly for the oracle (oracle reads certificates only)
    REQUIRE(!spend.ok());
    Request burn{a, 1, OpSpend{1, SpentMarker::opaque(1), {}, h}};
    Certificate fake{burn, {}};
    certs.push_back(fake);
    CHECK(compute_spendable(*net.committee, certs, coins, a) == 8);  // -1 withdrawal -5 coin
    CHECK(compute_spendable(*net.committee, certs, coins, b) == 4);
}

TEST_CASE("can become active fixtures") {
    auto lookup_of = [](std::map<Uid, ParentView> m) {
        return [m](const Uid& id) -> std::optional<ParentView> {
            auto it = m.find(id);
            if (it == m.end()) return std::nullopt;
            return it->second;
        };
    };
    Uid p = Uid::root(1);

    // active account: trivially true
    CHECK(AccountEngine::can_become_active(p, lookup_of({{p, {true, 3}}})));
    // parent moved past the child's creation slot and is closed: dead forever
    CHECK(!AccountEngine::can_become_active(p.child(2), lookup_of({{p, {false, 5}}})));
    // parent active and has not yet reached the slot: may still be opened
    CHECK(AccountEngine::can_become_active(p.child(7), lookup_of({{p, {true, 3}}})));
    // parent active but already past the slot: never
    CHECK(!AccountEngine::can_become_active(p.child(1), lookup_of({{p, {true, 3}}})));
    // missing root can never appear
    CHECK(!AccountEngine::can_become_active(Uid::root(9), lookup_of({})));
    // two levels: grandparent active, parent not yet opened
    Uid gp = Uid::root(1), par = gp.child(4);
    CHECK(AccountEngine::can_become_active(par.child(0), lookup_of({{gp, {true, 2}}})));
    // two levels: parent record gone but grandparent already past its slot
    CHECK(!AccountEngine::can_become_active(par.child(0), lookup_of({{gp, {true, 5}}})));
}

TEST_CASE("snapshot roundtrip") {
    KeyPair alice = key_from(13), bob = key_from(14);
    Uid a = Uid::root(1), b = Uid::root(2);
    auto net = TestNet::make(4, 1, 105,
                             {{a, alice.public_key(), 100}, {b, bob.public_key(), 0}});
    REQUIRE(net.run_op(alice, a, 0, OpTransfer{b, 30}).ok());
    REQUIRE(net.run_op(bob, b, 0, OpTransfer{a, 10}).ok());

    Writer w;
    net.engines[0].encode_snapshot(w);
    Bytes snap = w.take();

    AccountEngine fresh(*net.committee, "auth-0", net.keys[0]);
    Reader r(snap);
    REQUIRE(fresh.load_snapshot(r).ok());
    REQUIRE(r.done());
    CHECK(fresh.full_digest() == net.engines[0].full_digest());
    CHECK(fresh.find(a)->balance == 80);
}
