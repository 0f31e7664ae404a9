#include <catch2/catch_amalgamated.hpp>

#include "zef/errors.hpp"
#include "zef/hash.hpp"
#include "zef/rng.hpp"
#include "zef/sign.hpp"
#include "zef/transcript.hpp"
#include "zef/uid.hpp"

using namespace zef;

TEST_CASE("writer reader roundtrip") {
    Writer w;
    w.u8(7);
    w.u16(0x1234);
    w.u32(0xdeadbeef);
    w.u64(0x0123456789abcdefULL);
    w.lp(Bytes{1, 2, 3});
    w.lp_str("hello");
    Bytes b = w.take();

    Reader r(b);
    CHECK(r.u8() == 7);
    CHECK(r.u16() == 0x1234);
    CHECK(r.u32() == 0xdeadbeef);
    CHECK(r.u64() == 0x0123456789abcdefULL);
    CHECK(r.lp() == Bytes{1, 2, 3});
    CHECK(r.lp_str() == "hello");
    CHECK(r.done());
    CHECK_THROWS_AS(r.u8(), ParseError);
}

TEST_CASE("reader bounds") {
    Bytes b{1, 2};
    Reader r(b);
    CHECK_THROWS_AS(r.u32(), ParseError);

    // oversized length prefix
    Writer w;
    w.u32(0xffffffff);
    Bytes lp = w.take();
    Reader r2(lp);
    CHECK_THROWS_AS(r2.lp(), ParseError);

    Reader r3(b);
    r3.u8();
    CHECK(!r3.done());
    CHECK_THROWS_AS(r3.expect_done(), ParseError);
}

TEST_CASE("hex") {
    Bytes b{0x00, 0xff, 0x10, 0xab};
    CHECK(to_hex(b) == "00ff10ab");
    CHECK(from_hex("00ff10ab") == b);
    CHECK_THROWS_AS(from_hex("0g"), ParseError);
    CHECK_THROWS_AS(from_hex("abc"), ParseError);  // odd length
}

TEST_CASE("uid structure") {
    Uid root = Uid::root(5);
    CHECK(root.is_root());
    CHECK(root.to_string() == "5");
    CHECK(!root.parent());

    Uid child = root.child(0).child(17);
    CHECK(child.path == std::vector<uint64_t>{5, 0, 17});
    CHECK(child.to_string() == "5/0/17");
    CHECK(*child.parent() == root.child(0));

    auto parsed = Uid::parse("5/0/17");
    REQUIRE(parsed);
    CHECK(*parsed == child);
    CHECK(!Uid::parse(""));
    CHECK(!Uid::parse("a/b"));
    CHECK(!Uid::parse("1//2"));

    // length bound
    Uid deep = root;
    for (int i = 0; i < 7; i++) deep = deep.child(i);
    CHECK(deep.valid(8));
    CHECK(!deep.child(9).valid(8));

    Writer w;
    child.encode(w);
    Bytes b = w.take();
    Reader r(b);
    CHECK(Uid::decode(r) == child);

    // decode refuses over-long ids
    Uid nine = deep.child(9);
    Writer w2;
    nine.encode(w2);
    Bytes b2 = w2.take();
    Reader r2(b2);
    CHECK_THROWS_AS(Uid::decode(r2, 8), ParseError);
}

TEST_CASE("error codes roundtrip") {
    Error e(Err::MissingEarlierCertificates, 42, "behind");
    Writer w;
    e.encode(w);
    Bytes b = w.take();
    Reader r(b);
    Error back = Error::decode(r);
    CHECK(back.code == Err::MissingEarlierCertificates);
    CHECK(back.arg == 42);
    CHECK(back.detail == "behind");
    CHECK(back.to_string().find("expected=42") != std::string::npos);

    Result<int> good = 5;
    CHECK(good.ok());
    CHECK(good.value() == 5);
    Result<int> bad = Err::InsufficientFunds;
    CHECK(!bad.ok());
    CHECK(bad.error().code == Err::InsufficientFunds);
}

TEST_CASE("hashing is domain separated") {
    Bytes m{1, 2, 3};
    Digest a = hash_bytes(domain::request, m);
    Digest b = hash_bytes(domain::state, m);
    CHECK(!(a == b));
    CHECK(hash_bytes(domain::request, m) == a);  // deterministic

    // update streams raw bytes: chunking does not change the digest, any
    // framing is the caller's job (encoders length-prefix their fields)
    Digest c = Hasher(domain::request).update(Bytes{1}).update(Bytes{2, 3}).digest();
    CHECK(c == a);
}

TEST_CASE("rng determinism and forks") {
    Rng a(7), b(7), c(8);
    CHECK(a.u64() == b.u64());
    CHECK(a.u64() == b.u64());
    Rng a2(7);
    a2.u64();
    a2.u64();
    CHECK(a.u64() == a2.u64());  // equally advanced streams stay in step
    (void)c;

    Rng f1 = Rng(7).fork(1);
    Rng f2 = Rng(7).fork(2);
    CHECK(f1.u64() != f2.u64());
    Rng f1b = Rng(7).fork(1);
    CHECK(Rng(7).fork(1).u64() == f1b.u64());
}

TEST_CASE("signatures") {
    Rng rng(55);
    KeyPair k = KeyPair::generate(rng);
    Bytes m{9, 9, 9};
    Signature s = k.sign(m);
    CHECK(verify_signature(k.public_key(), m, s));
    Bytes m2{9, 9, 8};
    CHECK(!verify_signature(k.public_key(), m2, s));
    Signature broken = s;
    broken.v[3] ^= 1;
    CHECK(!verify_signature(k.public_key(), m, broken));

    // deterministic: same key, same message, same bytes
    Signature s2 = k.sign(m);
    CHECK(s == s2);

    // memo keeps verification honest
    enable_verification_memo(true);
    CHECK(verify_signature(k.public_key(), m, s));
    CHECK(verify_signature(k.public_key(), m, s));
    CHECK(!verify_signature(k.public_key(), m2, s));
    enable_verification_memo(false);

    KeyPair k2 = KeyPair::from_seed({1, 2, 3});
    KeyPair k3 = KeyPair::from_seed({1, 2, 3});
    CHECK(k2.public_key() == k3.public_key());
}

TEST_CASE("transcript challenges") {
    Transcript t1("test"), t2("test"), t3("other");
    t1.absorb("m", Bytes{1});
    t2.absorb("m", Bytes{1});
    t3.absorb("m", Bytes{1});
    bls::Fr c1 = t1.challenge("c");
    CHECK(c1 == t2.challenge("c"));
    CHECK(!(c1 == t3.challenge("c")));

    // challenges chain: pulling one changes the next
    bls::Fr c1b = t1.challenge("c");
    CHECK(!(c1 == c1b));

    // label and content sensitivity
    Transcript t4("test"), t5("test");
    t4.absorb("m", Bytes{2});
    t5.absorb("n", Bytes{1});
    CHECK(!(t4.challenge("c") == c1));
    CHECK(!(t5.challenge("c") == c1));
}
