#pragma once

// Ed25519 account/authority signatures (libsodium), plus an optional
// process-wide verification memo. The memo caches exact (key, message,
// signature) triples that verified once; it changes nothing observable and
// exists because replay-heavy test schedules re-verify identical
// certificates thousands of times.

#include <sodium.h>

#include <mutex>
#include <unordered_set>

#include "hash.hpp"
#include "rng.hpp"

namespace zef {

struct PublicKey {
    std::array<uint8_t, 32> v{};

    bool operator==(const PublicKey&) const = default;
    auto operator<=>(const PublicKey&) const = default;

    std::string hex() const { return to_hex(v.data(), v.size()); }
    static PublicKey from_hex(const std::string& s) {
        Bytes b = zef::from_hex(s);
        if (b.size() != 32) throw ParseError("bad public key length");
        PublicKey pk;
        std::memcpy(pk.v.data(), b.data(), 32);
        return pk;
    }

    void encode(Writer& w) const { w.raw(v.data(), 32); }
    static PublicKey decode(Reader& r) {
        PublicKey pk;
        r.raw_into(pk.v.data(), 32);
        return pk;
    }
};

struct Signature {
    std::array<uint8_t, 64> v{};

    bool operator==(const Signature&) const = default;

    void encode(Writer& w) const { w.raw(v.data(), 64); }
    static Signature decode(Reader& r) {
        Signature s;
        r.raw_into(s.v.data(), 64);
        return s;
    }
};

class KeyPair {
  public:
    KeyPair() = default;

    static KeyPair generate(Rng& rng) {
        ensure_sodium();
        std::array<uint8_t, 32> seed;
        rng.fill(seed.data(), seed.size());
        return from_seed(seed);
    }

    static KeyPair from_seed(const std::array<uint8_t, 32>& seed) {
        ensure_sodium();
        KeyPair kp;
        kp.seed_ = seed;
        crypto_sign_seed_keypair(kp.pk_.v.data(), kp.sk_.data(), seed.data());
        return kp;
    }

    const PublicKey& public_key() const { return pk_; }
    const std::array<uint8_t, 32>& seed() const { return seed_; }

    Signature sign(const Bytes& msg) const {
        Signature sig;
        crypto_sign_detached(sig.v.data(), nullptr, msg.data(), msg.size(), sk_.data());
        return sig;
    }

  private:
    std::array<uint8_t, 32> seed_{};
    std::array<uint8_t, 64> sk_{};
    PublicKey pk_;
};

namespace detail {
struct VerifyMemo {
    std::mutex mu;
    std::unordered_set<std::string> seen;
    bool enabled = false;

    static VerifyMemo& instance() {
        static VerifyMemo m;
        return m;
    }
};
}  // namespace detail

inline void enable_verification_memo(bool on) { detail::VerifyMemo::instance().enabled = on; }

inline bool verify_signature(const PublicKey& pk, const Bytes& msg, const Signature& sig) {
    ensure_sodium();
    auto& memo = detail::VerifyMemo::instance();
    std::string key;
    if (memo.enabled) {
        Digest d = Hasher("zef.verify.memo")
                       .update(pk.v.data(), 32)
                       .update(sig.v.data(), 64)
                       .update(msg)
                       .digest();
        key.assign(d.v.begin(), d.v.end());
        std::lock_guard lk(memo.mu);
        if (memo.seen.count(key)) return true;
    }
    bool okay =
        crypto_sign_verify_detached(sig.v.data(), msg.data(), msg.size(), pk.v.data()) == 0;
    if (okay && memo.enabled) {
        std::lock_guard lk(memo.mu);
        if (memo.seen.size() > 1u << 20) memo.seen.clear();
        memo.seen.insert(key);
    }
    return okay;
}

}  // namespace zef
