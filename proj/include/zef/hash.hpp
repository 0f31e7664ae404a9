#pragma once

// Domain-separated BLAKE2b. Every hashed message kind gets its own prefix so
// digests from different contexts can never collide.

#include <sodium.h>

#include <array>
#include <cstring>
#include <string>

#include "bytes.hpp"

namespace zef {

struct SodiumInit {
    SodiumInit() {
        if (sodium_init() < 0) throw std::runtime_error("sodium_init failed");
    }
};
inline void ensure_sodium() { static SodiumInit once; }

struct Digest {
    std::array<uint8_t, 32> v{};

    bool operator==(const Digest&) const = default;
    auto operator<=>(const Digest&) const = default;

    std::string hex() const { return to_hex(v.data(), v.size()); }
    std::string short_hex() const { return hex().substr(0, 12); }

    void encode(Writer& w) const { w.raw(v.data(), v.size()); }
    static Digest decode(Reader& r) {
        Digest d;
        r.raw_into(d.v.data(), d.v.size());
        return d;
    }
};

// Domain prefixes. Fixed strings, part of the protocol definition.
namespace domain {
inline constexpr const char* request = "zef.request.v1";
inline constexpr const char* transparent_coin = "zef.coin.transparent.v1";
inline constexpr const char* cross_shard = "zef.cross-shard.v1";
inline constexpr const char* coin_key = "zef.coin.key.v1";
inline constexpr const char* params = "zef.credential.params.v1";
inline constexpr const char* transcript = "zef.transcript.v1";
inline constexpr const char* state = "zef.state.v1";
inline constexpr const char* trace = "zef.sim.trace.v1";
inline constexpr const char* rng = "zef.rng.seed.v1";
inline constexpr const char* outputs = "zef.coin.outputs.v1";
inline constexpr const char* wallet = "zef.wallet.file.v1";
inline constexpr const char* snapshot = "zef.snapshot.file.v1";
inline constexpr const char* coin_file = "zef.coin.file.v1";
inline constexpr const char* shard = "zef.shard.v1";
inline constexpr const char* committee = "zef.committee.v1";
inline constexpr const char* vote = "zef.vote.v1";
}  // namespace domain

class Hasher {
  public:
    explicit Hasher(const char* domain_tag, size_t out_len = 32) : out_len_(out_len) {
        ensure_sodium();
        crypto_generichash_init(&st_, nullptr, 0, out_len_);
        uint8_t n = uint8_t(std::strlen(domain_tag));
        update(&n, 1);
        update(reinterpret_cast<const uint8_t*>(domain_tag), n);
    }

    Hasher& update(const uint8_t* p, size_t n) {
        crypto_generichash_update(&st_, p, n);
        return *this;
    }
    Hasher& update(const Bytes& b) { return update(b.data(), b.size()); }
    Hasher& update(const Digest& d) { return update(d.v.data(), d.v.size()); }
    Hasher& update_str(const std::string& s) {
        return update(reinterpret_cast<const uint8_t*>(s.data()), s.size());
    }
    Hasher& update_u64(uint64_t v) {
        uint8_t b[8];
        for (int i = 0; i < 8; i++) b[i] = uint8_t(v >> (8 * i));
        return update(b, 8);
    }

    // Finalization length must match the one given at construction.
    Digest digest() {
        Digest d;
        crypto_generichash_final(&st_, d.v.data(), 32);
        return d;
    }
    // 64-byte output, for unbiased scalar derivation; construct with out_len 64.
    std::array<uint8_t, 64> digest_wide() {
        std::array<uint8_t, 64> out;
        crypto_generichash_final(&st_, out.data(), 64);
        return out;
    }

  private:
    crypto_generichash_state st_;
    size_t out_len_;
};

inline Digest hash_bytes(const char* domain_tag, const Bytes& b) {
    return Hasher(domain_tag).update(b).digest();
}

}  // namespace zef
