#pragma once

// All protocol randomness flows through Rng so the simulator and the key
// tools can be replayed byte-for-byte from a seed. ChaCha20 keystream with a
// 64-bit block counter; system entropy only at explicit request.

#include <sodium.h>

#include <cstring>

#include "hash.hpp"

namespace zef {

class Rng {
  public:
    explicit Rng(uint64_t seed) {
        ensure_sodium();
        Digest d = Hasher(domain::rng).update_u64(seed).digest();
        std::memcpy(key_, d.v.data(), 32);
    }
    explicit Rng(const std::array<uint8_t, 32>& key) {
        ensure_sodium();
        std::memcpy(key_, key.data(), 32);
    }

    static Rng from_system_entropy() {
        ensure_sodium();
        std::array<uint8_t, 32> k;
        randombytes_buf(k.data(), k.size());
        return Rng(k);
    }

    void fill(uint8_t* p, size_t n) {
        while (n > 0) {
            if (off_ == sizeof(buf_)) refill();
            size_t take = std::min(n, sizeof(buf_) - off_);
            std::memcpy(p, buf_ + off_, take);
            off_ += take;
            p += take;
            n -= take;
        }
    }
    Bytes bytes(size_t n) {
        Bytes b(n);
        fill(b.data(), n);
        return b;
    }

    uint64_t u64() {
        uint8_t b[8];
        fill(b, 8);
        uint64_t v = 0;
        for (int i = 0; i < 8; i++) v |= uint64_t(b[i]) << (8 * i);
        return v;
    }

    // Uniform in [0, bound), bound > 0. Rejection sampling, no modulo bias.
    uint64_t below(uint64_t bound) {
        uint64_t zone = ~uint64_t(0) - (~uint64_t(0) % bound);
        for (;;) {
            uint64_t v = u64();
            if (v < zone || zone == 0) return v % bound;
        }
    }

    uint64_t range(uint64_t lo, uint64_t hi_incl) { return lo + below(hi_incl - lo + 1); }

    double unit() {  // [0,1)
        return double(u64() >> 11) * (1.0 / 9007199254740992.0);
    }
    bool chance(double p) { return unit() < p; }

    // Child stream, independent of future draws from this one.
    Rng fork(uint64_t label) {
        std::array<uint8_t, 32> k;
        Bytes salt = bytes(16);
        Digest d = Hasher(domain::rng).update(salt).update_u64(label).digest();
        std::memcpy(k.data(), d.v.data(), 32);
        return Rng(k);
    }

  private:
    void refill() {
        uint8_t nonce[8];
        for (int i = 0; i < 8; i++) nonce[i] = uint8_t(block_ >> (8 * i));
        std::memset(buf_, 0, sizeof(buf_));
        crypto_stream_chacha20_xor(buf_, buf_, sizeof(buf_), nonce, key_);
        block_++;
        off_ = 0;
    }

    uint8_t key_[32];
    uint8_t buf_[512];
    size_t off_ = sizeof(buf_);
    uint64_t block_ = 0;
};

}  // namespace zef
