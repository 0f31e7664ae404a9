#pragma once

// Prime fields for BLS12-381 in Montgomery form. Only the moduli are written
// out; R, R^2 and the Montgomery inverse are derived at compile time, and the
// test suite re-derives them with an independent doubling oracle.

#include <array>
#include <cstdint>
#include <optional>

#include "../bytes.hpp"
#include "../rng.hpp"

namespace zef::bls {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

namespace detail {

template <int N>
constexpr int cmp(const std::array<u64, N>& a, const std::array<u64, N>& b) {
    for (int i = N - 1; i >= 0; i--) {
        if (a[i] < b[i]) return -1;
        if (a[i] > b[i]) return 1;
    }
    return 0;
}

template <int N>
constexpr std::array<u64, N> sub_wrap(const std::array<u64, N>& a, const std::array<u64, N>& b,
                                      u64& borrow_out) {
    std::array<u64, N> r{};
    u64 borrow = 0;
    for (int i = 0; i < N; i++) {
        u64 t = a[i] - b[i];
        u64 b2 = (a[i] < b[i]) ? 1 : 0;
        u64 t2 = t - borrow;
        b2 += (t < borrow) ? 1 : 0;
        r[i] = t2;
        borrow = b2;
    }
    borrow_out = borrow;
    return r;
}

template <int N>
constexpr std::array<u64, N> mod_double(const std::array<u64, N>& a,
                                        const std::array<u64, N>& mod) {
    std::array<u64, N> r{};
    u64 carry = 0;
    for (int i = 0; i < N; i++) {
        u64 hi = a[i] >> 63;
        r[i] = (a[i] << 1) | carry;
        carry = hi;
    }
    if (carry || cmp<N>(r, mod) >= 0) {
        u64 borrow;
        r = sub_wrap<N>(r, mod, borrow);
    }
    return r;
}

// 2^(64*N*k) mod `mod`, by repeated doubling from 1.
template <int N>
constexpr std::array<u64, N> pow2_mod(const std::array<u64, N>& mod, int bits) {
    std::array<u64, N> a{};
    a[0] = 1;
    for (int i = 0; i < bits; i++) a = mod_double<N>(a, mod);
    return a;
}

// -mod^{-1} mod 2^64 (Newton iteration, odd modulus).
constexpr u64 mont_inv(u64 m0) {
    u64 x = 1;
    for (int i = 0; i < 6; i++) x *= 2 - m0 * x;
    return ~x + 1;
}

}  // namespace detail

template <typename Spec>
struct Mont {
    static constexpr int N = Spec::N;
    static constexpr std::array<u64, N> MOD = Spec::modulus();
    static constexpr u64 INV = detail::mont_inv(MOD[0]);
    static constexpr std::array<u64, N> R = detail::pow2_mod<N>(MOD, 64 * N);
    static constexpr std::array<u64, N> R2 = detail::pow2_mod<N>(MOD, 128 * N);

    std::array<u64, N> l{};

    constexpr Mont() = default;

    static Mont zero() { return Mont(); }
    static Mont one() {
        Mont r;
        r.l = R;
        return r;
    }

    static Mont from_u64(u64 v) {
        Mont raw;
        raw.l[0] = v;
        return mul(raw, r2());
    }
    // Interprets l (little-endian limbs, any value < 2^(64N)) as an integer.
    static Mont from_limbs(const std::array<u64, N>& limbs) {
        Mont raw;
        raw.l = limbs;
        return mul(raw, r2());
    }

    static Mont r2() {
        Mont r;
        r.l = R2;
        return r;
    }

    bool is_zero() const {
        for (int i = 0; i < N; i++)
            if (l[i]) return false;
        return true;
    }
    bool operator==(const Mont& o) const { return l == o.l; }
    bool operator!=(const Mont& o) const { return !(*this == o); }

    // Canonical integer form (little-endian limbs).
    std::array<u64, N> canonical() const {
        Mont one_raw;
        one_raw.l[0] = 1;
        return mul(*this, one_raw).l;
    }

    static Mont add(const Mont& a, const Mont& b) {
        Mont r;
        u64 carry = 0;
        for (int i = 0; i < N; i++) {
            u128 t = u128(a.l[i]) + b.l[i] + carry;
            r.l[i] = u64(t);
            carry = u64(t >> 64);
        }
        if (carry || detail::cmp<N>(r.l, MOD) >= 0) {
            u64 borrow;
            r.l = detail::sub_wrap<N>(r.l, MOD, borrow);
        }
        return r;
    }

    static Mont sub(const Mont& a, const Mont& b) {
        Mont r;
        u64 borrow;
        r.l = detail::sub_wrap<N>(a.l, b.l, borrow);
        if (borrow) {
            u64 c = 0;
            for (int i = 0; i < N; i++) {
                u128 t = u128(r.l[i]) + MOD[i] + c;
                r.l[i] = u64(t);
                c = u64(t >> 64);
            }
        }
        return r;
    }

    Mont neg() const {
        if (is_zero()) return *this;
        Mont r;
        u64 borrow;
        Mont m;
        m.l = MOD;
        r.l = detail::sub_wrap<N>(m.l, l, borrow);
        return r;
    }

    // CIOS Montgomery multiplication.
    static Mont mul(const Mont& a, const Mont& b) {
        u64 t[N + 2] = {0};
        for (int i = 0; i < N; i++) {
            u128 carry = 0;
            for (int j = 0; j < N; j++) {
                u128 cur = u128(a.l[j]) * b.l[i] + t[j] + u64(carry);
                t[j] = u64(cur);
                carry = cur >> 64;
            }
            u128 tmp = u128(t[N]) + u64(carry);
            t[N] = u64(tmp);
            t[N + 1] = u64(tmp >> 64);

            u64 m = t[0] * INV;
            u128 cur = u128(m) * MOD[0] + t[0];
            carry = cur >> 64;
            for (int j = 1; j < N; j++) {
                cur = u128(m) * MOD[j] + t[j] + u64(carry);
                t[j - 1] = u64(cur);
                carry = cur >> 64;
            }
            tmp = u128(t[N]) + u64(carry);
            t[N - 1] = u64(tmp);
            t[N] = t[N + 1] + u64(tmp >> 64);
            t[N + 1] = 0;
        }
        Mont r;
        for (int i = 0; i < N; i++) r.l[i] = t[i];
        if (t[N] || detail::cmp<N>(r.l, MOD) >= 0) {
            u64 borrow;
            r.l = detail::sub_wrap<N>(r.l, MOD, borrow);
        }
        return r;
    }

    Mont square() const { return mul(*this, *this); }

    Mont operator+(const Mont& o) const { return add(*this, o); }
    Mont operator-(const Mont& o) const { return sub(*this, o); }
    Mont operator*(const Mont& o) const { return mul(*this, o); }

    Mont dbl() const { return add(*this, *this); }

    // MSB-first square-and-multiply with an arbitrary-width exponent.
    static Mont pow(const Mont& base, const u64* e, int n_limbs) {
        Mont acc = one();
        bool started = false;
        for (int i = n_limbs - 1; i >= 0; i--) {
            for (int b = 63; b >= 0; b--) {
                if (started) acc = acc.square();
                if ((e[i] >> b) & 1) {
                    acc = mul(acc, base);
                    started = true;
                }
            }
        }
        return started ? acc : one();
    }

    Mont inverse() const {
        // Fermat: a^(p-2).
        std::array<u64, N> e = MOD;
        e[0] -= 2;  // modulus is odd and > 2, no borrow
        return pow(*this, e.data(), N);
    }
};

// ---- BLS12-381 base field ----
struct FpSpec {
    static constexpr int N = 6;
    static constexpr std::array<u64, 6> modulus() {
        return {0xb9feffffffffaaabULL, 0x1eabfffeb153ffffULL, 0x6730d2a0f6b0f624ULL,
                0x64774b84f38512bfULL, 0x4b1ba7b6434bacd7ULL, 0x1a0111ea397fe69aULL};
    }
};

// ---- BLS12-381 scalar field ----
struct FrSpec {
    static constexpr int N = 4;
    static constexpr std::array<u64, 4> modulus() {
        return {0xffffffff00000001ULL, 0x53bda402fffe5bfeULL, 0x3339d80809a1d805ULL,
                0x73eda753299d7d48ULL};
    }
};

struct Fp : Mont<FpSpec> {
    Fp() = default;
    Fp(const Mont<FpSpec>& m) : Mont<FpSpec>(m) {}

    static Fp from_int(u64 v) { return Fp(Mont<FpSpec>::from_u64(v)); }

    // p = 3 (mod 4): sqrt candidate is a^((p+1)/4).
    std::optional<Fp> sqrt() const {
        std::array<u64, 6> e = MOD;
        // (p+1)/4: p+1 carries cleanly since p[0] ends in ...aaab
        u64 carry = 1;
        for (int i = 0; i < 6 && carry; i++) {
            e[i] += carry;
            carry = (e[i] == 0) ? 1 : 0;
        }
        for (int i = 0; i < 6; i++) {
            u64 next = (i + 1 < 6) ? e[i + 1] : 0;
            e[i] = (e[i] >> 2) | (next << 62);
        }
        Fp cand = Fp(pow(*this, e.data(), 6));
        if (cand.square() == *this) return cand;
        return std::nullopt;
    }

    // True if this > p - this as integers (the "larger" square root).
    bool is_lex_largest() const {
        if (is_zero()) return false;
        auto a = canonical();
        auto b = neg().canonical();
        return detail::cmp<6>(a, b) > 0;
    }

    void to_be_bytes(uint8_t out[48]) const {
        auto c = canonical();
        for (int i = 0; i < 6; i++)
            for (int j = 0; j < 8; j++) out[48 - 8 * i - 1 - j] = uint8_t(c[i] >> (8 * j));
    }
    static std::optional<Fp> from_be_bytes(const uint8_t in[48]) {
        std::array<u64, 6> c{};
        for (int i = 0; i < 6; i++)
            for (int j = 0; j < 8; j++) c[i] |= u64(in[48 - 8 * i - 1 - j]) << (8 * j);
        if (detail::cmp<6>(c, MOD) >= 0) return std::nullopt;
        return Fp(from_limbs(c));
    }

    // Reduce a 64-byte little-endian integer mod p.
    static Fp from_wide_le(const uint8_t in[64]) {
        std::array<u64, 6> lo{};
        std::array<u64, 6> hi{};
        for (int i = 0; i < 48; i++) lo[i / 8] |= u64(in[i]) << (8 * (i % 8));
        for (int i = 48; i < 64; i++) hi[(i - 48) / 8] |= u64(in[i]) << (8 * ((i - 48) % 8));
        Fp f_lo = Fp(from_limbs(lo));
        Fp f_hi = Fp(from_limbs(hi));
        Fp shift = Fp(from_limbs(R));  // 2^384 mod p as an integer
        return Fp(add(f_lo, mul(f_hi, shift)));
    }

    Fp inverse() const { return Fp(Mont<FpSpec>::inverse()); }
    Fp square() const { return Fp(Mont<FpSpec>::square()); }
    Fp neg() const { return Fp(Mont<FpSpec>::neg()); }
    Fp operator+(const Fp& o) const { return Fp(add(*this, o)); }
    Fp operator-(const Fp& o) const { return Fp(sub(*this, o)); }
    Fp operator*(const Fp& o) const { return Fp(mul(*this, o)); }
    static Fp zero() { return Fp(); }
    static Fp one() { return Fp(Mont<FpSpec>::one()); }
};

struct Fr : Mont<FrSpec> {
    Fr() = default;
    Fr(const Mont<FrSpec>& m) : Mont<FrSpec>(m) {}

    static Fr from_int(u64 v) { return Fr(Mont<FrSpec>::from_u64(v)); }

    Fr inverse() const { return Fr(Mont<FrSpec>::inverse()); }
    Fr square() const { return Fr(Mont<FrSpec>::square()); }
    Fr neg() const { return Fr(Mont<FrSpec>::neg()); }
    Fr operator+(const Fr& o) const { return Fr(add(*this, o)); }
    Fr operator-(const Fr& o) const { return Fr(sub(*this, o)); }
    Fr operator*(const Fr& o) const { return Fr(mul(*this, o)); }
    static Fr zero() { return Fr(); }
    static Fr one() { return Fr(Mont<FrSpec>::one()); }

    // Uniform scalar from a 64-byte little-endian integer.
    static Fr from_wide_le(const uint8_t in[64]) {
        std::array<u64, 4> lo{};
        std::array<u64, 4> hi{};
        for (int i = 0; i < 32; i++) lo[i / 8] |= u64(in[i]) << (8 * (i % 8));
        for (int i = 32; i < 64; i++) hi[(i - 32) / 8] |= u64(in[i]) << (8 * ((i - 32) % 8));
        Fr f_lo = Fr(from_limbs(lo));
        Fr f_hi = Fr(from_limbs(hi));
        Fr shift = Fr(from_limbs(R));  // 2^256 mod r
        return Fr(add(f_lo, mul(f_hi, shift)));
    }

    static Fr random(Rng& rng) {
        uint8_t b[64];
        rng.fill(b, 64);
        return from_wide_le(b);
    }

    void to_le_bytes(uint8_t out[32]) const {
        auto c = canonical();
        for (int i = 0; i < 4; i++)
            for (int j = 0; j < 8; j++) out[8 * i + j] = uint8_t(c[i] >> (8 * j));
    }
    static std::optional<Fr> from_le_bytes(const uint8_t in[32]) {
        std::array<u64, 4> c{};
        for (int i = 0; i < 32; i++) c[i / 8] |= u64(in[i]) << (8 * (i % 8));
        if (detail::cmp<4>(c, MOD) >= 0) return std::nullopt;
        return Fr(from_limbs(c));
    }

    void encode(Writer& w) const {
        uint8_t b[32];
        to_le_bytes(b);
        w.raw(b, 32);
    }
    static Fr decode(Reader& r) {
        uint8_t b[32];
        r.raw_into(b, 32);
        auto f = from_le_bytes(b);
        if (!f) throw ParseError("scalar not canonical");
        return *f;
    }

};

inline Fr fr_pow(const Fr& base, const Fr& e_scalar) {
    auto e = e_scalar.canonical();
    return Fr(Mont<FrSpec>::pow(base, e.data(), 4));
}

}  // namespace zef::bls
