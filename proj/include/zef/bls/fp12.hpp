#pragma once

// Fp12 = Fp6[w] / (w^2 - v). Frobenius constants are computed once at first
// use by direct exponentiation of xi, not transcribed from tables.

#include "fp6.hpp"

namespace zef::bls {

struct Fp12 {
    Fp6 c0, c1;

    static Fp12 zero() { return {}; }
    static Fp12 one() { return {Fp6::one(), Fp6::zero()}; }
    static Fp12 from_fp2(const Fp2& a) { return {{a, Fp2::zero(), Fp2::zero()}, Fp6::zero()}; }
    static Fp12 from_fp(const Fp& a) { return from_fp2({a, Fp::zero()}); }

    bool is_zero() const { return c0.is_zero() && c1.is_zero(); }
    bool is_one() const { return *this == one(); }
    bool operator==(const Fp12& o) const { return c0 == o.c0 && c1 == o.c1; }
    bool operator!=(const Fp12& o) const { return !(*this == o); }

    Fp12 operator+(const Fp12& o) const { return {c0 + o.c0, c1 + o.c1}; }
    Fp12 operator-(const Fp12& o) const { return {c0 - o.c0, c1 - o.c1}; }
    Fp12 neg() const { return {c0.neg(), c1.neg()}; }
    Fp12 dbl() const { return *this + *this; }

    Fp12 operator*(const Fp12& o) const {
        Fp6 v0 = c0 * o.c0;
        Fp6 v1 = c1 * o.c1;
        Fp6 s = (c0 + c1) * (o.c0 + o.c1);
        return {v0 + v1.mul_by_v(), s - v0 - v1};
    }

    Fp12 square() const {
        // complex squaring
        Fp6 v = c0 * c1;
        Fp6 a = (c0 + c1) * (c0 + c1.mul_by_v());
        return {a - v - v.mul_by_v(), v + v};
    }

    // conjugation over Fp6: the p^6 Frobenius
    Fp12 conjugate() const { return {c0, c1.neg()}; }

    Fp12 inverse() const {
        Fp6 t = (c0.square() - c1.square().mul_by_v()).inverse();
        return {c0 * t, (c1 * t).neg()};
    }

    static Fp12 pow(const Fp12& base, const u64* e, int n_limbs) {
        // 4-bit windowed, MSB first
        Fp12 tbl[16];
        tbl[0] = one();
        tbl[1] = base;
        for (int i = 2; i < 16; i++) tbl[i] = tbl[i - 1] * base;
        int top = n_limbs * 16 - 1;  // 4-bit windows per limb
        while (top > 0) {
            int limb = top / 16, nib = top % 16;
            if ((e[limb] >> (4 * nib)) & 0xf) break;
            top--;
        }
        Fp12 acc = one();
        for (int wnd = top; wnd >= 0; wnd--) {
            for (int s = 0; s < 4; s++) acc = acc.square();
            int limb = wnd / 16, nib = wnd % 16;
            unsigned d = unsigned((e[limb] >> (4 * nib)) & 0xf);
            if (d) acc = acc * tbl[d];
        }
        return acc;
    }

    // Frobenius endomorphism x -> x^p.
    Fp12 frobenius() const;
    Fp12 frobenius_sq() const { return frobenius().frobenius(); }
};

namespace detail {

// xi^((p-1)/6), xi^((p-1)/3): scaling constants for the Frobenius maps.
struct FrobCtx {
    Fp2 g_w;   // xi^((p-1)/6)
    Fp2 g_v1;  // xi^((p-1)/3)
    Fp2 g_v2;  // xi^(2(p-1)/3)

    FrobCtx() {
        auto p = Fp::MOD;
        std::array<u64, 6> pm1 = p;
        pm1[0] -= 1;
        auto div_small = [](std::array<u64, 6> a, u64 d) {
            std::array<u64, 6> q{};
            u128 rem = 0;
            for (int i = 5; i >= 0; i--) {
                u128 cur = (rem << 64) | a[i];
                q[i] = u64(cur / d);
                rem = cur % d;
            }
            return q;
        };
        auto e6 = div_small(pm1, 6);
        auto e3 = div_small(pm1, 3);
        Fp2 xi{Fp::one(), Fp::one()};
        g_w = Fp2::pow(xi, e6.data(), 6);
        g_v1 = Fp2::pow(xi, e3.data(), 6);
        g_v2 = g_v1.square();
    }

    static const FrobCtx& get() {
        static FrobCtx ctx;
        return ctx;
    }
};

}  // namespace detail

inline Fp12 Fp12::frobenius() const {
    const auto& f = detail::FrobCtx::get();
    auto phi6 = [&](const Fp6& a) {
        return Fp6{a.c0.conjugate(), a.c1.conjugate() * f.g_v1, a.c2.conjugate() * f.g_v2};
    };
    Fp6 a = phi6(c0);
    Fp6 b = phi6(c1);
    return {a, b.scale(f.g_w)};
}

}  // namespace zef::bls
