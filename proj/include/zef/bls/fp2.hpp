#pragma once

// Fp2 = Fp[u] / (u^2 + 1)

#include "fp.hpp"

namespace zef::bls {

struct Fp2 {
    Fp c0, c1;

    static Fp2 zero() { return {}; }
    static Fp2 one() { return {Fp::one(), Fp::zero()}; }
    static Fp2 from_int(u64 a, u64 b) { return {Fp::from_int(a), Fp::from_int(b)}; }

    bool is_zero() const { return c0.is_zero() && c1.is_zero(); }
    bool operator==(const Fp2& o) const { return c0 == o.c0 && c1 == o.c1; }
    bool operator!=(const Fp2& o) const { return !(*this == o); }

    Fp2 operator+(const Fp2& o) const { return {c0 + o.c0, c1 + o.c1}; }
    Fp2 operator-(const Fp2& o) const { return {c0 - o.c0, c1 - o.c1}; }
    Fp2 neg() const { return {c0.neg(), c1.neg()}; }
    Fp2 dbl() const { return *this + *this; }

    Fp2 operator*(const Fp2& o) const {
        Fp v0 = c0 * o.c0;
        Fp v1 = c1 * o.c1;
        Fp s = (c0 + c1) * (o.c0 + o.c1);
        return {v0 - v1, s - v0 - v1};
    }

    Fp2 square() const {
        Fp a = c0 + c1;
        Fp b = c0 - c1;
        Fp c = c0 + c0;
        return {a * b, c * c1};
    }

    Fp2 scale(const Fp& k) const { return {c0 * k, c1 * k}; }

    Fp2 conjugate() const { return {c0, c1.neg()}; }

    // (1 + u) * this, the sextic nonresidue of the tower.
    Fp2 mul_by_xi() const { return {c0 - c1, c0 + c1}; }

    Fp2 inverse() const {
        Fp t = (c0.square() + c1.square()).inverse();
        return {c0 * t, (c1 * t).neg()};
    }

    static Fp2 pow(const Fp2& base, const u64* e, int n_limbs) {
        Fp2 acc = one();
        bool started = false;
        for (int i = n_limbs - 1; i >= 0; i--) {
            for (int b = 63; b >= 0; b--) {
                if (started) acc = acc.square();
                if ((e[i] >> b) & 1) {
                    acc = acc * base;
                    started = true;
                }
            }
        }
        return started ? acc : one();
    }

    // sqrt for p = 3 (mod 4) (Adj, Rodriguez-Henriquez). Returns nullopt for
    // non-squares.
    std::optional<Fp2> sqrt() const {
        if (is_zero()) return zero();
        // e1 = (p-3)/4, e2 = (p-1)/2
        auto p = Fp::MOD;
        std::array<u64, 6> e1{}, e2{};
        {
            std::array<u64, 6> t = p;
            t[0] -= 3;
            for (int i = 0; i < 6; i++) {
                u64 next = (i + 1 < 6) ? t[i + 1] : 0;
                e1[i] = (t[i] >> 2) | (next << 62);
            }
            t = p;
            t[0] -= 1;
            for (int i = 0; i < 6; i++) {
                u64 next = (i + 1 < 6) ? t[i + 1] : 0;
                e2[i] = (t[i] >> 1) | (next << 63);
            }
        }
        Fp2 a1 = pow(*this, e1.data(), 6);
        Fp2 alpha = a1.square() * (*this);
        Fp2 x0 = a1 * (*this);
        Fp2 minus_one = one().neg();
        Fp2 cand;
        if (alpha == minus_one) {
            // multiply by u
            cand = Fp2{x0.c1.neg(), x0.c0};
        } else {
            Fp2 b = pow(one() + alpha, e2.data(), 6);
            cand = b * x0;
        }
        if (cand.square() == *this) return cand;
        return std::nullopt;
    }

    // Lexicographic order on (c1, c0) as integers, used for the compressed
    // sign bit.
    bool is_lex_largest() const {
        auto n = neg();
        auto a1 = c1.canonical(), b1 = n.c1.canonical();
        int c = detail::cmp<6>(a1, b1);
        if (c != 0) return c > 0;
        auto a0 = c0.canonical(), b0 = n.c0.canonical();
        return detail::cmp<6>(a0, b0) > 0;
    }
};

}  // namespace zef::bls
