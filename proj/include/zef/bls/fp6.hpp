#pragma once

// Fp6 = Fp2[v] / (v^3 - xi), xi = 1 + u

#include "fp2.hpp"

namespace zef::bls {

struct Fp6 {
    Fp2 c0, c1, c2;

    static Fp6 zero() { return {}; }
    static Fp6 one() { return {Fp2::one(), Fp2::zero(), Fp2::zero()}; }

    bool is_zero() const { return c0.is_zero() && c1.is_zero() && c2.is_zero(); }
    bool operator==(const Fp6& o) const { return c0 == o.c0 && c1 == o.c1 && c2 == o.c2; }
    bool operator!=(const Fp6& o) const { return !(*this == o); }

    Fp6 operator+(const Fp6& o) const { return {c0 + o.c0, c1 + o.c1, c2 + o.c2}; }
    Fp6 operator-(const Fp6& o) const { return {c0 - o.c0, c1 - o.c1, c2 - o.c2}; }
    Fp6 neg() const { return {c0.neg(), c1.neg(), c2.neg()}; }

    Fp6 operator*(const Fp6& o) const {
        // Toom-style interpolation (6 Fp2 multiplications).
        Fp2 v0 = c0 * o.c0;
        Fp2 v1 = c1 * o.c1;
        Fp2 v2 = c2 * o.c2;
        Fp2 t0 = ((c1 + c2) * (o.c1 + o.c2) - v1 - v2).mul_by_xi() + v0;
        Fp2 t1 = (c0 + c1) * (o.c0 + o.c1) - v0 - v1 + v2.mul_by_xi();
        Fp2 t2 = (c0 + c2) * (o.c0 + o.c2) - v0 - v2 + v1;
        return {t0, t1, t2};
    }

    Fp6 square() const { return *this * *this; }

    Fp6 scale(const Fp2& k) const { return {c0 * k, c1 * k, c2 * k}; }

    // v * this
    Fp6 mul_by_v() const { return {c2.mul_by_xi(), c0, c1}; }

    Fp6 inverse() const {
        Fp2 a = c0.square() - (c1 * c2).mul_by_xi();
        Fp2 b = c2.square().mul_by_xi() - c0 * c1;
        Fp2 c = c1.square() - c0 * c2;
        Fp2 t = ((c2 * b + c1 * c).mul_by_xi() + c0 * a).inverse();
        return {a * t, b * t, c * t};
    }
};

}  // namespace zef::bls
