#pragma once

// Optimal ate pairing. The Miller loop keeps the running G2 point in Jacobian
// coordinates over Fp2 and folds each line into the accumulator with a sparse
// multiplication; lines are scaled by subfield factors, which the final
// exponentiation kills. The hard part raises to 3*(p^4 - p^2 + 1)/r through
// the factored form (x-1)^2 (x+p) (x^2+p^2-1) + 3; the factorization is
// checked against an exact bignum division at startup, so no transcribed
// exponent is trusted.

#include "fp12.hpp"
#include "curve.hpp"

namespace zef::bls {

inline constexpr u64 kBlsParamAbs = 0xd201000000010000ULL;  // |x|, x < 0

namespace detail {

using Big = std::vector<u64>;

inline Big big_mul(const Big& a, const Big& b) {
    Big r(a.size() + b.size(), 0);
    for (size_t i = 0; i < a.size(); i++) {
        u128 carry = 0;
        for (size_t j = 0; j < b.size(); j++) {
            u128 cur = u128(a[i]) * b[j] + r[i + j] + u64(carry);
            r[i + j] = u64(cur);
            carry = cur >> 64;
        }
        r[i + b.size()] += u64(carry);
    }
    while (r.size() > 1 && r.back() == 0) r.pop_back();
    return r;
}

// a - b, requires a >= b
inline Big big_sub(Big a, const Big& b) {
    u64 borrow = 0;
    for (size_t i = 0; i < a.size(); i++) {
        u64 sub = (i < b.size()) ? b[i] : 0;
        u64 t = a[i] - sub;
        u64 bw = (a[i] < sub) ? 1 : 0;
        u64 t2 = t - borrow;
        bw += (t < borrow) ? 1 : 0;
        a[i] = t2;
        borrow = bw;
    }
    if (borrow) throw std::logic_error("bignum underflow");
    while (a.size() > 1 && a.back() == 0) a.pop_back();
    return a;
}

inline Big big_add_u64(Big a, u64 v) {
    u128 carry = v;
    for (size_t i = 0; i < a.size() && carry; i++) {
        u128 cur = u128(a[i]) + u64(carry);
        a[i] = u64(cur);
        carry = cur >> 64;
    }
    if (carry) a.push_back(u64(carry));
    return a;
}

inline bool big_eq(const Big& a, const Big& b) {
    size_t n = std::max(a.size(), b.size());
    for (size_t i = 0; i < n; i++) {
        u64 x = (i < a.size()) ? a[i] : 0;
        u64 y = (i < b.size()) ? b[i] : 0;
        if (x != y) return false;
    }
    return true;
}

struct PairCtx {
    Big hard_part;  // (p^4 - p^2 + 1) / r, kept for the factorization check

    PairCtx() {
        Big p(Fp::MOD.begin(), Fp::MOD.end());
        Big p2 = big_mul(p, p);
        Big p4 = big_mul(p2, p2);
        Big e = big_add_u64(big_sub(p4, p2), 1);

        // binary long division by r
        const auto& r_mod = Fr::MOD;
        Big q(e.size(), 0);
        u64 rem[5] = {0, 0, 0, 0, 0};
        auto rem_geq = [&]() {
            if (rem[4]) return true;
            for (int i = 3; i >= 0; i--) {
                if (rem[i] != r_mod[i]) return rem[i] > r_mod[i];
            }
            return true;
        };
        for (int bit = int(e.size()) * 64 - 1; bit >= 0; bit--) {
            rem[4] = (rem[4] << 1) | (rem[3] >> 63);
            for (int i = 3; i > 0; i--) rem[i] = (rem[i] << 1) | (rem[i - 1] >> 63);
            rem[0] = (rem[0] << 1) | ((e[bit / 64] >> (bit % 64)) & 1);
            if (rem_geq()) {
                u64 bw = 0;
                for (int i = 0; i < 4; i++) {
                    u64 t = rem[i] - r_mod[i];
                    u64 b2 = (rem[i] < r_mod[i]) ? 1 : 0;
                    u64 t2 = t - bw;
                    b2 += (t < bw) ? 1 : 0;
                    rem[i] = t2;
                    bw = b2;
                }
                rem[4] -= bw;
                q[bit / 64] |= u64(1) << (bit % 64);
            }
        }
        bool rem_zero = true;
        for (int i = 0; i < 5; i++) rem_zero = rem_zero && rem[i] == 0;
        if (!rem_zero) throw std::logic_error("pairing exponent division not exact");
        while (q.size() > 1 && q.back() == 0) q.pop_back();
        hard_part = std::move(q);

        // (x-1)^2 (x+p) (x^2+p^2-1) + 3 == 3 * hard_part, with x = -|x|
        Big xp1{kBlsParamAbs + 1};  // |x|+1 = 1-x
        Big f1 = big_mul(xp1, xp1);
        Big f2 = big_sub(p, Big{kBlsParamAbs});
        Big f3;
        {
            // x^2 + p^2 - 1
            Big sum = big_mul(Big{kBlsParamAbs}, Big{kBlsParamAbs});
            size_t n = std::max(sum.size(), p2.size()) + 1;
            sum.resize(n, 0);
            u128 carry = 0;
            for (size_t i = 0; i < n; i++) {
                u128 cur = u128(sum[i]) + ((i < p2.size()) ? p2[i] : 0) + u64(carry);
                sum[i] = u64(cur);
                carry = cur >> 64;
            }
            f3 = big_sub(sum, Big{1});
        }
        Big lhs = big_add_u64(big_mul(big_mul(f1, f2), f3), 3);
        Big rhs = big_mul(hard_part, Big{3});
        if (!big_eq(lhs, rhs)) throw std::logic_error("final exponent factorization mismatch");
    }

    static const PairCtx& get() {
        static PairCtx ctx;
        return ctx;
    }
};

// Multiply f by the sparse element A + B (v w) + C (v^2 w).
inline void mul_by_line(Fp12& f, const Fp2& A, const Fp2& B, const Fp2& C) {
    // o0 = (A, 0, 0), o1 = (0, B, C); Karatsuba on the two Fp6 halves
    Fp6 t0 = f.c0.scale(A);
    Fp6 t1{(f.c1.c1 * C + f.c1.c2 * B).mul_by_xi(), f.c1.c0 * B + (f.c1.c2 * C).mul_by_xi(),
           f.c1.c0 * C + f.c1.c1 * B};
    Fp6 sum = f.c0 + f.c1;
    Fp6 cross = sum * Fp6{A, B, C} - t0 - t1;
    f.c0 = t0 + t1.mul_by_v();
    f.c1 = cross;
}

struct Strand {
    Fp2 qx, qy;     // affine Q on the twist
    Point<Fp2> t;   // running point, Jacobian
    Fp xp;          // affine P.x
    Fp2 xi_yp;      // xi * P.y
};

inline void dbl_step(Fp12& f, Strand& s) {
    const Fp2 xx = s.t.X.square();
    const Fp2 yy = s.t.Y.square();
    const Fp2 zz = s.t.Z.square();
    Fp2 xxx = xx * s.t.X;
    Fp2 b = xxx + xxx + xxx - (yy + yy);           // 3X^3 - 2Y^2
    Fp2 zzz = zz * s.t.Z;
    Fp2 yz3 = s.t.Y * zzz;
    Fp2 a = (yz3 + yz3) * s.xi_yp;                 // 2YZ^3 * xi * yP
    Fp2 xxzz = xx * zz;
    Fp2 c = (xxzz + xxzz + xxzz).scale(s.xp).neg();  // -3X^2Z^2 * xP
    mul_by_line(f, a, b, c);
    s.t = s.t.dbl();
}

inline void add_step(Fp12& f, Strand& s) {
    const Fp2 zz = s.t.Z.square();
    const Fp2 zzz = zz * s.t.Z;
    Fp2 theta = s.t.Y - s.qy * zzz;                // Y - yQ Z^3
    Fp2 lam = s.t.X - s.qx * zz;                   // X - xQ Z^2
    Fp2 lz = lam * s.t.Z;
    Fp2 a = lz * s.xi_yp;
    Fp2 b = theta * s.qx - s.qy * lz;
    Fp2 c = theta.scale(s.xp).neg();
    mul_by_line(f, a, b, c);
    s.t = s.t + Point<Fp2>::from_affine(s.qx, s.qy);
}

// f^x for the (negative) curve parameter.
inline Fp12 exp_by_param(const Fp12& f) {
    Fp12 r = f;
    for (int i = 62; i >= 0; i--) {
        r = r.square();
        if ((kBlsParamAbs >> i) & 1) r = r * f;
    }
    return r.conjugate();
}

}  // namespace detail

// Product of pairings: prod_i e(p_i, q_i). Infinity entries contribute 1.
inline Fp12 multi_pairing(const std::vector<std::pair<G1, G2>>& pairs) {
    detail::PairCtx::get();  // validate exponent identities once

    std::vector<detail::Strand> ss;
    for (const auto& [p, q] : pairs) {
        if (p.is_infinity() || q.is_infinity()) continue;
        auto [px, py] = p.to_affine();
        auto [qx, qy] = q.to_affine();
        detail::Strand s;
        s.qx = qx;
        s.qy = qy;
        s.t = Point<Fp2>::from_affine(qx, qy);
        s.xp = px;
        s.xi_yp = Fp2{py, py};  // xi = 1 + u
        ss.push_back(s);
    }
    if (ss.empty()) return Fp12::one();

    Fp12 f = Fp12::one();
    for (int i = 62; i >= 0; i--) {
        f = f.square();
        for (auto& s : ss) detail::dbl_step(f, s);
        if ((kBlsParamAbs >> i) & 1) {
            for (auto& s : ss) detail::add_step(f, s);
        }
    }
    f = f.conjugate();  // parameter is negative

    // easy part: f^((p^6 - 1)(p^2 + 1))
    Fp12 m = f.conjugate() * f.inverse();
    m = m.frobenius_sq() * m;

    // hard part, exponent 3*(p^4 - p^2 + 1)/r = (x-1)^2 (x+p) (x^2+p^2-1) + 3.
    // In the cyclotomic subgroup conjugation inverts, so x-1 costs one
    // parameter exponentiation and one multiplication.
    Fp12 f1 = detail::exp_by_param(m) * m.conjugate();     // m^(x-1)
    Fp12 f2 = detail::exp_by_param(f1) * f1.conjugate();   // m^((x-1)^2)
    Fp12 f3 = detail::exp_by_param(f2) * f2.frobenius();   // m^((x-1)^2 (x+p))
    Fp12 f4 = detail::exp_by_param(detail::exp_by_param(f3)) * f3.frobenius_sq() *
              f3.conjugate();                              // m^(... (x^2+p^2-1))
    return f4 * m.square() * m;
}

inline Fp12 pairing(const G1& p, const G2& q) { return multi_pairing({{p, q}}); }

inline Fp12 gt_pow(const Fp12& a, const Fr& k) {
    auto e = k.canonical();
    return Fp12::pow(a, e.data(), 4);
}

}  // namespace zef::bls
