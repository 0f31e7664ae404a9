#pragma once

// G1 (over Fp) and G2 (over Fp2) in Jacobian coordinates, with zcash-style
// compressed serialization, windowed scalar multiplication, Straus multi-scalar
// multiplication, and try-and-increment hashing to G1.

#include "../hash.hpp"
#include "fp2.hpp"

namespace zef::bls {

template <typename F>
struct CurveTraits;

template <typename F>
struct Point {
    F X = F::zero(), Y = F::zero(), Z = F::zero();  // Z = 0 encodes infinity

    static Point infinity() { return {}; }
    bool is_infinity() const { return Z.is_zero(); }

    static Point from_affine(const F& x, const F& y) { return {x, y, F::one()}; }

    bool on_curve() const {
        if (is_infinity()) return true;
        // Y^2 = X^3 + b Z^6
        F z2 = Z.square();
        F z6 = z2.square() * z2;
        return Y.square() == X.square() * X + z6 * CurveTraits<F>::b();
    }

    std::pair<F, F> to_affine() const {
        F zi = Z.inverse();
        F zi2 = zi.square();
        return {X * zi2, Y * zi2 * zi};
    }

    Point dbl() const {
        if (is_infinity()) return *this;
        F A = X.square();
        F B = Y.square();
        F C = B.square();
        F t = X + B;
        F D = (t.square() - A - C).dbl();
        F E = A + A + A;
        F Fv = E.square();
        F X3 = Fv - D - D;
        F c8 = C.dbl().dbl().dbl();
        F Y3 = E * (D - X3) - c8;
        F Z3 = (Y * Z).dbl();
        return {X3, Y3, Z3};
    }

    Point operator+(const Point& o) const {
        if (is_infinity()) return o;
        if (o.is_infinity()) return *this;
        F Z1Z1 = Z.square();
        F Z2Z2 = o.Z.square();
        F U1 = X * Z2Z2;
        F U2 = o.X * Z1Z1;
        F S1 = Y * o.Z * Z2Z2;
        F S2 = o.Y * Z * Z1Z1;
        if (U1 == U2) {
            if (S1 == S2) return dbl();
            return infinity();
        }
        F H = U2 - U1;
        F I = H.dbl().square();
        F J = H * I;
        F r = (S2 - S1).dbl();
        F V = U1 * I;
        F X3 = r.square() - J - V - V;
        F Y3 = r * (V - X3) - (S1 * J).dbl();
        F Z3 = ((Z + o.Z).square() - Z1Z1 - Z2Z2) * H;
        return {X3, Y3, Z3};
    }

    Point neg() const { return {X, Y.neg(), Z}; }
    Point operator-(const Point& o) const { return *this + o.neg(); }

    bool operator==(const Point& o) const {
        if (is_infinity() || o.is_infinity()) return is_infinity() == o.is_infinity();
        F Z1Z1 = Z.square();
        F Z2Z2 = o.Z.square();
        if (X * Z2Z2 != o.X * Z1Z1) return false;
        return Y * o.Z * Z2Z2 == o.Y * Z * Z1Z1;
    }
    bool operator!=(const Point& o) const { return !(*this == o); }

    // 4-bit windowed multiplication by an arbitrary-width exponent.
    static Point mul_limbs(const Point& base, const u64* e, int n_limbs) {
        Point tbl[16];
        tbl[0] = infinity();
        tbl[1] = base;
        for (int i = 2; i < 16; i++) tbl[i] = tbl[i - 1] + base;
        Point acc = infinity();
        bool started = false;
        for (int wnd = n_limbs * 16 - 1; wnd >= 0; wnd--) {
            if (started)
                for (int s = 0; s < 4; s++) acc = acc.dbl();
            unsigned d = unsigned((e[wnd / 16] >> (4 * (wnd % 16))) & 0xf);
            if (d) {
                acc = acc + tbl[d];
                started = true;
            }
        }
        return acc;
    }

    Point mul(const Fr& k) const {
        auto e = k.canonical();
        return mul_limbs(*this, e.data(), 4);
    }

    // Straus interleaved multi-scalar multiplication, window 4.
    static Point msm(const std::vector<Point>& bases, const std::vector<Fr>& scalars) {
        size_t n = bases.size();
        if (n == 0) return infinity();
        if (n == 1) return bases[0].mul(scalars[0]);
        std::vector<std::array<Point, 16>> tbl(n);
        for (size_t i = 0; i < n; i++) {
            tbl[i][0] = infinity();
            tbl[i][1] = bases[i];
            for (int j = 2; j < 16; j++) tbl[i][j] = tbl[i][j - 1] + bases[i];
        }
        std::vector<std::array<u64, 4>> es(n);
        for (size_t i = 0; i < n; i++) es[i] = scalars[i].canonical();
        Point acc = infinity();
        bool started = false;
        for (int wnd = 63; wnd >= 0; wnd--) {
            if (started)
                for (int s = 0; s < 4; s++) acc = acc.dbl();
            for (size_t i = 0; i < n; i++) {
                unsigned d = unsigned((es[i][wnd / 16] >> (4 * (wnd % 16))) & 0xf);
                if (d) {
                    acc = acc + tbl[i][d];
                    started = true;
                }
            }
        }
        return acc;
    }
};

template <>
struct CurveTraits<Fp> {
    static Fp b() { return Fp::from_int(4); }
};
template <>
struct CurveTraits<Fp2> {
    static Fp2 b() { return Fp2::from_int(4, 4); }  // 4(1+u)
};

using G1 = Point<Fp>;
using G2 = Point<Fp2>;

// ---- generators (standard, checked against known encodings in tests) ----

inline const G1& g1_generator() {
    static const G1 g = [] {
        // x, y from the ubiquitous base point
        const char* xs =
            "17f1d3a73197d7942695638c4fa9ac0fc3688c4f9774b905a14e3a3f171bac586c55e83ff97a1aeffb3af"
            "00adb22c6bb";
        const char* ys =
            "08b3f481e3aaa0f1a09e30ed741d8ae4fcf5e095d5d00af600db18cb2c04b3edd03cc744a2888ae40caa2"
            "32946c5e7e1";
        Bytes xb = from_hex(xs), yb = from_hex(ys);
        auto x = Fp::from_be_bytes(xb.data());
        auto y = Fp::from_be_bytes(yb.data());
        G1 g = G1::from_affine(*x, *y);
        return g;
    }();
    return g;
}

inline const G2& g2_generator() {
    static const G2 g = [] {
        const char* x0 =
            "024aa2b2f08f0a91260805272dc51051c6e47ad4fa403b02b4510b647ae3d1770bac0326a805bbefd4805"
            "6c8c121bdb8";
        const char* x1 =
            "13e02b6052719f607dacd3a088274f65596bd0d09920b61ab5da61bbdc7f5049334cf11213945d57e5ac"
            "7d055d042b7e";
        const char* y0 =
            "0ce5d527727d6e118cc9cdc6da2e351aadfd9baa8cbdd3a76d429a695160d12c923ac9cc3baca289e1935"
            "48608b82801";
        const char* y1 =
            "0606c4a02ea734cc32acd2b02bc28b99cb3e287e85a763af267492ab572e99ab3f370d275cec1da1aaa90"
            "75ff05f79be";
        auto f = [](const char* h) {
            Bytes b = from_hex(h);
            return *Fp::from_be_bytes(b.data());
        };
        Fp2 x{f(x0), f(x1)};
        Fp2 y{f(y0), f(y1)};
        return G2::from_affine(x, y);
    }();
    return g;
}

// ---- serialization (zcash flags: bit7 compressed, bit6 infinity, bit5 sign) ----

inline void g1_serialize(const G1& p, uint8_t out[48]) {
    if (p.is_infinity()) {
        std::memset(out, 0, 48);
        out[0] = 0xc0;
        return;
    }
    auto [x, y] = p.to_affine();
    x.to_be_bytes(out);
    out[0] |= 0x80;
    if (y.is_lex_largest()) out[0] |= 0x20;
}

inline std::optional<G1> g1_deserialize_unchecked(const uint8_t in[48]) {
    uint8_t flags = in[0] & 0xe0;
    if (!(flags & 0x80)) return std::nullopt;
    if (flags & 0x40) {
        for (int i = 1; i < 48; i++)
            if (in[i]) return std::nullopt;
        if ((in[0] & 0x1f) || (flags & 0x20)) return std::nullopt;
        return G1::infinity();
    }
    uint8_t buf[48];
    std::memcpy(buf, in, 48);
    buf[0] &= 0x1f;
    auto x = Fp::from_be_bytes(buf);
    if (!x) return std::nullopt;
    auto y2 = x->square() * (*x) + CurveTraits<Fp>::b();
    auto y = y2.sqrt();
    if (!y) return std::nullopt;
    bool want_large = (flags & 0x20) != 0;
    Fp yy = (y->is_lex_largest() == want_large) ? *y : y->neg();
    return G1::from_affine(*x, yy);
}

inline void g2_serialize(const G2& p, uint8_t out[96]) {
    if (p.is_infinity()) {
        std::memset(out, 0, 96);
        out[0] = 0xc0;
        return;
    }
    auto [x, y] = p.to_affine();
    x.c1.to_be_bytes(out);
    x.c0.to_be_bytes(out + 48);
    out[0] |= 0x80;
    if (y.is_lex_largest()) out[0] |= 0x20;
}

inline std::optional<G2> g2_deserialize_unchecked(const uint8_t in[96]) {
    uint8_t flags = in[0] & 0xe0;
    if (!(flags & 0x80)) return std::nullopt;
    if (flags & 0x40) {
        for (int i = 1; i < 96; i++)
            if (in[i]) return std::nullopt;
        if ((in[0] & 0x1f) || (flags & 0x20)) return std::nullopt;
        return G2::infinity();
    }
    uint8_t buf[96];
    std::memcpy(buf, in, 96);
    buf[0] &= 0x1f;
    auto x1 = Fp::from_be_bytes(buf);
    auto x0 = Fp::from_be_bytes(buf + 48);
    if (!x0 || !x1) return std::nullopt;
    Fp2 x{*x0, *x1};
    auto y2 = x.square() * x + CurveTraits<Fp2>::b();
    auto y = y2.sqrt();
    if (!y) return std::nullopt;
    bool want_large = (flags & 0x20) != 0;
    Fp2 yy = (y->is_lex_largest() == want_large) ? *y : y->neg();
    return G2::from_affine(x, yy);
}

// Subgroup checks by multiplication with the group order. Slow path, used
// only when parsing externally supplied points.
inline bool in_g1_subgroup(const G1& p) {
    return p.on_curve() && G1::mul_limbs(p, Fr::MOD.data(), 4).is_infinity();
}
inline bool in_g2_subgroup(const G2& p) {
    return p.on_curve() && G2::mul_limbs(p, Fr::MOD.data(), 4).is_infinity();
}

inline std::optional<G1> g1_deserialize(const uint8_t in[48]) {
    auto p = g1_deserialize_unchecked(in);
    if (!p || !in_g1_subgroup(*p)) return std::nullopt;
    return p;
}
inline std::optional<G2> g2_deserialize(const uint8_t in[96]) {
    auto p = g2_deserialize_unchecked(in);
    if (!p || !in_g2_subgroup(*p)) return std::nullopt;
    return p;
}

inline Bytes g1_bytes(const G1& p) {
    Bytes b(48);
    g1_serialize(p, b.data());
    return b;
}
inline Bytes g2_bytes(const G2& p) {
    Bytes b(96);
    g2_serialize(p, b.data());
    return b;
}

// ---- hashing to G1 ----

// Try-and-increment with cofactor clearing; deterministic in (domain, msg).
inline G1 hash_to_g1(const std::string& domain_tag, const Bytes& msg) {
    // cofactor (x-1)^2 / 3
    static const std::array<u64, 2> kCofactor = {0x8c00aaab0000aaabULL, 0x396c8c005555e156ULL};
    for (uint64_t ctr = 0;; ctr++) {
        Hasher h(domain::params, 64);
        h.update_str(domain_tag).update_u64(ctr).update(msg);
        auto wide = h.digest_wide();
        Fp x = Fp::from_wide_le(wide.data());
        Fp y2 = x.square() * x + CurveTraits<Fp>::b();
        auto y = y2.sqrt();
        if (!y) continue;
        // pick the root by a hash bit so neither root is privileged
        bool want_large = (wide[63] & 1) != 0;
        Fp yy = (y->is_lex_largest() == want_large) ? *y : y->neg();
        G1 p = G1::from_affine(x, yy);
        G1 cleared = G1::mul_limbs(p, kCofactor.data(), 2);
        if (cleared.is_infinity()) continue;
        return cleared;
    }
}

}  // namespace zef::bls
