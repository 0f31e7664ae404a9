#pragma once

// Threshold blind credentials over BLS12-381: a signer quorum issues blinded
// per-authority shares on committed attributes; any t valid shares aggregate
// into one credential, independent of which t were used. Randomized
// presentation hides which credential is shown.

#include "bls/pairing.hpp"
#include "errors.hpp"
#include "sigma.hpp"

namespace zef::coconut {

using bls::Fr;
using bls::G1;
using bls::G2;

struct Params {
    uint32_t q = 0;      // attribute count
    std::vector<G1> hs;  // attribute generators
    Digest digest;

    static const G1& g1() { return bls::g1_generator(); }
    static const G2& g2() { return bls::g2_generator(); }

    static Params setup(uint32_t q, const std::string& seed) {
        Params p;
        p.q = q;
        for (uint32_t i = 0; i < q; i++) {
            Writer w;
            w.lp_str(seed);
            w.u32(i);
            p.hs.push_back(bls::hash_to_g1("attribute-generator", w.out));
        }
        Writer w;
        p.encode_body(w);
        p.digest = hash_bytes(domain::params, w.out);
        return p;
    }

    void encode_body(Writer& w) const {
        w.u32(q);
        for (const auto& h : hs) w.raw(bls::g1_bytes(h));
    }
    void encode(Writer& w) const { encode_body(w); }
    static Params decode(Reader& r) {
        Params p;
        p.q = r.u32();
        if (p.q > 64) throw ParseError("too many attribute generators");
        for (uint32_t i = 0; i < p.q; i++) {
            uint8_t buf[48];
            r.raw_into(buf, 48);
            auto pt = bls::g1_deserialize(buf);
            if (!pt) throw ParseError("bad attribute generator");
            p.hs.push_back(*pt);
        }
        Writer w;
        p.encode_body(w);
        p.digest = hash_bytes(domain::params, w.out);
        return p;
    }
};

struct SecretShare {
    uint32_t index = 0;  // polynomial evaluation point, 1-based
    Fr x;
    std::vector<Fr> y;

    void encode(Writer& w) const {
        w.u32(index);
        x.encode(w);
        w.u32(uint32_t(y.size()));
        for (const auto& yi : y) yi.encode(w);
    }
    static SecretShare decode(Reader& r) {
        SecretShare s;
        s.index = r.u32();
        s.x = Fr::decode(r);
        uint32_t n = r.u32();
        if (n > 64) throw ParseError("bad share width");
        for (uint32_t i = 0; i < n; i++) s.y.push_back(Fr::decode(r));
        return s;
    }
};

struct VerKey {
    uint32_t index = 0;  // 0 for the aggregate key
    G2 alpha;
    std::vector<G2> beta;
    std::vector<G1> gamma;

    Digest digest() const {
        Writer w;
        encode(w);
        return hash_bytes(domain::params, w.out);
    }

    void encode(Writer& w) const {
        w.u32(index);
        w.raw(bls::g2_bytes(alpha));
        w.u32(uint32_t(beta.size()));
        for (const auto& b : beta) w.raw(bls::g2_bytes(b));
        for (const auto& g : gamma) w.raw(bls::g1_bytes(g));
    }
    static VerKey decode(Reader& r) {
        VerKey k;
        k.index = r.u32();
        uint8_t b2[96], b1[48];
        r.raw_into(b2, 96);
        auto a = bls::g2_deserialize(b2);
        if (!a) throw ParseError("bad alpha");
        k.alpha = *a;
        uint32_t n = r.u32();
        if (n > 64) throw ParseError("bad key width");
        for (uint32_t i = 0; i < n; i++) {
            r.raw_into(b2, 96);
            auto b = bls::g2_deserialize(b2);
            if (!b) throw ParseError("bad beta");
            k.beta.push_back(*b);
        }
        for (uint32_t i = 0; i < n; i++) {
            r.raw_into(b1, 48);
            auto g = bls::g1_deserialize(b1);
            if (!g) throw ParseError("bad gamma");
            k.gamma.push_back(*g);
        }
        return k;
    }
};

struct KeyGenOutput {
    std::vector<SecretShare> shares;
    std::vector<VerKey> share_vks;
    VerKey aggregate_vk;
};

// Trusted-dealer threshold keygen: t-of-n, q attributes.
inline Result<KeyGenOutput> keygen(const Params& params, uint32_t t, uint32_t n, Rng& rng) {
    if (t == 0 || t > n) return Err::InvalidThreshold;
    uint32_t q = params.q;
    // q+1 polynomials of degree t-1
    std::vector<std::vector<Fr>> polys(q + 1);
    for (auto& poly : polys) {
        poly.resize(t);
        for (auto& c : poly) c = Fr::random(rng);
    }
    auto eval = [&](const std::vector<Fr>& poly, uint64_t at) {
        Fr acc = Fr::zero();
        Fr xp = Fr::one();
        Fr a = Fr::from_int(at);
        for (const auto& c : poly) {
            acc = acc + c * xp;
            xp = xp * a;
        }
        return acc;
    };

    KeyGenOutput out;
    for (uint32_t j = 1; j <= n; j++) {
        SecretShare s;
        s.index = j;
        s.x = eval(polys[0], j);
        for (uint32_t i = 0; i < q; i++) s.y.push_back(eval(polys[1 + i], j));
        VerKey vk;
        vk.index = j;
        vk.alpha = Params::g2().mul(s.x);
        for (uint32_t i = 0; i < q; i++) {
            vk.beta.push_back(Params::g2().mul(s.y[i]));
            vk.gamma.push_back(Params::g1().mul(s.y[i]));
        }
        out.shares.push_back(std::move(s));
        out.share_vks.push_back(std::move(vk));
    }
    VerKey agg;
    agg.index = 0;
    agg.alpha = Params::g2().mul(polys[0][0]);
    for (uint32_t i = 0; i < q; i++) {
        agg.beta.push_back(Params::g2().mul(polys[1 + i][0]));
        agg.gamma.push_back(Params::g1().mul(polys[1 + i][0]));
    }
    out.aggregate_vk = std::move(agg);
    return out;
}

struct Credential {
    G1 h, s;

    bool operator==(const Credential&) const = default;

    void encode(Writer& w) const {
        w.raw(bls::g1_bytes(h));
        w.raw(bls::g1_bytes(s));
    }
    static Credential decode(Reader& r) {
        uint8_t buf[48];
        Credential c;
        r.raw_into(buf, 48);
        auto h = bls::g1_deserialize(buf);
        if (!h) throw ParseError("bad credential h");
        c.h = *h;
        r.raw_into(buf, 48);
        auto s = bls::g1_deserialize(buf);
        if (!s) throw ParseError("bad credential s");
        c.s = *s;
        return c;
    }
};

struct BlindFactors {
    Fr o;                // commitment randomness
    std::vector<Fr> rs;  // one per attribute
};

struct BlindSignRequest {
    G1 cm;
    std::vector<G1> cs;
    SigmaProof pi;

    void encode(Writer& w) const {
        w.raw(bls::g1_bytes(cm));
        w.u32(uint32_t(cs.size()));
        for (const auto& c : cs) w.raw(bls::g1_bytes(c));
        pi.encode(w);
    }
    static BlindSignRequest decode(Reader& r) {
        BlindSignRequest b;
        uint8_t buf[48];
        r.raw_into(buf, 48);
        auto cm = bls::g1_deserialize(buf);
        if (!cm) throw ParseError("bad cm");
        b.cm = *cm;
        uint32_t n = r.u32();
        if (n > 64) throw ParseError("bad attribute count");
        for (uint32_t i = 0; i < n; i++) {
            r.raw_into(buf, 48);
            auto c = bls::g1_deserialize(buf);
            if (!c) throw ParseError("bad attribute commitment");
            b.cs.push_back(*c);
        }
        b.pi = SigmaProof::decode(r);
        return b;
    }
};

namespace detail {

// Shared shape of the blind-sign relation:
//   cm = g1^o * prod hs[i]^{m_i},  cs[i] = h^{m_i} * g1^{r_i}
inline SigmaSystem blind_sign_system(const Params& params, const G1& h, const G1& cm,
                                     const std::vector<G1>& cs) {
    SigmaSystem sys;
    size_t w_o = sys.fresh();
    std::vector<size_t> w_m, w_r;
    for (uint32_t i = 0; i < params.q; i++) w_m.push_back(sys.fresh());
    for (uint32_t i = 0; i < params.q; i++) w_r.push_back(sys.fresh());

    SigmaSystem::Eq1 e_cm;
    e_cm.target = cm;
    e_cm.terms.push_back({Params::g1(), w_o});
    for (uint32_t i = 0; i < params.q; i++) e_cm.terms.push_back({params.hs[i], w_m[i]});
    sys.g1_eqs.push_back(std::move(e_cm));

    for (uint32_t i = 0; i < params.q; i++) {
        SigmaSystem::Eq1 e;
        e.target = cs[i];
        e.terms.push_back({h, w_m[i]});
        e.terms.push_back({Params::g1(), w_r[i]});
        sys.g1_eqs.push_back(std::move(e));
    }
    return sys;
}

inline Transcript blind_sign_transcript(const Params& params, const std::string& context,
                                        const G1& cm) {
    Transcript tr("blind-sign");
    tr.absorb_digest("params", params.digest);
    tr.absorb("context", Bytes(context.begin(), context.end()));
    tr.absorb_g1("cm", cm);
    return tr;
}

}  // namespace detail

// Commit to attributes and prove the commitments well-formed. `context` binds
// the request to an application-level predicate label.
inline std::pair<BlindFactors, BlindSignRequest> prepare_blind_sign(
    const Params& params, const std::vector<Fr>& attrs, const std::string& context, Rng& rng) {
    BlindFactors f;
    f.o = Fr::random(rng);
    BlindSignRequest req;
    {
        std::vector<G1> bases{Params::g1()};
        std::vector<Fr> scalars{f.o};
        for (uint32_t i = 0; i < params.q; i++) {
            bases.push_back(params.hs[i]);
            scalars.push_back(attrs[i]);
        }
        req.cm = G1::msm(bases, scalars);
    }
    G1 h = bls::hash_to_g1("blind-sign-base", bls::g1_bytes(req.cm));
    for (uint32_t i = 0; i < params.q; i++) {
        f.rs.push_back(Fr::random(rng));
        req.cs.push_back(G1::msm({h, Params::g1()}, {attrs[i], f.rs[i]}));
    }

    SigmaSystem sys = detail::blind_sign_system(params, h, req.cm, req.cs);
    std::vector<Fr> witness{f.o};
    for (uint32_t i = 0; i < params.q; i++) witness.push_back(attrs[i]);
    for (uint32_t i = 0; i < params.q; i++) witness.push_back(f.rs[i]);

    Transcript tr = detail::blind_sign_transcript(params, context, req.cm);
    req.pi = sigma_prove(sys, witness, tr, rng);
    return {std::move(f), std::move(req)};
}

struct BlindedShare {
    G1 s_tilde;

    void encode(Writer& w) const { w.raw(bls::g1_bytes(s_tilde)); }
    static BlindedShare decode(Reader& r) {
        uint8_t buf[48];
        r.raw_into(buf, 48);
        auto p = bls::g1_deserialize(buf);
        if (!p) throw ParseError("bad blinded share");
        return {*p};
    }
};

// Authority side: check the proof, then sign the commitments.
inline Result<BlindedShare> blind_sign(const Params& params, const SecretShare& sk,
                                       const BlindSignRequest& req, const std::string& context) {
    if (req.cs.size() != params.q) return Err::InvalidProof;
    G1 h = bls::hash_to_g1("blind-sign-base", bls::g1_bytes(req.cm));
    SigmaSystem sys = detail::blind_sign_system(params, h, req.cm, req.cs);
    Transcript tr = detail::blind_sign_transcript(params, context, req.cm);
    if (!sigma_verify(sys, req.pi, tr)) return Err::InvalidProof;

    std::vector<G1> bases{h};
    std::vector<Fr> scalars{sk.x};
    for (uint32_t i = 0; i < params.q; i++) {
        bases.push_back(req.cs[i]);
        scalars.push_back(sk.y[i]);
    }
    return BlindedShare{G1::msm(bases, scalars)};
}

// Strip the blinding with the issuing authority's gamma elements.
inline Credential unblind(const Params& params, const VerKey& share_vk, const G1& h,
                          const BlindedShare& blinded, const BlindFactors& f) {
    G1 s = blinded.s_tilde;
    for (uint32_t i = 0; i < params.q; i++) {
        s = s + share_vk.gamma[i].mul(f.rs[i].neg());
    }
    return {h, s};
}

// Waters-style check of a (share or aggregate) credential on plaintext
// attributes: e(h, alpha * prod beta_i^{m_i}) == e(s, g2).
inline bool plain_verify(const Params& params, const VerKey& vk, const Credential& cred,
                         const std::vector<Fr>& attrs) {
    if (attrs.size() != params.q || vk.beta.size() != params.q) return false;
    if (cred.h.is_infinity()) return false;
    G2 kappa = vk.alpha + G2::msm(vk.beta, attrs);
    return bls::multi_pairing({{cred.h, kappa}, {cred.s.neg(), Params::g2()}}).is_one();
}

// Lagrange coefficients at zero for the 1-based evaluation points in `idx`.
inline std::vector<Fr> lagrange_at_zero(const std::vector<uint32_t>& idx) {
    std::vector<Fr> out;
    out.reserve(idx.size());
    for (size_t j = 0; j < idx.size(); j++) {
        Fr num = Fr::one(), den = Fr::one();
        for (size_t k = 0; k < idx.size(); k++) {
            if (k == j) continue;
            num = num * Fr::from_int(idx[k]);
            Fr d = Fr::from_int(idx[k]) - Fr::from_int(idx[j]);
            den = den * d;
        }
        out.push_back(num * den.inverse());
    }
    return out;
}

// Aggregate exactly t distinct shares; the result does not depend on which
// t-subset was supplied.
inline Result<Credential> agg_cred(const std::vector<std::pair<uint32_t, Credential>>& shares,
                                   uint32_t t) {
    if (shares.size() != t || t == 0) return Err::WrongShareCount;
    std::vector<uint32_t> idx;
    for (const auto& [i, c] : shares) {
        if (i == 0) return Err::DuplicatePoint;
        for (uint32_t seen : idx)
            if (seen == i) return Err::DuplicatePoint;
        idx.push_back(i);
        if (!(c.h == shares[0].second.h)) return Err::InvalidShare;
    }
    std::vector<Fr> ell = lagrange_at_zero(idx);
    std::vector<G1> bases;
    bases.reserve(t);
    for (const auto& [i, c] : shares) bases.push_back(c.s);
    return Credential{shares[0].second.h, G1::msm(bases, ell)};
}

struct Presentation {
    G1 h1, s1;  // randomized credential
    G2 kappa;
    SigmaProof pi;

    void encode(Writer& w) const {
        w.raw(bls::g1_bytes(h1));
        w.raw(bls::g1_bytes(s1));
        w.raw(bls::g2_bytes(kappa));
        pi.encode(w);
    }
    static Presentation decode(Reader& r) {
        Presentation p;
        uint8_t b1[48], b2[96];
        r.raw_into(b1, 48);
        auto h = bls::g1_deserialize(b1);
        if (!h) throw ParseError("bad h'");
        p.h1 = *h;
        r.raw_into(b1, 48);
        auto s = bls::g1_deserialize(b1);
        if (!s) throw ParseError("bad s'");
        p.s1 = *s;
        r.raw_into(b2, 96);
        auto k = bls::g2_deserialize(b2);
        if (!k) throw ParseError("bad kappa");
        p.kappa = *k;
        p.pi = SigmaProof::decode(r);
        return p;
    }
};

namespace detail {

inline SigmaSystem presentation_system(const Params& params, const VerKey& vk, const G2& kappa) {
    SigmaSystem sys;
    size_t w_r = sys.fresh();
    std::vector<size_t> w_m;
    for (uint32_t i = 0; i < params.q; i++) w_m.push_back(sys.fresh());
    SigmaSystem::Eq2 e;
    e.target = kappa - vk.alpha;
    e.terms.push_back({Params::g2(), w_r});
    for (uint32_t i = 0; i < params.q; i++) e.terms.push_back({vk.beta[i], w_m[i]});
    sys.g2_eqs.push_back(std::move(e));
    return sys;
}

inline Transcript presentation_transcript(const Params& params, const VerKey& vk,
                                          const std::string& context, const G1& h1, const G1& s1) {
    Transcript tr("credential-presentation");
    tr.absorb_digest("params", params.digest);
    tr.absorb_digest("vk", vk.digest());
    tr.absorb("context", Bytes(context.begin(), context.end()));
    tr.absorb_g1("h1", h1);
    tr.absorb_g1("s1", s1);
    return tr;
}

}  // namespace detail

// Randomize a credential and prove knowledge of its hidden attributes.
inline Presentation prove_cred(const Params& params, const VerKey& vk, const Credential& cred,
                               const std::vector<Fr>& attrs, const std::string& context,
                               Rng& rng) {
    Fr rp = Fr::random(rng);
    Fr r = Fr::random(rng);
    Presentation p;
    p.h1 = cred.h.mul(rp);
    p.s1 = cred.s.mul(rp) + p.h1.mul(r);
    p.kappa = vk.alpha + Params::g2().mul(r) + G2::msm(vk.beta, attrs);

    SigmaSystem sys = detail::presentation_system(params, vk, p.kappa);
    std::vector<Fr> witness{r};
    for (const auto& m : attrs) witness.push_back(m);
    Transcript tr = detail::presentation_transcript(params, vk, context, p.h1, p.s1);
    p.pi = sigma_prove(sys, witness, tr, rng);
    return p;
}

inline bool verify_cred(const Params& params, const VerKey& vk, const Presentation& p,
                        const std::string& context) {
    if (p.h1.is_infinity()) return false;
    SigmaSystem sys = detail::presentation_system(params, vk, p.kappa);
    Transcript tr = detail::presentation_transcript(params, vk, context, p.h1, p.s1);
    if (!sigma_verify(sys, p.pi, tr)) return false;
    return bls::multi_pairing({{p.h1, p.kappa}, {p.s1.neg(), Params::g2()}}).is_one();
}

}  // namespace coconut

namespace zef {
inline bls::Fr hash_to_scalar(const char* domain_tag, const Bytes& data) {
    auto wide = Hasher(domain_tag, 64).update(data).digest_wide();
    return bls::Fr::from_wide_le(wide.data());
}
}  // namespace zef
