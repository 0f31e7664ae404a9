#pragma once

// Generic Schnorr-style proof of knowledge for systems of group equations
//   target = prod_k base_k ^ w[idx_k]     (in G1 or G2)
// and linear scalar equations
//   sum_k coef_k * w[idx_k] = constant
// over a shared witness vector. Proofs are transmitted in compressed form
// (challenge + responses); the verifier recomputes the announcements, so any
// mutation of a base, target, constant, or absorbed public value shifts the
// recomputed challenge and the proof dies.

#include "transcript.hpp"

namespace zef {

struct SigmaProof {
    bls::Fr challenge;
    std::vector<bls::Fr> responses;

    void encode(Writer& w) const {
        challenge.encode(w);
        w.u32(uint32_t(responses.size()));
        for (const auto& z : responses) z.encode(w);
    }
    static SigmaProof decode(Reader& r) {
        SigmaProof p;
        p.challenge = bls::Fr::decode(r);
        uint32_t n = r.u32();
        if (n > 4096) throw ParseError("oversized sigma proof");
        p.responses.reserve(n);
        for (uint32_t i = 0; i < n; i++) p.responses.push_back(bls::Fr::decode(r));
        return p;
    }
};

struct SigmaSystem {
    struct Eq1 {
        bls::G1 target;
        std::vector<std::pair<bls::G1, size_t>> terms;
    };
    struct Eq2 {
        bls::G2 target;
        std::vector<std::pair<bls::G2, size_t>> terms;
    };
    struct Lin {
        bls::Fr constant;
        std::vector<std::pair<bls::Fr, size_t>> terms;
    };

    size_t n_witnesses = 0;
    std::vector<Eq1> g1_eqs;
    std::vector<Eq2> g2_eqs;
    std::vector<Lin> lin_eqs;

    size_t fresh() { return n_witnesses++; }
};

namespace detail {

inline void absorb_announcements(Transcript& tr, const SigmaSystem& sys,
                                 const std::vector<bls::G1>& a1, const std::vector<bls::G2>& a2,
                                 const std::vector<bls::Fr>& al) {
    for (size_t i = 0; i < sys.g1_eqs.size(); i++) {
        tr.absorb_g1("sigma.g1." + std::to_string(i), a1[i]);
        tr.absorb_g1("sigma.g1target." + std::to_string(i), sys.g1_eqs[i].target);
    }
    for (size_t i = 0; i < sys.g2_eqs.size(); i++) {
        tr.absorb_g2("sigma.g2." + std::to_string(i), a2[i]);
        tr.absorb_g2("sigma.g2target." + std::to_string(i), sys.g2_eqs[i].target);
    }
    for (size_t i = 0; i < sys.lin_eqs.size(); i++) {
        tr.absorb_scalar("sigma.lin." + std::to_string(i), al[i]);
        tr.absorb_scalar("sigma.lintarget." + std::to_string(i), sys.lin_eqs[i].constant);
    }
}

}  // namespace detail

// The caller owns the transcript; everything public must be absorbed into it
// before this is called. The challenge label keeps multi-part proofs apart.
inline SigmaProof sigma_prove(const SigmaSystem& sys, const std::vector<bls::Fr>& witness,
                              Transcript& tr, Rng& rng) {
    std::vector<bls::Fr> masks(sys.n_witnesses);
    for (auto& m : masks) m = bls::Fr::random(rng);

    std::vector<bls::G1> a1;
    a1.reserve(sys.g1_eqs.size());
    for (const auto& eq : sys.g1_eqs) {
        std::vector<bls::G1> bases;
        std::vector<bls::Fr> scalars;
        for (const auto& [b, idx] : eq.terms) {
            bases.push_back(b);
            scalars.push_back(masks[idx]);
        }
        a1.push_back(bls::G1::msm(bases, scalars));
    }
    std::vector<bls::G2> a2;
    a2.reserve(sys.g2_eqs.size());
    for (const auto& eq : sys.g2_eqs) {
        std::vector<bls::G2> bases;
        std::vector<bls::Fr> scalars;
        for (const auto& [b, idx] : eq.terms) {
            bases.push_back(b);
            scalars.push_back(masks[idx]);
        }
        a2.push_back(bls::G2::msm(bases, scalars));
    }
    std::vector<bls::Fr> al;
    al.reserve(sys.lin_eqs.size());
    for (const auto& eq : sys.lin_eqs) {
        bls::Fr u = bls::Fr::zero();
        for (const auto& [c, idx] : eq.terms) u = u + c * masks[idx];
        al.push_back(u);
    }

    detail::absorb_announcements(tr, sys, a1, a2, al);
    bls::Fr c = tr.challenge("sigma.challenge");

    SigmaProof p;
    p.challenge = c;
    p.responses.resize(sys.n_witnesses);
    for (size_t k = 0; k < sys.n_witnesses; k++) p.responses[k] = masks[k] + c * witness[k];
    return p;
}

inline bool sigma_verify(const SigmaSystem& sys, const SigmaProof& proof, Transcript& tr) {
    if (proof.responses.size() != sys.n_witnesses) return false;
    const bls::Fr nc = proof.challenge.neg();

    std::vector<bls::G1> a1;
    a1.reserve(sys.g1_eqs.size());
    for (const auto& eq : sys.g1_eqs) {
        std::vector<bls::G1> bases;
        std::vector<bls::Fr> scalars;
        for (const auto& [b, idx] : eq.terms) {
            bases.push_back(b);
            scalars.push_back(proof.responses[idx]);
        }
        bases.push_back(eq.target);
        scalars.push_back(nc);
        a1.push_back(bls::G1::msm(bases, scalars));
    }
    std::vector<bls::G2> a2;
    a2.reserve(sys.g2_eqs.size());
    for (const auto& eq : sys.g2_eqs) {
        std::vector<bls::G2> bases;
        std::vector<bls::Fr> scalars;
        for (const auto& [b, idx] : eq.terms) {
            bases.push_back(b);
            scalars.push_back(proof.responses[idx]);
        }
        bases.push_back(eq.target);
        scalars.push_back(nc);
        a2.push_back(bls::G2::msm(bases, scalars));
    }
    std::vector<bls::Fr> al;
    al.reserve(sys.lin_eqs.size());
    for (const auto& eq : sys.lin_eqs) {
        bls::Fr u = bls::Fr::zero();
        for (const auto& [c, idx] : eq.terms) u = u + c * proof.responses[idx];
        al.push_back(u + nc * eq.constant);
    }

    detail::absorb_announcements(tr, sys, a1, a2, al);
    return tr.challenge("sigma.challenge") == proof.challenge;
}

}  // namespace zef
