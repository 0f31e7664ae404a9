#pragma once

// Bit-decomposition range proof for a Pedersen-committed value: 32 per-bit
// commitments B_i = base^{b_i} g1^{rho_i}, each with a two-branch OR proof
// that b_i is 0 or 1. The caller links sum 2^i B_i back to its value
// commitment through a shared witness and drives one master transcript, so
// the whole object is a single Fiat-Shamir statement. Proofs carry the OR
// announcements; a verifier checks every bit equation of every proof in one
// randomized multiexponentiation.

#include "sigma.hpp"

namespace zef {

inline constexpr int kRangeBits = 32;
inline constexpr uint64_t kValueMax = 0xffffffffULL;

struct BitProof {
    bls::G1 a0, a1;
    bls::Fr c0, c1, z0, z1;

    void encode(Writer& w) const {
        w.raw(bls::g1_bytes(a0));
        w.raw(bls::g1_bytes(a1));
        c0.encode(w);
        c1.encode(w);
        z0.encode(w);
        z1.encode(w);
    }
    static BitProof decode(Reader& r) {
        BitProof b;
        uint8_t buf[48];
        r.raw_into(buf, 48);
        auto a0 = bls::g1_deserialize(buf);
        if (!a0) throw ParseError("bad announcement");
        b.a0 = *a0;
        r.raw_into(buf, 48);
        auto a1 = bls::g1_deserialize(buf);
        if (!a1) throw ParseError("bad announcement");
        b.a1 = *a1;
        b.c0 = bls::Fr::decode(r);
        b.c1 = bls::Fr::decode(r);
        b.z0 = bls::Fr::decode(r);
        b.z1 = bls::Fr::decode(r);
        return b;
    }
};

struct RangeProof {
    std::vector<bls::G1> bits;
    std::vector<BitProof> ors;

    bool well_formed() const {
        return bits.size() == kRangeBits && ors.size() == kRangeBits;
    }

    void encode(Writer& w) const {
        for (const auto& b : bits) w.raw(bls::g1_bytes(b));
        for (const auto& o : ors) o.encode(w);
    }
    static RangeProof decode(Reader& r) {
        RangeProof rp;
        for (int i = 0; i < kRangeBits; i++) {
            uint8_t buf[48];
            r.raw_into(buf, 48);
            auto p = bls::g1_deserialize(buf);
            if (!p) throw ParseError("bad bit commitment");
            rp.bits.push_back(*p);
        }
        for (int i = 0; i < kRangeBits; i++) rp.ors.push_back(BitProof::decode(r));
        return rp;
    }
};

// sum 2^i P_i by Horner, cheaper than a general multiexponentiation
inline bls::G1 weighted_by_powers_of_two(const std::vector<bls::G1>& ps) {
    bls::G1 acc = bls::G1::infinity();
    for (size_t i = ps.size(); i-- > 0;) {
        acc = acc.dbl() + ps[i];
    }
    return acc;
}

class RangeProver {
  public:
    RangeProver(uint64_t value, const bls::G1& value_base, Rng& rng) {
        const bls::G1& g = bls::g1_generator();
        for (int i = 0; i < kRangeBits; i++) {
            int b = int((value >> i) & 1);
            bls::Fr rho = bls::Fr::random(rng);
            bls::G1 B = g.mul(rho);
            if (b) B = B + value_base;
            bits_.push_back(B);
            bitval_.push_back(b);
            rho_.push_back(rho);

            bls::Fr t = bls::Fr::random(rng);
            bls::Fr c_sim = bls::Fr::random(rng);
            bls::Fr z_sim = bls::Fr::random(rng);
            t_.push_back(t);
            c_sim_.push_back(c_sim);
            z_sim_.push_back(z_sim);
            // statement 0: B = g^rho, statement 1: B - base = g^rho
            if (b == 0) {
                a0_.push_back(g.mul(t));
                a1_.push_back(g.mul(z_sim) - (B - value_base).mul(c_sim));
            } else {
                a0_.push_back(g.mul(z_sim) - B.mul(c_sim));
                a1_.push_back(g.mul(t));
            }
        }
    }

    const std::vector<bls::G1>& commitments() const { return bits_; }

    // sum 2^i rho_i, for the caller's linking witness
    bls::Fr rho_weighted_sum() const {
        bls::Fr acc = bls::Fr::zero();
        for (size_t i = rho_.size(); i-- > 0;) {
            acc = acc + acc + rho_[i];
        }
        return acc;
    }

    void absorb_announcements(Transcript& tr, const std::string& label) const {
        for (int i = 0; i < kRangeBits; i++) {
            tr.absorb_g1(label + ".a0." + std::to_string(i), a0_[i]);
            tr.absorb_g1(label + ".a1." + std::to_string(i), a1_[i]);
        }
    }

    RangeProof finish(Transcript& tr, const std::string& label) const {
        RangeProof rp;
        rp.bits = bits_;
        for (int i = 0; i < kRangeBits; i++) {
            bls::Fr c = tr.challenge(label + ".c." + std::to_string(i));
            BitProof bp;
            bp.a0 = a0_[i];
            bp.a1 = a1_[i];
            if (bitval_[i] == 0) {
                bp.c1 = c_sim_[i];
                bp.z1 = z_sim_[i];
                bp.c0 = c - bp.c1;
                bp.z0 = t_[i] + bp.c0 * rho_[i];
            } else {
                bp.c0 = c_sim_[i];
                bp.z0 = z_sim_[i];
                bp.c1 = c - bp.c0;
                bp.z1 = t_[i] + bp.c1 * rho_[i];
            }
            rp.ors.push_back(bp);
        }
        return rp;
    }

  private:
    std::vector<bls::G1> bits_, a0_, a1_;
    std::vector<int> bitval_;
    std::vector<bls::Fr> rho_, t_, c_sim_, z_sim_;
};

// Accumulates the bit equations of many range proofs:
//   a0 + c0 B - z0 g = 0  and  a1 + c1 (B - base) - z1 g = 0
// each scaled by a random 128-bit weight, verified as one
// multiexponentiation equal to infinity.
class RangeBatch {
  public:
    explicit RangeBatch(Rng&& weight_rng) : rng_(std::move(weight_rng)) {}

    void add(const RangeProof& rp, const bls::G1& value_base) {
        bls::Fr base_coef = bls::Fr::zero();
        for (int i = 0; i < kRangeBits; i++) {
            const auto& o = rp.ors[i];
            bls::Fr w0 = weight();
            bls::Fr w1 = weight();
            points_.push_back(o.a0);
            scalars_.push_back(w0);
            points_.push_back(o.a1);
            scalars_.push_back(w1);
            points_.push_back(rp.bits[i]);
            scalars_.push_back(w0 * o.c0 + w1 * o.c1);
            base_coef = base_coef - w1 * o.c1;
            g_coef_ = g_coef_ - (w0 * o.z0 + w1 * o.z1);
        }
        points_.push_back(value_base);
        scalars_.push_back(base_coef);
    }

    bool verify() {
        points_.push_back(bls::g1_generator());
        scalars_.push_back(g_coef_);
        return bls::G1::msm(points_, scalars_).is_infinity();
    }

  private:
    bls::Fr weight() {
        uint8_t wide[64] = {0};
        rng_.fill(wide, 16);
        return bls::Fr::from_wide_le(wide);
    }

    Rng rng_;
    std::vector<bls::G1> points_;
    std::vector<bls::Fr> scalars_;
    bls::Fr g_coef_ = bls::Fr::zero();
};

class RangeVerifier {
  public:
    RangeVerifier(const RangeProof& rp, const bls::G1& value_base)
        : rp_(rp), base_(value_base) {}

    void absorb_announcements(Transcript& tr, const std::string& label) const {
        for (int i = 0; i < kRangeBits; i++) {
            tr.absorb_g1(label + ".a0." + std::to_string(i), rp_.ors[i].a0);
            tr.absorb_g1(label + ".a1." + std::to_string(i), rp_.ors[i].a1);
        }
    }

    // challenge split checks; group equations go through a RangeBatch, whose
    // weights must be derived only after every challenge has been pulled
    bool finish(Transcript& tr, const std::string& label) const {
        bool all = true;
        for (int i = 0; i < kRangeBits; i++) {
            bls::Fr c = tr.challenge(label + ".c." + std::to_string(i));
            all = all && (rp_.ors[i].c0 + rp_.ors[i].c1 == c);
        }
        return all;
    }

    // sum 2^i B_i, the value commitment implied by the bits
    bls::G1 weighted_bit_sum() const { return weighted_by_powers_of_two(rp_.bits); }

  private:
    const RangeProof& rp_;
    bls::G1 base_;
};

}  // namespace zef
