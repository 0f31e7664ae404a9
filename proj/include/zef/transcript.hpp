#pragma once

// Chained Fiat-Shamir transcript. Every absorb folds labeled data into the
// running state; every challenge derives a scalar and advances the state, so
// proofs are bound to the exact sequence of public values they were built
// over.

#include "bls/curve.hpp"

namespace zef {

class Transcript {
  public:
    explicit Transcript(const std::string& label) {
        state_ = Hasher(domain::transcript).update_str(label).digest();
    }

    void absorb(const std::string& label, const Bytes& data) {
        state_ = Hasher(domain::transcript)
                     .update(state_)
                     .update_u64(1)
                     .update_str(label)
                     .update_u64(data.size())
                     .update(data)
                     .digest();
    }
    void absorb_u64(const std::string& label, uint64_t v) {
        Writer w;
        w.u64(v);
        absorb(label, w.out);
    }
    void absorb_digest(const std::string& label, const Digest& d) {
        absorb(label, Bytes(d.v.begin(), d.v.end()));
    }
    void absorb_g1(const std::string& label, const bls::G1& p) { absorb(label, bls::g1_bytes(p)); }
    void absorb_g2(const std::string& label, const bls::G2& p) { absorb(label, bls::g2_bytes(p)); }
    void absorb_scalar(const std::string& label, const bls::Fr& s) {
        Writer w;
        s.encode(w);
        absorb(label, w.out);
    }

    bls::Fr challenge(const std::string& label) {
        auto wide = Hasher(domain::transcript, 64)
                        .update(state_)
                        .update_u64(2)
                        .update_str(label)
                        .digest_wide();
        state_ = Hasher(domain::transcript).update(state_).update_u64(3).update_str(label).digest();
        return bls::Fr::from_wide_le(wide.data());
    }

  private:
    Digest state_;
};

}  // namespace zef
