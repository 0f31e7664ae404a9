#pragma once

// Votes and certificates. A certificate is a quorum of authority signatures
// over one value digest; it is the protocol's notion of finality. Certified
// values are either account requests or freshly minted transparent coins.

#include <algorithm>
#include <set>

#include "committee.hpp"
#include "operations.hpp"

namespace zef {

// A transparent coin: public (account, value, seed) triplet. The coin itself
// is a certificate over this body; the seed doubles as its spent marker.
struct TransparentCoinBody {
    Uid account;
    uint64_t value = 0;
    Digest seed;

    SpentMarker marker() const { return SpentMarker::transparent(seed); }

    void encode(Writer& w) const {
        account.encode(w);
        w.u64(value);
        seed.encode(w);
    }
    static TransparentCoinBody decode(Reader& r, size_t max_uid_len = kDefaultMaxUidLength) {
        TransparentCoinBody b;
        b.account = Uid::decode(r, max_uid_len);
        b.value = r.u64();
        b.seed = Digest::decode(r);
        return b;
    }
    Digest digest() const {
        Writer w;
        encode(w);
        return hash_bytes(domain::transparent_coin, w.take());
    }
};

using CertValue = std::variant<Request, TransparentCoinBody>;

inline void encode_cert_value(Writer& w, const CertValue& v) {
    if (const auto* q = std::get_if<Request>(&v)) {
        w.u8(1);
        q->encode(w);
    } else {
        w.u8(2);
        std::get<TransparentCoinBody>(v).encode(w);
    }
}
inline CertValue decode_cert_value(Reader& r, size_t max_uid_len = kDefaultMaxUidLength) {
    switch (r.u8()) {
        case 1: return Request::decode(r, max_uid_len);
        case 2: return TransparentCoinBody::decode(r, max_uid_len);
        default: throw ParseError("bad certificate value tag");
    }
}
inline Digest cert_value_digest(const CertValue& v) {
    if (const auto* q = std::get_if<Request>(&v)) return q->digest();
    return std::get<TransparentCoinBody>(v).digest();
}

// What an authority actually signs: a vote digest bound to the value digest.
inline Bytes vote_message(const Digest& value) {
    Digest d = Hasher(domain::vote).update(value).digest();
    return Bytes(d.v.begin(), d.v.end());
}

struct Vote {
    std::string authority;
    Digest value;
    Signature sig;

    static Vote make(const std::string& name, const Digest& value, const KeyPair& key) {
        return Vote{name, value, key.sign(vote_message(value))};
    }
    bool verify(const PublicKey& pk) const {
        return verify_signature(pk, vote_message(value), sig);
    }

    void encode(Writer& w) const {
        w.lp_str(authority);
        value.encode(w);
        sig.encode(w);
    }
    static Vote decode(Reader& r) {
        Vote v;
        v.authority = r.lp_str();
        v.value = Digest::decode(r);
        v.sig = Signature::decode(r);
        return v;
    }
};

struct CertSig {
    std::string authority;
    Signature sig;
};

struct Certificate {
    CertValue value;
    std::vector<CertSig> sigs;  // strictly sorted by authority name

    Digest value_digest() const { return cert_value_digest(value); }

    void encode(Writer& w) const {
        encode_cert_value(w, value);
        w.u32(uint32_t(sigs.size()));
        for (const auto& s : sigs) {
            w.lp_str(s.authority);
            s.sig.encode(w);
        }
    }
    static Certificate decode(Reader& r, size_t max_uid_len = kDefaultMaxUidLength) {
        Certificate c;
        c.value = decode_cert_value(r, max_uid_len);
        uint32_t n = r.u32();
        if (n > 4096) throw ParseError("too many certificate signatures");
        c.sigs.reserve(n);
        for (uint32_t i = 0; i < n; ++i) {
            CertSig s;
            s.authority = r.lp_str();
            s.sig = Signature::decode(r);
            c.sigs.push_back(std::move(s));
        }
        return c;
    }
    Bytes encoded() const {
        Writer w;
        encode(w);
        return w.take();
    }
};

// Combine votes into a certificate. Votes are deduplicated, checked, sorted
// by authority name, and trimmed at the first quorum so that the resulting
// certificate bytes depend only on the set of votes, not their arrival order.
inline Result<Certificate> aggregate_certificate(const Committee& committee, const CertValue& value,
                                                 std::vector<Vote> votes) {
    Digest want = cert_value_digest(value);
    std::sort(votes.begin(), votes.end(),
              [](const Vote& a, const Vote& b) { return a.authority < b.authority; });
    Certificate cert{value, {}};
    uint64_t power = 0;
    std::string prev;
    for (const auto& v : votes) {
        if (!cert.sigs.empty() && v.authority == prev) continue;  // duplicate sender
        const AuthorityInfo* info = committee.find(v.authority);
        if (!info) return Error(Err::UnknownAuthority, 0, v.authority);
        if (v.value != want) return Error(Err::InvalidVote, 0, v.authority + ": wrong value");
        if (!v.verify(info->vote_key)) return Error(Err::InvalidVote, 0, v.authority);
        cert.sigs.push_back(CertSig{v.authority, v.sig});
        prev = v.authority;
        power += info->power;
        if (committee.is_quorum(power)) return cert;
    }
    return Error(Err::NotAQuorum, power);
}

inline Status verify_certificate(const Committee& committee, const Certificate& cert) {
    Digest want = cert.value_digest();
    uint64_t power = 0;
    const std::string* prev = nullptr;
    for (const auto& s : cert.sigs) {
        if (prev && !(*prev < s.authority)) return Error(Err::DuplicateSigner, 0, s.authority);
        const AuthorityInfo* info = committee.find(s.authority);
        if (!info) return Error(Err::UnknownAuthority, 0, s.authority);
        if (!verify_signature(info->vote_key, vote_message(want), s.sig))
            return Error(Err::InvalidVote, 0, s.authority);
        power += info->power;
        prev = &s.authority;
    }
    if (!committee.is_quorum(power)) return Error(Err::NotAQuorum, power);
    return ok_status();
}

}  // namespace zef
