#pragma once

// The six account operations, and the signed request envelope that an owner
// submits for one of them. Request bytes are the unit of certification: a
// certificate over a request's digest is what makes the operation final.

#include <variant>

#include "coconut.hpp"
#include "sign.hpp"
#include "uid.hpp"

namespace zef {

// What a spend burns. Every marker may enter an account's spent set at most
// once; the None kind burns nothing (pure withdrawal).
struct SpentMarker {
    enum Kind : uint8_t { None = 0, Opaque = 1, Transparent = 2 };
    Kind kind = None;
    uint64_t index = 0;  // Opaque: coin slot under this account
    Digest seed;         // Transparent: the coin's blinding seed

    static SpentMarker none() { return {}; }
    static SpentMarker opaque(uint64_t index) { return {Opaque, index, {}}; }
    static SpentMarker transparent(const Digest& seed) { return {Transparent, 0, seed}; }

    bool operator==(const SpentMarker& o) const {
        if (kind != o.kind) return false;
        if (kind == Opaque) return index == o.index;
        if (kind == Transparent) return seed == o.seed;
        return true;
    }

    // canonical set-membership key
    Bytes key() const {
        Writer w;
        encode(w);
        return w.take();
    }

    void encode(Writer& w) const {
        w.u8(kind);
        if (kind == Opaque) w.u64(index);
        if (kind == Transparent) w.raw(seed.v.data(), seed.v.size());
    }
    static SpentMarker decode(Reader& r) {
        SpentMarker m;
        uint8_t k = r.u8();
        if (k > Transparent) throw ParseError("bad marker kind");
        m.kind = Kind(k);
        if (m.kind == Opaque) m.index = r.u64();
        if (m.kind == Transparent) r.raw_into(m.seed.v.data(), m.seed.v.size());
        return m;
    }
};

struct OpOpenAccount {
    Uid child;  // must extend the parent with the request's sequence number
    PublicKey owner;
};

struct OpTransfer {
    Uid recipient;
    uint64_t amount = 0;
};

struct OpChangeKey {
    PublicKey new_owner;
};

struct OpCloseAccount {};

// Withdraw `withdrawal` and/or burn the marker, toward the coin creation
// request whose outputs hash to `outputs_hash`. For opaque markers,
// `credential` is an encoded randomized coin presentation.
struct OpSpend {
    uint64_t withdrawal = 0;
    SpentMarker marker;
    Bytes credential;
    Digest outputs_hash;
};

// Redeem one coin publicly into `recipient`'s balance.
struct OpaqueRedeem {
    uint64_t index = 0;  // coin slot under the spending account
    bls::Fr seed;
    uint64_t value = 0;
    coconut::Credential sigma;
};
struct TransparentRedeem {
    Bytes certificate;  // encoded transparent coin certificate
};
using RedeemProof = std::variant<OpaqueRedeem, TransparentRedeem>;

struct OpSpendAndTransfer {
    Uid recipient;
    RedeemProof proof;
};

using Operation = std::variant<OpOpenAccount, OpTransfer, OpChangeKey, OpCloseAccount, OpSpend,
                               OpSpendAndTransfer>;

inline const char* op_name(const Operation& op) {
    struct V {
        const char* operator()(const OpOpenAccount&) { return "open_account"; }
        const char* operator()(const OpTransfer&) { return "transfer"; }
        const char* operator()(const OpChangeKey&) { return "change_key"; }
        const char* operator()(const OpCloseAccount&) { return "close_account"; }
        const char* operator()(const OpSpend&) { return "spend"; }
        const char* operator()(const OpSpendAndTransfer&) { return "spend_and_transfer"; }
    };
    return std::visit(V{}, op);
}

inline void encode_operation(Writer& w, const Operation& op) {
    struct V {
        Writer& w;
        void operator()(const OpOpenAccount& o) {
            w.u8(1);
            o.child.encode(w);
            o.owner.encode(w);
        }
        void operator()(const OpTransfer& o) {
            w.u8(2);
            o.recipient.encode(w);
            w.u64(o.amount);
        }
        void operator()(const OpChangeKey& o) {
            w.u8(3);
            o.new_owner.encode(w);
        }
        void operator()(const OpCloseAccount&) { w.u8(4); }
        void operator()(const OpSpend& o) {
            w.u8(5);
            w.u64(o.withdrawal);
            o.marker.encode(w);
            w.lp(o.credential);
            w.raw(o.outputs_hash.v.data(), o.outputs_hash.v.size());
        }
        void operator()(const OpSpendAndTransfer& o) {
            w.u8(6);
            o.recipient.encode(w);
            if (const auto* q = std::get_if<OpaqueRedeem>(&o.proof)) {
                w.u8(1);
                w.u64(q->index);
                q->seed.encode(w);
                w.u64(q->value);
                q->sigma.encode(w);
            } else {
                w.u8(2);
                w.lp(std::get<TransparentRedeem>(o.proof).certificate);
            }
        }
    };
    std::visit(V{w}, op);
}

inline Operation decode_operation(Reader& r, size_t max_uid_len = kDefaultMaxUidLength) {
    switch (r.u8()) {
        case 1: {
            OpOpenAccount o;
            o.child = Uid::decode(r, max_uid_len);
            o.owner = PublicKey::decode(r);
            return o;
        }
        case 2: {
            OpTransfer o;
            o.recipient = Uid::decode(r, max_uid_len);
            o.amount = r.u64();
            return o;
        }
        case 3: {
            OpChangeKey o;
            o.new_owner = PublicKey::decode(r);
            return o;
        }
        case 4: return OpCloseAccount{};
        case 5: {
            OpSpend o;
            o.withdrawal = r.u64();
            o.marker = SpentMarker::decode(r);
            o.credential = r.lp();
            r.raw_into(o.outputs_hash.v.data(), o.outputs_hash.v.size());
            return o;
        }
        case 6: {
            OpSpendAndTransfer o;
            o.recipient = Uid::decode(r, max_uid_len);
            uint8_t tag = r.u8();
            if (tag == 1) {
                OpaqueRedeem q;
                q.index = r.u64();
                q.seed = bls::Fr::decode(r);
                q.value = r.u64();
                q.sigma = coconut::Credential::decode(r);
                o.proof = q;
            } else if (tag == 2) {
                o.proof = TransparentRedeem{r.lp()};
            } else {
                throw ParseError("bad redeem proof tag");
            }
            return o;
        }
        default: throw ParseError("bad operation tag");
    }
}

struct Request {
    Uid account;
    uint64_t sequence = 0;
    Operation op;

    void encode(Writer& w) const {
        account.encode(w);
        w.u64(sequence);
        encode_operation(w, op);
    }
    static Request decode(Reader& r, size_t max_uid_len = kDefaultMaxUidLength) {
        Request q;
        q.account = Uid::decode(r, max_uid_len);
        q.sequence = r.u64();
        q.op = decode_operation(r, max_uid_len);
        return q;
    }

    Bytes signing_bytes() const {
        Writer w;
        encode(w);
        return w.take();
    }
    Digest digest() const { return hash_bytes(domain::request, signing_bytes()); }
};

struct SignedRequest {
    Request request;
    Signature signature;

    static Bytes message_for(const Request& q) {
        Digest d = q.digest();
        return Bytes(d.v.begin(), d.v.end());
    }
    static SignedRequest sign(Request q, const KeyPair& owner) {
        Signature sig = owner.sign(message_for(q));
        return SignedRequest{std::move(q), sig};
    }
    bool verify(const PublicKey& owner) const {
        return verify_signature(owner, message_for(request), signature);
    }

    void encode(Writer& w) const {
        request.encode(w);
        signature.encode(w);
    }
    static SignedRequest decode(Reader& r, size_t max_uid_len = kDefaultMaxUidLength) {
        SignedRequest s;
        s.request = Request::decode(r, max_uid_len);
        s.signature = Signature::decode(r);
        return s;
    }
};

}  // namespace zef
