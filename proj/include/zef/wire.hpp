#pragma once

// Frame layout shared by TCP and UDP transports: a 4-byte little-endian
// length prefix counting everything after itself, one tag byte, then the
// canonical payload encoding. Tag values and reason codes are wire-stable.

#include "account.hpp"
#include "coins.hpp"
#include "transparent.hpp"

namespace zef::wire {

inline constexpr size_t kMaxFrame = 8 * 1024 * 1024;
inline constexpr size_t kUdpBudget = 1400;  // larger messages go over TCP

enum class Tag : uint8_t {
    Request = 1,
    Vote = 2,
    Confirm = 3,
    CreateAnonymousCoins = 4,
    CreateTransparentCoins = 5,
    CoinShares = 6,
    AccountInfoQuery = 7,
    AccountInfoResponse = 8,
    CrossShard = 9,
    Error = 10,
};

inline const char* tag_name(Tag t) {
    switch (t) {
        case Tag::Request: return "Request";
        case Tag::Vote: return "Vote";
        case Tag::Confirm: return "Confirm";
        case Tag::CreateAnonymousCoins: return "CreateAnonymousCoins";
        case Tag::CreateTransparentCoins: return "CreateTransparentCoins";
        case Tag::CoinShares: return "CoinShares";
        case Tag::AccountInfoQuery: return "AccountInfoQuery";
        case Tag::AccountInfoResponse: return "AccountInfoResponse";
        case Tag::CrossShard: return "CrossShard";
        case Tag::Error: return "Error";
    }
    return "Unknown";
}

struct Frame {
    Tag tag = Tag::Error;
    Bytes payload;
};

template <typename T>
Bytes to_payload(const T& msg) {
    Writer w;
    msg.encode(w);
    return w.take();
}

template <typename T>
Frame make_frame(Tag tag, const T& msg) {
    return Frame{tag, to_payload(msg)};
}

inline Frame error_frame(const Error& e) { return make_frame(Tag::Error, e); }
inline Frame ack_frame() { return error_frame(Error{}); }  // code None doubles as ack

// Full wire bytes including the length prefix.
inline Bytes frame_bytes(const Frame& f) {
    Writer w;
    w.u32(uint32_t(1 + f.payload.size()));
    w.u8(uint8_t(f.tag));
    w.raw(f.payload.data(), f.payload.size());
    return w.take();
}

// Body = everything after the length prefix.
inline Result<Frame> parse_frame_body(const uint8_t* p, size_t n) {
    if (n == 0) return Err::MalformedMessage;
    if (n > kMaxFrame) return Err::FrameTooLarge;
    uint8_t t = p[0];
    if (t < uint8_t(Tag::Request) || t > uint8_t(Tag::Error)) return Err::UnknownMessageTag;
    Frame f;
    f.tag = Tag(t);
    f.payload.assign(p + 1, p + n);
    return f;
}

// Parse one length-prefixed frame from a buffer; returns bytes consumed via
// out param, 0 when more input is needed.
inline Result<Frame> parse_frame(const Bytes& buf, size_t& consumed) {
    consumed = 0;
    if (buf.size() < 4) return Err::MalformedMessage;
    uint32_t len = uint32_t(buf[0]) | uint32_t(buf[1]) << 8 | uint32_t(buf[2]) << 16 |
                   uint32_t(buf[3]) << 24;
    if (len > kMaxFrame) return Err::FrameTooLarge;
    if (buf.size() < 4 + size_t(len)) return Err::MalformedMessage;
    consumed = 4 + size_t(len);
    return parse_frame_body(buf.data() + 4, len);
}

struct AccountInfoQuery {
    Uid id;
    uint64_t from_index = 0;

    void encode(Writer& w) const {
        id.encode(w);
        w.u64(from_index);
    }
    static AccountInfoQuery decode(Reader& r, size_t max_uid_len = kDefaultMaxUidLength) {
        AccountInfoQuery q;
        q.id = Uid::decode(r, max_uid_len);
        q.from_index = r.u64();
        return q;
    }
};

// Everything an authority needs to mint blinded coins: the creation request
// and the confirmed Spend certificate for each input account, in input order.
struct CreateAnonymousCoins {
    coins::CoinRequest request;
    std::vector<Certificate> spends;

    void encode(Writer& w) const {
        request.encode(w);
        w.u32(uint32_t(spends.size()));
        for (const auto& c : spends) c.encode(w);
    }
    static CreateAnonymousCoins decode(Reader& r) {
        CreateAnonymousCoins m;
        m.request = coins::CoinRequest::decode(r);
        uint32_t n = r.u32();
        if (n > coins::kMaxRequestSide) throw ParseError("too many spend certificates");
        for (uint32_t i = 0; i < n; i++) m.spends.push_back(Certificate::decode(r));
        return m;
    }
};

// Response to either coin-creation flow: blinded shares for anonymous
// outputs, or one vote per plaintext output for transparent ones.
struct CoinShares {
    static constexpr uint8_t kBlinded = 1;
    static constexpr uint8_t kTransparent = 2;

    uint8_t kind = kBlinded;
    std::vector<coconut::BlindedShare> shares;
    std::vector<Vote> votes;

    void encode(Writer& w) const {
        w.u8(kind);
        if (kind == kBlinded) {
            w.u32(uint32_t(shares.size()));
            for (const auto& s : shares) s.encode(w);
        } else {
            w.u32(uint32_t(votes.size()));
            for (const auto& v : votes) v.encode(w);
        }
    }
    static CoinShares decode(Reader& r) {
        CoinShares m;
        m.kind = r.u8();
        if (m.kind != kBlinded && m.kind != kTransparent) throw ParseError("bad shares kind");
        uint32_t n = r.u32();
        if (n > coins::kMaxRequestSide) throw ParseError("too many shares");
        for (uint32_t i = 0; i < n; i++) {
            if (m.kind == kBlinded) m.shares.push_back(coconut::BlindedShare::decode(r));
            else m.votes.push_back(Vote::decode(r));
        }
        return m;
    }
};

template <typename T, typename... A>
Result<T> parse_payload(const Bytes& payload, A&&... a) {
    try {
        Reader r(payload);
        T v = T::decode(r, std::forward<A>(a)...);
        if (!r.done()) return Error{Err::MalformedMessage, 0, "trailing bytes"};
        return v;
    } catch (const ParseError& e) {
        return Error{Err::MalformedMessage, 0, e.what()};
    }
}

}  // namespace zef::wire
