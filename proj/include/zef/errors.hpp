#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "bytes.hpp"

namespace zef {

// Reason codes shared by the engine, the credential pipeline, and the wire
// Error frame. Values are part of the wire format; do not renumber.
enum class Err : uint16_t {
    None = 0,

    // account engine
    InactiveAccount = 1,
    BadOwnerSignature = 2,
    AccountLocked = 3,
    WrongSequence = 4,
    InsufficientFunds = 5,
    WrongChildId = 6,
    AlreadySpent = 7,
    BadCoinSignature = 8,
    InvalidCertificate = 9,
    MissingEarlierCertificates = 10,  // arg = expected sequence number
    UidTooLong = 11,
    AmountOverflow = 12,

    // votes / certificates
    NotAQuorum = 20,
    InvalidVote = 21,
    DuplicateSigner = 22,
    UnknownAuthority = 23,

    // credential pipeline
    InvalidProof = 30,
    ConservationViolated = 31,
    ValueOutOfRange = 32,
    DuplicateSpentMarker = 33,
    HashMismatch = 34,
    InvalidInputCoin = 35,  // arg = input position
    WrongShareCount = 36,
    InvalidShare = 37,
    InvalidThreshold = 38,
    DuplicatePoint = 39,

    // transport / framing
    MalformedMessage = 50,
    UnknownMessageTag = 51,
    FrameTooLarge = 52,
    WrongShard = 53,
    Timeout = 54,
    ConnectionFailed = 55,

    // wallet
    HistoryUnavailable = 60,
    EquivocationRefused = 61,
    UnknownAccount = 62,
    NotCoinOwner = 63,
    CertificateMismatch = 64,
    ShareVerificationFailed = 65,
    TargetUnreachable = 66,
};

inline const char* err_name(Err e) {
    switch (e) {
        case Err::None: return "None";
        case Err::InactiveAccount: return "InactiveAccount";
        case Err::BadOwnerSignature: return "BadOwnerSignature";
        case Err::AccountLocked: return "AccountLocked";
        case Err::WrongSequence: return "WrongSequence";
        case Err::InsufficientFunds: return "InsufficientFunds";
        case Err::WrongChildId: return "WrongChildId";
        case Err::AlreadySpent: return "AlreadySpent";
        case Err::BadCoinSignature: return "BadCoinSignature";
        case Err::InvalidCertificate: return "InvalidCertificate";
        case Err::MissingEarlierCertificates: return "MissingEarlierCertificates";
        case Err::UidTooLong: return "UidTooLong";
        case Err::AmountOverflow: return "AmountOverflow";
        case Err::NotAQuorum: return "NotAQuorum";
        case Err::InvalidVote: return "InvalidVote";
        case Err::DuplicateSigner: return "DuplicateSigner";
        case Err::UnknownAuthority: return "UnknownAuthority";
        case Err::InvalidProof: return "InvalidProof";
        case Err::ConservationViolated: return "ConservationViolated";
        case Err::ValueOutOfRange: return "ValueOutOfRange";
        case Err::DuplicateSpentMarker: return "DuplicateSpentMarker";
        case Err::HashMismatch: return "HashMismatch";
        case Err::InvalidInputCoin: return "InvalidInputCoin";
        case Err::WrongShareCount: return "WrongShareCount";
        case Err::InvalidShare: return "InvalidShare";
        case Err::InvalidThreshold: return "InvalidThreshold";
        case Err::DuplicatePoint: return "DuplicatePoint";
        case Err::MalformedMessage: return "MalformedMessage";
        case Err::UnknownMessageTag: return "UnknownMessageTag";
        case Err::FrameTooLarge: return "FrameTooLarge";
        case Err::WrongShard: return "WrongShard";
        case Err::Timeout: return "Timeout";
        case Err::ConnectionFailed: return "ConnectionFailed";
        case Err::HistoryUnavailable: return "HistoryUnavailable";
        case Err::EquivocationRefused: return "EquivocationRefused";
        case Err::UnknownAccount: return "UnknownAccount";
        case Err::NotCoinOwner: return "NotCoinOwner";
        case Err::CertificateMismatch: return "CertificateMismatch";
        case Err::ShareVerificationFailed: return "ShareVerificationFailed";
        case Err::TargetUnreachable: return "TargetUnreachable";
    }
    return "Unknown";
}

struct Error {
    Err code = Err::None;
    uint64_t arg = 0;       // e.g. expected sequence, input position
    std::string detail;

    Error() = default;
    Error(Err c) : code(c) {}
    Error(Err c, uint64_t a) : code(c), arg(a) {}
    Error(Err c, uint64_t a, std::string d) : code(c), arg(a), detail(std::move(d)) {}

    std::string to_string() const {
        std::string s = err_name(code);
        if (code == Err::MissingEarlierCertificates) s += " expected=" + std::to_string(arg);
        else if (code == Err::InvalidInputCoin) s += " input=" + std::to_string(arg);
        if (!detail.empty()) s += " (" + detail + ")";
        return s;
    }

    void encode(Writer& w) const {
        w.u16(uint16_t(code));
        w.u64(arg);
        w.lp_str(detail);
    }
    static Error decode(Reader& r) {
        Error e;
        e.code = Err(r.u16());
        e.arg = r.u64();
        e.detail = r.lp_str();
        return e;
    }
};

template <typename T>
class Result {
  public:
    Result(T v) : v_(std::move(v)) {}
    Result(Error e) : v_(std::move(e)) {}
    Result(Err c) : v_(Error(c)) {}

    bool ok() const { return std::holds_alternative<T>(v_); }
    explicit operator bool() const { return ok(); }

    T& value() { return std::get<T>(v_); }
    const T& value() const { return std::get<T>(v_); }
    const Error& error() const { return std::get<Error>(v_); }

  private:
    std::variant<T, Error> v_;
};

struct Unit {};
using Status = Result<Unit>;
inline Status ok_status() { return Status(Unit{}); }

}  // namespace zef
