#pragma once

// Account identifiers: non-empty sequences of u64, bounded length. A child
// account id is its parent's id extended with the parent's sequence number
// at creation time, so an address can never be reissued once the parent's
// sequence has moved past it.

#include <optional>

#include "errors.hpp"
#include "hash.hpp"

namespace zef {

inline constexpr size_t kDefaultMaxUidLength = 8;

struct Uid {
    std::vector<uint64_t> path;

    Uid() = default;
    explicit Uid(std::vector<uint64_t> p) : path(std::move(p)) {}
    static Uid root(uint64_t v) { return Uid({v}); }

    bool operator==(const Uid&) const = default;
    auto operator<=>(const Uid&) const = default;

    bool valid(size_t max_len = kDefaultMaxUidLength) const {
        return !path.empty() && path.size() <= max_len;
    }

    bool is_root() const { return path.size() == 1; }

    std::optional<Uid> parent() const {
        if (path.size() < 2) return std::nullopt;
        return Uid(std::vector<uint64_t>(path.begin(), path.end() - 1));
    }
    uint64_t last() const { return path.back(); }

    // id' = id :: n
    Uid child(uint64_t n) const {
        Uid c = *this;
        c.path.push_back(n);
        return c;
    }

    std::string to_string() const {
        std::string s;
        for (size_t i = 0; i < path.size(); i++) {
            if (i) s += '/';
            s += std::to_string(path[i]);
        }
        return s;
    }
    static std::optional<Uid> parse(const std::string& s) {
        Uid id;
        size_t pos = 0;
        while (pos < s.size()) {
            size_t end = s.find('/', pos);
            if (end == std::string::npos) end = s.size();
            if (end == pos) return std::nullopt;
            uint64_t v = 0;
            for (size_t i = pos; i < end; i++) {
                if (s[i] < '0' || s[i] > '9') return std::nullopt;
                if (v > (~uint64_t(0) - (s[i] - '0')) / 10) return std::nullopt;
                v = v * 10 + (s[i] - '0');
            }
            id.path.push_back(v);
            pos = end + 1;
        }
        if (id.path.empty()) return std::nullopt;
        return id;
    }

    void encode(Writer& w) const {
        w.u8(uint8_t(path.size()));
        for (uint64_t v : path) w.u64(v);
    }
    static Uid decode(Reader& r, size_t max_len = kDefaultMaxUidLength) {
        uint8_t n = r.u8();
        if (n == 0 || n > max_len) throw ParseError("uid length out of bounds");
        Uid id;
        id.path.reserve(n);
        for (uint8_t i = 0; i < n; i++) id.path.push_back(r.u64());
        return id;
    }

    Bytes canonical() const {
        Writer w;
        encode(w);
        return w.take();
    }
};

struct UidHash {
    size_t operator()(const Uid& id) const {
        uint64_t h = 0x9e3779b97f4a7c15ull;
        for (uint64_t v : id.path) {
            h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return size_t(h);
    }
};

// Child derivation used by account creation: id' = id :: n with the length
// cap enforced.
inline Result<Uid> derive_child(const Uid& id, uint64_t n,
                                size_t max_len = kDefaultMaxUidLength) {
    if (id.path.size() + 1 > max_len) return Err::UidTooLong;
    return id.child(n);
}

}  // namespace zef
