#pragma once

// Canonical byte-level encoding used everywhere a value is hashed, signed,
// stored, or sent: fixed-width little-endian integers, u32-length-prefixed
// byte strings, one tag byte per variant. Equal values encode to equal bytes.

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace zef {

using Bytes = std::vector<uint8_t>;

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

class Writer {
  public:
    Bytes out;

    void u8(uint8_t v) { out.push_back(v); }
    void u16(uint16_t v) { le(v, 2); }
    void u32(uint32_t v) { le(v, 4); }
    void u64(uint64_t v) { le(v, 8); }

    void raw(const uint8_t* p, size_t n) { out.insert(out.end(), p, p + n); }
    void raw(const Bytes& b) { raw(b.data(), b.size()); }

    // Length-prefixed byte string.
    void lp(const Bytes& b) {
        u32(static_cast<uint32_t>(b.size()));
        raw(b);
    }
    void lp_str(const std::string& s) {
        u32(static_cast<uint32_t>(s.size()));
        raw(reinterpret_cast<const uint8_t*>(s.data()), s.size());
    }

    Bytes take() { return std::move(out); }

  private:
    void le(uint64_t v, int n) {
        for (int i = 0; i < n; i++) out.push_back(uint8_t(v >> (8 * i)));
    }
};

class Reader {
  public:
    Reader(const uint8_t* p, size_t n) : p_(p), n_(n) {}
    explicit Reader(const Bytes& b) : Reader(b.data(), b.size()) {}

    uint8_t u8() { return take(1)[0]; }
    uint16_t u16() { return uint16_t(le(2)); }
    uint32_t u32() { return uint32_t(le(4)); }
    uint64_t u64() { return le(8); }

    Bytes raw(size_t n) {
        const uint8_t* p = take(n);
        return Bytes(p, p + n);
    }
    void raw_into(uint8_t* dst, size_t n) { std::memcpy(dst, take(n), n); }

    Bytes lp(size_t max = 1u << 23) {
        uint32_t n = u32();
        if (n > max) throw ParseError("length prefix exceeds limit");
        return raw(n);
    }
    std::string lp_str(size_t max = 4096) {
        Bytes b = lp(max);
        return std::string(b.begin(), b.end());
    }

    bool done() const { return off_ == n_; }
    size_t remaining() const { return n_ - off_; }
    void expect_done() const {
        if (!done()) throw ParseError("trailing bytes");
    }

  private:
    const uint8_t* take(size_t n) {
        if (n_ - off_ < n) throw ParseError("input truncated");
        const uint8_t* p = p_ + off_;
        off_ += n;
        return p;
    }
    uint64_t le(int n) {
        const uint8_t* p = take(n);
        uint64_t v = 0;
        for (int i = 0; i < n; i++) v |= uint64_t(p[i]) << (8 * i);
        return v;
    }

    const uint8_t* p_;
    size_t n_;
    size_t off_ = 0;
};

inline std::string to_hex(const uint8_t* p, size_t n) {
    static const char* d = "0123456789abcdef";
    std::string s;
    s.reserve(2 * n);
    for (size_t i = 0; i < n; i++) {
        s.push_back(d[p[i] >> 4]);
        s.push_back(d[p[i] & 15]);
    }
    return s;
}
inline std::string to_hex(const Bytes& b) { return to_hex(b.data(), b.size()); }

inline int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

inline Bytes from_hex(const std::string& s) {
    if (s.size() % 2) throw ParseError("odd hex length");
    Bytes b(s.size() / 2);
    for (size_t i = 0; i < b.size(); i++) {
        int hi = hex_nibble(s[2 * i]), lo = hex_nibble(s[2 * i + 1]);
        if (hi < 0 || lo < 0) throw ParseError("bad hex digit");
        b[i] = uint8_t(hi << 4 | lo);
    }
    return b;
}

}  // namespace zef
