#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tithonus {

using Bytes = std::vector<uint8_t>;

inline std::string to_hex(const uint8_t* data, size_t len) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.resize(len * 2);
    for (size_t i = 0; i < len; i++) {
        s[2 * i]     = digits[(data[i] >> 4) & 0xF];
        s[2 * i + 1] = digits[data[i] & 0xF];
    }
    return s;
}

inline std::string to_hex(const Bytes& b) { return to_hex(b.data(), b.size()); }

template <size_t N>
inline std::string to_hex(const std::array<uint8_t, N>& a) { return to_hex(a.data(), N); }

inline int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

inline Bytes from_hex(std::string_view s) {
    if (s.size() % 2 != 0) throw std::runtime_error("from_hex: odd length");
    Bytes out;
    out.reserve(s.size() / 2);
    for (size_t i = 0; i < s.size(); i += 2) {
        int hi = hex_nibble(s[i]), lo = hex_nibble(s[i + 1]);
        if (hi < 0 || lo < 0) throw std::runtime_error("from_hex: bad digit");
        out.push_back(static_cast<uint8_t>((hi << 4) | lo));
    }
    return out;
}

inline void append_bytes(Bytes& out, const Bytes& x) { out.insert(out.end(), x.begin(), x.end()); }

inline void append_bytes(Bytes& out, const uint8_t* data, size_t len) {
    out.insert(out.end(), data, data + len);
}

template <size_t N>
inline void append_bytes(Bytes& out, const std::array<uint8_t, N>& a) {
    out.insert(out.end(), a.begin(), a.end());
}

inline void append_u16_le(Bytes& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

inline void append_u32_le(Bytes& out, uint32_t v) {
    for (int i = 0; i < 4; i++) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

inline void append_u64_le(Bytes& out, uint64_t v) {
    for (int i = 0; i < 8; i++) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

inline void append_u32_be(Bytes& out, uint32_t v) {
    for (int i = 3; i >= 0; i--) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

inline void append_u64_be(Bytes& out, uint64_t v) {
    for (int i = 7; i >= 0; i--) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

// Bitcoin compact-size varint.
inline void append_varint(Bytes& out, uint64_t v) {
    if (v < 0xFD) {
        out.push_back(static_cast<uint8_t>(v));
    } else if (v <= 0xFFFF) {
        out.push_back(0xFD);
        append_u16_le(out, static_cast<uint16_t>(v));
    } else if (v <= 0xFFFFFFFFull) {
        out.push_back(0xFE);
        append_u32_le(out, static_cast<uint32_t>(v));
    } else {
        out.push_back(0xFF);
        append_u64_le(out, v);
    }
}

inline size_t varint_size(uint64_t v) {
    if (v < 0xFD) return 1;
    if (v <= 0xFFFF) return 3;
    if (v <= 0xFFFFFFFFull) return 5;
    return 9;
}

// Sequential reader over a byte buffer. Throws on underrun.
class ByteReader {
public:
    ByteReader(const uint8_t* data, size_t len) : data_(data), len_(len) {}
    explicit ByteReader(const Bytes& b) : ByteReader(b.data(), b.size()) {}

    size_t remaining() const { return len_ - pos_; }
    bool done() const { return pos_ == len_; }
    size_t position() const { return pos_; }

    uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    uint16_t u16_le() {
        need(2);
        uint16_t v = static_cast<uint16_t>(data_[pos_]) | static_cast<uint16_t>(data_[pos_ + 1]) << 8;
        pos_ += 2;
        return v;
    }
    uint32_t u32_le() {
        need(4);
        uint32_t v = 0;
        for (int i = 3; i >= 0; i--) v = (v << 8) | data_[pos_ + i];
        pos_ += 4;
        return v;
    }
    uint64_t u64_le() {
        need(8);
        uint64_t v = 0;
        for (int i = 7; i >= 0; i--) v = (v << 8) | data_[pos_ + i];
        pos_ += 8;
        return v;
    }
    uint32_t u32_be() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; i++) v = (v << 8) | data_[pos_ + i];
        pos_ += 4;
        return v;
    }
    uint64_t u64_be() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; i++) v = (v << 8) | data_[pos_ + i];
        pos_ += 8;
        return v;
    }
    uint64_t varint() {
        uint8_t tag = u8();
        if (tag < 0xFD) return tag;
        if (tag == 0xFD) return u16_le();
        if (tag == 0xFE) return u32_le();
        return u64_le();
    }
    Bytes take(size_t n) {
        need(n);
        Bytes out(data_ + pos_, data_ + pos_ + n);
        pos_ += n;
        return out;
    }
    template <size_t N>
    std::array<uint8_t, N> take_array() {
        need(N);
        std::array<uint8_t, N> out{};
        std::memcpy(out.data(), data_ + pos_, N);
        pos_ += N;
        return out;
    }

private:
    void need(size_t n) const {
        if (pos_ + n > len_) throw std::runtime_error("ByteReader: buffer underrun");
    }
    const uint8_t* data_;
    size_t len_;
    size_t pos_ = 0;
};

} // namespace tithonus
