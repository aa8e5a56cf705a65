#pragma once

#include <cstdint>
#include <string>

#include "tithonus/bytes.hpp"
#include "tithonus/errors.hpp"

namespace tithonus {

inline uint32_t crc32(const uint8_t* data, size_t len) {
    static const auto table = [] {
        std::array<uint32_t, 256> t{};
        for (uint32_t i = 0; i < 256; i++) {
            uint32_t c = i;
            for (int k = 0; k < 8; k++) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    uint32_t c = 0xFFFFFFFFu;
    for (size_t i = 0; i < len; i++) c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}
inline uint32_t crc32(const Bytes& b) { return crc32(b.data(), b.size()); }

// Minimal ZIP container, stored (uncompressed) entry, one file. The archive
// comment is padded so the container hits an exact target size when asked,
// which pins byte-level fixtures.
inline Bytes zip_wrap(const std::string& name, const Bytes& data, size_t pad_to = 0) {
    size_t base = 30 + name.size() + data.size() + 46 + name.size() + 22;
    size_t comment_len = 0;
    if (pad_to != 0) {
        if (pad_to < base || pad_to - base > 0xFFFF)
            throw BadLength("zip target size out of range, base is " + std::to_string(base));
        comment_len = pad_to - base;
    }
    uint32_t crc = crc32(data);

    Bytes out;
    // local file header
    append_u32_le(out, 0x04034b50);
    append_u16_le(out, 20);  // version needed
    append_u16_le(out, 0);   // flags
    append_u16_le(out, 0);   // method: stored
    append_u16_le(out, 0);   // mod time
    append_u16_le(out, 0x21); // mod date
    append_u32_le(out, crc);
    append_u32_le(out, static_cast<uint32_t>(data.size()));
    append_u32_le(out, static_cast<uint32_t>(data.size()));
    append_u16_le(out, static_cast<uint16_t>(name.size()));
    append_u16_le(out, 0);   // extra
    out.insert(out.end(), name.begin(), name.end());
    append_bytes(out, data);

    // central directory
    size_t cd_offset = out.size();
    append_u32_le(out, 0x02014b50);
    append_u16_le(out, 20);
    append_u16_le(out, 20);
    append_u16_le(out, 0);
    append_u16_le(out, 0);
    append_u16_le(out, 0);
    append_u16_le(out, 0x21);
    append_u32_le(out, crc);
    append_u32_le(out, static_cast<uint32_t>(data.size()));
    append_u32_le(out, static_cast<uint32_t>(data.size()));
    append_u16_le(out, static_cast<uint16_t>(name.size()));
    append_u16_le(out, 0);
    append_u16_le(out, 0);
    append_u16_le(out, 0);
    append_u16_le(out, 0);
    append_u32_le(out, 0);
    append_u32_le(out, 0); // local header offset
    out.insert(out.end(), name.begin(), name.end());
    size_t cd_size = out.size() - cd_offset;

    // end of central directory
    append_u32_le(out, 0x06054b50);
    append_u16_le(out, 0);
    append_u16_le(out, 0);
    append_u16_le(out, 1);
    append_u16_le(out, 1);
    append_u32_le(out, static_cast<uint32_t>(cd_size));
    append_u32_le(out, static_cast<uint32_t>(cd_offset));
    append_u16_le(out, static_cast<uint16_t>(comment_len));
    for (size_t i = 0; i < comment_len; i++) out.push_back("tithonus"[i % 8]);
    return out;
}

// Extracts the single stored entry, checking the crc.
inline Bytes zip_unwrap(const Bytes& archive) {
    ByteReader rd(archive);
    if (rd.u32_le() != 0x04034b50) throw ParseError("not a zip local header");
    rd.u16_le(); // version
    rd.u16_le(); // flags
    if (rd.u16_le() != 0) throw ParseError("only stored entries supported");
    rd.u16_le();
    rd.u16_le();
    uint32_t crc = rd.u32_le();
    uint32_t csize = rd.u32_le();
    uint32_t usize = rd.u32_le();
    if (csize != usize) throw ParseError("stored entry size mismatch");
    uint16_t name_len = rd.u16_le();
    uint16_t extra_len = rd.u16_le();
    rd.take(name_len);
    rd.take(extra_len);
    Bytes data = rd.take(csize);
    if (crc32(data) != crc) throw ParseError("zip crc mismatch");
    return data;
}

} // namespace tithonus
