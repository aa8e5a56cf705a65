#pragma once

#include <array>
#include <cstdint>
#include <cstring>

#include "tithonus/bytes.hpp"

namespace tithonus {

using Hash32 = std::array<uint8_t, 32>;
using Hash20 = std::array<uint8_t, 20>;

struct Hash32Hasher {
    size_t operator()(const Hash32& h) const {
        size_t v;
        std::memcpy(&v, h.data(), sizeof(v));
        return v;
    }
};

// ============================================================
// SHA-256
// ============================================================
namespace sha256_detail {

inline uint32_t rotr(uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

static const uint32_t K[64] = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4, 0xab1c5ed5,
    0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174,
    0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
    0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967,
    0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85,
    0xa2bfe8a1, 0xa81a664b, 0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
    0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
    0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};

struct Ctx {
    uint32_t h[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                     0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
    uint8_t block[64];
    size_t block_len = 0;
    uint64_t total = 0;

    void compress(const uint8_t* p) {
        uint32_t w[64];
        for (int i = 0; i < 16; i++)
            w[i] = uint32_t(p[4 * i]) << 24 | uint32_t(p[4 * i + 1]) << 16 |
                   uint32_t(p[4 * i + 2]) << 8 | uint32_t(p[4 * i + 3]);
        for (int i = 16; i < 64; i++) {
            uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4], f = h[5], g = h[6], hh = h[7];
        for (int i = 0; i < 64; i++) {
            uint32_t S1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            uint32_t ch = (e & f) ^ (~e & g);
            uint32_t t1 = hh + S1 + ch + K[i] + w[i];
            uint32_t S0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            uint32_t t2 = S0 + maj;
            hh = g; g = f; f = e; e = d + t1;
            d = c; c = b; b = a; a = t1 + t2;
        }
        h[0] += a; h[1] += b; h[2] += c; h[3] += d;
        h[4] += e; h[5] += f; h[6] += g; h[7] += hh;
    }

    void update(const uint8_t* data, size_t len) {
        total += len;
        while (len > 0) {
            size_t take = 64 - block_len;
            if (take > len) take = len;
            std::memcpy(block + block_len, data, take);
            block_len += take;
            data += take;
            len -= take;
            if (block_len == 64) {
                compress(block);
                block_len = 0;
            }
        }
    }

    Hash32 finish() {
        uint64_t bits = total * 8;
        uint8_t pad = 0x80;
        update(&pad, 1);
        uint8_t zero = 0;
        while (block_len != 56) update(&zero, 1);
        uint8_t lenb[8];
        for (int i = 0; i < 8; i++) lenb[i] = static_cast<uint8_t>(bits >> (56 - 8 * i));
        update(lenb, 8);
        Hash32 out{};
        for (int i = 0; i < 8; i++) {
            out[4 * i]     = static_cast<uint8_t>(h[i] >> 24);
            out[4 * i + 1] = static_cast<uint8_t>(h[i] >> 16);
            out[4 * i + 2] = static_cast<uint8_t>(h[i] >> 8);
            out[4 * i + 3] = static_cast<uint8_t>(h[i]);
        }
        return out;
    }
};

} // namespace sha256_detail

inline Hash32 sha256(const uint8_t* data, size_t len) {
    sha256_detail::Ctx ctx;
    ctx.update(data, len);
    return ctx.finish();
}
inline Hash32 sha256(const Bytes& b) { return sha256(b.data(), b.size()); }

inline Hash32 sha256d(const uint8_t* data, size_t len) {
    Hash32 h1 = sha256(data, len);
    return sha256(h1.data(), h1.size());
}
inline Hash32 sha256d(const Bytes& b) { return sha256d(b.data(), b.size()); }

// ============================================================
// RIPEMD-160
// ============================================================
namespace ripemd_detail {

inline uint32_t rotl(uint32_t x, int n) { return (x << n) | (x >> (32 - n)); }

inline uint32_t f(int j, uint32_t x, uint32_t y, uint32_t z) {
    if (j < 16) return x ^ y ^ z;
    if (j < 32) return (x & y) | (~x & z);
    if (j < 48) return (x | ~y) ^ z;
    if (j < 64) return (x & z) | (y & ~z);
    return x ^ (y | ~z);
}

static const int R1[80] = {
    0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15,
    7, 4, 13, 1, 10, 6, 15, 3, 12, 0, 9, 5, 2, 14, 11, 8,
    3, 10, 14, 4, 9, 15, 8, 1, 2, 7, 0, 6, 13, 11, 5, 12,
    1, 9, 11, 10, 0, 8, 12, 4, 13, 3, 7, 15, 14, 5, 6, 2,
    4, 0, 5, 9, 7, 12, 2, 10, 14, 1, 3, 8, 11, 6, 15, 13};
static const int R2[80] = {
    5, 14, 7, 0, 9, 2, 11, 4, 13, 6, 15, 8, 1, 10, 3, 12,
    6, 11, 3, 7, 0, 13, 5, 10, 14, 15, 8, 12, 4, 9, 1, 2,
    15, 5, 1, 3, 7, 14, 6, 9, 11, 8, 12, 2, 10, 0, 4, 13,
    8, 6, 4, 1, 3, 11, 15, 0, 5, 12, 2, 13, 9, 7, 10, 14,
    12, 15, 10, 4, 1, 5, 8, 7, 6, 2, 13, 14, 0, 3, 9, 11};
static const int S1[80] = {
    11, 14, 15, 12, 5, 8, 7, 9, 11, 13, 14, 15, 6, 7, 9, 8,
    7, 6, 8, 13, 11, 9, 7, 15, 7, 12, 15, 9, 11, 7, 13, 12,
    11, 13, 6, 7, 14, 9, 13, 15, 14, 8, 13, 6, 5, 12, 7, 5,
    11, 12, 14, 15, 14, 15, 9, 8, 9, 14, 5, 6, 8, 6, 5, 12,
    9, 15, 5, 11, 6, 8, 13, 12, 5, 12, 13, 14, 11, 8, 5, 6};
static const int S2[80] = {
    8, 9, 9, 11, 13, 15, 15, 5, 7, 7, 8, 11, 14, 14, 12, 6,
    9, 13, 15, 7, 12, 8, 9, 11, 7, 7, 12, 7, 6, 15, 13, 11,
    9, 7, 15, 11, 8, 6, 6, 14, 12, 13, 5, 14, 13, 13, 7, 5,
    15, 5, 8, 11, 14, 14, 6, 14, 6, 9, 12, 9, 12, 5, 15, 8,
    8, 5, 12, 9, 12, 5, 14, 6, 8, 13, 6, 5, 15, 13, 11, 11};

inline uint32_t k1(int j) {
    static const uint32_t K[5] = {0x00000000, 0x5a827999, 0x6ed9eba1, 0x8f1bbcdc, 0xa953fd4e};
    return K[j / 16];
}
inline uint32_t k2(int j) {
    static const uint32_t K[5] = {0x50a28be6, 0x5c4dd124, 0x6d703ef3, 0x7a6d76e9, 0x00000000};
    return K[j / 16];
}

} // namespace ripemd_detail

inline Hash20 ripemd160(const uint8_t* data, size_t len) {
    using namespace ripemd_detail;
    uint32_t h[5] = {0x67452301, 0xefcdab89, 0x98badcfe, 0x10325476, 0xc3d2e1f0};

    // pad: 0x80, zeros, 64-bit LE bit length
    Bytes m(data, data + len);
    uint64_t bits = uint64_t(len) * 8;
    m.push_back(0x80);
    while (m.size() % 64 != 56) m.push_back(0);
    for (int i = 0; i < 8; i++) m.push_back(static_cast<uint8_t>(bits >> (8 * i)));

    for (size_t off = 0; off < m.size(); off += 64) {
        uint32_t x[16];
        for (int i = 0; i < 16; i++)
            x[i] = uint32_t(m[off + 4 * i]) | uint32_t(m[off + 4 * i + 1]) << 8 |
                   uint32_t(m[off + 4 * i + 2]) << 16 | uint32_t(m[off + 4 * i + 3]) << 24;

        uint32_t a1 = h[0], b1 = h[1], c1 = h[2], d1 = h[3], e1 = h[4];
        uint32_t a2 = h[0], b2 = h[1], c2 = h[2], d2 = h[3], e2 = h[4];

        for (int j = 0; j < 80; j++) {
            uint32_t t = rotl(a1 + f(j, b1, c1, d1) + x[R1[j]] + k1(j), S1[j]) + e1;
            a1 = e1; e1 = d1; d1 = rotl(c1, 10); c1 = b1; b1 = t;

            t = rotl(a2 + f(79 - j, b2, c2, d2) + x[R2[j]] + k2(j), S2[j]) + e2;
            a2 = e2; e2 = d2; d2 = rotl(c2, 10); c2 = b2; b2 = t;
        }
        uint32_t t = h[1] + c1 + d2;
        h[1] = h[2] + d1 + e2;
        h[2] = h[3] + e1 + a2;
        h[3] = h[4] + a1 + b2;
        h[4] = h[0] + b1 + c2;
        h[0] = t;
    }

    Hash20 out{};
    for (int i = 0; i < 5; i++)
        for (int b = 0; b < 4; b++) out[4 * i + b] = static_cast<uint8_t>(h[i] >> (8 * b));
    return out;
}
inline Hash20 ripemd160(const Bytes& b) { return ripemd160(b.data(), b.size()); }

inline Hash20 hash160(const uint8_t* data, size_t len) {
    Hash32 h = sha256(data, len);
    return ripemd160(h.data(), h.size());
}
inline Hash20 hash160(const Bytes& b) { return hash160(b.data(), b.size()); }

// ============================================================
// HMAC-SHA256
// ============================================================
inline Hash32 hmac_sha256(const uint8_t* key, size_t key_len, const uint8_t* msg, size_t msg_len) {
    uint8_t k[64] = {0};
    if (key_len > 64) {
        Hash32 kh = sha256(key, key_len);
        std::memcpy(k, kh.data(), 32);
    } else {
        std::memcpy(k, key, key_len);
    }
    uint8_t ipad[64], opad[64];
    for (int i = 0; i < 64; i++) {
        ipad[i] = k[i] ^ 0x36;
        opad[i] = k[i] ^ 0x5c;
    }
    sha256_detail::Ctx inner;
    inner.update(ipad, 64);
    inner.update(msg, msg_len);
    Hash32 ih = inner.finish();
    sha256_detail::Ctx outer;
    outer.update(opad, 64);
    outer.update(ih.data(), 32);
    return outer.finish();
}
inline Hash32 hmac_sha256(const Bytes& key, const Bytes& msg) {
    return hmac_sha256(key.data(), key.size(), msg.data(), msg.size());
}

// Reversed-byte display convention for transaction ids.
inline std::string txid_hex(const Hash32& id) {
    Hash32 rev;
    for (int i = 0; i < 32; i++) rev[i] = id[31 - i];
    return to_hex(rev);
}

} // namespace tithonus
