#pragma once

#include <array>
#include <cstdint>
#include <cstring>

#include "tithonus/bytes.hpp"
#include "tithonus/errors.hpp"

namespace tithonus::rijndael {

// Rijndael with a 224-bit block (Nb = 7) and a 256-bit key (Nk = 8, 14
// rounds), the cipher geometry the protocol messages are built around.
// The state lives in a flat 28-byte buffer in column-major byte order.

constexpr size_t BLOCK_BYTES = 28;
constexpr size_t KEY_BYTES = 32;
constexpr int NB = 7;
constexpr int NK = 8;
constexpr int NR = 14; // max(NB, NK) + 6

// row shift offsets for Nb = 7
constexpr int SHIFT_ROW1 = 1;
constexpr int SHIFT_ROW2 = 2;
constexpr int SHIFT_ROW3 = 4;

namespace detail {

static const uint8_t SBOX[256] = {
    0x63, 0x7c, 0x77, 0x7b, 0xf2, 0x6b, 0x6f, 0xc5, 0x30, 0x01, 0x67, 0x2b, 0xfe, 0xd7, 0xab, 0x76,
    0xca, 0x82, 0xc9, 0x7d, 0xfa, 0x59, 0x47, 0xf0, 0xad, 0xd4, 0xa2, 0xaf, 0x9c, 0xa4, 0x72, 0xc0,
    0xb7, 0xfd, 0x93, 0x26, 0x36, 0x3f, 0xf7, 0xcc, 0x34, 0xa5, 0xe5, 0xf1, 0x71, 0xd8, 0x31, 0x15,
    0x04, 0xc7, 0x23, 0xc3, 0x18, 0x96, 0x05, 0x9a, 0x07, 0x12, 0x80, 0xe2, 0xeb, 0x27, 0xb2, 0x75,
    0x09, 0x83, 0x2c, 0x1a, 0x1b, 0x6e, 0x5a, 0xa0, 0x52, 0x3b, 0xd6, 0xb3, 0x29, 0xe3, 0x2f, 0x84,
    0x53, 0xd1, 0x00, 0xed, 0x20, 0xfc, 0xb1, 0x5b, 0x6a, 0xcb, 0xbe, 0x39, 0x4a, 0x4c, 0x58, 0xcf,
    0xd0, 0xef, 0xaa, 0xfb, 0x43, 0x4d, 0x33, 0x85, 0x45, 0xf9, 0x02, 0x7f, 0x50, 0x3c, 0x9f, 0xa8,
    0x51, 0xa3, 0x40, 0x8f, 0x92, 0x9d, 0x38, 0xf5, 0xbc, 0xb6, 0xda, 0x21, 0x10, 0xff, 0xf3, 0xd2,
    0xcd, 0x0c, 0x13, 0xec, 0x5f, 0x97, 0x44, 0x17, 0xc4, 0xa7, 0x7e, 0x3d, 0x64, 0x5d, 0x19, 0x73,
    0x60, 0x81, 0x4f, 0xdc, 0x22, 0x2a, 0x90, 0x88, 0x46, 0xee, 0xb8, 0x14, 0xde, 0x5e, 0x0b, 0xdb,
    0xe0, 0x32, 0x3a, 0x0a, 0x49, 0x06, 0x24, 0x5c, 0xc2, 0xd3, 0xac, 0x62, 0x91, 0x95, 0xe4, 0x79,
    0xe7, 0xc8, 0x37, 0x6d, 0x8d, 0xd5, 0x4e, 0xa9, 0x6c, 0x56, 0xf4, 0xea, 0x65, 0x7a, 0xae, 0x08,
    0xba, 0x78, 0x25, 0x2e, 0x1c, 0xa6, 0xb4, 0xc6, 0xe8, 0xdd, 0x74, 0x1f, 0x4b, 0xbd, 0x8b, 0x8a,
    0x70, 0x3e, 0xb5, 0x66, 0x48, 0x03, 0xf6, 0x0e, 0x61, 0x35, 0x57, 0xb9, 0x86, 0xc1, 0x1d, 0x9e,
    0xe1, 0xf8, 0x98, 0x11, 0x69, 0xd9, 0x8e, 0x94, 0x9b, 0x1e, 0x87, 0xe9, 0xce, 0x55, 0x28, 0xdf,
    0x8c, 0xa1, 0x89, 0x0d, 0xbf, 0xe6, 0x42, 0x68, 0x41, 0x99, 0x2d, 0x0f, 0xb0, 0x54, 0xbb, 0x16};

inline const uint8_t* inv_sbox() {
    static const auto table = [] {
        std::array<uint8_t, 256> t{};
        for (int i = 0; i < 256; i++) t[SBOX[i]] = static_cast<uint8_t>(i);
        return t;
    }();
    return table.data();
}

inline uint8_t xt(uint8_t b) { return static_cast<uint8_t>((b << 1) ^ ((b >> 7) * 0x1b)); }

inline uint8_t mul(uint8_t a, uint8_t b) {
    uint8_t r = 0;
    for (; b; b >>= 1) {
        if (b & 1) r ^= a;
        a = xt(a);
    }
    return r;
}

// round keys as 28-byte slabs, one per round
struct KeySchedule {
    std::array<std::array<uint8_t, BLOCK_BYTES>, NR + 1> rk{};
};

inline KeySchedule expand_key(const std::array<uint8_t, KEY_BYTES>& key) {
    constexpr int total_words = NB * (NR + 1); // 105
    uint8_t w[total_words][4];
    std::memcpy(w, key.data(), KEY_BYTES);
    uint8_t rcon = 0x01;
    for (int i = NK; i < total_words; i++) {
        uint8_t t[4] = {w[i - 1][0], w[i - 1][1], w[i - 1][2], w[i - 1][3]};
        if (i % NK == 0) {
            uint8_t rot = t[0];
            t[0] = static_cast<uint8_t>(SBOX[t[1]] ^ rcon);
            t[1] = SBOX[t[2]];
            t[2] = SBOX[t[3]];
            t[3] = SBOX[rot];
            rcon = xt(rcon);
        } else if (i % NK == 4) { // Nk > 6 rule
            for (auto& b : t) b = SBOX[b];
        }
        for (int b = 0; b < 4; b++) w[i][b] = static_cast<uint8_t>(w[i - NK][b] ^ t[b]);
    }
    KeySchedule ks;
    for (int round = 0; round <= NR; round++)
        std::memcpy(ks.rk[round].data(), w[round * NB], BLOCK_BYTES);
    return ks;
}

inline void add_round_key(uint8_t* st, const uint8_t* rk) {
    for (size_t i = 0; i < BLOCK_BYTES; i++) st[i] ^= rk[i];
}

// byte at (row r, column c) sits at st[4*c + r]
inline void shift_rows_fwd(uint8_t* st) {
    uint8_t tmp[BLOCK_BYTES];
    std::memcpy(tmp, st, BLOCK_BYTES);
    const int shift[4] = {0, SHIFT_ROW1, SHIFT_ROW2, SHIFT_ROW3};
    for (int r = 1; r < 4; r++)
        for (int c = 0; c < NB; c++) st[4 * c + r] = tmp[4 * ((c + shift[r]) % NB) + r];
}

inline void shift_rows_inv(uint8_t* st) {
    uint8_t tmp[BLOCK_BYTES];
    std::memcpy(tmp, st, BLOCK_BYTES);
    const int shift[4] = {0, SHIFT_ROW1, SHIFT_ROW2, SHIFT_ROW3};
    for (int r = 1; r < 4; r++)
        for (int c = 0; c < NB; c++) st[4 * ((c + shift[r]) % NB) + r] = tmp[4 * c + r];
}

inline void mix_columns_fwd(uint8_t* st) {
    for (int c = 0; c < NB; c++) {
        uint8_t* col = st + 4 * c;
        uint8_t a0 = col[0], a1 = col[1], a2 = col[2], a3 = col[3];
        col[0] = static_cast<uint8_t>(xt(a0) ^ xt(a1) ^ a1 ^ a2 ^ a3);
        col[1] = static_cast<uint8_t>(a0 ^ xt(a1) ^ xt(a2) ^ a2 ^ a3);
        col[2] = static_cast<uint8_t>(a0 ^ a1 ^ xt(a2) ^ xt(a3) ^ a3);
        col[3] = static_cast<uint8_t>(xt(a0) ^ a0 ^ a1 ^ a2 ^ xt(a3));
    }
}

inline void mix_columns_inv(uint8_t* st) {
    for (int c = 0; c < NB; c++) {
        uint8_t* col = st + 4 * c;
        uint8_t a0 = col[0], a1 = col[1], a2 = col[2], a3 = col[3];
        col[0] = static_cast<uint8_t>(mul(a0, 14) ^ mul(a1, 11) ^ mul(a2, 13) ^ mul(a3, 9));
        col[1] = static_cast<uint8_t>(mul(a0, 9) ^ mul(a1, 14) ^ mul(a2, 11) ^ mul(a3, 13));
        col[2] = static_cast<uint8_t>(mul(a0, 13) ^ mul(a1, 9) ^ mul(a2, 14) ^ mul(a3, 11));
        col[3] = static_cast<uint8_t>(mul(a0, 11) ^ mul(a1, 13) ^ mul(a2, 9) ^ mul(a3, 14));
    }
}

} // namespace detail

class Cipher {
public:
    explicit Cipher(const std::array<uint8_t, KEY_BYTES>& key) : ks_(detail::expand_key(key)) {}

    void encrypt_block(const uint8_t* in, uint8_t* out) const {
        uint8_t st[BLOCK_BYTES];
        std::memcpy(st, in, BLOCK_BYTES);
        detail::add_round_key(st, ks_.rk[0].data());
        for (int round = 1; round < NR; round++) {
            for (auto& b : st) b = detail::SBOX[b];
            detail::shift_rows_fwd(st);
            detail::mix_columns_fwd(st);
            detail::add_round_key(st, ks_.rk[round].data());
        }
        for (auto& b : st) b = detail::SBOX[b];
        detail::shift_rows_fwd(st);
        detail::add_round_key(st, ks_.rk[NR].data());
        std::memcpy(out, st, BLOCK_BYTES);
    }

    void decrypt_block(const uint8_t* in, uint8_t* out) const {
        const uint8_t* ibox = detail::inv_sbox();
        uint8_t st[BLOCK_BYTES];
        std::memcpy(st, in, BLOCK_BYTES);
        detail::add_round_key(st, ks_.rk[NR].data());
        for (int round = NR - 1; round >= 1; round--) {
            detail::shift_rows_inv(st);
            for (auto& b : st) b = ibox[b];
            detail::add_round_key(st, ks_.rk[round].data());
            detail::mix_columns_inv(st);
        }
        detail::shift_rows_inv(st);
        for (auto& b : st) b = ibox[b];
        detail::add_round_key(st, ks_.rk[0].data());
        std::memcpy(out, st, BLOCK_BYTES);
    }

private:
    detail::KeySchedule ks_;
};

// CBC over whole 28-byte blocks; the protocol messages are exact multiples,
// so there is no padding scheme.
inline Bytes cbc_encrypt(const std::array<uint8_t, KEY_BYTES>& key,
                         const std::array<uint8_t, BLOCK_BYTES>& iv, const Bytes& plaintext) {
    if (plaintext.size() % BLOCK_BYTES != 0) throw BadLength("plaintext must be 28-byte blocks");
    Cipher c(key);
    Bytes out(plaintext.size());
    uint8_t chain[BLOCK_BYTES];
    std::memcpy(chain, iv.data(), BLOCK_BYTES);
    for (size_t off = 0; off < plaintext.size(); off += BLOCK_BYTES) {
        uint8_t blk[BLOCK_BYTES];
        for (size_t i = 0; i < BLOCK_BYTES; i++) blk[i] = plaintext[off + i] ^ chain[i];
        c.encrypt_block(blk, out.data() + off);
        std::memcpy(chain, out.data() + off, BLOCK_BYTES);
    }
    return out;
}

inline Bytes cbc_decrypt(const std::array<uint8_t, KEY_BYTES>& key,
                         const std::array<uint8_t, BLOCK_BYTES>& iv, const Bytes& ciphertext) {
    if (ciphertext.size() % BLOCK_BYTES != 0) throw BadLength("ciphertext must be 28-byte blocks");
    Cipher c(key);
    Bytes out(ciphertext.size());
    uint8_t chain[BLOCK_BYTES];
    std::memcpy(chain, iv.data(), BLOCK_BYTES);
    for (size_t off = 0; off < ciphertext.size(); off += BLOCK_BYTES) {
        uint8_t blk[BLOCK_BYTES];
        c.decrypt_block(ciphertext.data() + off, blk);
        for (size_t i = 0; i < BLOCK_BYTES; i++) out[off + i] = blk[i] ^ chain[i];
        std::memcpy(chain, ciphertext.data() + off, BLOCK_BYTES);
    }
    return out;
}

// Counter mode for arbitrary lengths: keystream block = E(nonce || counter),
// nonce in the leading bytes, 8-byte big-endian counter at the tail.
inline Bytes ctr_crypt(const std::array<uint8_t, KEY_BYTES>& key, const Bytes& nonce,
                       const Bytes& data) {
    if (nonce.size() > BLOCK_BYTES - 8) throw BadLength("nonce too long");
    Cipher c(key);
    Bytes out(data.size());
    uint8_t ctr_block[BLOCK_BYTES] = {0};
    std::memcpy(ctr_block, nonce.data(), nonce.size());
    uint64_t counter = 0;
    for (size_t off = 0; off < data.size(); off += BLOCK_BYTES, counter++) {
        for (int i = 0; i < 8; i++)
            ctr_block[BLOCK_BYTES - 8 + i] = static_cast<uint8_t>(counter >> (56 - 8 * i));
        uint8_t ks[BLOCK_BYTES];
        c.encrypt_block(ctr_block, ks);
        size_t n = std::min(BLOCK_BYTES, data.size() - off);
        for (size_t i = 0; i < n; i++) out[off + i] = data[off + i] ^ ks[i];
    }
    return out;
}

} // namespace tithonus::rijndael
