#pragma once

// Independent textbook Rijndael, written against the cipher specification
// with the state as an explicit 4 x Nb matrix. Test oracle only: the library
// implementation must reproduce these outputs bit for bit.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace rijndael_ref {

using Byte = uint8_t;

inline Byte xtime(Byte b) { return static_cast<Byte>((b << 1) ^ ((b & 0x80) ? 0x1b : 0x00)); }

inline Byte gmul(Byte a, Byte b) {
    Byte r = 0;
    while (b) {
        if (b & 1) r ^= a;
        a = xtime(a);
        b >>= 1;
    }
    return r;
}

inline const std::array<Byte, 256>& sbox() {
    static const std::array<Byte, 256> box = [] {
        // multiplicative inverse followed by the affine transform
        std::array<Byte, 256> inv{};
        for (int a = 1; a < 256; a++)
            for (int b = 1; b < 256; b++)
                if (gmul(static_cast<Byte>(a), static_cast<Byte>(b)) == 1) inv[a] = static_cast<Byte>(b);
        std::array<Byte, 256> out{};
        for (int i = 0; i < 256; i++) {
            Byte x = inv[i];
            Byte y = x;
            for (int s = 0; s < 4; s++) {
                y = static_cast<Byte>((y << 1) | (y >> 7));
                x ^= y;
            }
            out[i] = x ^ 0x63;
        }
        return out;
    }();
    return box;
}

inline const std::array<Byte, 256>& inv_sbox() {
    static const std::array<Byte, 256> box = [] {
        std::array<Byte, 256> out{};
        for (int i = 0; i < 256; i++) out[sbox()[i]] = static_cast<Byte>(i);
        return out;
    }();
    return box;
}

struct Params {
    int nb; // block words
    int nk; // key words
    int nr; // rounds
    int c1, c2, c3; // shift offsets for rows 1..3
};

inline Params params_for(int block_bytes, int key_bytes) {
    Params p{};
    p.nb = block_bytes / 4;
    p.nk = key_bytes / 4;
    if (p.nb < 4 || p.nb > 8 || p.nk < 4 || p.nk > 8)
        throw std::runtime_error("rijndael_ref: unsupported sizes");
    p.nr = (p.nb > p.nk ? p.nb : p.nk) + 6;
    p.c1 = 1;
    p.c2 = (p.nb == 8) ? 3 : 2;
    p.c3 = (p.nb >= 7) ? 4 : 3;
    return p;
}

using Word = std::array<Byte, 4>;

inline std::vector<Word> key_schedule(const Params& p, const std::vector<Byte>& key) {
    std::vector<Word> w(static_cast<size_t>(p.nb) * (p.nr + 1));
    for (int i = 0; i < p.nk; i++)
        w[i] = {key[4 * i], key[4 * i + 1], key[4 * i + 2], key[4 * i + 3]};
    Byte rcon = 0x01;
    for (size_t i = p.nk; i < w.size(); i++) {
        Word t = w[i - 1];
        if (static_cast<int>(i) % p.nk == 0) {
            Word rot = {t[1], t[2], t[3], t[0]};
            for (auto& b : rot) b = sbox()[b];
            rot[0] ^= rcon;
            rcon = xtime(rcon);
            t = rot;
        } else if (p.nk > 6 && static_cast<int>(i) % p.nk == 4) {
            for (auto& b : t) b = sbox()[b];
        }
        for (int b = 0; b < 4; b++) w[i][b] = w[i - p.nk][b] ^ t[b];
    }
    return w;
}

struct State {
    // state[row][col]
    std::array<std::array<Byte, 8>, 4> m{};
};

inline State load_state(const Params& p, const Byte* in) {
    State s;
    for (int c = 0; c < p.nb; c++)
        for (int r = 0; r < 4; r++) s.m[r][c] = in[4 * c + r];
    return s;
}

inline void store_state(const Params& p, const State& s, Byte* out) {
    for (int c = 0; c < p.nb; c++)
        for (int r = 0; r < 4; r++) out[4 * c + r] = s.m[r][c];
}

inline void add_round_key(const Params& p, State& s, const std::vector<Word>& w, int round) {
    for (int c = 0; c < p.nb; c++)
        for (int r = 0; r < 4; r++) s.m[r][c] ^= w[static_cast<size_t>(round) * p.nb + c][r];
}

inline void sub_bytes(const Params& p, State& s, bool inverse) {
    const auto& box = inverse ? inv_sbox() : sbox();
    for (int r = 0; r < 4; r++)
        for (int c = 0; c < p.nb; c++) s.m[r][c] = box[s.m[r][c]];
}

inline void shift_rows(const Params& p, State& s, bool inverse) {
    const int shifts[4] = {0, p.c1, p.c2, p.c3};
    for (int r = 1; r < 4; r++) {
        std::array<Byte, 8> row{};
        for (int c = 0; c < p.nb; c++) {
            int src = inverse ? (c - shifts[r] % p.nb + p.nb) % p.nb : (c + shifts[r]) % p.nb;
            row[c] = s.m[r][src];
        }
        for (int c = 0; c < p.nb; c++) s.m[r][c] = row[c];
    }
}

inline void mix_columns(const Params& p, State& s, bool inverse) {
    static const Byte fwd[4][4] = {{2, 3, 1, 1}, {1, 2, 3, 1}, {1, 1, 2, 3}, {3, 1, 1, 2}};
    static const Byte inv[4][4] = {{14, 11, 13, 9}, {9, 14, 11, 13}, {13, 9, 14, 11}, {11, 13, 9, 14}};
    const auto& mat = inverse ? inv : fwd;
    for (int c = 0; c < p.nb; c++) {
        Byte col[4];
        for (int r = 0; r < 4; r++) col[r] = s.m[r][c];
        for (int r = 0; r < 4; r++) {
            Byte acc = 0;
            for (int k = 0; k < 4; k++) acc ^= gmul(mat[r][k], col[k]);
            s.m[r][c] = acc;
        }
    }
}

inline void encrypt_block(int block_bytes, const std::vector<Byte>& key, const Byte* in, Byte* out) {
    Params p = params_for(block_bytes, static_cast<int>(key.size()));
    auto w = key_schedule(p, key);
    State s = load_state(p, in);
    add_round_key(p, s, w, 0);
    for (int round = 1; round < p.nr; round++) {
        sub_bytes(p, s, false);
        shift_rows(p, s, false);
        mix_columns(p, s, false);
        add_round_key(p, s, w, round);
    }
    sub_bytes(p, s, false);
    shift_rows(p, s, false);
    add_round_key(p, s, w, p.nr);
    store_state(p, s, out);
}

inline void decrypt_block(int block_bytes, const std::vector<Byte>& key, const Byte* in, Byte* out) {
    Params p = params_for(block_bytes, static_cast<int>(key.size()));
    auto w = key_schedule(p, key);
    State s = load_state(p, in);
    add_round_key(p, s, w, p.nr);
    for (int round = p.nr - 1; round >= 1; round--) {
        shift_rows(p, s, true);
        sub_bytes(p, s, true);
        add_round_key(p, s, w, round);
        mix_columns(p, s, true);
    }
    shift_rows(p, s, true);
    sub_bytes(p, s, true);
    add_round_key(p, s, w, 0);
    store_state(p, s, out);
}

} // namespace rijndael_ref
