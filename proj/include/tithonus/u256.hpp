#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "tithonus/bytes.hpp"

namespace tithonus {

// Fixed-size 256-bit unsigned integer, four 64-bit limbs, little-endian limb
// order. Sized for secp256k1 work at desk scale; not constant-time.
struct U256 {
    std::array<uint64_t, 4> w{0, 0, 0, 0};

    static U256 zero() { return U256{}; }
    static U256 one() { return U256{{1, 0, 0, 0}}; }

    static U256 from_u64(uint64_t v) { return U256{{v, 0, 0, 0}}; }

    static U256 from_hex(std::string_view s) {
        if (s.size() > 64) throw std::runtime_error("U256: hex too long");
        U256 r;
        for (char c : s) {
            int nib = hex_nibble(c);
            if (nib < 0) throw std::runtime_error("U256: bad hex digit");
            // r = r*16 + nib
            uint64_t carry = static_cast<uint64_t>(nib);
            for (int i = 0; i < 4; i++) {
                uint64_t hi = r.w[i] >> 60;
                r.w[i] = (r.w[i] << 4) | carry;
                carry = hi;
            }
        }
        return r;
    }

    static U256 from_bytes_be(const uint8_t* p) {
        U256 r;
        for (int i = 0; i < 4; i++) {
            uint64_t v = 0;
            for (int b = 0; b < 8; b++) v = (v << 8) | p[8 * i + b];
            r.w[3 - i] = v;
        }
        return r;
    }
    static U256 from_bytes_be(const std::array<uint8_t, 32>& a) { return from_bytes_be(a.data()); }

    std::array<uint8_t, 32> to_bytes_be() const {
        std::array<uint8_t, 32> out{};
        for (int i = 0; i < 4; i++) {
            uint64_t v = w[3 - i];
            for (int b = 0; b < 8; b++) out[8 * i + b] = static_cast<uint8_t>(v >> (56 - 8 * b));
        }
        return out;
    }

    std::string to_hex() const {
        auto b = to_bytes_be();
        return tithonus::to_hex(b.data(), 32);
    }

    bool is_zero() const { return (w[0] | w[1] | w[2] | w[3]) == 0; }

    bool bit(int i) const { return (w[i >> 6] >> (i & 63)) & 1; }

    int bit_length() const {
        for (int i = 3; i >= 0; i--) {
            if (w[i] != 0) return 64 * i + (64 - __builtin_clzll(w[i]));
        }
        return 0;
    }

    bool operator==(const U256& o) const { return w == o.w; }
    bool operator!=(const U256& o) const { return w != o.w; }
};

inline int u256_cmp(const U256& a, const U256& b) {
    for (int i = 3; i >= 0; i--) {
        if (a.w[i] < b.w[i]) return -1;
        if (a.w[i] > b.w[i]) return 1;
    }
    return 0;
}

inline bool operator<(const U256& a, const U256& b) { return u256_cmp(a, b) < 0; }
inline bool operator>=(const U256& a, const U256& b) { return u256_cmp(a, b) >= 0; }

// returns carry out
inline uint64_t u256_add(U256& r, const U256& a, const U256& b) {
    unsigned __int128 carry = 0;
    for (int i = 0; i < 4; i++) {
        unsigned __int128 s = static_cast<unsigned __int128>(a.w[i]) + b.w[i] + carry;
        r.w[i] = static_cast<uint64_t>(s);
        carry = s >> 64;
    }
    return static_cast<uint64_t>(carry);
}

// returns borrow out
inline uint64_t u256_sub(U256& r, const U256& a, const U256& b) {
    unsigned __int128 borrow = 0;
    for (int i = 0; i < 4; i++) {
        unsigned __int128 d = static_cast<unsigned __int128>(a.w[i]) - b.w[i] - borrow;
        r.w[i] = static_cast<uint64_t>(d);
        borrow = (d >> 64) & 1;
    }
    return static_cast<uint64_t>(borrow);
}

inline U256 u256_shr1(const U256& a) {
    U256 r;
    for (int i = 0; i < 4; i++) {
        r.w[i] = a.w[i] >> 1;
        if (i < 3) r.w[i] |= a.w[i + 1] << 63;
    }
    return r;
}

struct U512 {
    std::array<uint64_t, 8> w{};

    U256 low() const { return U256{{w[0], w[1], w[2], w[3]}}; }
    U256 high() const { return U256{{w[4], w[5], w[6], w[7]}}; }
    bool high_is_zero() const { return (w[4] | w[5] | w[6] | w[7]) == 0; }
};

inline U512 u256_mul_wide(const U256& a, const U256& b) {
    U512 r;
    for (int i = 0; i < 4; i++) {
        unsigned __int128 carry = 0;
        for (int j = 0; j < 4; j++) {
            unsigned __int128 cur = static_cast<unsigned __int128>(a.w[i]) * b.w[j] +
                                    r.w[i + j] + carry;
            r.w[i + j] = static_cast<uint64_t>(cur);
            carry = cur >> 64;
        }
        r.w[i + 4] = static_cast<uint64_t>(carry);
    }
    return r;
}

// r = a + b over 512 bits (carry beyond bit 512 cannot occur for our callers)
inline void u512_add(U512& r, const U512& a, const U512& b) {
    unsigned __int128 carry = 0;
    for (int i = 0; i < 8; i++) {
        unsigned __int128 s = static_cast<unsigned __int128>(a.w[i]) + b.w[i] + carry;
        r.w[i] = static_cast<uint64_t>(s);
        carry = s >> 64;
    }
}

// Reduction modulo m = 2^256 - delta by repeated folding of the high half.
// Converges in a few rounds for the secp256k1 field prime and group order.
inline U256 u512_reduce(U512 v, const U256& m, const U256& delta) {
    while (!v.high_is_zero()) {
        U512 folded = u256_mul_wide(v.high(), delta);
        U512 lowpart{};
        U256 lo = v.low();
        lowpart.w[0] = lo.w[0]; lowpart.w[1] = lo.w[1];
        lowpart.w[2] = lo.w[2]; lowpart.w[3] = lo.w[3];
        u512_add(v, folded, lowpart);
    }
    U256 r = v.low();
    while (r >= m) {
        U256 t;
        u256_sub(t, r, m);
        r = t;
    }
    return r;
}

} // namespace tithonus
