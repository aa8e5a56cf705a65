#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "tithonus/bytes.hpp"
#include "tithonus/hash.hpp"

namespace tithonus {

// Deterministic random source. All randomness in the stack flows through
// explicit Rng instances so seeded runs replay bit-for-bit; bounded draws
// avoid std::uniform_int_distribution, whose output is not portable.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t u64() { return eng_(); }
    uint32_t u32() { return static_cast<uint32_t>(eng_() >> 32); }
    uint8_t byte() { return static_cast<uint8_t>(eng_() >> 56); }

    // uniform in [0, bound), bound >= 1
    uint64_t below(uint64_t bound) {
        return static_cast<uint64_t>((static_cast<unsigned __int128>(u64()) * bound) >> 64);
    }

    bool coin() { return (u64() & 1) != 0; }

    Bytes bytes(size_t n) {
        Bytes out(n);
        for (size_t i = 0; i < n; i++) out[i] = byte();
        return out;
    }

    template <size_t N>
    std::array<uint8_t, N> array() {
        std::array<uint8_t, N> out{};
        for (size_t i = 0; i < N; i++) out[i] = byte();
        return out;
    }

    // Independent child stream, stable under a label.
    Rng fork(std::string_view label) {
        Bytes seed_material;
        append_u64_le(seed_material, u64());
        seed_material.insert(seed_material.end(), label.begin(), label.end());
        Hash32 h = sha256(seed_material);
        uint64_t s = 0;
        for (int i = 0; i < 8; i++) s = (s << 8) | h[i];
        return Rng(s);
    }

private:
    std::mt19937_64 eng_;
};

} // namespace tithonus
