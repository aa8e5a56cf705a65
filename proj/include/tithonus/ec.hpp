#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "tithonus/bytes.hpp"
#include "tithonus/errors.hpp"
#include "tithonus/hash.hpp"
#include "tithonus/rng.hpp"
#include "tithonus/u256.hpp"

namespace tithonus::ec {

// secp256k1: y^2 = x^3 + 7 over F_p
struct FieldTag {
    static const U256& modulus() {
        static const U256 p = U256::from_hex(
            "fffffffffffffffffffffffffffffffffffffffffffffffffffffffefffffc2f");
        return p;
    }
    static const U256& delta() { // 2^256 - p
        static const U256 d = U256::from_hex("1000003d1");
        return d;
    }
};

struct OrderTag {
    static const U256& modulus() {
        static const U256 n = U256::from_hex(
            "fffffffffffffffffffffffffffffffebaaedce6af48a03bbfd25e8cd0364141");
        return n;
    }
    static const U256& delta() { // 2^256 - n
        static const U256 d = U256::from_hex("14551231950b75fc4402da1732fc9bebf");
        return d;
    }
};

template <typename Tag>
class ModInt {
public:
    ModInt() = default;
    explicit ModInt(uint64_t v) : v_(U256::from_u64(v)) {}

    static ModInt from_u256(const U256& v) {
        ModInt r;
        r.v_ = v;
        while (r.v_ >= Tag::modulus()) {
            U256 t;
            u256_sub(t, r.v_, Tag::modulus());
            r.v_ = t;
        }
        return r;
    }
    static ModInt from_bytes_be(const uint8_t* p) { return from_u256(U256::from_bytes_be(p)); }
    static ModInt from_hex(std::string_view s) { return from_u256(U256::from_hex(s)); }

    const U256& raw() const { return v_; }
    std::array<uint8_t, 32> to_bytes_be() const { return v_.to_bytes_be(); }
    bool is_zero() const { return v_.is_zero(); }
    bool operator==(const ModInt& o) const { return v_ == o.v_; }
    bool operator!=(const ModInt& o) const { return v_ != o.v_; }

    ModInt operator+(const ModInt& o) const {
        ModInt r;
        uint64_t carry = u256_add(r.v_, v_, o.v_);
        if (carry || r.v_ >= Tag::modulus()) {
            U256 t;
            u256_sub(t, r.v_, Tag::modulus());
            r.v_ = t;
        }
        return r;
    }
    ModInt operator-(const ModInt& o) const {
        ModInt r;
        uint64_t borrow = u256_sub(r.v_, v_, o.v_);
        if (borrow) {
            U256 t;
            u256_add(t, r.v_, Tag::modulus());
            r.v_ = t;
        }
        return r;
    }
    ModInt operator*(const ModInt& o) const {
        ModInt r;
        r.v_ = u512_reduce(u256_mul_wide(v_, o.v_), Tag::modulus(), Tag::delta());
        return r;
    }
    ModInt square() const { return *this * *this; }

    ModInt neg() const {
        if (is_zero()) return *this;
        ModInt r;
        u256_sub(r.v_, Tag::modulus(), v_);
        return r;
    }

    ModInt pow(const U256& e) const {
        ModInt acc(1);
        int top = e.bit_length();
        for (int i = top - 1; i >= 0; i--) {
            acc = acc.square();
            if (e.bit(i)) acc = acc * *this;
        }
        return acc;
    }

    // modulus is prime in both instantiations, so Fermat inversion applies
    ModInt inverse() const {
        U256 e = Tag::modulus();
        U256 two = U256::from_u64(2);
        U256 t;
        u256_sub(t, e, two);
        return pow(t);
    }

private:
    U256 v_;
};

using Fe = ModInt<FieldTag>;
using Scalar = ModInt<OrderTag>;

inline Fe curve_b() { return Fe(7); }

// x^3 + 7
inline Fe curve_rhs(const Fe& x) { return x.square() * x + curve_b(); }

// Euler's criterion; zero counts as a residue.
inline bool is_quadratic_residue(const Fe& w) {
    static const U256 exp = [] {
        U256 t;
        u256_sub(t, FieldTag::modulus(), U256::one());
        return u256_shr1(t);
    }();
    Fe r = w.pow(exp);
    return r.is_zero() || r == Fe(1);
}

// Square root via exponent (p+1)/4, valid since p = 3 (mod 4). Returns
// nullopt when w is a non-residue.
inline std::optional<Fe> sqrt(const Fe& w) {
    static const U256 exp = [] {
        U256 t;
        uint64_t carry = u256_add(t, FieldTag::modulus(), U256::one());
        (void)carry; // p+1 < 2^256
        return u256_shr1(u256_shr1(t));
    }();
    Fe r = w.pow(exp);
    if (r.square() != w) return std::nullopt;
    return r;
}

// ============================================================
// Points
// ============================================================
struct Point {
    Fe x, y;
    bool inf = true;

    static Point infinity() { return Point{}; }
    static Point from_xy(const Fe& x, const Fe& y) { return Point{x, y, false}; }

    bool is_on_curve() const {
        if (inf) return true;
        return y.square() == curve_rhs(x);
    }
    bool operator==(const Point& o) const {
        if (inf || o.inf) return inf == o.inf;
        return x == o.x && y == o.y;
    }
};

inline const Point& generator() {
    static const Point g = Point::from_xy(
        Fe::from_hex("79be667ef9dcbbac55a06295ce870b07029bfcdb2dce28d959f2815b16f81798"),
        Fe::from_hex("483ada7726a3c4655da4fbfc0e1108a8fd17b448a68554199c47d08ffb10d4b8"));
    return g;
}

namespace detail {

// Jacobian coordinates: x = X/Z^2, y = Y/Z^3
struct Jac {
    Fe X, Y, Z;
    bool inf = true;

    static Jac from_affine(const Point& p) {
        if (p.inf) return Jac{};
        return Jac{p.x, p.y, Fe(1), false};
    }
};

inline Jac jac_double(const Jac& p) {
    if (p.inf || p.Y.is_zero()) return Jac{};
    Fe A = p.X.square();
    Fe B = p.Y.square();
    Fe C = B.square();
    Fe t = (p.X + B).square() - A - C;
    Fe D = t + t;
    Fe E = A + A + A;
    Fe F = E.square();
    Fe X3 = F - (D + D);
    Fe eight_c = C + C; eight_c = eight_c + eight_c; eight_c = eight_c + eight_c;
    Fe Y3 = E * (D - X3) - eight_c;
    Fe Z3 = (p.Y * p.Z); Z3 = Z3 + Z3;
    return Jac{X3, Y3, Z3, false};
}

// mixed addition with an affine point
inline Jac jac_add_affine(const Jac& p, const Point& q) {
    if (q.inf) return p;
    if (p.inf) return Jac::from_affine(q);
    Fe Z1Z1 = p.Z.square();
    Fe U2 = q.x * Z1Z1;
    Fe S2 = q.y * p.Z * Z1Z1;
    if (U2 == p.X) {
        if (S2 == p.Y) return jac_double(p);
        return Jac{}; // additive inverses
    }
    Fe H = U2 - p.X;
    Fe HH = H.square();
    Fe I = HH + HH; I = I + I;
    Fe J = H * I;
    Fe r = S2 - p.Y; r = r + r;
    Fe V = p.X * I;
    Fe X3 = r.square() - J - (V + V);
    Fe twoYJ = p.Y * J; twoYJ = twoYJ + twoYJ;
    Fe Y3 = r * (V - X3) - twoYJ;
    Fe Z3 = (p.Z + H).square() - Z1Z1 - HH;
    return Jac{X3, Y3, Z3, false};
}

inline Point jac_to_affine(const Jac& p) {
    if (p.inf) return Point::infinity();
    Fe zi = p.Z.inverse();
    Fe zi2 = zi.square();
    return Point::from_xy(p.X * zi2, p.Y * zi2 * zi);
}

// Fixed-base window table for generator multiples: 64 windows of 4 bits.
struct BaseTable {
    // table[w][k-1] = (k << (4*w)) * G, k in 1..15
    std::array<std::array<Point, 15>, 64> table;

    BaseTable() {
        Point base = generator();
        for (int w = 0; w < 64; w++) {
            Jac acc{};
            for (int k = 1; k <= 15; k++) {
                acc = jac_add_affine(acc, base);
                table[w][k - 1] = jac_to_affine(acc);
            }
            // shift base by 4 doublings
            Jac j = Jac::from_affine(base);
            for (int i = 0; i < 4; i++) j = jac_double(j);
            base = jac_to_affine(j);
        }
    }
};

inline const BaseTable& base_table() {
    static const BaseTable t;
    return t;
}

} // namespace detail

inline Point add(const Point& a, const Point& b) {
    return detail::jac_to_affine(detail::jac_add_affine(detail::Jac::from_affine(a), b));
}

// variable-base scalar multiplication
inline Point mul(const Scalar& k, const Point& p) {
    if (k.is_zero() || p.inf) return Point::infinity();
    detail::Jac acc{};
    const U256& e = k.raw();
    for (int i = e.bit_length() - 1; i >= 0; i--) {
        acc = detail::jac_double(acc);
        if (e.bit(i)) acc = detail::jac_add_affine(acc, p);
    }
    return detail::jac_to_affine(acc);
}

// fixed-base multiplication via precomputed windows
inline Point mul_base(const Scalar& k) {
    if (k.is_zero()) return Point::infinity();
    const auto& tab = detail::base_table();
    detail::Jac acc{};
    const U256& e = k.raw();
    for (int w = 0; w < 64; w++) {
        unsigned nib = (e.w[w / 16] >> (4 * (w % 16))) & 0xF;
        if (nib != 0) acc = detail::jac_add_affine(acc, tab.table[w][nib - 1]);
    }
    return detail::jac_to_affine(acc);
}

// ============================================================
// Key encoding
// ============================================================
inline std::array<uint8_t, 33> compress(const Point& p) {
    if (p.inf) throw PointAtInfinity("cannot encode");
    std::array<uint8_t, 33> out{};
    out[0] = p.y.raw().bit(0) ? 0x03 : 0x02;
    auto xb = p.x.to_bytes_be();
    std::copy(xb.begin(), xb.end(), out.begin() + 1);
    return out;
}

inline Point decompress(const uint8_t* key33) {
    if (key33[0] != 0x02 && key33[0] != 0x03) throw MalformedKey("bad prefix");
    U256 xv = U256::from_bytes_be(key33 + 1);
    if (xv >= FieldTag::modulus()) throw MalformedKey("x out of range");
    Fe x = Fe::from_u256(xv);
    auto y = sqrt(curve_rhs(x));
    if (!y) throw MalformedKey("x not on curve");
    Fe yy = *y;
    bool want_odd = key33[0] == 0x03;
    if (yy.raw().bit(0) != want_odd) yy = yy.neg();
    return Point::from_xy(x, yy);
}

inline Point decompress(const std::array<uint8_t, 33>& key) { return decompress(key.data()); }

struct KeyPair {
    Scalar sk;
    Point pk;
    std::array<uint8_t, 33> pk33;
};

inline KeyPair gen_keypair(Rng& rng) {
    for (;;) {
        auto bytes = rng.array<32>();
        U256 v = U256::from_bytes_be(bytes.data());
        if (v.is_zero() || v >= OrderTag::modulus()) continue;
        KeyPair kp;
        kp.sk = Scalar::from_u256(v);
        kp.pk = mul_base(kp.sk);
        kp.pk33 = compress(kp.pk);
        return kp;
    }
}

// ECDH shared point
inline Point ecdh(const Scalar& sk, const Point& pk_remote) {
    Point s = mul(sk, pk_remote);
    if (s.inf) throw PointAtInfinity("ecdh");
    return s;
}

// ============================================================
// ECDSA (deterministic, constant-size encoding)
// ============================================================
struct Signature {
    U256 r, s;

    // 64-byte r||s form used by certificates and directory entries
    std::array<uint8_t, 64> to_compact() const {
        std::array<uint8_t, 64> out{};
        auto rb = r.to_bytes_be();
        auto sb = s.to_bytes_be();
        std::copy(rb.begin(), rb.end(), out.begin());
        std::copy(sb.begin(), sb.end(), out.begin() + 32);
        return out;
    }
    static Signature from_compact(const uint8_t* p) {
        return Signature{U256::from_bytes_be(p), U256::from_bytes_be(p + 32)};
    }

    // DER encoding; nonce grinding in sign() pins r and s to exactly 32
    // bytes with a clear top bit, so this is always 70 bytes.
    Bytes to_der() const {
        Bytes out;
        out.push_back(0x30);
        out.push_back(68);
        out.push_back(0x02);
        out.push_back(32);
        append_bytes(out, r.to_bytes_be());
        out.push_back(0x02);
        out.push_back(32);
        append_bytes(out, s.to_bytes_be());
        return out;
    }
    static Signature from_der(const Bytes& der) {
        ByteReader rd(der);
        if (rd.u8() != 0x30) throw ParseError("der: no sequence");
        size_t total = rd.u8();
        if (total != der.size() - 2) throw ParseError("der: bad length");
        auto read_int = [&rd]() {
            if (rd.u8() != 0x02) throw ParseError("der: no int");
            size_t len = rd.u8();
            if (len == 0 || len > 33) throw ParseError("der: int length");
            Bytes raw = rd.take(len);
            size_t skip = 0;
            while (skip < raw.size() && raw[skip] == 0) skip++;
            if (raw.size() - skip > 32) throw ParseError("der: int too wide");
            std::array<uint8_t, 32> padded{};
            std::copy(raw.begin() + skip, raw.end(), padded.begin() + (32 - (raw.size() - skip)));
            return U256::from_bytes_be(padded.data());
        };
        Signature sig;
        sig.r = read_int();
        sig.s = read_int();
        return sig;
    }
};

namespace detail {

inline Scalar nonce_for(const Scalar& sk, const Hash32& msg, uint32_t attempt) {
    Bytes material;
    append_bytes(material, sk.to_bytes_be());
    append_bytes(material, msg);
    append_u32_be(material, attempt);
    for (uint32_t extra = 0;; extra++) {
        Bytes m2 = material;
        append_u32_be(m2, extra);
        U256 v = U256::from_bytes_be(sha256(m2).data());
        if (!v.is_zero() && v < OrderTag::modulus()) return Scalar::from_u256(v);
    }
}

inline bool top_byte_ok(const U256& v) {
    auto b = v.to_bytes_be();
    return b[0] != 0 && (b[0] & 0x80) == 0; // exactly 32 bytes, no sign padding
}

} // namespace detail

// Deterministic nonce; grinds until both r and s encode as exactly 32-byte
// DER integers, which keeps every signature the same size on the wire.
inline Signature sign(const Scalar& sk, const Hash32& msg_hash) {
    Scalar z = Scalar::from_bytes_be(msg_hash.data());
    static const U256 half_n = u256_shr1(OrderTag::modulus());
    for (uint32_t attempt = 0;; attempt++) {
        Scalar k = detail::nonce_for(sk, msg_hash, attempt);
        Point R = mul_base(k);
        if (R.inf) continue;
        Scalar r = Scalar::from_u256(R.x.raw());
        if (r.is_zero()) continue;
        Scalar s = k.inverse() * (z + r * sk);
        if (s.is_zero()) continue;
        if (half_n < s.raw()) { // low-S normalization
            U256 t;
            u256_sub(t, OrderTag::modulus(), s.raw());
            s = Scalar::from_u256(t);
        }
        if (!detail::top_byte_ok(r.raw()) || !detail::top_byte_ok(s.raw())) continue;
        return Signature{r.raw(), s.raw()};
    }
}

inline bool verify(const Point& pk, const Hash32& msg_hash, const Signature& sig) {
    if (sig.r.is_zero() || sig.s.is_zero()) return false;
    if (sig.r >= OrderTag::modulus() || sig.s >= OrderTag::modulus()) return false;
    Scalar r = Scalar::from_u256(sig.r);
    Scalar s = Scalar::from_u256(sig.s);
    Scalar z = Scalar::from_bytes_be(msg_hash.data());
    Scalar w = s.inverse();
    Scalar u1 = z * w;
    Scalar u2 = r * w;
    Point p = add(mul_base(u1), mul(u2, pk));
    if (p.inf) return false;
    return Scalar::from_u256(p.x.raw()) == r;
}

} // namespace tithonus::ec
