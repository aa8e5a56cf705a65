#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "tithonus/bytes.hpp"
#include "tithonus/errors.hpp"
#include "tithonus/hash.hpp"
#include "tithonus/rijndael.hpp"

namespace tithonus {

// ============================================================
// Data units: typed, sequence-numbered fragments
// ============================================================
enum class UnitType : uint8_t {
    DATA = 0x01,
    DIR = 0x02,
    CERT = 0x03,
    CREG = 0x04,
    REQ = 0x05,
    RESP = 0x06,
};

constexpr size_t UNIT_HEADER_FIRST = 9; // type + seq + len
constexpr size_t UNIT_HEADER_FOLLOW = 5; // type + seq

struct DataUnit {
    UnitType unit_type = UnitType::DATA;
    uint32_t seq = 0;
    std::optional<uint32_t> len; // unit count, first unit only
    Bytes body;

    bool is_first() const { return len.has_value(); }

    Bytes encode() const {
        Bytes out;
        out.push_back(static_cast<uint8_t>(unit_type));
        append_u32_be(out, seq);
        if (len) append_u32_be(out, *len);
        append_bytes(out, body);
        return out;
    }

    static DataUnit decode_first(const Bytes& raw) {
        if (raw.size() < UNIT_HEADER_FIRST) throw ParseError("first unit too short");
        ByteReader rd(raw);
        DataUnit u;
        u.unit_type = static_cast<UnitType>(rd.u8());
        u.seq = rd.u32_be();
        u.len = rd.u32_be();
        u.body = rd.take(rd.remaining());
        return u;
    }

    static DataUnit decode_follow(const Bytes& raw) {
        if (raw.size() < UNIT_HEADER_FOLLOW) throw ParseError("unit too short");
        ByteReader rd(raw);
        DataUnit u;
        u.unit_type = static_cast<UnitType>(rd.u8());
        u.seq = rd.u32_be();
        u.body = rd.take(rd.remaining());
        return u;
    }
};

// Monotone global sequence source; one contiguous block per content, so
// interleaved contents never share a seq value.
class SeqAllocator {
public:
    explicit SeqAllocator(uint32_t start = 1) : next_(start) {}
    SeqAllocator(const SeqAllocator& o) : next_(o.peek()) {}
    SeqAllocator& operator=(const SeqAllocator& o) {
        next_.store(o.peek());
        return *this;
    }

    uint32_t allocate(uint32_t count) { return next_.fetch_add(count); }
    uint32_t peek() const { return next_.load(); }
    void reset(uint32_t next) { next_.store(next); }

private:
    std::atomic<uint32_t> next_;
};

// Per-unit body keystream: counter mode keyed by the unit's seq, so any unit
// decrypts independently of the others.
struct StreamKey {
    std::array<uint8_t, 32> key{};
};

inline Bytes crypt_unit_body(const StreamKey& k, uint32_t seq, const Bytes& body) {
    Bytes nonce;
    append_u32_be(nonce, seq);
    return rijndael::ctr_crypt(k.key, nonce, body);
}

inline std::vector<DataUnit> fragment(const Bytes& content, UnitType type,
                                      size_t carrier_capacity, SeqAllocator& seqs,
                                      const std::optional<StreamKey>& key = std::nullopt) {
    if (content.empty()) throw EmptyContent();
    if (carrier_capacity <= UNIT_HEADER_FIRST)
        throw BadLength("carrier capacity must exceed the 9-byte header");

    size_t first_cap = carrier_capacity - UNIT_HEADER_FIRST;
    size_t follow_cap = carrier_capacity - UNIT_HEADER_FOLLOW;
    uint32_t count = 1;
    if (content.size() > first_cap)
        count += static_cast<uint32_t>((content.size() - first_cap + follow_cap - 1) / follow_cap);

    uint32_t first_seq = seqs.allocate(count);
    std::vector<DataUnit> units;
    size_t pos = 0;
    for (uint32_t i = 0; i < count; i++) {
        size_t cap = (i == 0) ? first_cap : follow_cap;
        size_t n = std::min(cap, content.size() - pos);
        DataUnit u;
        u.unit_type = type;
        u.seq = first_seq + i;
        if (i == 0) u.len = count;
        u.body.assign(content.begin() + pos, content.begin() + pos + n);
        if (key) u.body = crypt_unit_body(*key, u.seq, u.body);
        pos += n;
        units.push_back(std::move(u));
    }
    return units;
}

// ============================================================
// Reassembly
// ============================================================
struct StreamCursor {
    uint32_t first_seq = 0;
    uint32_t len = 0;
    std::map<uint32_t, Bytes> collected; // seq -> body (still encrypted if keyed)
    bool complete = false;

    static StreamCursor from_first(const DataUnit& first) {
        if (!first.is_first()) throw ParseError("unit carries no len");
        if (*first.len == 0) throw ParseError("zero-length stream");
        StreamCursor c;
        c.first_seq = first.seq;
        c.len = *first.len;
        c.collected[first.seq] = first.body;
        c.complete = (c.len == 1);
        return c;
    }

    bool wants(uint32_t seq) const {
        return seq >= first_seq && seq < first_seq + len && !collected.count(seq);
    }
};

// Accepts units in any order; duplicates are idempotent, and the same seq
// with a different body is a conflict.
inline std::optional<Bytes> assemble(StreamCursor& cursor, const DataUnit& candidate,
                                     const std::optional<StreamKey>& key = std::nullopt) {
    uint32_t seq = candidate.seq;
    if (seq >= cursor.first_seq && seq < cursor.first_seq + cursor.len) {
        auto it = cursor.collected.find(seq);
        if (it != cursor.collected.end()) {
            if (it->second != candidate.body) throw SequenceConflict(std::to_string(seq));
        } else {
            cursor.collected[seq] = candidate.body;
        }
    }
    if (cursor.collected.size() == cursor.len) {
        cursor.complete = true;
        Bytes content;
        for (auto& [s, body] : cursor.collected) {
            if (key) {
                Bytes plain = crypt_unit_body(*key, s, body);
                append_bytes(content, plain);
            } else {
                append_bytes(content, body);
            }
        }
        return content;
    }
    return std::nullopt;
}

// A transaction source yields (txid, carried payload) pairs in scan order.
using PayloadSource = std::vector<std::pair<Hash32, Bytes>>;

inline Bytes scan(const Hash32& leading_txid, const PayloadSource& source,
                  const std::optional<StreamKey>& key = std::nullopt) {
    std::optional<StreamCursor> cursor;
    for (const auto& [id, payload] : source) {
        if (id == leading_txid) {
            cursor = StreamCursor::from_first(DataUnit::decode_first(payload));
            break;
        }
    }
    if (!cursor) throw MissingLeadingTx(txid_hex(leading_txid));
    if (cursor->complete) {
        const Bytes& body = cursor->collected[cursor->first_seq];
        return key ? crypt_unit_body(*key, cursor->first_seq, body) : body;
    }
    for (const auto& [id, payload] : source) {
        if (id == leading_txid) continue;
        DataUnit u;
        try {
            u = DataUnit::decode_follow(payload);
        } catch (const std::exception&) {
            continue;
        }
        if (!cursor->wants(u.seq)) continue;
        auto out = assemble(*cursor, u, key);
        if (out) return *out;
    }
    throw IncompleteStream("have " + std::to_string(cursor->collected.size()) + " of " +
                           std::to_string(cursor->len) + " units");
}

} // namespace tithonus
