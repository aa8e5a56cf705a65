#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tithonus/bytes.hpp"
#include "tithonus/errors.hpp"
#include "tithonus/hash.hpp"

namespace tithonus {

// ============================================================
// Script opcodes (the subset the stack uses)
// ============================================================
enum Opcode : uint8_t {
    OP_0 = 0x00,
    OP_PUSHDATA1 = 0x4c,
    OP_PUSHDATA2 = 0x4d,
    OP_PUSHDATA4 = 0x4e,
    OP_1 = 0x51, // also OP_TRUE
    OP_2 = 0x52,
    OP_3 = 0x53,
    OP_16 = 0x60,
    OP_RETURN = 0x6a,
    OP_2DROP = 0x6d,
    OP_DROP = 0x75,
    OP_DUP = 0x76,
    OP_EQUAL = 0x87,
    OP_EQUALVERIFY = 0x88,
    OP_HASH160 = 0xa9,
    OP_CHECKSIG = 0xac,
    OP_CHECKMULTISIG = 0xae,
};

constexpr size_t MAX_PUSH_BYTES = 520;       // per stack item
constexpr size_t MAX_SCRIPT_BYTES = 10000;   // per script
constexpr size_t MAX_P2SH_SCRIPT_SIG = 1650; // effective scriptSig cap for p2sh spends

// One parsed script element: an opcode, or a push with its data.
struct ScriptOp {
    uint8_t opcode = 0;
    std::optional<Bytes> push; // set for OP_0 (empty) and all data pushes

    bool is_push() const { return push.has_value(); }
};

class Script {
public:
    Script() = default;
    explicit Script(Bytes bytes) : bytes_(std::move(bytes)) {}

    const Bytes& bytes() const { return bytes_; }
    size_t size() const { return bytes_.size(); }
    bool empty() const { return bytes_.empty(); }

    bool operator==(const Script& o) const { return bytes_ == o.bytes_; }

    // Minimal-encoding push, matching standard relay conventions.
    void push_data(const Bytes& data) {
        if (data.empty()) {
            bytes_.push_back(OP_0);
        } else if (data.size() <= 75) {
            bytes_.push_back(static_cast<uint8_t>(data.size()));
        } else if (data.size() <= 255) {
            bytes_.push_back(OP_PUSHDATA1);
            bytes_.push_back(static_cast<uint8_t>(data.size()));
        } else if (data.size() <= 65535) {
            bytes_.push_back(OP_PUSHDATA2);
            append_u16_le(bytes_, static_cast<uint16_t>(data.size()));
        } else {
            bytes_.push_back(OP_PUSHDATA4);
            append_u32_le(bytes_, static_cast<uint32_t>(data.size()));
        }
        append_bytes(bytes_, data);
    }

    // Explicit wide-header push (Alg.-style chunk pushes use PUSHDATA2).
    void push_data2(const Bytes& data) {
        bytes_.push_back(OP_PUSHDATA2);
        append_u16_le(bytes_, static_cast<uint16_t>(data.size()));
        append_bytes(bytes_, data);
    }

    void push_opcode(uint8_t op) { bytes_.push_back(op); }

    template <size_t N>
    void push_data(const std::array<uint8_t, N>& a) {
        push_data(Bytes(a.begin(), a.end()));
    }

    // Parsed view; re-serializing the ops yields the identical bytes.
    std::vector<ScriptOp> parse() const {
        std::vector<ScriptOp> ops;
        ByteReader rd(bytes_);
        while (!rd.done()) {
            uint8_t op = rd.u8();
            ScriptOp out;
            out.opcode = op;
            if (op == OP_0) {
                out.push = Bytes{};
            } else if (op >= 1 && op <= 75) {
                out.push = rd.take(op);
            } else if (op == OP_PUSHDATA1) {
                out.push = rd.take(rd.u8());
            } else if (op == OP_PUSHDATA2) {
                out.push = rd.take(rd.u16_le());
            } else if (op == OP_PUSHDATA4) {
                out.push = rd.take(rd.u32_le());
            }
            ops.push_back(std::move(out));
        }
        return ops;
    }

private:
    Bytes bytes_;
};

// ============================================================
// Transaction model
// ============================================================
struct OutPoint {
    Hash32 txid{};
    uint32_t vout = 0;

    bool operator==(const OutPoint& o) const { return txid == o.txid && vout == o.vout; }
};

struct OutPointHasher {
    size_t operator()(const OutPoint& op) const {
        size_t h = op.vout;
        for (int i = 0; i < 8; i++) h = h * 31 + op.txid[i];
        return h;
    }
};

struct TxInput {
    OutPoint prevout;
    Script script_sig;
    uint32_t sequence = 0xFFFFFFFF;

    bool operator==(const TxInput& o) const {
        return prevout == o.prevout && script_sig == o.script_sig && sequence == o.sequence;
    }
};

struct TxOutput {
    uint64_t value = 0; // satoshi
    Script script_pubkey;

    bool operator==(const TxOutput& o) const {
        return value == o.value && script_pubkey == o.script_pubkey;
    }
};

struct Transaction {
    uint32_t version = 1;
    std::vector<TxInput> inputs;
    std::vector<TxOutput> outputs;
    uint32_t locktime = 0;

    bool operator==(const Transaction& o) const {
        return version == o.version && inputs == o.inputs && outputs == o.outputs &&
               locktime == o.locktime;
    }
};

// Legacy (pre-segwit) wire format.
inline Bytes serialize(const Transaction& tx) {
    Bytes out;
    append_u32_le(out, tx.version);
    append_varint(out, tx.inputs.size());
    for (const auto& in : tx.inputs) {
        append_bytes(out, in.prevout.txid);
        append_u32_le(out, in.prevout.vout);
        append_varint(out, in.script_sig.size());
        append_bytes(out, in.script_sig.bytes());
        append_u32_le(out, in.sequence);
    }
    append_varint(out, tx.outputs.size());
    for (const auto& o : tx.outputs) {
        append_u64_le(out, o.value);
        append_varint(out, o.script_pubkey.size());
        append_bytes(out, o.script_pubkey.bytes());
    }
    append_u32_le(out, tx.locktime);
    return out;
}

inline Transaction deserialize(const Bytes& raw) {
    try {
        ByteReader rd(raw);
        Transaction tx;
        tx.version = rd.u32_le();
        uint64_t nin = rd.varint();
        for (uint64_t i = 0; i < nin; i++) {
            TxInput in;
            in.prevout.txid = rd.take_array<32>();
            in.prevout.vout = rd.u32_le();
            in.script_sig = Script(rd.take(rd.varint()));
            in.sequence = rd.u32_le();
            tx.inputs.push_back(std::move(in));
        }
        uint64_t nout = rd.varint();
        for (uint64_t i = 0; i < nout; i++) {
            TxOutput o;
            o.value = rd.u64_le();
            o.script_pubkey = Script(rd.take(rd.varint()));
            tx.outputs.push_back(std::move(o));
        }
        tx.locktime = rd.u32_le();
        if (!rd.done()) throw ParseError("trailing bytes after transaction");
        return tx;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError(e.what());
    }
}

inline size_t serialized_size(const Transaction& tx) { return serialize(tx).size(); }

inline Hash32 txid(const Transaction& tx) { return sha256d(serialize(tx)); }

inline std::string tx_to_hex(const Transaction& tx) { return to_hex(serialize(tx)); }
inline Transaction tx_from_hex(std::string_view hex) { return deserialize(from_hex(hex)); }

// ============================================================
// Standard output templates
// ============================================================
enum class OutputKind { p2pkh, p2sh, op_return, p2pk, multisig, nonstandard };

inline Script p2pkh_script(const Hash20& pubkey_hash) {
    Script s;
    s.push_opcode(OP_DUP);
    s.push_opcode(OP_HASH160);
    s.push_data(pubkey_hash);
    s.push_opcode(OP_EQUALVERIFY);
    s.push_opcode(OP_CHECKSIG);
    return s;
}

inline Script p2sh_script(const Hash20& script_hash) {
    Script s;
    s.push_opcode(OP_HASH160);
    s.push_data(script_hash);
    s.push_opcode(OP_EQUAL);
    return s;
}

inline Script op_return_script(const Bytes& data) {
    Script s;
    s.push_opcode(OP_RETURN);
    s.push_data(data);
    return s;
}

inline Script p2pk_script(const Bytes& pubkey) {
    Script s;
    s.push_data(pubkey);
    s.push_opcode(OP_CHECKSIG);
    return s;
}

inline OutputKind classify_output(const Script& spk) {
    const auto ops = [&]() -> std::optional<std::vector<ScriptOp>> {
        try {
            return spk.parse();
        } catch (const std::exception&) {
            return std::nullopt;
        }
    }();
    if (!ops) return OutputKind::nonstandard;
    const auto& v = *ops;
    if (v.size() == 5 && v[0].opcode == OP_DUP && v[1].opcode == OP_HASH160 && v[2].is_push() &&
        v[2].push->size() == 20 && v[3].opcode == OP_EQUALVERIFY && v[4].opcode == OP_CHECKSIG)
        return OutputKind::p2pkh;
    if (v.size() == 3 && v[0].opcode == OP_HASH160 && v[1].is_push() && v[1].push->size() == 20 &&
        v[2].opcode == OP_EQUAL)
        return OutputKind::p2sh;
    if (!v.empty() && v[0].opcode == OP_RETURN)
        return OutputKind::op_return;
    if (v.size() == 2 && v[0].is_push() &&
        (v[0].push->size() == 33 || v[0].push->size() == 65) && v[1].opcode == OP_CHECKSIG)
        return OutputKind::p2pk;
    if (v.size() >= 5 && v.back().opcode == OP_CHECKMULTISIG && v[0].opcode >= OP_1 &&
        v[0].opcode <= OP_16)
        return OutputKind::multisig;
    return OutputKind::nonstandard;
}

inline TxOutput build_output(OutputKind kind, const Bytes& payload, uint64_t value) {
    TxOutput out;
    out.value = value;
    switch (kind) {
        case OutputKind::p2pkh: {
            if (payload.size() != 20) throw WrongPayloadLength("p2pkh wants 20 bytes");
            Hash20 h{};
            std::copy(payload.begin(), payload.end(), h.begin());
            out.script_pubkey = p2pkh_script(h);
            break;
        }
        case OutputKind::p2sh: {
            if (payload.size() != 20) throw WrongPayloadLength("p2sh wants 20 bytes");
            Hash20 h{};
            std::copy(payload.begin(), payload.end(), h.begin());
            out.script_pubkey = p2sh_script(h);
            break;
        }
        case OutputKind::op_return: {
            if (payload.size() > 80) throw WrongPayloadLength("op_return caps at 80 bytes");
            out.script_pubkey = op_return_script(payload);
            break;
        }
        case OutputKind::p2pk: {
            if (payload.size() != 33 && payload.size() != 65)
                throw WrongPayloadLength("p2pk wants 33 or 65 bytes");
            out.script_pubkey = p2pk_script(payload);
            break;
        }
        default:
            throw WrongPayloadLength("unsupported output kind");
    }
    return out;
}

// ============================================================
// Fees and standardness
// ============================================================
struct FeePolicy {
    uint64_t min_fee_rate = 1;      // satoshi per byte, relay floor
    uint64_t dust_multiplier = 3;   // output value must exceed this x fee
    uint64_t standard_fee_rate = 9; // median rate used for on-chain sends
};

using OutputResolver = std::function<std::optional<TxOutput>(const OutPoint&)>;

inline uint64_t compute_fee(const Transaction& tx, const OutputResolver& resolve) {
    uint64_t in_sum = 0;
    for (const auto& in : tx.inputs) {
        auto prev = resolve(in.prevout);
        if (!prev) throw UnknownInput(txid_hex(in.prevout.txid));
        in_sum += prev->value;
    }
    uint64_t out_sum = 0;
    for (const auto& o : tx.outputs) out_sum += o.value;
    if (out_sum > in_sum) throw NegativeFee();
    return in_sum - out_sum;
}

struct RuleResult {
    std::string rule;
    bool pass = false;
    std::string detail;
};

struct ValidationReport {
    std::vector<RuleResult> rules;

    bool ok() const {
        for (const auto& r : rules)
            if (!r.pass) return false;
        return true;
    }
    const RuleResult* find(const std::string& name) const {
        for (const auto& r : rules)
            if (r.rule == name) return &r;
        return nullptr;
    }
};

// Relay validity per the transport rules: fee rate floor, dust rule on
// non-op_return outputs, push size cap, p2sh scriptSig cap.
inline ValidationReport validate_standard(const Transaction& tx, const OutputResolver& resolve,
                                          const FeePolicy& policy) {
    ValidationReport rep;
    size_t size = serialized_size(tx);

    RuleResult shape{"shape", !tx.inputs.empty() && !tx.outputs.empty(),
                     "at least one input and one output"};
    rep.rules.push_back(shape);

    uint64_t fee = 0;
    bool fee_known = false;
    try {
        fee = compute_fee(tx, resolve);
        fee_known = true;
    } catch (const Error& e) {
        rep.rules.push_back({"fee_rate", false, e.what()});
    }
    if (fee_known) {
        bool pass = fee >= policy.min_fee_rate * size;
        rep.rules.push_back({"fee_rate", pass,
                             "fee " + std::to_string(fee) + " for " + std::to_string(size) + " bytes"});

        bool dust_ok = true;
        for (const auto& o : tx.outputs) {
            if (classify_output(o.script_pubkey) == OutputKind::op_return) continue;
            if (o.value <= policy.dust_multiplier * fee) {
                dust_ok = false;
                break;
            }
        }
        rep.rules.push_back({"dust", dust_ok, "every spendable output above 3x fee"});
    }

    bool push_ok = true;
    bool script_len_ok = true;
    auto scan_script = [&](const Script& s) {
        if (s.size() > MAX_SCRIPT_BYTES) script_len_ok = false;
        try {
            for (const auto& op : s.parse())
                if (op.is_push() && op.push->size() > MAX_PUSH_BYTES) push_ok = false;
        } catch (const std::exception&) {
            push_ok = false;
        }
    };
    for (const auto& in : tx.inputs) scan_script(in.script_sig);
    for (const auto& o : tx.outputs) scan_script(o.script_pubkey);
    rep.rules.push_back({"push_size", push_ok, "single pushes capped at 520 bytes"});
    rep.rules.push_back({"script_size", script_len_ok, "scripts capped at 10000 bytes"});

    bool p2sh_sig_ok = true;
    for (const auto& in : tx.inputs) {
        auto prev = resolve(in.prevout);
        if (prev && classify_output(prev->script_pubkey) == OutputKind::p2sh &&
            in.script_sig.size() > MAX_P2SH_SCRIPT_SIG)
            p2sh_sig_ok = false;
    }
    rep.rules.push_back({"p2sh_script_sig", p2sh_sig_ok, "p2sh scriptSig capped at 1650 bytes"});
    return rep;
}

} // namespace tithonus
