#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "tithonus/ec.hpp"
#include "tithonus/errors.hpp"
#include "tithonus/rng.hpp"
#include "tithonus/signing.hpp"
#include "tithonus/txmodel.hpp"

namespace tithonus {

// ============================================================
// Writing method capacities
// ============================================================
enum class WritingMethod {
    staged,            // scriptSig overloading of a p2sh redeeming input
    multisig_slots,    // two camouflaged placeholders of a 1-of-3 multisig
    op_return,
    p2pk_compressed,
    p2pk_uncompressed,
    p2pkh_hash,
    p2sh_hash,
};

inline size_t capacity(WritingMethod m) {
    switch (m) {
        case WritingMethod::staged: return 1635; // 3 x 520 + 75
        case WritingMethod::multisig_slots: return 56;
        case WritingMethod::op_return: return 80;
        case WritingMethod::p2pk_compressed: return 33;
        case WritingMethod::p2pk_uncompressed: return 65;
        case WritingMethod::p2pkh_hash: return 20;
        case WritingMethod::p2sh_hash: return 20;
    }
    return 0;
}

// ============================================================
// Camouflaged public keys: 28 payload bytes behind a compressed point
// ============================================================
constexpr size_t CAMO_DATA_BYTES = 28;
constexpr uint32_t RANDOMIZER_BOUND = 0xFFFFFC2F;

struct CamouflagedKey {
    uint8_t prefix = 0x02;                 // 0x02 or 0x03
    std::array<uint8_t, 28> data{};        // D, the ciphertext bytes
    std::array<uint8_t, 4> randomizer{};   // R, retried until x^3+7 is a residue

    std::array<uint8_t, 33> to33() const {
        std::array<uint8_t, 33> out{};
        out[0] = prefix;
        std::copy(data.begin(), data.end(), out.begin() + 1);
        std::copy(randomizer.begin(), randomizer.end(), out.begin() + 29);
        return out;
    }

    static CamouflagedKey parse(const std::array<uint8_t, 33>& key) {
        if (key[0] != 0x02 && key[0] != 0x03) throw MalformedKey("bad prefix");
        CamouflagedKey k;
        k.prefix = key[0];
        std::copy(key.begin() + 1, key.begin() + 29, k.data.begin());
        std::copy(key.begin() + 29, key.end(), k.randomizer.begin());
        return k;
    }
};

inline bool is_forbidden_ciphertext(const std::array<uint8_t, 28>& d) {
    return std::all_of(d.begin(), d.end(), [](uint8_t b) { return b == 0xFF; });
}

enum class RandomizerPolicy { random, sequential };

struct EmbedResult {
    CamouflagedKey key;
    uint32_t trials = 0; // number of R candidates tested
};

// Embeds 28 bytes as the leading x-coordinate bytes of a compressed point.
// Draws 4-byte randomizers below 0xFFFFFC2F until x^3+7 is a quadratic
// residue; a random field element passes with probability 1/2.
inline EmbedResult embed_pubkey(const std::array<uint8_t, 28>& d, Rng& rng,
                                RandomizerPolicy policy = RandomizerPolicy::random) {
    if (is_forbidden_ciphertext(d)) throw ForbiddenCiphertext();
    EmbedResult res;
    res.key.prefix = rng.coin() ? 0x03 : 0x02;
    res.key.data = d;
    uint32_t seq = 0;
    for (;;) {
        uint32_t r = (policy == RandomizerPolicy::random)
                         ? static_cast<uint32_t>(rng.below(RANDOMIZER_BOUND))
                         : seq++;
        res.trials++;
        std::array<uint8_t, 32> xb{};
        std::copy(d.begin(), d.end(), xb.begin());
        for (int i = 0; i < 4; i++) xb[28 + i] = static_cast<uint8_t>(r >> (24 - 8 * i));
        ec::Fe x = ec::Fe::from_bytes_be(xb.data());
        if (ec::is_quadratic_residue(ec::curve_rhs(x))) {
            for (int i = 0; i < 4; i++) res.key.randomizer[i] = xb[28 + i];
            return res;
        }
    }
}

inline std::array<uint8_t, 28> extract_pubkey(const std::array<uint8_t, 33>& key) {
    return CamouflagedKey::parse(key).data;
}

inline std::array<uint8_t, 28> extract_pubkey(const Bytes& key) {
    if (key.size() != 33) throw MalformedKey("want 33 bytes");
    std::array<uint8_t, 33> a{};
    std::copy(key.begin(), key.end(), a.begin());
    return extract_pubkey(a);
}

// ============================================================
// Staged transactions (scriptSig overloading)
// ============================================================
constexpr size_t STAGED_CHUNK_BYTES = 520;
constexpr size_t STAGED_REDEEM_PUSH_BYTES = 75;
constexpr size_t STAGED_MAX_PAYLOAD = 1635;

struct StagedLayout {
    std::vector<Bytes> chunks; // leading pushes, full chunks use PUSHDATA2
    Bytes redeem_inner;        // final data push inside the redeemScript
    Script redeem_script;
    Script script_sig;
};

// scriptSig layout of the writing transaction: full 520-byte chunk pushes,
// then the redeemScript push; the redeemScript pushes the remaining bytes,
// drops everything and leaves TRUE.
inline StagedLayout staged_layout(const Bytes& payload) {
    if (payload.size() > STAGED_MAX_PAYLOAD) throw PayloadTooLarge("staged caps at 1635 bytes");
    StagedLayout out;

    size_t inner = std::min(payload.size(), STAGED_REDEEM_PUSH_BYTES);
    size_t leading = payload.size() - inner;
    size_t pos = 0;
    while (pos < leading) {
        size_t n = std::min(STAGED_CHUNK_BYTES, leading - pos);
        out.chunks.emplace_back(payload.begin() + pos, payload.begin() + pos + n);
        pos += n;
    }
    out.redeem_inner.assign(payload.begin() + leading, payload.end());

    Script redeem;
    redeem.push_data(out.redeem_inner);
    size_t items = out.chunks.size() + 1; // chunk pushes plus the inner push
    for (size_t i = 0; i + 1 < items; i += 2) redeem.push_opcode(OP_2DROP);
    if (items % 2 == 1) redeem.push_opcode(OP_DROP);
    redeem.push_opcode(OP_1);
    out.redeem_script = redeem;

    Script ss;
    for (const auto& c : out.chunks) {
        if (c.size() == STAGED_CHUNK_BYTES) ss.push_data2(c);
        else ss.push_data(c);
    }
    ss.push_data(redeem.bytes());
    if (ss.size() > MAX_P2SH_SCRIPT_SIG) throw PayloadTooLarge("scriptSig above 1650 bytes");
    out.script_sig = ss;
    return out;
}

struct Funding {
    OutPoint outpoint;
    uint64_t value = 0;
    ec::KeyPair key; // p2pkh owner of the funded output
};

struct StagedPair {
    Transaction staging;
    Transaction writing;
    Script redeem_script;
    ec::KeyPair change_key; // owner of both change outputs
};

inline uint64_t fee_for_size(size_t size, uint64_t fee_rate) { return size * fee_rate; }

namespace detail {

// staging: funding p2pkh input -> [p2sh commitment, p2pkh change]
// writing: p2sh input with overloaded scriptSig -> [p2pkh change]
inline StagedPair assemble_staged(const StagedLayout& layout, const Funding& funding,
                                  const FeePolicy& policy, uint64_t fee_rate,
                                  const ec::KeyPair& change_key,
                                  const std::vector<TxOutput>& extra_writing_outputs = {}) {
    StagedPair pair;
    pair.redeem_script = layout.redeem_script;
    pair.change_key = change_key;
    Hash20 change_hash = hash160(change_key.pk33.data(), change_key.pk33.size());
    Hash20 redeem_hash = hash160(layout.redeem_script.bytes());

    // writing tx sized first; scriptSig is already final
    Transaction writing;
    writing.inputs.push_back(TxInput{OutPoint{}, layout.script_sig, 0xFFFFFFFF});
    uint64_t extra_value = 0;
    for (const auto& o : extra_writing_outputs) extra_value += o.value;
    writing.outputs.push_back(TxOutput{0, p2pkh_script(change_hash)});
    for (const auto& o : extra_writing_outputs) writing.outputs.push_back(o);
    size_t writing_size = serialized_size(writing);
    uint64_t writing_fee = fee_for_size(writing_size, fee_rate);
    uint64_t writing_change = policy.dust_multiplier * writing_fee + 1;
    writing.outputs[0].value = writing_change;
    uint64_t commit_value = writing_fee + writing_change + extra_value;

    // staging tx with a dummy signature to fix the size, then signed
    Transaction staging;
    staging.inputs.push_back(TxInput{funding.outpoint, Script{}, 0xFFFFFFFF});
    staging.outputs.push_back(TxOutput{commit_value, p2sh_script(redeem_hash)});
    staging.outputs.push_back(TxOutput{0, p2pkh_script(change_hash)});
    Script dummy;
    dummy.push_data(Bytes(SIG_PUSH_BYTES, 0));
    dummy.push_data(funding.key.pk33);
    staging.inputs[0].script_sig = dummy;
    size_t staging_size = serialized_size(staging);
    uint64_t staging_fee = fee_for_size(staging_size, fee_rate);
    uint64_t min_change = policy.dust_multiplier * staging_fee + 1;
    uint64_t needed = commit_value + staging_fee + min_change;
    if (funding.value < needed)
        throw InsufficientFunds("need " + std::to_string(needed) + " sat, have " +
                                std::to_string(funding.value));
    staging.outputs[1].value = funding.value - commit_value - staging_fee;
    sign_input_p2pkh(staging, 0, funding.key);

    writing.inputs[0].prevout = OutPoint{txid(staging), 0};
    pair.staging = staging;
    pair.writing = writing;
    return pair;
}

} // namespace detail

inline StagedPair build_staged_pair(const Bytes& payload, const Funding& funding,
                                    const FeePolicy& policy, uint64_t fee_rate, Rng& rng,
                                    const std::vector<TxOutput>& extra_writing_outputs = {}) {
    StagedLayout layout = staged_layout(payload);
    ec::KeyPair change_key = ec::gen_keypair(rng);
    return detail::assemble_staged(layout, funding, policy, fee_rate, change_key,
                                   extra_writing_outputs);
}

inline Bytes extract_staged_payload(const Transaction& writing) {
    if (writing.inputs.empty()) throw NotAStagedWrite("no inputs");
    std::vector<ScriptOp> ops;
    try {
        ops = writing.inputs[0].script_sig.parse();
    } catch (const std::exception&) {
        throw NotAStagedWrite("unparseable scriptSig");
    }
    if (ops.empty()) throw NotAStagedWrite("empty scriptSig");
    for (const auto& op : ops)
        if (!op.is_push()) throw NotAStagedWrite("non-push scriptSig element");

    Script redeem(*ops.back().push);
    std::vector<ScriptOp> rops;
    try {
        rops = redeem.parse();
    } catch (const std::exception&) {
        throw NotAStagedWrite("unparseable redeemScript");
    }
    if (rops.size() < 2 || !rops[0].is_push()) throw NotAStagedWrite("redeemScript shape");
    for (size_t i = 1; i + 1 < rops.size(); i++)
        if (rops[i].opcode != OP_2DROP && rops[i].opcode != OP_DROP)
            throw NotAStagedWrite("redeemScript shape");
    if (rops.back().opcode != OP_1) throw NotAStagedWrite("redeemScript must end TRUE");

    Bytes payload;
    for (size_t i = 0; i + 1 < ops.size(); i++) append_bytes(payload, *ops[i].push);
    append_bytes(payload, *rops[0].push);
    return payload;
}

// Minimal push/drop machine for the staged redeem path: runs the scriptSig
// pushes, checks the redeemScript hash against the staging commitment, then
// executes the redeemScript. True when the stack ends as exactly [TRUE].
inline bool run_staged_redeem(const Script& script_sig,
                              const std::optional<Hash20>& expected_redeem_hash = std::nullopt) {
    std::vector<Bytes> stack;
    std::vector<ScriptOp> ops;
    try {
        ops = script_sig.parse();
    } catch (const std::exception&) {
        return false;
    }
    if (ops.empty()) return false;
    for (const auto& op : ops) {
        if (!op.is_push()) return false;
        stack.push_back(*op.push);
    }
    Bytes redeem_bytes = stack.back();
    stack.pop_back();
    if (expected_redeem_hash && hash160(redeem_bytes) != *expected_redeem_hash) return false;

    std::vector<ScriptOp> rops;
    try {
        rops = Script(redeem_bytes).parse();
    } catch (const std::exception&) {
        return false;
    }
    for (const auto& op : rops) {
        if (op.is_push()) {
            stack.push_back(*op.push);
        } else if (op.opcode == OP_DROP) {
            if (stack.empty()) return false;
            stack.pop_back();
        } else if (op.opcode == OP_2DROP) {
            if (stack.size() < 2) return false;
            stack.pop_back();
            stack.pop_back();
        } else if (op.opcode == OP_1) {
            stack.push_back(Bytes{0x01});
        } else {
            return false;
        }
    }
    return stack.size() == 1 && stack[0] == Bytes{0x01};
}

// ============================================================
// 1-of-3 multisig camouflage
// ============================================================
constexpr size_t MULTISIG_SLOT_PAYLOAD = 56; // two 28-byte placeholders

enum class StagingOutputOrder { p2pkh_then_p2sh, p2sh_then_p2pkh };

struct MultisigPairParams {
    StagingOutputOrder order = StagingOutputOrder::p2pkh_then_p2sh;
    Hash20 p2pkh_hash{};       // companion output: link, deposit or unused
    uint64_t p2pkh_value = 0;
    uint64_t fee_rate = 1;
    std::optional<int> real_slot; // pin the signing key position; random otherwise
};

inline Script multisig_redeem_script(const std::array<std::array<uint8_t, 33>, 3>& keys) {
    Script s;
    s.push_opcode(OP_1);
    for (const auto& k : keys) s.push_data(k);
    s.push_opcode(OP_3);
    s.push_opcode(OP_CHECKMULTISIG);
    return s;
}

struct MultisigPair {
    Transaction staging;
    Transaction writing;
    Script redeem_script;
    int real_slot = 0;
    ec::KeyPair signing_key;
    ec::KeyPair change_key;
};

// Core builder over two ready-made 33-byte placeholder slots. The slots can
// be camouflaged data, or genuine public keys when generating honest traffic.
inline MultisigPair build_multisig_pair_slots(const std::array<std::array<uint8_t, 33>, 2>& data_slots,
                                              const Funding& funding, const FeePolicy& policy,
                                              const MultisigPairParams& params, Rng& rng) {
    MultisigPair pair;
    pair.signing_key = ec::gen_keypair(rng);
    pair.change_key = ec::gen_keypair(rng);
    pair.real_slot = params.real_slot ? *params.real_slot : static_cast<int>(rng.below(3));

    std::array<std::array<uint8_t, 33>, 3> keys{};
    size_t di = 0;
    for (int s = 0; s < 3; s++)
        keys[s] = (s == pair.real_slot) ? pair.signing_key.pk33 : data_slots[di++];
    pair.redeem_script = multisig_redeem_script(keys);
    Hash20 redeem_hash = hash160(pair.redeem_script.bytes());
    Hash20 change_hash = hash160(pair.change_key.pk33.data(), pair.change_key.pk33.size());

    // writing tx: 1-of-3 spend, one p2pkh change output
    Transaction writing;
    Script dummy_ss;
    dummy_ss.push_opcode(OP_0);
    dummy_ss.push_data(Bytes(SIG_PUSH_BYTES, 0));
    dummy_ss.push_data(pair.redeem_script.bytes());
    writing.inputs.push_back(TxInput{OutPoint{}, dummy_ss, 0xFFFFFFFF});
    writing.outputs.push_back(TxOutput{0, p2pkh_script(change_hash)});
    size_t writing_size = serialized_size(writing);
    uint64_t writing_fee = fee_for_size(writing_size, params.fee_rate);
    uint64_t writing_change = policy.dust_multiplier * writing_fee + 1;
    writing.outputs[0].value = writing_change;
    uint64_t commit_value = writing_fee + writing_change;

    // staging tx: (p2pkh, p2sh) or (p2sh, p2pkh)
    Transaction staging;
    staging.inputs.push_back(TxInput{funding.outpoint, Script{}, 0xFFFFFFFF});
    TxOutput commit{commit_value, p2sh_script(redeem_hash)};
    TxOutput companion{params.p2pkh_value, p2pkh_script(params.p2pkh_hash)};
    uint32_t commit_vout;
    if (params.order == StagingOutputOrder::p2pkh_then_p2sh) {
        staging.outputs = {companion, commit};
        commit_vout = 1;
    } else {
        staging.outputs = {commit, companion};
        commit_vout = 0;
    }
    Script dummy;
    dummy.push_data(Bytes(SIG_PUSH_BYTES, 0));
    dummy.push_data(funding.key.pk33);
    staging.inputs[0].script_sig = dummy;
    uint64_t staging_fee = fee_for_size(serialized_size(staging), params.fee_rate);
    uint64_t needed_funds = commit_value + params.p2pkh_value + staging_fee;
    if (funding.value < needed_funds)
        throw InsufficientFunds("need " + std::to_string(needed_funds) + " sat, have " +
                                std::to_string(funding.value));
    // leftover rides in the p2sh commitment to keep the exact two-output
    // template and the advertised fee rate; the writing change returns it
    uint64_t leftover = funding.value - needed_funds;
    staging.outputs[commit_vout].value = commit_value + leftover;
    writing.outputs[0].value = writing_change + leftover;
    sign_input_p2pkh(staging, 0, funding.key);

    writing.inputs[0].prevout = OutPoint{txid(staging), commit_vout};
    Script real_ss;
    real_ss.push_opcode(OP_0);
    real_ss.push_data(input_signature(pair.signing_key.sk, writing, 0, pair.redeem_script));
    real_ss.push_data(pair.redeem_script.bytes());
    writing.inputs[0].script_sig = real_ss;

    pair.staging = staging;
    pair.writing = writing;
    return pair;
}

// Funding a multisig pair takes the p2sh commitment plus the companion
// output plus the staging fee; sizes come from dummy transactions with the
// final byte layout, so the figure is exact.
inline uint64_t multisig_pair_funds_needed(const FeePolicy& policy, uint64_t fee_rate,
                                           uint64_t p2pkh_value) {
    std::array<std::array<uint8_t, 33>, 3> zero_keys{};
    for (auto& k : zero_keys) k[0] = 0x02;
    Script redeem = multisig_redeem_script(zero_keys);

    Transaction writing;
    Script wss;
    wss.push_opcode(OP_0);
    wss.push_data(Bytes(SIG_PUSH_BYTES, 0));
    wss.push_data(redeem.bytes());
    writing.inputs.push_back(TxInput{OutPoint{}, wss, 0xFFFFFFFF});
    writing.outputs.push_back(TxOutput{0, p2pkh_script(Hash20{})});
    uint64_t writing_fee = fee_for_size(serialized_size(writing), fee_rate);
    uint64_t commit_value = writing_fee + policy.dust_multiplier * writing_fee + 1;

    Transaction staging;
    Script sss;
    sss.push_data(Bytes(SIG_PUSH_BYTES, 0));
    sss.push_data(Bytes(33, 0));
    staging.inputs.push_back(TxInput{OutPoint{}, sss, 0xFFFFFFFF});
    staging.outputs.push_back(TxOutput{0, p2pkh_script(Hash20{})});
    staging.outputs.push_back(TxOutput{0, p2sh_script(Hash20{})});
    uint64_t staging_fee = fee_for_size(serialized_size(staging), fee_rate);

    return commit_value + p2pkh_value + staging_fee;
}

// Payload form: up to 56 bytes land in two camouflaged placeholders.
inline MultisigPair build_multisig_pair(const Bytes& slots_payload, const Funding& funding,
                                        const FeePolicy& policy, const MultisigPairParams& params,
                                        Rng& rng) {
    if (slots_payload.size() > MULTISIG_SLOT_PAYLOAD)
        throw PayloadTooLarge("multisig slots cap at 56 bytes");
    std::array<uint8_t, 56> padded{};
    std::copy(slots_payload.begin(), slots_payload.end(), padded.begin());
    std::array<std::array<uint8_t, 33>, 2> slots{};
    for (size_t i = 0; i < 2; i++) {
        std::array<uint8_t, 28> d{};
        std::copy(padded.begin() + 28 * i, padded.begin() + 28 * (i + 1), d.begin());
        slots[i] = embed_pubkey(d, rng).key.to33();
    }
    return build_multisig_pair_slots(slots, funding, policy, params, rng);
}

inline std::vector<std::array<uint8_t, 33>> extract_multisig_slots(const Transaction& writing,
                                                                   bool strict = true) {
    if (writing.inputs.empty()) throw NotMultisig("no inputs");
    std::vector<ScriptOp> ops;
    try {
        ops = writing.inputs[0].script_sig.parse();
    } catch (const std::exception&) {
        throw NotMultisig("unparseable scriptSig");
    }
    if (ops.size() < 2 || !ops.back().is_push()) throw NotMultisig("scriptSig shape");
    if (ops[0].opcode != OP_0) throw NotMultisig("missing checkmultisig dummy");

    std::vector<ScriptOp> rops;
    try {
        rops = Script(*ops.back().push).parse();
    } catch (const std::exception&) {
        throw NotMultisig("unparseable redeemScript");
    }
    if (rops.size() < 4 || rops.back().opcode != OP_CHECKMULTISIG) throw NotMultisig("no checkmultisig");
    uint8_t m_op = rops.front().opcode;
    uint8_t n_op = rops[rops.size() - 2].opcode;
    if (m_op < OP_1 || m_op > OP_16 || n_op < OP_1 || n_op > OP_16) throw NotMultisig("bad m/n");
    int m = m_op - OP_1 + 1;
    int n = n_op - OP_1 + 1;
    if (strict && (m != 1 || n != 3)) throw NotMultisig("strict mode wants 1-of-3");
    if (static_cast<int>(rops.size()) != n + 3) throw NotMultisig("key count mismatch");

    std::vector<std::array<uint8_t, 33>> slots;
    for (int i = 0; i < n; i++) {
        const auto& op = rops[1 + i];
        if (!op.is_push() || op.push->size() != 33) throw NotMultisig("slot is not a 33-byte key");
        std::array<uint8_t, 33> k{};
        std::copy(op.push->begin(), op.push->end(), k.begin());
        slots.push_back(k);
    }
    return slots;
}

// Which slot carries the key that actually signed the spend. Slots holding
// camouflaged data fail decompression or verification and are skipped.
inline std::optional<int> identify_signer_slot(const Transaction& writing,
                                               const Script& redeem_script) {
    auto ops = writing.inputs[0].script_sig.parse();
    if (ops.size() < 2 || !ops[ops.size() - 2].is_push()) return std::nullopt;
    const Bytes& sig_bytes = *ops[ops.size() - 2].push;
    if (sig_bytes.size() < 2) return std::nullopt;
    Bytes der(sig_bytes.begin(), sig_bytes.end() - 1);
    Hash32 digest = sighash_all(writing, 0, redeem_script);
    auto slots = extract_multisig_slots(writing, false);
    for (size_t i = 0; i < slots.size(); i++) {
        try {
            ec::Point pk = ec::decompress(slots[i].data());
            if (ec::verify(pk, digest, ec::Signature::from_der(der))) return static_cast<int>(i);
        } catch (const std::exception&) {
            continue;
        }
    }
    return std::nullopt;
}

} // namespace tithonus
