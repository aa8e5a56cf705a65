#pragma once

#include "tithonus/ec.hpp"
#include "tithonus/txmodel.hpp"

namespace tithonus {

constexpr uint8_t SIGHASH_ALL = 0x01;

// Legacy signature hash: the spent input carries the script code, all other
// scriptSigs are blanked, hash type appended.
inline Hash32 sighash_all(const Transaction& tx, size_t input_index, const Script& script_code) {
    Transaction copy = tx;
    for (size_t i = 0; i < copy.inputs.size(); i++)
        copy.inputs[i].script_sig = (i == input_index) ? script_code : Script{};
    Bytes pre = serialize(copy);
    append_u32_le(pre, SIGHASH_ALL);
    return sha256d(pre);
}

// DER signature + trailing hash-type byte; always 71 bytes given the
// constant-size encoding in ec::sign.
inline Bytes input_signature(const ec::Scalar& sk, const Transaction& tx, size_t input_index,
                             const Script& script_code) {
    Bytes sig = ec::sign(sk, sighash_all(tx, input_index, script_code)).to_der();
    sig.push_back(SIGHASH_ALL);
    return sig;
}

constexpr size_t SIG_PUSH_BYTES = 71; // 70-byte DER + hash type

inline void sign_input_p2pkh(Transaction& tx, size_t input_index, const ec::KeyPair& key) {
    Hash20 pkh = hash160(key.pk33.data(), key.pk33.size());
    Script code = p2pkh_script(pkh);
    Bytes sig = input_signature(key.sk, tx, input_index, code);
    Script ss;
    ss.push_data(sig);
    ss.push_data(key.pk33);
    tx.inputs[input_index].script_sig = ss;
}

inline bool verify_input_p2pkh(const Transaction& tx, size_t input_index) {
    auto ops = tx.inputs[input_index].script_sig.parse();
    if (ops.size() != 2 || !ops[0].is_push() || !ops[1].is_push()) return false;
    const Bytes& sig_bytes = *ops[0].push;
    const Bytes& pub = *ops[1].push;
    if (sig_bytes.size() < 2 || pub.size() != 33) return false;
    Bytes der(sig_bytes.begin(), sig_bytes.end() - 1);
    ec::Point pk = ec::decompress(pub.data());
    Script code = p2pkh_script(hash160(pub));
    return ec::verify(pk, sighash_all(tx, input_index, code), ec::Signature::from_der(der));
}

} // namespace tithonus
