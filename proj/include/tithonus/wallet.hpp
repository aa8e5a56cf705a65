#pragma once

#include "tithonus/embedding.hpp"
#include "tithonus/txmodel.hpp"

namespace tithonus {

// Coinbase-style faucet transaction: null prevout, arbitrary scriptSig tag,
// one p2pkh output. Lives in the genesis block, never relayed.
inline Transaction make_faucet_tx(uint64_t value, const Hash20& dest, uint32_t tag) {
    Transaction tx;
    TxInput in;
    in.prevout.txid = Hash32{};
    in.prevout.vout = 0xFFFFFFFF;
    Script ss;
    Bytes t;
    append_u32_le(t, tag);
    ss.push_data(t);
    in.script_sig = ss;
    tx.inputs.push_back(in);
    tx.outputs.push_back(TxOutput{value, p2pkh_script(dest)});
    return tx;
}

// Ordinary p2pkh spend: one payment output plus change back to the owner.
inline Transaction build_p2pkh_spend(const Funding& funding, const Hash20& dest, uint64_t value,
                                     const FeePolicy& policy, uint64_t fee_rate) {
    Transaction tx;
    tx.inputs.push_back(TxInput{funding.outpoint, Script{}, 0xFFFFFFFF});
    Hash20 change_hash = hash160(funding.key.pk33.data(), funding.key.pk33.size());
    tx.outputs.push_back(TxOutput{value, p2pkh_script(dest)});
    tx.outputs.push_back(TxOutput{0, p2pkh_script(change_hash)});
    Script dummy;
    dummy.push_data(Bytes(SIG_PUSH_BYTES, 0));
    dummy.push_data(funding.key.pk33);
    tx.inputs[0].script_sig = dummy;
    uint64_t fee = serialized_size(tx) * fee_rate;
    uint64_t min_change = policy.dust_multiplier * fee + 1;
    if (funding.value < value + fee + min_change)
        throw InsufficientFunds("need " + std::to_string(value + fee + min_change) +
                                " sat, have " + std::to_string(funding.value));
    tx.outputs[1].value = funding.value - value - fee;
    sign_input_p2pkh(tx, 0, funding.key);
    return tx;
}

// Tracks one spendable p2pkh output and the key that owns it; builders
// consume it and hand back the change output to spend next.
class Wallet {
public:
    Wallet(ec::KeyPair key, OutPoint outpoint, uint64_t value)
        : key_(std::move(key)), outpoint_(outpoint), value_(value) {}

    // Creates the faucet transaction and the wallet holding its output.
    static std::pair<Wallet, Transaction> with_faucet(uint64_t value, Rng& rng, uint32_t tag = 0) {
        ec::KeyPair key = ec::gen_keypair(rng);
        Transaction faucet = make_faucet_tx(value, hash160(key.pk33.data(), key.pk33.size()), tag);
        Wallet w(key, OutPoint{txid(faucet), 0}, value);
        return {std::move(w), std::move(faucet)};
    }

    Funding funding() const { return Funding{outpoint_, value_, key_}; }
    uint64_t value() const { return value_; }
    const ec::KeyPair& key() const { return key_; }

    void advance(const OutPoint& outpoint, uint64_t value, ec::KeyPair key) {
        outpoint_ = outpoint;
        value_ = value;
        key_ = std::move(key);
    }

    // Consume a staged pair built from this wallet: the staging change
    // output becomes the next funding.
    void consume(const StagedPair& pair) {
        advance(OutPoint{txid(pair.staging), 1}, pair.staging.outputs[1].value, pair.change_key);
    }

    // Multisig pairs keep the two-output staging template, so the money
    // continues from the writing transaction's change output.
    void consume(const MultisigPair& pair) {
        advance(OutPoint{txid(pair.writing), 0}, pair.writing.outputs[0].value, pair.change_key);
    }

private:
    ec::KeyPair key_;
    OutPoint outpoint_;
    uint64_t value_;
};

} // namespace tithonus
