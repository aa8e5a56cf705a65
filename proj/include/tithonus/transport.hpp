#pragma once

#include <optional>

#include "tithonus/simnet.hpp"
#include "tithonus/txmodel.hpp"

namespace tithonus {

// Swift sends ride the gossip relay at the minimum valid fee rate and are
// read out of mempools; on-chain sends pay the standard rate to be mined
// promptly for receivers who are not online.
enum class SendMode { swift, on_chain };
enum class SendIntent { interactive, asynchronous };

struct TransportMode {
    SendMode mode = SendMode::swift;
    uint64_t fee_rate = 1; // satoshi per byte
};

struct SubmissionReceipt {
    Hash32 txid{};
    TransportMode mode;
    uint64_t injected_at = 0;
    std::optional<uint64_t> confirmed_at;
};

inline TransportMode choose_mode(SendIntent intent, const FeePolicy& policy) {
    if (intent == SendIntent::interactive) return {SendMode::swift, policy.min_fee_rate};
    return {SendMode::on_chain, policy.standard_fee_rate};
}

// Uniform submit / await-visibility surface over a simulated network,
// serialized per sender node.
class Transport {
public:
    Transport(SimNetwork& net, NodeId origin, FeePolicy policy = {})
        : net_(net), origin_(origin), policy_(policy) {}

    SubmissionReceipt submit(const Transaction& tx, const TransportMode& mode) {
        FeePolicy at_rate = policy_;
        at_rate.min_fee_rate = mode.fee_rate;
        auto rep = validate_standard(tx, net_.resolver(), at_rate);
        if (!rep.ok()) {
            std::string why;
            for (const auto& r : rep.rules)
                if (!r.pass) why += r.rule + " ";
            throw RejectedNonstandard(why);
        }
        SubmissionReceipt receipt;
        receipt.mode = mode;
        receipt.injected_at = net_.now();
        receipt.txid = net_.inject(origin_, tx);
        refresh(receipt);
        return receipt;
    }

    // Fills confirmed_at once a mined block includes the transaction.
    void refresh(SubmissionReceipt& receipt) const {
        if (!receipt.confirmed_at) receipt.confirmed_at = net_.confirmation_tick(receipt.txid);
    }

    NodeId origin() const { return origin_; }
    SimNetwork& net() { return net_; }

private:
    SimNetwork& net_;
    NodeId origin_;
    FeePolicy policy_;
};

} // namespace tithonus
