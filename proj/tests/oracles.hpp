#pragma once

// Independent oracles shared across the suites. Each one recomputes its
// answer from first principles rather than through the code path it checks.

#include <map>
#include <queue>
#include <set>
#include <vector>

#include "tithonus/embedding.hpp"
#include "tithonus/rng.hpp"
#include "tithonus/simnet.hpp"
#include "tithonus/txmodel.hpp"

namespace oracles {

using namespace tithonus;

// ------------------------------------------------------------
// Size accounting: sums wire-field widths directly.
// ------------------------------------------------------------
inline size_t varint_width(uint64_t v) {
    if (v <= 0xFC) return 1;
    if (v <= 0xFFFF) return 3;
    if (v <= 0xFFFFFFFFull) return 5;
    return 9;
}

inline size_t expected_tx_size(const Transaction& tx) {
    size_t n = 4; // version
    n += varint_width(tx.inputs.size());
    for (const auto& in : tx.inputs)
        n += 32 + 4 + varint_width(in.script_sig.size()) + in.script_sig.size() + 4;
    n += varint_width(tx.outputs.size());
    for (const auto& o : tx.outputs)
        n += 8 + varint_width(o.script_pubkey.size()) + o.script_pubkey.size();
    n += 4; // locktime
    return n;
}

// ------------------------------------------------------------
// Seeded random transactions for round-trip fuzzing.
// ------------------------------------------------------------
inline Transaction random_tx(Rng& rng) {
    Transaction tx;
    tx.version = rng.u32();
    size_t nin = 1 + rng.below(3);
    for (size_t i = 0; i < nin; i++) {
        TxInput in;
        auto id = rng.array<32>();
        in.prevout.txid = id;
        in.prevout.vout = rng.u32();
        in.script_sig = Script(rng.bytes(rng.below(300)));
        in.sequence = rng.u32();
        tx.inputs.push_back(std::move(in));
    }
    size_t nout = 1 + rng.below(3);
    for (size_t i = 0; i < nout; i++) {
        TxOutput o;
        o.value = rng.u64() >> 16;
        o.script_pubkey = Script(rng.bytes(rng.below(120)));
        tx.outputs.push_back(std::move(o));
    }
    tx.locktime = rng.u32();
    return tx;
}

// ------------------------------------------------------------
// Script skeletons: opcode sequence with push widths, content erased.
// ------------------------------------------------------------
struct Skeleton {
    std::vector<std::vector<std::pair<int, int>>> input_ops;  // (opcode, push len or -1)
    std::vector<std::vector<std::pair<int, int>>> output_ops;
    std::vector<size_t> output_script_sizes;
    size_t tx_size = 0;

    bool operator==(const Skeleton& o) const {
        return input_ops == o.input_ops && output_ops == o.output_ops &&
               output_script_sizes == o.output_script_sizes && tx_size == o.tx_size;
    }
    bool operator<(const Skeleton& o) const {
        return std::tie(input_ops, output_ops, output_script_sizes, tx_size) <
               std::tie(o.input_ops, o.output_ops, o.output_script_sizes, o.tx_size);
    }
};

inline std::vector<std::pair<int, int>> script_skeleton(const Script& s) {
    std::vector<std::pair<int, int>> out;
    for (const auto& op : s.parse())
        out.emplace_back(op.opcode, op.is_push() ? static_cast<int>(op.push->size()) : -1);
    return out;
}

inline Skeleton tx_skeleton(const Transaction& tx) {
    Skeleton sk;
    for (const auto& in : tx.inputs) sk.input_ops.push_back(script_skeleton(in.script_sig));
    for (const auto& o : tx.outputs) {
        sk.output_ops.push_back(script_skeleton(o.script_pubkey));
        sk.output_script_sizes.push_back(o.script_pubkey.size());
    }
    sk.tx_size = serialized_size(tx);
    return sk;
}

// Multiset comparison of two transaction populations: zero structural
// difference means identical skeleton histograms.
inline bool same_skeleton_histogram(const std::vector<Transaction>& a,
                                    const std::vector<Transaction>& b) {
    std::map<Skeleton, int> ha, hb;
    for (const auto& tx : a) ha[tx_skeleton(tx)]++;
    for (const auto& tx : b) hb[tx_skeleton(tx)]++;
    return ha == hb;
}

// ------------------------------------------------------------
// Gossip reachability: BFS through relaying (conformant) nodes over the
// peer graph, independent of the event loop.
// ------------------------------------------------------------
inline std::set<NodeId> bfs_reachable(const SimNetwork& net, NodeId origin) {
    std::set<NodeId> received;
    std::queue<NodeId> frontier; // relaying nodes whose announcements are pending
    received.insert(origin);
    if (net.node(origin).kind == NodeKind::conformant) frontier.push(origin);
    while (!frontier.empty()) {
        NodeId cur = frontier.front();
        frontier.pop();
        for (NodeId peer : net.node(cur).peers()) {
            if (received.count(peer)) continue;
            received.insert(peer);
            if (net.node(peer).kind == NodeKind::conformant) frontier.push(peer);
        }
    }
    return received;
}

// ------------------------------------------------------------
// Honest 1-of-3 multisig staged pairs: three genuine keys, linked the same
// way the camouflaged pairs are.
// ------------------------------------------------------------
struct HonestPair {
    MultisigPair first, second;
};

inline HonestPair honest_multisig_pair(Rng& rng, const FeePolicy& policy,
                                       StagingOutputOrder order, uint32_t tag,
                                       uint64_t deposit = 100'000) {
    Funding funding;
    funding.key = ec::gen_keypair(rng);
    Bytes seed_bytes;
    append_u32_le(seed_bytes, tag);
    funding.outpoint = OutPoint{sha256(seed_bytes), 0};
    funding.value = 20'000'000;

    auto link_key = ec::gen_keypair(rng);
    uint64_t second_needs = multisig_pair_funds_needed(policy, 1, deposit);

    MultisigPairParams p1;
    p1.order = order;
    p1.p2pkh_hash = hash160(link_key.pk33.data(), link_key.pk33.size());
    p1.p2pkh_value = second_needs;
    p1.fee_rate = 1;
    std::array<std::array<uint8_t, 33>, 2> slots1{ec::gen_keypair(rng).pk33,
                                                  ec::gen_keypair(rng).pk33};
    HonestPair pair;
    pair.first = build_multisig_pair_slots(slots1, funding, policy, p1, rng);

    uint32_t link_vout = (order == StagingOutputOrder::p2pkh_then_p2sh) ? 0 : 1;
    Funding linked{OutPoint{txid(pair.first.staging), link_vout}, second_needs, link_key};
    MultisigPairParams p2;
    p2.order = order;
    auto dest = ec::gen_keypair(rng);
    p2.p2pkh_hash = hash160(dest.pk33.data(), dest.pk33.size());
    p2.p2pkh_value = deposit;
    p2.fee_rate = 1;
    std::array<std::array<uint8_t, 33>, 2> slots2{ec::gen_keypair(rng).pk33,
                                                  ec::gen_keypair(rng).pk33};
    pair.second = build_multisig_pair_slots(slots2, linked, policy, p2, rng);
    return pair;
}

} // namespace oracles
