#pragma once

#include <algorithm>
#include <cstring>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tithonus/errors.hpp"
#include "tithonus/kvconfig.hpp"
#include "tithonus/rng.hpp"
#include "tithonus/txmodel.hpp"

namespace tithonus {

// Deterministic discrete-event Bitcoin gossip fabric. Time is an abstract
// tick counter; every message costs one tick. Identical seed and config
// replay the identical event log.

using NodeId = uint32_t;

enum class Region { censored, free_world };
enum class NodeKind { conformant, non_conformant };

inline const char* region_name(Region r) { return r == Region::censored ? "censored" : "free"; }
inline const char* kind_name(NodeKind k) {
    return k == NodeKind::conformant ? "conformant" : "non_conformant";
}

struct SimNode {
    NodeId id = 0;
    Region region = Region::free_world;
    NodeKind kind = NodeKind::conformant;
    bool c_node = false; // censor-controlled; owns the cross-border links under the filter topology
    std::vector<NodeId> outbound;
    std::vector<NodeId> inbound;
    FeePolicy relay_policy;

    std::unordered_set<size_t> mempool;        // indexes into the global tx store
    std::unordered_map<size_t, uint64_t> arrival_tick;
    std::unordered_map<size_t, uint32_t> arrival_hops;

    std::vector<NodeId> peers() const {
        std::vector<NodeId> all = outbound;
        all.insert(all.end(), inbound.begin(), inbound.end());
        return all;
    }
};

struct Block {
    uint32_t height = 0;
    std::vector<Hash32> txids;
    NodeId miner = 0;
    uint64_t tick = 0;
};

struct NetworkConfig {
    uint32_t censored_conformant = 0;
    uint32_t censored_nonconformant = 0;
    uint32_t free_conformant = 0;
    uint32_t free_nonconformant = 0;
    uint32_t c_nodes = 0;       // placed in the censored region, bridge the border
    uint32_t out_degree = 8;
    bool censor_topology = false;  // censored nodes may only peer inside the region
    bool filter_cross_border = false; // c-nodes drop transactions crossing the border
    std::set<NodeId> snooping_ids;
    FeePolicy relay_policy;
    uint64_t seed = 1;

    static NetworkConfig from_kv(const KvConfig& kv) {
        NetworkConfig c;
        c.censored_conformant = static_cast<uint32_t>(kv.get_int("censored_conformant", 10));
        c.censored_nonconformant = static_cast<uint32_t>(kv.get_int("censored_nonconformant", 0));
        c.free_conformant = static_cast<uint32_t>(kv.get_int("free_conformant", 10));
        c.free_nonconformant = static_cast<uint32_t>(kv.get_int("free_nonconformant", 0));
        c.c_nodes = static_cast<uint32_t>(kv.get_int("c_nodes", 0));
        c.out_degree = static_cast<uint32_t>(kv.get_int("out_degree", 8));
        c.censor_topology = kv.get_bool("censor_topology", false);
        c.filter_cross_border = kv.get_bool("censor_filter", false);
        c.relay_policy.min_fee_rate = static_cast<uint64_t>(kv.get_int("min_fee_rate", 1));
        c.relay_policy.standard_fee_rate = static_cast<uint64_t>(kv.get_int("standard_fee_rate", 9));
        c.seed = static_cast<uint64_t>(kv.get_int("seed", 1));
        return c;
    }
};

struct PropagationRow {
    NodeId node_id;
    Region region;
    NodeKind kind;
    uint64_t arrival_tick;
    uint32_t hops;
};

class SimNetwork {
public:
    explicit SimNetwork(const NetworkConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
        build_nodes();
        build_topology();
    }

    const NetworkConfig& config() const { return cfg_; }
    const std::vector<SimNode>& nodes() const { return nodes_; }
    SimNode& node(NodeId id) {
        if (id >= nodes_.size()) throw UnknownNode(std::to_string(id));
        return nodes_[id];
    }
    const SimNode& node(NodeId id) const {
        if (id >= nodes_.size()) throw UnknownNode(std::to_string(id));
        return nodes_[id];
    }
    uint64_t now() const { return now_; }
    const std::vector<Block>& chain() const { return chain_; }
    const std::vector<std::string>& event_log() const { return log_; }

    NodeId miner_id() const { return miner_; }
    void designate_miner(NodeId id) {
        if (node(id).region != Region::free_world || node(id).kind != NodeKind::conformant)
            throw BadConfig("miner must be a conformant free-world node");
        miner_ = id;
    }

    // Pre-chain funding transactions: recorded in the genesis block, visible
    // to every node's chain view, never gossiped.
    void add_genesis_tx(const Transaction& tx) {
        size_t idx = store_tx(tx);
        genesis_.push_back(idx);
        confirmed_in_[idx] = 0;
        chain_[0].txids.push_back(tx_store_[idx].id);
    }

    // State restore: appends a block of already-mined transactions without
    // gossiping them.
    void restore_block(const std::vector<Transaction>& txs) {
        Block blk;
        blk.height = static_cast<uint32_t>(chain_.size());
        blk.miner = miner_;
        blk.tick = now_;
        for (const auto& tx : txs) {
            size_t idx = store_tx(tx);
            if (confirmed_in_.count(idx)) continue;
            confirmed_in_[idx] = blk.height;
            blk.txids.push_back(tx_store_[idx].id);
        }
        chain_.push_back(blk);
    }

    OutputResolver resolver() const {
        return [this](const OutPoint& op) -> std::optional<TxOutput> {
            auto it = tx_index_.find(op.txid);
            if (it == tx_index_.end()) return std::nullopt;
            const Transaction& tx = tx_store_[it->second].tx;
            if (op.vout >= tx.outputs.size()) return std::nullopt;
            return tx.outputs[op.vout];
        };
    }

    // Injects at a node's own mempool and schedules gossip. Throws when the
    // origin's relay policy rejects the transaction.
    Hash32 inject(NodeId origin, const Transaction& tx) {
        auto rep = validate_standard(tx, resolver(), node(origin).relay_policy);
        if (!rep.ok()) {
            std::string why;
            for (const auto& r : rep.rules)
                if (!r.pass) why += r.rule + " ";
            throw RejectedAtOrigin(why);
        }
        size_t idx = store_tx(tx);
        accept_tx(origin, idx, now_, 0, origin);
        return tx_store_[idx].id;
    }

    // Drains the event queue.
    void run_to_quiescence() {
        while (!queue_.empty()) step();
    }

    // Runs until the queue empties, mining every `interval` ticks along the way.
    void run_with_mining(uint64_t interval) {
        uint64_t next_mine = now_ + interval;
        while (!queue_.empty()) {
            if (queue_.front().tick >= next_mine) {
                mine();
                next_mine += interval;
                continue;
            }
            step();
        }
        mine();
    }

    // Fiat mining: the designated miner drains its mempool into a block that
    // every node's chain view immediately includes. Blocking block delivery
    // is outside the threat model.
    Block mine() {
        SimNode& m = node(miner_);
        std::vector<size_t> included(m.mempool.begin(), m.mempool.end());
        std::sort(included.begin(), included.end()); // store order = first-seen order
        Block blk;
        blk.height = static_cast<uint32_t>(chain_.size());
        blk.miner = miner_;
        blk.tick = now_;
        for (size_t idx : included) {
            if (confirmed_in_.count(idx)) continue; // at most one block per txid
            blk.txids.push_back(tx_store_[idx].id);
            confirmed_in_[idx] = blk.height;
        }
        chain_.push_back(blk);
        for (auto& n : nodes_)
            for (size_t idx : included) n.mempool.erase(idx);
        log_line("mine height=" + std::to_string(blk.height) +
                 " txs=" + std::to_string(blk.txids.size()));
        return blk;
    }

    std::set<Hash32> mempool_query(NodeId id) const {
        const SimNode& n = node(id);
        std::set<Hash32> out;
        for (size_t idx : n.mempool) out.insert(tx_store_[idx].id);
        return out;
    }

    // Keepalive exchange; scheduled like any other message pair.
    void ping(NodeId from, NodeId to) {
        node(from);
        node(to);
        push_event(now_ + 1, Event::PING, from, to, 0, 0);
    }

    bool in_mempool(NodeId id, const Hash32& txid) const {
        auto it = tx_index_.find(txid);
        if (it == tx_index_.end()) return false;
        return node(id).mempool.count(it->second) != 0;
    }

    std::optional<uint64_t> confirmation_tick(const Hash32& txid) const {
        auto it = tx_index_.find(txid);
        if (it == tx_index_.end()) return std::nullopt;
        auto c = confirmed_in_.find(it->second);
        if (c == confirmed_in_.end()) return std::nullopt;
        return chain_[c->second].tick;
    }

    bool in_chain(const Hash32& txid) const { return confirmation_tick(txid).has_value(); }

    // Every transaction any node currently holds or the chain recorded, in
    // first-seen order: the scan surface for servers and clients.
    std::vector<Transaction> known_transactions() const {
        std::vector<Transaction> out;
        out.reserve(tx_store_.size());
        for (const auto& e : tx_store_) out.push_back(e.tx);
        return out;
    }

    std::vector<Transaction> chain_view() const {
        std::vector<Transaction> out;
        for (const auto& blk : chain_)
            for (const auto& id : blk.txids) out.push_back(tx_store_[tx_index_.at(id)].tx);
        return out;
    }

    std::vector<Transaction> mempool_view(NodeId id) const {
        const SimNode& n = node(id);
        std::vector<size_t> idxs(n.mempool.begin(), n.mempool.end());
        std::sort(idxs.begin(), idxs.end());
        std::vector<Transaction> out;
        for (size_t i : idxs) out.push_back(tx_store_[i].tx);
        return out;
    }

    std::optional<Transaction> find_tx(const Hash32& txid) const {
        auto it = tx_index_.find(txid);
        if (it == tx_index_.end()) return std::nullopt;
        return tx_store_[it->second].tx;
    }

    std::vector<PropagationRow> propagation_report(const Hash32& txid) const {
        auto it = tx_index_.find(txid);
        if (it == tx_index_.end()) return {};
        size_t idx = it->second;
        std::vector<PropagationRow> rows;
        for (const auto& n : nodes_) {
            auto a = n.arrival_tick.find(idx);
            if (a == n.arrival_tick.end()) continue;
            rows.push_back({n.id, n.region, n.kind, a->second, n.arrival_hops.at(idx)});
        }
        return rows;
    }

    static std::string report_csv(const std::vector<PropagationRow>& rows) {
        std::ostringstream out;
        out << "node_id,region,kind,arrival_tick,hops\n";
        for (const auto& r : rows)
            out << r.node_id << ',' << region_name(r.region) << ',' << kind_name(r.kind) << ','
                << r.arrival_tick << ',' << r.hops << '\n';
        return out.str();
    }

private:
    struct StoredTx {
        Transaction tx;
        Hash32 id;
    };

    struct Event {
        uint64_t tick;
        uint64_t seq; // insertion order breaks tick ties deterministically
        enum Kind { INV, GETDATA, TXDELIVER, PING, PONG } kind;
        NodeId from, to;
        size_t tx_idx;
        uint32_t hops;
    };

    void build_nodes() {
        uint32_t censored_total = cfg_.censored_conformant + cfg_.censored_nonconformant + cfg_.c_nodes;
        if (censored_total > 0 && cfg_.censored_conformant + cfg_.c_nodes == 0)
            throw BadConfig("censored region needs at least one conformant node");
        if (cfg_.free_conformant == 0) throw BadConfig("free region needs at least one conformant node");

        auto add = [&](Region r, NodeKind k, bool cn) {
            SimNode n;
            n.id = static_cast<NodeId>(nodes_.size());
            n.region = r;
            n.kind = k;
            n.c_node = cn;
            n.relay_policy = cfg_.relay_policy;
            nodes_.push_back(std::move(n));
        };
        for (uint32_t i = 0; i < cfg_.censored_conformant; i++) add(Region::censored, NodeKind::conformant, false);
        for (uint32_t i = 0; i < cfg_.censored_nonconformant; i++) add(Region::censored, NodeKind::non_conformant, false);
        for (uint32_t i = 0; i < cfg_.c_nodes; i++) add(Region::censored, NodeKind::conformant, true);
        for (uint32_t i = 0; i < cfg_.free_conformant; i++) add(Region::free_world, NodeKind::conformant, false);
        for (uint32_t i = 0; i < cfg_.free_nonconformant; i++) add(Region::free_world, NodeKind::non_conformant, false);

        if (cfg_.out_degree >= nodes_.size())
            throw BadConfig("out_degree must be below the node count");
        for (NodeId id : cfg_.snooping_ids)
            if (id >= nodes_.size()) throw BadConfig("snooping id out of range");

        for (const auto& n : nodes_)
            if (n.region == Region::free_world && n.kind == NodeKind::conformant && !n.c_node) {
                miner_ = n.id;
                break;
            }
        chain_.push_back(Block{0, {}, miner_, 0}); // genesis
    }

    void build_topology() {
        for (auto& n : nodes_) {
            std::vector<NodeId> candidates;
            for (const auto& peer : nodes_) {
                if (peer.id == n.id) continue;
                if (cfg_.censor_topology && !n.c_node && !peer.c_node &&
                    n.region != peer.region)
                    continue; // border links are c-node only under the filter topology
                candidates.push_back(peer.id);
            }
            uint32_t degree = std::min<uint32_t>(cfg_.out_degree,
                                                 static_cast<uint32_t>(candidates.size()));
            for (uint32_t k = 0; k < degree; k++) {
                size_t pick = rng_.below(candidates.size());
                NodeId peer = candidates[pick];
                candidates.erase(candidates.begin() + pick);
                n.outbound.push_back(peer);
                nodes_[peer].inbound.push_back(n.id);
            }
        }
    }

    size_t store_tx(const Transaction& tx) {
        Hash32 id = txid(tx);
        auto it = tx_index_.find(id);
        if (it != tx_index_.end()) return it->second;
        tx_store_.push_back({tx, id});
        tx_index_[id] = tx_store_.size() - 1;
        return tx_store_.size() - 1;
    }

    void accept_tx(NodeId at, size_t idx, uint64_t tick, uint32_t hops, NodeId from) {
        SimNode& n = nodes_[at];
        if (n.mempool.count(idx)) return;
        n.mempool.insert(idx);
        n.arrival_tick[idx] = tick;
        n.arrival_hops[idx] = hops;
        log_line("accept node=" + std::to_string(at) + " tx=" + txid_hex(tx_store_[idx].id) +
                 " tick=" + std::to_string(tick) + " hops=" + std::to_string(hops));
        if (n.kind != NodeKind::conformant) return; // accepts but never relays
        for (NodeId peer : n.peers()) {
            if (peer == from) continue;
            push_event(tick + 1, Event::INV, at, peer, idx, hops);
        }
    }

    bool border_filtered(const SimNode& from, const SimNode& to) const {
        if (!cfg_.filter_cross_border) return false;
        if (from.region == to.region) return false;
        // only censor-controlled nodes sit on the border under this topology,
        // and they drop transaction traffic in both directions
        return from.c_node || to.c_node;
    }

    void step() {
        Event ev = pop_event();
        now_ = ev.tick;
        SimNode& from = nodes_[ev.from];
        SimNode& to = nodes_[ev.to];
        switch (ev.kind) {
            case Event::INV: {
                if (border_filtered(from, to)) return;
                if (to.mempool.count(ev.tx_idx)) return;
                push_event(ev.tick + 1, Event::GETDATA, ev.to, ev.from, ev.tx_idx, ev.hops);
                break;
            }
            case Event::GETDATA: {
                if (!to.mempool.count(ev.tx_idx)) return; // no longer held
                push_event(ev.tick + 1, Event::TXDELIVER, ev.to, ev.from, ev.tx_idx, ev.hops);
                break;
            }
            case Event::TXDELIVER: {
                if (border_filtered(from, to)) return;
                const Transaction& tx = tx_store_[ev.tx_idx].tx;
                auto rep = validate_standard(tx, resolver(), to.relay_policy);
                if (!rep.ok()) return;
                accept_tx(ev.to, ev.tx_idx, ev.tick, ev.hops + 1, ev.from);
                break;
            }
            case Event::PING:
                push_event(ev.tick + 1, Event::PONG, ev.to, ev.from, 0, 0);
                break;
            case Event::PONG:
                break;
        }
    }

    void push_event(uint64_t tick, Event::Kind kind, NodeId from, NodeId to, size_t tx_idx,
                    uint32_t hops) {
        queue_.push_back(Event{tick, seq_++, kind, from, to, tx_idx, hops});
        std::push_heap(queue_.begin(), queue_.end(), event_after);
    }

    Event pop_event() {
        std::pop_heap(queue_.begin(), queue_.end(), event_after);
        Event ev = queue_.back();
        queue_.pop_back();
        return ev;
    }

    static bool event_after(const Event& a, const Event& b) {
        if (a.tick != b.tick) return a.tick > b.tick;
        return a.seq > b.seq;
    }

    void log_line(std::string s) { log_.push_back(std::move(s)); }

    NetworkConfig cfg_;
    Rng rng_;
    std::vector<SimNode> nodes_;
    NodeId miner_ = 0;
    uint64_t now_ = 0;
    uint64_t seq_ = 0;
    std::vector<Event> queue_;
    std::vector<StoredTx> tx_store_;
    std::unordered_map<Hash32, size_t, Hash32Hasher> tx_index_;
    std::unordered_map<size_t, uint32_t> confirmed_in_;
    std::vector<size_t> genesis_;
    std::vector<Block> chain_;
    std::vector<std::string> log_;
};

} // namespace tithonus
