#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "tithonus/chaining.hpp"
#include "tithonus/security.hpp"
#include "tithonus/simnet.hpp"
#include "tithonus/transport.hpp"
#include "tithonus/wallet.hpp"

namespace tithonus {

// ============================================================
// Directory entries (altruistic free content)
// ============================================================
constexpr size_t MAX_DESCRIPTION_BYTES = 256;

struct DirectoryEntry {
    std::string description; // up to 256 bytes
    Hash32 leading_txid{};
    std::array<uint8_t, 64> signature{};

    Bytes signed_body() const {
        Bytes out;
        append_u16_le(out, static_cast<uint16_t>(description.size()));
        out.insert(out.end(), description.begin(), description.end());
        append_bytes(out, leading_txid);
        return out;
    }
    Bytes serialize() const {
        Bytes out = signed_body();
        append_bytes(out, signature);
        return out;
    }
    static DirectoryEntry parse(const Bytes& raw) {
        ByteReader rd(raw);
        DirectoryEntry e;
        uint16_t n = rd.u16_le();
        if (n > MAX_DESCRIPTION_BYTES) throw ParseError("description too long");
        Bytes d = rd.take(n);
        e.description.assign(d.begin(), d.end());
        e.leading_txid = rd.take_array<32>();
        e.signature = rd.take_array<64>();
        if (!rd.done()) throw ParseError("trailing directory entry bytes");
        return e;
    }
    bool verify_under(const std::array<uint8_t, 33>& key) const {
        try {
            return ec::verify(ec::decompress(key.data()), sha256(signed_body()),
                              ec::Signature::from_compact(signature.data()));
        } catch (const std::exception&) {
            return false;
        }
    }
};

// ============================================================
// Chain scanning helpers
// ============================================================
struct TxAt {
    Transaction tx;
    uint32_t height; // 0 = genesis
};

inline std::vector<TxAt> chain_transactions(const SimNetwork& net) {
    std::vector<TxAt> out;
    for (const auto& blk : net.chain())
        for (const auto& id : blk.txids) {
            auto tx = net.find_tx(id);
            if (tx) out.push_back({*tx, blk.height});
        }
    return out;
}

// Staged payloads of a transaction list, optionally requiring and stripping
// a leading marker.
inline PayloadSource payload_source(const std::vector<Transaction>& txs,
                                    const Bytes& strip_marker = {}) {
    PayloadSource out;
    for (const auto& tx : txs) {
        Bytes payload;
        try {
            payload = extract_staged_payload(tx);
        } catch (const NotAStagedWrite&) {
            continue;
        }
        if (!strip_marker.empty()) {
            if (payload.size() < strip_marker.size() ||
                !std::equal(strip_marker.begin(), strip_marker.end(), payload.begin()))
                continue;
            payload.erase(payload.begin(), payload.begin() + strip_marker.size());
        }
        out.emplace_back(txid(tx), payload);
    }
    return out;
}

struct CertAt {
    Certificate cert;
    uint32_t height;
};

// Discovers CERT streams in chain order: every payload whose unit header
// reads as a first CERT unit seeds a scan; streams that complete and parse
// as certificates survive.
inline std::vector<CertAt> scan_cert_chain(const SimNetwork& net) {
    auto txs_at = chain_transactions(net);
    std::vector<Transaction> txs;
    std::unordered_map<Hash32, uint32_t, Hash32Hasher> height_of;
    for (const auto& t : txs_at) {
        txs.push_back(t.tx);
        height_of[txid(t.tx)] = t.height;
    }
    PayloadSource source = payload_source(txs);

    std::vector<CertAt> found;
    for (const auto& [id, payload] : source) {
        if (payload.empty() || payload[0] != static_cast<uint8_t>(UnitType::CERT)) continue;
        DataUnit first;
        try {
            first = DataUnit::decode_first(payload);
        } catch (const std::exception&) {
            continue;
        }
        if (!first.len || *first.len == 0 || *first.len > 4096) continue;
        try {
            Bytes raw = scan(id, source);
            Certificate cert = Certificate::parse(raw);
            found.push_back({cert, height_of[id]});
        } catch (const std::exception&) {
            continue; // a follow unit misread as first, or a stray payload
        }
    }
    return found;
}

// The certificate governing a given height: the newest one published at or
// below it.
inline std::optional<Certificate> cert_for_height(const std::vector<CertAt>& chain,
                                                  uint32_t height) {
    std::optional<Certificate> best;
    for (const auto& c : chain)
        if (c.height <= height && (!best || c.cert.seq > best->seq)) best = c.cert;
    return best;
}

struct DirectoryListing {
    std::vector<DirectoryEntry> entries;
    std::vector<DirectoryEntry> rejected; // bad signatures, reported not merged
};

inline DirectoryListing read_directory(const SimNetwork& net, const std::vector<CertAt>& certs,
                                       const Bytes& dir_marker) {
    auto txs_at = chain_transactions(net);
    std::vector<Transaction> txs;
    std::unordered_map<Hash32, uint32_t, Hash32Hasher> height_of;
    for (const auto& t : txs_at) {
        txs.push_back(t.tx);
        height_of[txid(t.tx)] = t.height;
    }
    PayloadSource source = payload_source(txs, dir_marker);

    DirectoryListing listing;
    for (const auto& [id, payload] : source) {
        if (payload.empty() || payload[0] != static_cast<uint8_t>(UnitType::DIR)) continue;
        DataUnit first;
        try {
            first = DataUnit::decode_first(payload);
        } catch (const std::exception&) {
            continue;
        }
        if (!first.len || *first.len == 0 || *first.len > 4096) continue;
        DirectoryEntry entry;
        try {
            entry = DirectoryEntry::parse(scan(id, source));
        } catch (const std::exception&) {
            continue;
        }
        auto cert = cert_for_height(certs, height_of[id]);
        if (cert && entry.verify_under(cert->public_key))
            listing.entries.push_back(entry);
        else
            listing.rejected.push_back(entry);
    }
    return listing;
}

// ============================================================
// Publishing (server side)
// ============================================================
struct PublishedStream {
    Hash32 leading_txid{};
    std::vector<Hash32> writing_txids;
    uint32_t unit_count = 0;
    uint64_t total_written_bytes = 0; // writing transactions only
};

// Writes content as chained staged transactions, one unit per pair. The
// optional marker prefixes every carried payload.
inline PublishedStream publish_stream(Transport& transport, Wallet& wallet, const Bytes& content,
                                      UnitType type, SeqAllocator& seqs, const TransportMode& mode,
                                      const FeePolicy& policy, Rng& rng,
                                      const std::optional<StreamKey>& key = std::nullopt,
                                      const Bytes& marker = {}) {
    size_t cap = capacity(WritingMethod::staged) - marker.size();
    auto units = fragment(content, type, cap, seqs, key);
    PublishedStream out;
    out.unit_count = static_cast<uint32_t>(units.size());
    for (const auto& u : units) {
        Bytes payload = marker;
        Bytes unit_bytes = u.encode();
        append_bytes(payload, unit_bytes);
        auto pair = build_staged_pair(payload, wallet.funding(), policy, mode.fee_rate, rng);
        wallet.consume(pair);
        transport.submit(pair.staging, mode);
        transport.submit(pair.writing, mode);
        out.writing_txids.push_back(txid(pair.writing));
        out.total_written_bytes += serialized_size(pair.writing);
    }
    out.leading_txid = out.writing_txids.front();
    return out;
}

// ============================================================
// Pay-per-access request (client side)
// ============================================================
constexpr size_t MAX_URI_BYTES = 59; // 84 - 25
constexpr uint32_t SEL_WHOLE_RESOURCE = 0xFFFFFFFF;

struct Selector {
    uint32_t offset = 0;
    uint32_t length = SEL_WHOLE_RESOURCE;
};

struct RequestMessage {
    Tag20 session_tag{};
    std::array<uint8_t, 8> pad{};
    Bytes ciphertext; // 84 bytes: E_K1(ttag, REQ, sel, uri)
};

struct RequestBuild {
    RequestMessage message;
    MultisigPair pair1, pair2;
};

// Embeds H_{K2}(R_CT, c) plus E_K1(ttag, REQ, SEL, URI) across the four
// placeholder slots of two staged pairs with (p2sh, p2pkh) staging outputs.
// The local counter advances after the build.
inline RequestBuild build_request(ClientRecord& record, const Tag16& ttag, const std::string& uri,
                                  const Selector& sel, const Funding& funding,
                                  const FeePolicy& policy, uint64_t fee_rate, Rng& rng) {
    if (uri.size() > MAX_URI_BYTES) throw UriTooLong(uri);

    RequestBuild out;
    out.message.session_tag = session_tag(record.k2, record.r_ct, record.counter);

    Bytes pt;
    append_bytes(pt, ttag);
    pt.push_back(static_cast<uint8_t>(UnitType::REQ));
    append_u32_be(pt, sel.offset);
    append_u32_be(pt, sel.length);
    Bytes uri_padded(MAX_URI_BYTES, 0);
    std::copy(uri.begin(), uri.end(), uri_padded.begin());
    append_bytes(pt, uri_padded);
    Bytes ct = cipher_encrypt(record.k1, record.pk_c, pt);
    if (detail::any_forbidden_block(ct))
        throw ForbiddenCiphertext("request ciphertext has no randomizable field");
    out.message.ciphertext = ct;

    // slot A: 20-byte tag + 8 random pad bytes, redrawn if the embedding
    // would be the forbidden value
    std::array<uint8_t, 28> slot_a{};
    std::copy(out.message.session_tag.begin(), out.message.session_tag.end(), slot_a.begin());
    do {
        auto pad = rng.array<8>();
        std::copy(pad.begin(), pad.end(), slot_a.begin() + 20);
        std::copy(pad.begin(), pad.end(), out.message.pad.begin());
    } while (is_forbidden_ciphertext(slot_a));

    auto camo = [&](const uint8_t* p) {
        std::array<uint8_t, 28> d{};
        std::copy(p, p + 28, d.begin());
        return embed_pubkey(d, rng).key.to33();
    };
    std::array<std::array<uint8_t, 33>, 2> slots1{embed_pubkey(slot_a, rng).key.to33(),
                                                  camo(ct.data())};
    std::array<std::array<uint8_t, 33>, 2> slots2{camo(ct.data() + 28), camo(ct.data() + 56)};

    ec::KeyPair link_key = ec::gen_keypair(rng);
    uint64_t companion2_value = 1000 * fee_rate; // unused output, safely above dust
    uint64_t pair2_needs = multisig_pair_funds_needed(policy, fee_rate, companion2_value);

    MultisigPairParams p1;
    p1.order = StagingOutputOrder::p2sh_then_p2pkh;
    p1.p2pkh_hash = hash160(link_key.pk33.data(), link_key.pk33.size());
    p1.p2pkh_value = pair2_needs;
    p1.fee_rate = fee_rate;
    out.pair1 = build_multisig_pair_slots(slots1, funding, policy, p1, rng);

    Funding linked{OutPoint{txid(out.pair1.staging), 1}, pair2_needs, link_key};
    MultisigPairParams p2;
    p2.order = StagingOutputOrder::p2sh_then_p2pkh;
    p2.p2pkh_hash = hash160(rng.bytes(20)); // unused
    p2.p2pkh_value = companion2_value;
    p2.fee_rate = fee_rate;
    out.pair2 = build_multisig_pair_slots(slots2, linked, policy, p2, rng);

    record.bump_counter();
    return out;
}

// ============================================================
// Response envelope
// ============================================================
// First writing payload: ttag(16) | session_tag(20) | E_K1(fee, RESP)(28) |
// first unit. Last writing payload ends with rev(ttag). Unit bodies are
// counter-mode encrypted under k1.
constexpr size_t RESPONSE_PREFIX_BYTES = 16 + 20 + 28;
constexpr size_t RESPONSE_TRAILER_BYTES = 16;

inline Tag16 rev_ttag(const Tag16& t) {
    Tag16 r;
    for (int i = 0; i < 16; i++) r[i] = t[15 - i];
    return r;
}

struct ResponseContent {
    uint64_t fee = 0;
    Bytes content;
};

// ============================================================
// URI resolution and pricing
// ============================================================
using UriResolver = std::function<std::optional<Bytes>(const std::string&)>;

// Serves from a local corpus directory, one file per uri, named by its hash.
inline std::string corpus_filename(const std::string& uri) {
    Bytes u(uri.begin(), uri.end());
    return to_hex(sha256(u)) + ".bin";
}

inline UriResolver corpus_resolver(std::string dir) {
    return [dir](const std::string& uri) -> std::optional<Bytes> {
        std::filesystem::path p = std::filesystem::path(dir) / corpus_filename(uri);
        std::ifstream in(p, std::ios::binary);
        if (!in) return std::nullopt;
        Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return data;
    };
}

struct PricingPolicy {
    uint64_t cached_divisor = 2; // cached content is charged at rate / divisor

    uint64_t per_byte(uint64_t fee_rate, bool cached) const {
        if (!cached) return fee_rate;
        uint64_t r = fee_rate / cached_divisor;
        return r == 0 ? 1 : r;
    }
};

enum class SubscriptionMode { per_update, per_time };

struct Subscription {
    std::array<uint8_t, 33> client_pk{};
    std::string uri;
    SubscriptionMode mode = SubscriptionMode::per_update;
    bool active = true;
};

// ============================================================
// Server
// ============================================================
class TithonusServer {
public:
    TithonusServer(SimNetwork& net, NodeId node, ServerIdentity identity, Wallet wallet,
                   UriResolver resolver, PricingPolicy pricing = {}, FeePolicy policy = {})
        : net_(net),
          transport_(net, node, policy),
          identity_(std::move(identity)),
          wallet_(std::move(wallet)),
          resolver_(std::move(resolver)),
          pricing_(pricing),
          policy_(policy) {}

    const Certificate& certificate() const { return identity_.cert; }
    const std::vector<ClientRecord>& records() const { return records_; }
    std::vector<ClientRecord>& records() { return records_; }
    SeqAllocator& seq_allocator() { return seqs_; }
    Wallet& wallet() { return wallet_; }

    void adopt_record(const ClientRecord& r) {
        records_.push_back(r);
        tag_index_[key_of(r.current_tag)] = records_.size() - 1;
    }

    // CERT units, on-chain.
    PublishedStream publish_certificate(const Certificate& cert, Rng& rng) {
        TransportMode mode = choose_mode(SendIntent::asynchronous, policy_);
        return publish_stream(transport_, wallet_, cert.serialize(), UnitType::CERT, seqs_, mode,
                              policy_, rng);
    }

    // Rotation: the new certificate is signed by the current key, published,
    // then adopted as the serving identity.
    PublishedStream rotate_certificate(const CertificateFields& fields, const ec::KeyPair& new_key,
                                       Rng& rng) {
        Certificate next =
            gen_certificate(PrevCertificate{identity_.cert, identity_.sk}, fields, new_key);
        auto stream = publish_certificate(next, rng);
        identity_ = ServerIdentity{next, new_key.sk};
        return stream;
    }

    // Free content: cleartext DATA units on-chain, then a signed DIR entry
    // carried in dir_marker-tagged transactions.
    DirectoryEntry publish_free(const Bytes& content, const std::string& description, Rng& rng) {
        if (description.size() > MAX_DESCRIPTION_BYTES) throw BadLength("description too long");
        TransportMode mode = choose_mode(SendIntent::asynchronous, policy_);
        auto data_stream = publish_stream(transport_, wallet_, content, UnitType::DATA, seqs_,
                                          mode, policy_, rng);
        last_publish_ = data_stream;

        DirectoryEntry entry;
        entry.description = description;
        entry.leading_txid = data_stream.leading_txid;
        entry.signature = ec::sign(identity_.sk, sha256(entry.signed_body())).to_compact();
        publish_stream(transport_, wallet_, entry.serialize(), UnitType::DIR, seqs_, mode, policy_,
                       rng, std::nullopt, identity_.cert.dir_marker);
        return entry;
    }

    const std::optional<PublishedStream>& last_publish() const { return last_publish_; }

    // One scan pass over everything the server's node has seen: adopts new
    // registrations and answers new requests. Non-matching traffic is
    // skipped without side effects.
    struct TrafficSummary {
        size_t new_records = 0;
        size_t responses_sent = 0;
    };

    TrafficSummary process_traffic(Rng& rng) {
        TrafficSummary summary;
        auto txs = net_.known_transactions();
        summary.new_records = scan_registrations(txs);
        summary.responses_sent = scan_requests(txs, rng);
        return summary;
    }

    // Subscriptions
    void subscribe(const std::array<uint8_t, 33>& client_pk, const std::string& uri,
                   SubscriptionMode mode, Rng& rng) {
        subscriptions_.push_back(Subscription{client_pk, uri, mode, true});
        if (!content_keys_.count(uri)) rotate_content_key(uri, rng);
    }

    void rotate_content_key(const std::string& uri, Rng& rng) {
        content_keys_[uri] = rng.array<32>();
    }

    const std::vector<Subscription>& subscriptions() const { return subscriptions_; }

    // Publishes one update: content encrypted once under the content key,
    // cost split across the active subscribers, and a per-subscriber key
    // delivery unit appended. Returns the share each subscriber paid.
    uint64_t publish_update(const std::string& uri, const Bytes& content, Rng& rng) {
        std::vector<size_t> payers;
        for (size_t i = 0; i < subscriptions_.size(); i++) {
            auto& sub = subscriptions_[i];
            if (!sub.active || sub.uri != uri) continue;
            auto* rec = record_for(sub.client_pk);
            if (!rec || rec->credit == 0) {
                sub.active = false;
                continue;
            }
            payers.push_back(i);
        }
        if (payers.empty()) throw InactiveSubscription(uri);

        TransportMode mode = choose_mode(SendIntent::asynchronous, policy_);
        StreamKey ck{content_keys_.at(uri)};
        auto stream = publish_stream(transport_, wallet_, content, UnitType::DATA, seqs_, mode,
                                     policy_, rng, ck);
        uint64_t cost = stream.total_written_bytes * identity_.cert.fee_rate;
        uint64_t share = cost / payers.size();

        for (size_t i : payers) {
            auto& sub = subscriptions_[i];
            auto* rec = record_for(sub.client_pk);
            uint64_t charge = std::min(share, rec->credit);
            rec->credit -= charge;
            if (rec->credit == 0) sub.active = false;
            deliver_content_key(*rec, ck.key, stream.leading_txid, rng);
        }
        return share;
    }

private:
    static std::string key_of(const Tag20& t) { return std::string(t.begin(), t.end()); }

    ClientRecord* record_for(const std::array<uint8_t, 33>& pk) {
        for (auto& r : records_)
            if (r.pk_c == pk) return &r;
        return nullptr;
    }

    void reindex_tag(size_t idx, const Tag20& old_tag) {
        tag_index_.erase(key_of(old_tag));
        tag_index_[key_of(records_[idx].current_tag)] = idx;
    }

    size_t scan_registrations(const std::vector<Transaction>& txs) {
        auto recs = server_scan_creg(txs, identity_);
        size_t added = 0;
        for (const auto& r : recs) {
            bool known = false;
            for (const auto& have : records_)
                if (have.pk_c == r.pk_c) known = true;
            if (known) continue;
            adopt_record(r);
            added++;
        }
        return added;
    }

    size_t scan_requests(const std::vector<Transaction>& txs, Rng& rng) {
        size_t sent = 0;
        for (const auto& cand : find_candidate_pairs(txs, StagingOutputOrder::p2sh_then_p2pkh)) {
            Hash32 w1 = txid(cand.writing1);
            if (req_seen_.count(w1)) continue;
            std::vector<std::array<uint8_t, 33>> slots1, slots2;
            try {
                slots1 = extract_multisig_slots(cand.writing1, true);
                slots2 = extract_multisig_slots(cand.writing2, true);
            } catch (const NotMultisig&) {
                continue;
            }
            bool handled = false;
            for (const auto& r1 : unused_slot_readings(slots1)) {
                if (handled) break;
                auto d0 = extract_pubkey(r1[0]);
                Tag20 tag{};
                std::copy(d0.begin(), d0.begin() + 20, tag.begin());
                auto it = tag_index_.find(key_of(tag));
                if (it == tag_index_.end()) continue;
                size_t rec_idx = it->second;
                for (const auto& r2 : unused_slot_readings(slots2)) {
                    Bytes ct;
                    auto push_d = [&ct](const std::array<uint8_t, 33>& s) {
                        auto d = extract_pubkey(s);
                        ct.insert(ct.end(), d.begin(), d.end());
                    };
                    push_d(r1[1]);
                    push_d(r2[0]);
                    push_d(r2[1]);
                    ClientRecord& rec = records_[rec_idx];
                    Bytes pt = cipher_decrypt(rec.k1, rec.pk_c, ct);
                    if (!std::equal(identity_.cert.ttag.begin(), identity_.cert.ttag.end(),
                                    pt.begin()))
                        continue;
                    if (pt[16] != static_cast<uint8_t>(UnitType::REQ)) continue;

                    Selector sel;
                    sel.offset = uint32_t(pt[17]) << 24 | uint32_t(pt[18]) << 16 |
                                 uint32_t(pt[19]) << 8 | pt[20];
                    sel.length = uint32_t(pt[21]) << 24 | uint32_t(pt[22]) << 16 |
                                 uint32_t(pt[23]) << 8 | pt[24];
                    std::string uri(pt.begin() + 25, pt.end());
                    uri.erase(uri.find_last_not_of('\0') + 1);

                    req_seen_.insert(w1);
                    handled = true;
                    if (answer_request(rec_idx, sel, uri, rng)) sent++;
                    break;
                }
            }
        }
        return sent;
    }

    // Counter discipline: the request matched at c, both sides move to c+1;
    // the response is tagged with c+1 and both sides move to c+2.
    bool answer_request(size_t rec_idx, const Selector& sel, const std::string& uri, Rng& rng) {
        ClientRecord& rec = records_[rec_idx];
        Tag20 old_tag = rec.current_tag;
        rec.bump_counter();
        reindex_tag(rec_idx, old_tag);

        if (rec.credit == 0) return false; // ignored, counter already advanced
        auto content = resolver_(uri);
        if (!content) return false;

        bool cached = served_uris_.count(uri) != 0;
        uint64_t per_byte = pricing_.per_byte(identity_.cert.fee_rate, cached);

        uint64_t offset = std::min<uint64_t>(sel.offset, content->size());
        uint64_t wanted =
            (sel.length == SEL_WHOLE_RESOURCE) ? content->size() - offset : sel.length;
        wanted = std::min<uint64_t>(wanted, content->size() - offset);
        uint64_t afford = rec.credit / per_byte;
        uint64_t answering = std::min(wanted, afford); // covered prefix from the offset
        if (answering == 0) return false;

        uint64_t fee = answering * per_byte;
        rec.credit -= fee;
        served_uris_.insert(uri);

        Bytes answer(content->begin() + offset, content->begin() + offset + answering);
        send_response(rec_idx, fee, answer, rng);
        return true;
    }

    void send_response(size_t rec_idx, uint64_t fee, const Bytes& answer, Rng& rng) {
        ClientRecord& rec = records_[rec_idx];
        Tag20 resp_tag = rec.current_tag; // tag at the incremented counter

        Bytes header_pt;
        append_u64_be(header_pt, fee);
        header_pt.push_back(static_cast<uint8_t>(UnitType::RESP));
        header_pt.resize(28, 0);
        Bytes header_ct = cipher_encrypt(rec.k1, rec.pk_c, header_pt);

        size_t cap = capacity(WritingMethod::staged) - RESPONSE_PREFIX_BYTES
                     - RESPONSE_TRAILER_BYTES;
        StreamKey sk{rec.k1};
        auto units = fragment(answer, UnitType::RESP, cap, seqs_, sk);

        TransportMode mode = choose_mode(SendIntent::interactive, policy_);
        for (size_t i = 0; i < units.size(); i++) {
            Bytes payload;
            if (i == 0) {
                append_bytes(payload, identity_.cert.ttag);
                append_bytes(payload, resp_tag);
                append_bytes(payload, header_ct);
            }
            append_bytes(payload, units[i].encode());
            if (i + 1 == units.size()) append_bytes(payload, rev_ttag(identity_.cert.ttag));
            auto pair = build_staged_pair(payload, wallet_.funding(), policy_, mode.fee_rate, rng);
            wallet_.consume(pair);
            transport_.submit(pair.staging, mode);
            transport_.submit(pair.writing, mode);
        }

        Tag20 old_tag = rec.current_tag;
        rec.bump_counter(); // move past the response tag
        reindex_tag(rec_idx, old_tag);
    }

    void deliver_content_key(ClientRecord& rec, const std::array<uint8_t, 32>& content_key,
                             const Hash32& leading, Rng& rng) {
        // tag(20) | E_K1(content_key(32) | leading_txid(32) | pad(20))
        Bytes payload;
        append_bytes(payload, rec.current_tag);
        Bytes pt;
        append_bytes(pt, content_key);
        append_bytes(pt, leading);
        append_bytes(pt, rng.bytes(20));
        append_bytes(payload, cipher_encrypt(rec.k1, rec.pk_c, pt));

        TransportMode mode = choose_mode(SendIntent::asynchronous, policy_);
        auto pair = build_staged_pair(payload, wallet_.funding(), policy_, mode.fee_rate, rng);
        wallet_.consume(pair);
        transport_.submit(pair.staging, mode);
        transport_.submit(pair.writing, mode);

        size_t idx = static_cast<size_t>(&rec - records_.data());
        Tag20 old_tag = rec.current_tag;
        rec.bump_counter();
        reindex_tag(idx, old_tag);
    }

    SimNetwork& net_;
    Transport transport_;
    ServerIdentity identity_;
    Wallet wallet_;
    UriResolver resolver_;
    PricingPolicy pricing_;
    FeePolicy policy_;
    SeqAllocator seqs_{1};
    std::vector<ClientRecord> records_;
    std::unordered_map<std::string, size_t> tag_index_;
    std::unordered_set<Hash32, Hash32Hasher> req_seen_;
    std::unordered_map<std::string, std::array<uint8_t, 32>> content_keys_;
    std::unordered_set<std::string> served_uris_;
    std::vector<Subscription> subscriptions_;
    std::optional<PublishedStream> last_publish_;
};

// ============================================================
// Client
// ============================================================
class TithonusClient {
public:
    TithonusClient(SimNetwork& net, NodeId node, Wallet wallet, FeePolicy policy = {})
        : net_(net), transport_(net, node, policy), wallet_(std::move(wallet)), policy_(policy) {}

    NodeId node() const { return transport_.origin(); }
    Wallet& wallet() { return wallet_; }
    const std::optional<ClientRecord>& record() const { return record_; }
    std::optional<ClientRecord>& record() { return record_; }

    // Verified certificate chain from the client's own chain view.
    std::vector<CertAt> read_certificates() const {
        auto found = scan_cert_chain(net_);
        std::vector<Certificate> certs;
        for (const auto& c : found) certs.push_back(c.cert);
        auto verdict = verify_chain(certs);
        if (!verdict.ok) return {};
        return found;
    }

    // Registration: builds the two camouflaged pairs and submits them swift.
    ClientRegistration register_with(const Certificate& cert, uint64_t deposit, Rng& rng) {
        TransportMode mode = choose_mode(SendIntent::interactive, policy_);
        auto reg = client_register(cert, wallet_.funding(), deposit, policy_, mode.fee_rate, rng);
        transport_.submit(reg.pair1.staging, mode);
        transport_.submit(reg.pair1.writing, mode);
        transport_.submit(reg.pair2.staging, mode);
        transport_.submit(reg.pair2.writing, mode);
        wallet_.consume(reg.pair1);
        record_ = reg.record;
        cert_ = cert;
        return reg;
    }

    // Adopts a previously persisted record.
    void register_record(const ClientRecord& rec, const Certificate& cert) {
        record_ = rec;
        cert_ = cert;
    }

    // Re-registration escape hatch for counter desync: fresh keys, fresh
    // record, no byte overlap with the previous attempt.
    ClientRegistration re_register(uint64_t deposit, Rng& rng) {
        if (!cert_) throw Error("no certificate on file");
        return register_with(*cert_, deposit, rng);
    }

    DirectoryListing directory() const {
        auto certs = read_certificates();
        if (certs.empty()) return {};
        return read_directory(net_, certs, certs[0].cert.dir_marker);
    }

    Bytes fetch_free(const DirectoryEntry& entry) const {
        auto txs = net_.chain_view();
        return scan(entry.leading_txid, payload_source(txs));
    }

    RequestBuild request(const std::string& uri, const Selector& sel, Rng& rng) {
        if (!record_ || !cert_) throw Error("not registered");
        TransportMode mode = choose_mode(SendIntent::interactive, policy_);
        auto build =
            build_request(*record_, cert_->ttag, uri, sel, wallet_.funding(), policy_,
                          mode.fee_rate, rng);
        transport_.submit(build.pair1.staging, mode);
        transport_.submit(build.pair1.writing, mode);
        transport_.submit(build.pair2.staging, mode);
        transport_.submit(build.pair2.writing, mode);
        wallet_.consume(build.pair1);
        return build;
    }

    // Scans mempool and chain for a response marshalled by ttag ... rev(ttag)
    // addressed to this record's current counter.
    std::optional<ResponseContent> match_response() {
        if (!record_ || !cert_) throw Error("not registered");
        ClientRecord& rec = *record_;
        const Tag16& ttag = cert_->ttag;
        Tag20 expect = session_tag(rec.k2, rec.r_ct, rec.counter);

        auto mem = net_.mempool_view(node());
        auto chain = net_.chain_view();
        std::vector<Transaction> all = mem;
        all.insert(all.end(), chain.begin(), chain.end());
        PayloadSource source = payload_source(all);

        bool near_miss = false;
        for (const auto& [id, payload] : source) {
            if (payload.size() < RESPONSE_PREFIX_BYTES + UNIT_HEADER_FIRST) continue;
            if (!std::equal(ttag.begin(), ttag.end(), payload.begin())) continue;
            Tag20 tag{};
            std::copy(payload.begin() + 16, payload.begin() + 36, tag.begin());
            if (!std::equal(expect.begin(), expect.end(), tag.begin())) {
                for (int64_t d = -2; d <= 2; d++) {
                    if (d == 0) continue;
                    auto c = static_cast<uint64_t>(static_cast<int64_t>(rec.counter) + d);
                    if (session_tag(rec.k2, rec.r_ct, c) == tag) near_miss = true;
                }
                continue; // someone else's response, or our desync
            }
            return decode_response(payload, source);
        }
        if (near_miss) throw TagMismatch("counter desync detected, re-register to resume");
        return std::nullopt;
    }

private:
    ResponseContent decode_response(const Bytes& first_payload, const PayloadSource& source) {
        ClientRecord& rec = *record_;
        Bytes header_ct(first_payload.begin() + 36, first_payload.begin() + 64);
        Bytes header_pt = cipher_decrypt(rec.k1, rec.pk_c, header_ct);
        ResponseContent out;
        ByteReader hrd(header_pt);
        out.fee = hrd.u64_be();
        if (hrd.u8() != static_cast<uint8_t>(UnitType::RESP))
            throw ParseError("response header type");

        Bytes first_unit_bytes(first_payload.begin() + RESPONSE_PREFIX_BYTES,
                               first_payload.end());
        DataUnit first = DataUnit::decode_first(first_unit_bytes);
        uint32_t last_seq = first.seq + *first.len - 1;
        Tag16 trailer = rev_ttag(cert_->ttag);

        // single-unit responses carry the trailer on the same payload
        if (*first.len == 1) {
            if (first.body.size() < RESPONSE_TRAILER_BYTES) throw ParseError("short response");
            Bytes tail(first.body.end() - 16, first.body.end());
            if (!std::equal(trailer.begin(), trailer.end(), tail.begin()))
                throw ParseError("bad response trailer");
            first.body.resize(first.body.size() - 16);
        }

        StreamCursor cursor = StreamCursor::from_first(first);
        StreamKey key{rec.k1};
        std::optional<Bytes> content;
        if (cursor.complete) {
            StreamCursor fresh = cursor;
            fresh.collected.clear();
            fresh.complete = false;
            content = assemble(fresh, first, key);
        } else {
            for (const auto& [id, payload] : source) {
                DataUnit u;
                try {
                    u = DataUnit::decode_follow(payload);
                } catch (const std::exception&) {
                    continue;
                }
                if (!cursor.wants(u.seq)) continue;
                if (u.seq == last_seq) {
                    if (u.body.size() < RESPONSE_TRAILER_BYTES) continue;
                    Bytes tail(u.body.end() - 16, u.body.end());
                    if (!std::equal(trailer.begin(), trailer.end(), tail.begin())) continue;
                    u.body.resize(u.body.size() - 16);
                }
                content = assemble(cursor, u, key);
                if (content) break;
            }
        }
        if (!content)
            throw IncompleteStream("have " + std::to_string(cursor.collected.size()) + " of " +
                                   std::to_string(cursor.len) + " response units");
        out.content = *content;
        rec.bump_counter(); // move past the matched response
        return out;
    }

public:
    // Subscription update retrieval: finds the key-delivery payload tagged
    // for this record, recovers the content key and leading txid, then
    // fetches the update stream.
    std::optional<Bytes> fetch_update() {
        if (!record_) throw Error("not registered");
        ClientRecord& rec = *record_;
        Tag20 expect = session_tag(rec.k2, rec.r_ct, rec.counter);

        auto mem = net_.mempool_view(node());
        auto chain = net_.chain_view();
        std::vector<Transaction> all = mem;
        all.insert(all.end(), chain.begin(), chain.end());
        PayloadSource source = payload_source(all);

        for (const auto& [id, payload] : source) {
            if (payload.size() != 20 + 84) continue;
            if (!std::equal(expect.begin(), expect.end(), payload.begin())) continue;
            Bytes ct(payload.begin() + 20, payload.end());
            Bytes pt = cipher_decrypt(rec.k1, rec.pk_c, ct);
            StreamKey ck{};
            std::copy(pt.begin(), pt.begin() + 32, ck.key.begin());
            Hash32 leading{};
            std::copy(pt.begin() + 32, pt.begin() + 64, leading.begin());
            rec.bump_counter();
            return scan(leading, source, ck);
        }
        return std::nullopt;
    }

private:
    SimNetwork& net_;
    Transport transport_;
    Wallet wallet_;
    FeePolicy policy_;
    std::optional<ClientRecord> record_;
    std::optional<Certificate> cert_;
};

// Exchange-hop payment obfuscation is out of scope; funds pass through
// unchanged.
inline uint64_t obfuscate_payment(uint64_t amount) { return amount; }

} // namespace tithonus
