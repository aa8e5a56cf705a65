#pragma once

#include <fstream>
#include <sstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tithonus/chaining.hpp"
#include "tithonus/ec.hpp"
#include "tithonus/embedding.hpp"
#include "tithonus/rijndael.hpp"
#include "tithonus/txmodel.hpp"
#include "tithonus/wallet.hpp"

namespace tithonus {

using Tag16 = std::array<uint8_t, 16>;
using Tag20 = std::array<uint8_t, 20>;

// ============================================================
// Certificates: the root of trust, published as CERT units
// ============================================================
struct Suite {
    std::vector<std::string> algorithms = {
        "ecdh-secp256k1", "kdf-x963-sha256", "sha256", "rijndael224-cbc", "hmac-sha256-20"};

    bool operator==(const Suite& o) const { return algorithms == o.algorithms; }
};

struct Certificate {
    uint32_t seq = 0;
    std::array<uint8_t, 33> public_key{}; // pk_T
    Tag16 ttag{};
    uint64_t fee_rate = 1; // satoshi per written byte for paid replies
    Suite suite;
    Bytes dir_marker; // optional tag on DIR-carrying transactions
    std::array<uint8_t, 64> signature{};

    Bytes signed_body() const {
        Bytes out;
        out.push_back(0x01); // layout version
        append_u32_be(out, seq);
        append_bytes(out, public_key);
        append_bytes(out, ttag);
        append_u64_be(out, fee_rate);
        out.push_back(static_cast<uint8_t>(suite.algorithms.size()));
        for (const auto& a : suite.algorithms) {
            out.push_back(static_cast<uint8_t>(a.size()));
            out.insert(out.end(), a.begin(), a.end());
        }
        out.push_back(static_cast<uint8_t>(dir_marker.size()));
        append_bytes(out, dir_marker);
        return out;
    }

    Bytes serialize() const {
        Bytes out = signed_body();
        append_bytes(out, signature);
        return out;
    }

    static Certificate parse(const Bytes& raw) {
        ByteReader rd(raw);
        if (rd.u8() != 0x01) throw ParseError("certificate layout version");
        Certificate c;
        c.seq = rd.u32_be();
        c.public_key = rd.take_array<33>();
        c.ttag = rd.take_array<16>();
        c.fee_rate = rd.u64_be();
        uint8_t n = rd.u8();
        c.suite.algorithms.clear();
        for (uint8_t i = 0; i < n; i++) {
            Bytes a = rd.take(rd.u8());
            c.suite.algorithms.emplace_back(a.begin(), a.end());
        }
        c.dir_marker = rd.take(rd.u8());
        c.signature = rd.take_array<64>();
        if (!rd.done()) throw ParseError("trailing certificate bytes");
        return c;
    }

    bool verify_under(const std::array<uint8_t, 33>& signer_key) const {
        try {
            ec::Point pk = ec::decompress(signer_key.data());
            return ec::verify(pk, sha256(signed_body()), ec::Signature::from_compact(signature.data()));
        } catch (const std::exception&) {
            return false;
        }
    }

    bool operator==(const Certificate& o) const { return serialize() == o.serialize(); }
};

struct CertificateFields {
    uint32_t seq = 0;
    Tag16 ttag{};
    uint64_t fee_rate = 1;
    Suite suite;
    Bytes dir_marker;
};

struct PrevCertificate {
    Certificate cert;
    ec::Scalar sk;
};

// Root is self-signed; every later certificate is signed with the previous
// certificate's private key.
inline Certificate gen_certificate(const std::optional<PrevCertificate>& prev,
                                   const CertificateFields& fields, const ec::KeyPair& new_key) {
    if ((fields.seq > 0) != prev.has_value())
        throw BadPrevKey("previous certificate required exactly when seq > 0");
    if (prev && prev->cert.seq + 1 != fields.seq)
        throw BadPrevKey("seq must follow the previous certificate");
    if (prev && ec::mul_base(prev->sk) != ec::decompress(prev->cert.public_key.data()))
        throw BadPrevKey("key does not match the previous certificate");
    Certificate c;
    c.seq = fields.seq;
    c.public_key = new_key.pk33;
    c.ttag = fields.ttag;
    c.fee_rate = fields.fee_rate;
    c.suite = fields.suite;
    c.dir_marker = fields.dir_marker;
    const ec::Scalar& signer = prev ? prev->sk : new_key.sk;
    c.signature = ec::sign(signer, sha256(c.signed_body())).to_compact();
    return c;
}

struct ChainVerdict {
    bool ok = false;
    std::optional<Certificate> newest;
};

// Chain order of appearance; seqs must run 0..k with each signature
// verifying under its predecessor.
inline ChainVerdict verify_chain(const std::vector<Certificate>& certs) {
    if (certs.empty()) return {};
    for (size_t i = 0; i < certs.size(); i++) {
        if (certs[i].seq != i) return {};
        const auto& signer = (i == 0) ? certs[0].public_key : certs[i - 1].public_key;
        if (!certs[i].verify_under(signer)) return {};
    }
    return {true, certs.back()};
}

// ============================================================
// Session keys (ECIES with an X9.63 KDF over the shared x)
// ============================================================
struct SessionKeys {
    std::array<uint8_t, 32> k1{};       // cipher key
    std::array<uint8_t, 32> k2{};       // tag key
    std::array<uint8_t, 32> shared_x{}; // S_x
};

inline Bytes kdf_x963(const uint8_t* secret, size_t secret_len, size_t out_len) {
    Bytes out;
    uint32_t counter = 1;
    while (out.size() < out_len) {
        Bytes block(secret, secret + secret_len);
        append_u32_be(block, counter++);
        append_bytes(out, sha256(block));
    }
    out.resize(out_len);
    return out;
}

inline SessionKeys derive_session(const ec::Scalar& sk_local, const ec::Point& pk_remote) {
    ec::Point s = ec::ecdh(sk_local, pk_remote);
    SessionKeys keys;
    keys.shared_x = s.x.to_bytes_be();
    Bytes material = kdf_x963(keys.shared_x.data(), 32, 64);
    std::copy(material.begin(), material.begin() + 32, keys.k1.begin());
    std::copy(material.begin() + 32, material.end(), keys.k2.begin());
    return keys;
}

// IV is a function of the client key: the leading 28 bytes of its hash.
inline std::array<uint8_t, 28> iv_from_pubkey(const std::array<uint8_t, 33>& pk) {
    Hash32 h = sha256(pk.data(), pk.size());
    std::array<uint8_t, 28> iv{};
    std::copy(h.begin(), h.begin() + 28, iv.begin());
    return iv;
}

inline Bytes cipher_encrypt(const std::array<uint8_t, 32>& k1,
                            const std::array<uint8_t, 33>& iv_source, const Bytes& plaintext) {
    return rijndael::cbc_encrypt(k1, iv_from_pubkey(iv_source), plaintext);
}

inline Bytes cipher_decrypt(const std::array<uint8_t, 32>& k1,
                            const std::array<uint8_t, 33>& iv_source, const Bytes& ciphertext) {
    return rijndael::cbc_decrypt(k1, iv_from_pubkey(iv_source), ciphertext);
}

// 20-byte session tag H_{k2}(r_ct, c)
inline Tag20 session_tag(const std::array<uint8_t, 32>& k2, const Tag16& r_ct, uint64_t counter) {
    Bytes msg(r_ct.begin(), r_ct.end());
    append_u64_be(msg, counter);
    Hash32 h = hmac_sha256(k2.data(), k2.size(), msg.data(), msg.size());
    Tag20 out{};
    std::copy(h.begin(), h.begin() + 20, out.begin());
    return out;
}

// ============================================================
// Client registration (CREG)
// ============================================================
constexpr size_t CREG_CIPHERTEXT_BYTES = 84; // three cipher blocks
constexpr size_t CREG_PADDING_BYTES = 19;
constexpr size_t CREG_MESSAGE_BYTES = 98;    // pk_c (33) + 65 plaintext bytes
constexpr size_t MULTISIG_PLACEHOLDER_BYTES = 132; // 4 unused 33-byte slots

struct RegistrationMessage {
    std::array<uint8_t, 33> pk_c{};
    Bytes ciphertext; // 84 bytes
};

struct ClientRecord {
    std::array<uint8_t, 33> pk_c{};
    std::array<uint8_t, 32> k1{};
    std::array<uint8_t, 32> k2{};
    Tag16 r_ct{};
    Tag20 current_tag{};
    uint64_t counter = 1;
    uint64_t credit = 0; // satoshi

    void bump_counter() {
        counter++;
        current_tag = session_tag(k2, r_ct, counter);
    }
};

struct ClientRegistration {
    RegistrationMessage message;
    MultisigPair pair1, pair2;
    ec::KeyPair key_c;    // sk_C / pk_C
    ec::KeyPair key_fee;  // deposit redemption key
    ec::KeyPair link_key; // owns the output linking the two staging txs
    SessionKeys session;
    ClientRecord record;  // client-side mirror of the server record
};

namespace detail {

inline bool any_forbidden_block(const Bytes& ct) {
    for (size_t off = 0; off + 28 <= ct.size(); off += 28) {
        std::array<uint8_t, 28> blk{};
        std::copy(ct.begin() + off, ct.begin() + off + 28, blk.begin());
        if (is_forbidden_ciphertext(blk)) return true;
    }
    return false;
}

} // namespace detail

// Builds the two camouflaged multisig pairs carrying
// pk_C, E_K1(ttag, CREG, r_ct, sk_fee, padding). Staging transactions use
// the (p2pkh, p2sh) template: the first p2pkh funds the second staging
// transaction, the second pair's p2pkh carries the deposit under
// hash160(pk_fee).
inline ClientRegistration client_register(const Certificate& cert, const Funding& funding,
                                          uint64_t fee_deposit, const FeePolicy& policy,
                                          uint64_t fee_rate, Rng& rng) {
    ClientRegistration reg;
    reg.key_c = ec::gen_keypair(rng);
    reg.key_fee = ec::gen_keypair(rng);
    reg.link_key = ec::gen_keypair(rng);
    reg.session = derive_session(reg.key_c.sk, ec::decompress(cert.public_key.data()));

    Tag16 r_ct = rng.array<16>();

    // plaintext: ttag(16) | CREG(1) | r_ct(16) | sk_fee(32) | padding(19)
    Bytes ct;
    for (;;) {
        Bytes pt;
        append_bytes(pt, cert.ttag);
        pt.push_back(static_cast<uint8_t>(UnitType::CREG));
        append_bytes(pt, r_ct);
        append_bytes(pt, reg.key_fee.sk.to_bytes_be());
        append_bytes(pt, rng.bytes(CREG_PADDING_BYTES));
        ct = cipher_encrypt(reg.session.k1, reg.key_c.pk33, pt);
        if (!detail::any_forbidden_block(ct)) break; // else re-randomize the padding
    }
    reg.message.pk_c = reg.key_c.pk33;
    reg.message.ciphertext = ct;

    // second pair money: deposit plus its transaction costs, measured on
    // dummy transactions with the final byte layout
    uint64_t pair2_needs = multisig_pair_funds_needed(policy, fee_rate, fee_deposit);

    std::array<std::array<uint8_t, 33>, 2> slots1{}, slots2{};
    slots1[0] = reg.key_c.pk33;
    auto embed28 = [&](size_t off) {
        std::array<uint8_t, 28> d{};
        std::copy(ct.begin() + off, ct.begin() + off + 28, d.begin());
        return embed_pubkey(d, rng).key.to33();
    };
    slots1[1] = embed28(0);
    slots2[0] = embed28(28);
    slots2[1] = embed28(56);

    MultisigPairParams p1;
    p1.order = StagingOutputOrder::p2pkh_then_p2sh;
    p1.p2pkh_hash = hash160(reg.link_key.pk33.data(), reg.link_key.pk33.size());
    p1.p2pkh_value = pair2_needs;
    p1.fee_rate = fee_rate;
    reg.pair1 = build_multisig_pair_slots(slots1, funding, policy, p1, rng);

    Funding linked;
    linked.outpoint = OutPoint{txid(reg.pair1.staging), 0};
    linked.value = pair2_needs;
    linked.key = reg.link_key;
    MultisigPairParams p2;
    p2.order = StagingOutputOrder::p2pkh_then_p2sh;
    p2.p2pkh_hash = hash160(reg.key_fee.pk33.data(), reg.key_fee.pk33.size());
    p2.p2pkh_value = fee_deposit;
    p2.fee_rate = fee_rate;
    reg.pair2 = build_multisig_pair_slots(slots2, linked, policy, p2, rng);

    reg.record.pk_c = reg.key_c.pk33;
    reg.record.k1 = reg.session.k1;
    reg.record.k2 = reg.session.k2;
    reg.record.r_ct = r_ct;
    reg.record.counter = 1;
    reg.record.current_tag = session_tag(reg.session.k2, r_ct, 1);
    reg.record.credit = fee_deposit;
    return reg;
}

// ============================================================
// Server-side scan
// ============================================================
struct ServerIdentity {
    Certificate cert;
    ec::Scalar sk; // sk_T for the current certificate
};

// A linked candidate pair: two multisig writing transactions whose staging
// transactions are chained by the first staging's p2pkh output.
struct CandidatePair {
    Transaction staging1, writing1;
    Transaction staging2, writing2;
};

namespace detail {

struct TemplateShape {
    uint32_t p2pkh_vout = 0;
    uint32_t p2sh_vout = 0;
};

inline std::optional<TemplateShape> staging_template(const Transaction& tx,
                                                     StagingOutputOrder order) {
    if (tx.outputs.size() != 2) return std::nullopt;
    auto k0 = classify_output(tx.outputs[0].script_pubkey);
    auto k1 = classify_output(tx.outputs[1].script_pubkey);
    if (order == StagingOutputOrder::p2pkh_then_p2sh) {
        if (k0 == OutputKind::p2pkh && k1 == OutputKind::p2sh) return TemplateShape{0, 1};
    } else {
        if (k0 == OutputKind::p2sh && k1 == OutputKind::p2pkh) return TemplateShape{1, 0};
    }
    return std::nullopt;
}

inline std::optional<Hash20> p2pkh_hash_of(const TxOutput& out) {
    auto ops = out.script_pubkey.parse();
    if (ops.size() != 5 || !ops[2].is_push() || ops[2].push->size() != 20) return std::nullopt;
    Hash20 h{};
    std::copy(ops[2].push->begin(), ops[2].push->end(), h.begin());
    return h;
}

} // namespace detail

// Enumerates linked staged multisig pairs with the given staging template.
inline std::vector<CandidatePair> find_candidate_pairs(const std::vector<Transaction>& txs,
                                                       StagingOutputOrder order) {
    std::unordered_map<Hash32, size_t, Hash32Hasher> by_id;
    for (size_t i = 0; i < txs.size(); i++) by_id[txid(txs[i])] = i;

    struct StagedHit {
        size_t staging_idx;
        size_t writing_idx;
        detail::TemplateShape shape;
    };
    std::vector<StagedHit> hits;
    std::unordered_map<OutPoint, size_t, OutPointHasher> by_staging_spend; // staging prevout -> hit

    for (size_t i = 0; i < txs.size(); i++) {
        const Transaction& w = txs[i];
        if (w.inputs.size() != 1) continue;
        try {
            (void)extract_multisig_slots(w, true);
        } catch (const NotMultisig&) {
            continue;
        }
        auto sit = by_id.find(w.inputs[0].prevout.txid);
        if (sit == by_id.end()) continue;
        const Transaction& s = txs[sit->second];
        auto shape = detail::staging_template(s, order);
        if (!shape || w.inputs[0].prevout.vout != shape->p2sh_vout) continue;
        if (s.inputs.size() == 1) by_staging_spend[s.inputs[0].prevout] = hits.size();
        hits.push_back(StagedHit{sit->second, i, *shape});
    }

    std::vector<CandidatePair> pairs;
    for (const auto& first : hits) {
        const Transaction& s1 = txs[first.staging_idx];
        // second staging spends s1's p2pkh output
        auto it = by_staging_spend.find(OutPoint{txid(s1), first.shape.p2pkh_vout});
        if (it == by_staging_spend.end()) continue;
        const auto& second = hits[it->second];
        pairs.push_back({s1, txs[first.writing_idx], txs[second.staging_idx],
                         txs[second.writing_idx]});
    }
    return pairs;
}

// All (first-unused, remaining-unused...) slot readings of a writing
// transaction, one per possible signing-slot position.
inline std::vector<std::array<std::array<uint8_t, 33>, 2>> unused_slot_readings(
    const std::vector<std::array<uint8_t, 33>>& slots) {
    std::vector<std::array<std::array<uint8_t, 33>, 2>> out;
    for (int signer = 0; signer < 3; signer++) {
        std::array<std::array<uint8_t, 33>, 2> reading{};
        int k = 0;
        for (int s = 0; s < 3; s++)
            if (s != signer) reading[k++] = slots[s];
        out.push_back(reading);
    }
    return out;
}

// Processes linked (p2pkh, p2sh) pairs: reads the first unused slot as a
// candidate pk_C, derives the session, decrypts the remaining 84 bytes and
// keeps records whose plaintext opens with (ttag, CREG) and whose deposit
// hash matches hash160(pk_fee). Everything else is silently skipped.
inline std::vector<ClientRecord> server_scan_creg(const std::vector<Transaction>& txs,
                                                  const ServerIdentity& server) {
    std::vector<ClientRecord> records;
    std::vector<std::array<uint8_t, 33>> seen_clients;

    for (const auto& cand :
         find_candidate_pairs(txs, StagingOutputOrder::p2pkh_then_p2sh)) {
        std::vector<std::array<uint8_t, 33>> slots1, slots2;
        try {
            slots1 = extract_multisig_slots(cand.writing1, true);
            slots2 = extract_multisig_slots(cand.writing2, true);
        } catch (const NotMultisig&) {
            continue;
        }

        bool matched = false;
        for (const auto& r1 : unused_slot_readings(slots1)) {
            if (matched) break;
            const auto& pk_c = r1[0];
            SessionKeys session;
            try {
                session = derive_session(server.sk, ec::decompress(pk_c.data()));
            } catch (const std::exception&) {
                continue; // not a curve point: cannot be a client key
            }
            for (const auto& r2 : unused_slot_readings(slots2)) {
                Bytes ct;
                auto push_d = [&ct](const std::array<uint8_t, 33>& slot) {
                    auto d = extract_pubkey(slot);
                    ct.insert(ct.end(), d.begin(), d.end());
                };
                push_d(r1[1]);
                push_d(r2[0]);
                push_d(r2[1]);
                Bytes pt = cipher_decrypt(session.k1, pk_c, ct);

                if (!std::equal(server.cert.ttag.begin(), server.cert.ttag.end(), pt.begin()))
                    continue;
                if (pt[16] != static_cast<uint8_t>(UnitType::CREG)) continue;

                Tag16 r_ct{};
                std::copy(pt.begin() + 17, pt.begin() + 33, r_ct.begin());
                ec::Scalar sk_fee;
                try {
                    U256 v = U256::from_bytes_be(pt.data() + 33);
                    if (v.is_zero() || v >= ec::OrderTag::modulus()) continue;
                    sk_fee = ec::Scalar::from_u256(v);
                } catch (const std::exception&) {
                    continue;
                }
                auto pk_fee = ec::compress(ec::mul_base(sk_fee));
                Hash20 want = hash160(pk_fee.data(), pk_fee.size());

                // deposit rides in the second staging's p2pkh output
                auto shape = detail::staging_template(cand.staging2,
                                                      StagingOutputOrder::p2pkh_then_p2sh);
                if (!shape) continue;
                auto deposit_hash = detail::p2pkh_hash_of(cand.staging2.outputs[shape->p2pkh_vout]);
                if (!deposit_hash || *deposit_hash != want) continue; // tampered: drop

                bool dup = false;
                for (const auto& c : seen_clients)
                    if (c == pk_c) dup = true;
                if (dup) {
                    matched = true;
                    break;
                }

                ClientRecord rec;
                rec.pk_c = pk_c;
                rec.k1 = session.k1;
                rec.k2 = session.k2;
                rec.r_ct = r_ct;
                rec.counter = 1;
                rec.current_tag = session_tag(session.k2, r_ct, 1);
                rec.credit = cand.staging2.outputs[shape->p2pkh_vout].value;
                records.push_back(rec);
                seen_clients.push_back(pk_c);
                matched = true;
                break;
            }
        }
    }
    return records;
}

// ============================================================
// Record persistence: line-delimited hex fields, append-only
// ============================================================
class RecordStore {
public:
    explicit RecordStore(std::string path) : path_(std::move(path)) {}

    static std::string format_record(const ClientRecord& r) {
        std::string line;
        line += to_hex(r.pk_c) + " ";
        line += to_hex(r.k1) + " ";
        line += to_hex(r.k2) + " ";
        line += to_hex(r.r_ct) + " ";
        line += to_hex(r.current_tag) + " ";
        line += std::to_string(r.counter) + " ";
        line += std::to_string(r.credit);
        return line;
    }

    static ClientRecord parse_record(const std::string& line) {
        std::istringstream in(line);
        std::string pk, k1, k2, rct, tag;
        uint64_t counter, credit;
        if (!(in >> pk >> k1 >> k2 >> rct >> tag >> counter >> credit))
            throw ParseError("bad record line");
        ClientRecord r;
        auto fill = [](auto& arr, const std::string& hex) {
            Bytes b = from_hex(hex);
            if (b.size() != arr.size()) throw ParseError("bad record field width");
            std::copy(b.begin(), b.end(), arr.begin());
        };
        fill(r.pk_c, pk);
        fill(r.k1, k1);
        fill(r.k2, k2);
        fill(r.r_ct, rct);
        fill(r.current_tag, tag);
        r.counter = counter;
        r.credit = credit;
        return r;
    }

    void append(const ClientRecord& r) const {
        std::ofstream out(path_, std::ios::app);
        if (!out) throw Error("cannot open record store " + path_);
        out << format_record(r) << "\n";
    }

    // Later lines supersede earlier ones for the same client.
    std::vector<ClientRecord> load() const {
        std::ifstream in(path_);
        std::vector<ClientRecord> out;
        if (!in) return out;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            ClientRecord r = parse_record(line);
            bool replaced = false;
            for (auto& existing : out)
                if (existing.pk_c == r.pk_c) {
                    existing = r;
                    replaced = true;
                }
            if (!replaced) out.push_back(r);
        }
        return out;
    }

    // Rewrites the file as one line per live record.
    void compact() const {
        auto records = load();
        std::ofstream out(path_, std::ios::trunc);
        for (const auto& r : records) out << format_record(r) << "\n";
    }

private:
    std::string path_;
};

} // namespace tithonus
