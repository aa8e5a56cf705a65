#include <catch2/catch_amalgamated.hpp>

#include <openssl/sha.h>
#include <set>

#include "oracles.hpp"
#include "tithonus/txmodel.hpp"

using namespace tithonus;

namespace {

// second implementation of the id hash, for independence
Hash32 openssl_sha256d(const Bytes& b) {
    uint8_t h1[32], h2[32];
    SHA256(b.data(), b.size(), h1);
    SHA256(h1, 32, h2);
    Hash32 out{};
    std::copy(h2, h2 + 32, out.begin());
    return out;
}

OutputResolver map_resolver(std::map<std::string, TxOutput> m) {
    return [m](const OutPoint& op) -> std::optional<TxOutput> {
        auto it = m.find(txid_hex(op.txid) + ":" + std::to_string(op.vout));
        if (it == m.end()) return std::nullopt;
        return it->second;
    };
}

} // namespace

TEST_CASE("minimal transaction serializes to 60 bytes") {
    Transaction tx;
    tx.inputs.push_back(TxInput{});
    tx.outputs.push_back(TxOutput{});
    CHECK(serialize(tx).size() == 60);
    CHECK(deserialize(serialize(tx)) == tx);
}

TEST_CASE("seeded fuzz corpus round-trips and matches the size oracle") {
    Rng rng(101);
    for (int i = 0; i < 1000; i++) {
        Transaction tx = oracles::random_tx(rng);
        Bytes raw = serialize(tx);
        CHECK(raw.size() == oracles::expected_tx_size(tx));
        Transaction back = deserialize(raw);
        REQUIRE(back == tx);
        REQUIRE(serialize(back) == raw);
    }
}

TEST_CASE("hex interchange is lowercase and lossless") {
    Rng rng(102);
    Transaction tx = oracles::random_tx(rng);
    std::string hex = tx_to_hex(tx);
    for (char c : hex) CHECK((std::isdigit(c) || (c >= 'a' && c <= 'f')));
    CHECK(tx_from_hex(hex) == tx);
}

TEST_CASE("deserialize rejects trailing and truncated input") {
    Transaction tx;
    tx.inputs.push_back(TxInput{});
    tx.outputs.push_back(TxOutput{});
    Bytes raw = serialize(tx);
    Bytes extra = raw;
    extra.push_back(0);
    CHECK_THROWS_AS(deserialize(extra), ParseError);
    Bytes cut(raw.begin(), raw.end() - 1);
    CHECK_THROWS_AS(deserialize(cut), ParseError);
}

TEST_CASE("txid is stable, sensitive and matches an independent hash") {
    Rng rng(103);
    Transaction tx = oracles::random_tx(rng);
    CHECK(txid(tx) == txid(tx));
    Transaction copy = tx;
    CHECK(txid(copy) == txid(tx));
    copy.locktime++;
    CHECK(txid(copy) != txid(tx));
    CHECK(txid(tx) == openssl_sha256d(serialize(tx)));
}

TEST_CASE("txid collision freedom at desk scale") {
    Rng rng(104);
    std::set<std::string> ids;
    for (int i = 0; i < 100000; i++) {
        Transaction tx;
        tx.inputs.push_back(TxInput{});
        tx.inputs[0].prevout.txid = rng.array<32>();
        tx.outputs.push_back(TxOutput{rng.u64(), Script{}});
        ids.insert(txid_hex(txid(tx)));
    }
    CHECK(ids.size() == 100000);
}

TEST_CASE("script parse view re-serializes byte-exactly") {
    Rng rng(105);
    for (int i = 0; i < 200; i++) {
        Script s;
        size_t ops = rng.below(8);
        for (size_t k = 0; k < ops; k++) {
            if (rng.coin())
                s.push_data(rng.bytes(rng.below(600)));
            else
                s.push_opcode(static_cast<uint8_t>(0x51 + rng.below(16)));
        }
        // byte-identical reconstruction from the parsed view
        Bytes out;
        for (const auto& op : s.parse()) {
            out.push_back(op.opcode);
            if (!op.is_push() || op.opcode == OP_0) continue;
            if (op.opcode == OP_PUSHDATA1) out.push_back(static_cast<uint8_t>(op.push->size()));
            else if (op.opcode == OP_PUSHDATA2) append_u16_le(out, static_cast<uint16_t>(op.push->size()));
            else if (op.opcode == OP_PUSHDATA4) append_u32_le(out, static_cast<uint32_t>(op.push->size()));
            append_bytes(out, *op.push);
        }
        REQUIRE(out == s.bytes());
    }
}

TEST_CASE("build_output templates") {
    SECTION("op_return takes up to 80 bytes") {
        Bytes eighty(80, 0xAB);
        TxOutput out = build_output(OutputKind::op_return, eighty, 0);
        CHECK(classify_output(out.script_pubkey) == OutputKind::op_return);
        Bytes eighty_one(81, 0xAB);
        CHECK_THROWS_AS(build_output(OutputKind::op_return, eighty_one, 0), WrongPayloadLength);
    }
    SECTION("p2pkh is the 25-byte template") {
        TxOutput out = build_output(OutputKind::p2pkh, Bytes(20, 0), 546);
        CHECK(out.script_pubkey.size() == 25);
        CHECK(classify_output(out.script_pubkey) == OutputKind::p2pkh);
    }
    SECTION("p2pk script length follows the template arithmetic") {
        Bytes key(33, 2);
        TxOutput out = build_output(OutputKind::p2pk, key, 1000);
        // push header + key + checksig, summed independently
        size_t expected = 1 + key.size() + 1;
        CHECK(out.script_pubkey.size() == expected);
        CHECK(classify_output(out.script_pubkey) == OutputKind::p2pk);
        CHECK_THROWS_AS(build_output(OutputKind::p2pk, Bytes(34, 2), 0), WrongPayloadLength);
    }
    SECTION("p2sh") {
        TxOutput out = build_output(OutputKind::p2sh, Bytes(20, 7), 1000);
        CHECK(out.script_pubkey.size() == 23);
        CHECK(classify_output(out.script_pubkey) == OutputKind::p2sh);
    }
}

TEST_CASE("compute_fee") {
    Transaction tx;
    tx.inputs.push_back(TxInput{});
    tx.inputs[0].prevout.vout = 0;
    tx.outputs.push_back(TxOutput{9000, Script{}});
    auto resolver = map_resolver({{txid_hex(tx.inputs[0].prevout.txid) + ":0",
                                   TxOutput{10000, Script{}}}});
    CHECK(compute_fee(tx, resolver) == 1000);

    tx.outputs[0].value = 10001;
    CHECK_THROWS_AS(compute_fee(tx, resolver), NegativeFee);

    tx.inputs[0].prevout.vout = 5;
    CHECK_THROWS_AS(compute_fee(tx, resolver), UnknownInput);
}

TEST_CASE("certificate transaction fee arithmetic at the published rate") {
    // an 895-byte transaction at 1.117 satoshi per byte costs 1000 satoshi
    const double rate = 1.117;
    const size_t bytes = 895;
    auto fee = static_cast<uint64_t>(std::llround(bytes * rate));
    CHECK(fee >= 995);
    CHECK(fee <= 1005);
    CHECK(fee == 1000);
}

TEST_CASE("validate_standard applies the relay rules") {
    FeePolicy policy;
    Rng rng(106);
    auto key = ec::gen_keypair(rng);
    Hash20 kh = hash160(key.pk33.data(), key.pk33.size());

    Transaction tx;
    tx.inputs.push_back(TxInput{});
    tx.inputs[0].script_sig = Script(Bytes(180, 0));
    tx.outputs.push_back(TxOutput{1000, p2pkh_script(kh)});
    tx.outputs.push_back(TxOutput{1000, p2pkh_script(kh)});
    size_t size = serialized_size(tx);

    SECTION("fee and dust both satisfied") {
        auto resolver = map_resolver({{txid_hex(Hash32{}) + ":0",
                                       TxOutput{2000 + size, p2pkh_script(kh)}}});
        auto rep = validate_standard(tx, resolver, policy);
        CHECK(rep.ok());
        CHECK(rep.find("fee_rate")->pass);
        CHECK(rep.find("dust")->pass);
    }
    SECTION("zero fee fails the rate rule") {
        auto resolver = map_resolver({{txid_hex(Hash32{}) + ":0",
                                       TxOutput{2000, p2pkh_script(kh)}}});
        auto rep = validate_standard(tx, resolver, policy);
        CHECK_FALSE(rep.ok());
        CHECK_FALSE(rep.find("fee_rate")->pass);
    }
    SECTION("dust rule is exact: output must exceed 3x fee") {
        // fee = size, outputs exactly 3x fee fail, 3x fee + 1 pass
        Transaction t2 = tx;
        t2.outputs.resize(1);
        size_t s2 = serialized_size(t2);
        t2.outputs[0].value = 3 * s2;
        auto r1 = map_resolver({{txid_hex(Hash32{}) + ":0",
                                 TxOutput{t2.outputs[0].value + s2, p2pkh_script(kh)}}});
        CHECK_FALSE(validate_standard(t2, r1, policy).find("dust")->pass);
        t2.outputs[0].value = 3 * s2 + 1;
        auto r2 = map_resolver({{txid_hex(Hash32{}) + ":0",
                                 TxOutput{t2.outputs[0].value + s2, p2pkh_script(kh)}}});
        CHECK(validate_standard(t2, r2, policy).find("dust")->pass);
    }
    SECTION("op_return outputs are exempt from the dust rule") {
        Transaction t2 = tx;
        t2.outputs[1] = build_output(OutputKind::op_return, Bytes{1, 2, 3}, 0);
        size_t s2 = serialized_size(t2);
        t2.outputs[0].value = 4 * s2;
        auto resolver = map_resolver({{txid_hex(Hash32{}) + ":0",
                                       TxOutput{5 * s2, p2pkh_script(kh)}}});
        CHECK(validate_standard(t2, resolver, policy).find("dust")->pass);
    }
    SECTION("oversized push fails") {
        Transaction t2 = tx;
        Script big;
        big.push_data(Bytes(521, 1));
        t2.inputs[0].script_sig = big;
        auto resolver = map_resolver({{txid_hex(Hash32{}) + ":0",
                                       TxOutput{100000000, p2pkh_script(kh)}}});
        CHECK_FALSE(validate_standard(t2, resolver, policy).find("push_size")->pass);
    }
    SECTION("p2sh scriptSig cap") {
        Transaction t2 = tx;
        Script ss;
        for (int i = 0; i < 4; i++) ss.push_data(Bytes(450, 0));
        t2.inputs[0].script_sig = ss; // 1808 bytes of pushes
        REQUIRE(t2.inputs[0].script_sig.size() > 1650);
        auto resolver = map_resolver({{txid_hex(Hash32{}) + ":0",
                                       TxOutput{100000000, p2sh_script(Hash20{})}}});
        CHECK_FALSE(validate_standard(t2, resolver, policy).find("p2sh_script_sig")->pass);
        // same script spending a p2pkh output is not capped
        auto resolver2 = map_resolver({{txid_hex(Hash32{}) + ":0",
                                        TxOutput{100000000, p2pkh_script(kh)}}});
        CHECK(validate_standard(t2, resolver2, policy).find("p2sh_script_sig")->pass);
    }
}

TEST_CASE("classification flags nonstandard outputs") {
    CHECK(classify_output(Script(Bytes{0xFF, 0x01})) == OutputKind::nonstandard);
    CHECK(classify_output(Script{}) == OutputKind::nonstandard);
}
