// Operator bench for the whole stack: certificate management, publishing,
// registration and request flows, cost tables and scenario runs, all against
// a persistent simulated network kept under --state.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "tithonus/tithonus.hpp"

namespace fs = std::filesystem;
using namespace tithonus;

namespace {

constexpr int EXIT_OK = 0;
constexpr int EXIT_USAGE = 1;
constexpr int EXIT_PROTOCOL = 2;
constexpr int EXIT_INCOMPLETE = 3;

Bytes read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const Bytes& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    out << text;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(line);
    return lines;
}

ec::KeyPair keypair_from_sk_hex(const std::string& hex) {
    Bytes b = from_hex(hex);
    if (b.size() != 32) throw ParseError("bad secret key length");
    ec::KeyPair kp;
    kp.sk = ec::Scalar::from_bytes_be(b.data());
    kp.pk = ec::mul_base(kp.sk);
    kp.pk33 = ec::compress(kp.pk);
    return kp;
}

// ============================================================
// Persistent lab state
// ============================================================
struct WalletState {
    ec::KeyPair key;
    OutPoint outpoint;
    uint64_t value = 0;
};

struct CliState {
    std::string dir;
    KvConfig config;
    std::vector<Certificate> certs;
    ec::Scalar server_sk;
    std::map<std::string, WalletState> wallets; // "server", "client"
    std::vector<std::pair<uint32_t, Transaction>> chain_txs;
    std::vector<Transaction> mempool_txs;
    std::vector<ClientRecord> server_records;
    std::optional<ClientRecord> client_record;
    uint32_t next_seq = 1;

    std::string path(const std::string& name) const { return (fs::path(dir) / name).string(); }

    static CliState load(const std::string& dir) {
        CliState st;
        st.dir = dir;
        if (!fs::exists(fs::path(dir) / "config"))
            throw BadConfig("no state at " + dir + "; run `cert init` first");
        st.config = KvConfig::load(st.path("config"));

        auto server_lines = read_lines(st.path("server.txt"));
        if (server_lines.empty()) throw BadConfig("server.txt missing");
        Bytes sk = from_hex(server_lines[0]);
        st.server_sk = ec::Scalar::from_bytes_be(sk.data());
        for (size_t i = 1; i < server_lines.size(); i++)
            st.certs.push_back(Certificate::parse(from_hex(server_lines[i])));

        for (const auto& line : read_lines(st.path("wallets.txt"))) {
            std::istringstream in(line);
            std::string role, skh, txh;
            uint32_t vout;
            uint64_t value;
            in >> role >> skh >> txh >> vout >> value;
            WalletState w;
            w.key = keypair_from_sk_hex(skh);
            Bytes id = from_hex(txh);
            std::copy(id.begin(), id.end(), w.outpoint.txid.begin());
            w.outpoint.vout = vout;
            w.value = value;
            st.wallets[role] = w;
        }

        for (const auto& line : read_lines(st.path("chain.txt"))) {
            std::istringstream in(line);
            uint32_t height;
            std::string hex;
            in >> height >> hex;
            st.chain_txs.emplace_back(height, tx_from_hex(hex));
        }
        if (fs::exists(st.path("mempool.txt")))
            for (const auto& line : read_lines(st.path("mempool.txt")))
                st.mempool_txs.push_back(tx_from_hex(line));
        if (fs::exists(st.path("records.txt")))
            st.server_records = RecordStore(st.path("records.txt")).load();
        if (fs::exists(st.path("client.txt"))) {
            auto lines = read_lines(st.path("client.txt"));
            if (!lines.empty()) st.client_record = RecordStore::parse_record(lines[0]);
        }
        if (fs::exists(st.path("seq.txt"))) {
            auto lines = read_lines(st.path("seq.txt"));
            if (!lines.empty()) st.next_seq = static_cast<uint32_t>(std::stoul(lines[0]));
        }
        return st;
    }

    void save() const {
        std::string server_txt = to_hex(server_sk.to_bytes_be()) + "\n";
        for (const auto& c : certs) server_txt += to_hex(c.serialize()) + "\n";
        write_text(path("server.txt"), server_txt);

        std::string wallets_txt;
        for (const auto& [role, w] : wallets) {
            wallets_txt += role + " " + to_hex(w.key.sk.to_bytes_be()) + " " +
                           to_hex(w.outpoint.txid) + " " + std::to_string(w.outpoint.vout) + " " +
                           std::to_string(w.value) + "\n";
        }
        write_text(path("wallets.txt"), wallets_txt);

        std::string chain_txt;
        for (const auto& [h, tx] : chain_txs)
            chain_txt += std::to_string(h) + " " + tx_to_hex(tx) + "\n";
        write_text(path("chain.txt"), chain_txt);

        std::string mem_txt;
        for (const auto& tx : mempool_txs) mem_txt += tx_to_hex(tx) + "\n";
        write_text(path("mempool.txt"), mem_txt);

        std::string rec_txt;
        for (const auto& r : server_records) rec_txt += RecordStore::format_record(r) + "\n";
        write_text(path("records.txt"), rec_txt);

        if (client_record)
            write_text(path("client.txt"), RecordStore::format_record(*client_record) + "\n");
        write_text(path("seq.txt"), std::to_string(next_seq) + "\n");
    }
};

NetworkConfig network_config_from(const KvConfig& kv) { return NetworkConfig::from_kv(kv); }

// Rebuilds the simulated network from persisted state: chain blocks are
// restored height by height, mempool transactions re-injected and gossiped.
struct Lab {
    CliState& st;
    SimNetwork net;
    NodeId server_node;
    NodeId client_node;

    explicit Lab(CliState& state)
        : st(state), net(network_config_from(state.config)), server_node(0), client_node(0) {
        for (const auto& n : net.nodes())
            if (n.region == Region::free_world && n.kind == NodeKind::conformant) {
                server_node = n.id;
                break;
            }
        for (const auto& n : net.nodes())
            if (n.region == Region::censored && n.kind == NodeKind::conformant && !n.c_node) {
                client_node = n.id;
                break;
            }
        if (net.config().censored_conformant == 0) client_node = server_node;

        uint32_t max_height = 0;
        for (const auto& [h, tx] : st.chain_txs) max_height = std::max(max_height, h);
        for (uint32_t h = 0; h <= max_height; h++) {
            std::vector<Transaction> blk;
            for (const auto& [bh, tx] : st.chain_txs)
                if (bh == h) blk.push_back(tx);
            if (h == 0)
                for (const auto& tx : blk) net.add_genesis_tx(tx);
            else
                net.restore_block(blk);
        }
        for (const auto& tx : st.mempool_txs) net.inject(server_node, tx);
        net.run_to_quiescence();
    }

    Wallet wallet(const std::string& role) {
        auto it = st.wallets.find(role);
        if (it == st.wallets.end()) throw BadConfig("no wallet " + role);
        return Wallet(it->second.key, it->second.outpoint, it->second.value);
    }

    void store_wallet(const std::string& role, const Wallet& w) {
        st.wallets[role] = WalletState{w.key(), w.funding().outpoint, w.value()};
    }

    TithonusServer make_server() {
        if (st.certs.empty()) throw BadConfig("no certificate; run `cert init`");
        std::string corpus = st.config.get("corpus_dir", "");
        UriResolver resolver = corpus.empty()
                                   ? UriResolver([](const std::string&) { return std::nullopt; })
                                   : corpus_resolver(corpus);
        TithonusServer server(net, server_node, ServerIdentity{st.certs.back(), st.server_sk},
                              wallet("server"), resolver);
        server.seq_allocator().reset(st.next_seq);
        for (const auto& r : st.server_records) server.adopt_record(r);
        return server;
    }

    // Snapshot the network back into the state: chain heights and the
    // remaining mempool, in first-seen order.
    void persist(TithonusServer* server, Wallet* server_wallet, Wallet* client_wallet) {
        CliState& state = st;
        state.chain_txs.clear();
        std::set<std::string> chained;
        for (const auto& blk : net.chain())
            for (const auto& id : blk.txids) {
                auto tx = net.find_tx(id);
                if (!tx) continue;
                state.chain_txs.emplace_back(blk.height, *tx);
                chained.insert(txid_hex(id));
            }
        state.mempool_txs.clear();
        for (const auto& tx : net.known_transactions())
            if (!chained.count(txid_hex(txid(tx)))) state.mempool_txs.push_back(tx);
        if (server) {
            state.server_records = server->records();
            state.next_seq = server->seq_allocator().peek();
        }
        if (server_wallet) store_wallet("server", *server_wallet);
        if (client_wallet) store_wallet("client", *client_wallet);
    }
};

void print_cert(const Certificate& c, bool verified) {
    std::cout << "seq " << c.seq << "  pk " << to_hex(c.public_key) << "\n"
              << "  ttag " << to_hex(c.ttag) << "  fee_rate " << c.fee_rate
              << " sat/B  dir_marker " << to_hex(c.dir_marker)
              << (verified ? "  [verified]" : "  [UNVERIFIED]") << "\n";
}

// ============================================================
// Commands
// ============================================================
int cmd_cert_init(const std::string& state_dir, uint64_t seed, uint64_t fee_rate) {
    fs::create_directories(state_dir);
    Rng rng(seed);
    CliState st;
    st.dir = state_dir;

    st.config.set("seed", std::to_string(seed));
    st.config.set("censored_conformant", "12");
    st.config.set("censored_nonconformant", "8");
    st.config.set("c_nodes", "4");
    st.config.set("free_conformant", "26");
    st.config.set("out_degree", "8");
    st.config.set("standard_fee_rate", "9");
    std::string cfg_txt;
    for (const auto& [k, v] : st.config.values()) cfg_txt += k + "=" + v + "\n";
    write_text(st.path("config"), cfg_txt);

    auto key = ec::gen_keypair(rng);
    CertificateFields fields;
    fields.seq = 0;
    fields.ttag = rng.array<16>();
    fields.fee_rate = fee_rate;
    fields.dir_marker = rng.bytes(8);
    Certificate root = gen_certificate(std::nullopt, fields, key);
    st.server_sk = key.sk;
    st.certs.push_back(root);

    // faucet funds, recorded in the genesis block
    auto [server_wallet, faucet_s] = Wallet::with_faucet(2'000'000'000, rng, 1);
    auto [client_wallet, faucet_c] = Wallet::with_faucet(500'000'000, rng, 2);
    st.chain_txs.emplace_back(0, faucet_s);
    st.chain_txs.emplace_back(0, faucet_c);
    st.wallets["server"] = WalletState{server_wallet.key(), server_wallet.funding().outpoint,
                                       server_wallet.value()};
    st.wallets["client"] = WalletState{client_wallet.key(), client_wallet.funding().outpoint,
                                       client_wallet.value()};
    st.save();

    // publish the root certificate on-chain
    CliState loaded = CliState::load(state_dir);
    Lab lab(loaded);
    auto server = lab.make_server();
    Wallet sw = lab.wallet("server");
    Rng prng = rng.fork("publish");
    TransportMode mode = choose_mode(SendIntent::asynchronous, FeePolicy{});
    Transport transport(lab.net, lab.server_node);
    publish_stream(transport, sw, root.serialize(), UnitType::CERT, server.seq_allocator(), mode,
                   FeePolicy{}, prng);
    lab.net.run_to_quiescence();
    lab.net.mine();
    lab.persist(&server, &sw, nullptr);
    loaded.save();

    std::cout << "initialized state at " << state_dir << "\n";
    print_cert(root, true);
    return EXIT_OK;
}

int cmd_cert_rotate(const std::string& state_dir, uint64_t seed) {
    CliState st = CliState::load(state_dir);
    Lab lab(st);
    Rng rng(seed ^ 0x726f7461746500ull);
    auto server = lab.make_server();
    Wallet sw = lab.wallet("server");

    auto new_key = ec::gen_keypair(rng);
    CertificateFields fields;
    fields.seq = st.certs.back().seq + 1;
    fields.ttag = rng.array<16>();
    fields.fee_rate = st.certs.back().fee_rate;
    fields.dir_marker = st.certs.back().dir_marker;

    Certificate next = gen_certificate(PrevCertificate{st.certs.back(), st.server_sk}, fields, new_key);
    TransportMode mode = choose_mode(SendIntent::asynchronous, FeePolicy{});
    Transport transport(lab.net, lab.server_node);
    publish_stream(transport, sw, next.serialize(), UnitType::CERT, server.seq_allocator(), mode,
                   FeePolicy{}, rng);
    lab.net.run_to_quiescence();
    lab.net.mine();

    st.certs.push_back(next);
    st.server_sk = new_key.sk;
    lab.persist(&server, &sw, nullptr);
    st.save();
    print_cert(next, true);
    return EXIT_OK;
}

int cmd_cert_show(const std::string& state_dir) {
    CliState st = CliState::load(state_dir);
    auto verdict = verify_chain(st.certs);
    for (const auto& c : st.certs) print_cert(c, verdict.ok);
    std::cout << (verdict.ok ? "chain verified" : "CHAIN BROKEN") << ", " << st.certs.size()
              << " certificate(s)\n";
    return verdict.ok ? EXIT_OK : EXIT_PROTOCOL;
}

int cmd_publish(const std::string& state_dir, const std::string& file,
                const std::string& description, uint64_t seed) {
    CliState st = CliState::load(state_dir);
    Lab lab(st);
    Rng rng(seed);
    auto server = lab.make_server();
    // server object owns its wallet copy; publish through it
    auto entry = server.publish_free(read_file(file), description, rng);
    lab.net.run_to_quiescence();
    lab.net.mine();
    Wallet sw = server.wallet();
    lab.persist(&server, &sw, nullptr);
    st.save();
    std::cout << "published " << server.last_publish()->unit_count << " DATA transaction(s)\n"
              << "leading txid " << txid_hex(entry.leading_txid) << "\n"
              << "description  " << entry.description << "\n";
    return EXIT_OK;
}

int cmd_dir_list(const std::string& state_dir) {
    CliState st = CliState::load(state_dir);
    Lab lab(st);
    TithonusClient client(lab.net, lab.client_node, lab.wallet("client"));
    auto listing = client.directory();
    for (size_t i = 0; i < listing.entries.size(); i++) {
        const auto& e = listing.entries[i];
        std::cout << i << "  " << txid_hex(e.leading_txid) << "  " << e.description << "\n";
    }
    if (!listing.rejected.empty())
        std::cout << listing.rejected.size() << " entr(ies) with invalid signatures rejected\n";
    std::cout << listing.entries.size() << " verified entr(ies)\n";
    return EXIT_OK;
}

int cmd_dir_fetch(const std::string& state_dir, size_t index, const std::string& out_path) {
    CliState st = CliState::load(state_dir);
    Lab lab(st);
    TithonusClient client(lab.net, lab.client_node, lab.wallet("client"));
    auto listing = client.directory();
    if (index >= listing.entries.size()) {
        std::cerr << "no entry " << index << "\n";
        return EXIT_PROTOCOL;
    }
    try {
        Bytes content = client.fetch_free(listing.entries[index]);
        write_file(out_path, content);
        std::cout << "wrote " << content.size() << " bytes to " << out_path << "\n";
        return EXIT_OK;
    } catch (const IncompleteStream& e) {
        std::cerr << e.what() << "\n";
        return EXIT_INCOMPLETE;
    }
}

int cmd_client_register(const std::string& state_dir, uint64_t deposit, uint64_t seed) {
    CliState st = CliState::load(state_dir);
    Lab lab(st);
    Rng rng(seed);
    auto server = lab.make_server();
    TithonusClient client(lab.net, lab.client_node, lab.wallet("client"));

    auto certs = client.read_certificates();
    if (certs.empty()) {
        std::cerr << "no verified certificate chain on the blockchain\n";
        return EXIT_PROTOCOL;
    }
    auto reg = client.register_with(certs.back().cert, deposit, rng);
    lab.net.run_to_quiescence();
    auto summary = server.process_traffic(rng);
    if (summary.new_records != 1) {
        std::cerr << "registration not recognized by the server scan\n";
        return EXIT_PROTOCOL;
    }
    st.client_record = client.record();
    Wallet sw = server.wallet();
    Wallet cw = client.wallet();
    lab.persist(&server, &sw, &cw);
    st.save();
    std::cout << "registered pk_c " << to_hex(reg.record.pk_c) << "\n"
              << "credit " << server.records().back().credit << " sat\n";
    return EXIT_OK;
}

int cmd_client_request(const std::string& state_dir, const std::string& uri, uint32_t offset,
                       uint32_t length, const std::string& out_path, uint64_t seed) {
    CliState st = CliState::load(state_dir);
    if (!st.client_record) {
        std::cerr << "not registered; run `client register` first\n";
        return EXIT_USAGE;
    }
    Lab lab(st);
    Rng rng(seed);
    auto server = lab.make_server();
    TithonusClient client(lab.net, lab.client_node, lab.wallet("client"));

    auto certs = client.read_certificates();
    if (certs.empty()) {
        std::cerr << "no verified certificate chain\n";
        return EXIT_PROTOCOL;
    }
    // adopt the persisted record into this client instance
    client.register_record(*st.client_record, certs.back().cert);

    try {
        client.request(uri, Selector{offset, length}, rng);
        lab.net.run_to_quiescence();
        server.process_traffic(rng);
        lab.net.run_to_quiescence();
        auto resp = client.match_response();
        if (!resp) {
            std::cerr << "no response matched (stream exhausted)\n";
            return EXIT_INCOMPLETE;
        }
        if (!out_path.empty()) write_file(out_path, resp->content);
        std::cout << "response: " << resp->content.size() << " bytes, fee " << resp->fee
                  << " sat\n";
        if (!out_path.empty()) std::cout << "wrote " << out_path << "\n";
        st.client_record = client.record();
        Wallet sw = server.wallet();
        Wallet cw = client.wallet();
        lab.persist(&server, &sw, &cw);
        st.save();
        return EXIT_OK;
    } catch (const TagMismatch& e) {
        std::cerr << e.what() << "\n";
        return EXIT_PROTOCOL;
    } catch (const UriTooLong& e) {
        std::cerr << e.what() << "\n";
        return EXIT_USAGE;
    } catch (const IncompleteStream& e) {
        std::cerr << e.what() << "\n";
        return EXIT_INCOMPLETE;
    }
}

int cmd_server_run(const std::string& state_dir, uint64_t seed) {
    CliState st = CliState::load(state_dir);
    Lab lab(st);
    Rng rng(seed);
    auto server = lab.make_server();
    auto summary = server.process_traffic(rng);
    lab.net.run_to_quiescence();
    Wallet sw = server.wallet();
    lab.persist(&server, &sw, nullptr);
    st.save();
    std::cout << "scan pass: " << summary.new_records << " new registration(s), "
              << summary.responses_sent << " response(s) sent\n"
              << "records on file: " << server.records().size() << "\n";
    return EXIT_OK;
}

int cmd_cost_estimate(uint64_t bytes, const std::string& method_name, uint64_t rate) {
    auto method = cost_method_from_name(method_name);
    if (!method) {
        std::cerr << "unknown method " << method_name << "\n";
        return EXIT_USAGE;
    }
    std::cout << cost_report_text(estimate(bytes, *method, rate));
    return EXIT_OK;
}

int cmd_cost_table(const std::vector<uint64_t>& rates, bool csv) {
    auto t = fee_table(rates.empty() ? std::vector<uint64_t>{1, 4, 9, 16} : rates);
    std::cout << (csv ? fee_table_csv(t) : fee_table_text(t));
    return EXIT_OK;
}

int cmd_sim_run(const std::string& scenario_path, const std::string& report_path, uint64_t seed) {
    KvConfig kv = KvConfig::load(scenario_path);
    if (seed != 0) kv.set("seed", std::to_string(seed));
    NetworkConfig cfg = NetworkConfig::from_kv(kv);
    SimNetwork net(cfg);
    Rng rng(cfg.seed ^ 0x5151);

    // faucet-funded plain spends injected at the configured node
    NodeId inject_node = static_cast<NodeId>(kv.get_int("inject_node", net.miner_id()));
    int inject_count = static_cast<int>(kv.get_int("inject_count", 1));
    uint64_t mine_every = static_cast<uint64_t>(kv.get_int("mine_every", 0));

    std::string out;
    for (int i = 0; i < inject_count; i++) {
        auto [wallet, faucet] = Wallet::with_faucet(100'000'000, rng, static_cast<uint32_t>(i));
        net.add_genesis_tx(faucet);
        auto dest = ec::gen_keypair(rng);
        Transaction tx = build_p2pkh_spend(wallet.funding(),
                                           hash160(dest.pk33.data(), dest.pk33.size()), 1'000'000,
                                           cfg.relay_policy, cfg.relay_policy.min_fee_rate);
        Hash32 id = net.inject(inject_node, tx);
        if (mine_every > 0)
            net.run_with_mining(mine_every);
        else
            net.run_to_quiescence();
        if (inject_count > 1) out += "# tx " + txid_hex(id) + "\n";
        out += SimNetwork::report_csv(net.propagation_report(id));
    }
    write_text(report_path, out);
    std::cout << "simulated " << net.nodes().size() << " nodes, report written to " << report_path
              << "\n";
    return EXIT_OK;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tithonus: censorship-resistant messaging over simulated Bitcoin gossip"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string state_dir = "state";
    uint64_t seed = 1;
    app.add_option("--state", state_dir, "state directory")->capture_default_str();
    app.add_option("--seed", seed, "deterministic seed")->capture_default_str();

    // cert
    auto* cert = app.add_subcommand("cert", "certificate chain management");
    cert->require_subcommand(1);
    uint64_t fee_rate = 1;
    auto* cert_init = cert->add_subcommand("init", "create state with a root certificate");
    cert_init->add_option("--fee-rate", fee_rate, "advertised satoshi/byte reply rate");
    auto* cert_rotate = cert->add_subcommand("rotate", "publish a successor certificate");
    auto* cert_show = cert->add_subcommand("show", "print and verify the chain");

    // publish / dir
    std::string file, description = "", out_path = "";
    auto* publish = app.add_subcommand("publish", "publish free content plus a directory entry");
    publish->add_option("--file", file, "content file")->required();
    publish->add_option("--description", description, "directory entry description");

    auto* dir = app.add_subcommand("dir", "altruistic directory");
    dir->require_subcommand(1);
    auto* dir_list = dir->add_subcommand("list", "list verified entries");
    size_t entry_index = 0;
    auto* dir_fetch = dir->add_subcommand("fetch", "fetch an entry's content");
    dir_fetch->add_option("--index", entry_index, "entry index from `dir list`")->required();
    dir_fetch->add_option("--out", out_path, "output file")->required();

    // client
    auto* client = app.add_subcommand("client", "censored client flows");
    client->require_subcommand(1);
    uint64_t deposit = 100000;
    auto* creg = client->add_subcommand("register", "register with the service");
    creg->add_option("--deposit", deposit, "fee deposit in satoshi")->capture_default_str();
    std::string uri;
    uint32_t offset = 0, length = SEL_WHOLE_RESOURCE;
    auto* creq = client->add_subcommand("request", "pay-per-access content request");
    creq->add_option("--uri", uri, "content uri (up to 59 bytes)")->required();
    creq->add_option("--offset", offset, "selector offset");
    creq->add_option("--length", length, "selector length (default: whole resource)");
    creq->add_option("--out", out_path, "write response content here");

    // server
    auto* server = app.add_subcommand("server", "service-side operations");
    server->require_subcommand(1);
    std::string scenario;
    auto* server_run = server->add_subcommand("run", "one scan pass over observed traffic");
    server_run->add_option("--scenario", scenario, "unused placeholder for scripted traffic");

    // cost
    auto* cost = app.add_subcommand("cost", "economics calculator");
    cost->require_subcommand(1);
    uint64_t bytes = 0, rate = 1;
    std::string method = "staged";
    auto* cost_est = cost->add_subcommand("estimate", "size and fee for one transfer");
    cost_est->add_option("--bytes", bytes, "content size")->required();
    cost_est->add_option("--method", method, "writing method")->capture_default_str();
    cost_est->add_option("--rate", rate, "satoshi per byte")->capture_default_str();
    std::vector<uint64_t> rates;
    bool csv = false;
    auto* cost_table = cost->add_subcommand("table", "fee table over standard profiles");
    cost_table->add_option("--rates", rates, "fee rates (default 1 4 9 16)");
    cost_table->add_flag("--csv", csv, "comma-separated output");

    // sim
    auto* sim = app.add_subcommand("sim", "network simulation");
    sim->require_subcommand(1);
    std::string report_path = "report.csv";
    auto* sim_run = sim->add_subcommand("run", "scenario run with propagation report");
    sim_run->add_option("--scenario", scenario, "scenario config file")->required();
    sim_run->add_option("--report", report_path, "report csv path")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? EXIT_OK : EXIT_USAGE;
    }

    try {
        if (cert_init->parsed()) return cmd_cert_init(state_dir, seed, fee_rate);
        if (cert_rotate->parsed()) return cmd_cert_rotate(state_dir, seed);
        if (cert_show->parsed()) return cmd_cert_show(state_dir);
        if (publish->parsed()) return cmd_publish(state_dir, file, description, seed);
        if (dir_list->parsed()) return cmd_dir_list(state_dir);
        if (dir_fetch->parsed()) return cmd_dir_fetch(state_dir, entry_index, out_path);
        if (creg->parsed()) return cmd_client_register(state_dir, deposit, seed);
        if (creq->parsed())
            return cmd_client_request(state_dir, uri, offset, length, out_path, seed);
        if (server_run->parsed()) return cmd_server_run(state_dir, seed);
        if (cost_est->parsed()) return cmd_cost_estimate(bytes, method, rate);
        if (cost_table->parsed()) return cmd_cost_table(rates, csv);
        if (sim_run->parsed()) return cmd_sim_run(scenario, report_path, seed);
    } catch (const BadConfig& e) {
        std::cerr << e.what() << "\n";
        return EXIT_USAGE;
    } catch (const IncompleteStream& e) {
        std::cerr << e.what() << "\n";
        return EXIT_INCOMPLETE;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return EXIT_PROTOCOL;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return EXIT_PROTOCOL;
    }
    return EXIT_USAGE;
}
