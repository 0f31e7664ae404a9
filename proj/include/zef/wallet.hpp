#pragma once

// Client side of the protocol: drive a request to certificate and a
// certificate to confirmation quorum, open accounts through a broker, take
// coins through the blinded creation pipeline, redeem them, and replay
// history into authorities that fell behind. A wallet talks through the
// Transport interface so the same flows run over sockets, in-process
// loopback, or the deterministic simulator.

#include <fstream>
#include <memory>

#include "net.hpp"

namespace zef {

struct Transport {
    virtual ~Transport() = default;
    virtual Result<wire::Frame> call(const std::string& authority, uint32_t shard,
                                     const wire::Frame& frame) = 0;
};

// In-process endpoints, for tests and the simulator.
class LoopbackTransport : public Transport {
  public:
    using Endpoint = std::function<wire::Frame(const wire::Frame&)>;

    void add(const std::string& authority, uint32_t shard, Endpoint e) {
        eps_[{authority, shard}] = std::move(e);
    }
    void remove(const std::string& authority, uint32_t shard) {
        eps_.erase({authority, shard});
    }
    Result<wire::Frame> call(const std::string& authority, uint32_t shard,
                             const wire::Frame& frame) override {
        auto it = eps_.find({authority, shard});
        if (it == eps_.end())
            return Error(Err::ConnectionFailed, 0, authority + "/" + std::to_string(shard));
        return it->second(frame);
    }

  private:
    std::map<std::pair<std::string, uint32_t>, Endpoint> eps_;
};

// Socket transport: one kept-alive TCP connection per (authority, shard);
// optionally tries UDP first for frames within the datagram budget.
class NetTransport : public Transport {
  public:
    explicit NetTransport(const Committee& committee, bool prefer_udp = false,
                          int timeout_ms = 5000)
        : committee_(&committee), prefer_udp_(prefer_udp), timeout_ms_(timeout_ms) {}

    Result<wire::Frame> call(const std::string& authority, uint32_t shard,
                             const wire::Frame& frame) override {
        const AuthorityInfo* info = committee_->find(authority);
        if (!info) return Error(Err::UnknownAuthority, 0, authority);
        uint16_t port = uint16_t(info->base_port + shard);
        if (prefer_udp_) {
            Bytes b = wire::frame_bytes(frame);
            if (b.size() <= wire::kUdpBudget) {
                auto r = net::udp_call(info->host, port, frame, timeout_ms_);
                // a FrameTooLarge answer means the reply needs TCP
                if (r.ok()) {
                    if (r.value().tag != wire::Tag::Error) return r;
                    try {
                        Reader rd(r.value().payload);
                        if (Error::decode(rd).code != Err::FrameTooLarge) return r;
                    } catch (const ParseError&) {
                        return r;
                    }
                }
            }
        }
        auto key = std::make_pair(authority, shard);
        auto it = conns_.find(key);
        if (it == conns_.end())
            it = conns_.emplace(key, net::TcpConn(info->host, port, timeout_ms_)).first;
        return it->second.call(frame);
    }

  private:
    const Committee* committee_;
    bool prefer_udp_;
    int timeout_ms_;
    std::map<std::pair<std::string, uint32_t>, net::TcpConn> conns_;
};

struct OwnedAccount {
    KeyPair key;
    uint64_t next_sequence = 0;
    std::vector<Certificate> certificates;     // own confirmed log, index = sequence
    std::map<uint64_t, Digest> signed_at;      // equivocation guard
    std::optional<Certificate> creation;       // parent's OpenAccount certificate

    void encode(Writer& w) const {
        w.raw(key.seed().data(), 32);
        w.u64(next_sequence);
        w.u32(uint32_t(certificates.size()));
        for (const auto& c : certificates) c.encode(w);
        w.u32(uint32_t(signed_at.size()));
        for (const auto& [s, d] : signed_at) {
            w.u64(s);
            d.encode(w);
        }
        w.u8(creation ? 1 : 0);
        if (creation) creation->encode(w);
    }
    static OwnedAccount decode(Reader& r, size_t max_uid_len) {
        OwnedAccount a;
        std::array<uint8_t, 32> seed;
        r.raw_into(seed.data(), 32);
        a.key = KeyPair::from_seed(seed);
        a.next_sequence = r.u64();
        uint32_t n = r.u32();
        if (n > (1u << 22)) throw ParseError("account log too long");
        for (uint32_t i = 0; i < n; i++) a.certificates.push_back(Certificate::decode(r, max_uid_len));
        n = r.u32();
        if (n > (1u << 22)) throw ParseError("guard too large");
        for (uint32_t i = 0; i < n; i++) {
            uint64_t s = r.u64();
            a.signed_at[s] = Digest::decode(r);
        }
        if (r.u8()) a.creation = Certificate::decode(r, max_uid_len);
        return a;
    }
};

// Portable coin files for out-of-band delivery of freshly created coins.
inline Bytes export_coin_file(const Committee& committee, const coins::OpaqueCoin& c) {
    Writer w;
    w.lp_str(domain::coin_file);
    committee.digest().encode(w);
    w.u8(1);
    c.encode(w);
    return w.take();
}
inline Bytes export_coin_file(const Committee& committee, const TransparentCoin& c) {
    Writer w;
    w.lp_str(domain::coin_file);
    committee.digest().encode(w);
    w.u8(2);
    c.certificate.encode(w);
    return w.take();
}
using ImportedCoin = std::variant<coins::OpaqueCoin, TransparentCoin>;
inline Result<ImportedCoin> import_coin_file(const Committee& committee, const Bytes& b) {
    try {
        Reader r(b);
        if (r.lp_str() != domain::coin_file) return Error(Err::MalformedMessage, 0, "not a coin file");
        if (!(Digest::decode(r) == committee.digest()))
            return Error(Err::MalformedMessage, 0, "coin file from another committee");
        uint8_t kind = r.u8();
        if (kind == 1) {
            auto c = coins::OpaqueCoin::decode(r, committee.uid_length_limit);
            r.expect_done();
            if (!c.verify(committee.credential_params, committee.credential_vk))
                return Err::BadCoinSignature;
            return ImportedCoin{std::move(c)};
        }
        if (kind == 2) {
            TransparentCoin c{Certificate::decode(r, committee.uid_length_limit)};
            r.expect_done();
            Status s = c.verify(committee);
            if (!s.ok()) return s.error();
            return ImportedCoin{std::move(c)};
        }
        return Error(Err::MalformedMessage, 0, "unknown coin kind");
    } catch (const ParseError& e) {
        return Error(Err::MalformedMessage, 0, e.what());
    }
}

class Wallet {
  public:
    explicit Wallet(Committee committee) : committee_(std::move(committee)) {}

    const Committee& committee() const { return committee_; }

    // Autosave target; every certificate is persisted before the driver
    // returns once a file is bound.
    void bind_file(std::string path) { path_ = std::move(path); }

    void add_account(const Uid& id, const KeyPair& key, uint64_t next_sequence = 0) {
        OwnedAccount a;
        a.key = key;
        a.next_sequence = next_sequence;
        accounts_[id] = std::move(a);
    }
    bool owns(const Uid& id) const { return accounts_.count(id) != 0; }
    const OwnedAccount* account(const Uid& id) const {
        auto it = accounts_.find(id);
        return it == accounts_.end() ? nullptr : &it->second;
    }
    const std::map<Uid, OwnedAccount>& accounts() const { return accounts_; }

    void add_coin(coins::OpaqueCoin c) { coins_.push_back(std::move(c)); }
    void add_transparent_coin(TransparentCoin c) { tcoins_.push_back(std::move(c)); }
    const std::vector<coins::OpaqueCoin>& coins() const { return coins_; }
    const std::vector<TransparentCoin>& transparent_coins() const { return tcoins_; }

    // --- core driver ------------------------------------------------------

    // Take one operation from signed request to confirmed certificate.
    Result<Certificate> execute_account_op(Transport& t, const Uid& id, const Operation& op) {
        auto it = accounts_.find(id);
        if (it == accounts_.end()) return Err::UnknownAccount;
        OwnedAccount& acct = it->second;

        Request req{id, acct.next_sequence, op};
        Digest want = req.digest();
        auto guard = acct.signed_at.find(req.sequence);
        if (guard != acct.signed_at.end() && !(guard->second == want))
            return Err::EquivocationRefused;
        acct.signed_at[req.sequence] = want;
        SignedRequest sr = SignedRequest::sign(req, acct.key);

        auto cert = collect_votes(t, sr, want);
        if (!cert.ok()) return cert.error();

        acct.next_sequence++;
        acct.certificates.push_back(cert.value());
        acct.signed_at.erase(req.sequence);
        persist();

        confirm_quorum(t, id, cert.value(), std::holds_alternative<OpCloseAccount>(op));
        return cert;
    }

    // --- account opening --------------------------------------------------

    // Broker side: certify OpenAccount(parent::n, owner) and hand back the
    // fresh id with its creation certificate.
    Result<std::pair<Uid, Certificate>> open_child(Transport& t, const Uid& parent,
                                                   const PublicKey& owner) {
        auto it = accounts_.find(parent);
        if (it == accounts_.end()) return Err::UnknownAccount;
        Uid child = parent.child(it->second.next_sequence);
        auto cert = execute_account_op(t, parent, OpOpenAccount{child, owner});
        if (!cert.ok()) return cert.error();
        return std::make_pair(child, cert.value());
    }

    // Self-owned child: fresh key, broker is this same wallet.
    Result<Uid> open_own_child(Transport& t, const Uid& parent, Rng& rng) {
        KeyPair key = KeyPair::generate(rng);
        auto r = open_child(t, parent, key.public_key());
        if (!r.ok()) return r.error();
        add_account(r.value().first, key);
        accounts_[r.value().first].creation = r.value().second;
        used_keys_.insert(key.public_key());
        persist();
        return r.value().first;
    }

    // Recipient side of a brokered opening: check the certificate actually
    // creates `id` for our fresh key, and that the key was never used before
    // (a replayed certificate necessarily reuses an old key).
    Status accept_brokered_account(const Uid& id, const Certificate& cert, const KeyPair& key) {
        Status cs = verify_certificate(committee_, cert);
        if (!cs.ok()) return Error(Err::CertificateMismatch, 0, cs.error().to_string());
        const auto* req = std::get_if<Request>(&cert.value);
        if (!req) return Error(Err::CertificateMismatch, 0, "not a request certificate");
        const auto* open = std::get_if<OpOpenAccount>(&req->op);
        if (!open) return Error(Err::CertificateMismatch, 0, "not an account opening");
        if (!(open->child == id)) return Error(Err::CertificateMismatch, 0, "different id");
        if (!(open->owner == key.public_key()))
            return Error(Err::CertificateMismatch, 0, "different owner key");
        if (owns(id)) return Error(Err::CertificateMismatch, 0, "id already accepted");
        if (used_keys_.count(key.public_key()))
            return Error(Err::CertificateMismatch, 0, "key not fresh");
        add_account(id, key);
        accounts_[id].creation = cert;
        used_keys_.insert(key.public_key());
        persist();
        return ok_status();
    }

    // --- anonymous coins ----------------------------------------------------

    struct CoinOutputPlan {
        Uid account;
        uint64_t value = 0;
    };

    // Burn owned coins and/or withdraw public amounts, mint fresh blinded
    // coins. Returns every created coin; those for owned accounts also land
    // in the wallet.
    Result<std::vector<coins::OpaqueCoin>> spend_and_create_coins(
        Transport& t, const std::vector<coins::OpaqueCoin>& burn,
        const std::vector<std::pair<Uid, uint64_t>>& withdrawals,
        const std::vector<CoinOutputPlan>& outputs, Rng& rng) {
        if (outputs.empty() || (burn.empty() && withdrawals.empty())) return Err::MalformedMessage;
        for (const auto& c : burn) {
            if (!owns(c.account)) return Error(Err::NotCoinOwner, 0, c.account.to_string());
            if (!holds_coin(c)) return Error(Err::NotCoinOwner, 0, "coin not in wallet");
        }
        for (const auto& [acc, v] : withdrawals) {
            if (!owns(acc)) return Error(Err::UnknownAccount, 0, acc.to_string());
            if (v == 0) return Err::MalformedMessage;
        }

        std::vector<coins::SpendInput> spends;
        std::vector<Uid> spend_accounts;
        for (const auto& c : burn) {
            spends.push_back({c, 0});
            spend_accounts.push_back(c.account);
        }
        for (const auto& [acc, v] : withdrawals) {
            spends.push_back({std::nullopt, v});
            spend_accounts.push_back(acc);
        }
        std::vector<coins::OutputSpec> specs;
        for (const auto& o : outputs)
            specs.push_back({o.account, rng.u64(), bls::Fr::random(rng), o.value});

        auto built = coins::coin_request(committee_.credential_params, committee_.credential_vk,
                                         spends, specs, rng);
        if (!built.ok()) return built.error();
        Digest h = built.value().request.outputs_hash();

        // one Spend certificate per input position, in position order
        wire::CreateAnonymousCoins msg;
        msg.request = built.value().request;
        for (size_t i = 0; i < spends.size(); i++) {
            OpSpend op;
            op.withdrawal = spends[i].withdrawal;
            op.outputs_hash = h;
            if (spends[i].coin) {
                op.marker = SpentMarker::opaque(spends[i].coin->index);
                op.credential = wire::to_payload(built.value().request.inputs[i]);
            } else {
                op.marker = SpentMarker::none();
            }
            auto cert = execute_account_op(t, spend_accounts[i], op);
            if (!cert.ok()) return cert.error();
            msg.spends.push_back(cert.value());
        }

        auto minted = collect_shares(t, msg, specs, built.value().secrets,
                                     committee_.shard_of(spend_accounts[0]));
        if (!minted.ok()) return minted.error();

        for (const auto& c : burn) drop_coin(c);
        for (const auto& c : minted.value())
            if (owns(c.account)) coins_.push_back(c);
        persist();
        return minted;
    }

    // Deposit a coin into a public account balance.
    Result<Certificate> redeem_coin(Transport& t, const coins::OpaqueCoin& coin,
                                    const Uid& target) {
        if (!owns(coin.account)) return Error(Err::NotCoinOwner, 0, coin.account.to_string());
        OpSpendAndTransfer op{target, OpaqueRedeem{coin.index, coin.seed, coin.value, coin.sigma}};
        auto cert = execute_account_op(t, coin.account, op);
        if (cert.ok()) {
            drop_coin(coin);
            persist();
        }
        return cert;
    }

    Result<Certificate> redeem_transparent_coin(Transport& t, const TransparentCoin& coin,
                                                const Uid& target) {
        const Uid& holder = coin.body().account;
        if (!owns(holder)) return Error(Err::NotCoinOwner, 0, holder.to_string());
        OpSpendAndTransfer op{target, TransparentRedeem{coin.encoded()}};
        auto cert = execute_account_op(t, holder, op);
        if (cert.ok()) {
            drop_transparent(coin);
            persist();
        }
        return cert;
    }

    // --- history replay -----------------------------------------------------

    // Bring one authority up to date for `id`: replay the ancestor chain
    // first (child creation lives in the parent's log), then the account's
    // own confirmed certificates.
    Status sync_authority(Transport& t, const std::string& authority, const Uid& id) {
        std::vector<Uid> chain{id};
        while (!chain.back().is_root()) chain.push_back(*chain.back().parent());
        Status last = ok_status();
        for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
            last = push_history(t, authority, *it);
            if (!last.ok()) return last;
        }
        return last;
    }

    Result<AccountInfoResponse> fetch_info(Transport& t, const std::string& authority,
                                           const Uid& id, uint64_t from) {
        auto r = t.call(authority, committee_.shard_of(id),
                        wire::make_frame(wire::Tag::AccountInfoQuery,
                                         wire::AccountInfoQuery{id, from}));
        if (!r.ok()) return r.error();
        if (r.value().tag == wire::Tag::Error) return decode_error(r.value());
        if (r.value().tag != wire::Tag::AccountInfoResponse)
            return Error(Err::MalformedMessage, 0, "unexpected reply");
        return wire::parse_payload<AccountInfoResponse>(r.value().payload,
                                                        committee_.uid_length_limit);
    }

    // Balance/sequence that a quorum of authorities agrees on exactly.
    Result<AccountInfoResponse> quorum_info(Transport& t, const Uid& id) {
        std::map<std::pair<uint64_t, uint64_t>, uint64_t> tally;
        std::map<std::pair<uint64_t, uint64_t>, AccountInfoResponse> sample;
        for (const auto& a : committee_.authorities) {
            auto info = fetch_info(t, a.name, id, uint64_t(-1));
            if (!info.ok()) continue;
            auto key = std::make_pair(info.value().balance, info.value().next_sequence);
            tally[key] += a.power;
            sample[key] = info.value();
            if (committee_.is_quorum(tally[key])) return sample[key];
        }
        return Err::NotAQuorum;
    }

    // --- persistence --------------------------------------------------------

    void encode(Writer& w) const {
        w.lp_str(domain::wallet);
        committee_.digest().encode(w);
        w.u32(uint32_t(accounts_.size()));
        for (const auto& [id, a] : accounts_) {
            id.encode(w);
            a.encode(w);
        }
        w.u32(uint32_t(coins_.size()));
        for (const auto& c : coins_) c.encode(w);
        w.u32(uint32_t(tcoins_.size()));
        for (const auto& c : tcoins_) c.certificate.encode(w);
        w.u32(uint32_t(used_keys_.size()));
        for (const auto& k : used_keys_) k.encode(w);
    }
    static Result<Wallet> decode(Committee committee, Reader& r) {
        try {
            if (r.lp_str() != domain::wallet)
                return Error(Err::MalformedMessage, 0, "not a wallet file");
            Wallet w(std::move(committee));
            if (!(Digest::decode(r) == w.committee_.digest()))
                return Error(Err::MalformedMessage, 0, "wallet built for another committee");
            size_t maxu = w.committee_.uid_length_limit;
            uint32_t n = r.u32();
            if (n > (1u << 20)) throw ParseError("too many accounts");
            for (uint32_t i = 0; i < n; i++) {
                Uid id = Uid::decode(r, maxu);
                w.accounts_[id] = OwnedAccount::decode(r, maxu);
            }
            n = r.u32();
            if (n > (1u << 20)) throw ParseError("too many coins");
            for (uint32_t i = 0; i < n; i++)
                w.coins_.push_back(coins::OpaqueCoin::decode(r, maxu));
            n = r.u32();
            if (n > (1u << 20)) throw ParseError("too many coins");
            for (uint32_t i = 0; i < n; i++)
                w.tcoins_.push_back(TransparentCoin{Certificate::decode(r, maxu)});
            n = r.u32();
            if (n > (1u << 20)) throw ParseError("too many keys");
            for (uint32_t i = 0; i < n; i++) w.used_keys_.insert(PublicKey::decode(r));
            r.expect_done();
            return w;
        } catch (const ParseError& e) {
            return Error(Err::MalformedMessage, 0, e.what());
        }
    }

    void save(const std::string& path) const {
        Writer w;
        encode(w);
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + path);
        f.write(reinterpret_cast<const char*>(w.out.data()), std::streamsize(w.out.size()));
    }
    static Result<Wallet> load(const std::string& path, Committee committee) {
        std::ifstream f(path, std::ios::binary);
        if (!f) return Error(Err::MalformedMessage, 0, "cannot read " + path);
        Bytes b((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        Reader r(b);
        auto w = decode(std::move(committee), r);
        if (w.ok()) w.value().path_ = path;
        return w;
    }

  private:
    void persist() const {
        if (!path_.empty()) save(path_);
    }

    static Error decode_error(const wire::Frame& f) {
        try {
            Reader r(f.payload);
            Error e = Error::decode(r);
            r.expect_done();
            return e;
        } catch (const ParseError& e) {
            return Error(Err::MalformedMessage, 0, e.what());
        }
    }

    bool holds_coin(const coins::OpaqueCoin& c) const {
        for (const auto& x : coins_)
            if (x.account == c.account && x.index == c.index) return true;
        return false;
    }
    void drop_coin(const coins::OpaqueCoin& c) {
        std::erase_if(coins_, [&](const coins::OpaqueCoin& x) {
            return x.account == c.account && x.index == c.index;
        });
    }
    void drop_transparent(const TransparentCoin& c) {
        Digest d = c.body().digest();
        std::erase_if(tcoins_, [&](const TransparentCoin& x) { return x.body().digest() == d; });
    }

    // Vote phase: ask every authority, filter invalid votes, stop at quorum.
    // Authorities that report being behind get a history replay and one
    // retry; a short bounded retry covers activations still in flight.
    Result<Certificate> collect_votes(Transport& t, const SignedRequest& sr, const Digest& want) {
        const Uid& id = sr.request.account;
        uint32_t shard = committee_.shard_of(id);
        wire::Frame rf = wire::make_frame(wire::Tag::Request, sr);
        std::vector<Vote> votes;
        uint64_t power = 0;
        Error last_err(Err::NotAQuorum);
        for (const auto& a : committee_.authorities) {
            bool synced = false;
            for (int attempt = 0; attempt < 6; attempt++) {
                auto r = t.call(a.name, shard, rf);
                if (!r.ok()) {
                    last_err = r.error();
                    break;
                }
                if (r.value().tag == wire::Tag::Vote) {
                    auto v = wire::parse_payload<Vote>(r.value().payload);
                    if (v.ok() && v.value().authority == a.name && v.value().value == want &&
                        v.value().verify(a.vote_key)) {
                        votes.push_back(v.value());
                        power += a.power;
                    }
                    break;
                }
                Error e = decode_error(r.value());
                last_err = e;
                bool behind = e.code == Err::MissingEarlierCertificates ||
                              (e.code == Err::WrongSequence && e.arg < sr.request.sequence) ||
                              e.code == Err::InactiveAccount;
                if (!behind) break;
                if (!synced) {
                    synced = true;
                    sync_authority(t, a.name, id);
                } else {
                    // creation may still be crossing shards
                    std::this_thread::sleep_for(std::chrono::milliseconds(50));
                }
            }
            if (committee_.is_quorum(power)) break;
        }
        if (!committee_.is_quorum(power)) {
            if (last_err.code == Err::NotAQuorum) last_err.arg = power;
            return last_err;
        }
        return aggregate_certificate(committee_, sr.request, std::move(votes));
    }

    // Confirmation phase: push the certificate until a quorum acknowledges.
    // Best-effort beyond that; sync_authority can finish the job later.
    void confirm_quorum(Transport& t, const Uid& id, const Certificate& cert, bool closing) {
        uint32_t shard = committee_.shard_of(id);
        wire::Frame cf = wire::make_frame(wire::Tag::Confirm, cert);
        std::set<std::string> acked;
        uint64_t power = 0;
        for (int round = 0; round < 3 && !committee_.is_quorum(power); round++) {
            for (const auto& a : committee_.authorities) {
                if (acked.count(a.name)) continue;
                auto r = t.call(a.name, shard, cf);
                if (!r.ok() || r.value().tag != wire::Tag::Error) continue;
                Err c = decode_error(r.value()).code;
                if (c == Err::MissingEarlierCertificates) {
                    sync_authority(t, a.name, id);
                    auto r2 = t.call(a.name, shard, cf);
                    if (!r2.ok() || r2.value().tag != wire::Tag::Error) continue;
                    c = decode_error(r2.value()).code;
                }
                bool ok = c == Err::None || (closing && c == Err::InactiveAccount);
                if (ok) {
                    acked.insert(a.name);
                    power += a.power;
                }
            }
        }
    }

    // Ask issuing authorities for blinded shares, verify each share under
    // that authority's own key, and aggregate the first t good answers.
    Result<std::vector<coins::OpaqueCoin>> collect_shares(
        Transport& t, const wire::CreateAnonymousCoins& msg,
        const std::vector<coins::OutputSpec>& specs,
        const std::vector<coins::OutputSecrets>& secrets, uint32_t shard) {
        const auto& params = committee_.credential_params;
        uint32_t need = committee_.credential_threshold;
        wire::Frame mf = wire::make_frame(wire::Tag::CreateAnonymousCoins, msg);

        std::vector<std::vector<bls::Fr>> attrs;
        for (const auto& s : specs)
            attrs.push_back({coins::coin_key(s.account, s.index), s.seed,
                             bls::Fr::from_int(s.value)});

        std::vector<std::vector<std::pair<uint32_t, coconut::Credential>>> parts(specs.size());
        uint32_t have = 0;
        Error last_err(Err::NotAQuorum);
        for (const auto& a : committee_.authorities) {
            if (a.credential_index == 0 || have >= need) continue;
            auto r = t.call(a.name, shard, mf);
            if (!r.ok()) {
                last_err = r.error();
                continue;
            }
            if (r.value().tag == wire::Tag::Error) {
                last_err = decode_error(r.value());
                continue;
            }
            auto cs = wire::parse_payload<wire::CoinShares>(r.value().payload);
            if (!cs.ok() || cs.value().kind != wire::CoinShares::kBlinded ||
                cs.value().shares.size() != specs.size()) {
                last_err = Error(Err::ShareVerificationFailed, 0, a.name);
                continue;
            }
            // check every output's share before counting this authority; a
            // single bad share would poison the whole aggregation
            std::vector<coconut::Credential> creds;
            bool good = true;
            for (size_t j = 0; j < specs.size() && good; j++) {
                creds.push_back(coins::unblind_output(params, a.credential_vk,
                                                      msg.request.outputs[j], secrets[j],
                                                      cs.value().shares[j]));
                good = coconut::plain_verify(params, a.credential_vk, creds.back(), attrs[j]);
            }
            if (!good) {
                last_err = Error(Err::ShareVerificationFailed, 0, a.name);
                continue;
            }
            for (size_t j = 0; j < specs.size(); j++)
                parts[j].push_back({a.credential_index, creds[j]});
            have++;
        }
        if (have < need) return last_err;

        std::vector<coins::OpaqueCoin> out;
        for (size_t j = 0; j < specs.size(); j++) {
            auto agg = coconut::agg_cred(parts[j], need);
            if (!agg.ok()) return agg.error();
            coins::OpaqueCoin c{specs[j].account, specs[j].index, specs[j].seed,
                                specs[j].value, agg.value()};
            if (!c.verify(params, committee_.credential_vk))
                return Error(Err::BadCoinSignature, j, "aggregate failed verification");
            out.push_back(std::move(c));
        }
        return out;
    }

    Status push_history(Transport& t, const std::string& authority, const Uid& id) {
        auto their = fetch_info(t, authority, id, uint64_t(-1));
        if (!their.ok()) return their.error();
        uint64_t from = their.value().next_sequence;

        std::vector<Certificate> log;
        if (auto it = accounts_.find(id); it != accounts_.end() &&
                                          it->second.certificates.size() >= from) {
            log.assign(it->second.certificates.begin() + long(from),
                       it->second.certificates.end());
        } else {
            auto fetched = gather_certificates(t, id, from);
            if (!fetched.ok()) return fetched.error();
            log = std::move(fetched.value());
        }

        uint32_t shard = committee_.shard_of(id);
        for (const auto& cert : log) {
            wire::Frame cf = wire::make_frame(wire::Tag::Confirm, cert);
            Err code = Err::Timeout;
            for (int attempt = 0; attempt < 10; attempt++) {
                auto r = t.call(authority, shard, cf);
                if (!r.ok()) return r.error();
                if (r.value().tag != wire::Tag::Error)
                    return Error(Err::MalformedMessage, 0, "unexpected reply");
                code = decode_error(r.value()).code;
                // an activation crossing shards shows up as InactiveAccount;
                // give the router a moment and retry
                if (code != Err::InactiveAccount) break;
                std::this_thread::sleep_for(std::chrono::milliseconds(50));
            }
            if (code != Err::None) return Error(code, 0, "replay refused");
        }
        return ok_status();
    }

    // Pull an account's confirmed log from whoever has it, verified.
    Result<std::vector<Certificate>> gather_certificates(Transport& t, const Uid& id,
                                                         uint64_t from) {
        std::vector<Certificate> best;
        for (const auto& a : committee_.authorities) {
            auto info = fetch_info(t, a.name, id, from);
            if (!info.ok()) continue;
            const auto& certs = info.value().certificates;
            if (certs.size() <= best.size()) continue;
            bool valid = true;
            for (size_t i = 0; i < certs.size(); i++) {
                const auto* req = std::get_if<Request>(&certs[i].value);
                if (!req || !(req->account == id) || req->sequence != from + i ||
                    !verify_certificate(committee_, certs[i]).ok()) {
                    valid = false;
                    break;
                }
            }
            if (valid) best = certs;
        }
        if (best.empty() && from > 0) {
            // nobody served anything new; fine if the target is already there
            return best;
        }
        return best;
    }

    Committee committee_;
    std::map<Uid, OwnedAccount> accounts_;
    std::vector<coins::OpaqueCoin> coins_;
    std::vector<TransparentCoin> tcoins_;
    std::set<PublicKey> used_keys_;
    std::string path_;
};

}  // namespace zef
