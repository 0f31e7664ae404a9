#pragma once

// Deterministic single-threaded harness: N authorities (times S shards each)
// driven through the frame interface by a scripted client, with a
// logical-time event queue that drops, duplicates, delays and reorders
// deliveries, crashes authorities, and partitions them away from the client.
// Concurrency is modeled, never real; an identical seed and plan replays the
// identical trace. The safety checkers only look at the client's trace and
// at states reachable through the public query interface, so the same
// checkers can judge a cluster of networked nodes.

#include <queue>

#include "service.hpp"

namespace zef::sim {

struct LinkFaults {
    uint32_t drop_pct = 0;   // chance a delivery is lost
    uint32_t dup_pct = 0;    // chance a delivery arrives twice
    uint32_t max_delay = 0;  // uniform extra logical delay
};

// While active, the client cannot reach the isolated authorities.
struct Partition {
    uint64_t from = 0;
    uint64_t to = 0;
    std::vector<std::string> isolated;

    bool covers(uint64_t t, const std::string& authority) const {
        if (t < from || t >= to) return false;
        for (const auto& a : isolated)
            if (a == authority) return true;
        return false;
    }
};

struct FaultPlan {
    std::map<std::string, uint64_t> crash_at;  // authority -> logical time
    LinkFaults link;
    std::vector<Partition> partitions;
};

// One scripted client step. `kind` is one of: transfer, open, change_key,
// close, mint (withdraw into transparent coins), respend (burn a transparent
// coin into fresh ones), redeem (transparent coin into a balance),
// mint_opaque, redeem_opaque, replay_mint (resend the last creation request),
// equivocate (two conflicting requests at one sequence number), sweep.
struct Action {
    std::string kind;
    std::string account;  // acting account uid, "7" or "7/0/2"
    std::string target;   // recipient / child-suffix, kind-dependent
    uint64_t amount = 0;
    uint64_t at = 0;  // earliest logical start time
};

struct Scenario {
    uint64_t seed = 1;
    uint32_t authorities = 4;
    uint64_t fault_bound = 1;
    uint32_t shards = 1;
    uint32_t issuance_threshold = 3;
    std::vector<std::pair<std::string, uint64_t>> genesis;  // uid -> balance
    FaultPlan faults;
    std::vector<Action> script;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["seed"] = seed;
        j["authorities"] = authorities;
        j["fault_bound"] = fault_bound;
        j["shards"] = shards;
        j["issuance_threshold"] = issuance_threshold;
        for (const auto& [id, bal] : genesis)
            j["genesis"].push_back({{"account", id}, {"balance", bal}});
        for (const auto& [a, t] : faults.crash_at) j["faults"]["crash"][a] = t;
        j["faults"]["link"] = {{"drop_pct", faults.link.drop_pct},
                               {"dup_pct", faults.link.dup_pct},
                               {"max_delay", faults.link.max_delay}};
        for (const auto& p : faults.partitions)
            j["faults"]["partitions"].push_back(
                {{"from", p.from}, {"to", p.to}, {"isolated", p.isolated}});
        for (const auto& a : script) {
            nlohmann::json s{{"kind", a.kind}, {"at", a.at}};
            if (!a.account.empty()) s["account"] = a.account;
            if (!a.target.empty()) s["target"] = a.target;
            if (a.amount) s["amount"] = a.amount;
            j["script"].push_back(s);
        }
        return j;
    }

    static Result<Scenario> from_json(const nlohmann::json& j) {
        try {
            Scenario sc;
            sc.seed = j.value("seed", uint64_t(1));
            sc.authorities = j.value("authorities", 4u);
            sc.fault_bound = j.value("fault_bound", uint64_t(1));
            sc.shards = j.value("shards", 1u);
            sc.issuance_threshold = j.value("issuance_threshold", 3u);
            for (const auto& g : j.value("genesis", nlohmann::json::array()))
                sc.genesis.emplace_back(g.at("account").get<std::string>(),
                                        g.at("balance").get<uint64_t>());
            if (j.contains("faults")) {
                const auto& f = j["faults"];
                const auto crash = f.value("crash", nlohmann::json::object());
                for (auto it = crash.begin(); it != crash.end(); ++it)
                    sc.faults.crash_at[it.key()] = it.value().get<uint64_t>();
                if (f.contains("link")) {
                    sc.faults.link.drop_pct = f["link"].value("drop_pct", 0u);
                    sc.faults.link.dup_pct = f["link"].value("dup_pct", 0u);
                    sc.faults.link.max_delay = f["link"].value("max_delay", 0u);
                }
                for (const auto& p : f.value("partitions", nlohmann::json::array())) {
                    Partition pt;
                    pt.from = p.at("from").get<uint64_t>();
                    pt.to = p.at("to").get<uint64_t>();
                    for (const auto& a : p.at("isolated")) pt.isolated.push_back(a);
                    sc.faults.partitions.push_back(std::move(pt));
                }
            }
            for (const auto& s : j.value("script", nlohmann::json::array())) {
                Action a;
                a.kind = s.at("kind").get<std::string>();
                a.account = s.value("account", "");
                a.target = s.value("target", "");
                a.amount = s.value("amount", uint64_t(0));
                a.at = s.value("at", uint64_t(0));
                sc.script.push_back(std::move(a));
            }
            return sc;
        } catch (const nlohmann::json::exception& e) {
            return Error(Err::MalformedMessage, 0, e.what());
        }
    }

    void save(const std::string& path) const {
        std::ofstream f(path);
        if (!f) throw std::runtime_error("cannot write " + path);
        f << to_json().dump(2) << "\n";
    }
    static Result<Scenario> load(const std::string& path) {
        std::ifstream f(path);
        if (!f) return Error(Err::MalformedMessage, 0, "cannot read " + path);
        nlohmann::json j = nlohmann::json::parse(f, nullptr, false);
        if (j.is_discarded()) return Error(Err::MalformedMessage, 0, "bad json in " + path);
        return from_json(j);
    }
};

struct ActionRecord {
    size_t index = 0;
    std::string kind;
    bool adversarial = false;
    bool succeeded = false;
    std::string error;
};

// Everything the checkers consume: certificates the client assembled, coins
// it learned about, which accounts were closed, and who voted for what.
struct ClientLog {
    std::vector<Certificate> certs;       // account request certificates
    std::vector<Certificate> coin_certs;  // transparent coin certificates
    std::vector<KnownCoin> coins;
    std::vector<ActionRecord> actions;
    std::set<Uid> closed;
    // (authority, account, sequence) -> distinct request digests voted for
    std::map<std::tuple<std::string, Uid, uint64_t>, std::set<Digest>> votes;
};

struct Verdict {
    bool ok = true;
    std::vector<std::string> violations;
    Digest trace_digest;
    uint64_t deliveries = 0;
    ClientLog log;
    std::vector<std::string> trace;  // human-readable, recorded on demand
};

// --- checkers ---------------------------------------------------------------

// Each spent marker is consumed by at most one certificate system-wide.
inline void check_double_spend(const ClientLog& log, std::vector<std::string>& out) {
    std::map<Bytes, std::set<Digest>> consumers;
    for (const auto& cert : log.certs) {
        const auto* req = std::get_if<Request>(&cert.value);
        if (!req) continue;
        if (const auto* s = std::get_if<OpSpend>(&req->op)) {
            if (s->marker.kind != SpentMarker::None)
                consumers[s->marker.key()].insert(cert.value_digest());
        } else if (const auto* x = std::get_if<OpSpendAndTransfer>(&req->op)) {
            consumers[redeem_marker(*x).key()].insert(cert.value_digest());
        }
    }
    for (const auto& [marker, certs] : consumers) {
        if (certs.size() > 1)
            out.push_back("marker consumed by " + std::to_string(certs.size()) +
                          " distinct certificates");
    }
}

inline __int128 total_spendable(const Committee& committee, const ClientLog& log) {
    std::set<Uid> ids;
    for (const auto& g : committee.accounts) ids.insert(g.id);
    for (const auto& cert : log.certs) {
        const auto* req = std::get_if<Request>(&cert.value);
        if (!req) continue;
        ids.insert(req->account);
        for (const auto& m : derive_cross_shard(cert)) ids.insert(m.target);
    }
    for (const auto& c : log.coins) ids.insert(c.account);
    __int128 total = 0;
    for (const auto& id : ids) total += compute_spendable(committee, log.certs, log.coins, id);
    return total;
}

// At most one request digest can reach quorum at any (account, sequence).
inline void check_vote_accounting(const Committee& committee, const ClientLog& log,
                                  std::vector<std::string>& out) {
    std::map<std::pair<Uid, uint64_t>, std::map<Digest, uint64_t>> power;
    for (const auto& [key, digests] : log.votes) {
        const auto& [authority, id, seq] = key;
        if (digests.size() > 1) {
            out.push_back(authority + " voted for " + std::to_string(digests.size()) +
                          " conflicting requests at " + id.to_string() + ":" +
                          std::to_string(seq));
            continue;
        }
        const AuthorityInfo* info = committee.find(authority);
        for (const auto& d : digests) power[{id, seq}][d] += info ? info->power : 0;
    }
    for (const auto& [slot, tally] : power) {
        int quorums = 0;
        for (const auto& [d, p] : tally)
            if (committee.is_quorum(p)) quorums++;
        if (quorums > 1)
            out.push_back("two conflicting requests reached quorum at " +
                          slot.first.to_string() + ":" + std::to_string(slot.second));
    }
}

// Replay every known certificate into every engine until nothing changes,
// then drain the effects each application produced.
inline void disseminate(const Committee& committee, const ClientLog& log,
                        const std::vector<AuthorityShard*>& engines) {
    std::vector<Certificate> ordered = log.certs;
    std::sort(ordered.begin(), ordered.end(), [](const Certificate& a, const Certificate& b) {
        const auto* ra = std::get_if<Request>(&a.value);
        const auto* rb = std::get_if<Request>(&b.value);
        if (!ra || !rb) return false;
        if (ra->account != rb->account) return ra->account < rb->account;
        return ra->sequence < rb->sequence;
    });
    for (int pass = 0; pass < 8; pass++) {
        bool changed = false;
        for (auto* shard : engines) {
            for (const auto& cert : ordered) {
                const auto* req = std::get_if<Request>(&cert.value);
                if (!req || !shard->engine().hosts(req->account)) continue;
                auto msgs = shard->engine().handle_confirmation(cert);
                if (!msgs.ok()) continue;
                if (!msgs.value().empty()) changed = true;
                for (const auto& m : msgs.value())
                    for (auto* peer : engines)
                        if (peer->engine().authority() == shard->engine().authority())
                            peer->engine().handle_cross_shard(m);
            }
        }
        if (!changed && pass > 0) break;
    }
}

// After dissemination and a final sweep, honest replicas hold identical
// account maps. Closed accounts never show an owner again anywhere.
inline void check_convergence(const Committee& committee, const ClientLog& log,
                              const std::vector<AuthorityShard*>& engines,
                              std::vector<std::string>& out) {
    disseminate(committee, log, engines);
    for (auto* shard : engines) {
        for (const auto& id : log.closed) {
            const AccountState* st = shard->engine().find(id);
            if (st && st->active())
                out.push_back("closed account " + id.to_string() + " active at " +
                              shard->engine().authority());
        }
    }
    for (auto* shard : engines) shard->engine().sweep();

    // group by shard index: replicas of the same shard must agree exactly
    std::map<uint32_t, std::map<std::string, Digest>> views;
    for (auto* shard : engines) {
        Writer w;
        for (const auto& [id, st] : shard->engine().accounts()) {
            id.encode(w);
            st.fingerprint(id).encode(w);
        }
        uint32_t idx = shard->engine().shard() ? *shard->engine().shard() : 0;
        views[idx][shard->engine().authority()] = hash_bytes(domain::state, w.out);
    }
    for (const auto& [idx, by_auth] : views) {
        std::set<Digest> distinct;
        for (const auto& [a, d] : by_auth) distinct.insert(d);
        if (distinct.size() > 1)
            out.push_back("shard " + std::to_string(idx) + " replicas diverge across " +
                          std::to_string(by_auth.size()) + " authorities");
    }
}

inline void check_liveness(const ClientLog& log, std::vector<std::string>& out) {
    for (const auto& a : log.actions) {
        if (!a.adversarial && !a.succeeded)
            out.push_back("action " + std::to_string(a.index) + " (" + a.kind +
                          ") failed: " + a.error);
    }
}

// --- the runner ---------------------------------------------------------------

// Committee plus every private key a scenario needs, derived from the seed.
struct Cluster {
    Committee committee;
    std::vector<AuthorityKeys> authority_keys;
    std::map<Uid, KeyPair> owner_keys;
};

inline Cluster build_cluster(const Scenario& sc) {
    Rng boot(Hasher(domain::rng).update_u64(sc.seed).update_str("sim-committee").digest().v);
    coconut::Params params = coins::default_params();
    uint32_t n = sc.authorities;
    auto keys = coconut::keygen(params, sc.issuance_threshold, n, boot).value();

    Cluster cl;
    cl.committee.fault_bound = sc.fault_bound;
    cl.committee.credential_threshold = sc.issuance_threshold;
    cl.committee.num_shards = sc.shards;
    cl.committee.credential_params = params;
    cl.committee.credential_vk = keys.aggregate_vk;
    for (uint32_t i = 0; i < n; i++) {
        AuthorityInfo a;
        a.name = "a" + std::to_string(i);
        AuthorityKeys ak;
        ak.name = a.name;
        ak.vote_key = KeyPair::generate(boot);
        ak.issuance = keys.shares[i];
        a.vote_key = ak.vote_key.public_key();
        a.credential_index = keys.shares[i].index;
        a.credential_vk = keys.share_vks[i];
        cl.committee.authorities.push_back(std::move(a));
        cl.authority_keys.push_back(std::move(ak));
    }
    for (const auto& [id, bal] : sc.genesis) {
        auto uid = Uid::parse(id);
        if (!uid) throw std::runtime_error("bad uid in scenario: " + id);
        KeyPair k = KeyPair::generate(boot);
        cl.committee.accounts.push_back({*uid, k.public_key(), bal});
        cl.owner_keys[*uid] = k;
    }
    cl.committee.validate();
    return cl;
}

struct SimAccount {
    KeyPair key;
    uint64_t next_seq = 0;
    std::vector<Certificate> certs;
    std::optional<SignedRequest> in_flight;  // signed but not yet certified
    bool closed = false;
    bool wedged = false;  // an equivocation locked this sequence slot
};

class Runner {
  public:
    explicit Runner(Scenario sc, bool record_trace = false)
        : sc_(std::move(sc)), record_(record_trace), rng_(sc_.seed), trace_(domain::trace) {
        build_committee();
    }

    const Committee& committee() const { return committee_; }

    Verdict run() {
        Verdict v;
        size_t next_action = 0;
        __int128 spendable = total_spendable(committee_, log_);
        while (next_action < sc_.script.size() || !queue_.empty()) {
            bool take_action = next_action < sc_.script.size() &&
                               (queue_.empty() || sc_.script[next_action].at <= queue_.begin()->first.first);
            if (take_action) {
                const Action& a = sc_.script[next_action];
                now_ = std::max(now_, a.at);
                run_action(next_action, a);
                next_action++;
                __int128 s = total_spendable(committee_, log_);
                if (s > spendable)
                    bad_.push_back("spendable value increased after action " +
                                   std::to_string(next_action - 1));
                spendable = s;
            } else {
                auto it = queue_.begin();
                now_ = std::max(now_, it->first.first);
                Delivery d = std::move(it->second);
                queue_.erase(it);
                deliver(d);
                v.deliveries++;
            }
        }
        __int128 s = total_spendable(committee_, log_);
        if (s > spendable) bad_.push_back("spendable value increased at quiescence");

        check_double_spend(log_, bad_);
        check_vote_accounting(committee_, log_, bad_);
        check_liveness(log_, bad_);
        check_convergence(committee_, log_, live_engines(), bad_);

        v.ok = bad_.empty();
        v.violations = bad_;
        v.trace_digest = trace_.digest();
        v.log = log_;
        v.trace = lines_;
        return v;
    }

  private:
    struct Delivery {
        uint32_t authority = 0;
        uint32_t shard = 0;
        wire::Frame frame;
        bool effect = false;  // cross-shard effects are retried, not lost
    };

    void build_committee() {
        Cluster cl = build_cluster(sc_);
        committee_ = std::move(cl.committee);
        for (auto& [id, k] : cl.owner_keys) owned_[id] = SimAccount{k};
        for (const auto& ak : cl.authority_keys) {
            std::vector<std::unique_ptr<AuthorityShard>> row;
            for (uint32_t s = 0; s < sc_.shards; s++)
                row.push_back(std::make_unique<AuthorityShard>(
                    committee_, ak, sc_.shards > 1 ? std::optional<uint32_t>(s) : std::nullopt));
            eng_.push_back(std::move(row));
        }
    }

    static Uid parse_uid(const std::string& s) {
        auto u = Uid::parse(s);
        if (!u) throw std::runtime_error("bad uid in scenario: " + s);
        return *u;
    }

    std::vector<AuthorityShard*> live_engines() {
        std::vector<AuthorityShard*> v;
        for (uint32_t i = 0; i < sc_.authorities; i++) {
            if (crashed(i)) continue;
            for (auto& s : eng_[i]) v.push_back(s.get());
        }
        return v;
    }

    bool crashed(uint32_t authority) const {
        auto it = sc_.faults.crash_at.find(committee_.authorities[authority].name);
        return it != sc_.faults.crash_at.end() && now_ >= it->second;
    }
    bool partitioned(uint32_t authority) const {
        for (const auto& p : sc_.faults.partitions)
            if (p.covers(now_, committee_.authorities[authority].name)) return true;
        return false;
    }

    void absorb(const char* kind, uint32_t authority, uint32_t shard, const wire::Frame& f,
                const wire::Frame* reply) {
        trace_.update_str(kind).update_u64(now_).update_u64(authority).update_u64(shard);
        trace_.update(wire::frame_bytes(f));
        if (reply) trace_.update(wire::frame_bytes(*reply));
        if (record_) {
            std::string line = std::to_string(now_) + " " + kind + " " +
                               committee_.authorities[authority].name + "/" +
                               std::to_string(shard) + " " + wire::tag_name(f.tag);
            if (reply) {
                line += " -> ";
                line += wire::tag_name(reply->tag);
                if (reply->tag == wire::Tag::Error) {
                    try {
                        Reader r(reply->payload);
                        line += std::string("(") + err_name(Error::decode(r).code) + ")";
                    } catch (const ParseError&) {
                    }
                }
            }
            lines_.push_back(std::move(line));
        }
    }

    // Synchronous client call. Returns nothing when the authority is down,
    // partitioned away, or the link ate the exchange.
    std::optional<wire::Frame> call(uint32_t authority, uint32_t shard, const wire::Frame& f) {
        if (crashed(authority) || partitioned(authority)) return std::nullopt;
        if (sc_.faults.link.drop_pct && rng_.u64() % 100 < sc_.faults.link.drop_pct) {
            absorb("lost", authority, shard, f, nullptr);
            return std::nullopt;
        }
        std::vector<CrossShardMessage> outbox;
        wire::Frame reply = eng_[authority][shard]->handle(f, outbox);
        absorb("call", authority, shard, f, &reply);
        enqueue_effects(authority, outbox);
        return reply;
    }

    // Scheduled delivery with the full fault treatment.
    void enqueue(Delivery d) {
        const auto& l = sc_.faults.link;
        if (!d.effect && l.drop_pct && rng_.u64() % 100 < l.drop_pct) return;
        uint32_t copies = (l.dup_pct && rng_.u64() % 100 < l.dup_pct) ? 2 : 1;
        for (uint32_t i = 0; i < copies; i++) {
            uint64_t delay = 1 + (l.max_delay ? rng_.u64() % (l.max_delay + 1) : 0);
            queue_.emplace(std::make_pair(now_ + delay, seq_++), d);
        }
    }

    void enqueue_effects(uint32_t authority, const std::vector<CrossShardMessage>& msgs) {
        for (const auto& m : msgs) {
            Delivery d;
            d.authority = authority;
            d.shard = committee_.shard_of(m.target);
            d.frame = wire::make_frame(wire::Tag::CrossShard, m);
            d.effect = true;
            enqueue(std::move(d));
        }
    }

    void deliver(const Delivery& d) {
        if (crashed(d.authority)) {
            absorb("dead", d.authority, d.shard, d.frame, nullptr);
            return;
        }
        std::vector<CrossShardMessage> outbox;
        wire::Frame reply = eng_[d.authority][d.shard]->handle(d.frame, outbox);
        absorb("deliver", d.authority, d.shard, d.frame, &reply);
        enqueue_effects(d.authority, outbox);
    }

    // Push our view of an account's history (ancestors first) into one
    // authority so it can vote again. Mirrors the wallet's catch-up path.
    void push_certs(uint32_t authority, const Uid& id) {
        if (!id.is_root()) push_certs(authority, *id.parent());
        auto it = owned_.find(id);
        if (it == owned_.end()) return;
        uint32_t shard = committee_.shard_of(id);
        for (const auto& cert : it->second.certs) {
            wire::Frame f = wire::make_frame(wire::Tag::Confirm, cert);
            for (int attempt = 0; attempt < 4; attempt++) {
                auto r = call(authority, shard, f);
                if (r) break;
            }
        }
    }

    Result<Vote> ask_vote(uint32_t authority, const SignedRequest& sr, const Digest& want) {
        uint32_t shard = committee_.shard_of(sr.request.account);
        wire::Frame f = wire::make_frame(wire::Tag::Request, sr);
        const std::string& name = committee_.authorities[authority].name;
        bool synced = false;
        Error last(Err::Timeout);
        for (int attempt = 0; attempt < 12; attempt++) {
            auto r = call(authority, shard, f);
            if (!r) {
                last = Error(Err::Timeout, 0, name);
                continue;
            }
            if (r->tag == wire::Tag::Vote) {
                auto v = wire::parse_payload<Vote>(r->payload);
                if (!v.ok()) return v.error();
                if (v.value().authority != name ||
                    !v.value().verify(committee_.authorities[authority].vote_key))
                    return Error(Err::InvalidVote, 0, name);
                log_.votes[{name, sr.request.account, sr.request.sequence}].insert(
                    v.value().value);
                if (!(v.value().value == want)) return Error(Err::AccountLocked, 0, name);
                return v.value();
            }
            try {
                Reader rd(r->payload);
                last = Error::decode(rd);
            } catch (const ParseError&) {
                return Err::MalformedMessage;
            }
            bool behind = last.code == Err::MissingEarlierCertificates ||
                          (last.code == Err::WrongSequence && last.arg < sr.request.sequence) ||
                          last.code == Err::InactiveAccount;
            if (!behind) break;
            if (!synced) {
                synced = true;
                push_certs(authority, sr.request.account);
            }
        }
        return last;
    }

    Result<Certificate> certify(const Uid& id, const Operation& op) {
        SimAccount& acct = owned_.at(id);
        if (acct.wedged) return Err::AccountLocked;
        // Never sign two different requests at one sequence number. If an
        // earlier attempt stalled mid-collection, finish it first (lockers
        // re-vote for the identical digest), then take the next slot.
        if (acct.in_flight) {
            auto done = collect_and_confirm(acct, *acct.in_flight);
            if (!done.ok()) return done.error();
        }
        Request req{id, acct.next_seq, op};
        acct.in_flight = SignedRequest::sign(req, acct.key);
        return collect_and_confirm(acct, *acct.in_flight);
    }

    Result<Certificate> collect_and_confirm(SimAccount& acct, const SignedRequest& sr) {
        Digest want = sr.request.digest();
        std::vector<Vote> votes;
        uint64_t power = 0;
        Error last(Err::NotAQuorum);
        for (uint32_t i = 0; i < sc_.authorities && !committee_.is_quorum(power); i++) {
            auto v = ask_vote(i, sr, want);
            if (v.ok()) {
                votes.push_back(v.value());
                power += committee_.authorities[i].power;
            } else {
                last = v.error();
            }
        }
        if (!committee_.is_quorum(power)) return last;
        auto cert = aggregate_certificate(committee_, sr.request, std::move(votes));
        if (!cert.ok()) return cert.error();

        acct.in_flight.reset();
        acct.next_seq++;
        acct.certs.push_back(cert.value());
        log_.certs.push_back(cert.value());
        uint32_t shard = committee_.shard_of(sr.request.account);
        for (uint32_t i = 0; i < sc_.authorities; i++)
            enqueue({i, shard, wire::make_frame(wire::Tag::Confirm, cert.value()), false});
        return cert;
    }

    // Free (stateless) coin-creation exchange against every authority.
    // Collect per-output votes for transparent coins or blinded shares for
    // opaque ones; callers aggregate.
    template <typename Msg>
    std::vector<std::pair<uint32_t, wire::CoinShares>> broadcast_creation(wire::Tag tag,
                                                                          const Msg& msg,
                                                                          uint32_t shard) {
        last_mint_ = wire::make_frame(tag, msg);
        last_mint_shard_ = shard;
        std::vector<std::pair<uint32_t, wire::CoinShares>> got;
        for (uint32_t i = 0; i < sc_.authorities; i++) {
            for (int attempt = 0; attempt < 12; attempt++) {
                auto r = call(i, shard, *last_mint_);
                if (!r) continue;
                if (r->tag != wire::Tag::CoinShares) break;
                auto cs = wire::parse_payload<wire::CoinShares>(r->payload);
                if (cs.ok()) got.emplace_back(i, cs.value());
                break;
            }
        }
        return got;
    }

    Result<std::vector<TransparentCoin>> mint_transparent(
        const std::vector<TransparentInput>& inputs,
        const std::vector<TransparentCoinBody>& outputs) {
        auto plan = build_transparent_spends(committee_, inputs, outputs);
        if (!plan.ok()) return plan.error();
        for (auto& [acct, op] : plan.value().ops) {
            auto cert = certify(acct, op);
            if (!cert.ok()) return cert.error();
            plan.value().creation.spends.push_back(cert.value());
        }
        uint32_t shard = committee_.shard_of(plan.value().ops[0].first);
        auto got = broadcast_creation(wire::Tag::CreateTransparentCoins, plan.value().creation,
                                      shard);

        std::vector<std::vector<Vote>> per_output(outputs.size());
        uint64_t power = 0;
        for (auto& [i, cs] : got) {
            if (cs.kind != wire::CoinShares::kTransparent || cs.votes.size() != outputs.size())
                continue;
            bool good = true;
            for (size_t j = 0; j < outputs.size() && good; j++)
                good = cs.votes[j].authority == committee_.authorities[i].name &&
                       cs.votes[j].value == outputs[j].digest() &&
                       cs.votes[j].verify(committee_.authorities[i].vote_key);
            if (!good) continue;
            for (size_t j = 0; j < outputs.size(); j++) per_output[j].push_back(cs.votes[j]);
            power += committee_.authorities[i].power;
        }
        if (!committee_.is_quorum(power)) return Err::NotAQuorum;
        auto coins = aggregate_transparent_coins(committee_, outputs, per_output);
        if (!coins.ok()) return coins.error();
        for (const auto& c : coins.value()) {
            log_.coin_certs.push_back(c.certificate);
            log_.coins.push_back({c.body().account, c.body().marker(), c.body().value});
            tcoins_.push_back(c);
        }
        return coins;
    }

    Digest fresh_seed() { return hash_bytes(domain::transparent_coin, rng_.bytes(32)); }

    void record(size_t index, const std::string& kind, bool adversarial, const Status& st) {
        ActionRecord r;
        r.index = index;
        r.kind = kind;
        r.adversarial = adversarial;
        r.succeeded = st.ok();
        if (!st.ok()) r.error = st.error().to_string();
        log_.actions.push_back(std::move(r));
    }

    void run_action(size_t index, const Action& a) {
        trace_.update_str("action").update_u64(index).update_str(a.kind);
        if (record_)
            lines_.push_back(std::to_string(now_) + " action[" + std::to_string(index) + "] " +
                             a.kind + " " + a.account +
                             (a.target.empty() ? "" : " -> " + a.target));
        bool pre_wedged = false;
        if (auto u = Uid::parse(a.account)) {
            auto it = owned_.find(*u);
            pre_wedged = it != owned_.end() && it->second.wedged;
        }
        Status st = dispatch_action(a);
        // Acting through an account the client itself wedged is expected to fail.
        bool adversarial = a.kind == "equivocate" || a.kind == "replay_mint" || pre_wedged;
        record(index, a.kind, adversarial, st);
    }

    Status dispatch_action(const Action& a) {
        if (a.kind == "sweep") {
            for (auto* s : live_engines()) s->engine().sweep();
            return ok_status();
        }
        if (a.kind == "replay_mint") {
            if (!last_mint_) return Err::MalformedMessage;
            for (uint32_t i = 0; i < sc_.authorities; i++) call(i, last_mint_shard_, *last_mint_);
            return ok_status();
        }

        Uid id = parse_uid(a.account);
        auto it = owned_.find(id);
        if (it == owned_.end()) return Err::UnknownAccount;

        if (a.kind == "transfer") {
            auto c = certify(id, OpTransfer{parse_uid(a.target), a.amount});
            return c.ok() ? ok_status() : Status(c.error());
        }
        if (a.kind == "open") {
            Uid child = id.child(it->second.next_seq);
            KeyPair k = KeyPair::generate(rng_);
            auto c = certify(id, OpOpenAccount{child, k.public_key()});
            if (!c.ok()) return c.error();
            owned_[child] = SimAccount{k};
            return ok_status();
        }
        if (a.kind == "change_key") {
            KeyPair k = KeyPair::generate(rng_);
            auto c = certify(id, OpChangeKey{k.public_key()});
            if (!c.ok()) return c.error();
            it->second.key = k;
            return ok_status();
        }
        if (a.kind == "close") {
            auto c = certify(id, OpCloseAccount{});
            if (!c.ok()) return c.error();
            it->second.closed = true;
            log_.closed.insert(id);
            return ok_status();
        }
        if (a.kind == "mint") {
            uint64_t v1 = a.amount / 2, v2 = a.amount - v1;
            std::vector<TransparentCoinBody> outs{{id, v1, fresh_seed()}, {id, v2, fresh_seed()}};
            if (v1 == 0) outs.erase(outs.begin());
            auto c = mint_transparent({{id, std::nullopt, a.amount}}, outs);
            return c.ok() ? ok_status() : Status(c.error());
        }
        if (a.kind == "respend") {
            TransparentCoin coin = pick_coin(id);
            if (coin.certificate.sigs.empty()) return ok_status();  // nothing to spend
            std::vector<TransparentCoinBody> outs{{id, coin.body().value, fresh_seed()}};
            auto c = mint_transparent({{id, coin, 0}}, outs);
            if (c.ok()) drop_tcoin(coin);
            return c.ok() ? ok_status() : Status(c.error());
        }
        if (a.kind == "redeem") {
            TransparentCoin coin = pick_coin(id);
            if (coin.certificate.sigs.empty()) return ok_status();  // nothing to redeem
            auto c = certify(id, OpSpendAndTransfer{parse_uid(a.target),
                                                    TransparentRedeem{coin.encoded()}});
            if (c.ok()) drop_tcoin(coin);
            return c.ok() ? ok_status() : Status(c.error());
        }
        if (a.kind == "mint_opaque") return mint_opaque(id, a.amount);
        if (a.kind == "redeem_opaque") {
            for (size_t i = 0; i < ocoins_.size(); i++) {
                if (ocoins_[i].account == id) {
                    auto c = certify(id, OpSpendAndTransfer{
                                             parse_uid(a.target),
                                             OpaqueRedeem{ocoins_[i].index, ocoins_[i].seed,
                                                          ocoins_[i].value, ocoins_[i].sigma}});
                    if (c.ok()) ocoins_.erase(ocoins_.begin() + long(i));
                    return c.ok() ? ok_status() : Status(c.error());
                }
            }
            return Err::MalformedMessage;
        }
        if (a.kind == "equivocate") return equivocate(id, parse_uid(a.target), a.amount);
        return Error(Err::MalformedMessage, 0, "unknown action kind " + a.kind);
    }

    TransparentCoin pick_coin(const Uid& id) {
        for (const auto& c : tcoins_)
            if (c.body().account == id) return c;
        return TransparentCoin{};
    }
    void drop_tcoin(const TransparentCoin& c) {
        Digest d = c.body().digest();
        std::erase_if(tcoins_, [&](const TransparentCoin& x) { return x.body().digest() == d; });
    }

    Status mint_opaque(const Uid& id, uint64_t amount) {
        std::vector<coins::SpendInput> spends{{std::nullopt, amount}};
        uint64_t v1 = amount / 2, v2 = amount - v1;
        std::vector<coins::OutputSpec> specs;
        specs.push_back({id, rng_.u64(), bls::Fr::random(rng_), v2});
        if (v1) specs.push_back({id, rng_.u64(), bls::Fr::random(rng_), v1});
        auto built = coins::coin_request(committee_.credential_params, committee_.credential_vk,
                                         spends, specs, rng_);
        if (!built.ok()) return built.error();

        OpSpend op;
        op.withdrawal = amount;
        op.outputs_hash = built.value().request.outputs_hash();
        auto cert = certify(id, op);
        if (!cert.ok()) return cert.error();

        wire::CreateAnonymousCoins msg;
        msg.request = built.value().request;
        msg.spends.push_back(cert.value());
        auto got = broadcast_creation(wire::Tag::CreateAnonymousCoins, msg,
                                      committee_.shard_of(id));

        std::vector<std::vector<std::pair<uint32_t, coconut::Credential>>> parts(specs.size());
        uint32_t have = 0;
        for (auto& [i, cs] : got) {
            if (have >= committee_.credential_threshold) break;
            if (cs.kind != wire::CoinShares::kBlinded || cs.shares.size() != specs.size())
                continue;
            std::vector<coconut::Credential> creds;
            bool good = true;
            for (size_t j = 0; j < specs.size() && good; j++) {
                creds.push_back(coins::unblind_output(
                    committee_.credential_params, committee_.authorities[i].credential_vk,
                    msg.request.outputs[j], built.value().secrets[j], cs.shares[j]));
                good = coconut::plain_verify(
                    committee_.credential_params, committee_.authorities[i].credential_vk,
                    creds.back(),
                    {coins::coin_key(specs[j].account, specs[j].index), specs[j].seed,
                     bls::Fr::from_int(specs[j].value)});
            }
            if (!good) continue;
            for (size_t j = 0; j < specs.size(); j++)
                parts[j].push_back({committee_.authorities[i].credential_index, creds[j]});
            have++;
        }
        if (have < committee_.credential_threshold) return Err::NotAQuorum;
        for (size_t j = 0; j < specs.size(); j++) {
            auto agg = coconut::agg_cred(parts[j], committee_.credential_threshold);
            if (!agg.ok()) return agg.error();
            coins::OpaqueCoin c{specs[j].account, specs[j].index, specs[j].seed, specs[j].value,
                                agg.value()};
            if (!c.verify(committee_.credential_params, committee_.credential_vk))
                return Err::BadCoinSignature;
            ocoins_.push_back(c);
            log_.coins.push_back(
                {c.account, SpentMarker::opaque(c.index), c.value});
        }
        return ok_status();
    }

    // Two conflicting transfers signed at the same sequence number,
    // alternating which one each authority sees first. The protocol wedges
    // the slot unless one side reaches quorum.
    Status equivocate(const Uid& id, const Uid& target, uint64_t amount) {
        SimAccount& acct = owned_.at(id);
        Request r1{id, acct.next_seq, OpTransfer{target, amount}};
        Request r2{id, acct.next_seq, OpTransfer{target, amount + 1}};
        SignedRequest s1 = SignedRequest::sign(r1, acct.key);
        SignedRequest s2 = SignedRequest::sign(r2, acct.key);

        std::map<Digest, std::vector<Vote>> votes;
        std::map<Digest, uint64_t> power;
        for (uint32_t i = 0; i < sc_.authorities; i++) {
            bool first_is_one = rng_.u64() % 2 == 0;
            for (const auto* sr : first_is_one ? std::vector<const SignedRequest*>{&s1, &s2}
                                               : std::vector<const SignedRequest*>{&s2, &s1}) {
                auto r = call(i, committee_.shard_of(id),
                              wire::make_frame(wire::Tag::Request, *sr));
                if (!r || r->tag != wire::Tag::Vote) continue;
                auto v = wire::parse_payload<Vote>(r->payload);
                if (!v.ok() || v.value().authority != committee_.authorities[i].name ||
                    !v.value().verify(committee_.authorities[i].vote_key))
                    continue;
                log_.votes[{committee_.authorities[i].name, id, acct.next_seq}].insert(
                    v.value().value);
                votes[v.value().value].push_back(v.value());
                power[v.value().value] += committee_.authorities[i].power;
            }
        }
        for (const auto& [digest, p] : power) {
            if (!committee_.is_quorum(p)) continue;
            const Request& won = digest == r1.digest() ? r1 : r2;
            auto cert = aggregate_certificate(committee_, won, votes[digest]);
            if (!cert.ok()) continue;
            acct.next_seq++;
            acct.certs.push_back(cert.value());
            log_.certs.push_back(cert.value());
            for (uint32_t i = 0; i < sc_.authorities; i++)
                enqueue({i, committee_.shard_of(id),
                         wire::make_frame(wire::Tag::Confirm, cert.value()), false});
            return ok_status();
        }
        acct.wedged = true;
        return ok_status();
    }

    Scenario sc_;
    bool record_;
    Rng rng_;
    Hasher trace_;
    Committee committee_;
    std::vector<std::vector<std::unique_ptr<AuthorityShard>>> eng_;
    std::map<Uid, SimAccount> owned_;
    std::vector<TransparentCoin> tcoins_;
    std::vector<coins::OpaqueCoin> ocoins_;
    std::optional<wire::Frame> last_mint_;
    uint32_t last_mint_shard_ = 0;
    uint64_t now_ = 0;
    uint64_t seq_ = 0;
    std::map<std::pair<uint64_t, uint64_t>, Delivery> queue_;
    std::vector<std::string> lines_;
    ClientLog log_;
    std::vector<std::string> bad_;
};

inline Verdict run_scenario(const Scenario& sc, bool record_trace = false) {
    Runner r(sc, record_trace);
    return r.run();
}

// Shrink a failing scenario by dropping script actions while a violation of
// the same kind persists, then rerun with trace recording.
inline Verdict minimize(const Scenario& sc) {
    auto classes = [](const std::vector<std::string>& v) {
        std::set<std::string> c;
        for (const auto& s : v) c.insert(s.substr(0, s.find(' ')));
        return c;
    };
    auto orig = classes(run_scenario(sc).violations);
    Scenario best = sc;
    bool shrunk = true;
    while (shrunk && best.script.size() > 1) {
        shrunk = false;
        for (size_t i = 0; i < best.script.size(); i++) {
            Scenario cand = best;
            cand.script.erase(cand.script.begin() + long(i));
            auto got = classes(run_scenario(cand).violations);
            bool same_kind = false;
            for (const auto& c : got)
                if (orig.count(c)) same_kind = true;
            if (same_kind) {
                best = std::move(cand);
                shrunk = true;
                break;
            }
        }
    }
    return run_scenario(best, true);
}

// Random safety-loop scenario: a handful of accounts, transfers, transparent
// coin traffic, closes, one crash, lossy duplicated delayed links.
inline Scenario random_scenario(uint64_t seed) {
    Rng rng(Hasher(domain::rng).update_u64(seed).update_str("sim-scenario").digest().v);
    Scenario sc;
    sc.seed = seed;
    sc.genesis = {{"1", 1000}, {"2", 1000}, {"3", 1000}};
    sc.faults.link.drop_pct = 10 + rng.u64() % 16;
    sc.faults.link.dup_pct = 10 + rng.u64() % 21;
    sc.faults.link.max_delay = 5 + rng.u64() % 36;
    uint64_t horizon = 10;
    std::vector<std::string> ids{"1", "2", "3"};
    std::vector<bool> minted(3, false), closed(3, false);
    size_t events = 4 + rng.u64() % 5;
    for (size_t i = 0; i < events; i++) {
        Action a;
        a.at = horizon;
        horizon += 1 + rng.u64() % 8;
        size_t actor = rng.u64() % 3;
        if (closed[actor]) {
            continue;
        }
        size_t other = (actor + 1 + rng.u64() % 2) % 3;
        switch (rng.u64() % 8) {
            case 0:
            case 1:
            case 2:
                a.kind = "transfer";
                a.account = ids[actor];
                a.target = ids[other];
                a.amount = 1 + rng.u64() % 50;
                break;
            case 3:
                a.kind = "mint";
                a.account = ids[actor];
                a.amount = 2 + rng.u64() % 40;
                minted[actor] = true;
                break;
            case 4:
                if (!minted[actor]) {
                    a.kind = "mint";
                    a.amount = 2 + rng.u64() % 40;
                } else {
                    a.kind = "respend";
                }
                a.account = ids[actor];
                minted[actor] = true;
                break;
            case 5:
                if (minted[actor]) {
                    a.kind = "redeem";
                    a.account = ids[actor];
                    a.target = ids[other];
                    minted[actor] = false;
                } else {
                    a.kind = "transfer";
                    a.account = ids[actor];
                    a.target = ids[other];
                    a.amount = 1 + rng.u64() % 50;
                }
                break;
            case 6:
                a.kind = "replay_mint";
                break;
            case 7:
                // close only accounts that no longer hold coins, and only as
                // a late event so earlier actions stay valid
                if (!minted[actor] && i + 2 >= events) {
                    a.kind = "close";
                    a.account = ids[actor];
                    closed[actor] = true;
                } else {
                    a.kind = "transfer";
                    a.account = ids[actor];
                    a.target = ids[other];
                    a.amount = 1 + rng.u64() % 50;
                }
                break;
        }
        sc.script.push_back(std::move(a));
    }
    // one crash, always, after the first action could start
    sc.faults.crash_at["a" + std::to_string(rng.u64() % 4)] = 12 + rng.u64() % horizon;
    return sc;
}

// --- bounded exhaustive interleaving enumeration ------------------------------
//
// Stages the scripted operations once (fault free) to fix the certificate
// set, then explores every order in which confirmations and the cross-shard
// effects they spawn can reach each replica. Nothing is disseminated behind
// the schedule's back, so agreement has to hold at every leaf on its own.
// Memoized on replica state: commuting deliveries collapse.

struct EnumVerdict {
    bool ok = true;
    uint64_t states = 0;
    uint64_t leaves = 0;
    std::vector<std::string> violations;
    std::vector<std::string> witness;  // delivery order reaching the first violation
};

class Enumerator {
  public:
    // Inspects every replica at a leaf; any line it appends is a violation.
    using LeafCheck = std::function<void(const std::vector<std::vector<AccountEngine>>&,
                                         std::vector<std::string>&)>;

    explicit Enumerator(Scenario sc, LeafCheck leaf = {}, uint64_t state_cap = 2'000'000)
        : sc_(std::move(sc)), leaf_(std::move(leaf)), cap_(state_cap) {}

    EnumVerdict run() {
        cl_ = build_cluster(sc_);
        stage();
        if (!v_.violations.empty()) {
            v_.ok = false;
            return v_;
        }
        State root;
        root.eng = fresh_engines();
        for (size_t c = 0; c < certs_.size(); c++)
            for (uint32_t i = 0; i < sc_.authorities; i++) root.pending.push_back(confirm_item(i, c));
        std::vector<std::string> path;
        dfs(root, path);
        v_.ok = v_.violations.empty();
        return v_;
    }

  private:
    struct Item {
        uint32_t authority = 0;
        uint32_t shard = 0;
        bool effect = false;
        size_t cert = 0;        // when !effect
        CrossShardMessage msg;  // when effect
        Digest key;
        std::string label;
    };
    struct State {
        std::vector<std::vector<AccountEngine>> eng;  // [authority][shard]
        std::vector<Item> pending;
        // (authority, account) pairs whose close certificate has executed
        // there; derivable from `pending`, so not part of the memo key
        std::set<std::pair<uint32_t, Uid>> closed_done;
    };

    std::vector<std::vector<AccountEngine>> fresh_engines() {
        std::vector<std::vector<AccountEngine>> eng;
        for (uint32_t i = 0; i < sc_.authorities; i++) {
            std::vector<AccountEngine> row;
            for (uint32_t s = 0; s < sc_.shards; s++)
                row.emplace_back(cl_.committee, cl_.authority_keys[i].name,
                                 cl_.authority_keys[i].vote_key,
                                 sc_.shards > 1 ? std::optional<uint32_t>(s) : std::nullopt);
            eng.push_back(std::move(row));
        }
        return eng;
    }

    void fail_stage(const std::string& why) { v_.violations.push_back("stage: " + why); }

    void stage() {
        auto stage_eng = fresh_engines();
        owners_ = cl_.owner_keys;
        std::map<Uid, uint64_t> seq;
        Rng rng(Hasher(domain::rng).update_u64(sc_.seed).update_str("sim-stage").digest().v);
        for (const auto& a : sc_.script) {
            auto id = Uid::parse(a.account);
            if (!id || !owners_.count(*id)) return fail_stage("unknown account " + a.account);
            Operation op;
            std::optional<KeyPair> fresh;
            if (a.kind == "transfer") {
                auto t = Uid::parse(a.target);
                if (!t) return fail_stage("bad target " + a.target);
                op = OpTransfer{*t, a.amount};
            } else if (a.kind == "open") {
                fresh = KeyPair::generate(rng);
                op = OpOpenAccount{id->child(seq[*id]), fresh->public_key()};
            } else if (a.kind == "change_key") {
                fresh = KeyPair::generate(rng);
                op = OpChangeKey{fresh->public_key()};
            } else if (a.kind == "close") {
                op = OpCloseAccount{};
            } else {
                return fail_stage("unsupported action " + a.kind);
            }
            Request req{*id, seq[*id], op};
            SignedRequest sr = SignedRequest::sign(req, owners_.at(*id));
            uint32_t shard = cl_.committee.shard_of(*id);
            std::vector<Vote> votes;
            for (uint32_t i = 0; i < sc_.authorities; i++) {
                auto vt = stage_eng[i][shard].handle_request(sr);
                if (!vt.ok()) return fail_stage(a.kind + " rejected: " + vt.error().to_string());
                votes.push_back(vt.value());
            }
            auto cert = aggregate_certificate(cl_.committee, req, std::move(votes));
            if (!cert.ok()) return fail_stage("aggregation failed: " + cert.error().to_string());
            for (uint32_t i = 0; i < sc_.authorities; i++) {
                auto out = stage_eng[i][shard].handle_confirmation(cert.value());
                if (!out.ok()) continue;
                for (const auto& m : out.value())
                    stage_eng[i][cl_.committee.shard_of(m.target)].handle_cross_shard(m);
            }
            if (const auto* o = std::get_if<OpOpenAccount>(&req.op)) owners_[o->child] = *fresh;
            if (std::holds_alternative<OpChangeKey>(req.op)) owners_[*id] = *fresh;
            if (std::holds_alternative<OpCloseAccount>(req.op)) closed_.insert(*id);
            seq[*id]++;
            certs_.push_back(cert.value());
        }
    }

    Item confirm_item(uint32_t authority, size_t cert_idx) {
        const auto* req = std::get_if<Request>(&certs_[cert_idx].value);
        Item it;
        it.authority = authority;
        it.shard = cl_.committee.shard_of(req->account);
        it.cert = cert_idx;
        it.key = Hasher(domain::trace)
                     .update_str("confirm")
                     .update_u64(authority)
                     .update(certs_[cert_idx].value_digest())
                     .digest();
        it.label = "confirm " + req->account.to_string() + ":" + std::to_string(req->sequence) +
                   " -> " + cl_.committee.authorities[authority].name;
        return it;
    }

    Item effect_item(uint32_t authority, const CrossShardMessage& m) {
        Item it;
        it.authority = authority;
        it.shard = cl_.committee.shard_of(m.target);
        it.effect = true;
        it.msg = m;
        Writer w;
        m.encode(w);
        it.key =
            Hasher(domain::trace).update_str("effect").update_u64(authority).update(w.out).digest();
        it.label = std::string(m.kind == CrossShardMessage::Activate ? "activate " : "credit ") +
                   m.target.to_string() + " -> " + cl_.committee.authorities[authority].name;
        return it;
    }

    std::string key_of(const State& s) {
        Hasher h(domain::state);
        for (const auto& row : s.eng)
            for (const auto& e : row) h.update(e.state_digest());
        std::vector<std::string> ks;
        for (const auto& it : s.pending) ks.emplace_back(it.key.v.begin(), it.key.v.end());
        std::sort(ks.begin(), ks.end());
        h.update_u64(ks.size());
        for (const auto& k : ks) h.update_str(k);
        Digest d = h.digest();
        return std::string(d.v.begin(), d.v.end());
    }

    // Returns false when the delivery was refused and retained because its
    // prerequisites have not arrived (the at-least-once channel would retry);
    // the state is unchanged and the branch is not explored.
    bool apply(State& s, const Item& it, const std::vector<std::string>& path) {
        AccountEngine& e = s.eng[it.authority][it.shard];
        if (it.effect) {
            e.handle_cross_shard(it.msg);
        } else {
            auto out = e.handle_confirmation(certs_[it.cert]);
            if (!out.ok() && (out.error().code == Err::MissingEarlierCertificates ||
                              out.error().code == Err::InactiveAccount)) {
                s.pending.push_back(it);
                return false;
            }
            if (out.ok())
                for (const auto& m : out.value()) s.pending.push_back(effect_item(it.authority, m));
            const auto* req = std::get_if<Request>(&certs_[it.cert].value);
            if (std::holds_alternative<OpCloseAccount>(req->op))
                s.closed_done.insert({it.authority, req->account});
        }
        // once a replica has executed a close, the account never looks active
        // there again, whatever arrives later
        for (const auto& id : closed_) {
            if (!s.closed_done.count({it.authority, id})) continue;
            const AccountState* st = s.eng[it.authority][cl_.committee.shard_of(id)].find(id);
            if (st && st->active()) {
                v_.violations.push_back("closed account " + id.to_string() + " active at " +
                                        e.authority());
                v_.witness = path;
                v_.witness.push_back(it.label);
                done_ = true;
            }
        }
        return true;
    }

    void leaf(State& s, const std::vector<std::string>& path) {
        v_.leaves++;
        std::vector<std::string> out;
        for (const auto& id : closed_) {
            for (uint32_t i = 0; i < sc_.authorities; i++) {
                const AccountState* st = s.eng[i][cl_.committee.shard_of(id)].find(id);
                if (st && st->active())
                    out.push_back("closed account " + id.to_string() + " active at leaf");
            }
        }
        if (leaf_) leaf_(s.eng, out);
        // a final sweep normalizes best-effort deletion residue; after it the
        // complete maps must match replica for replica
        for (auto& row : s.eng)
            for (auto& e : row) e.sweep();
        for (uint32_t sh = 0; sh < sc_.shards; sh++) {
            std::set<std::string> views;
            for (uint32_t i = 0; i < sc_.authorities; i++) {
                Digest d = s.eng[i][sh].state_digest();
                views.insert(std::string(d.v.begin(), d.v.end()));
            }
            if (views.size() > 1)
                out.push_back("replicas of shard " + std::to_string(sh) + " diverge at a leaf");
        }
        if (!out.empty()) {
            for (auto& o : out) v_.violations.push_back(std::move(o));
            v_.witness = path;
            done_ = true;
        }
    }

    void dfs(State& s, std::vector<std::string>& path) {
        if (done_) return;
        if (v_.states >= cap_) {
            v_.violations.push_back("state cap exceeded");
            done_ = true;
            return;
        }
        if (!memo_.insert(key_of(s)).second) return;
        v_.states++;
        if (s.pending.empty()) {
            leaf(s, path);
            return;
        }
        std::set<std::string> branched;
        bool any = false;
        for (size_t i = 0; i < s.pending.size() && !done_; i++) {
            if (!branched.insert(std::string(s.pending[i].key.v.begin(), s.pending[i].key.v.end()))
                     .second)
                continue;
            State next = s;
            Item it = next.pending[i];
            next.pending.erase(next.pending.begin() + long(i));
            if (!apply(next, it, path)) continue;
            if (done_) return;
            any = true;
            path.push_back(it.label);
            dfs(next, path);
            path.pop_back();
        }
        if (!any && !done_) {
            v_.violations.push_back("schedule stuck: undeliverable items remain");
            v_.witness = path;
            done_ = true;
        }
    }

    Scenario sc_;
    LeafCheck leaf_;
    uint64_t cap_;
    Cluster cl_;
    std::map<Uid, KeyPair> owners_;
    std::set<Uid> closed_;
    std::vector<Certificate> certs_;
    std::unordered_set<std::string> memo_;
    bool done_ = false;
    EnumVerdict v_;
};

inline EnumVerdict enumerate_small_schedules(Scenario sc, Enumerator::LeafCheck leaf = {}) {
    return Enumerator(std::move(sc), std::move(leaf)).run();
}

inline Scenario enum_base(uint32_t authorities) {
    Scenario sc;
    sc.seed = 11;
    sc.authorities = authorities;
    sc.fault_bound = (authorities - 1) / 3;
    sc.issuance_threshold = authorities < 3 ? authorities : 3;
    return sc;
}

// Two transfers crossing between two accounts: every order leaves every
// replica at 95 / 105.
inline EnumVerdict enum_crossing_transfers(uint32_t authorities = 3) {
    Scenario sc = enum_base(authorities);
    sc.genesis = {{"1", 100}, {"2", 100}};
    sc.script = {{"transfer", "1", "2", 10, 0}, {"transfer", "2", "1", 5, 0}};
    return Enumerator(sc, [](const auto& eng, std::vector<std::string>& out) {
               for (const auto& row : eng)
                   for (const auto& e : row) {
                       const AccountState* a = e.find(*Uid::parse("1"));
                       const AccountState* b = e.find(*Uid::parse("2"));
                       if (!a || !a->active() || a->balance != 95)
                           out.push_back("account 1 wrong at " + e.authority());
                       if (!b || !b->active() || b->balance != 105)
                           out.push_back("account 2 wrong at " + e.authority());
                   }
           }).run();
}

// Opening a child while a payment races toward it: the child ends active
// with the credited balance whichever delivery wins.
inline EnumVerdict enum_open_racing_credit(uint32_t authorities = 3) {
    Scenario sc = enum_base(authorities);
    sc.genesis = {{"1", 100}, {"2", 100}};
    sc.script = {{"open", "1", "", 0, 0}, {"transfer", "2", "1/0", 7, 0}};
    return Enumerator(sc, [](const auto& eng, std::vector<std::string>& out) {
               for (const auto& row : eng)
                   for (const auto& e : row) {
                       const AccountState* c = e.find(*Uid::parse("1/0"));
                       if (!c || !c->active() || c->balance != 7)
                           out.push_back("child not active with 7 at " + e.authority());
                   }
           }).run();
}

// Closing an account while a credit races toward it: the account may survive
// as an ownerless record or disappear, but it is never active again.
inline EnumVerdict enum_close_racing_credit(uint32_t authorities = 3) {
    Scenario sc = enum_base(authorities);
    sc.genesis = {{"1", 100}, {"2", 100}};
    sc.script = {{"transfer", "2", "1", 7, 0}, {"close", "1", "", 0, 0}};
    return Enumerator(sc, [](const auto& eng, std::vector<std::string>& out) {
               for (const auto& row : eng)
                   for (const auto& e : row) {
                       const AccountState* a = e.find(*Uid::parse("1"));
                       if (a && a->active())
                           out.push_back("closed account active at " + e.authority());
                   }
           }).run();
}

// A fuller mix: a child opening, credits racing to it, and a close.
inline EnumVerdict enum_mixed_schedule(uint32_t authorities = 3) {
    Scenario sc = enum_base(authorities);
    sc.genesis = {{"1", 100}, {"2", 100}, {"3", 100}};
    sc.script = {{"transfer", "3", "1", 5, 0},
                 {"open", "1", "", 0, 0},
                 {"transfer", "2", "1/0", 7, 0},
                 {"close", "3", "", 0, 0}};
    return Enumerator(sc).run();
}

}  // namespace zef::sim
