#pragma once

// The replicated account state machine run by each authority shard: request
// validation and locking, confirmation execution, cross-shard effects, safe
// deactivation and deletion. All mutations of one engine are expected to be
// serialized by the caller; engines for different shards share nothing.

#include <functional>
#include <map>
#include <set>

#include "certificate.hpp"
#include "coins.hpp"

namespace zef {

struct AccountState {
    std::optional<PublicKey> owner;
    uint64_t balance = 0;
    uint64_t next_sequence = 0;
    std::optional<Request> pending;
    std::vector<Certificate> confirmed;  // one per executed sequence number
    std::vector<Certificate> received;   // credits and activation, arrival order
    std::set<Bytes> spent;               // canonical marker keys

    bool active() const { return owner.has_value(); }

    // The agreement view: what replicas must converge on for active accounts.
    // Log contents are excluded because cross-shard arrival order may differ.
    Digest fingerprint(const Uid& id) const {
        Writer w;
        id.encode(w);
        w.u8(owner ? 1 : 0);
        if (owner) owner->encode(w);
        w.u64(balance);
        w.u64(next_sequence);
        w.u32(uint32_t(spent.size()));
        for (const auto& m : spent) w.lp(m);
        return hash_bytes(domain::state, w.out);
    }

    void encode(Writer& w) const {
        w.u8(owner ? 1 : 0);
        if (owner) owner->encode(w);
        w.u64(balance);
        w.u64(next_sequence);
        w.u8(pending ? 1 : 0);
        if (pending) pending->encode(w);
        w.u32(uint32_t(confirmed.size()));
        for (const auto& c : confirmed) c.encode(w);
        w.u32(uint32_t(received.size()));
        for (const auto& c : received) c.encode(w);
        w.u32(uint32_t(spent.size()));
        for (const auto& m : spent) w.lp(m);
    }
    static AccountState decode(Reader& r, size_t max_uid_len = kDefaultMaxUidLength) {
        AccountState s;
        if (r.u8()) s.owner = PublicKey::decode(r);
        s.balance = r.u64();
        s.next_sequence = r.u64();
        if (r.u8()) s.pending = Request::decode(r, max_uid_len);
        uint32_t n = r.u32();
        if (n > (1u << 22)) throw ParseError("confirmed log too long");
        for (uint32_t i = 0; i < n; i++) s.confirmed.push_back(Certificate::decode(r, max_uid_len));
        n = r.u32();
        if (n > (1u << 22)) throw ParseError("received log too long");
        for (uint32_t i = 0; i < n; i++) s.received.push_back(Certificate::decode(r, max_uid_len));
        n = r.u32();
        if (n > (1u << 22)) throw ParseError("spent set too large");
        for (uint32_t i = 0; i < n; i++) s.spent.insert(r.lp());
        return s;
    }
};

struct CrossShardMessage {
    enum Kind : uint8_t { Activate = 1, Credit = 2 };
    Uid target;
    Kind kind = Credit;
    PublicKey new_owner;  // Activate
    uint64_t amount = 0;  // Credit
    Certificate origin;
    Digest origin_digest;

    void encode(Writer& w) const { origin.encode(w); }
};

// Cross-shard effects are derived from the certificate itself, never trusted
// from the sender, so a relayed message cannot smuggle a different effect.
inline std::vector<CrossShardMessage> derive_cross_shard(const Certificate& cert) {
    const auto* req = std::get_if<Request>(&cert.value);
    if (!req) return {};
    CrossShardMessage m;
    m.origin = cert;
    m.origin_digest = cert.value_digest();
    if (const auto* o = std::get_if<OpOpenAccount>(&req->op)) {
        m.target = o->child;
        m.kind = CrossShardMessage::Activate;
        m.new_owner = o->owner;
    } else if (const auto* t = std::get_if<OpTransfer>(&req->op)) {
        m.target = t->recipient;
        m.kind = CrossShardMessage::Credit;
        m.amount = t->amount;
    } else if (const auto* st = std::get_if<OpSpendAndTransfer>(&req->op)) {
        m.target = st->recipient;
        m.kind = CrossShardMessage::Credit;
        if (const auto* q = std::get_if<OpaqueRedeem>(&st->proof)) {
            m.amount = q->value;
        } else {
            Bytes b = std::get<TransparentRedeem>(st->proof).certificate;
            Reader r(b);
            Certificate coin = Certificate::decode(r);
            m.amount = std::get<TransparentCoinBody>(coin.value).value;
        }
    } else {
        return {};
    }
    return {std::move(m)};
}

inline SpentMarker redeem_marker(const OpSpendAndTransfer& o) {
    if (const auto* q = std::get_if<OpaqueRedeem>(&o.proof)) return SpentMarker::opaque(q->index);
    Bytes b = std::get<TransparentRedeem>(o.proof).certificate;
    Reader r(b);
    Certificate cert = Certificate::decode(r);
    return std::get<TransparentCoinBody>(cert.value).marker();
}

inline CrossShardMessage decode_cross_shard(Reader& r, size_t max_uid_len = kDefaultMaxUidLength) {
    Certificate cert = Certificate::decode(r, max_uid_len);
    auto msgs = derive_cross_shard(cert);
    if (msgs.empty()) throw ParseError("certificate has no cross-shard effect");
    return std::move(msgs[0]);
}

// How an account (possibly on another shard) looks to the deletion check.
struct ParentView {
    bool active = false;
    uint64_t next_sequence = 0;
};
using ParentLookup = std::function<std::optional<ParentView>(const Uid&)>;

struct AccountInfoResponse {
    Uid id;
    bool exists = false;
    std::optional<PublicKey> owner;
    uint64_t balance = 0;
    uint64_t next_sequence = 0;
    std::vector<Certificate> certificates;  // confirmed log from the requested index

    void encode(Writer& w) const {
        id.encode(w);
        w.u8(exists ? 1 : 0);
        w.u8(owner ? 1 : 0);
        if (owner) owner->encode(w);
        w.u64(balance);
        w.u64(next_sequence);
        w.u32(uint32_t(certificates.size()));
        for (const auto& c : certificates) c.encode(w);
    }
    static AccountInfoResponse decode(Reader& r, size_t max_uid_len = kDefaultMaxUidLength) {
        AccountInfoResponse a;
        a.id = Uid::decode(r, max_uid_len);
        a.exists = r.u8() != 0;
        if (r.u8()) a.owner = PublicKey::decode(r);
        a.balance = r.u64();
        a.next_sequence = r.u64();
        uint32_t n = r.u32();
        if (n > (1u << 22)) throw ParseError("certificate list too long");
        for (uint32_t i = 0; i < n; i++)
            a.certificates.push_back(Certificate::decode(r, max_uid_len));
        return a;
    }
};

class AccountEngine {
  public:
    AccountEngine(const Committee& committee, std::string authority, KeyPair vote_key,
                  std::optional<uint32_t> shard = std::nullopt)
        : committee_(&committee),
          authority_(std::move(authority)),
          vote_key_(std::move(vote_key)),
          shard_(shard) {
        for (const auto& g : committee.accounts) {
            if (!hosts(g.id)) continue;
            init_account(g.id, g.balance);
            if (g.owner) accounts_[g.id].owner = g.owner;
        }
    }

    bool hosts(const Uid& id) const { return !shard_ || committee_->shard_of(id) == *shard_; }

    void init_account(const Uid& id, uint64_t initial_balance) {
        if (accounts_.count(id)) return;
        AccountState s;
        s.balance = initial_balance;
        accounts_.emplace(id, std::move(s));
    }

    Status validate_operation(const AccountState& state, const Uid& id, const Operation& op) const {
        size_t limit = committee_->uid_length_limit;
        if (const auto* o = std::get_if<OpOpenAccount>(&op)) {
            if (!(o->child == id.child(state.next_sequence))) return Err::WrongChildId;
            if (!o->child.valid(limit)) return Err::UidTooLong;
            return ok_status();
        }
        if (const auto* o = std::get_if<OpTransfer>(&op)) {
            if (!o->recipient.valid(limit)) return Err::UidTooLong;
            if (o->amount == 0 || o->amount > state.balance) return Err::InsufficientFunds;
            return ok_status();
        }
        if (std::holds_alternative<OpChangeKey>(op) || std::holds_alternative<OpCloseAccount>(op))
            return ok_status();
        if (const auto* o = std::get_if<OpSpend>(&op)) {
            if (o->withdrawal > state.balance) return Err::InsufficientFunds;
            switch (o->marker.kind) {
                case SpentMarker::None:
                    if (!o->credential.empty()) return Err::BadCoinSignature;
                    return ok_status();
                case SpentMarker::Opaque: {
                    if (state.spent.count(o->marker.key())) return Err::AlreadySpent;
                    try {
                        Reader r(o->credential);
                        auto p = coins::InputPresentation::decode(r);
                        r.expect_done();
                        bls::Fr k = coins::coin_key(id, o->marker.index);
                        if (!coins::verify_presentation(committee_->credential_vk, p, k))
                            return Err::BadCoinSignature;
                    } catch (const ParseError&) {
                        return Err::BadCoinSignature;
                    }
                    return ok_status();
                }
                case SpentMarker::Transparent: {
                    if (state.spent.count(o->marker.key())) return Err::AlreadySpent;
                    auto coin = check_transparent_coin(o->credential, id);
                    if (!coin.ok()) return coin.error();
                    if (!(coin.value().seed == o->marker.seed)) return Err::BadCoinSignature;
                    return ok_status();
                }
            }
            return Err::BadCoinSignature;
        }
        if (const auto* o = std::get_if<OpSpendAndTransfer>(&op)) {
            if (!o->recipient.valid(limit)) return Err::UidTooLong;
            if (const auto* q = std::get_if<OpaqueRedeem>(&o->proof)) {
                if (state.spent.count(SpentMarker::opaque(q->index).key())) return Err::AlreadySpent;
                std::vector<bls::Fr> attrs{coins::coin_key(id, q->index), q->seed,
                                           bls::Fr::from_int(q->value)};
                if (!coconut::plain_verify(committee_->credential_params, committee_->credential_vk,
                                           q->sigma, attrs))
                    return Err::BadCoinSignature;
            } else {
                auto coin =
                    check_transparent_coin(std::get<TransparentRedeem>(o->proof).certificate, id);
                if (!coin.ok()) return coin.error();
                if (state.spent.count(coin.value().marker().key())) return Err::AlreadySpent;
            }
            return ok_status();
        }
        return Err::MalformedMessage;
    }

    // Vote on a request: lock the account on it, or repeat the earlier vote.
    Result<Vote> handle_request(const SignedRequest& sr) {
        const Request& q = sr.request;
        auto it = accounts_.find(q.account);
        if (it == accounts_.end() || !it->second.active()) return Err::InactiveAccount;
        AccountState& st = it->second;
        if (!sr.verify(*st.owner)) return Err::BadOwnerSignature;
        // The lock binds one sequence slot. A request for a different sequence
        // gets the sequence error so the sender knows to push certificates;
        // executing the missing certificate clears the lock.
        if (st.pending && st.pending->sequence == q.sequence) {
            if (!(st.pending->digest() == q.digest())) return Err::AccountLocked;
            return Vote::make(authority_, q.digest(), vote_key_);
        }
        if (q.sequence != st.next_sequence) return Error(Err::WrongSequence, st.next_sequence);
        Status v = validate_operation(st, q.account, q.op);
        if (!v.ok()) return v.error();
        st.pending = q;
        return Vote::make(authority_, q.digest(), vote_key_);
    }

    // Apply a certified request. Idempotent for already-executed sequence
    // numbers; reports the expected sequence number when the gap is ahead.
    Result<std::vector<CrossShardMessage>> handle_confirmation(const Certificate& cert) {
        Status cs = verify_certificate(*committee_, cert);
        if (!cs.ok()) return Error(Err::InvalidCertificate, 0, err_name(cs.error().code));
        const auto* req = std::get_if<Request>(&cert.value);
        if (!req) return Error(Err::InvalidCertificate, 0, "not a request certificate");
        auto it = accounts_.find(req->account);
        if (it == accounts_.end()) return Err::InactiveAccount;
        AccountState& st = it->second;
        if (req->sequence < st.next_sequence) return std::vector<CrossShardMessage>{};
        if (req->sequence > st.next_sequence)
            return Error(Err::MissingEarlierCertificates, st.next_sequence);
        if (!st.active()) return Err::InactiveAccount;

        std::vector<CrossShardMessage> out = derive_cross_shard(cert);
        // Balance uses wrapping arithmetic deliberately: a replica that missed
        // a credit still converges once the credit arrives, in any order.
        if (const auto* t = std::get_if<OpTransfer>(&req->op)) {
            st.balance -= t->amount;
        } else if (const auto* c = std::get_if<OpChangeKey>(&req->op)) {
            st.owner = c->new_owner;
        } else if (std::holds_alternative<OpCloseAccount>(req->op)) {
            st.owner.reset();
        } else if (const auto* s = std::get_if<OpSpend>(&req->op)) {
            st.balance -= s->withdrawal;
            if (s->marker.kind != SpentMarker::None) st.spent.insert(s->marker.key());
        } else if (const auto* x = std::get_if<OpSpendAndTransfer>(&req->op)) {
            st.spent.insert(redeem_marker(*x).key());
        }
        st.next_sequence++;
        st.pending.reset();
        st.confirmed.push_back(cert);
        if (std::holds_alternative<OpCloseAccount>(req->op)) accounts_.erase(it);
        return out;
    }

    // Absorb a (possibly duplicated) cross-shard effect. The dedup set is
    // keyed by origin certificate digest and outlives account deletion, so a
    // replayed activation can never resurrect a closed account.
    void handle_cross_shard(const CrossShardMessage& m) {
        if (!hosts(m.target)) return;
        Bytes key(m.origin_digest.v.begin(), m.origin_digest.v.end());
        if (!cross_seen_.insert(key).second) return;
        init_account(m.target, 0);
        AccountState& st = accounts_[m.target];
        if (m.kind == CrossShardMessage::Activate) {
            st.owner = m.new_owner;
        } else {
            st.balance += m.amount;
        }
        st.received.push_back(m.origin);
    }

    bool can_become_active(const Uid& id) const {
        return can_become_active(id, [this](const Uid& p) -> std::optional<ParentView> {
            auto it = accounts_.find(p);
            if (it == accounts_.end()) return std::nullopt;
            return ParentView{it->second.active(), it->second.next_sequence};
        });
    }
    static bool can_become_active(const Uid& id, const ParentLookup& lookup) {
        auto st = lookup(id);
        if (st && st->active) return true;
        if (id.is_root()) return false;
        Uid parent = *id.parent();
        uint64_t n = id.path.back();
        auto pst = lookup(parent);
        uint64_t pseq = pst ? pst->next_sequence : 0;
        return pseq <= n && can_become_active(parent, lookup);
    }

    // Drop ownerless records that can never be activated again.
    size_t sweep() {
        size_t dropped = 0;
        for (auto it = accounts_.begin(); it != accounts_.end();) {
            if (!it->second.active() && !can_become_active(it->first)) {
                it = accounts_.erase(it);
                dropped++;
            } else {
                ++it;
            }
        }
        return dropped;
    }

    const AccountState* find(const Uid& id) const {
        auto it = accounts_.find(id);
        return it == accounts_.end() ? nullptr : &it->second;
    }
    size_t account_count() const { return accounts_.size(); }
    const std::map<Uid, AccountState>& accounts() const { return accounts_; }
    const std::string& authority() const { return authority_; }
    const Committee& committee() const { return *committee_; }
    const std::optional<uint32_t>& shard() const { return shard_; }

    AccountInfoResponse account_info(const Uid& id, uint64_t from_index) const {
        AccountInfoResponse a;
        a.id = id;
        const AccountState* st = find(id);
        if (!st) return a;
        a.exists = true;
        a.owner = st->owner;
        a.balance = st->balance;
        a.next_sequence = st->next_sequence;
        for (size_t i = from_index; i < st->confirmed.size(); i++)
            a.certificates.push_back(st->confirmed[i]);
        return a;
    }

    // Convergence view over active accounts only.
    Digest active_fingerprint() const {
        Hasher h(domain::state);
        for (const auto& [id, st] : accounts_) {
            if (!st.active()) continue;
            h.update(st.fingerprint(id));
        }
        return h.digest();
    }

    // Transition-relevant state only: account fingerprints plus the effect
    // dedup set. Two engines with equal digests react identically to any
    // future delivery, so this is a sound memoization key.
    Digest state_digest() const {
        Writer w;
        w.u32(uint32_t(accounts_.size()));
        for (const auto& [id, st] : accounts_) {
            id.encode(w);
            st.fingerprint(id).encode(w);
        }
        w.u32(uint32_t(cross_seen_.size()));
        for (const auto& k : cross_seen_) w.lp(k);
        return hash_bytes(domain::state, w.out);
    }

    // Everything, including logs; replaying one schedule must reproduce it.
    Digest full_digest() const {
        Writer w;
        w.u32(uint32_t(accounts_.size()));
        for (const auto& [id, st] : accounts_) {
            id.encode(w);
            st.encode(w);
        }
        w.u32(uint32_t(cross_seen_.size()));
        for (const auto& k : cross_seen_) w.lp(k);
        return hash_bytes(domain::state, w.out);
    }

    void encode_snapshot(Writer& w) const {
        w.lp_str(domain::snapshot);
        committee_->digest().encode(w);
        w.u32(uint32_t(accounts_.size()));
        for (const auto& [id, st] : accounts_) {
            id.encode(w);
            st.encode(w);
        }
        w.u32(uint32_t(cross_seen_.size()));
        for (const auto& k : cross_seen_) w.lp(k);
    }
    Status load_snapshot(Reader& r) {
        if (r.lp_str() != domain::snapshot) return Error(Err::MalformedMessage, 0, "bad snapshot");
        Digest d = Digest::decode(r);
        if (!(d == committee_->digest()))
            return Error(Err::MalformedMessage, 0, "snapshot is for a different committee");
        size_t limit = committee_->uid_length_limit;
        std::map<Uid, AccountState> fresh;
        std::set<Bytes> seen;
        uint32_t n = r.u32();
        if (n > (1u << 24)) return Error(Err::MalformedMessage, 0, "snapshot too large");
        for (uint32_t i = 0; i < n; i++) {
            Uid id = Uid::decode(r, limit);
            fresh.emplace(id, AccountState::decode(r, limit));
        }
        n = r.u32();
        if (n > (1u << 24)) return Error(Err::MalformedMessage, 0, "snapshot too large");
        for (uint32_t i = 0; i < n; i++) seen.insert(r.lp());
        accounts_ = std::move(fresh);
        cross_seen_ = std::move(seen);
        return ok_status();
    }

  private:
    Result<TransparentCoinBody> check_transparent_coin(const Bytes& encoded, const Uid& id) const {
        try {
            Reader r(encoded);
            Certificate cert = Certificate::decode(r, committee_->uid_length_limit);
            r.expect_done();
            const auto* body = std::get_if<TransparentCoinBody>(&cert.value);
            if (!body) return Err::BadCoinSignature;
            Status cs = verify_certificate(*committee_, cert);
            if (!cs.ok()) return Err::BadCoinSignature;
            if (!(body->account == id)) return Err::BadCoinSignature;
            return *body;
        } catch (const ParseError&) {
            return Err::BadCoinSignature;
        }
    }

    const Committee* committee_;
    std::string authority_;
    KeyPair vote_key_;
    std::optional<uint32_t> shard_;
    std::map<Uid, AccountState> accounts_;
    std::set<Bytes> cross_seen_;
};

// Test oracle for conservation: the spendable value of an account evaluated
// purely from certificates, coin plaintexts, and the genesis balance. Engine
// state never feeds this sum, so engine bugs cannot hide in it.
struct KnownCoin {
    Uid account;
    SpentMarker marker;
    uint64_t value = 0;
};

inline __int128 compute_spendable(const Committee& committee,
                                  const std::vector<Certificate>& certs,
                                  const std::vector<KnownCoin>& coins, const Uid& id) {
    __int128 total = 0;
    for (const auto& g : committee.accounts) {
        if (g.id == id) total += g.balance;
    }
    std::set<Bytes> spent;
    for (const auto& cert : certs) {
        const auto* req = std::get_if<Request>(&cert.value);
        if (!req) continue;
        if (req->account == id) {
            if (const auto* t = std::get_if<OpTransfer>(&req->op)) total -= t->amount;
            if (const auto* s = std::get_if<OpSpend>(&req->op)) {
                total -= s->withdrawal;
                if (s->marker.kind != SpentMarker::None) spent.insert(s->marker.key());
            }
            if (const auto* x = std::get_if<OpSpendAndTransfer>(&req->op))
                spent.insert(redeem_marker(*x).key());
        }
        for (const auto& m : derive_cross_shard(cert)) {
            if (m.kind == CrossShardMessage::Credit && m.target == id) total += m.amount;
        }
    }
    for (const auto& c : coins) {
        if (c.account == id && !spent.count(c.marker.key())) total += c.value;
    }
    return total;
}

}  // namespace zef
