#pragma once

// One authority shard behind a frame interface: parse, dispatch to the
// account engine or a coin handler, answer with exactly one frame. All
// mutation goes through handle(), so a caller that serializes calls gets the
// single-writer model for free; cross-shard effects come back in an outbox
// for the node layer to route.

#include <fstream>

#include "json.hpp"
#include "wire.hpp"

namespace zef {

// Secret material for one authority, stored next to (not inside) the public
// committee description.
struct AuthorityKeys {
    std::string name;
    KeyPair vote_key;
    std::optional<coconut::SecretShare> issuance;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["name"] = name;
        j["vote_seed"] = to_hex(vote_key.seed().data(), vote_key.seed().size());
        if (issuance) {
            Writer w;
            issuance->encode(w);
            j["issuance"] = to_hex(w.out.data(), w.out.size());
        }
        return j;
    }
    static AuthorityKeys from_json(const nlohmann::json& j) {
        AuthorityKeys k;
        k.name = j.at("name").get<std::string>();
        Bytes seed = from_hex(j.at("vote_seed").get<std::string>());
        if (seed.size() != 32) throw ParseError("bad vote seed length");
        std::array<uint8_t, 32> s;
        std::memcpy(s.data(), seed.data(), 32);
        k.vote_key = KeyPair::from_seed(s);
        if (j.contains("issuance")) {
            Bytes b = from_hex(j.at("issuance").get<std::string>());
            Reader r(b);
            k.issuance = coconut::SecretShare::decode(r);
        }
        return k;
    }

    void save(const std::string& path) const {
        std::ofstream f(path);
        if (!f) throw std::runtime_error("cannot write " + path);
        f << to_json().dump(2) << "\n";
    }
    static AuthorityKeys load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw std::runtime_error("cannot read " + path);
        nlohmann::json j;
        f >> j;
        return from_json(j);
    }
};

// Mint blinded coins for a verified creation bundle. Stateless: everything
// is re-checked from the embedded certificates, so any shard of any issuing
// authority can serve it and replays return byte-identical shares.
inline Result<std::vector<coconut::BlindedShare>> handle_anonymous_coin_creation(
    const Committee& committee, const coconut::SecretShare& share,
    const wire::CreateAnonymousCoins& msg) {
    if (msg.spends.empty()) return Err::MalformedMessage;
    Digest expect = msg.request.outputs_hash();

    std::vector<coins::InputFact> facts;
    std::set<Bytes> markers;
    std::set<Bytes> cert_digests;
    for (const auto& cert : msg.spends) {
        Status cs = verify_certificate(committee, cert);
        if (!cs.ok()) return Error(Err::InvalidCertificate, 0, err_name(cs.error().code));
        const auto* req = std::get_if<Request>(&cert.value);
        if (!req) return Error(Err::InvalidCertificate, 0, "not a request certificate");
        const auto* sp = std::get_if<OpSpend>(&req->op);
        if (!sp) return Error(Err::InvalidCertificate, 0, "not a spend");
        if (!(sp->outputs_hash == expect)) return Err::HashMismatch;
        Digest d = cert.value_digest();
        if (!cert_digests.insert(Bytes(d.v.begin(), d.v.end())).second)
            return Error(Err::DuplicateSpentMarker, 0, "spend certificate used twice");

        coins::InputFact f;
        f.withdrawal = sp->withdrawal;
        switch (sp->marker.kind) {
            case SpentMarker::None:
                break;
            case SpentMarker::Opaque:
                if (!markers.insert(sp->marker.key()).second) return Err::DuplicateSpentMarker;
                f.key = coins::coin_key(req->account, sp->marker.index);
                break;
            case SpentMarker::Transparent:
                // plaintext coins convert by redeeming into an account first
                return Error(Err::InvalidCertificate, 0, "transparent coin in blinded creation");
        }
        facts.push_back(f);
    }

    Status v = coins::verify_coin_request(committee.credential_params, committee.credential_vk,
                                          msg.request, facts);
    if (!v.ok()) return v.error();
    return coins::issue_blind_coins(share, msg.request);
}

struct ShardCounters {
    uint64_t frames = 0;
    uint64_t errors = 0;
    uint64_t cross_shard_out = 0;
    std::map<std::string, uint64_t> by_tag;
};

class AuthorityShard {
  public:
    AuthorityShard(const Committee& committee, const AuthorityKeys& keys,
                   std::optional<uint32_t> shard = std::nullopt)
        : engine_(committee, keys.name, keys.vote_key, shard),
          vote_key_(keys.vote_key),
          issuance_(keys.issuance) {}

    AccountEngine& engine() { return engine_; }
    const AccountEngine& engine() const { return engine_; }
    const ShardCounters& counters() const { return counters_; }

    wire::Frame handle(const wire::Frame& f, std::vector<CrossShardMessage>& outbox) {
        counters_.frames++;
        counters_.by_tag[wire::tag_name(f.tag)]++;
        wire::Frame out = dispatch(f, outbox);
        if (out.tag == wire::Tag::Error) {
            // an ack is an Error frame with code None; don't count those
            try {
                Reader r(out.payload);
                if (Error::decode(r).code != Err::None) counters_.errors++;
            } catch (const ParseError&) {
                counters_.errors++;
            }
        }
        return out;
    }

  private:
    wire::Frame dispatch(const wire::Frame& f, std::vector<CrossShardMessage>& outbox) {
        size_t maxu = engine_.committee().uid_length_limit;
        switch (f.tag) {
            case wire::Tag::Request: {
                auto sr = wire::parse_payload<SignedRequest>(f.payload, maxu);
                if (!sr.ok()) return wire::error_frame(sr.error());
                if (!engine_.hosts(sr.value().request.account))
                    return wire::error_frame(Err::WrongShard);
                auto v = engine_.handle_request(sr.value());
                if (!v.ok()) return wire::error_frame(v.error());
                return wire::make_frame(wire::Tag::Vote, v.value());
            }
            case wire::Tag::Confirm: {
                auto cert = wire::parse_payload<Certificate>(f.payload, maxu);
                if (!cert.ok()) return wire::error_frame(cert.error());
                const auto* req = std::get_if<Request>(&cert.value().value);
                if (!req)
                    return wire::error_frame(
                        Error(Err::InvalidCertificate, 0, "not a request certificate"));
                if (!engine_.hosts(req->account)) return wire::error_frame(Err::WrongShard);
                auto msgs = engine_.handle_confirmation(cert.value());
                if (!msgs.ok()) return wire::error_frame(msgs.error());
                for (auto& m : msgs.value()) {
                    counters_.cross_shard_out++;
                    outbox.push_back(std::move(m));
                }
                return wire::ack_frame();
            }
            case wire::Tag::CreateAnonymousCoins: {
                if (!issuance_)
                    return wire::error_frame(
                        Error(Err::MalformedMessage, 0, "authority holds no issuing key"));
                auto msg = wire::parse_payload<wire::CreateAnonymousCoins>(f.payload);
                if (!msg.ok()) return wire::error_frame(msg.error());
                auto shares =
                    handle_anonymous_coin_creation(engine_.committee(), *issuance_, msg.value());
                if (!shares.ok()) return wire::error_frame(shares.error());
                wire::CoinShares cs;
                cs.kind = wire::CoinShares::kBlinded;
                cs.shares = std::move(shares.value());
                return wire::make_frame(wire::Tag::CoinShares, cs);
            }
            case wire::Tag::CreateTransparentCoins: {
                auto msg = wire::parse_payload<CreateTransparentCoins>(f.payload, maxu);
                if (!msg.ok()) return wire::error_frame(msg.error());
                auto votes = handle_transparent_coin_creation(
                    engine_.committee(), engine_.authority(), vote_key_, msg.value());
                if (!votes.ok()) return wire::error_frame(votes.error());
                wire::CoinShares cs;
                cs.kind = wire::CoinShares::kTransparent;
                cs.votes = std::move(votes.value());
                return wire::make_frame(wire::Tag::CoinShares, cs);
            }
            case wire::Tag::AccountInfoQuery: {
                auto q = wire::parse_payload<wire::AccountInfoQuery>(f.payload, maxu);
                if (!q.ok()) return wire::error_frame(q.error());
                if (!engine_.hosts(q.value().id)) return wire::error_frame(Err::WrongShard);
                return wire::make_frame(wire::Tag::AccountInfoResponse,
                                        engine_.account_info(q.value().id, q.value().from_index));
            }
            case wire::Tag::CrossShard: {
                Result<CrossShardMessage> m = [&]() -> Result<CrossShardMessage> {
                    try {
                        Reader r(f.payload);
                        CrossShardMessage m = decode_cross_shard(r, maxu);
                        if (!r.done()) return Error{Err::MalformedMessage, 0, "trailing bytes"};
                        return m;
                    } catch (const ParseError& e) {
                        return Error{Err::MalformedMessage, 0, e.what()};
                    }
                }();
                if (!m.ok()) return wire::error_frame(m.error());
                // remote relays are untrusted: check the origin certificate
                Status cs = verify_certificate(engine_.committee(), m.value().origin);
                if (!cs.ok())
                    return wire::error_frame(
                        Error(Err::InvalidCertificate, 0, err_name(cs.error().code)));
                if (!engine_.hosts(m.value().target)) return wire::error_frame(Err::WrongShard);
                engine_.handle_cross_shard(m.value());
                return wire::ack_frame();
            }
            default:
                return wire::error_frame(
                    Error(Err::MalformedMessage, 0,
                          std::string("unexpected ") + wire::tag_name(f.tag)));
        }
    }

    AccountEngine engine_;
    KeyPair vote_key_;
    std::optional<coconut::SecretShare> issuance_;
    ShardCounters counters_;
};

}  // namespace zef
