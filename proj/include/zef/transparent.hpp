#pragma once

// Plaintext coins: quorum certificates over (account, value, seed) triplets.
// Same Spend machinery and spent set as blinded coins, but values are public
// and conservation is a plain sum instead of a proof.

#include "account.hpp"

namespace zef {

struct TransparentCoin {
    Certificate certificate;  // over a TransparentCoinBody

    const TransparentCoinBody& body() const {
        return std::get<TransparentCoinBody>(certificate.value);
    }
    Status verify(const Committee& committee) const {
        if (!std::holds_alternative<TransparentCoinBody>(certificate.value))
            return Err::InvalidCertificate;
        return verify_certificate(committee, certificate);
    }
    Bytes encoded() const { return certificate.encoded(); }
};

// Creation request: spend certificates plus the plaintext outputs they
// committed to. Not bound to any account; anyone may relay it.
struct CreateTransparentCoins {
    std::vector<Certificate> spends;
    std::vector<TransparentCoinBody> outputs;

    Digest outputs_hash() const { return transparent_outputs_hash(outputs); }

    static Digest transparent_outputs_hash(const std::vector<TransparentCoinBody>& outs) {
        Hasher h(domain::outputs);
        h.update_u64(2);  // output family: plaintext
        h.update_u64(outs.size());
        for (const auto& o : outs) {
            Writer w;
            o.encode(w);
            h.update(w.out);
        }
        return h.digest();
    }

    void encode(Writer& w) const {
        w.u32(uint32_t(spends.size()));
        for (const auto& c : spends) c.encode(w);
        w.u32(uint32_t(outputs.size()));
        for (const auto& o : outputs) o.encode(w);
    }
    static CreateTransparentCoins decode(Reader& r, size_t max_uid_len = kDefaultMaxUidLength) {
        CreateTransparentCoins m;
        uint32_t n = r.u32();
        if (n > 1024) throw ParseError("too many spend certificates");
        for (uint32_t i = 0; i < n; i++) m.spends.push_back(Certificate::decode(r, max_uid_len));
        n = r.u32();
        if (n > 1024) throw ParseError("too many outputs");
        for (uint32_t i = 0; i < n; i++)
            m.outputs.push_back(TransparentCoinBody::decode(r, max_uid_len));
        return m;
    }
};

struct TransparentInput {
    Uid account;
    std::optional<TransparentCoin> coin;  // burned coin, must belong to `account`
    uint64_t withdrawal = 0;
};

struct TransparentSpendPlan {
    std::vector<std::pair<Uid, OpSpend>> ops;  // one Spend per input account
    CreateTransparentCoins creation;           // to send once the ops certify
};

// Wallet side: turn inputs and plaintext outputs into Spend operations that
// all commit to the same outputs hash. Conservation is checked up front.
inline Result<TransparentSpendPlan> build_transparent_spends(
    const Committee& committee, const std::vector<TransparentInput>& inputs,
    const std::vector<TransparentCoinBody>& outputs) {
    __int128 in_sum = 0, out_sum = 0;
    std::set<Bytes> markers;
    TransparentSpendPlan plan;
    plan.creation.outputs = outputs;
    Digest h = plan.creation.outputs_hash();
    for (const auto& in : inputs) {
        OpSpend op;
        op.withdrawal = in.withdrawal;
        op.outputs_hash = h;
        in_sum += in.withdrawal;
        if (in.coin) {
            Status v = in.coin->verify(committee);
            if (!v.ok()) return v.error();
            const auto& body = in.coin->body();
            if (!(body.account == in.account))
                return Error(Err::InvalidCertificate, 0, "coin belongs to another account");
            op.marker = body.marker();
            op.credential = in.coin->encoded();
            if (!markers.insert(op.marker.key()).second) return Err::DuplicateSpentMarker;
            in_sum += body.value;
        }
        plan.ops.emplace_back(in.account, std::move(op));
    }
    for (const auto& o : outputs) out_sum += o.value;
    if (in_sum != out_sum) return Err::ConservationViolated;
    return plan;
}

// Authority side: validate a creation request and vote on every output
// triplet. Stateless; the spend certificates carry everything needed.
inline Result<std::vector<Vote>> handle_transparent_coin_creation(
    const Committee& committee, const std::string& authority, const KeyPair& vote_key,
    const CreateTransparentCoins& req) {
    if (req.spends.empty() || req.outputs.empty()) return Err::MalformedMessage;
    Digest h = req.outputs_hash();
    __int128 in_sum = 0, out_sum = 0;
    std::set<Bytes> markers;
    std::set<Bytes> cert_digests;
    for (const auto& cert : req.spends) {
        Status cs = verify_certificate(committee, cert);
        if (!cs.ok()) return Err::InvalidCertificate;
        const auto* r = std::get_if<Request>(&cert.value);
        if (!r) return Err::InvalidCertificate;
        const auto* spend = std::get_if<OpSpend>(&r->op);
        if (!spend) return Err::InvalidCertificate;
        if (!(spend->outputs_hash == h)) return Err::HashMismatch;
        // each certificate funds the pot once; listing it twice would
        // double-count its withdrawal
        Digest cd = cert.value_digest();
        if (!cert_digests.insert(Bytes(cd.v.begin(), cd.v.end())).second)
            return Err::DuplicateSpentMarker;
        in_sum += spend->withdrawal;
        switch (spend->marker.kind) {
            case SpentMarker::None: break;
            case SpentMarker::Transparent: {
                // Re-check the burned coin; this handler keeps no state.
                try {
                    Reader rd(spend->credential);
                    TransparentCoin coin{Certificate::decode(rd, committee.uid_length_limit)};
                    rd.expect_done();
                    Status v = coin.verify(committee);
                    if (!v.ok()) return Err::InvalidCertificate;
                    if (!(coin.body().account == r->account) ||
                        !(coin.body().marker() == spend->marker))
                        return Err::InvalidCertificate;
                    if (!markers.insert(spend->marker.key()).second)
                        return Err::DuplicateSpentMarker;
                    in_sum += coin.body().value;
                } catch (const ParseError&) {
                    return Err::InvalidCertificate;
                }
                break;
            }
            case SpentMarker::Opaque:
                // blinded inputs cannot feed a plaintext conservation check
                return Err::InvalidCertificate;
        }
    }
    for (const auto& o : req.outputs) out_sum += o.value;
    if (in_sum != out_sum) return Err::ConservationViolated;
    std::vector<Vote> votes;
    votes.reserve(req.outputs.size());
    for (const auto& o : req.outputs) votes.push_back(Vote::make(authority, o.digest(), vote_key));
    return votes;
}

// Recipient side: one certificate per output from the collected votes.
inline Result<std::vector<TransparentCoin>> aggregate_transparent_coins(
    const Committee& committee, const std::vector<TransparentCoinBody>& outputs,
    const std::vector<std::vector<Vote>>& votes_per_output) {
    if (votes_per_output.size() != outputs.size()) return Err::MalformedMessage;
    std::set<Bytes> seeds;
    for (const auto& o : outputs) {
        if (!seeds.insert(Bytes(o.seed.v.begin(), o.seed.v.end())).second)
            return Err::DuplicateSpentMarker;
    }
    std::vector<TransparentCoin> coins;
    coins.reserve(outputs.size());
    for (size_t i = 0; i < outputs.size(); i++) {
        auto cert = aggregate_certificate(committee, outputs[i], votes_per_output[i]);
        if (!cert.ok()) return cert.error();
        coins.push_back(TransparentCoin{std::move(cert.value())});
    }
    return coins;
}

}  // namespace zef
