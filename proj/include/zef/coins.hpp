#pragma once

// Anonymous coins: a coin is a threshold credential over three attributes,
// (key, seed, value), where key = H(account, index) pins the coin to the
// account slot it was announced under. A creation request burns input coins
// behind randomized presentations, withdraws public amounts from accounts,
// and asks for blind signatures on committed outputs; one proof ties the
// presentations, the output commitments, 32-bit range proofs, and the
// conservation equation together. Issuers never learn output attributes,
// and presentations do not link back to issuance.

#include "coconut.hpp"
#include "rangeproof.hpp"
#include "uid.hpp"

namespace zef::coins {

using bls::Fr;
using bls::G1;
using bls::G2;
using coconut::Params;
using coconut::VerKey;

inline constexpr uint32_t kCoinAttrs = 3;  // key, seed, value
inline constexpr const char* kOutputBaseTag = "coin-output-base";
inline constexpr size_t kMaxRequestSide = 512;

// First coin attribute: binds the coin to one (account, index) slot.
inline Fr coin_key(const Uid& account, uint64_t index) {
    Writer w;
    account.encode(w);
    w.u64(index);
    return hash_to_scalar(domain::coin_key, w.out);
}

inline Params default_params() { return Params::setup(kCoinAttrs, "coin-attributes"); }

struct OpaqueCoin {
    Uid account;
    uint64_t index = 0;
    Fr seed;
    uint64_t value = 0;
    coconut::Credential sigma;

    std::vector<Fr> attributes() const {
        return {coin_key(account, index), seed, Fr::from_int(value)};
    }

    bool verify(const Params& params, const VerKey& vk) const {
        if (value > kValueMax) return false;
        return coconut::plain_verify(params, vk, sigma, attributes());
    }

    void encode(Writer& w) const {
        account.encode(w);
        w.u64(index);
        seed.encode(w);
        w.u64(value);
        sigma.encode(w);
    }
    static OpaqueCoin decode(Reader& r, size_t max_uid_len = kDefaultMaxUidLength) {
        OpaqueCoin c;
        c.account = Uid::decode(r, max_uid_len);
        c.index = r.u64();
        c.seed = Fr::decode(r);
        c.value = r.u64();
        c.sigma = coconut::Credential::decode(r);
        return c;
    }
};

// One burned-or-withdrawn position of a creation request, wallet side.
struct SpendInput {
    std::optional<OpaqueCoin> coin;
    uint64_t withdrawal = 0;
};

// What an authority learns about the same position from the certificates:
// the public coin key (if a coin is burned) and the public withdrawal.
struct InputFact {
    std::optional<Fr> key;
    uint64_t withdrawal = 0;
};

struct OutputSpec {
    Uid account;
    uint64_t index = 0;
    Fr seed;
    uint64_t value = 0;
};

struct InputPresentation {
    G1 h1, s1;
    G2 kappa;

    void encode(Writer& w) const {
        w.raw(bls::g1_bytes(h1));
        w.raw(bls::g1_bytes(s1));
        w.raw(bls::g2_bytes(kappa));
    }
    static InputPresentation decode(Reader& r) {
        InputPresentation p;
        uint8_t b1[48], b2[96];
        r.raw_into(b1, 48);
        auto h = bls::g1_deserialize(b1);
        if (!h) throw ParseError("bad input h'");
        p.h1 = *h;
        r.raw_into(b1, 48);
        auto s = bls::g1_deserialize(b1);
        if (!s) throw ParseError("bad input s'");
        p.s1 = *s;
        r.raw_into(b2, 96);
        auto k = bls::g2_deserialize(b2);
        if (!k) throw ParseError("bad input kappa");
        p.kappa = *k;
        return p;
    }
};

// Standalone check of one randomized presentation against a known coin key.
// The batched form inside request verification is equivalent; this one is for
// per-request account validation where only a single input is at hand.
inline bool verify_presentation(const coconut::VerKey& vk, const InputPresentation& p,
                                const Fr& key) {
    if (p.h1.is_infinity() || vk.beta.empty()) return false;
    G2 kappa = p.kappa + vk.beta[0].mul(key);
    return bls::multi_pairing({{p.h1, kappa}, {p.s1.neg(), coconut::Params::g2()}}).is_one();
}

struct CoinOutput {
    G1 cm, ck, cq, cv;
    RangeProof range;

    void encode(Writer& w) const {
        w.raw(bls::g1_bytes(cm));
        w.raw(bls::g1_bytes(ck));
        w.raw(bls::g1_bytes(cq));
        w.raw(bls::g1_bytes(cv));
        range.encode(w);
    }
    static CoinOutput decode(Reader& r) {
        auto point = [&]() {
            uint8_t buf[48];
            r.raw_into(buf, 48);
            auto p = bls::g1_deserialize(buf);
            if (!p) throw ParseError("bad output commitment");
            return *p;
        };
        CoinOutput o;
        o.cm = point();
        o.ck = point();
        o.cq = point();
        o.cv = point();
        o.range = RangeProof::decode(r);
        return o;
    }
};

struct CoinRequest {
    std::vector<InputPresentation> inputs;  // one per burned coin
    std::vector<CoinOutput> outputs;
    SigmaProof pi;

    // Binds the certificates to this exact output set; the proof and the
    // presentations are deliberately outside so re-proving does not change
    // the certified hash.
    Digest outputs_hash() const {
        Hasher h(domain::outputs);
        h.update_u64(1);  // output family: blinded
        h.update_u64(outputs.size());
        for (const auto& o : outputs) {
            h.update(bls::g1_bytes(o.cm));
            h.update(bls::g1_bytes(o.ck));
            h.update(bls::g1_bytes(o.cq));
            h.update(bls::g1_bytes(o.cv));
        }
        return h.digest();
    }

    void encode(Writer& w) const {
        w.u32(uint32_t(inputs.size()));
        for (const auto& i : inputs) i.encode(w);
        w.u32(uint32_t(outputs.size()));
        for (const auto& o : outputs) o.encode(w);
        pi.encode(w);
    }
    static CoinRequest decode(Reader& r) {
        CoinRequest q;
        uint32_t ni = r.u32();
        if (ni > kMaxRequestSide) throw ParseError("too many inputs");
        for (uint32_t i = 0; i < ni; i++) q.inputs.push_back(InputPresentation::decode(r));
        uint32_t no = r.u32();
        if (no > kMaxRequestSide) throw ParseError("too many outputs");
        for (uint32_t i = 0; i < no; i++) q.outputs.push_back(CoinOutput::decode(r));
        q.pi = SigmaProof::decode(r);
        return q;
    }
};

// Per-output blinding factors, kept by the requester for unblinding.
struct OutputSecrets {
    Fr rk, rq, rv;
};

struct BuiltRequest {
    CoinRequest request;
    std::vector<OutputSecrets> secrets;
};

namespace detail {

inline G1 output_base(const G1& cm) {
    return bls::hash_to_g1(kOutputBaseTag, bls::g1_bytes(cm));
}

// Relation shared by prover and verifier. Witness order: per burned input
// (r, seed, value); per output (o, key, seed, value, rk, rq, rv, delta).
inline SigmaSystem coin_system(const Params& params, const VerKey& vk,
                               const std::vector<InputPresentation>& ins,
                               const std::vector<CoinOutput>& outs,
                               const std::vector<G1>& out_bases,
                               const std::vector<G1>& bit_sums, const Fr& conservation) {
    SigmaSystem sys;
    SigmaSystem::Lin balance;
    balance.constant = conservation;

    for (const auto& in : ins) {
        size_t w_r = sys.fresh();
        size_t w_q = sys.fresh();
        size_t w_v = sys.fresh();
        SigmaSystem::Eq2 e;
        e.target = in.kappa - vk.alpha;
        e.terms.push_back({Params::g2(), w_r});
        e.terms.push_back({vk.beta[1], w_q});
        e.terms.push_back({vk.beta[2], w_v});
        sys.g2_eqs.push_back(std::move(e));
        balance.terms.push_back({Fr::one().neg(), w_v});
    }

    for (size_t j = 0; j < outs.size(); j++) {
        size_t w_o = sys.fresh();
        size_t w_k = sys.fresh();
        size_t w_q = sys.fresh();
        size_t w_v = sys.fresh();
        size_t w_rk = sys.fresh();
        size_t w_rq = sys.fresh();
        size_t w_rv = sys.fresh();
        size_t w_d = sys.fresh();

        SigmaSystem::Eq1 e_cm;
        e_cm.target = outs[j].cm;
        e_cm.terms.push_back({Params::g1(), w_o});
        e_cm.terms.push_back({params.hs[0], w_k});
        e_cm.terms.push_back({params.hs[1], w_q});
        e_cm.terms.push_back({params.hs[2], w_v});
        sys.g1_eqs.push_back(std::move(e_cm));

        auto wrap = [&](const G1& target, size_t w_attr, size_t w_rand) {
            SigmaSystem::Eq1 e;
            e.target = target;
            e.terms.push_back({out_bases[j], w_attr});
            e.terms.push_back({Params::g1(), w_rand});
            sys.g1_eqs.push_back(std::move(e));
        };
        wrap(outs[j].ck, w_k, w_rk);
        wrap(outs[j].cq, w_q, w_rq);
        wrap(outs[j].cv, w_v, w_rv);

        SigmaSystem::Eq1 e_link;
        e_link.target = outs[j].cv - bit_sums[j];
        e_link.terms.push_back({Params::g1(), w_d});
        sys.g1_eqs.push_back(std::move(e_link));

        balance.terms.push_back({Fr::one(), w_v});
    }
    sys.lin_eqs.push_back(std::move(balance));
    return sys;
}

inline Transcript coin_transcript(const Params& params, const VerKey& vk,
                                  const std::vector<std::optional<Fr>>& keys,
                                  const std::vector<uint64_t>& withdrawals,
                                  const std::vector<InputPresentation>& ins,
                                  const std::vector<CoinOutput>& outs) {
    Transcript tr("coin-create");
    tr.absorb_digest("params", params.digest);
    tr.absorb_digest("vk", vk.digest());
    tr.absorb_u64("spends", keys.size());
    size_t coin_pos = 0;
    for (size_t i = 0; i < keys.size(); i++) {
        std::string tag = std::to_string(i);
        if (keys[i]) {
            const auto& p = ins[coin_pos++];
            tr.absorb_u64("in.coin." + tag, 1);
            tr.absorb_g1("in.h1." + tag, p.h1);
            tr.absorb_g1("in.s1." + tag, p.s1);
            tr.absorb_g2("in.kappa." + tag, p.kappa);
            tr.absorb_scalar("in.key." + tag, *keys[i]);
        } else {
            tr.absorb_u64("in.coin." + tag, 0);
        }
        tr.absorb_u64("in.v." + tag, withdrawals[i]);
    }
    tr.absorb_u64("outputs", outs.size());
    for (size_t j = 0; j < outs.size(); j++) {
        std::string tag = std::to_string(j);
        tr.absorb_g1("out.cm." + tag, outs[j].cm);
        tr.absorb_g1("out.ck." + tag, outs[j].ck);
        tr.absorb_g1("out.cq." + tag, outs[j].cq);
        tr.absorb_g1("out.cv." + tag, outs[j].cv);
        for (int i = 0; i < kRangeBits; i++) {
            tr.absorb_g1("out.bit." + tag + "." + std::to_string(i), outs[j].range.bits[i]);
        }
    }
    return tr;
}

inline Fr conservation_constant(const std::vector<uint64_t>& withdrawals) {
    Fr t = Fr::zero();
    for (uint64_t v : withdrawals) t = t + Fr::from_int(v);
    return t;
}

}  // namespace detail

// Build a creation request from owned inputs and desired outputs. Fails if
// any value exceeds the 32-bit range or the sums do not balance.
inline Result<BuiltRequest> coin_request(const Params& params, const VerKey& vk,
                                         const std::vector<SpendInput>& spends,
                                         const std::vector<OutputSpec>& outputs, Rng& rng) {
    if (outputs.empty() || spends.empty()) return Err::MalformedMessage;
    if (outputs.size() > kMaxRequestSide || spends.size() > kMaxRequestSide)
        return Err::MalformedMessage;

    unsigned __int128 in_sum = 0, out_sum = 0;
    for (const auto& s : spends) {
        if (s.coin && s.coin->value > kValueMax) return Err::ValueOutOfRange;
        in_sum += s.withdrawal;
        if (s.coin) in_sum += s.coin->value;
    }
    for (const auto& o : outputs) {
        if (o.value > kValueMax) return Err::ValueOutOfRange;
        out_sum += o.value;
    }
    if (in_sum != out_sum) return Err::ConservationViolated;

    BuiltRequest built;
    std::vector<Fr> witness;
    std::vector<std::optional<Fr>> keys;
    std::vector<uint64_t> withdrawals;

    // randomized presentations for burned coins
    for (const auto& s : spends) {
        withdrawals.push_back(s.withdrawal);
        if (!s.coin) {
            keys.push_back(std::nullopt);
            continue;
        }
        const auto& c = *s.coin;
        keys.push_back(coin_key(c.account, c.index));
        Fr rp = Fr::random(rng);
        Fr r = Fr::random(rng);
        InputPresentation p;
        p.h1 = c.sigma.h.mul(rp);
        p.s1 = c.sigma.s.mul(rp) + p.h1.mul(r);
        p.kappa = vk.alpha + Params::g2().mul(r) + vk.beta[1].mul(c.seed) +
                  vk.beta[2].mul(Fr::from_int(c.value));
        built.request.inputs.push_back(p);
        witness.push_back(r);
        witness.push_back(c.seed);
        witness.push_back(Fr::from_int(c.value));
    }

    // committed outputs and their range proofs
    std::vector<RangeProver> rangers;
    std::vector<G1> out_bases, bit_sums;
    for (const auto& o : outputs) {
        Fr k = coin_key(o.account, o.index);
        Fr ob = Fr::random(rng);
        CoinOutput out;
        out.cm = G1::msm({Params::g1(), params.hs[0], params.hs[1], params.hs[2]},
                         {ob, k, o.seed, Fr::from_int(o.value)});
        G1 base = detail::output_base(out.cm);
        OutputSecrets sec{Fr::random(rng), Fr::random(rng), Fr::random(rng)};
        out.ck = base.mul(k) + Params::g1().mul(sec.rk);
        out.cq = base.mul(o.seed) + Params::g1().mul(sec.rq);
        out.cv = base.mul(Fr::from_int(o.value)) + Params::g1().mul(sec.rv);

        rangers.emplace_back(o.value, base, rng);
        out.range.bits = rangers.back().commitments();
        out.range.ors.clear();  // filled after the challenges

        witness.push_back(ob);
        witness.push_back(k);
        witness.push_back(o.seed);
        witness.push_back(Fr::from_int(o.value));
        witness.push_back(sec.rk);
        witness.push_back(sec.rq);
        witness.push_back(sec.rv);
        witness.push_back(sec.rv - rangers.back().rho_weighted_sum());

        out_bases.push_back(base);
        bit_sums.push_back(weighted_by_powers_of_two(out.range.bits));
        built.request.outputs.push_back(std::move(out));
        built.secrets.push_back(sec);
    }

    Transcript tr = detail::coin_transcript(params, vk, keys, withdrawals, built.request.inputs,
                                            built.request.outputs);
    for (size_t j = 0; j < rangers.size(); j++) {
        rangers[j].absorb_announcements(tr, "range." + std::to_string(j));
    }
    SigmaSystem sys =
        detail::coin_system(params, vk, built.request.inputs, built.request.outputs, out_bases,
                            bit_sums, detail::conservation_constant(withdrawals));
    built.request.pi = sigma_prove(sys, witness, tr, rng);
    for (size_t j = 0; j < rangers.size(); j++) {
        built.request.outputs[j].range.ors =
            rangers[j].finish(tr, "range." + std::to_string(j)).ors;
    }
    return built;
}

// Authority-side verification against the facts certified by the spends.
// Deterministic: batching randomness derives from the transcript.
inline Status verify_coin_request(const Params& params, const VerKey& vk, const CoinRequest& req,
                                  const std::vector<InputFact>& facts) {
    if (params.q != kCoinAttrs || vk.beta.size() != kCoinAttrs) return Err::MalformedMessage;
    if (req.outputs.empty() || facts.empty()) return Err::MalformedMessage;
    if (req.outputs.size() > kMaxRequestSide || facts.size() > kMaxRequestSide)
        return Err::MalformedMessage;

    std::vector<std::optional<Fr>> keys;
    std::vector<uint64_t> withdrawals;
    size_t n_coins = 0;
    for (const auto& f : facts) {
        keys.push_back(f.key);
        withdrawals.push_back(f.withdrawal);
        if (f.key) n_coins++;
    }
    if (req.inputs.size() != n_coins) return Err::MalformedMessage;
    for (size_t i = 0; i < req.inputs.size(); i++) {
        if (req.inputs[i].h1.is_infinity()) return Error{Err::InvalidInputCoin, i};
    }
    for (const auto& o : req.outputs) {
        if (!o.range.well_formed()) return Err::InvalidProof;
    }

    std::vector<G1> out_bases, bit_sums;
    std::vector<RangeVerifier> rangers;
    for (const auto& o : req.outputs) {
        out_bases.push_back(detail::output_base(o.cm));
        rangers.emplace_back(o.range, out_bases.back());
        bit_sums.push_back(rangers.back().weighted_bit_sum());
    }

    Transcript tr = detail::coin_transcript(params, vk, keys, withdrawals, req.inputs, req.outputs);
    for (size_t j = 0; j < rangers.size(); j++) {
        rangers[j].absorb_announcements(tr, "range." + std::to_string(j));
    }
    SigmaSystem sys = detail::coin_system(params, vk, req.inputs, req.outputs, out_bases, bit_sums,
                                          detail::conservation_constant(withdrawals));
    if (!sigma_verify(sys, req.pi, tr)) return Err::InvalidProof;

    bool ok = true;
    for (size_t j = 0; j < rangers.size(); j++) {
        ok = ok & rangers[j].finish(tr, "range." + std::to_string(j));
    }

    std::array<uint8_t, 32> ka;
    tr.challenge("batch-weights").to_le_bytes(ka.data());
    Rng wrng(ka);

    RangeBatch batch(wrng.fork(1));
    for (size_t j = 0; j < req.outputs.size(); j++) {
        batch.add(req.outputs[j].range, out_bases[j]);
    }
    if (!ok || !batch.verify()) return Err::InvalidProof;

    // batched credential pairing checks:
    //   prod_i e(w_i h1_i, kappa_i + beta0 k_i) * e(-sum w_i s1_i, g2) == 1
    auto weight = [&]() {
        uint8_t wide[64] = {0};
        wrng.fill(wide, 16);
        return Fr::from_wide_le(wide);
    };
    std::vector<std::pair<G1, G2>> pairs;
    G1 s_acc = G1::infinity();
    size_t coin_pos = 0;
    std::vector<G2> folded;
    for (size_t i = 0; i < facts.size(); i++) {
        if (!facts[i].key) continue;
        const auto& p = req.inputs[coin_pos++];
        Fr w = weight();
        G2 kap = p.kappa + vk.beta[0].mul(*facts[i].key);
        folded.push_back(kap);
        pairs.push_back({p.h1.mul(w), kap});
        s_acc = s_acc + p.s1.mul(w);
    }
    pairs.push_back({s_acc.neg(), Params::g2()});
    if (!bls::multi_pairing(pairs).is_one()) {
        // identify the offending input for the error report
        coin_pos = 0;
        for (size_t i = 0; i < facts.size(); i++) {
            if (!facts[i].key) continue;
            const auto& p = req.inputs[coin_pos];
            if (!bls::multi_pairing({{p.h1, folded[coin_pos]}, {p.s1.neg(), Params::g2()}})
                     .is_one()) {
                return Error{Err::InvalidInputCoin, i};
            }
            coin_pos++;
        }
        return Err::InvalidProof;
    }
    return ok_status();
}

// One authority's blind signature over every output of a verified request.
// Deterministic in (key share, request).
inline std::vector<coconut::BlindedShare> issue_blind_coins(const coconut::SecretShare& sk,
                                                            const CoinRequest& req) {
    std::vector<coconut::BlindedShare> out;
    out.reserve(req.outputs.size());
    for (const auto& o : req.outputs) {
        G1 base = detail::output_base(o.cm);
        G1 s = base.mul(sk.x) + o.ck.mul(sk.y[0]) + o.cq.mul(sk.y[1]) + o.cv.mul(sk.y[2]);
        out.push_back({s});
    }
    return out;
}

// Requester side: strip the blinding from one authority's share of output j.
inline coconut::Credential unblind_output(const Params& params, const VerKey& share_vk,
                                          const CoinOutput& out, const OutputSecrets& sec,
                                          const coconut::BlindedShare& share) {
    coconut::BlindFactors f;
    f.rs = {sec.rk, sec.rq, sec.rv};
    return coconut::unblind(params, share_vk, detail::output_base(out.cm), share, f);
}

}  // namespace zef::coins
