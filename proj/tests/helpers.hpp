#pragma once

// Shared fixture: an in-process committee of engines with direct call
// delivery, enough to drive full request -> certificate -> confirmation
// cycles without any networking.

#include <memory>

#include "zef/account.hpp"
#include "zef/transparent.hpp"

struct TestNet {
    std::unique_ptr<zef::Committee> committee;
    std::vector<zef::KeyPair> keys;
    std::vector<zef::coconut::SecretShare> issuance;
    std::vector<zef::AccountEngine> engines;

    static TestNet make(uint32_t n, uint64_t fault_bound, uint64_t seed,
                        std::vector<zef::GenesisAccount> genesis,
                        uint32_t credential_threshold = 0) {
        using namespace zef;
        Rng rng(seed);
        TestNet net;
        auto c = std::make_unique<Committee>();
        c->fault_bound = fault_bound;
        c->credential_threshold = credential_threshold ? credential_threshold : n;
        c->num_shards = 1;
        c->credential_params = coconut::Params::setup(3, "test-net");
        auto kg = coconut::keygen(c->credential_params, c->credential_threshold, n, rng);
        c->credential_vk = kg.value().aggregate_vk;
        net.issuance = kg.value().shares;
        for (uint32_t i = 0; i < n; i++) {
            net.keys.push_back(KeyPair::generate(rng));
            AuthorityInfo a;
            a.name = "auth-" + std::to_string(i);
            a.vote_key = net.keys.back().public_key();
            a.credential_index = i + 1;
            a.credential_vk = kg.value().share_vks[i];
            c->authorities.push_back(std::move(a));
        }
        c->accounts = std::move(genesis);
        c->validate();
        net.committee = std::move(c);
        net.engines.reserve(n);
        for (uint32_t i = 0; i < n; i++)
            net.engines.emplace_back(*net.committee, "auth-" + std::to_string(i), net.keys[i]);
        return net;
    }

    // Collect votes from every engine and aggregate. First engine error wins.
    zef::Result<zef::Certificate> certify(const zef::SignedRequest& sr) {
        std::vector<zef::Vote> votes;
        std::optional<zef::Error> last;
        for (auto& e : engines) {
            auto v = e.handle_request(sr);
            if (v.ok())
                votes.push_back(v.value());
            else
                last = v.error();
        }
        auto cert = zef::aggregate_certificate(*committee, sr.request, votes);
        if (!cert.ok() && last) return *last;
        return cert;
    }

    // Confirm on every engine, looping each engine's own cross-shard output
    // back into it (the authority-internal channel).
    zef::Status confirm_all(const zef::Certificate& cert) {
        for (auto& e : engines) {
            auto msgs = e.handle_confirmation(cert);
            if (!msgs.ok()) return msgs.error();
            for (const auto& m : msgs.value()) e.handle_cross_shard(m);
        }
        return zef::ok_status();
    }

    zef::Result<zef::Certificate> run_op(const zef::KeyPair& owner, const zef::Uid& account,
                                         uint64_t sequence, zef::Operation op) {
        auto sr = zef::SignedRequest::sign(zef::Request{account, sequence, std::move(op)}, owner);
        auto cert = certify(sr);
        if (!cert.ok()) return cert;
        auto st = confirm_all(cert.value());
        if (!st.ok()) return st.error();
        return cert;
    }
};
