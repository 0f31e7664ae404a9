#pragma once

// Static system description shared by every node and wallet: the authority
// set with voting powers, the quorum rule, the credential issuance keys, the
// shard map, and the genesis accounts. Serialized as a JSON config so
// deployments are inspectable and hand-editable.

#include <algorithm>
#include <fstream>

#include "coconut.hpp"
#include "json.hpp"
#include "sign.hpp"
#include "uid.hpp"

namespace zef {

struct AuthorityInfo {
    std::string name;
    PublicKey vote_key;
    uint64_t power = 1;
    uint32_t credential_index = 0;  // 1-based issuance share; 0 = not an issuer
    coconut::VerKey credential_vk;
    std::string host = "127.0.0.1";
    uint16_t base_port = 0;      // shard s listens on base_port + s
    uint16_t metrics_port = 0;
};

struct GenesisAccount {
    Uid id;
    std::optional<PublicKey> owner;
    uint64_t balance = 0;
};

struct Committee {
    uint64_t fault_bound = 0;  // tolerated faulty voting power
    uint32_t credential_threshold = 1;
    uint32_t num_shards = 1;
    size_t uid_length_limit = kDefaultMaxUidLength;
    coconut::Params credential_params;
    coconut::VerKey credential_vk;  // aggregate issuance key
    std::vector<AuthorityInfo> authorities;  // sorted by name
    std::vector<GenesisAccount> accounts;

    uint64_t total_power() const {
        uint64_t t = 0;
        for (const auto& a : authorities) t += a.power;
        return t;
    }
    uint64_t quorum_threshold() const { return total_power() - fault_bound; }
    bool is_quorum(uint64_t power) const { return power >= quorum_threshold(); }

    const AuthorityInfo* find(const std::string& name) const {
        for (const auto& a : authorities) {
            if (a.name == name) return &a;
        }
        return nullptr;
    }

    uint32_t shard_of(const Uid& id) const {
        Writer w;
        id.encode(w);
        Digest d = hash_bytes(domain::shard, w.out);
        uint64_t h = 0;
        for (int i = 0; i < 8; i++) h |= uint64_t(d.v[i]) << (8 * i);
        return uint32_t(h % std::max<uint32_t>(1, num_shards));
    }

    // structural sanity; throws on a config that could never reach quorum
    void validate() const {
        if (authorities.empty()) throw ParseError("no authorities");
        if (3 * fault_bound >= total_power()) throw ParseError("fault bound too large");
        uint32_t issuers = 0;
        for (const auto& a : authorities) {
            if (a.credential_index) issuers++;
        }
        if (credential_threshold == 0 || credential_threshold > issuers)
            throw ParseError("credential threshold out of range");
        for (size_t i = 1; i < authorities.size(); i++) {
            if (!(authorities[i - 1].name < authorities[i].name))
                throw ParseError("authorities must be strictly sorted by name");
        }
    }

    Digest digest() const {
        Writer w;
        w.u64(fault_bound);
        w.u32(credential_threshold);
        w.u32(num_shards);
        w.u64(uid_length_limit);
        credential_params.encode(w);
        credential_vk.encode(w);
        w.u32(uint32_t(authorities.size()));
        for (const auto& a : authorities) {
            w.lp_str(a.name);
            a.vote_key.encode(w);
            w.u64(a.power);
            w.u32(a.credential_index);
            a.credential_vk.encode(w);
        }
        w.u32(uint32_t(accounts.size()));
        for (const auto& g : accounts) {
            g.id.encode(w);
            w.u8(g.owner ? 1 : 0);
            if (g.owner) g.owner->encode(w);
            w.u64(g.balance);
        }
        return hash_bytes(domain::committee, w.out);
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["fault_bound"] = fault_bound;
        j["credential_threshold"] = credential_threshold;
        j["num_shards"] = num_shards;
        j["uid_length_limit"] = uid_length_limit;
        {
            Writer w;
            credential_params.encode(w);
            j["credential_params"] = to_hex(w.out);
        }
        {
            Writer w;
            credential_vk.encode(w);
            j["credential_vk"] = to_hex(w.out);
        }
        j["authorities"] = nlohmann::json::array();
        for (const auto& a : authorities) {
            nlohmann::json ja;
            ja["name"] = a.name;
            ja["vote_key"] = a.vote_key.hex();
            ja["power"] = a.power;
            ja["credential_index"] = a.credential_index;
            Writer w;
            a.credential_vk.encode(w);
            ja["credential_vk"] = to_hex(w.out);
            ja["host"] = a.host;
            ja["base_port"] = a.base_port;
            ja["metrics_port"] = a.metrics_port;
            j["authorities"].push_back(std::move(ja));
        }
        j["accounts"] = nlohmann::json::array();
        for (const auto& g : accounts) {
            nlohmann::json jg;
            jg["id"] = g.id.to_string();
            if (g.owner) jg["owner"] = g.owner->hex();
            jg["balance"] = g.balance;
            j["accounts"].push_back(std::move(jg));
        }
        return j;
    }

    static Committee from_json(const nlohmann::json& j) {
        Committee c;
        c.fault_bound = j.at("fault_bound").get<uint64_t>();
        c.credential_threshold = j.at("credential_threshold").get<uint32_t>();
        c.num_shards = j.at("num_shards").get<uint32_t>();
        c.uid_length_limit = j.value("uid_length_limit", kDefaultMaxUidLength);
        {
            Bytes b = from_hex(j.at("credential_params").get<std::string>());
            Reader r(b);
            c.credential_params = coconut::Params::decode(r);
            r.expect_done();
        }
        {
            Bytes b = from_hex(j.at("credential_vk").get<std::string>());
            Reader r(b);
            c.credential_vk = coconut::VerKey::decode(r);
            r.expect_done();
        }
        for (const auto& ja : j.at("authorities")) {
            AuthorityInfo a;
            a.name = ja.at("name").get<std::string>();
            a.vote_key = PublicKey::from_hex(ja.at("vote_key").get<std::string>());
            a.power = ja.value("power", uint64_t(1));
            a.credential_index = ja.value("credential_index", 0u);
            if (ja.contains("credential_vk")) {
                Bytes b = from_hex(ja.at("credential_vk").get<std::string>());
                Reader r(b);
                a.credential_vk = coconut::VerKey::decode(r);
                r.expect_done();
            }
            a.host = ja.value("host", std::string("127.0.0.1"));
            a.base_port = ja.value("base_port", uint16_t(0));
            a.metrics_port = ja.value("metrics_port", uint16_t(0));
            c.authorities.push_back(std::move(a));
        }
        std::sort(c.authorities.begin(), c.authorities.end(),
                  [](const auto& x, const auto& y) { return x.name < y.name; });
        if (j.contains("accounts")) {
            for (const auto& jg : j.at("accounts")) {
                GenesisAccount g;
                auto id = Uid::parse(jg.at("id").get<std::string>());
                if (!id || !id->valid(c.uid_length_limit))
                    throw ParseError("bad genesis account id");
                g.id = *id;
                if (jg.contains("owner"))
                    g.owner = PublicKey::from_hex(jg.at("owner").get<std::string>());
                g.balance = jg.value("balance", uint64_t(0));
                c.accounts.push_back(std::move(g));
            }
        }
        c.validate();
        return c;
    }

    void save(const std::string& path) const {
        std::ofstream f(path);
        if (!f) throw ParseError("cannot write " + path);
        f << to_json().dump(2) << "\n";
    }

    static Committee load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw ParseError("cannot read " + path);
        nlohmann::json j;
        f >> j;
        return from_json(j);
    }
};

}  // namespace zef
