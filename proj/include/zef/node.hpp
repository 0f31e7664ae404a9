#pragma once

// One shard of one authority as a runnable service: the frame server, a
// single-writer lock around the shard state, a cross-shard router that
// retries sibling deliveries until acknowledged, and a small HTTP side-door
// for metrics and admin actions (sweep, snapshot).

#include <httplib.h>

#include <condition_variable>
#include <deque>
#include <fstream>
#include <memory>
#include <sstream>

#include "net.hpp"
#include "service.hpp"

namespace zef {

class ShardNode {
  public:
    // port/metrics_port 0 binds ephemerally (tests); metrics_port -1
    // disables the http side-door entirely.
    ShardNode(const Committee& committee, const AuthorityKeys& keys, uint32_t shard,
              uint16_t port = 0, int metrics_port = -1)
        : committee_(&committee),
          shard_(committee, keys, shard),
          shard_index_(shard),
          metrics_port_(metrics_port),
          server_(port, [this](const wire::Frame& f) { return handle_frame(f); }) {}

    ~ShardNode() { stop(); }

    Status start() {
        Status s = server_.start();
        if (!s.ok()) return s;
        running_ = true;
        router_ = std::thread([this] { route_loop(); });
        if (metrics_port_ >= 0) start_http();
        return ok_status();
    }

    void stop() {
        if (!running_.exchange(false)) return;
        cv_.notify_all();
        if (router_.joinable()) router_.join();
        if (http_) http_->stop();
        if (http_thread_.joinable()) http_thread_.join();
        http_.reset();
        server_.stop();
    }

    uint16_t port() const { return server_.port(); }
    int metrics_port() const { return metrics_port_; }
    uint32_t shard_index() const { return shard_index_; }

    // Where this node believes a sibling shard lives; tests with ephemeral
    // ports override it.
    void set_sibling(uint32_t shard, const std::string& host, uint16_t port) {
        std::lock_guard lk(mu_);
        siblings_[shard] = {host, port};
    }

    // Single entry point for every mutation, also used by loopback tests.
    wire::Frame handle_frame(const wire::Frame& f) {
        std::vector<CrossShardMessage> outbox;
        wire::Frame reply;
        {
            std::lock_guard lk(mu_);
            reply = shard_.handle(f, outbox);
        }
        for (auto& m : outbox) deliver(std::move(m));
        return reply;
    }

    // test access; callers must not race handle_frame
    AuthorityShard& shard() { return shard_; }

    size_t pending_cross_shard() const {
        std::lock_guard lk(mu_);
        return queue_.size();
    }

    Status write_snapshot(const std::string& path) {
        Writer w;
        {
            std::lock_guard lk(mu_);
            shard_.engine().encode_snapshot(w);
        }
        std::ofstream f(path, std::ios::binary);
        if (!f) return Error(Err::ConnectionFailed, 0, "cannot write " + path);
        f.write(reinterpret_cast<const char*>(w.out.data()), std::streamsize(w.out.size()));
        return ok_status();
    }

    Status load_snapshot_file(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) return Error(Err::ConnectionFailed, 0, "cannot read " + path);
        Bytes b((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        try {
            Reader r(b);
            std::lock_guard lk(mu_);
            return shard_.engine().load_snapshot(r);
        } catch (const ParseError& e) {
            return Error(Err::MalformedMessage, 0, e.what());
        }
    }

    std::string metrics_text() const {
        std::ostringstream os;
        std::lock_guard lk(mu_);
        const auto& c = shard_.counters();
        os << "zef_shard " << shard_index_ << "\n";
        os << "zef_frames_total " << c.frames << "\n";
        os << "zef_errors_total " << c.errors << "\n";
        os << "zef_cross_shard_out_total " << c.cross_shard_out << "\n";
        os << "zef_cross_shard_pending " << queue_.size() << "\n";
        os << "zef_accounts " << shard_.engine().account_count() << "\n";
        for (const auto& [tag, n] : c.by_tag) os << "zef_frames{tag=\"" << tag << "\"} " << n << "\n";
        return os.str();
    }

  private:
    struct Sibling {
        std::string host;
        uint16_t port = 0;
    };

    void deliver(CrossShardMessage m) {
        uint32_t target = committee_->shard_of(m.target);
        if (target == shard_index_) {
            std::lock_guard lk(mu_);
            shard_.engine().handle_cross_shard(m);
            return;
        }
        {
            std::lock_guard lk(mu_);
            queue_.push_back({target, std::move(m)});
        }
        cv_.notify_one();
    }

    std::optional<Sibling> sibling_address(uint32_t shard) {
        std::lock_guard lk(mu_);
        auto it = siblings_.find(shard);
        if (it != siblings_.end()) return it->second;
        const auto* info = committee_->find(shard_.engine().authority());
        if (!info) return std::nullopt;
        return Sibling{info->host, uint16_t(info->base_port + shard)};
    }

    void route_loop() {
        // at-least-once delivery; the receiving engine dedups by origin digest
        while (running_) {
            std::pair<uint32_t, CrossShardMessage> item;
            {
                std::unique_lock lk(mu_);
                cv_.wait_for(lk, std::chrono::milliseconds(100),
                             [this] { return !queue_.empty() || !running_; });
                if (!running_ && queue_.empty()) return;
                if (queue_.empty()) continue;
                item = std::move(queue_.front());
                queue_.pop_front();
            }
            if (!send_with_ack(item.first, item.second)) {
                {
                    std::lock_guard lk(mu_);
                    queue_.push_back(std::move(item));  // retry later, keep draining others
                }
                std::this_thread::sleep_for(std::chrono::milliseconds(50));
            }
        }
    }

    bool send_with_ack(uint32_t target, const CrossShardMessage& m) {
        auto sib = sibling_address(target);
        if (!sib) return false;
        net::TcpConn conn(sib->host, sib->port, 2000);
        auto r = conn.call(wire::make_frame(wire::Tag::CrossShard, m));
        if (!r.ok() || r.value().tag != wire::Tag::Error) return false;
        try {
            Reader rd(r.value().payload);
            return Error::decode(rd).code == Err::None;
        } catch (const ParseError&) {
            return false;
        }
    }

    void start_http() {
        http_ = std::make_unique<httplib::Server>();
        http_->Get("/health", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("ok\n", "text/plain");
        });
        http_->Get("/metrics", [this](const httplib::Request&, httplib::Response& res) {
            res.set_content(metrics_text(), "text/plain");
        });
        http_->Post("/admin/sweep", [this](const httplib::Request&, httplib::Response& res) {
            size_t n;
            {
                std::lock_guard lk(mu_);
                n = shard_.engine().sweep();
            }
            res.set_content("swept " + std::to_string(n) + "\n", "text/plain");
        });
        http_->Post("/admin/snapshot", [this](const httplib::Request& req, httplib::Response& res) {
            std::string path = req.has_param("path") ? req.get_param_value("path")
                                                     : snapshot_default_path();
            Status s = write_snapshot(path);
            if (!s.ok()) {
                res.status = 500;
                res.set_content(s.error().to_string() + "\n", "text/plain");
                return;
            }
            res.set_content(path + "\n", "text/plain");
        });
        if (metrics_port_ == 0) {
            metrics_port_ = http_->bind_to_any_port("0.0.0.0");
        } else {
            http_->bind_to_port("0.0.0.0", metrics_port_);
        }
        http_thread_ = std::thread([this] { http_->listen_after_bind(); });
    }

    std::string snapshot_default_path() const {
        return shard_.engine().authority() + "-shard" + std::to_string(shard_index_) + ".snap";
    }

    const Committee* committee_;
    AuthorityShard shard_;
    uint32_t shard_index_;
    int metrics_port_;
    net::FrameServer server_;
    std::atomic<bool> running_{false};
    std::thread router_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::pair<uint32_t, CrossShardMessage>> queue_;
    std::map<uint32_t, Sibling> siblings_;
    std::unique_ptr<httplib::Server> http_;
    std::thread http_thread_;
};

}  // namespace zef
