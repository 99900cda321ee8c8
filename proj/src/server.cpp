// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <thread>

namespace splatdyn {
namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace ws = beast::websocket;
using tcp = asio::ip::tcp;
using Bytes = std::shared_ptr<const std::vector<std::uint8_t>>;
using protocol::ErrorCode;

constexpr std::uint16_t kCloseBase = 4000; ///< close code = 4000 + ErrorCode

struct Disconnect {};
struct Command {
    std::uint64_t session;
    std::variant<protocol::ClientMessage, Disconnect> body;
};

std::string query_token(std::string_view target)
{
    const auto q = target.find('?');
    if (q == std::string_view::npos) return {};
    std::string_view rest = target.substr(q + 1);
    while (!rest.empty()) {
        const auto amp = rest.find('&');
        const auto kv = rest.substr(0, amp);
        if (kv.substr(0, 6) == "token=") return std::string(kv.substr(6));
        if (amp == std::string_view::npos) break;
        rest = rest.substr(amp + 1);
    }
    return {};
}

} // namespace

struct Server::Impl {
    class Session;

    Simulation& sim;
    ServeOptions options;
    asio::io_context io;
    tcp::acceptor acceptor{io};
    Bytes init;

    // Network thread only.
    std::map<std::uint64_t, std::shared_ptr<Session>> sessions;
    std::uint64_t next_id = 1;

    std::mutex inbox_mutex;
    std::vector<Command> inbox;

    mutable std::mutex state_mutex;
    std::condition_variable done_cv;
    bool done = false;
    std::optional<std::string> fault;
    ServerStats stats;

    std::atomic<bool> stopping{false};
    std::thread net_thread, sim_thread;

    Impl(Simulation& s, ServeOptions o) : sim(s), options(std::move(o)) {}

    void push(Command c)
    {
        std::lock_guard lock(inbox_mutex);
        inbox.push_back(std::move(c));
    }

    void count(std::uint64_t ServerStats::*field, std::uint64_t n = 1)
    {
        std::lock_guard lock(state_mutex);
        stats.*field += n;
    }

    class Session : public std::enable_shared_from_this<Session> {
    public:
        Session(Impl& server, tcp::socket socket, std::uint64_t id) : server_(server), ws_(std::move(socket)), id_(id) {}

        void start()
        {
            http::async_read(ws_.next_layer(), buffer_, request_,
                             [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_request(ec); });
        }

        /// Frames beyond the cap are dropped; other messages always queue.
        void send(Bytes msg, bool is_frame)
        {
            if (closing_) return;
            if (is_frame && queue_.size() >= server_.options.frame_queue_cap) {
                server_.count(&ServerStats::frames_dropped);
                return;
            }
            queue_.push_back(std::move(msg));
            if (queue_.size() == 1) write_next();
        }

        void fail(ErrorCode code, const std::string& why)
        {
            if (closing_) return;
            server_.count(&ServerStats::protocol_errors);
            spdlog::info("session {} closed: {}", id_, why);
            close_reason_ = ws::close_reason(ws::close_code(kCloseBase + std::uint16_t(code)), why.substr(0, 120));
            // A non-empty queue means its front is being written; keep it and drop the rest.
            const bool idle = queue_.empty();
            if (!idle) queue_.erase(queue_.begin() + 1, queue_.end());
            queue_.push_back(std::make_shared<std::vector<std::uint8_t>>(protocol::encode_error(code, why)));
            closing_ = true;
            if (idle) write_next();
        }

        void shutdown()
        {
            if (closing_) return;
            closing_ = true;
            close_reason_ = ws::close_reason(ws::close_code::going_away);
            if (queue_.empty()) close();
        }

    private:
        void on_request(beast::error_code ec)
        {
            if (ec) return finish();
            if (!ws::is_upgrade(request_)) {
                auto res = std::make_shared<http::response<http::string_body>>(http::status::upgrade_required, request_.version());
                res->set(http::field::content_type, "text/plain");
                res->body() = "websocket endpoint\n";
                res->prepare_payload();
                http::async_write(ws_.next_layer(), *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
                    beast::error_code ignored;
                    self->ws_.next_layer().socket().shutdown(tcp::socket::shutdown_both, ignored);
                    self->finish();
                });
                return;
            }
            const bool authorized = server_.options.token.empty() || query_token(std::string_view(request_.target().data(), request_.target().size())) == server_.options.token;
            ws_.binary(true);
            ws_.async_accept(request_, [self = shared_from_this(), authorized](beast::error_code ec) {
                if (ec) return self->finish();
                self->server_.sessions[self->id_] = self;
                self->server_.count(&ServerStats::sessions);
                if (!authorized) return self->fail(ErrorCode::Unauthorized, "missing or wrong token");
                self->send(self->server_.init, false);
                self->read();
            });
        }

        void read()
        {
            ws_.async_read(inbound_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
        }

        void on_read(beast::error_code ec)
        {
            if (ec) return finish();
            if (closing_) return;
            if (!ws_.got_binary()) {
                inbound_.consume(inbound_.size());
                return fail(ErrorCode::Malformed, "text frames are not part of the protocol");
            }
            const auto data = inbound_.cdata();
            std::span<const std::uint8_t> bytes(static_cast<const std::uint8_t*>(data.data()), data.size());
            try {
                server_.push({id_, protocol::decode_client(bytes)});
            } catch (const protocol::ProtocolError& e) {
                inbound_.consume(inbound_.size());
                return fail(e.code(), e.what());
            }
            inbound_.consume(inbound_.size());
            read();
        }

        void write_next()
        {
            ws_.async_write(asio::buffer(*queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
                if (ec) return self->finish();
                self->queue_.pop_front();
                if (!self->queue_.empty()) return self->write_next();
                if (self->closing_) self->close();
            });
        }

        void close()
        {
            ws_.async_close(close_reason_, [self = shared_from_this()](beast::error_code) { self->finish(); });
        }

        void finish()
        {
            if (finished_) return;
            finished_ = true;
            closing_ = true;
            queue_.clear();
            if (server_.sessions.erase(id_)) server_.push({id_, Disconnect{}});
        }

        Impl& server_;
        ws::stream<beast::tcp_stream> ws_;
        std::uint64_t id_;
        beast::flat_buffer buffer_;
        beast::flat_buffer inbound_;
        http::request<http::string_body> request_;
        std::deque<Bytes> queue_;
        ws::close_reason close_reason_;
        bool closing_ = false;
        bool finished_ = false;
    };

    void accept()
    {
        acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
            if (ec) return;
            std::make_shared<Session>(*this, std::move(socket), next_id++)->start();
            accept();
        });
    }

    void reply(std::uint64_t session, ErrorCode code, std::string msg)
    {
        auto bytes = std::make_shared<std::vector<std::uint8_t>>(protocol::encode_error(code, msg));
        asio::post(io, [this, session, bytes] {
            if (auto it = sessions.find(session); it != sessions.end()) it->second->send(bytes, false);
        });
    }

    void broadcast(Bytes frame)
    {
        asio::post(io, [this, frame] {
            for (auto& [id, s] : sessions) s->send(frame, true);
        });
    }

    /// Applies queued interaction in arrival order. Runs on the simulation thread.
    void drain(std::optional<std::uint64_t>& owner)
    {
        std::vector<Command> batch;
        {
            std::lock_guard lock(inbox_mutex);
            batch.swap(inbox);
        }
        for (auto& cmd : batch) {
            if (std::holds_alternative<Disconnect>(cmd.body)) {
                if (owner == cmd.session) {
                    sim.release();
                    owner.reset();
                }
                continue;
            }
            const auto& msg = std::get<protocol::ClientMessage>(cmd.body);
            const bool held_by_other = owner && *owner != cmd.session;
            if (const auto* g = std::get_if<protocol::GrabMsg>(&msg)) {
                if (held_by_other) {
                    reply(cmd.session, ErrorCode::NotOwner, "interaction is owned by another session");
                } else if (sim.grab(g->origin.cast<double>(), g->direction.cast<double>(), g->radius)) {
                    owner = cmd.session;
                } else {
                    reply(cmd.session, ErrorCode::Miss, "no particle near the ray");
                }
            } else if (const auto* d = std::get_if<protocol::DragMsg>(&msg)) {
                if (owner != cmd.session)
                    reply(cmd.session, ErrorCode::NotOwner, "drag without a grab held by this session");
                else
                    sim.drag(d->target.cast<double>());
            } else if (std::holds_alternative<protocol::ReleaseMsg>(msg)) {
                if (owner != cmd.session) {
                    reply(cmd.session, ErrorCode::NotOwner, "release without a grab held by this session");
                } else {
                    sim.release();
                    owner.reset();
                }
            } else if (const auto* s = std::get_if<protocol::SpawnMsg>(&msg)) {
                if (held_by_other)
                    reply(cmd.session, ErrorCode::NotOwner, "interaction is owned by another session");
                else
                    sim.spawn_projectile(s->radius, s->mass, s->origin.cast<double>(), s->velocity.cast<double>());
            }
        }
    }

    void run_simulation()
    {
        using clock = std::chrono::steady_clock;
        const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(sim.world().config.dt));
        auto next = clock::now();
        std::optional<std::uint64_t> owner;
        broadcast(std::make_shared<std::vector<std::uint8_t>>(protocol::encode_frame(sim.world())));
        while (!stopping) {
            drain(owner);
            try {
                sim.advance();
            } catch (const std::exception& e) {
                spdlog::error("simulation stopped: {}", e.what());
                std::lock_guard lock(state_mutex);
                fault = e.what();
                break;
            }
            broadcast(std::make_shared<std::vector<std::uint8_t>>(protocol::encode_frame(sim.world())));
            count(&ServerStats::frames);
            if (options.duration > 0 && sim.time() >= options.duration - 1e-9) break;
            if (options.realtime) {
                next += period;
                std::this_thread::sleep_until(next);
                if (clock::now() > next + 10 * period) next = clock::now();
            }
        }
        std::lock_guard lock(state_mutex);
        done = true;
        done_cv.notify_all();
    }

    void shutdown()
    {
        if (stopping.exchange(true)) return;
        if (sim_thread.joinable()) sim_thread.join();
        asio::post(io, [this] {
            beast::error_code ignored;
            acceptor.close(ignored);
            auto copy = sessions;
            for (auto& [id, s] : copy) s->shutdown();
        });
        // Give closing handshakes a moment before tearing the loop down.
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        io.stop();
        if (net_thread.joinable()) net_thread.join();
        std::lock_guard lock(state_mutex);
        done = true;
        done_cv.notify_all();
    }
};

Server::Server(Simulation& sim, ServeOptions options) : impl_(std::make_unique<Impl>(sim, std::move(options))) {}

Server::~Server() { stop(); }

std::uint16_t Server::start()
{
    auto& s = *impl_;
    if (s.net_thread.joinable()) throw StateError("server already started");
    s.init = std::make_shared<std::vector<std::uint8_t>>(protocol::encode_init(s.sim));
    const tcp::endpoint ep(asio::ip::make_address(s.options.address), s.options.port);
    s.acceptor.open(ep.protocol());
    s.acceptor.set_option(asio::socket_base::reuse_address(true));
    s.acceptor.bind(ep);
    s.acceptor.listen();
    const auto port = s.acceptor.local_endpoint().port();
    s.accept();
    s.net_thread = std::thread([&s] { s.io.run(); });
    s.sim_thread = std::thread([&s] { s.run_simulation(); });
    spdlog::info("serving {} on ws://{}:{}", s.sim.bundle().name, s.options.address, port);
    return port;
}

void Server::wait()
{
    std::unique_lock lock(impl_->state_mutex);
    impl_->done_cv.wait(lock, [&] { return impl_->done; });
}

bool Server::wait_for(std::chrono::milliseconds timeout)
{
    std::unique_lock lock(impl_->state_mutex);
    return impl_->done_cv.wait_for(lock, timeout, [&] { return impl_->done; });
}

void Server::stop() { impl_->shutdown(); }

ServerStats Server::stats() const
{
    std::lock_guard lock(impl_->state_mutex);
    return impl_->stats;
}

std::optional<std::string> Server::fault() const
{
    std::lock_guard lock(impl_->state_mutex);
    return impl_->fault;
}

} // namespace splatdyn
