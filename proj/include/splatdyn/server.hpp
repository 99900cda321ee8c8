// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/protocol.hpp"

#include <chrono>
#include <memory>

namespace splatdyn {

struct ServeOptions {
    std::string address = "127.0.0.1";
    std::uint16_t port = 8765; ///< 0 picks a free port
    /// When non-empty, the upgrade request must carry ?token=<value>.
    std::string token;
    /// Pace the loop at dt in wall time; off runs as fast as possible.
    bool realtime = true;
    /// Stop after this much simulated time; 0 runs until stop().
    double duration = 0;
    /// Outbound frames queued per session beyond which new frames are dropped.
    std::size_t frame_queue_cap = 4;
};

struct ServerStats {
    std::uint64_t frames = 0;
    std::uint64_t frames_dropped = 0;
    std::uint64_t sessions = 0;
    std::uint64_t protocol_errors = 0;
};

/// WebSocket service over a Simulation. One thread owns the simulation and steps it; one
/// network thread runs every session. They exchange only queued messages. The first session
/// to grab owns the interaction until it releases or disconnects; the rest are spectators.
class Server {
public:
    Server(Simulation& sim, ServeOptions options);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds, starts both threads and returns the bound port.
    std::uint16_t start();
    /// Blocks until stop() or the configured duration has elapsed.
    void wait();
    /// Like wait() with a timeout; true once the service has ended.
    bool wait_for(std::chrono::milliseconds timeout);
    void stop();
    ServerStats stats() const;
    /// Set when the simulation loop ended on a fault.
    std::optional<std::string> fault() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace splatdyn
