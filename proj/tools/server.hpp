#pragma once

// HTTP + WebSocket front end for live sessions. See docs/protocol.md.

#include <cstdint>
#include <memory>
#include <string>

#include "clutchshape/service.hpp"

namespace clutchshape::server {

struct Options {
    std::string host = "127.0.0.1";
    std::uint16_t port = 8080;  // 0 picks a free port
    int threads = 2;
    MembraneDesign design = build_default_design();
    SolverConfig config;
};

class Server {
public:
    explicit Server(const Options& options);
    ~Server();

    std::uint16_t port() const;
    // Blocks until stop() is called (from any thread) or SIGINT/SIGTERM.
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace clutchshape::server
