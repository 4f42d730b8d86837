#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "mmpir/protocol.hpp"
#include "mmpir/serialize.hpp"

namespace mmpir {

struct Endpoint {
    std::string host;
    std::uint16_t port = 0;
};

/// Parses "host:port".
Endpoint parse_endpoint(const std::string &text);

/// Library file ("PIRL" format): magic, version 1, q, K, L as 4-byte
/// unsigned little-endian, then K*L field elements row-major.
void write_library_file(const std::string &path, const Library &library, FieldModulus modulus);

struct LoadedLibrary {
    Library library;
    FieldModulus modulus;
};
LoadedLibrary read_library_file(const std::string &path);

/// One PIR server: answers one QUERY (or HELLO) per connection against a
/// read-only library. Connections are served concurrently; nothing is
/// retained between them.
class PirServer {
public:
    PirServer(Library library, FieldModulus modulus, const std::string &host,
              std::uint16_t port);
    ~PirServer();

    PirServer(const PirServer &) = delete;
    PirServer &operator=(const PirServer &) = delete;

    std::uint16_t port() const { return port_; }

    /// Blocking accept loop; returns after stop().
    void run();

    /// Starts run() on a background thread.
    void start();

    void stop();

private:
    void handle_connection(int fd);

    Library library_;
    FieldModulus modulus_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread accept_thread_;
    std::mutex workers_mutex_;
    std::vector<std::thread> workers_;
};

/// One-shot client exchange: connect, send one message, read one reply.
WireMessage exchange_message(const Endpoint &endpoint, const WireMessage &message);

/// Networked exchange: sends query n to endpoint n only, collects the
/// answers concurrently, decodes. The resulting transcript content-equals
/// the in-memory run_exchange transcript for the same seed.
Transcript fetch(const std::vector<Endpoint> &servers, const Params &params,
                 const RequestSet &request, const SideInfo &side, std::uint64_t seed);

} // namespace mmpir
