#include "mmpir/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <future>

#include "mmpir/serialize.hpp"

namespace mmpir {

namespace {

constexpr char kLibraryMagic[4] = {'P', 'I', 'R', 'L'};
constexpr std::uint32_t kLibraryVersion = 1;

void write_u32_le(std::ostream &out, std::uint32_t v) {
    const std::uint8_t bytes[4] = {
        static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
        static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 24)};
    out.write(reinterpret_cast<const char *>(bytes), 4);
}

std::uint32_t read_u32_le(std::istream &in) {
    std::uint8_t bytes[4];
    in.read(reinterpret_cast<char *>(bytes), 4);
    if (!in) throw Error("library file truncated");
    return std::uint32_t(bytes[0]) | std::uint32_t(bytes[1]) << 8 |
           std::uint32_t(bytes[2]) << 16 | std::uint32_t(bytes[3]) << 24;
}

class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    ~Socket() { close_now(); }
    Socket(Socket &&other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
    Socket &operator=(Socket &&other) noexcept {
        if (this != &other) {
            close_now();
            fd_ = other.fd_;
            other.fd_ = -1;
        }
        return *this;
    }
    Socket(const Socket &) = delete;
    Socket &operator=(const Socket &) = delete;

    int fd() const { return fd_; }
    int release() {
        int fd = fd_;
        fd_ = -1;
        return fd;
    }
    void close_now() {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

private:
    int fd_ = -1;
};

void write_all(int fd, const std::uint8_t *data, std::size_t size) {
    while (size > 0) {
        ssize_t n = ::send(fd, data, size, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw NetworkError(std::string("send failed: ") + std::strerror(errno));
        }
        data += n;
        size -= static_cast<std::size_t>(n);
    }
}

bool read_all(int fd, std::uint8_t *data, std::size_t size) {
    while (size > 0) {
        ssize_t n = ::recv(fd, data, size, 0);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw NetworkError(std::string("recv failed: ") + std::strerror(errno));
        }
        if (n == 0) return false; // peer closed
        data += n;
        size -= static_cast<std::size_t>(n);
    }
    return true;
}

void send_message(int fd, const WireMessage &message) {
    Bytes framed = frame_message(message);
    write_all(fd, framed.data(), framed.size());
}

/// Reads one framed message; empty optional on clean EOF before any byte.
std::optional<WireMessage> receive_message(int fd) {
    std::uint8_t header[5];
    if (!read_all(fd, header, 1)) return std::nullopt;
    if (!read_all(fd, header + 1, 4)) throw NetworkError("connection closed mid-frame");
    std::uint32_t length = std::uint32_t(header[0]) | std::uint32_t(header[1]) << 8 |
                           std::uint32_t(header[2]) << 16 | std::uint32_t(header[3]) << 24;
    std::uint8_t kind = header[4];
    if (length > kMaxFrameBytes) throw NetworkError("oversized frame");
    if (kind > static_cast<std::uint8_t>(MessageKind::Error))
        throw NetworkError("unknown message kind");
    WireMessage message;
    message.kind = static_cast<MessageKind>(kind);
    message.payload.resize(length);
    if (length > 0 && !read_all(fd, message.payload.data(), length))
        throw NetworkError("connection closed mid-frame");
    return message;
}

Socket connect_to(const Endpoint &endpoint) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo *result = nullptr;
    const std::string port = std::to_string(endpoint.port);
    int rc = ::getaddrinfo(endpoint.host.c_str(), port.c_str(), &hints, &result);
    if (rc != 0)
        throw NetworkError("cannot resolve " + endpoint.host + ": " + gai_strerror(rc));
    Socket sock;
    std::string last_error = "no addresses";
    for (addrinfo *ai = result; ai != nullptr; ai = ai->ai_next) {
        Socket candidate(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
        if (candidate.fd() < 0) {
            last_error = std::strerror(errno);
            continue;
        }
        if (::connect(candidate.fd(), ai->ai_addr, ai->ai_addrlen) == 0) {
            sock = std::move(candidate);
            break;
        }
        last_error = std::strerror(errno);
    }
    ::freeaddrinfo(result);
    if (sock.fd() < 0)
        throw NetworkError("cannot connect to " + endpoint.host + ":" + port + ": " +
                           last_error);
    return sock;
}

} // namespace

Endpoint parse_endpoint(const std::string &text) {
    const std::size_t colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
        throw UsageError("endpoint must look like host:port");
    Endpoint ep;
    ep.host = text.substr(0, colon);
    unsigned long port = std::stoul(text.substr(colon + 1));
    if (port == 0 && text.substr(colon + 1) != "0")
        throw UsageError("invalid endpoint port");
    if (port > 65535) throw UsageError("endpoint port out of range");
    ep.port = static_cast<std::uint16_t>(port);
    return ep;
}

void write_library_file(const std::string &path, const Library &library, FieldModulus modulus) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path + " for writing");
    out.write(kLibraryMagic, 4);
    write_u32_le(out, kLibraryVersion);
    write_u32_le(out, modulus.q);
    write_u32_le(out, static_cast<std::uint32_t>(library.files.size()));
    const std::uint32_t file_symbols =
        library.files.empty() ? 0 : static_cast<std::uint32_t>(library.files.front().size());
    write_u32_le(out, file_symbols);
    for (const auto &file : library.files) {
        if (file.size() != file_symbols) throw UsageError("library files have uneven lengths");
        for (FieldElement v : file) write_u32_le(out, v.value);
    }
    if (!out) throw Error("write to " + path + " failed");
}

LoadedLibrary read_library_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kLibraryMagic, 4) != 0)
        throw Error(path + " is not a PIRL library file");
    if (read_u32_le(in) != kLibraryVersion) throw Error("unsupported library version");
    LoadedLibrary loaded;
    loaded.modulus = FieldModulus(read_u32_le(in));
    const std::uint32_t files = read_u32_le(in);
    const std::uint32_t file_symbols = read_u32_le(in);
    loaded.library.files.assign(files, {});
    for (auto &file : loaded.library.files) {
        file.reserve(file_symbols);
        for (std::uint32_t i = 0; i < file_symbols; ++i) {
            std::uint32_t v = read_u32_le(in);
            if (v >= loaded.modulus.q) throw Error("library symbol not reduced modulo q");
            file.push_back(FieldElement{v, loaded.modulus.q});
        }
    }
    return loaded;
}

PirServer::PirServer(Library library, FieldModulus modulus, const std::string &host,
                     std::uint16_t port)
    : library_(std::move(library)), modulus_(modulus) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo *result = nullptr;
    const std::string port_text = std::to_string(port);
    int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), port_text.c_str(), &hints,
                           &result);
    if (rc != 0) throw NetworkError("cannot resolve " + host + ": " + gai_strerror(rc));
    std::string last_error = "no addresses";
    for (addrinfo *ai = result; ai != nullptr; ai = ai->ai_next) {
        int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) {
            last_error = std::strerror(errno);
            continue;
        }
        int one = 1;
        ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 64) == 0) {
            listen_fd_ = fd;
            break;
        }
        last_error = std::strerror(errno);
        ::close(fd);
    }
    ::freeaddrinfo(result);
    if (listen_fd_ < 0)
        throw NetworkError("cannot listen on " + host + ":" + port_text + ": " + last_error);

    sockaddr_storage bound{};
    socklen_t len = sizeof(bound);
    if (::getsockname(listen_fd_, reinterpret_cast<sockaddr *>(&bound), &len) == 0) {
        if (bound.ss_family == AF_INET)
            port_ = ntohs(reinterpret_cast<sockaddr_in *>(&bound)->sin_port);
        else if (bound.ss_family == AF_INET6)
            port_ = ntohs(reinterpret_cast<sockaddr_in6 *>(&bound)->sin6_port);
    }
}

PirServer::~PirServer() { stop(); }

void PirServer::handle_connection(int raw_fd) {
    Socket sock(raw_fd);
    try {
        std::optional<WireMessage> request = receive_message(sock.fd());
        if (!request) return;
        switch (request->kind) {
        case MessageKind::Hello: {
            HelloBody body;
            body.modulus = modulus_.q;
            body.file_count = static_cast<std::uint32_t>(library_.files.size());
            body.file_symbols = library_.files.empty()
                                    ? 0
                                    : static_cast<std::uint32_t>(library_.files.front().size());
            send_message(sock.fd(), WireMessage{MessageKind::Hello, serialize_hello(body)});
            return;
        }
        case MessageKind::Query: {
            try {
                Query query = parse_query(request->payload);
                Answer answer = answer_query(library_, query);
                send_message(sock.fd(), WireMessage{MessageKind::Answer,
                                                    serialize_answer(answer, modulus_.q)});
            } catch (const MalformedQueryError &e) {
                send_message(sock.fd(),
                             WireMessage{MessageKind::Error,
                                         serialize_error({kErrMalformedQuery, e.what()})});
            } catch (const Error &e) {
                send_message(sock.fd(), WireMessage{MessageKind::Error,
                                                    serialize_error({kErrInternal, e.what()})});
            }
            return;
        }
        default:
            send_message(sock.fd(),
                         WireMessage{MessageKind::Error,
                                     serialize_error({kErrBadFrame, "unexpected message kind"})});
            return;
        }
    } catch (const Error &) {
        // Oversized or broken frame: drop the connection.
    }
}

void PirServer::run() {
    while (!stopping_.load()) {
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (errno == EINTR) continue;
            if (stopping_.load()) break;
            if (errno == EBADF || errno == EINVAL) break;
            continue;
        }
        std::lock_guard<std::mutex> lock(workers_mutex_);
        workers_.emplace_back([this, fd] { handle_connection(fd); });
    }
}

void PirServer::start() {
    accept_thread_ = std::thread([this] { run(); });
}

void PirServer::stop() {
    bool expected = false;
    if (stopping_.compare_exchange_strong(expected, true)) {
        if (listen_fd_ >= 0) {
            ::shutdown(listen_fd_, SHUT_RDWR);
            ::close(listen_fd_);
            listen_fd_ = -1;
        }
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    std::lock_guard<std::mutex> lock(workers_mutex_);
    for (std::thread &t : workers_)
        if (t.joinable()) t.join();
    workers_.clear();
}

WireMessage exchange_message(const Endpoint &endpoint, const WireMessage &message) {
    Socket sock = connect_to(endpoint);
    send_message(sock.fd(), message);
    std::optional<WireMessage> reply = receive_message(sock.fd());
    if (!reply) throw NetworkError("peer closed the connection without replying");
    return *reply;
}

Transcript fetch(const std::vector<Endpoint> &servers, const Params &params,
                 const RequestSet &request, const SideInfo &side, std::uint64_t seed) {
    if (servers.size() != params.servers)
        throw UsageError("need exactly one endpoint per server");

    const SchemePlan plan = plan_scheme(params);
    const Randomness randomness = draw_randomness(params, seed);
    std::vector<Query> queries = build_queries(params, request, side.indices, randomness);

    // Each query goes to its own server only; all are issued concurrently.
    std::vector<std::future<Answer>> pending;
    pending.reserve(params.servers);
    for (std::uint32_t n = 0; n < params.servers; ++n) {
        pending.push_back(std::async(std::launch::async, [&, n]() -> Answer {
            Socket sock;
            try {
                sock = connect_to(servers[n]);
            } catch (const NetworkError &e) {
                throw NetworkError("server " + std::to_string(n) + " (" + servers[n].host +
                                   ":" + std::to_string(servers[n].port) + "): " + e.what());
            }
            send_message(sock.fd(), WireMessage{MessageKind::Query, serialize_query(queries[n])});
            std::optional<WireMessage> reply = receive_message(sock.fd());
            if (!reply)
                throw NetworkError("server " + std::to_string(n) + " closed the connection");
            if (reply->kind == MessageKind::Error) {
                ErrorBody body = parse_error(reply->payload);
                throw NetworkError("server " + std::to_string(n) + " replied error " +
                                   std::to_string(body.code) + ": " + body.message);
            }
            if (reply->kind != MessageKind::Answer)
                throw NetworkError("server " + std::to_string(n) + " sent an unexpected kind");
            return parse_answer(reply->payload);
        }));
    }

    std::vector<Answer> answers;
    answers.reserve(params.servers);
    for (auto &future : pending) answers.push_back(future.get());

    Transcript transcript;
    transcript.params = params;
    transcript.request = request.indices;
    transcript.side_indices = side.indices;
    transcript.seed = seed;
    transcript.queries = std::move(queries);
    transcript.answers = std::move(answers);
    transcript.decoded =
        decode(params, transcript.queries, transcript.answers, request, side, randomness);
    transcript.downloaded_symbols =
        std::uint64_t(params.servers) * plan.answer_chunks * params.chunk_symbols;
    transcript.achieved_load =
        Rational(static_cast<std::int64_t>(transcript.downloaded_symbols),
                 static_cast<std::int64_t>(params.requests) * params.file_symbols());
    transcript.optimal_claimed = params.high_regime();
    return transcript;
}

} // namespace mmpir
