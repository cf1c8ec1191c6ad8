#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "cds/envelope.hpp"
#include "cds/random.hpp"

namespace cds::net {

// Blocking byte stream. The protocol layer is transport-agnostic: the sim
// harness swaps this for an in-memory pair, nothing above changes.
class Channel {
public:
    virtual ~Channel() = default;
    // Returns 0 on orderly EOF; throws CdsError(upstream) on transport faults.
    virtual std::size_t read_some(std::uint8_t* buf, std::size_t len) = 0;
    virtual void write_all(ByteView bytes) = 0;
    virtual void close() = 0;
};

// ---------------------------------------------------------------------------
// Server-side session plumbing
// ---------------------------------------------------------------------------

class ServerSession {
public:
    virtual ~ServerSession() = default;
    virtual std::vector<wire::Envelope> on_envelope(const wire::Envelope& env) = 0;
    // A complete-but-bad frame arrived (parse/protocol/too-large).
    virtual std::vector<wire::Envelope> on_decode_error(wire::DecodeStatus status) = 0;
};

class SessionFactory {
public:
    virtual ~SessionFactory() = default;
    virtual std::unique_ptr<ServerSession> open_session() = 0;
};

// Observation hooks; the sim harness uses them to build transcripts.
struct ConnectionTaps {
    std::function<void(bool inbound, const wire::Envelope&)> envelope;
    std::function<void(wire::DecodeStatus)> decode_error;
};

// Frames bytes in, frames bytes out. Shared verbatim by the TCP server loop
// and the in-memory harness links.
class ConnectionDriver {
public:
    ConnectionDriver(std::unique_ptr<ServerSession> session, ConnectionTaps taps = {});

    struct Output {
        Bytes bytes;
        bool close = false;
    };
    Output feed(ByteView bytes);

private:
    std::unique_ptr<ServerSession> session_;
    ConnectionTaps taps_;
    wire::FrameReader reader_;
    bool poisoned_ = false;
};

// ---------------------------------------------------------------------------
// Client-side request/response call, one session per request. This is the
// carrier for the MA1/MA2 exchanges.
// ---------------------------------------------------------------------------

class Requester {
public:
    virtual ~Requester() = default;
    // Sends the request on a fresh session and returns the answering envelope
    // (the matching response type or ERROR). Transport faults throw
    // CdsError(upstream).
    virtual wire::Envelope call(wire::MessageType type, wire::Json payload) = 0;
};

// Validates that `resp` answers `req`: matching session, matching type (or
// ERROR). Throws CdsError(protocol) otherwise.
void check_response_shape(const wire::Envelope& req, const wire::Envelope& resp);

// Raises CdsError carrying the remote code when env is an ERROR envelope.
void throw_if_error(const wire::Envelope& env);

// ---------------------------------------------------------------------------
// TCP / TLS
// ---------------------------------------------------------------------------

struct TlsServerConfig {
    std::string cert_path;
    std::string key_path;
};

struct TlsClientConfig {
    std::string ca_path;  // peer certificate must chain to this
};

class TlsContext;

// "host:port" for IPv4/hostname endpoints.
struct Endpoint {
    std::string host;
    std::uint16_t port = 0;

    static Endpoint parse(const std::string& text);
    std::string str() const { return host + ":" + std::to_string(port); }
};

std::unique_ptr<Channel> tcp_connect(const Endpoint& ep);
std::unique_ptr<Channel> tls_connect(const Endpoint& ep, const TlsClientConfig& tls);

class TcpServer {
public:
    // Binds immediately (port 0 picks an ephemeral port); serving starts on
    // start(). With a TLS config every accepted connection must handshake.
    TcpServer(const Endpoint& listen, SessionFactory& factory,
              std::optional<TlsServerConfig> tls = std::nullopt);
    ~TcpServer();

    void start();
    void stop();
    std::uint16_t port() const { return port_; }

private:
    void accept_loop();
    void serve(std::unique_ptr<Channel> ch);

    SessionFactory& factory_;
    std::shared_ptr<TlsContext> tls_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> running_{false};
    std::thread accept_thread_;
    std::mutex workers_mu_;
    std::vector<std::thread> workers_;
};

// Self-signed server certificate for lab setups and tests.
struct PemIdentity {
    std::string cert_pem;
    std::string key_pem;
};
PemIdentity make_self_signed_identity(const std::string& common_name);

// TCP/TLS-backed Requester; opens one connection per call.
class NetRequester : public Requester {
public:
    NetRequester(Endpoint ep, RandomSource& rng, std::optional<TlsClientConfig> tls = std::nullopt)
        : ep_(std::move(ep)), rng_(rng), tls_(std::move(tls)) {}

    wire::Envelope call(wire::MessageType type, wire::Json payload) override;

private:
    Endpoint ep_;
    RandomSource& rng_;
    std::optional<TlsClientConfig> tls_;
};

// Reads exactly one envelope off a channel. nullopt on clean EOF before any
// byte; throws on mid-frame EOF or malformed data.
std::optional<wire::Envelope> read_envelope(Channel& ch, wire::FrameReader& reader);

}  // namespace cds::net
