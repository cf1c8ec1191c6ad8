#include "cds/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <openssl/err.h>
#include <openssl/pem.h>
#include <openssl/ssl.h>
#include <openssl/x509v3.h>

#include <csignal>
#include <cstring>

#include "cds/bytes.hpp"
#include "cds/error.hpp"

namespace cds::net {

using wire::DecodeStatus;
using wire::Envelope;
using wire::FrameReader;
using wire::MessageType;

// ---------------------------------------------------------------------------
// ConnectionDriver
// ---------------------------------------------------------------------------

ConnectionDriver::ConnectionDriver(std::unique_ptr<ServerSession> session, ConnectionTaps taps)
    : session_(std::move(session)), taps_(std::move(taps)) {}

ConnectionDriver::Output ConnectionDriver::feed(ByteView bytes) {
    Output out;
    if (poisoned_) {
        out.close = true;
        return out;
    }
    reader_.feed(bytes);

    for (;;) {
        Envelope env;
        DecodeStatus status = reader_.next(env);
        if (status == DecodeStatus::need_more_data) break;

        std::vector<Envelope> responses;
        if (status == DecodeStatus::ok) {
            if (taps_.envelope) taps_.envelope(true, env);
            responses = session_->on_envelope(env);
        } else {
            if (taps_.decode_error) taps_.decode_error(status);
            responses = session_->on_decode_error(status);
            if (status == DecodeStatus::frame_too_large) {
                // Length prefix can no longer be trusted; drop the stream.
                poisoned_ = true;
                out.close = true;
            }
        }
        for (const Envelope& r : responses) {
            if (taps_.envelope) taps_.envelope(false, r);
            Bytes frame = wire::encode_frame(r);
            out.bytes.insert(out.bytes.end(), frame.begin(), frame.end());
        }
        if (out.close) break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Request/response helpers
// ---------------------------------------------------------------------------

void check_response_shape(const Envelope& req, const Envelope& resp) {
    if (resp.type == MessageType::error) return;  // any exchange may end in ERROR
    if (resp.type != wire::response_for(req.type) || resp.session_id != req.session_id)
        fail(ErrorCode::protocol, "response does not answer the request");
}

void throw_if_error(const Envelope& env) {
    if (env.type != MessageType::error) return;
    std::string code = env.payload.value("code", "INTERNAL");
    std::string message = env.payload.value("message", "");
    throw CdsError(error_code_from_name(code), message);
}

std::optional<Envelope> read_envelope(Channel& ch, FrameReader& reader) {
    for (;;) {
        Envelope env;
        DecodeStatus status = reader.next(env);
        if (status == DecodeStatus::ok) return env;
        if (status != DecodeStatus::need_more_data)
            fail(ErrorCode::protocol, std::string("bad frame from peer: ") +
                                          std::string(wire::decode_status_name(status)));

        std::uint8_t buf[16384];
        std::size_t n = ch.read_some(buf, sizeof(buf));
        if (n == 0) {
            if (reader.buffered() > 0) fail(ErrorCode::upstream, "connection closed mid-frame");
            return std::nullopt;
        }
        reader.feed(ByteView(buf, n));
    }
}

// ---------------------------------------------------------------------------
// Plain TCP
// ---------------------------------------------------------------------------

namespace {

struct FdCloser {
    int fd = -1;
    ~FdCloser() {
        if (fd >= 0) ::close(fd);
    }
    int release() {
        int f = fd;
        fd = -1;
        return f;
    }
};

class TcpChannel final : public Channel {
public:
    explicit TcpChannel(int fd) : fd_(fd) {}
    ~TcpChannel() override { close(); }

    std::size_t read_some(std::uint8_t* buf, std::size_t len) override {
        for (;;) {
            ssize_t n = ::recv(fd_, buf, len, 0);
            if (n >= 0) return static_cast<std::size_t>(n);
            if (errno == EINTR) continue;
            fail(ErrorCode::upstream, std::string("recv: ") + std::strerror(errno));
        }
    }

    void write_all(ByteView bytes) override {
        std::size_t off = 0;
        while (off < bytes.size()) {
            ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) continue;
                fail(ErrorCode::upstream, std::string("send: ") + std::strerror(errno));
            }
            off += static_cast<std::size_t>(n);
        }
    }

    void close() override {
        if (fd_ >= 0) {
            ::shutdown(fd_, SHUT_RDWR);
            ::close(fd_);
            fd_ = -1;
        }
    }

    int fd() const { return fd_; }

private:
    int fd_;
};

int resolve_and_connect(const Endpoint& ep) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    std::string port = std::to_string(ep.port);
    if (getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res) != 0 || res == nullptr)
        fail(ErrorCode::upstream, "cannot resolve " + ep.str());

    int fd = -1;
    for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    freeaddrinfo(res);
    if (fd < 0) fail(ErrorCode::upstream, "cannot connect to " + ep.str());
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return fd;
}

}  // namespace

Endpoint Endpoint::parse(const std::string& text) {
    std::size_t colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= text.size())
        fail(ErrorCode::invalid_argument, "endpoint must be host:port: " + text);
    Endpoint ep;
    ep.host = text.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(text.substr(colon + 1));
    } catch (const std::logic_error&) {
        port = -1;
    }
    if (port < 0 || port > 65535)
        fail(ErrorCode::invalid_argument, "bad port in endpoint: " + text);
    ep.port = static_cast<std::uint16_t>(port);
    return ep;
}

std::unique_ptr<Channel> tcp_connect(const Endpoint& ep) {
    return std::make_unique<TcpChannel>(resolve_and_connect(ep));
}

// ---------------------------------------------------------------------------
// TLS
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void fail_openssl(const std::string& what) {
    unsigned long err = ERR_get_error();
    char buf[256] = {0};
    if (err != 0) ERR_error_string_n(err, buf, sizeof(buf));
    fail(ErrorCode::upstream, what + (buf[0] ? std::string(": ") + buf : ""));
}

}  // namespace

class TlsContext {
public:
    static std::shared_ptr<TlsContext> server(const TlsServerConfig& cfg) {
        auto ctx = std::shared_ptr<TlsContext>(new TlsContext(TLS_server_method()));
        if (SSL_CTX_use_certificate_chain_file(ctx->ctx_, cfg.cert_path.c_str()) != 1)
            fail_openssl("cannot load TLS certificate " + cfg.cert_path);
        if (SSL_CTX_use_PrivateKey_file(ctx->ctx_, cfg.key_path.c_str(), SSL_FILETYPE_PEM) != 1)
            fail_openssl("cannot load TLS key " + cfg.key_path);
        if (SSL_CTX_check_private_key(ctx->ctx_) != 1)
            fail_openssl("TLS key does not match certificate");
        return ctx;
    }

    static std::shared_ptr<TlsContext> client(const TlsClientConfig& cfg) {
        auto ctx = std::shared_ptr<TlsContext>(new TlsContext(TLS_client_method()));
        if (SSL_CTX_load_verify_locations(ctx->ctx_, cfg.ca_path.c_str(), nullptr) != 1)
            fail_openssl("cannot load TLS CA " + cfg.ca_path);
        SSL_CTX_set_verify(ctx->ctx_, SSL_VERIFY_PEER, nullptr);
        return ctx;
    }

    ~TlsContext() { SSL_CTX_free(ctx_); }

    SSL_CTX* get() const { return ctx_; }

private:
    explicit TlsContext(const SSL_METHOD* method) : ctx_(SSL_CTX_new(method)) {
        if (!ctx_) fail_openssl("SSL_CTX_new");
        SSL_CTX_set_min_proto_version(ctx_, TLS1_2_VERSION);
        SSL_CTX_set_mode(ctx_, SSL_MODE_AUTO_RETRY);
    }

    SSL_CTX* ctx_;
};

namespace {

class TlsChannel final : public Channel {
public:
    // Takes ownership of the fd; ctx kept alive for the SSL lifetime.
    TlsChannel(int fd, std::shared_ptr<TlsContext> ctx, bool server_side)
        : fd_(fd), ctx_(std::move(ctx)), ssl_(SSL_new(ctx_->get())) {
        if (!ssl_) fail_openssl("SSL_new");
        SSL_set_fd(ssl_, fd_);
        int rc = server_side ? SSL_accept(ssl_) : SSL_connect(ssl_);
        if (rc != 1) {
            std::string what = server_side ? "TLS accept failed" : "TLS connect failed";
            SSL_free(ssl_);
            ssl_ = nullptr;
            ::close(fd_);
            fd_ = -1;
            fail_openssl(what);
        }
    }

    ~TlsChannel() override { close(); }

    std::size_t read_some(std::uint8_t* buf, std::size_t len) override {
        int n = SSL_read(ssl_, buf, static_cast<int>(len));
        if (n > 0) return static_cast<std::size_t>(n);
        int err = SSL_get_error(ssl_, n);
        if (err == SSL_ERROR_ZERO_RETURN) return 0;  // clean TLS shutdown
        if (err == SSL_ERROR_SYSCALL && n == 0) return 0;
        fail(ErrorCode::upstream, "TLS read failed");
    }

    void write_all(ByteView bytes) override {
        std::size_t off = 0;
        while (off < bytes.size()) {
            int n = SSL_write(ssl_, bytes.data() + off, static_cast<int>(bytes.size() - off));
            if (n <= 0) fail(ErrorCode::upstream, "TLS write failed");
            off += static_cast<std::size_t>(n);
        }
    }

    void close() override {
        if (ssl_) {
            SSL_shutdown(ssl_);
            SSL_free(ssl_);
            ssl_ = nullptr;
        }
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

private:
    int fd_;
    std::shared_ptr<TlsContext> ctx_;
    SSL* ssl_;
};

}  // namespace

std::unique_ptr<Channel> tls_connect(const Endpoint& ep, const TlsClientConfig& tls) {
    int fd = resolve_and_connect(ep);
    return std::make_unique<TlsChannel>(fd, TlsContext::client(tls), /*server_side=*/false);
}

// ---------------------------------------------------------------------------
// TcpServer
// ---------------------------------------------------------------------------

TcpServer::TcpServer(const Endpoint& listen, SessionFactory& factory,
                     std::optional<TlsServerConfig> tls)
    : factory_(factory) {
    static bool sigpipe_ignored = [] {
        std::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)sigpipe_ignored;

    if (tls) tls_ = TlsContext::server(*tls);

    FdCloser sock{::socket(AF_INET, SOCK_STREAM, 0)};
    if (sock.fd < 0) fail(ErrorCode::internal, "socket() failed");
    int one = 1;
    setsockopt(sock.fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(listen.port);
    if (listen.host == "0.0.0.0" || listen.host.empty()) {
        addr.sin_addr.s_addr = INADDR_ANY;
    } else if (inet_pton(AF_INET, listen.host.c_str(), &addr.sin_addr) != 1) {
        if (listen.host == "localhost") {
            inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
        } else {
            fail(ErrorCode::invalid_argument, "listen host must be an IPv4 address");
        }
    }
    if (::bind(sock.fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
        fail(ErrorCode::internal, "bind " + listen.str() + ": " + std::strerror(errno));
    if (::listen(sock.fd, 64) != 0) fail(ErrorCode::internal, "listen() failed");

    sockaddr_in bound{};
    socklen_t blen = sizeof(bound);
    getsockname(sock.fd, reinterpret_cast<sockaddr*>(&bound), &blen);
    port_ = ntohs(bound.sin_port);
    listen_fd_ = sock.release();
}

TcpServer::~TcpServer() { stop(); }

void TcpServer::start() {
    if (running_.exchange(true)) return;
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void TcpServer::stop() {
    if (!running_.exchange(false)) {
        if (listen_fd_ >= 0) {
            ::close(listen_fd_);
            listen_fd_ = -1;
        }
        return;
    }
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
    if (accept_thread_.joinable()) accept_thread_.join();
    std::vector<std::thread> workers;
    {
        std::lock_guard<std::mutex> lock(workers_mu_);
        workers.swap(workers_);
    }
    for (auto& w : workers)
        if (w.joinable()) w.join();
}

void TcpServer::accept_loop() {
    while (running_) {
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (errno == EINTR) continue;
            break;  // listener closed by stop()
        }
        int one = 1;
        setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));

        std::unique_ptr<Channel> ch;
        try {
            if (tls_) {
                ch = std::make_unique<TlsChannel>(fd, tls_, /*server_side=*/true);
            } else {
                ch = std::make_unique<TcpChannel>(fd);
            }
        } catch (const CdsError&) {
            continue;  // handshake failure; next client
        }

        std::lock_guard<std::mutex> lock(workers_mu_);
        workers_.emplace_back([this, c = std::move(ch)]() mutable { serve(std::move(c)); });
    }
}

void TcpServer::serve(std::unique_ptr<Channel> ch) {
    ConnectionDriver driver(factory_.open_session());
    std::uint8_t buf[16384];
    try {
        for (;;) {
            std::size_t n = ch->read_some(buf, sizeof(buf));
            if (n == 0) break;
            ConnectionDriver::Output out = driver.feed(ByteView(buf, n));
            if (!out.bytes.empty()) ch->write_all(out.bytes);
            if (out.close) break;
        }
    } catch (const CdsError&) {
        // Peer vanished or wrote garbage beyond repair; nothing to answer.
    }
    ch->close();
}

// ---------------------------------------------------------------------------
// Self-signed identity
// ---------------------------------------------------------------------------

PemIdentity make_self_signed_identity(const std::string& common_name) {
    EVP_PKEY* pkey = EVP_PKEY_Q_keygen(nullptr, nullptr, "RSA", static_cast<size_t>(2048));
    if (!pkey) fail_openssl("TLS keygen failed");

    X509* cert = X509_new();
    if (!cert) {
        EVP_PKEY_free(pkey);
        fail_openssl("X509_new");
    }
    ASN1_INTEGER_set(X509_get_serialNumber(cert), static_cast<long>(::time(nullptr)));
    X509_gmtime_adj(X509_getm_notBefore(cert), 0);
    X509_gmtime_adj(X509_getm_notAfter(cert), 60L * 60 * 24 * 365);
    X509_set_pubkey(cert, pkey);

    X509_NAME* name = X509_get_subject_name(cert);
    X509_NAME_add_entry_by_txt(name, "CN", MBSTRING_ASC,
                               reinterpret_cast<const unsigned char*>(common_name.c_str()), -1,
                               -1, 0);
    X509_set_issuer_name(cert, name);

    bool ok = X509_sign(cert, pkey, EVP_sha256()) != 0;

    PemIdentity id;
    if (ok) {
        BIO* bio = BIO_new(BIO_s_mem());
        ok = PEM_write_bio_X509(bio, cert) == 1;
        if (ok) {
            char* data = nullptr;
            long len = BIO_get_mem_data(bio, &data);
            id.cert_pem.assign(data, static_cast<std::size_t>(len));
        }
        BIO_free(bio);

        bio = BIO_new(BIO_s_mem());
        ok = ok && PEM_write_bio_PrivateKey(bio, pkey, nullptr, nullptr, 0, nullptr, nullptr) == 1;
        if (ok) {
            char* data = nullptr;
            long len = BIO_get_mem_data(bio, &data);
            id.key_pem.assign(data, static_cast<std::size_t>(len));
        }
        BIO_free(bio);
    }

    X509_free(cert);
    EVP_PKEY_free(pkey);
    if (!ok) fail_openssl("self-signed certificate generation failed");
    return id;
}

// ---------------------------------------------------------------------------
// NetRequester
// ---------------------------------------------------------------------------

wire::Envelope NetRequester::call(MessageType type, wire::Json payload) {
    Envelope req = wire::make_envelope(type, to_hex(rng_.bytes(8)), 0, std::move(payload));

    std::unique_ptr<Channel> ch =
        tls_ ? tls_connect(ep_, *tls_) : tcp_connect(ep_);
    ch->write_all(wire::encode_frame(req));

    FrameReader reader;
    std::optional<Envelope> resp = read_envelope(*ch, reader);
    ch->close();
    if (!resp) fail(ErrorCode::upstream, "peer closed without answering");
    check_response_shape(req, *resp);
    return *resp;
}

}  // namespace cds::net
