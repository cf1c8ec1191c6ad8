#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cds/envelope.hpp"
#include "cds/transport.hpp"

namespace cds {

// Customer-side protocol session over any byte channel. One request in
// flight at a time; register/login first, everything else after.
class ClientSession {
public:
    ClientSession(std::unique_ptr<net::Channel> channel, std::string session_id);
    ~ClientSession();

    // Registers and leaves the session authenticated as the new account.
    // Throws conflict when the username is taken.
    std::string register_account(const std::string& username, const std::string& password);
    // False on rejected credentials.
    bool login(const std::string& username, const std::string& password);

    std::string put(const std::string& file_name, ByteView data);

    struct File {
        std::string file_name;
        Bytes data;
    };
    File get(const std::string& file_id);

    struct CheckOutcome {
        bool ok = false;
        std::vector<std::uint64_t> corrupted_indices;
    };
    CheckOutcome check(const std::string& file_id);

    bool authenticated() const { return authenticated_; }
    const std::string& session_id() const { return session_id_; }

    // Stamped-but-arbitrary envelope; lets tests and the harness speak out of
    // turn. Returns the server's answer.
    wire::Envelope send_unchecked(wire::MessageType type, wire::Json payload);
    // Pushes raw bytes at the server and returns its answer, if any.
    std::optional<wire::Envelope> inject_bytes(ByteView bytes);

    void close();

private:
    wire::Envelope request(wire::MessageType type, wire::Json payload);
    wire::Envelope transact(const wire::Envelope& req);

    std::unique_ptr<net::Channel> channel_;
    wire::FrameReader reader_;
    std::string session_id_;
    std::uint64_t send_seq_ = 0;
    std::optional<std::uint64_t> last_recv_seq_;
    bool authenticated_ = false;
};

}  // namespace cds
