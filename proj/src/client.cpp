#include "cds/client.hpp"

#include "cds/error.hpp"
#include "cds/payload.hpp"

namespace cds {

using wire::Envelope;
using wire::Json;
using wire::MessageType;

ClientSession::ClientSession(std::unique_ptr<net::Channel> channel, std::string session_id)
    : channel_(std::move(channel)), session_id_(std::move(session_id)) {}

ClientSession::~ClientSession() { close(); }

void ClientSession::close() {
    if (channel_) {
        channel_->close();
        channel_.reset();
    }
}

Envelope ClientSession::transact(const Envelope& req) {
    if (!channel_) fail(ErrorCode::upstream, "session closed");
    channel_->write_all(wire::encode_frame(req));
    std::optional<Envelope> resp = net::read_envelope(*channel_, reader_);
    if (!resp) fail(ErrorCode::upstream, "gateway closed the connection");
    if (last_recv_seq_ && resp->seq <= *last_recv_seq_)
        fail(ErrorCode::protocol, "gateway reused a sequence number");
    last_recv_seq_ = resp->seq;
    return *resp;
}

Envelope ClientSession::request(MessageType type, Json payload) {
    Envelope req = wire::make_envelope(type, session_id_, send_seq_++, std::move(payload));
    Envelope resp = transact(req);
    net::check_response_shape(req, resp);
    net::throw_if_error(resp);
    return resp;
}

Envelope ClientSession::send_unchecked(MessageType type, Json payload) {
    Envelope req = wire::make_envelope(type, session_id_, send_seq_++, std::move(payload));
    return transact(req);
}

std::optional<Envelope> ClientSession::inject_bytes(ByteView bytes) {
    if (!channel_) fail(ErrorCode::upstream, "session closed");
    channel_->write_all(bytes);
    Envelope out;
    // Poll whatever came back; raw injections may also kill the connection.
    try {
        std::optional<Envelope> resp = net::read_envelope(*channel_, reader_);
        if (resp && resp->seq > last_recv_seq_.value_or(0)) last_recv_seq_ = resp->seq;
        return resp;
    } catch (const CdsError&) {
        return std::nullopt;
    }
}

std::string ClientSession::register_account(const std::string& username,
                                            const std::string& password) {
    Envelope resp = request(MessageType::auth_req, Json{{"username", username},
                                                        {"password", password},
                                                        {"register", true}});
    if (!wire::require_bool(resp.payload, "ok"))
        fail(ErrorCode::auth_rejected, "registration rejected");
    authenticated_ = true;
    return username;
}

bool ClientSession::login(const std::string& username, const std::string& password) {
    Envelope resp = request(MessageType::auth_req,
                            Json{{"username", username}, {"password", password}});
    authenticated_ = wire::require_bool(resp.payload, "ok");
    return authenticated_;
}

std::string ClientSession::put(const std::string& file_name, ByteView data) {
    Envelope resp = request(MessageType::store_req,
                            Json{{"file_name", file_name}, {"data", base64_encode(data)}});
    return wire::require_string(resp.payload, "file_id");
}

ClientSession::File ClientSession::get(const std::string& file_id) {
    Envelope resp = request(MessageType::retrieve_req, Json{{"file_id", file_id}});
    return File{wire::require_string(resp.payload, "file_name"),
                wire::require_base64(resp.payload, "data")};
}

ClientSession::CheckOutcome ClientSession::check(const std::string& file_id) {
    Envelope resp = request(MessageType::check_req, Json{{"file_id", file_id}});
    CheckOutcome out;
    out.ok = wire::require_bool(resp.payload, "ok");
    for (const Json& idx : wire::require_array(resp.payload, "corrupted_indices")) {
        if (!idx.is_number_unsigned()) fail(ErrorCode::protocol, "bad corrupted_indices");
        out.corrupted_indices.push_back(idx.get<std::uint64_t>());
    }
    return out;
}

}  // namespace cds
