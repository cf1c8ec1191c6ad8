#include "cds/envelope.hpp"

#include <cstring>
#include <utility>

namespace cds::wire {

namespace {

constexpr std::array<std::pair<MessageType, std::string_view>, 23> kTypeNames{{
    {MessageType::auth_req, "AUTH_REQ"},
    {MessageType::auth_resp, "AUTH_RESP"},
    {MessageType::store_req, "STORE_REQ"},
    {MessageType::store_resp, "STORE_RESP"},
    {MessageType::retrieve_req, "RETRIEVE_REQ"},
    {MessageType::retrieve_resp, "RETRIEVE_RESP"},
    {MessageType::check_req, "CHECK_REQ"},
    {MessageType::check_resp, "CHECK_RESP"},
    {MessageType::ma1_store, "MA1_STORE"},
    {MessageType::ma1_store_resp, "MA1_STORE_RESP"},
    {MessageType::ma1_retrieve, "MA1_RETRIEVE"},
    {MessageType::ma1_retrieve_resp, "MA1_RETRIEVE_RESP"},
    {MessageType::ma1_check, "MA1_CHECK"},
    {MessageType::ma1_check_resp, "MA1_CHECK_RESP"},
    {MessageType::ma2_put, "MA2_PUT"},
    {MessageType::ma2_put_resp, "MA2_PUT_RESP"},
    {MessageType::ma2_get, "MA2_GET"},
    {MessageType::ma2_get_resp, "MA2_GET_RESP"},
    {MessageType::ma2_mac_challenge, "MA2_MAC_CHALLENGE"},
    {MessageType::ma2_mac_resp, "MA2_MAC_RESP"},
    {MessageType::ma2_tamper, "MA2_TAMPER"},
    {MessageType::ma2_tamper_resp, "MA2_TAMPER_RESP"},
    {MessageType::error, "ERROR"},
}};

}  // namespace

std::string_view message_type_name(MessageType t) {
    for (const auto& [type, name] : kTypeNames)
        if (type == t) return name;
    return "ERROR";
}

std::optional<MessageType> message_type_from_name(std::string_view name) {
    for (const auto& [type, n] : kTypeNames)
        if (n == name) return type;
    return std::nullopt;
}

bool is_request(MessageType t) {
    switch (t) {
        case MessageType::auth_req:
        case MessageType::store_req:
        case MessageType::retrieve_req:
        case MessageType::check_req:
        case MessageType::ma1_store:
        case MessageType::ma1_retrieve:
        case MessageType::ma1_check:
        case MessageType::ma2_put:
        case MessageType::ma2_get:
        case MessageType::ma2_mac_challenge:
        case MessageType::ma2_tamper:
            return true;
        default:
            return false;
    }
}

MessageType response_for(MessageType request) {
    switch (request) {
        case MessageType::auth_req: return MessageType::auth_resp;
        case MessageType::store_req: return MessageType::store_resp;
        case MessageType::retrieve_req: return MessageType::retrieve_resp;
        case MessageType::check_req: return MessageType::check_resp;
        case MessageType::ma1_store: return MessageType::ma1_store_resp;
        case MessageType::ma1_retrieve: return MessageType::ma1_retrieve_resp;
        case MessageType::ma1_check: return MessageType::ma1_check_resp;
        case MessageType::ma2_put: return MessageType::ma2_put_resp;
        case MessageType::ma2_get: return MessageType::ma2_get_resp;
        case MessageType::ma2_mac_challenge: return MessageType::ma2_mac_resp;
        case MessageType::ma2_tamper: return MessageType::ma2_tamper_resp;
        default:
            fail(ErrorCode::internal, "response_for: not a request type");
    }
}

Envelope make_envelope(MessageType t, std::string session_id, std::uint64_t seq, Json payload) {
    Envelope e;
    e.type = t;
    e.session_id = std::move(session_id);
    e.seq = seq;
    e.payload = std::move(payload);
    return e;
}

Envelope make_error(std::string session_id, std::uint64_t seq, ErrorCode code,
                    std::string_view message) {
    return make_envelope(MessageType::error, std::move(session_id), seq,
                         Json{{"code", std::string(error_code_name(code))},
                              {"message", std::string(message)}});
}

Bytes encode_frame(const Envelope& env) {
    Json body{
        {"type", std::string(message_type_name(env.type))},
        {"session_id", env.session_id},
        {"seq", env.seq},
        {"payload", env.payload},
    };
    std::string text = body.dump();
    if (text.size() > kMaxFrameBody)
        fail(ErrorCode::frame_too_large, "frame body exceeds 16 MiB");

    Bytes out(4 + text.size());
    be32_put(static_cast<std::uint32_t>(text.size()), out.data());
    std::memcpy(out.data() + 4, text.data(), text.size());
    return out;
}

std::string_view decode_status_name(DecodeStatus s) {
    switch (s) {
        case DecodeStatus::ok: return "ok";
        case DecodeStatus::need_more_data: return "need_more_data";
        case DecodeStatus::frame_too_large: return "frame_too_large";
        case DecodeStatus::parse_error: return "parse_error";
        case DecodeStatus::protocol_error: return "protocol_error";
    }
    return "?";
}

DecodeStatus decode_frame(ByteView buffer, Envelope& out, std::size_t& consumed) {
    consumed = 0;
    if (buffer.size() < 4) return DecodeStatus::need_more_data;

    std::uint32_t body_len = be32_get(buffer.data());
    if (body_len > kMaxFrameBody) return DecodeStatus::frame_too_large;
    if (buffer.size() < 4u + body_len) return DecodeStatus::need_more_data;

    consumed = 4u + body_len;
    const char* body = reinterpret_cast<const char*>(buffer.data() + 4);

    Json parsed = Json::parse(body, body + body_len, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded() || !parsed.is_object()) return DecodeStatus::parse_error;

    auto type_it = parsed.find("type");
    auto sid_it = parsed.find("session_id");
    auto seq_it = parsed.find("seq");
    auto payload_it = parsed.find("payload");
    if (type_it == parsed.end() || !type_it->is_string() ||
        sid_it == parsed.end() || !sid_it->is_string() ||
        seq_it == parsed.end() || !seq_it->is_number_unsigned() ||
        payload_it == parsed.end() || !payload_it->is_object())
        return DecodeStatus::parse_error;

    auto type = message_type_from_name(type_it->get<std::string>());
    if (!type) return DecodeStatus::protocol_error;

    out.type = *type;
    out.session_id = sid_it->get<std::string>();
    out.seq = seq_it->get<std::uint64_t>();
    out.payload = std::move(*payload_it);
    return DecodeStatus::ok;
}

DecodeStatus FrameReader::next(Envelope& out) {
    std::size_t consumed = 0;
    DecodeStatus status = decode_frame(buffer_, out, consumed);
    if (consumed > 0) buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(consumed));
    return status;
}

}  // namespace cds::wire
