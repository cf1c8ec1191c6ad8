#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "cds/bytes.hpp"
#include "cds/error.hpp"

namespace cds::wire {

using Json = nlohmann::json;

inline constexpr std::size_t kMaxFrameBody = 16u * 1024u * 1024u;  // 16 MiB

// Closed message-type set. MA1_* travels Gateway->TTP, MA2_* TTP->Provider;
// MA2_TAMPER is the test-mode adversary hook and is refused outside test mode.
enum class MessageType {
    auth_req,
    auth_resp,
    store_req,
    store_resp,
    retrieve_req,
    retrieve_resp,
    check_req,
    check_resp,
    ma1_store,
    ma1_store_resp,
    ma1_retrieve,
    ma1_retrieve_resp,
    ma1_check,
    ma1_check_resp,
    ma2_put,
    ma2_put_resp,
    ma2_get,
    ma2_get_resp,
    ma2_mac_challenge,
    ma2_mac_resp,
    ma2_tamper,
    ma2_tamper_resp,
    error,
};

inline constexpr std::array<MessageType, 23> kAllMessageTypes{
    MessageType::auth_req,      MessageType::auth_resp,
    MessageType::store_req,     MessageType::store_resp,
    MessageType::retrieve_req,  MessageType::retrieve_resp,
    MessageType::check_req,     MessageType::check_resp,
    MessageType::ma1_store,     MessageType::ma1_store_resp,
    MessageType::ma1_retrieve,  MessageType::ma1_retrieve_resp,
    MessageType::ma1_check,     MessageType::ma1_check_resp,
    MessageType::ma2_put,       MessageType::ma2_put_resp,
    MessageType::ma2_get,       MessageType::ma2_get_resp,
    MessageType::ma2_mac_challenge, MessageType::ma2_mac_resp,
    MessageType::ma2_tamper,    MessageType::ma2_tamper_resp,
    MessageType::error,
};

std::string_view message_type_name(MessageType t);
std::optional<MessageType> message_type_from_name(std::string_view name);

bool is_request(MessageType t);
// The unique response type answering a request; error for non-requests.
MessageType response_for(MessageType request);

// One framed wire message: 4-byte big-endian body length, then a UTF-8 JSON
// object {type, session_id, seq, payload}.
struct Envelope {
    MessageType type = MessageType::error;
    std::string session_id;
    std::uint64_t seq = 0;
    Json payload = Json::object();

    bool operator==(const Envelope&) const = default;
};

Envelope make_envelope(MessageType t, std::string session_id, std::uint64_t seq, Json payload);
Envelope make_error(std::string session_id, std::uint64_t seq, ErrorCode code,
                    std::string_view message);

// Serializes with the length prefix; bodies over 16 MiB throw frame_too_large.
Bytes encode_frame(const Envelope& env);

enum class DecodeStatus {
    ok,
    need_more_data,   // frame incomplete; feed more bytes
    frame_too_large,  // declared length over the cap; connection is poisoned
    parse_error,      // complete frame, body not a valid envelope object
    protocol_error,   // valid object, unknown message type
};

std::string_view decode_status_name(DecodeStatus s);

// Total over arbitrary byte strings; never throws. On ok / parse_error /
// protocol_error, consumed is the whole frame (prefix + body) so the caller
// can resynchronize; otherwise consumed is 0.
DecodeStatus decode_frame(ByteView buffer, Envelope& out, std::size_t& consumed);

// Incremental reader for stream transports.
class FrameReader {
public:
    void feed(ByteView bytes) { buffer_.insert(buffer_.end(), bytes.begin(), bytes.end()); }

    // ok: envelope extracted. need_more_data: wait. Error statuses consume the
    // offending frame (or poison the stream for frame_too_large).
    DecodeStatus next(Envelope& out);

    std::size_t buffered() const { return buffer_.size(); }

private:
    Bytes buffer_;
};

}  // namespace cds::wire
