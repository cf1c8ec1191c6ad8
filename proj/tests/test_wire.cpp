#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "cds/envelope.hpp"
#include "cds/session.hpp"

using namespace cds;
using namespace cds::wire;

namespace {

Envelope sample_envelope() {
    return make_envelope(MessageType::auth_req, "s-1", 0,
                         Json{{"username", "alice"}, {"password", "pw"}});
}

}  // namespace

TEST_CASE("frame length prefix matches the body") {
    Envelope e = make_envelope(MessageType::check_req, "sess", 3, Json::object());
    Bytes frame = encode_frame(e);
    REQUIRE(frame.size() >= 4);
    CHECK(be32_get(frame.data()) == frame.size() - 4);
}

TEST_CASE("decode inverts encode") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 200; ++i) {
        Envelope e;
        e.type = kAllMessageTypes[rng() % kAllMessageTypes.size()];
        e.session_id = "s" + std::to_string(rng() % 1000);
        e.seq = rng() % 100000;
        e.payload = Json{{"k", std::to_string(rng())}, {"n", rng() % 100}};
        Bytes frame = encode_frame(e);

        Envelope back;
        std::size_t consumed = 0;
        REQUIRE(decode_frame(frame, back, consumed) == DecodeStatus::ok);
        CHECK(consumed == frame.size());
        CHECK(back == e);
    }
}

TEST_CASE("oversize bodies are refused on both sides") {
    Envelope e = sample_envelope();
    e.payload["blob"] = std::string(kMaxFrameBody, 'x');
    CHECK_THROWS_AS(encode_frame(e), CdsError);

    Bytes fake(4);
    be32_put(kMaxFrameBody + 1, fake.data());
    Envelope out;
    std::size_t consumed = 0;
    CHECK(decode_frame(fake, out, consumed) == DecodeStatus::frame_too_large);
}

TEST_CASE("truncated frames ask for more data") {
    Bytes frame = encode_frame(sample_envelope());
    Envelope out;
    std::size_t consumed = 0;
    for (std::size_t cut : {std::size_t{0}, std::size_t{3}, frame.size() - 1}) {
        CHECK(decode_frame(ByteView(frame.data(), cut), out, consumed) ==
              DecodeStatus::need_more_data);
        CHECK(consumed == 0);
    }
}

TEST_CASE("malformed bodies are parse errors, unknown types protocol errors") {
    auto frame_of = [](std::string_view body) {
        Bytes f(4 + body.size());
        be32_put(static_cast<std::uint32_t>(body.size()), f.data());
        std::copy(body.begin(), body.end(), f.begin() + 4);
        return f;
    };
    Envelope out;
    std::size_t consumed = 0;

    CHECK(decode_frame(frame_of("not json"), out, consumed) == DecodeStatus::parse_error);
    CHECK(decode_frame(frame_of("[1,2,3]"), out, consumed) == DecodeStatus::parse_error);
    CHECK(decode_frame(frame_of("{\"type\":\"AUTH_REQ\"}"), out, consumed) ==
          DecodeStatus::parse_error);  // missing keys
    CHECK(decode_frame(
              frame_of("{\"type\":\"AUTH_REQ\",\"session_id\":\"s\",\"seq\":-1,\"payload\":{}}"),
              out, consumed) == DecodeStatus::parse_error);  // negative seq
    CHECK(decode_frame(
              frame_of("{\"type\":\"NOPE\",\"session_id\":\"s\",\"seq\":0,\"payload\":{}}"),
              out, consumed) == DecodeStatus::protocol_error);
    // invalid UTF-8 in the body
    std::string bad = "{\"type\":\"AUTH_REQ\",\"session_id\":\"\xff\xfe\",\"seq\":0,\"payload\":{}}";
    CHECK(decode_frame(frame_of(bad), out, consumed) == DecodeStatus::parse_error);
}

TEST_CASE("decoder is total over random noise") {
    std::mt19937_64 rng(0xfeed);
    Envelope out;
    std::size_t consumed = 0;
    for (int i = 0; i < 20000; ++i) {
        std::size_t len = rng() % 64;
        Bytes noise(len);
        for (auto& b : noise) b = static_cast<std::uint8_t>(rng());
        // First four bytes kept small often enough to exercise body parsing.
        if (len >= 4 && (rng() & 1)) {
            be32_put(static_cast<std::uint32_t>(len - 4), noise.data());
        }
        CHECK_NOTHROW(decode_frame(noise, out, consumed));
    }
}

TEST_CASE("frame reader reassembles split and coalesced frames") {
    Envelope a = make_envelope(MessageType::store_req, "s", 0, Json{{"file_name", "f"}});
    Envelope b = make_envelope(MessageType::check_req, "s", 1, Json{{"file_id", "abc"}});
    Bytes stream = encode_frame(a);
    Bytes fb = encode_frame(b);
    stream.insert(stream.end(), fb.begin(), fb.end());

    for (std::size_t chunk : {std::size_t{1}, std::size_t{3}, std::size_t{7}, stream.size()}) {
        FrameReader reader;
        std::vector<Envelope> got;
        for (std::size_t off = 0; off < stream.size(); off += chunk) {
            std::size_t n = std::min(chunk, stream.size() - off);
            reader.feed(ByteView(stream.data() + off, n));
            Envelope e;
            while (reader.next(e) == DecodeStatus::ok) got.push_back(e);
        }
        REQUIRE(got.size() == 2);
        CHECK(got[0] == a);
        CHECK(got[1] == b);
        CHECK(reader.buffered() == 0);
    }
}

TEST_CASE("request/response pairing is total over request types") {
    for (MessageType t : kAllMessageTypes) {
        if (is_request(t)) {
            MessageType r = response_for(t);
            CHECK(!is_request(r));
        }
    }
    CHECK(response_for(MessageType::auth_req) == MessageType::auth_resp);
    CHECK(response_for(MessageType::ma2_mac_challenge) == MessageType::ma2_mac_resp);
    CHECK_THROWS_AS(response_for(MessageType::error), CdsError);
}

TEST_CASE("session fsm: only AUTH_REQ is legal before authentication") {
    for (MessageType t : kAllMessageTypes) {
        bool legal = request_legal(Role::gateway, Phase::unauthenticated, t);
        CHECK(legal == (t == MessageType::auth_req));
    }
}

TEST_CASE("session fsm walks the customer phases") {
    SessionFsm fsm(Role::gateway);
    CHECK(fsm.phase() == Phase::unauthenticated);

    // store before auth: rejected, phase unchanged
    Envelope store = make_envelope(MessageType::store_req, "s", 0, Json::object());
    CHECK(fsm.accept_request(store) == ErrorCode::protocol);
    CHECK(fsm.phase() == Phase::unauthenticated);

    Envelope auth = make_envelope(MessageType::auth_req, "s", 1, Json::object());
    CHECK(!fsm.accept_request(auth));
    CHECK(fsm.phase() == Phase::in_request);
    fsm.set_authenticated(true);
    fsm.complete_request();
    CHECK(fsm.phase() == Phase::authenticated);

    Envelope check = make_envelope(MessageType::check_req, "s", 2, Json::object());
    CHECK(!fsm.accept_request(check));
    CHECK(fsm.phase() == Phase::in_request);
    fsm.complete_request();
    CHECK(fsm.phase() == Phase::authenticated);

    // re-auth after success is a protocol violation
    Envelope reauth = make_envelope(MessageType::auth_req, "s", 3, Json::object());
    CHECK(fsm.accept_request(reauth) == ErrorCode::protocol);
}

TEST_CASE("session fsm rejects replayed and reordered seq") {
    SessionFsm fsm(Role::gateway);
    Envelope auth = make_envelope(MessageType::auth_req, "s", 5, Json::object());
    CHECK(!fsm.accept_request(auth));
    fsm.set_authenticated(true);
    fsm.complete_request();

    Envelope replay = make_envelope(MessageType::store_req, "s", 5, Json::object());
    CHECK(fsm.accept_request(replay) == ErrorCode::protocol);
    Envelope reorder = make_envelope(MessageType::store_req, "s", 2, Json::object());
    CHECK(fsm.accept_request(reorder) == ErrorCode::protocol);
    Envelope fine = make_envelope(MessageType::store_req, "s", 6, Json::object());
    CHECK(!fsm.accept_request(fine));
}

TEST_CASE("session fsm pins the session id") {
    SessionFsm fsm(Role::gateway);
    CHECK(!fsm.accept_request(make_envelope(MessageType::auth_req, "alpha", 0, Json::object())));
    fsm.set_authenticated(true);
    fsm.complete_request();
    CHECK(fsm.accept_request(make_envelope(MessageType::store_req, "beta", 1, Json::object())) ==
          ErrorCode::protocol);
}

TEST_CASE("ttp and provider sessions accept only their message families") {
    SessionFsm ttp(Role::ttp);
    CHECK(ttp.phase() == Phase::idle);
    CHECK(!ttp.accept_request(make_envelope(MessageType::ma1_store, "m", 0, Json::object())));
    ttp.complete_request();
    CHECK(ttp.accept_request(make_envelope(MessageType::ma2_get, "m", 1, Json::object())) ==
          ErrorCode::protocol);

    SessionFsm provider(Role::provider);
    CHECK(!provider.accept_request(make_envelope(MessageType::ma2_put, "m", 0, Json::object())));
    provider.complete_request();
    CHECK(provider.accept_request(make_envelope(MessageType::auth_req, "m", 1, Json::object())) ==
          ErrorCode::protocol);
}
