#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cds/client.hpp"
#include "cds/gateway.hpp"
#include "cds/provider.hpp"
#include "cds/ttp.hpp"

namespace cds::sim {

// ---------------------------------------------------------------------------
// Transcript: every envelope on every link, in delivery order. Two runs with
// the same seed and script render to identical text.
// ---------------------------------------------------------------------------

struct TranscriptEntry {
    enum class Kind { envelope, decode_error, event };
    Kind kind = Kind::event;
    std::string link;
    bool inbound = false;  // toward the serving side
    wire::Envelope envelope;
    std::string detail;
};

class Transcript {
public:
    void record_envelope(const std::string& link, bool inbound, const wire::Envelope& env);
    void record_decode_error(const std::string& link, wire::DecodeStatus status);
    void record_event(std::string text);

    const std::vector<TranscriptEntry>& entries() const { return entries_; }
    std::string text() const;

    // Checks that on every link each request got exactly one answer, in
    // order. Returns an empty string or the first violation.
    std::string pairing_violation() const;

private:
    std::vector<TranscriptEntry> entries_;
};

// ---------------------------------------------------------------------------
// SimWorld: gateway + TTP + provider in one process over in-memory links that
// still run the full frame codec. Single-threaded, FIFO per link.
// ---------------------------------------------------------------------------

struct SimOptions {
    std::uint64_t seed = 0;
    std::filesystem::path root;  // per-run scratch dir; state dirs live below
    TtpConfig ttp;               // store_root overwritten by SimWorld
    GatewayConfig gateway;       // state_dir overwritten by SimWorld
    bool provider_test_mode = true;
};

class SimWorld {
public:
    explicit SimWorld(SimOptions opts);

    // New customer connection. Sessions must be dropped before restarting the
    // gateway, as with any real connection.
    std::unique_ptr<ClientSession> connect();

    // Adversary action delivered over the wire as MA2_TAMPER.
    void tamper(const std::string& file_id, std::uint64_t fragment, std::uint64_t byte_offset,
                std::uint8_t xor_value);

    void restart_ttp();
    void restart_gateway();

    GatewayService& gateway() { return *gateway_; }
    TtpService& ttp() { return *ttp_; }
    ProviderService& provider() { return *provider_; }
    Transcript& transcript() { return transcript_; }

    const std::filesystem::path& provider_root() const { return provider_root_; }
    const std::filesystem::path& ttp_root() const { return ttp_root_; }
    const std::filesystem::path& gateway_root() const { return gateway_root_; }

private:
    class SimRequester;

    SimOptions opts_;
    Transcript transcript_;
    std::filesystem::path provider_root_, ttp_root_, gateway_root_;

    std::unique_ptr<DeterministicRandom> ttp_rng_, gateway_rng_, client_id_rng_, adv_id_rng_;
    std::unique_ptr<SimRequester> to_provider_, to_ttp_;
    std::unique_ptr<ProviderService> provider_;
    std::unique_ptr<TtpService> ttp_;
    std::unique_ptr<GatewayService> gateway_;
    int ttp_incarnation_ = 0, gateway_incarnation_ = 0;
    int client_counter_ = 0, adv_counter_ = 0;
};

// ---------------------------------------------------------------------------
// Scenarios: structured-text scripts with inline expectations.
// ---------------------------------------------------------------------------

struct Scenario {
    std::string name;
    std::uint64_t seed = 0;
    wire::Json config = wire::Json::object();  // flat key overrides
    std::vector<wire::Json> steps;

    static Scenario from_json(const wire::Json& j);
    static Scenario load_file(const std::filesystem::path& path);
};

struct ScenarioResult {
    bool passed = false;
    std::string failure;  // first diverging step, empty when passed
    std::string transcript;
};

// Runs the script in a fresh SimWorld under work_root. Also enforces the
// standing checks: request/response pairing and no plaintext in any store.
ScenarioResult run_scenario(const Scenario& scenario, const std::filesystem::path& work_root);

// ---------------------------------------------------------------------------
// Decoder fuzzing
// ---------------------------------------------------------------------------

struct FuzzReport {
    std::size_t inputs = 0;
    std::size_t crashes = 0;
    std::map<std::string, std::size_t> statuses;
};

FuzzReport fuzz_decoder(std::size_t n, std::uint64_t seed);

// 8-byte-window containment scan: true if any window of `needle` occurs in
// any file under `haystack_dirs`. Needles shorter than 8 bytes are skipped.
bool plaintext_leaked(const std::vector<Bytes>& needles,
                      const std::vector<std::filesystem::path>& haystack_dirs);

}  // namespace cds::sim
