#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "evoforge/core.hpp"

namespace evoforge::mockserver {

struct MockBadRequest : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class SegmentBehavior { echo_window, fixed, none };

struct MockAnswer {
    std::string text;
    double weight = 1.0;
    bool correct = false;
};

// One question profile. Questioner templates may contain the placeholders
// {span} (replaced by a "[span:Xs--Ys]" marker covering the attached frames)
// and {profile} (replaced by "[<key>]" so solver requests can be routed back
// to this profile). Empty answer pool means wrong answers are generated
// unique per draw.
struct MockProfile {
    std::vector<MockAnswer> answer_pool;
    double p_correct_orig = 1.0;
    double p_correct_shuffled = 1.0;
    SegmentBehavior segment_behavior = SegmentBehavior::none;
    Segment fixed_segment;
    std::vector<std::string> questioner_templates;
};

struct MockScript {
    std::vector<std::pair<std::string, MockProfile>> profiles;  // ordered

    static MockScript from_json(const Json& j);
    static MockScript load_file(const std::string& path);
    Json to_json() const;
    std::vector<std::string> validate() const;
};

// Scripted model behind the OpenAI chat-completions wire format. Responses are
// a pure function of (seed, request body bytes), so arrival order and HTTP
// transport never affect them.
class MockModel {
public:
    MockModel(MockScript script, std::uint64_t seed);

    // Takes the raw request body, returns the serialized wire response.
    // Throws MockBadRequest on malformed requests.
    std::string respond(const std::string& request_body) const;

private:
    MockScript script_;
    std::uint64_t seed_;
};

// HTTP wrapper around MockModel.
class MockServer {
public:
    MockServer(MockScript script, std::uint64_t seed, int response_delay_ms = 0);
    ~MockServer();

    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    // Binds 127.0.0.1; port 0 picks an ephemeral port. Returns the bound port.
    int start(int port = 0);
    void stop();
    int port() const { return port_; }
    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int peak_concurrency() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
};

}  // namespace evoforge::mockserver
