#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "evoforge/core.hpp"

namespace evoforge::modelclient {

extern const char* const kQuestionerPromptPrefix;

// Chat-completion request bodies are pure functions of (template, frame order,
// question); identical inputs serialize byte-identically.
Json build_questioner_request(const VideoRef& video_or_window, const EndpointConfig& ep);
Json build_solver_request(const VideoRef& video, const std::string& question,
                          const EndpointConfig& ep);

struct EndpointUnreachable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Fan-out sampler over an OpenAI-compatible chat-completions endpoint.
// Concurrency is bounded by the endpoint's max_in_flight; per-sample failures
// degrade to empty completions after max_retries so the sample count stays
// fixed for downstream confidence math.
class ChatClient {
public:
    explicit ChatClient(EndpointConfig ep);
    ~ChatClient();

    ChatClient(const ChatClient&) = delete;
    ChatClient& operator=(const ChatClient&) = delete;

    // Exactly n completions, ordered by sample index. Each sample carries
    // request seed = seed_base + index so scripted endpoints stay deterministic.
    // Throws EndpointUnreachable when every sample fails at the connection level.
    std::vector<std::string> sample_completions(const Json& request, int n,
                                                std::uint64_t seed_base);

    const EndpointConfig& endpoint() const { return ep_; }
    int peak_in_flight() const { return peak_in_flight_.load(); }

private:
    EndpointConfig ep_;
    std::atomic<int> in_flight_{0};
    std::atomic<int> peak_in_flight_{0};
};

}  // namespace evoforge::modelclient
