#include "evoforge/modelclient.hpp"

#include <mutex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace evoforge::modelclient {

const char* const kQuestionerPromptPrefix = "You are an intelligent Question Generator";

namespace {

const char* const kQuestionerPrompt =
    "You are an intelligent Question Generator. Your task is to create a question based on "
    "the given video.\n"
    "Requirements (must follow exactly):\n"
    "1. Watch the video carefully and understand all details across the frames.\n"
    "2. Generate exactly one question that is directly related to the video content.\n"
    "3. Choose the question type from only one of: multiple choice (Yes/No or four options "
    "A/B/C/D, one correct), numerical (a specific numeric answer), or regression (a "
    "continuous value such as a measurement, quantity, or coordinate).\n"
    "4. The question must require analysis or reasoning, not just description.\n"
    "5. Provide the correct answer. Include units if applicable.\n"
    "6. Output strictly in the three-block format below, with nothing else.\n"
    "Output format:\n"
    "<type>X</type>\n"
    "<question>Y</question>\n"
    "<answer>Z</answer>\n"
    "where X \xE2\x88\x88 {multiple choice, numerical, regression}.";

const char* const kSolverPromptSuffix =
    " Please reason step by step based on the question and video, and put your final answer "
    "within \\boxed{}. Additionally, predict the video time segment (in seconds) that is most "
    "relevant to answering this question and output it as <segment>Xs--Ys</segment> "
    "(e.g. <segment>2.5s--5.0s</segment>).";

// Frame metadata rides in the URL fragment so scripted endpoints can recover
// canonical order and timestamps regardless of the locator scheme.
Json frame_attachments(const VideoRef& video) {
    Json parts = Json::array();
    for (const auto& f : video.frames) {
        std::string url = f.uri + "#i=" + std::to_string(f.index) + "&t=" +
                          format_double(f.timestamp_s);
        parts.push_back(Json{{"type", "image_url"}, {"image_url", Json{{"url", url}}}});
    }
    return parts;
}

Json build_request(const VideoRef& video, const std::string& prompt,
                   const EndpointConfig& ep) {
    Json content = Json::array();
    content.push_back(Json{{"type", "text"}, {"text", prompt}});
    for (auto& part : frame_attachments(video)) content.push_back(std::move(part));
    return Json{{"model", ep.model_name},
                {"messages", Json::array({Json{{"role", "user"}, {"content", content}}})},
                {"temperature", ep.temperature},
                {"top_p", ep.top_p},
                {"n", 1}};
}

}  // namespace

Json build_questioner_request(const VideoRef& video_or_window, const EndpointConfig& ep) {
    return build_request(video_or_window, kQuestionerPrompt, ep);
}

Json build_solver_request(const VideoRef& video, const std::string& question,
                          const EndpointConfig& ep) {
    return build_request(video, question + kSolverPromptSuffix, ep);
}

ChatClient::ChatClient(EndpointConfig ep) : ep_(std::move(ep)) {}
ChatClient::~ChatClient() = default;

std::vector<std::string> ChatClient::sample_completions(const Json& request, int n,
                                                        std::uint64_t seed_base) {
    if (n < 1) throw std::invalid_argument("sample_completions: n must be >= 1");

    std::vector<std::string> results(static_cast<size_t>(n));
    // vector<char>, not vector<bool>: elements are written from multiple threads
    std::vector<char> connection_failed(static_cast<size_t>(n), 0);
    std::atomic<int> next{0};

    auto worker = [&] {
        httplib::Client client(ep_.base_url);
        client.set_connection_timeout(static_cast<int>(ep_.timeout_s),
                                      static_cast<int>(ep_.timeout_s * 1e6) % 1000000);
        client.set_read_timeout(static_cast<int>(ep_.timeout_s), 0);
        if (ep_.api_key) client.set_bearer_token_auth(*ep_.api_key);

        for (;;) {
            int i = next.fetch_add(1);
            if (i >= n) break;

            Json body = request;
            body["seed"] = seed_base + static_cast<std::uint64_t>(i);
            const std::string payload = body.dump();

            bool conn_fail = true;
            for (int attempt = 0; attempt <= ep_.max_retries; ++attempt) {
                int cur = in_flight_.fetch_add(1) + 1;
                int peak = peak_in_flight_.load();
                while (cur > peak && !peak_in_flight_.compare_exchange_weak(peak, cur)) {
                }
                auto res = client.Post("/v1/chat/completions", payload, "application/json");
                in_flight_.fetch_sub(1);

                if (!res) continue;  // connection-level failure
                conn_fail = false;
                if (res->status != 200) continue;
                try {
                    Json resp = Json::parse(res->body);
                    results[static_cast<size_t>(i)] =
                        resp.at("choices").at(0).at("message").at("content").get<std::string>();
                    break;
                } catch (const std::exception&) {
                    // malformed body counts as a failed attempt
                }
            }
            connection_failed[static_cast<size_t>(i)] = conn_fail ? 1 : 0;
        }
    };

    int workers = std::min(ep_.max_in_flight, n);
    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(workers));
    for (int t = 0; t < workers; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    bool all_conn_failed = true;
    for (int i = 0; i < n; ++i)
        if (!connection_failed[static_cast<size_t>(i)]) all_conn_failed = false;
    if (all_conn_failed)
        throw EndpointUnreachable("endpoint unreachable: " + ep_.base_url);

    return results;
}

}  // namespace evoforge::modelclient
