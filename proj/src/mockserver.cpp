#include "evoforge/mockserver.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <fstream>
#include <thread>

// The default listen backlog (5) drops concurrent connects from fan-out
// clients into 1s SYN-retransmit stalls; raise it before including httplib.
#define CPPHTTPLIB_LISTEN_BACKLOG 128
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "evoforge/modelclient.hpp"
#include "evoforge/parse.hpp"
#include "evoforge/rng.hpp"

namespace evoforge::mockserver {

namespace {

std::string behavior_to_string(SegmentBehavior b) {
    switch (b) {
        case SegmentBehavior::echo_window: return "echo_window";
        case SegmentBehavior::fixed: return "fixed";
        case SegmentBehavior::none: return "none";
    }
    return "none";
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

}  // namespace

MockScript MockScript::from_json(const Json& j) {
    MockScript script;
    const Json& profiles = j.at("profiles");
    if (!profiles.is_object()) throw std::runtime_error("mock script: 'profiles' must be an object");
    for (auto it = profiles.begin(); it != profiles.end(); ++it) {
        MockProfile p;
        const Json& pj = it.value();
        if (auto a = pj.find("answer_pool"); a != pj.end()) {
            for (const auto& aj : *a) {
                MockAnswer ans;
                ans.text = aj.at("text").get<std::string>();
                if (aj.contains("weight")) ans.weight = aj.at("weight").get<double>();
                if (aj.contains("correct")) ans.correct = aj.at("correct").get<bool>();
                p.answer_pool.push_back(std::move(ans));
            }
        }
        if (pj.contains("p_correct_orig")) p.p_correct_orig = pj.at("p_correct_orig").get<double>();
        if (pj.contains("p_correct_shuffled"))
            p.p_correct_shuffled = pj.at("p_correct_shuffled").get<double>();
        if (pj.contains("segment_behavior")) {
            const Json& sb = pj.at("segment_behavior");
            if (sb.is_string()) {
                std::string s = sb.get<std::string>();
                if (s == "echo_window") p.segment_behavior = SegmentBehavior::echo_window;
                else if (s == "none") p.segment_behavior = SegmentBehavior::none;
                else throw std::runtime_error("mock script: bad segment_behavior '" + s + "'");
            } else {
                p.segment_behavior = SegmentBehavior::fixed;
                p.fixed_segment.t_s = sb.at("fixed").at(0).get<double>();
                p.fixed_segment.t_e = sb.at("fixed").at(1).get<double>();
            }
        }
        if (pj.contains("questioner_templates"))
            for (const auto& t : pj.at("questioner_templates"))
                p.questioner_templates.push_back(t.get<std::string>());
        script.profiles.emplace_back(it.key(), std::move(p));
    }
    return script;
}

MockScript MockScript::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open mock script: " + path);
    Json j;
    in >> j;
    return from_json(j);
}

Json MockScript::to_json() const {
    Json profiles = Json::object();
    for (const auto& [key, p] : this->profiles) {
        Json pool = Json::array();
        for (const auto& a : p.answer_pool) {
            Json aj{{"text", a.text}, {"weight", a.weight}};
            if (a.correct) aj["correct"] = true;
            pool.push_back(aj);
        }
        Json pj{{"answer_pool", pool},
                {"p_correct_orig", p.p_correct_orig},
                {"p_correct_shuffled", p.p_correct_shuffled}};
        if (p.segment_behavior == SegmentBehavior::fixed)
            pj["segment_behavior"] = Json{{"fixed", {p.fixed_segment.t_s, p.fixed_segment.t_e}}};
        else
            pj["segment_behavior"] = behavior_to_string(p.segment_behavior);
        pj["questioner_templates"] = p.questioner_templates;
        profiles[key] = pj;
    }
    return Json{{"profiles", profiles}};
}

std::vector<std::string> MockScript::validate() const {
    std::vector<std::string> out;
    if (profiles.empty()) out.push_back("script has no profiles");
    for (const auto& [key, p] : profiles) {
        if (p.p_correct_orig < 0 || p.p_correct_orig > 1)
            out.push_back(key + ": p_correct_orig outside [0, 1]");
        if (p.p_correct_shuffled < 0 || p.p_correct_shuffled > 1)
            out.push_back(key + ": p_correct_shuffled outside [0, 1]");
        bool has_correct = false;
        for (const auto& a : p.answer_pool) {
            if (a.weight < 0) out.push_back(key + ": negative answer weight");
            if (a.correct) has_correct = true;
        }
        if (!p.answer_pool.empty() && !has_correct)
            out.push_back(key + ": answer_pool has no correct entry");
        if (p.segment_behavior == SegmentBehavior::fixed &&
            !(p.fixed_segment.t_s <= p.fixed_segment.t_e && p.fixed_segment.t_s >= 0))
            out.push_back(key + ": bad fixed segment");
    }
    return out;
}

namespace {

struct Attachment {
    int index = 0;
    double timestamp = 0.0;
};

struct ParsedRequest {
    std::string prompt;
    std::vector<Attachment> attachments;
};

ParsedRequest parse_request(const std::string& body) {
    Json j;
    try {
        j = Json::parse(body);
    } catch (const std::exception& e) {
        throw MockBadRequest(std::string("invalid JSON: ") + e.what());
    }
    ParsedRequest req;
    if (!j.contains("messages") || !j["messages"].is_array() || j["messages"].empty())
        throw MockBadRequest("missing messages");
    for (const auto& msg : j["messages"]) {
        const Json& content = msg.at("content");
        if (content.is_string()) {
            req.prompt += content.get<std::string>();
            continue;
        }
        for (const auto& part : content) {
            std::string type = part.value("type", "");
            if (type == "text") {
                req.prompt += part.at("text").get<std::string>();
            } else if (type == "image_url") {
                std::string url = part.at("image_url").at("url").get<std::string>();
                // frame metadata fragment: ...#i=<index>&t=<timestamp>
                size_t frag = url.rfind("#i=");
                if (frag == std::string::npos) throw MockBadRequest("attachment lacks frame metadata");
                Attachment a;
                const char* begin = url.data() + frag + 3;
                const char* end = url.data() + url.size();
                auto [p1, ec1] = std::from_chars(begin, end, a.index);
                size_t tpos = url.find("&t=", frag);
                if (ec1 != std::errc{} || tpos == std::string::npos)
                    throw MockBadRequest("bad frame metadata");
                auto [p2, ec2] = std::from_chars(url.data() + tpos + 3, end, a.timestamp);
                if (ec2 != std::errc{}) throw MockBadRequest("bad frame timestamp");
                req.attachments.push_back(a);
            }
        }
    }
    return req;
}

bool indices_in_order(const std::vector<Attachment>& atts) {
    for (size_t i = 1; i < atts.size(); ++i)
        if (atts[i - 1].index >= atts[i].index) return false;
    return true;
}

std::string span_marker(const std::vector<Attachment>& atts) {
    double lo = atts.front().timestamp, hi = atts.front().timestamp;
    for (const auto& a : atts) {
        lo = std::min(lo, a.timestamp);
        hi = std::max(hi, a.timestamp);
    }
    return "[span:" + format_double(lo) + "s--" + format_double(hi) + "s]";
}

void replace_all_occurrences(std::string& s, const std::string& from, const std::string& to) {
    size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

std::optional<Segment> span_from_prompt(const std::string& prompt) {
    size_t last = prompt.rfind("[span:");
    if (last == std::string::npos) return std::nullopt;
    size_t close = prompt.find(']', last);
    if (close == std::string::npos) return std::nullopt;
    return parse::parse_segment(prompt.substr(last + 6, close - last - 6));
}

}  // namespace

MockModel::MockModel(MockScript script, std::uint64_t seed)
    : script_(std::move(script)), seed_(seed) {
    auto problems = script_.validate();
    if (!problems.empty())
        throw std::runtime_error("invalid mock script: " + problems.front());
}

std::string MockModel::respond(const std::string& request_body) const {
    ParsedRequest req = parse_request(request_body);
    Rng rng(Rng::mix(seed_, Rng::fnv1a(request_body)));

    std::string content;
    bool is_questioner = req.prompt.rfind(modelclient::kQuestionerPromptPrefix, 0) == 0;
    if (is_questioner) {
        if (req.attachments.empty()) throw MockBadRequest("questioner request without frames");
        // deterministic profile/template choice among profiles that script questions
        std::vector<const std::pair<std::string, MockProfile>*> candidates;
        for (const auto& entry : script_.profiles)
            if (!entry.second.questioner_templates.empty()) candidates.push_back(&entry);
        if (candidates.empty()) throw MockBadRequest("script has no questioner templates");
        const auto* entry = candidates[rng.uniform_u64(candidates.size())];
        const auto& templates = entry->second.questioner_templates;
        content = templates[rng.uniform_u64(templates.size())];
        replace_all_occurrences(content, "{span}", span_marker(req.attachments));
        replace_all_occurrences(content, "{profile}", "[" + entry->first + "]");
    } else {
        const MockProfile* profile = nullptr;
        std::string profile_key;
        for (const auto& [key, p] : script_.profiles) {
            if (req.prompt.find("[" + key + "]") != std::string::npos) {
                profile = &p;
                profile_key = key;
                break;
            }
        }
        if (!profile) {
            for (const auto& [key, p] : script_.profiles) {
                if (key == "default") {
                    profile = &p;
                    profile_key = key;
                }
            }
        }
        if (!profile && !script_.profiles.empty()) {
            profile = &script_.profiles.front().second;
            profile_key = script_.profiles.front().first;
        }
        if (!profile) throw MockBadRequest("no profile matches request");

        bool shuffled = !indices_in_order(req.attachments);
        double p = shuffled ? profile->p_correct_shuffled : profile->p_correct_orig;
        std::string answer;
        if (rng.uniform_real() < p) {
            for (const auto& a : profile->answer_pool)
                if (a.correct) answer = a.text;
            if (answer.empty()) answer = "correct-" + profile_key;
        } else {
            double total = 0.0;
            for (const auto& a : profile->answer_pool)
                if (!a.correct) total += a.weight;
            if (total > 0.0) {
                double draw = rng.uniform_real() * total;
                for (const auto& a : profile->answer_pool) {
                    if (a.correct) continue;
                    draw -= a.weight;
                    if (draw <= 0.0) {
                        answer = a.text;
                        break;
                    }
                }
                if (answer.empty()) answer = profile->answer_pool.back().text;
            } else {
                answer = "wrong-" + hex64(rng.next_u64());
            }
        }
        content = "Considering the frames in order. \\boxed{" + answer + "}";
        switch (profile->segment_behavior) {
            case SegmentBehavior::echo_window: {
                Segment seg;
                if (auto marked = span_from_prompt(req.prompt)) {
                    seg = *marked;
                } else if (!req.attachments.empty()) {
                    double lo = req.attachments.front().timestamp, hi = lo;
                    for (const auto& a : req.attachments) {
                        lo = std::min(lo, a.timestamp);
                        hi = std::max(hi, a.timestamp);
                    }
                    seg = Segment{lo, hi};
                }
                content += " <segment>" + format_double(seg.t_s) + "s--" +
                           format_double(seg.t_e) + "s</segment>";
                break;
            }
            case SegmentBehavior::fixed:
                content += " <segment>" + format_double(profile->fixed_segment.t_s) + "s--" +
                           format_double(profile->fixed_segment.t_e) + "s</segment>";
                break;
            case SegmentBehavior::none:
                break;
        }
    }

    Json model = Json::parse(request_body).value("model", std::string("mock"));
    Json resp{{"id", "mock-" + hex64(Rng::fnv1a(request_body))},
              {"object", "chat.completion"},
              {"created", 0},
              {"model", model},
              {"choices",
               Json::array({Json{{"index", 0},
                                 {"message", Json{{"role", "assistant"}, {"content", content}}},
                                 {"finish_reason", "stop"}}})}};
    return resp.dump();
}

struct MockServer::Impl {
    MockModel model;
    httplib::Server server;
    std::thread thread;
    int delay_ms;
    std::atomic<int> in_flight{0};
    std::atomic<int> peak{0};

    Impl(MockScript script, std::uint64_t seed, int delay)
        : model(std::move(script), seed), delay_ms(delay) {}
};

MockServer::MockServer(MockScript script, std::uint64_t seed, int response_delay_ms)
    : impl_(std::make_unique<Impl>(std::move(script), seed, response_delay_ms)) {}

MockServer::~MockServer() { stop(); }

int MockServer::start(int port) {
    Impl* impl = impl_.get();
    // size the worker pool for many concurrent fan-out clients, independent of
    // the (possibly single-core) host
    impl->server.new_task_queue = [] { return new httplib::ThreadPool(32); };
    impl->server.Post("/v1/chat/completions",
                      [impl](const httplib::Request& req, httplib::Response& res) {
                          int cur = impl->in_flight.fetch_add(1) + 1;
                          int peak = impl->peak.load();
                          while (cur > peak && !impl->peak.compare_exchange_weak(peak, cur)) {
                          }
                          if (impl->delay_ms > 0)
                              std::this_thread::sleep_for(std::chrono::milliseconds(impl->delay_ms));
                          try {
                              res.set_content(impl->model.respond(req.body), "application/json");
                          } catch (const MockBadRequest& e) {
                              res.status = 400;
                              res.set_content(Json{{"error", Json{{"message", e.what()}}}}.dump(),
                                              "application/json");
                          }
                          impl->in_flight.fetch_sub(1);
                      });
    if (port == 0) {
        port_ = impl->server.bind_to_any_port("127.0.0.1");
    } else {
        if (!impl->server.bind_to_port("127.0.0.1", port))
            throw std::runtime_error("cannot bind port " + std::to_string(port));
        port_ = port;
    }
    impl->thread = std::thread([impl] { impl->server.listen_after_bind(); });
    impl->server.wait_until_ready();
    return port_;
}

void MockServer::stop() {
    if (impl_ && impl_->thread.joinable()) {
        impl_->server.stop();
        impl_->thread.join();
    }
}

int MockServer::peak_concurrency() const { return impl_->peak.load(); }

}  // namespace evoforge::mockserver
