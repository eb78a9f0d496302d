#include "evoforge/core.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace evoforge {

std::string to_string(QuestionType t) {
    switch (t) {
        case QuestionType::multiple_choice: return "multiple_choice";
        case QuestionType::numerical: return "numerical";
        case QuestionType::regression: return "regression";
    }
    return "multiple_choice";
}

std::optional<QuestionType> question_type_from_string(const std::string& s) {
    if (s == "multiple_choice") return QuestionType::multiple_choice;
    if (s == "numerical") return QuestionType::numerical;
    if (s == "regression") return QuestionType::regression;
    return std::nullopt;
}

std::string to_string(Role r) {
    return r == Role::questioner ? "questioner" : "solver";
}

std::optional<ShuffleStrategy> shuffle_strategy_from_string(const std::string& s) {
    if (s == "random") return ShuffleStrategy{ShuffleKind::random, 4};
    if (s == "reverse") return ShuffleStrategy{ShuffleKind::reverse, 4};
    if (s.rfind("block:", 0) == 0) {
        int size = 0;
        const char* begin = s.data() + 6;
        const char* end = s.data() + s.size();
        auto [p, ec] = std::from_chars(begin, end, size);
        if (ec != std::errc{} || p != end || size < 1) return std::nullopt;
        return ShuffleStrategy{ShuffleKind::block, size};
    }
    return std::nullopt;
}

std::string to_string(const ShuffleStrategy& s) {
    switch (s.kind) {
        case ShuffleKind::random: return "random";
        case ShuffleKind::reverse: return "reverse";
        case ShuffleKind::block: return "block:" + std::to_string(s.block_size);
    }
    return "random";
}

std::string PipelineConfig::resolved_run_id() const {
    if (!run_id.empty()) return run_id;
    return "run-" + std::to_string(rng_seed);
}

std::vector<ConfigViolation> validate_config(const PipelineConfig& cfg) {
    std::vector<ConfigViolation> out;
    auto bad = [&](std::string field, std::string msg) {
        out.push_back({std::move(field), std::move(msg)});
    };
    if (cfg.group_size < 2) bad("group_size", "must be >= 2");
    if (cfg.solver_samples < 2) bad("solver_samples", "must be >= 2");
    if (cfg.window_length < 1) bad("window_length", "must be >= 1");
    if (cfg.lambda_q < 0) bad("lambda_q", "must be >= 0");
    if (cfg.lambda_s < 0) bad("lambda_s", "must be >= 0");
    if (cfg.lambda_d < 0) bad("lambda_d", "must be >= 0");
    if (cfg.format_weight < 0 || cfg.format_weight > 1)
        bad("format_weight", "must be in [0, 1]");
    if (cfg.tau_bleu < 0 || cfg.tau_bleu > 1) bad("tau_bleu", "must be in [0, 1]");
    if (!(cfg.score_band_min >= 0 && cfg.score_band_min <= cfg.score_band_max &&
          cfg.score_band_max <= 1))
        bad("score_band", "must satisfy 0 <= s_min <= s_max <= 1");
    if (cfg.iterations < 1) bad("iterations", "must be >= 1");
    if (cfg.steps_per_phase < 1) bad("steps_per_phase", "must be >= 1");
    if (cfg.groups_per_step < 1) bad("groups_per_step", "must be >= 1");
    if (cfg.questioner_endpoint.max_in_flight < 1)
        bad("questioner_max_in_flight", "must be >= 1");
    if (cfg.solver_endpoint.max_in_flight < 1)
        bad("solver_max_in_flight", "must be >= 1");
    if (cfg.max_videos < 0) bad("max_videos", "must be >= 0");
    if (cfg.trainer_ack != "none" && cfg.trainer_ack != "file")
        bad("trainer_ack", "must be 'none' or 'file'");
    return out;
}

std::vector<std::string> validate_video(const VideoRef& v) {
    std::vector<std::string> out;
    if (v.frames.empty()) {
        out.push_back("frames must be non-empty");
        return out;
    }
    if (v.duration_s < 0) out.push_back("duration_s must be non-negative");
    for (size_t i = 0; i < v.frames.size(); ++i) {
        const auto& f = v.frames[i];
        if (f.timestamp_s < 0 || f.timestamp_s > v.duration_s)
            out.push_back("frame " + std::to_string(i) + " timestamp outside [0, duration]");
        if (i > 0 && !(v.frames[i - 1].timestamp_s < f.timestamp_s))
            out.push_back("frame timestamps not strictly increasing at " + std::to_string(i));
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// --- to_json -------------------------------------------------------------

Json to_json(const FrameRef& f) {
    return Json{{"uri", f.uri}, {"timestamp_s", f.timestamp_s}, {"index", f.index}};
}

Json to_json(const VideoRef& v) {
    Json frames = Json::array();
    for (const auto& f : v.frames) frames.push_back(to_json(f));
    return Json{{"video_id", v.video_id}, {"frames", frames}, {"duration_s", v.duration_s}};
}

Json to_json(const FrameWindow& w) {
    return Json{{"start_index", w.start_index},
                {"end_index", w.end_index},
                {"t_s", w.t_s},
                {"t_e", w.t_e}};
}

Json to_json(const Segment& s) {
    return Json{{"t_s", s.t_s}, {"t_e", s.t_e}};
}

Json to_json(const QuestionRecord& q) {
    Json j{{"question_type", to_string(q.question_type)},
           {"question_text", q.question_text},
           {"reference_answer", q.reference_answer},
           {"raw_output", q.raw_output}};
    if (q.source_window) j["source_window"] = to_json(*q.source_window);
    return j;
}

Json to_json(const SolverResponse& r) {
    Json j{{"raw_output", r.raw_output},
           {"format_valid_answer", r.format_valid_answer},
           {"format_valid_segment", r.format_valid_segment}};
    if (r.answer) j["answer"] = *r.answer;
    if (r.segment) j["segment"] = to_json(*r.segment);
    return j;
}

Json to_json(const RewardBreakdown& b) {
    return Json{{"role", to_string(b.role)},
                {"format_gate", b.format_gate},
                {"difficulty", b.difficulty},
                {"diversity_penalty", b.diversity_penalty},
                {"temporal_aware", b.temporal_aware},
                {"accuracy", b.accuracy},
                {"format_term", b.format_term},
                {"iou", b.iou},
                {"total", b.total}};
}

Json to_json(const CuratedExample& e) {
    return Json{{"video_id", e.video_id},
                {"window", to_json(e.window)},
                {"question", to_json(e.question)},
                {"pseudo_answer", e.pseudo_answer},
                {"confidence", e.confidence},
                {"iteration", e.iteration}};
}

// --- from_json -----------------------------------------------------------

FrameRef frame_ref_from_json(const Json& j) {
    FrameRef f;
    f.uri = j.at("uri").get<std::string>();
    f.timestamp_s = j.at("timestamp_s").get<double>();
    f.index = j.at("index").get<int>();
    return f;
}

VideoRef video_ref_from_json(const Json& j) {
    VideoRef v;
    v.video_id = j.at("video_id").get<std::string>();
    for (const auto& fj : j.at("frames")) v.frames.push_back(frame_ref_from_json(fj));
    v.duration_s = j.at("duration_s").get<double>();
    return v;
}

FrameWindow frame_window_from_json(const Json& j) {
    FrameWindow w;
    w.start_index = j.at("start_index").get<int>();
    w.end_index = j.at("end_index").get<int>();
    w.t_s = j.at("t_s").get<double>();
    w.t_e = j.at("t_e").get<double>();
    return w;
}

Segment segment_from_json(const Json& j) {
    return Segment{j.at("t_s").get<double>(), j.at("t_e").get<double>()};
}

QuestionRecord question_record_from_json(const Json& j) {
    QuestionRecord q;
    auto t = question_type_from_string(j.at("question_type").get<std::string>());
    if (!t) throw std::runtime_error("bad question_type");
    q.question_type = *t;
    q.question_text = j.at("question_text").get<std::string>();
    q.reference_answer = j.at("reference_answer").get<std::string>();
    q.raw_output = j.at("raw_output").get<std::string>();
    if (j.contains("source_window")) q.source_window = frame_window_from_json(j.at("source_window"));
    return q;
}

SolverResponse solver_response_from_json(const Json& j) {
    SolverResponse r;
    r.raw_output = j.at("raw_output").get<std::string>();
    r.format_valid_answer = j.at("format_valid_answer").get<bool>();
    r.format_valid_segment = j.at("format_valid_segment").get<bool>();
    if (j.contains("answer")) r.answer = j.at("answer").get<std::string>();
    if (j.contains("segment")) r.segment = segment_from_json(j.at("segment"));
    return r;
}

RewardBreakdown reward_breakdown_from_json(const Json& j) {
    RewardBreakdown b;
    b.role = j.at("role").get<std::string>() == "questioner" ? Role::questioner : Role::solver;
    b.format_gate = j.at("format_gate").get<int>();
    b.difficulty = j.at("difficulty").get<double>();
    b.diversity_penalty = j.at("diversity_penalty").get<double>();
    b.temporal_aware = j.at("temporal_aware").get<double>();
    b.accuracy = j.at("accuracy").get<int>();
    b.format_term = j.at("format_term").get<int>();
    b.iou = j.at("iou").get<double>();
    b.total = j.at("total").get<double>();
    return b;
}

CuratedExample curated_example_from_json(const Json& j) {
    CuratedExample e;
    e.video_id = j.at("video_id").get<std::string>();
    e.window = frame_window_from_json(j.at("window"));
    e.question = question_record_from_json(j.at("question"));
    e.pseudo_answer = j.at("pseudo_answer").get<std::string>();
    e.confidence = j.at("confidence").get<double>();
    e.iteration = j.at("iteration").get<int>();
    return e;
}

// --- config file ---------------------------------------------------------

namespace {

template <typename T>
void take(Json& j, const char* key, T& field) {
    if (auto it = j.find(key); it != j.end()) {
        field = it->get<T>();
        j.erase(it);
    }
}

}  // namespace

PipelineConfig config_from_json(const Json& src) {
    if (!src.is_object()) throw std::runtime_error("config must be a JSON object");
    Json j = src;
    PipelineConfig cfg;
    take(j, "group_size", cfg.group_size);
    take(j, "solver_samples", cfg.solver_samples);
    take(j, "window_length", cfg.window_length);
    take(j, "lambda_q", cfg.lambda_q);
    take(j, "lambda_s", cfg.lambda_s);
    take(j, "lambda_d", cfg.lambda_d);
    take(j, "format_weight", cfg.format_weight);
    take(j, "tau_bleu", cfg.tau_bleu);
    take(j, "score_band_min", cfg.score_band_min);
    take(j, "score_band_max", cfg.score_band_max);
    take(j, "iterations", cfg.iterations);
    take(j, "steps_per_phase", cfg.steps_per_phase);
    take(j, "groups_per_step", cfg.groups_per_step);
    take(j, "rng_seed", cfg.rng_seed);
    take(j, "videos", cfg.videos_path);
    take(j, "run_dir", cfg.run_dir);
    take(j, "run_id", cfg.run_id);
    take(j, "max_videos", cfg.max_videos);
    take(j, "trainer_ack", cfg.trainer_ack);
    take(j, "trainer_ack_timeout_s", cfg.trainer_ack_timeout_s);

    std::string strat;
    take(j, "shuffle_strategy", strat);
    if (!strat.empty()) {
        auto parsed = shuffle_strategy_from_string(strat);
        if (!parsed) throw std::runtime_error("config: bad shuffle_strategy '" + strat + "'");
        cfg.shuffle_strategy = *parsed;
    }

    take(j, "questioner_base_url", cfg.questioner_endpoint.base_url);
    take(j, "solver_base_url", cfg.solver_endpoint.base_url);
    take(j, "questioner_model", cfg.questioner_endpoint.model_name);
    take(j, "solver_model", cfg.solver_endpoint.model_name);
    for (EndpointConfig* ep : {&cfg.questioner_endpoint, &cfg.solver_endpoint}) {
        (void)ep;
    }
    double timeout_s = cfg.questioner_endpoint.timeout_s;
    take(j, "timeout_s", timeout_s);
    int max_in_flight = cfg.questioner_endpoint.max_in_flight;
    take(j, "max_in_flight", max_in_flight);
    int max_retries = cfg.questioner_endpoint.max_retries;
    take(j, "max_retries", max_retries);
    double temperature = cfg.questioner_endpoint.temperature;
    take(j, "temperature", temperature);
    double top_p = cfg.questioner_endpoint.top_p;
    take(j, "top_p", top_p);
    for (EndpointConfig* ep : {&cfg.questioner_endpoint, &cfg.solver_endpoint}) {
        ep->timeout_s = timeout_s;
        ep->max_in_flight = max_in_flight;
        ep->max_retries = max_retries;
        ep->temperature = temperature;
        ep->top_p = top_p;
    }

    if (!j.empty()) {
        std::string keys;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!keys.empty()) keys += ", ";
            keys += it.key();
        }
        throw std::runtime_error("config: unknown keys: " + keys);
    }
    return cfg;
}

Json config_to_json(const PipelineConfig& cfg) {
    return Json{{"group_size", cfg.group_size},
                {"solver_samples", cfg.solver_samples},
                {"window_length", cfg.window_length},
                {"lambda_q", cfg.lambda_q},
                {"lambda_s", cfg.lambda_s},
                {"lambda_d", cfg.lambda_d},
                {"format_weight", cfg.format_weight},
                {"tau_bleu", cfg.tau_bleu},
                {"score_band_min", cfg.score_band_min},
                {"score_band_max", cfg.score_band_max},
                {"iterations", cfg.iterations},
                {"steps_per_phase", cfg.steps_per_phase},
                {"groups_per_step", cfg.groups_per_step},
                {"shuffle_strategy", to_string(cfg.shuffle_strategy)},
                {"rng_seed", cfg.rng_seed},
                {"videos", cfg.videos_path},
                {"run_dir", cfg.run_dir},
                {"run_id", cfg.run_id},
                {"max_videos", cfg.max_videos},
                {"trainer_ack", cfg.trainer_ack},
                {"trainer_ack_timeout_s", cfg.trainer_ack_timeout_s},
                {"questioner_base_url", cfg.questioner_endpoint.base_url},
                {"solver_base_url", cfg.solver_endpoint.base_url},
                {"questioner_model", cfg.questioner_endpoint.model_name},
                {"solver_model", cfg.solver_endpoint.model_name},
                {"timeout_s", cfg.questioner_endpoint.timeout_s},
                {"max_in_flight", cfg.questioner_endpoint.max_in_flight},
                {"max_retries", cfg.questioner_endpoint.max_retries},
                {"temperature", cfg.questioner_endpoint.temperature},
                {"top_p", cfg.questioner_endpoint.top_p}};
}

PipelineConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("config parse error in " + path + ": " + e.what());
    }
    return config_from_json(j);
}

}  // namespace evoforge
