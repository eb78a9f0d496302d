#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace evoforge {

using Json = nlohmann::ordered_json;

enum class QuestionType { multiple_choice, numerical, regression };
enum class Role { questioner, solver };

std::string to_string(QuestionType t);
std::optional<QuestionType> question_type_from_string(const std::string& s);
std::string to_string(Role r);

// One frame of a video. The engine never decodes pixels; a frame is just a
// locator plus its position in the canonical (unpermuted) order.
struct FrameRef {
    std::string uri;
    double timestamp_s = 0.0;
    int index = 0;

    bool operator==(const FrameRef&) const = default;
};

struct VideoRef {
    std::string video_id;
    std::vector<FrameRef> frames;
    double duration_s = 0.0;

    bool operator==(const VideoRef&) const = default;
};

// Contiguous K-frame span in the canonical frame order; [t_s, t_e] is the
// pseudo ground-truth segment for the temporal-grounded reward.
struct FrameWindow {
    int start_index = 0;
    int end_index = 0;
    double t_s = 0.0;
    double t_e = 0.0;

    bool operator==(const FrameWindow&) const = default;
};

struct Segment {
    double t_s = 0.0;
    double t_e = 0.0;

    bool operator==(const Segment&) const = default;
};

struct QuestionRecord {
    QuestionType question_type = QuestionType::multiple_choice;
    std::string question_text;
    std::string reference_answer;
    std::optional<FrameWindow> source_window;
    std::string raw_output;

    bool operator==(const QuestionRecord&) const = default;
};

struct SolverResponse {
    std::string raw_output;
    std::optional<std::string> answer;
    std::optional<Segment> segment;
    bool format_valid_answer = false;
    bool format_valid_segment = false;

    bool operator==(const SolverResponse&) const = default;
};

// Per-rollout reward decomposition. `total` is always recomputable from the
// components; see rewards::questioner_total / rewards::solver_total.
struct RewardBreakdown {
    Role role = Role::questioner;
    int format_gate = 0;
    double difficulty = 0.0;
    double diversity_penalty = 0.0;
    double temporal_aware = 0.0;
    int accuracy = 0;
    int format_term = 0;
    double iou = 0.0;
    double total = 0.0;

    bool operator==(const RewardBreakdown&) const = default;
};

struct CuratedExample {
    std::string video_id;
    FrameWindow window;
    QuestionRecord question;
    std::string pseudo_answer;
    double confidence = 0.0;
    int iteration = 1;

    bool operator==(const CuratedExample&) const = default;
};

enum class ShuffleKind { random, reverse, block };

struct ShuffleStrategy {
    ShuffleKind kind = ShuffleKind::random;
    int block_size = 4;  // only meaningful for block

    bool operator==(const ShuffleStrategy&) const = default;
};

// Parses "random", "reverse" or "block:<size>".
std::optional<ShuffleStrategy> shuffle_strategy_from_string(const std::string& s);
std::string to_string(const ShuffleStrategy& s);

struct EndpointConfig {
    std::string base_url = "http://127.0.0.1:8089";
    std::string model_name = "mock";
    std::optional<std::string> api_key;
    double timeout_s = 30.0;
    int max_in_flight = 8;
    int max_retries = 2;
    double temperature = 1.0;
    double top_p = 1.0;
};

struct PipelineConfig {
    int group_size = 8;        // G
    int solver_samples = 10;   // M
    int window_length = 8;     // K
    double lambda_q = 0.1;
    double lambda_s = 0.3;
    double lambda_d = 1.0;
    double format_weight = 0.1;  // w
    double tau_bleu = 0.5;
    double score_band_min = 0.3;
    double score_band_max = 0.8;
    int iterations = 3;         // T
    int steps_per_phase = 20;
    int groups_per_step = 16;   // 16 groups x G=8 -> global batch 128
    ShuffleStrategy shuffle_strategy;
    std::uint64_t rng_seed = 0;

    EndpointConfig questioner_endpoint;
    EndpointConfig solver_endpoint;

    std::string videos_path;   // manifest of VideoRef records, one per line
    std::string run_dir = "run";
    std::string run_id;        // defaults to "run-<rng_seed>" when empty
    int max_videos = 0;        // 0 = no limit (phase 2)
    std::string trainer_ack = "none";  // "none" | "file"
    double trainer_ack_timeout_s = 600.0;

    std::string resolved_run_id() const;
};

struct ConfigViolation {
    std::string field;
    std::string message;
};

std::vector<ConfigViolation> validate_config(const PipelineConfig& cfg);

// Violations of structural invariants on a video (empty frames, non-increasing
// timestamps, timestamps outside [0, duration]).
std::vector<std::string> validate_video(const VideoRef& v);

// --- serialization -------------------------------------------------------

// Shortest round-trip decimal rendering (via std::to_chars).
std::string format_double(double v);

Json to_json(const FrameRef& f);
Json to_json(const VideoRef& v);
Json to_json(const FrameWindow& w);
Json to_json(const Segment& s);
Json to_json(const QuestionRecord& q);
Json to_json(const SolverResponse& r);
Json to_json(const RewardBreakdown& b);
Json to_json(const CuratedExample& e);

FrameRef frame_ref_from_json(const Json& j);
VideoRef video_ref_from_json(const Json& j);
FrameWindow frame_window_from_json(const Json& j);
Segment segment_from_json(const Json& j);
QuestionRecord question_record_from_json(const Json& j);
SolverResponse solver_response_from_json(const Json& j);
RewardBreakdown reward_breakdown_from_json(const Json& j);
CuratedExample curated_example_from_json(const Json& j);

// Flat key=value JSON config file; unknown keys are errors. Throws
// std::runtime_error with the offending key/field on any problem.
PipelineConfig load_config_file(const std::string& path);
PipelineConfig config_from_json(const Json& j);
Json config_to_json(const PipelineConfig& cfg);

}  // namespace evoforge
