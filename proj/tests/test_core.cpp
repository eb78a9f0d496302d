#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include "evoforge/core.hpp"

using namespace evoforge;

namespace {

VideoRef sample_video(int n = 16) {
    VideoRef v;
    v.video_id = "vid-1";
    for (int i = 0; i < n; ++i)
        v.frames.push_back({"frames/" + std::to_string(i) + ".jpg", static_cast<double>(i), i});
    v.duration_s = static_cast<double>(n);
    return v;
}

}  // namespace

TEST_CASE("default config satisfies all constraints") {
    PipelineConfig cfg;
    CHECK(validate_config(cfg).empty());
    CHECK(cfg.group_size == 8);
    CHECK(cfg.solver_samples == 10);
    CHECK(cfg.window_length == 8);
    CHECK(cfg.lambda_q == doctest::Approx(0.1));
    CHECK(cfg.lambda_s == doctest::Approx(0.3));
    CHECK(cfg.lambda_d == doctest::Approx(1.0));
    CHECK(cfg.format_weight == doctest::Approx(0.1));
    CHECK(cfg.tau_bleu == doctest::Approx(0.5));
    CHECK(cfg.score_band_min == doctest::Approx(0.3));
    CHECK(cfg.score_band_max == doctest::Approx(0.8));
    CHECK(cfg.iterations == 3);
    CHECK(cfg.steps_per_phase == 20);
    CHECK(cfg.groups_per_step == 16);
}

TEST_CASE("config violations name the offending field") {
    PipelineConfig cfg;
    cfg.score_band_min = 0.9;
    cfg.score_band_max = 0.3;
    auto v = validate_config(cfg);
    REQUIRE(v.size() == 1);
    CHECK(v[0].field == "score_band");

    cfg = PipelineConfig{};
    cfg.lambda_s = -0.3;
    v = validate_config(cfg);
    REQUIRE(v.size() == 1);
    CHECK(v[0].field == "lambda_s");

    cfg = PipelineConfig{};
    cfg.group_size = 1;
    CHECK_FALSE(validate_config(cfg).empty());

    cfg = PipelineConfig{};
    cfg.trainer_ack = "http";
    CHECK_FALSE(validate_config(cfg).empty());
}

TEST_CASE("video invariants") {
    CHECK(validate_video(sample_video()).empty());

    VideoRef empty;
    empty.video_id = "x";
    CHECK_FALSE(validate_video(empty).empty());

    VideoRef bad = sample_video();
    bad.frames[3].timestamp_s = bad.frames[2].timestamp_s;  // not strictly increasing
    CHECK_FALSE(validate_video(bad).empty());

    bad = sample_video();
    bad.frames.back().timestamp_s = bad.duration_s + 5.0;  // outside [0, duration]
    CHECK_FALSE(validate_video(bad).empty());
}

TEST_CASE("format_double renders shortest round-trip decimals") {
    CHECK(format_double(3.5) == "3.5");
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(16.0) == "16");
    CHECK(format_double(0.1) == "0.1");
    double v = 1.0 / 3.0;
    CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("question type and role strings") {
    CHECK(to_string(QuestionType::multiple_choice) == "multiple_choice");
    CHECK(question_type_from_string("numerical") == QuestionType::numerical);
    CHECK(question_type_from_string("regression") == QuestionType::regression);
    CHECK_FALSE(question_type_from_string("open").has_value());
    CHECK(to_string(Role::questioner) == "questioner");
    CHECK(to_string(Role::solver) == "solver");
}

TEST_CASE("shuffle strategy parsing") {
    auto s = shuffle_strategy_from_string("random");
    REQUIRE(s.has_value());
    CHECK(s->kind == ShuffleKind::random);

    s = shuffle_strategy_from_string("reverse");
    REQUIRE(s.has_value());
    CHECK(s->kind == ShuffleKind::reverse);

    s = shuffle_strategy_from_string("block:4");
    REQUIRE(s.has_value());
    CHECK(s->kind == ShuffleKind::block);
    CHECK(s->block_size == 4);

    CHECK_FALSE(shuffle_strategy_from_string("block:0").has_value());
    CHECK_FALSE(shuffle_strategy_from_string("zigzag").has_value());
    CHECK(to_string(ShuffleStrategy{ShuffleKind::block, 7}) == "block:7");
}

// serialize -> parse -> serialize is a fixed point for every domain type
TEST_CASE("serialization round-trips bit-exactly") {
    VideoRef v = sample_video();
    Json j = to_json(v);
    CHECK(video_ref_from_json(j) == v);
    CHECK(to_json(video_ref_from_json(j)).dump() == j.dump());

    FrameWindow w{3, 10, 3.0, 10.0};
    CHECK(frame_window_from_json(to_json(w)) == w);

    Segment seg{2.5, 5.0};
    CHECK(segment_from_json(to_json(seg)) == seg);

    QuestionRecord q;
    q.question_type = QuestionType::numerical;
    q.question_text = "How many?";
    q.reference_answer = "3";
    q.source_window = w;
    q.raw_output = "<type>numerical</type><question>How many?</question><answer>3</answer>";
    Json qj = to_json(q);
    CHECK(question_record_from_json(qj) == q);
    CHECK(to_json(question_record_from_json(qj)).dump() == qj.dump());

    SolverResponse r;
    r.raw_output = "\\boxed{3} <segment>2.5s--5.0s</segment>";
    r.answer = "3";
    r.segment = seg;
    r.format_valid_answer = true;
    r.format_valid_segment = true;
    CHECK(solver_response_from_json(to_json(r)) == r);

    RewardBreakdown b;
    b.role = Role::solver;
    b.format_gate = 1;
    b.accuracy = 1;
    b.format_term = 1;
    b.iou = 0.5;
    b.total = 1.15;
    Json bj = to_json(b);
    CHECK(reward_breakdown_from_json(bj) == b);
    CHECK(to_json(reward_breakdown_from_json(bj)).dump() == bj.dump());

    CuratedExample e;
    e.video_id = "vid-1";
    e.window = w;
    e.question = q;
    e.pseudo_answer = "3";
    e.confidence = 0.7;
    e.iteration = 2;
    Json ej = to_json(e);
    CHECK(curated_example_from_json(ej) == e);
    CHECK(to_json(curated_example_from_json(ej)).dump() == ej.dump());
}

TEST_CASE("config JSON round-trip and unknown-key rejection") {
    PipelineConfig cfg;
    cfg.rng_seed = 1234;
    cfg.videos_path = "videos.jsonl";
    cfg.shuffle_strategy = ShuffleStrategy{ShuffleKind::block, 4};
    Json j = config_to_json(cfg);
    PipelineConfig back = config_from_json(j);
    CHECK(config_to_json(back).dump() == j.dump());
    CHECK(back.rng_seed == 1234);
    CHECK(back.shuffle_strategy.kind == ShuffleKind::block);

    Json bad = j;
    bad["lamda_q"] = 0.2;  // typo must fail loud
    CHECK_THROWS_AS(config_from_json(bad), std::runtime_error);
}

TEST_CASE("shared endpoint settings apply to both endpoints") {
    Json j{{"timeout_s", 5.0}, {"max_in_flight", 3}, {"temperature", 0.7}};
    PipelineConfig cfg = config_from_json(j);
    CHECK(cfg.questioner_endpoint.timeout_s == doctest::Approx(5.0));
    CHECK(cfg.solver_endpoint.timeout_s == doctest::Approx(5.0));
    CHECK(cfg.questioner_endpoint.max_in_flight == 3);
    CHECK(cfg.solver_endpoint.max_in_flight == 3);
    CHECK(cfg.solver_endpoint.temperature == doctest::Approx(0.7));
}

TEST_CASE("resolved run id defaults to the seed") {
    PipelineConfig cfg;
    cfg.rng_seed = 99;
    CHECK(cfg.resolved_run_id() == "run-99");
    cfg.run_id = "exp-a";
    CHECK(cfg.resolved_run_id() == "exp-a");
}
