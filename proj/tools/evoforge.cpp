// evoforge: self-play question/solver co-evolution engine CLI.
//
//   evoforge run --config cfg.json [--resume <run_id>] [--max-videos N]
//   evoforge curate --config cfg.json [--iteration N] [--output path]
//   evoforge score --input responses.jsonl --dataset dataset.jsonl [--config cfg.json]
//   evoforge mock-serve --script script.json --port P [--seed S] [--delay-ms D]
//   evoforge report --run <run_dir>/<run_id>
//
// The questioner/solver API key is read from EVOFORGE_API_KEY when set.

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "evoforge/core.hpp"
#include "evoforge/mockserver.hpp"
#include "evoforge/pipeline.hpp"

namespace fs = std::filesystem;
using evoforge::Json;

namespace {

volatile std::sig_atomic_t g_stop = 0;
void handle_signal(int) { g_stop = 1; }

evoforge::PipelineConfig load_config(const std::string& path) {
    auto cfg = evoforge::load_config_file(path);
    if (const char* key = std::getenv("EVOFORGE_API_KEY"); key && *key) {
        cfg.questioner_endpoint.api_key = key;
        cfg.solver_endpoint.api_key = key;
    }
    return cfg;
}

int cmd_run(const std::string& config_path, const std::string& resume_id, int max_videos) {
    auto cfg = load_config(config_path);
    if (!resume_id.empty()) cfg.run_id = resume_id;
    if (max_videos > 0) cfg.max_videos = max_videos;
    if (cfg.videos_path.empty()) {
        std::cerr << "config error: videos_path is required for run\n";
        return 2;
    }
    auto videos = evoforge::pipeline::load_video_manifest(cfg.videos_path);
    evoforge::pipeline::Runner runner(cfg, videos);

    std::cout << "run " << cfg.resolved_run_id() << ": " << runner.total_units()
              << " units, " << videos.size() << " videos\n";
    auto state = runner.run();
    std::cout << "completed " << state.units_completed << "/" << runner.total_units()
              << " units (" << (state.done ? "done" : "partial") << ")\n";
    std::cout << "artifacts: " << runner.run_path().string() << "\n";
    return state.done ? 0 : 1;
}

int cmd_curate(const std::string& config_path, int iteration, const std::string& output) {
    auto cfg = load_config(config_path);
    if (cfg.videos_path.empty()) {
        std::cerr << "config error: videos_path is required for curate\n";
        return 2;
    }
    auto videos = evoforge::pipeline::load_video_manifest(cfg.videos_path);
    evoforge::pipeline::Runner runner(cfg, videos);
    evoforge::pipeline::CurateStats stats;
    auto records = runner.phase2_construct_dataset(iteration, &stats);
    std::string path = output.empty() ? "dataset.jsonl" : output;
    evoforge::pipeline::write_dataset(path, records);
    std::cout << "videos=" << stats.videos_total << " kept=" << stats.kept
              << " skipped_short=" << stats.skipped_short
              << " invalid_question=" << stats.invalid_question
              << " no_valid_answers=" << stats.no_valid_answers << "\n";
    std::cout << "wrote " << path << "\n";
    return 0;
}

// Offline rescoring: each input line is {"example_index": i, "output": raw}.
int cmd_score(const std::string& input_path, const std::string& dataset_path,
              const std::string& config_path) {
    evoforge::PipelineConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    auto dataset = evoforge::pipeline::read_dataset(dataset_path);

    std::ifstream in(input_path);
    if (!in) {
        std::cerr << "cannot open " << input_path << "\n";
        return 2;
    }
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        Json rec;
        size_t idx;
        std::string raw;
        try {
            rec = Json::parse(line);
            idx = rec.at("example_index").get<size_t>();
            raw = rec.at("output").get<std::string>();
            if (idx >= dataset.size()) throw std::runtime_error("example_index out of range");
        } catch (const std::exception& e) {
            std::cerr << input_path << ": line " << line_no << ": " << e.what() << "\n";
            return 2;
        }
        auto b = evoforge::pipeline::score_solver_output(raw, dataset[idx].example, cfg);
        Json out{{"example_index", idx}, {"reward", evoforge::to_json(b)}};
        std::cout << out.dump() << "\n";
    }
    return 0;
}

int cmd_mock_serve(const std::string& script_path, int port, std::uint64_t seed, int delay_ms) {
    auto script = evoforge::mockserver::MockScript::load_file(script_path);
    auto problems = script.validate();
    if (!problems.empty()) {
        for (const auto& p : problems) std::cerr << "script error: " << p << "\n";
        return 2;
    }
    evoforge::mockserver::MockServer server(script, seed, delay_ms);
    int bound = server.start(port);
    std::cout << "mock endpoint listening on " << server.base_url() << " (port " << bound
              << ", seed " << seed << ")\n";
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
    return 0;
}

int cmd_report(const std::string& run_path) {
    fs::path root(run_path);
    if (!fs::exists(root / "state.json")) {
        std::cerr << "no state.json under " << run_path << "\n";
        return 2;
    }
    std::cout << "iteration,questioner_mean_total,questioner_format_rate,"
                 "curation_yield,solver_mean_total,solver_accuracy_rate,solver_mean_iou\n";
    for (int it = 1;; ++it) {
        fs::path metrics_path = root / ("iter" + std::to_string(it)) / "metrics.json";
        std::ifstream in(metrics_path);
        if (!in) break;
        Json m;
        in >> m;
        std::cout << it << "," << m["questioner"]["mean_total"].get<double>() << ","
                  << m["questioner"]["format_valid_rate"].get<double>() << ","
                  << m["curation"].value("yield", 0.0) << ","
                  << m["solver"]["mean_total"].get<double>() << ","
                  << m["solver"]["accuracy_rate"].get<double>() << ","
                  << m["solver"]["mean_iou"].get<double>() << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"evoforge: temporal self-play rollout and reward engine"};
    app.require_subcommand(1);

    std::string config_path, resume_id, output, input_path, dataset_path, script_path, run_path;
    int max_videos = 0, iteration = 1, port = 8089, delay_ms = 0;
    std::uint64_t seed = 0;

    auto* run = app.add_subcommand("run", "Run the co-evolution loop");
    run->add_option("--config", config_path, "pipeline config JSON")->required();
    run->add_option("--resume", resume_id, "resume the run with this run_id");
    run->add_option("--max-videos", max_videos, "cap the curation pass at N videos");

    auto* curate = app.add_subcommand("curate", "Run a standalone curation pass");
    curate->add_option("--config", config_path, "pipeline config JSON")->required();
    curate->add_option("--iteration", iteration, "iteration label for the dataset");
    curate->add_option("--output", output, "output dataset path (default dataset.jsonl)");

    auto* score = app.add_subcommand("score", "Rescore solver outputs offline");
    score->add_option("--input", input_path, "JSONL of {example_index, output}")->required();
    score->add_option("--dataset", dataset_path, "curated dataset JSONL")->required();
    score->add_option("--config", config_path, "pipeline config JSON (reward weights)");

    auto* mock = app.add_subcommand("mock-serve", "Serve a scripted chat endpoint");
    mock->add_option("--script", script_path, "mock script JSON")->required();
    mock->add_option("--port", port, "port to bind (default 8089)");
    mock->add_option("--seed", seed, "mock RNG seed");
    mock->add_option("--delay-ms", delay_ms, "artificial per-request delay");

    auto* report = app.add_subcommand("report", "Per-iteration metrics as CSV");
    report->add_option("--run", run_path, "run directory (<run_dir>/<run_id>)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, resume_id, max_videos);
        if (curate->parsed()) return cmd_curate(config_path, iteration, output);
        if (score->parsed()) return cmd_score(input_path, dataset_path, config_path);
        if (mock->parsed()) return cmd_mock_serve(script_path, port, seed, delay_ms);
        if (report->parsed()) return cmd_report(run_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
