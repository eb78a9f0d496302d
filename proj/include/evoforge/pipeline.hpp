#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evoforge/core.hpp"
#include "evoforge/grpo.hpp"
#include "evoforge/modelclient.hpp"
#include "evoforge/rng.hpp"

namespace evoforge::pipeline {

// --- dataset persistence ---------------------------------------------------

// CuratedExample plus any unknown fields found on disk; rewrites preserve them.
struct DatasetRecord {
    CuratedExample example;
    Json extra;

    bool operator==(const DatasetRecord& other) const;
};

void write_dataset(const std::string& path, const std::vector<DatasetRecord>& records);
void write_dataset(const std::string& path, const std::vector<CuratedExample>& examples);

// Throws std::runtime_error naming the 1-based line number on malformed input.
std::vector<DatasetRecord> read_dataset(const std::string& path);

// JSONL manifest of VideoRef records; every video is invariant-checked.
std::vector<VideoRef> load_video_manifest(const std::string& path);

// --- run state ---------------------------------------------------------------

// Progress is linear: per iteration, steps_per_phase questioner steps, one
// curate pass, steps_per_phase solver steps. `units_completed` indexes into
// that sequence; everything else is derived for readability.
struct RunState {
    std::string run_id;
    int units_completed = 0;
    int iteration = 0;          // of the last completed unit (1-based)
    std::string phase;          // "questioner" | "curate" | "solver"
    int step = 0;               // within phase, 1-based
    bool done = false;
};

Json run_state_to_json(const RunState& s);
RunState run_state_from_json(const Json& j);

struct RequestAudit {
    int iteration = 0;
    std::string phase;    // "phase1" | "phase2" | "phase3"
    std::string purpose;  // "questioner" | "solver_orig" | "solver_shuffled" | "solver"
    int attachment_count = 0;
};

struct CurateStats {
    int videos_total = 0;
    int kept = 0;
    int skipped_short = 0;
    int invalid_question = 0;
    int no_valid_answers = 0;
};

// Offline reward recompute: scores raw solver outputs against a curated
// example exactly as phase 3 does.
RewardBreakdown score_solver_output(const std::string& raw, const CuratedExample& example,
                                    const PipelineConfig& cfg);

// The co-evolution loop. Owns the endpoints, the run directory and the RNG
// root; all draws are keyed on (iteration, phase, step, video/example id) so
// results are independent of scheduling order and resumable mid-run.
class Runner {
public:
    Runner(PipelineConfig cfg, std::vector<VideoRef> videos);

    void set_request_observer(std::function<void(const RequestAudit&)> observer);

    // Runs up to max_units remaining work units (0 = run to completion),
    // persisting state after each; resumes from the persisted state if any.
    RunState run(int max_units = 0);

    std::filesystem::path run_path() const;
    int total_units() const;

    // Individual phases, exposed for targeted tests and the curate/score CLI.
    std::vector<grpo::RolloutGroup> phase1_questioner_step(int iteration, int step);
    std::vector<DatasetRecord> phase2_construct_dataset(int iteration, CurateStats* stats = nullptr);
    std::vector<grpo::RolloutGroup> phase3_solver_step(int iteration, int step,
                                                       const std::vector<DatasetRecord>& dataset);

    const PipelineConfig& config() const { return cfg_; }

private:
    struct Unit {
        int iteration;
        std::string phase;
        int step;  // 0 for curate
    };

    std::vector<Unit> unit_sequence() const;
    void execute_unit(const Unit& unit);
    void wait_for_ack(const std::filesystem::path& batch_path) const;
    void write_iteration_metrics(int iteration);
    const VideoRef& video_by_id(const std::string& id) const;
    void observe(const RequestAudit& audit) const;

    PipelineConfig cfg_;
    std::vector<VideoRef> videos_;
    std::map<std::string, size_t> video_index_;
    modelclient::ChatClient questioner_client_;
    modelclient::ChatClient solver_client_;
    Rng root_;
    std::function<void(const RequestAudit&)> observer_;
};

}  // namespace evoforge::pipeline
