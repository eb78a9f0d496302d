#include "evoforge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "evoforge/parse.hpp"
#include "evoforge/perturb.hpp"
#include "evoforge/rewards.hpp"
#include "evoforge/textsim.hpp"

namespace evoforge::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr int kVideoWorkers = 4;

void atomic_write(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string());
        out << content;
    }
    fs::rename(tmp, path);
}

// Parallel map with deterministic slot assignment; exceptions rethrown.
void parallel_for(size_t n, int workers, const std::function<void(size_t)>& fn) {
    if (n == 0) return;
    int w = std::min<int>(workers, static_cast<int>(n));
    if (w <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> threads;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int t = 0; t < w; ++t) {
        threads.emplace_back([&] {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= n) break;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : threads) th.join();
    if (error) std::rethrow_exception(error);
}

std::map<std::string, int> histogram10(const std::vector<double>& values) {
    std::map<std::string, int> bins;
    for (double v : values) {
        int b = std::min(9, static_cast<int>(std::floor(v * 10.0)));
        b = std::max(0, b);
        std::string key = "[" + format_double(b / 10.0) + "," +
                          (b == 9 ? std::string("1]") : format_double((b + 1) / 10.0) + ")");
        ++bins[key];
    }
    return bins;
}

Json histogram_json(const std::map<std::string, int>& h) {
    Json j = Json::object();
    for (const auto& [k, v] : h) j[k] = v;
    return j;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

// --- dataset persistence ---------------------------------------------------

bool DatasetRecord::operator==(const DatasetRecord& other) const {
    return example == other.example && extra == other.extra;
}

namespace {

Json dataset_record_to_json(const DatasetRecord& rec) {
    Json j = to_json(rec.example);
    if (rec.extra.is_object())
        for (auto it = rec.extra.begin(); it != rec.extra.end(); ++it) j[it.key()] = it.value();
    return j;
}

DatasetRecord dataset_record_from_json(const Json& j) {
    DatasetRecord rec;
    rec.example = curated_example_from_json(j);
    rec.extra = Json::object();
    static const char* known[] = {"video_id", "window",     "question",
                                  "pseudo_answer", "confidence", "iteration"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool is_known = false;
        for (const char* k : known)
            if (it.key() == k) is_known = true;
        if (!is_known) rec.extra[it.key()] = it.value();
    }
    return rec;
}

}  // namespace

void write_dataset(const std::string& path, const std::vector<DatasetRecord>& records) {
    std::string content;
    for (const auto& rec : records) content += dataset_record_to_json(rec).dump() + "\n";
    atomic_write(path, content);
}

void write_dataset(const std::string& path, const std::vector<CuratedExample>& examples) {
    std::vector<DatasetRecord> records;
    records.reserve(examples.size());
    for (const auto& e : examples) records.push_back(DatasetRecord{e, Json::object()});
    write_dataset(path, records);
}

std::vector<DatasetRecord> read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset: " + path);
    std::vector<DatasetRecord> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(dataset_record_from_json(Json::parse(line)));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<VideoRef> load_video_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open video manifest: " + path);
    std::vector<VideoRef> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            VideoRef v = video_ref_from_json(Json::parse(line));
            auto problems = validate_video(v);
            if (!problems.empty()) throw std::runtime_error(problems.front());
            out.push_back(std::move(v));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

// --- run state ---------------------------------------------------------------

Json run_state_to_json(const RunState& s) {
    return Json{{"run_id", s.run_id},
                {"units_completed", s.units_completed},
                {"iteration", s.iteration},
                {"phase", s.phase},
                {"step", s.step},
                {"done", s.done}};
}

RunState run_state_from_json(const Json& j) {
    RunState s;
    s.run_id = j.at("run_id").get<std::string>();
    s.units_completed = j.at("units_completed").get<int>();
    s.iteration = j.at("iteration").get<int>();
    s.phase = j.at("phase").get<std::string>();
    s.step = j.at("step").get<int>();
    s.done = j.at("done").get<bool>();
    return s;
}

// --- scoring ----------------------------------------------------------------

RewardBreakdown score_solver_output(const std::string& raw, const CuratedExample& example,
                                    const PipelineConfig& cfg) {
    SolverResponse resp = parse::parse_solver_output(raw);
    QuestionType qtype = example.question.question_type;
    int acc = 0;
    if (resp.answer) {
        auto predicted = parse::normalize_answer(*resp.answer, qtype);
        auto pseudo = parse::normalize_answer(example.pseudo_answer, qtype);
        acc = parse::answers_equivalent(predicted, pseudo) ? 1 : 0;
    }
    int fmt = resp.format_valid_answer && resp.format_valid_segment ? 1 : 0;
    double iou = 0.0;
    if (resp.segment)
        iou = rewards::interval_iou(*resp.segment,
                                    Segment{example.window.t_s, example.window.t_e});

    RewardBreakdown b;
    b.role = Role::solver;
    b.format_gate = fmt;
    b.accuracy = acc;
    b.format_term = fmt;
    b.iou = iou;
    b.total = rewards::solver_total(acc, fmt, iou, cfg.format_weight, cfg.lambda_s);
    return b;
}

// --- Runner -------------------------------------------------------------------

Runner::Runner(PipelineConfig cfg, std::vector<VideoRef> videos)
    : cfg_(std::move(cfg)),
      videos_(std::move(videos)),
      questioner_client_(cfg_.questioner_endpoint),
      solver_client_(cfg_.solver_endpoint),
      root_(cfg_.rng_seed) {
    auto violations = validate_config(cfg_);
    if (!violations.empty())
        throw std::runtime_error("invalid config: " + violations.front().field + ": " +
                                 violations.front().message);
    for (size_t i = 0; i < videos_.size(); ++i) video_index_[videos_[i].video_id] = i;
}

void Runner::set_request_observer(std::function<void(const RequestAudit&)> observer) {
    observer_ = std::move(observer);
}

void Runner::observe(const RequestAudit& audit) const {
    if (observer_) observer_(audit);
}

fs::path Runner::run_path() const {
    return fs::path(cfg_.run_dir) / cfg_.resolved_run_id();
}

int Runner::total_units() const {
    return cfg_.iterations * (2 * cfg_.steps_per_phase + 1);
}

const VideoRef& Runner::video_by_id(const std::string& id) const {
    auto it = video_index_.find(id);
    if (it == video_index_.end()) throw std::runtime_error("unknown video_id: " + id);
    return videos_[it->second];
}

std::vector<Runner::Unit> Runner::unit_sequence() const {
    std::vector<Unit> units;
    for (int it = 1; it <= cfg_.iterations; ++it) {
        for (int s = 1; s <= cfg_.steps_per_phase; ++s) units.push_back({it, "questioner", s});
        units.push_back({it, "curate", 0});
        for (int s = 1; s <= cfg_.steps_per_phase; ++s) units.push_back({it, "solver", s});
    }
    return units;
}

// Phase 1: per video, G questions; per valid question M solver answers on the
// original frames and M on a freshly permuted copy, scored against the
// original pseudo-label.
std::vector<grpo::RolloutGroup> Runner::phase1_questioner_step(int iteration, int step) {
    if (videos_.empty()) throw std::runtime_error("phase 1 requires at least one video");
    const int G = cfg_.group_size;
    const int M = cfg_.solver_samples;

    std::string step_key =
        "it" + std::to_string(iteration) + "/phase1/step" + std::to_string(step);
    Rng select = root_.fork(step_key + "/select");
    std::vector<size_t> chosen;
    for (int k = 0; k < cfg_.groups_per_step; ++k)
        chosen.push_back(static_cast<size_t>(select.uniform_u64(videos_.size())));

    std::vector<grpo::RolloutGroup> groups(chosen.size());
    parallel_for(chosen.size(), kVideoWorkers, [&](size_t k) {
        const VideoRef& video = videos_[chosen[k]];
        std::string prefix = step_key + "/g" + std::to_string(k) + "/" + video.video_id;

        Json qreq = modelclient::build_questioner_request(video, cfg_.questioner_endpoint);
        observe({iteration, "phase1", "questioner", static_cast<int>(video.frames.size())});
        auto raws = questioner_client_.sample_completions(
            qreq, G, root_.fork(prefix + "/qgen").next_u64());

        std::vector<std::optional<QuestionRecord>> records(raws.size());
        std::vector<int> valid_positions;
        std::vector<std::vector<std::string>> token_lists;
        for (size_t g = 0; g < raws.size(); ++g) {
            auto parsed = parse::parse_questioner_output(raws[g]);
            if (parsed.ok()) {
                records[g] = parsed.record;
                valid_positions.push_back(static_cast<int>(g));
                token_lists.push_back(textsim::tokenize(parsed.record->question_text));
            }
        }
        auto sim = textsim::pairwise_similarity(token_lists);
        auto clustering = textsim::average_linkage_cluster(sim, cfg_.tau_bleu);

        grpo::RolloutGroup group;
        group.group_id = "it" + std::to_string(iteration) + "-q-s" + std::to_string(step) +
                         "-g" + std::to_string(k) + "-" + video.video_id;
        group.role = Role::questioner;
        group.prompt_ref = "video:" + video.video_id;

        auto solver_keys = [&](const VideoRef& frames, const QuestionRecord& q,
                               const std::string& key, const char* purpose) {
            Json sreq =
                modelclient::build_solver_request(frames, q.question_text, cfg_.solver_endpoint);
            observe({iteration, "phase1", purpose, static_cast<int>(frames.frames.size())});
            auto answers =
                solver_client_.sample_completions(sreq, M, root_.fork(key).next_u64());
            std::vector<std::optional<parse::AnswerKey>> keys;
            keys.reserve(answers.size());
            for (const auto& raw : answers) {
                auto resp = parse::parse_solver_output(raw);
                if (resp.answer)
                    keys.push_back(parse::normalize_answer(*resp.answer, q.question_type));
                else
                    keys.push_back(std::nullopt);
            }
            return keys;
        };

        int valid_seen = 0;
        for (int g = 0; g < G; ++g) {
            grpo::Rollout rollout;
            rollout.raw_output = raws[static_cast<size_t>(g)];
            RewardBreakdown& b = rollout.reward;
            b.role = Role::questioner;
            if (!records[static_cast<size_t>(g)]) {
                b.format_gate = 0;
                b.total = 0.0;
            } else {
                const QuestionRecord& q = *records[static_cast<size_t>(g)];
                std::string qkey = prefix + "/q" + std::to_string(g);
                int pos = valid_seen++;
                b.format_gate = 1;
                b.diversity_penalty =
                    textsim::diversity_penalty(clustering, pos, G, cfg_.lambda_d);

                auto orig_keys = solver_keys(video, q, qkey + "/orig", "solver_orig");
                auto vote = rewards::majority_vote_partial(orig_keys);
                double s_orig =
                    vote ? rewards::confidence_partial(orig_keys, vote->pseudo) : 0.0;

                Rng perm_rng = root_.fork(qkey + "/perm");
                auto perm = perturb::make_permutation(static_cast<int>(video.frames.size()),
                                                      cfg_.shuffle_strategy, perm_rng);
                VideoRef shuffled = perturb::apply_permutation(video, perm);
                auto shuf_keys = solver_keys(shuffled, q, qkey + "/shuf", "solver_shuffled");
                double s_shuf =
                    vote ? rewards::confidence_partial(shuf_keys, vote->pseudo) : 0.0;

                b.difficulty = rewards::difficulty_reward(s_orig);
                b.temporal_aware = rewards::temporal_aware_reward(s_orig, s_shuf);
                b.total = rewards::questioner_total(1, b.difficulty, b.diversity_penalty,
                                                    b.temporal_aware, cfg_.lambda_q);
            }
            group.rollouts.push_back(std::move(rollout));
        }
        grpo::populate_advantages(group);
        groups[k] = std::move(group);
    });
    return groups;
}

// Phase 2: one window-conditioned question per video, M solver answers on the
// full video, keep iff confidence falls inside the closed score band.
std::vector<DatasetRecord> Runner::phase2_construct_dataset(int iteration, CurateStats* stats) {
    const int M = cfg_.solver_samples;
    size_t limit = videos_.size();
    if (cfg_.max_videos > 0) limit = std::min(limit, static_cast<size_t>(cfg_.max_videos));

    enum class Outcome { kept, skipped_short, invalid_question, no_valid_answers, out_of_band };
    struct Slot {
        Outcome outcome = Outcome::out_of_band;
        std::optional<CuratedExample> example;
    };
    std::vector<Slot> slots(limit);

    std::string it_key = "it" + std::to_string(iteration) + "/phase2/";
    parallel_for(limit, kVideoWorkers, [&](size_t idx) {
        const VideoRef& video = videos_[idx];
        Slot& slot = slots[idx];
        if (static_cast<int>(video.frames.size()) < cfg_.window_length) {
            slot.outcome = Outcome::skipped_short;
            return;
        }
        std::string prefix = it_key + video.video_id;
        Rng wrng = root_.fork(prefix + "/window");
        FrameWindow window = perturb::sample_window(video, cfg_.window_length, wrng);
        VideoRef clip = perturb::window_clip(video, window);

        Json qreq = modelclient::build_questioner_request(clip, cfg_.questioner_endpoint);
        observe({iteration, "phase2", "questioner", static_cast<int>(clip.frames.size())});
        auto qraws = questioner_client_.sample_completions(
            qreq, 1, root_.fork(prefix + "/qgen").next_u64());
        auto parsed = parse::parse_questioner_output(qraws[0]);
        if (!parsed.ok()) {
            slot.outcome = Outcome::invalid_question;
            return;
        }
        QuestionRecord question = *parsed.record;
        question.source_window = window;

        Json sreq = modelclient::build_solver_request(video, question.question_text,
                                                      cfg_.solver_endpoint);
        observe({iteration, "phase2", "solver", static_cast<int>(video.frames.size())});
        auto answers =
            solver_client_.sample_completions(sreq, M, root_.fork(prefix + "/solve").next_u64());
        std::vector<std::optional<parse::AnswerKey>> keys;
        for (const auto& raw : answers) {
            auto resp = parse::parse_solver_output(raw);
            if (resp.answer)
                keys.push_back(parse::normalize_answer(*resp.answer, question.question_type));
            else
                keys.push_back(std::nullopt);
        }
        auto vote = rewards::majority_vote_partial(keys);
        if (!vote) {
            slot.outcome = Outcome::no_valid_answers;
            return;
        }
        double conf = rewards::confidence_partial(keys, vote->pseudo);
        if (conf < cfg_.score_band_min || conf > cfg_.score_band_max) {
            slot.outcome = Outcome::out_of_band;
            return;
        }
        CuratedExample example;
        example.video_id = video.video_id;
        example.window = window;
        example.question = question;
        example.pseudo_answer = vote->pseudo.canonical;
        example.confidence = conf;
        example.iteration = iteration;
        slot.outcome = Outcome::kept;
        slot.example = std::move(example);
    });

    CurateStats local;
    std::vector<DatasetRecord> records;
    local.videos_total = static_cast<int>(limit);
    for (auto& slot : slots) {
        switch (slot.outcome) {
            case Outcome::kept:
                ++local.kept;
                records.push_back(DatasetRecord{std::move(*slot.example), Json::object()});
                break;
            case Outcome::skipped_short: ++local.skipped_short; break;
            case Outcome::invalid_question: ++local.invalid_question; break;
            case Outcome::no_valid_answers: ++local.no_valid_answers; break;
            case Outcome::out_of_band: break;
        }
    }
    if (stats) *stats = local;
    return records;
}

// Phase 3: per curated example, G solver responses scored against the stored
// pseudo-answer and window.
std::vector<grpo::RolloutGroup> Runner::phase3_solver_step(
    int iteration, int step, const std::vector<DatasetRecord>& dataset) {
    if (dataset.empty()) return {};
    const int G = cfg_.group_size;

    std::string step_key =
        "it" + std::to_string(iteration) + "/phase3/step" + std::to_string(step);
    Rng select = root_.fork(step_key + "/select");
    std::vector<size_t> chosen;
    for (int k = 0; k < cfg_.groups_per_step; ++k)
        chosen.push_back(static_cast<size_t>(select.uniform_u64(dataset.size())));

    std::vector<grpo::RolloutGroup> groups(chosen.size());
    parallel_for(chosen.size(), kVideoWorkers, [&](size_t k) {
        const CuratedExample& example = dataset[chosen[k]].example;
        const VideoRef& video = video_by_id(example.video_id);
        std::string prefix =
            step_key + "/g" + std::to_string(k) + "/ex" + std::to_string(chosen[k]);

        Json sreq = modelclient::build_solver_request(video, example.question.question_text,
                                                      cfg_.solver_endpoint);
        observe({iteration, "phase3", "solver", static_cast<int>(video.frames.size())});
        auto raws =
            solver_client_.sample_completions(sreq, G, root_.fork(prefix + "/solve").next_u64());

        grpo::RolloutGroup group;
        group.group_id = "it" + std::to_string(iteration) + "-s-s" + std::to_string(step) +
                         "-g" + std::to_string(k) + "-ex" + std::to_string(chosen[k]);
        group.role = Role::solver;
        group.prompt_ref = "example:" + std::to_string(chosen[k]) + ":" + example.video_id;
        for (const auto& raw : raws) {
            grpo::Rollout rollout;
            rollout.raw_output = raw;
            rollout.reward = score_solver_output(raw, example, cfg_);
            group.rollouts.push_back(std::move(rollout));
        }
        grpo::populate_advantages(group);
        groups[k] = std::move(group);
    });
    return groups;
}

void Runner::wait_for_ack(const fs::path& batch_path) const {
    if (cfg_.trainer_ack != "file") return;
    fs::path ack = batch_path;
    ack += ".ack";
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds(
                        static_cast<long long>(cfg_.trainer_ack_timeout_s * 1000.0));
    while (!fs::exists(ack)) {
        if (std::chrono::steady_clock::now() > deadline)
            throw std::runtime_error("trainer did not acknowledge " + batch_path.string() +
                                     " within timeout; state is resumable");
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
}

void Runner::execute_unit(const Unit& unit) {
    fs::path iter_dir = run_path() / ("iter" + std::to_string(unit.iteration));
    if (unit.phase == "questioner") {
        fs::create_directories(iter_dir / "questioner");
        auto groups = phase1_questioner_step(unit.iteration, unit.step);
        fs::path batch =
            iter_dir / "questioner" / ("batch" + std::to_string(unit.step) + ".jsonl");
        grpo::emit_training_batch_file(groups, unit.iteration, unit.step, batch.string());
        wait_for_ack(batch);
    } else if (unit.phase == "curate") {
        fs::create_directories(iter_dir / "curated");
        CurateStats stats;
        auto records = phase2_construct_dataset(unit.iteration, &stats);
        write_dataset((iter_dir / "curated" / "dataset.jsonl").string(), records);
        Json summary{{"videos_total", stats.videos_total},
                     {"kept", stats.kept},
                     {"skipped_short", stats.skipped_short},
                     {"invalid_question", stats.invalid_question},
                     {"no_valid_answers", stats.no_valid_answers}};
        atomic_write(iter_dir / "curated" / "summary.json", summary.dump(2) + "\n");
    } else if (unit.phase == "solver") {
        fs::create_directories(iter_dir / "solver");
        auto dataset = read_dataset((iter_dir / "curated" / "dataset.jsonl").string());
        auto groups = phase3_solver_step(unit.iteration, unit.step, dataset);
        fs::path batch = iter_dir / "solver" / ("batch" + std::to_string(unit.step) + ".jsonl");
        grpo::emit_training_batch_file(groups, unit.iteration, unit.step, batch.string());
        wait_for_ack(batch);
        if (unit.step == cfg_.steps_per_phase) write_iteration_metrics(unit.iteration);
    } else {
        throw std::logic_error("unknown unit phase " + unit.phase);
    }
}

// Metrics are a pure function of the persisted batch/dataset files, so resume
// and rerun always reproduce them byte for byte.
void Runner::write_iteration_metrics(int iteration) {
    fs::path iter_dir = run_path() / ("iter" + std::to_string(iteration));

    std::vector<double> q_total, q_diff, q_div, q_temp;
    std::map<std::string, int> cluster_hist;
    int q_rollouts = 0, q_valid = 0;
    std::vector<double> s_total, s_iou;
    int s_rollouts = 0, s_acc = 0, s_fmt = 0;

    auto scan_batches = [&](const std::string& phase) {
        for (int s = 1; s <= cfg_.steps_per_phase; ++s) {
            fs::path batch = iter_dir / phase / ("batch" + std::to_string(s) + ".jsonl");
            std::ifstream in(batch);
            if (!in) continue;
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                Json rec = Json::parse(line);
                RewardBreakdown b = reward_breakdown_from_json(rec.at("reward_components"));
                if (b.role == Role::questioner) {
                    ++q_rollouts;
                    q_total.push_back(b.total);
                    if (b.format_gate == 1) {
                        ++q_valid;
                        q_diff.push_back(b.difficulty);
                        q_div.push_back(b.diversity_penalty);
                        q_temp.push_back(b.temporal_aware);
                        if (cfg_.lambda_d > 0) {
                            int size = static_cast<int>(std::lround(
                                b.diversity_penalty * cfg_.group_size / cfg_.lambda_d));
                            ++cluster_hist[std::to_string(size)];
                        }
                    }
                } else {
                    ++s_rollouts;
                    s_total.push_back(b.total);
                    s_iou.push_back(b.iou);
                    s_acc += b.accuracy;
                    s_fmt += b.format_term;
                }
            }
        }
    };
    scan_batches("questioner");
    scan_batches("solver");

    Json curation = Json::object();
    {
        fs::path summary_path = iter_dir / "curated" / "summary.json";
        std::ifstream in(summary_path);
        if (in) in >> curation;
        auto dataset = read_dataset((iter_dir / "curated" / "dataset.jsonl").string());
        std::vector<double> confidences;
        for (const auto& rec : dataset) confidences.push_back(rec.example.confidence);
        int total = curation.value("videos_total", 0);
        curation["yield"] =
            total > 0 ? static_cast<double>(confidences.size()) / total : 0.0;
        curation["confidence_histogram"] = histogram_json(histogram10(confidences));
    }

    Json metrics{
        {"iteration", iteration},
        {"questioner",
         Json{{"rollouts", q_rollouts},
              {"format_valid_rate",
               q_rollouts > 0 ? static_cast<double>(q_valid) / q_rollouts : 0.0},
              {"mean_total", mean_of(q_total)},
              {"mean_difficulty", mean_of(q_diff)},
              {"mean_diversity_penalty", mean_of(q_div)},
              {"mean_temporal_aware", mean_of(q_temp)},
              {"cluster_size_histogram", histogram_json(cluster_hist)}}},
        {"curation", curation},
        {"solver",
         Json{{"rollouts", s_rollouts},
              {"mean_total", mean_of(s_total)},
              {"accuracy_rate", s_rollouts > 0 ? static_cast<double>(s_acc) / s_rollouts : 0.0},
              {"format_rate", s_rollouts > 0 ? static_cast<double>(s_fmt) / s_rollouts : 0.0},
              {"mean_iou", mean_of(s_iou)},
              {"iou_histogram", histogram_json(histogram10(s_iou))}}}};
    atomic_write(iter_dir / "metrics.json", metrics.dump(2) + "\n");
}

RunState Runner::run(int max_units) {
    fs::create_directories(run_path());
    atomic_write(run_path() / "config.json", config_to_json(cfg_).dump(2) + "\n");

    RunState state;
    state.run_id = cfg_.resolved_run_id();
    fs::path state_path = run_path() / "state.json";
    if (fs::exists(state_path)) {
        std::ifstream in(state_path);
        Json j;
        in >> j;
        state = run_state_from_json(j);
    }

    auto units = unit_sequence();
    int executed = 0;
    while (state.units_completed < static_cast<int>(units.size())) {
        if (max_units > 0 && executed >= max_units) break;
        const Unit& unit = units[static_cast<size_t>(state.units_completed)];
        execute_unit(unit);
        ++state.units_completed;
        state.iteration = unit.iteration;
        state.phase = unit.phase;
        state.step = unit.step;
        state.done = state.units_completed == static_cast<int>(units.size());
        atomic_write(state_path, run_state_to_json(state).dump(2) + "\n");
        ++executed;
    }
    return state;
}

}  // namespace evoforge::pipeline
