#include "evoforge/grpo.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace evoforge::grpo {

std::vector<double> group_advantages(const std::vector<double>& rewards, double epsilon) {
    const size_t n = rewards.size();
    if (n < 2) throw std::invalid_argument("group_advantages: need at least 2 rewards");

    bool all_equal = true;
    for (size_t i = 1; i < n; ++i)
        if (rewards[i] != rewards[0]) all_equal = false;
    if (all_equal) return std::vector<double>(n, 0.0);

    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<double>(n);  // population variance
    double denom = std::sqrt(var) + epsilon;

    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = (rewards[i] - mean) / denom;
    return out;
}

void populate_advantages(RolloutGroup& group, double epsilon) {
    std::vector<double> rewards;
    rewards.reserve(group.rollouts.size());
    for (const auto& r : group.rollouts) rewards.push_back(r.reward.total);
    auto adv = group_advantages(rewards, epsilon);
    for (size_t i = 0; i < adv.size(); ++i) group.rollouts[i].advantage = adv[i];
}

int emit_training_batch(const std::vector<RolloutGroup>& groups, int iteration,
                        int phase_step, std::ostream& sink) {
    int count = 0;
    for (const auto& group : groups) {
        for (const auto& rollout : group.rollouts) {
            Json rec{{"group_id", group.group_id},
                     {"role", to_string(group.role)},
                     {"iteration", iteration},
                     {"phase_step", phase_step},
                     {"prompt_ref", group.prompt_ref},
                     {"completion", rollout.raw_output},
                     {"reward_total", rollout.reward.total},
                     {"reward_components", to_json(rollout.reward)},
                     {"advantage", rollout.advantage},
                     {"kl_coeff", kKlCoefficient}};
            sink << rec.dump() << '\n';
            ++count;
        }
    }
    if (!sink) throw std::runtime_error("emit_training_batch: sink write failure");
    return count;
}

int emit_training_batch_file(const std::vector<RolloutGroup>& groups, int iteration,
                             int phase_step, const std::string& path) {
    namespace fs = std::filesystem;
    fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    int count = 0;
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string());
        count = emit_training_batch(groups, iteration, phase_step, out);
    }
    fs::rename(tmp, target);
    return count;
}

}  // namespace evoforge::grpo
