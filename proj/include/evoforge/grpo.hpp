#pragma once

#include <string>
#include <vector>

#include "evoforge/core.hpp"

namespace evoforge::grpo {

struct Rollout {
    std::string raw_output;
    RewardBreakdown reward;
    double advantage = 0.0;
};

struct RolloutGroup {
    std::string group_id;
    Role role = Role::questioner;
    std::string prompt_ref;
    std::vector<Rollout> rollouts;
};

inline constexpr double kAdvantageEpsilon = 1e-8;
inline constexpr double kKlCoefficient = 1e-2;  // carried to batch metadata only

// (r_i - mean) / (population std + epsilon); all-equal groups yield exact zeros.
// Requires at least 2 rewards.
std::vector<double> group_advantages(const std::vector<double>& rewards,
                                     double epsilon = kAdvantageEpsilon);

// Fills rollout advantages from their reward totals.
void populate_advantages(RolloutGroup& group, double epsilon = kAdvantageEpsilon);

// One JSONL record per rollout, stable field order. Returns the record count.
// Re-emission on identical input is byte-identical.
int emit_training_batch(const std::vector<RolloutGroup>& groups, int iteration,
                        int phase_step, std::ostream& sink);

// Writes atomically (temp file + rename).
int emit_training_batch_file(const std::vector<RolloutGroup>& groups, int iteration,
                             int phase_step, const std::string& path);

}  // namespace evoforge::grpo
