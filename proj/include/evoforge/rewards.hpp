#pragma once

#include <optional>
#include <vector>

#include "evoforge/core.hpp"
#include "evoforge/parse.hpp"

namespace evoforge::rewards {

struct VoteResult {
    parse::AnswerKey pseudo;
    int count = 0;
};

// Majority class under answers_equivalent; representative is the first-seen
// member of the winning class, ties broken by earliest first occurrence.
VoteResult majority_vote(const std::vector<parse::AnswerKey>& answers);

// Vote over M samples where format-invalid ones are absent. Absent entries can
// never match the pseudo-label, keeping the confidence denominator at M.
std::optional<VoteResult> majority_vote_partial(
    const std::vector<std::optional<parse::AnswerKey>>& answers);

// Fraction of `answers` equivalent to `pseudo` (denominator = answers.size()).
double confidence(const std::vector<parse::AnswerKey>& answers,
                  const parse::AnswerKey& pseudo);
double confidence_partial(const std::vector<std::optional<parse::AnswerKey>>& answers,
                          const parse::AnswerKey& pseudo);

// min(s, 1 - s); requires s in [0, 1].
double difficulty_reward(double s);

// max(0, s_orig - s_shuf); both in [0, 1].
double temporal_aware_reward(double s_orig, double s_shuf);

// fmt_gate * (max(0, diff - div) + lambda_q * temp)
double questioner_total(int fmt_gate, double diff, double div, double temp,
                        double lambda_q);

// Interval IoU on the real line. Zero-length union (two identical points) -> 1.
double interval_iou(const Segment& pred, const Segment& target);

// (1-w)*acc + w*fmt + lambda_s*iou*acc
double solver_total(int acc, int fmt, double iou, double w, double lambda_s);

}  // namespace evoforge::rewards
