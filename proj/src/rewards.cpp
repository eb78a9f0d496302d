#include "evoforge/rewards.hpp"

#include <algorithm>
#include <stdexcept>

namespace evoforge::rewards {

namespace {

// Assign each answer to the first existing class whose representative it
// matches; returns (class index per answer, representatives).
struct Classes {
    std::vector<parse::AnswerKey> reps;
    std::vector<int> sizes;
};

Classes partition(const std::vector<parse::AnswerKey>& answers) {
    Classes cls;
    for (const auto& a : answers) {
        bool placed = false;
        for (size_t c = 0; c < cls.reps.size(); ++c) {
            if (parse::answers_equivalent(a, cls.reps[c])) {
                ++cls.sizes[c];
                placed = true;
                break;
            }
        }
        if (!placed) {
            cls.reps.push_back(a);
            cls.sizes.push_back(1);
        }
    }
    return cls;
}

}  // namespace

VoteResult majority_vote(const std::vector<parse::AnswerKey>& answers) {
    if (answers.empty()) throw std::invalid_argument("majority_vote: empty answer list");
    Classes cls = partition(answers);
    size_t best = 0;
    for (size_t c = 1; c < cls.reps.size(); ++c)
        if (cls.sizes[c] > cls.sizes[best]) best = c;  // tie keeps earliest class
    return VoteResult{cls.reps[best], cls.sizes[best]};
}

std::optional<VoteResult> majority_vote_partial(
    const std::vector<std::optional<parse::AnswerKey>>& answers) {
    std::vector<parse::AnswerKey> present;
    for (const auto& a : answers)
        if (a) present.push_back(*a);
    if (present.empty()) return std::nullopt;
    return majority_vote(present);
}

double confidence(const std::vector<parse::AnswerKey>& answers,
                  const parse::AnswerKey& pseudo) {
    if (answers.empty()) throw std::invalid_argument("confidence: empty answer list");
    int match = 0;
    for (const auto& a : answers)
        if (parse::answers_equivalent(a, pseudo)) ++match;
    return static_cast<double>(match) / static_cast<double>(answers.size());
}

double confidence_partial(const std::vector<std::optional<parse::AnswerKey>>& answers,
                          const parse::AnswerKey& pseudo) {
    if (answers.empty()) throw std::invalid_argument("confidence: empty answer list");
    int match = 0;
    for (const auto& a : answers)
        if (a && parse::answers_equivalent(*a, pseudo)) ++match;
    return static_cast<double>(match) / static_cast<double>(answers.size());
}

double difficulty_reward(double s) {
    if (s < 0.0 || s > 1.0) throw std::domain_error("difficulty_reward: s outside [0, 1]");
    return std::min(s, 1.0 - s);
}

double temporal_aware_reward(double s_orig, double s_shuf) {
    if (s_orig < 0.0 || s_orig > 1.0 || s_shuf < 0.0 || s_shuf > 1.0)
        throw std::domain_error("temporal_aware_reward: confidence outside [0, 1]");
    return std::max(0.0, s_orig - s_shuf);
}

double questioner_total(int fmt_gate, double diff, double div, double temp,
                        double lambda_q) {
    return fmt_gate * (std::max(0.0, diff - div) + lambda_q * temp);
}

double interval_iou(const Segment& pred, const Segment& target) {
    double inter = std::min(pred.t_e, target.t_e) - std::max(pred.t_s, target.t_s);
    inter = std::max(0.0, inter);
    double uni = (pred.t_e - pred.t_s) + (target.t_e - target.t_s) - inter;
    if (uni <= 0.0) {
        // both are points; identical -> 1, distinct -> 0
        return pred.t_s == target.t_s ? 1.0 : 0.0;
    }
    return inter / uni;
}

double solver_total(int acc, int fmt, double iou, double w, double lambda_s) {
    return (1.0 - w) * acc + w * fmt + lambda_s * iou * acc;
}

}  // namespace evoforge::rewards
