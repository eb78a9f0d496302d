#include "evoforge/textsim.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace evoforge::textsim {

SimilarityMatrix SimilarityMatrix::identity(int n) {
    SimilarityMatrix m;
    m.n = n;
    m.values.assign(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) m.values[i][i] = 1.0;
    return m;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            tokens.push_back(cur);
            cur.clear();
        }
    };
    for (char ch : text) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            flush();
        } else if (std::ispunct(c)) {
            flush();
            tokens.emplace_back(1, ch);
        } else {
            cur.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    flush();
    return tokens;
}

namespace {

// n-gram counts as joined strings; '\x1f' cannot appear inside a token.
std::unordered_map<std::string, int> ngram_counts(const std::vector<std::string>& tokens,
                                                  int n) {
    std::unordered_map<std::string, int> counts;
    if (static_cast<int>(tokens.size()) < n) return counts;
    for (size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key;
        for (int k = 0; k < n; ++k) {
            if (k) key.push_back('\x1f');
            key += tokens[i + k];
        }
        ++counts[key];
    }
    return counts;
}

}  // namespace

double sentence_bleu(const std::vector<std::string>& candidate,
                     const std::vector<std::string>& reference) {
    const int c = static_cast<int>(candidate.size());
    const int r = static_cast<int>(reference.size());
    if (c == 0 || r == 0) return 0.0;

    const int max_order = std::min({4, c, r});
    double log_prec_sum = 0.0;
    for (int n = 1; n <= max_order; ++n) {
        auto cand = ngram_counts(candidate, n);
        auto ref = ngram_counts(reference, n);
        int total = c - n + 1;
        int matched = 0;
        for (const auto& [gram, count] : cand) {
            auto it = ref.find(gram);
            if (it != ref.end()) matched += std::min(count, it->second);
        }
        // add-one smoothing
        double p = static_cast<double>(matched + 1) / static_cast<double>(total + 1);
        log_prec_sum += std::log(p);
    }
    double geo_mean = std::exp(log_prec_sum / max_order);
    double bp = c < r ? std::exp(1.0 - static_cast<double>(r) / c) : 1.0;
    return bp * geo_mean;
}

double symmetric_similarity(const std::vector<std::string>& a,
                            const std::vector<std::string>& b) {
    return 0.5 * (sentence_bleu(a, b) + sentence_bleu(b, a));
}

SimilarityMatrix pairwise_similarity(const std::vector<std::vector<std::string>>& token_lists) {
    const int n = static_cast<int>(token_lists.size());
    SimilarityMatrix m = SimilarityMatrix::identity(n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            m.set(i, j, symmetric_similarity(token_lists[i], token_lists[j]));
    return m;
}

Clustering average_linkage_cluster(const SimilarityMatrix& sim, double tau) {
    const int n = sim.n;
    std::vector<std::vector<int>> clusters;
    clusters.reserve(n);
    for (int i = 0; i < n; ++i) clusters.push_back({i});

    while (clusters.size() > 1) {
        double best = -std::numeric_limits<double>::infinity();
        int bi = -1, bj = -1;
        for (size_t i = 0; i < clusters.size(); ++i) {
            for (size_t j = i + 1; j < clusters.size(); ++j) {
                double sum = 0.0;
                for (int a : clusters[i])
                    for (int b : clusters[j]) sum += sim.at(a, b);
                double avg = sum / (clusters[i].size() * clusters[j].size());
                if (avg > best) {
                    best = avg;
                    bi = static_cast<int>(i);
                    bj = static_cast<int>(j);
                }
                // ties resolved by the scan order: lowest (i, j) wins
            }
        }
        if (best < tau) break;
        auto merged = clusters[bi];
        merged.insert(merged.end(), clusters[bj].begin(), clusters[bj].end());
        std::sort(merged.begin(), merged.end());
        clusters.erase(clusters.begin() + bj);
        clusters[bi] = std::move(merged);
    }

    // Relabel contiguously by smallest member index.
    std::sort(clusters.begin(), clusters.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    Clustering result;
    result.assignment.assign(n, 0);
    for (size_t id = 0; id < clusters.size(); ++id) {
        for (int member : clusters[id]) result.assignment[member] = static_cast<int>(id);
        result.cluster_sizes[static_cast<int>(id)] = static_cast<int>(clusters[id].size());
    }
    return result;
}

double diversity_penalty(const Clustering& clustering, int index, int group_size,
                         double lambda_d) {
    int cluster = clustering.assignment.at(index);
    int size = clustering.cluster_sizes.at(cluster);
    return lambda_d * static_cast<double>(size) / static_cast<double>(group_size);
}

}  // namespace evoforge::textsim
