#pragma once

#include <map>
#include <string>
#include <vector>

namespace evoforge::textsim {

// Symmetric n x n similarity matrix with unit diagonal.
struct SimilarityMatrix {
    int n = 0;
    std::vector<std::vector<double>> values;

    static SimilarityMatrix identity(int n);
    double at(int i, int j) const { return values[i][j]; }
    void set(int i, int j, double v) {
        values[i][j] = v;
        values[j][i] = v;
    }
};

struct Clustering {
    std::vector<int> assignment;       // cluster id per input index
    std::map<int, int> cluster_sizes;  // id -> size
};

// Case-folded, whitespace-delimited, punctuation split off as separate tokens.
std::vector<std::string> tokenize(const std::string& text);

// Sentence BLEU up to 4-grams (order truncated to the shorter side), add-one
// smoothed precisions, geometric mean, standard brevity penalty.
double sentence_bleu(const std::vector<std::string>& candidate,
                     const std::vector<std::string>& reference);

// (bleu(a,b) + bleu(b,a)) / 2
double symmetric_similarity(const std::vector<std::string>& a,
                            const std::vector<std::string>& b);

SimilarityMatrix pairwise_similarity(const std::vector<std::vector<std::string>>& token_lists);

// Agglomerative average linkage: merge the pair of clusters with the highest
// average inter-cluster similarity while it is >= tau. Ties broken by lowest
// (min id, then second id). Cluster ids in the result are contiguous from 0,
// ordered by smallest member index.
Clustering average_linkage_cluster(const SimilarityMatrix& sim, double tau);

// lambda_d * |cluster containing index| / G
double diversity_penalty(const Clustering& clustering, int index, int group_size,
                         double lambda_d);

}  // namespace evoforge::textsim
