#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "evoforge/rng.hpp"
#include "evoforge/textsim.hpp"

using namespace evoforge;
using namespace evoforge::textsim;

namespace {

// Independent reference BLEU, written against the definition rather than the
// production code: n-grams as joined strings, add-one smoothed precisions,
// geometric mean, brevity penalty exp(1 - r/c) for c < r.
double oracle_bleu(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
    if (cand.empty() || ref.empty()) return 0.0;
    size_t max_order = std::min<size_t>(4, std::min(cand.size(), ref.size()));
    double log_sum = 0.0;
    for (size_t n = 1; n <= max_order; ++n) {
        std::map<std::string, int> ref_counts;
        for (size_t i = 0; i + n <= ref.size(); ++i) {
            std::string g;
            for (size_t k = 0; k < n; ++k) g += ref[i + k] + "\x1f";
            ++ref_counts[g];
        }
        int matched = 0, total = 0;
        std::map<std::string, int> used;
        for (size_t i = 0; i + n <= cand.size(); ++i) {
            std::string g;
            for (size_t k = 0; k < n; ++k) g += cand[i + k] + "\x1f";
            ++total;
            if (used[g] < ref_counts[g]) {
                ++used[g];
                ++matched;
            }
        }
        log_sum += std::log((matched + 1.0) / (total + 1.0));
    }
    double bleu = std::exp(log_sum / static_cast<double>(max_order));
    double c = static_cast<double>(cand.size()), r = static_cast<double>(ref.size());
    if (c < r) bleu *= std::exp(1.0 - r / c);
    return bleu;
}

std::vector<std::string> random_sentence(Rng& rng, int len, int vocab) {
    std::vector<std::string> out;
    for (int i = 0; i < len; ++i) out.push_back("w" + std::to_string(rng.uniform_u64(vocab)));
    return out;
}

}  // namespace

TEST_CASE("tokenize") {
    CHECK(tokenize("What changes first?") ==
          std::vector<std::string>{"what", "changes", "first", "?"});
    CHECK(tokenize("") == std::vector<std::string>{});
    CHECK(tokenize("A  B") == std::vector<std::string>{"a", "b"});
    CHECK(tokenize("Red, green; blue.") ==
          std::vector<std::string>{"red", ",", "green", ";", "blue", "."});
}

TEST_CASE("sentence_bleu basics") {
    std::vector<std::string> x;
    for (int i = 0; i < 10; ++i) x.push_back("t" + std::to_string(i));
    CHECK(sentence_bleu(x, x) == 1.0);
    CHECK(sentence_bleu({}, x) == 0.0);
    CHECK(sentence_bleu(x, {}) == 0.0);
}

// candidate = reference truncated to half: BP = exp(1-2), all smoothed
// precisions exactly 1 on a distinct-token sentence.
TEST_CASE("sentence_bleu brevity penalty hand example") {
    std::vector<std::string> ref = {"a", "b", "c", "d", "e", "f", "g", "h"};
    std::vector<std::string> cand(ref.begin(), ref.begin() + 4);
    CHECK(sentence_bleu(cand, ref) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("sentence_bleu matches the reference oracle on 100 random pairs") {
    Rng rng(5150);
    for (int i = 0; i < 100; ++i) {
        auto a = random_sentence(rng, 1 + static_cast<int>(rng.uniform_u64(15)), 12);
        auto b = random_sentence(rng, 1 + static_cast<int>(rng.uniform_u64(15)), 12);
        CHECK(sentence_bleu(a, b) == doctest::Approx(oracle_bleu(a, b)).epsilon(1e-12));
    }
    // disjoint vocabularies: smoothed-zero floor matches the oracle
    std::vector<std::string> a = {"p", "q", "r", "s", "t"};
    std::vector<std::string> b = {"u", "v", "w", "x", "y"};
    CHECK(sentence_bleu(a, b) == doctest::Approx(oracle_bleu(a, b)).epsilon(1e-12));
}

TEST_CASE("sentence_bleu self-match dominates equal-length alternatives") {
    Rng rng(77);
    for (int i = 0; i < 50; ++i) {
        auto x = random_sentence(rng, 8, 6);
        auto y = random_sentence(rng, 8, 6);
        CHECK(sentence_bleu(x, x) >= sentence_bleu(y, x));
    }
}

TEST_CASE("symmetric_similarity") {
    Rng rng(9);
    auto a = random_sentence(rng, 10, 8);
    std::vector<std::string> b(a.begin(), a.begin() + 5);
    CHECK(symmetric_similarity(a, a) == 1.0);
    CHECK(symmetric_similarity(a, b) == doctest::Approx(symmetric_similarity(b, a)));
    CHECK(symmetric_similarity(a, b) ==
          doctest::Approx((oracle_bleu(a, b) + oracle_bleu(b, a)) / 2.0).epsilon(1e-12));
}

TEST_CASE("pairwise_similarity produces a valid matrix") {
    Rng rng(13);
    std::vector<std::vector<std::string>> sentences;
    for (int i = 0; i < 6; ++i) sentences.push_back(random_sentence(rng, 7, 5));
    SimilarityMatrix m = pairwise_similarity(sentences);
    REQUIRE(m.n == 6);
    for (int i = 0; i < 6; ++i) {
        CHECK(m.at(i, i) == 1.0);
        for (int j = 0; j < 6; ++j) {
            CHECK(m.at(i, j) == m.at(j, i));
            CHECK(m.at(i, j) >= 0.0);
            CHECK(m.at(i, j) <= 1.0);
        }
    }
}

namespace {

SimilarityMatrix constant_matrix(int n, double v) {
    SimilarityMatrix m = SimilarityMatrix::identity(n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) m.set(i, j, v);
    return m;
}

}  // namespace

TEST_CASE("clustering extremes") {
    Clustering all_one = average_linkage_cluster(constant_matrix(8, 1.0), 0.5);
    CHECK(all_one.cluster_sizes.size() == 1);
    CHECK(all_one.cluster_sizes.at(0) == 8);

    Clustering singletons = average_linkage_cluster(constant_matrix(8, 0.0), 0.5);
    CHECK(singletons.cluster_sizes.size() == 8);

    // tau = 0: everything merges; tau > 1: nothing merges
    CHECK(average_linkage_cluster(constant_matrix(5, 0.0), 0.0).cluster_sizes.size() == 1);
    CHECK(average_linkage_cluster(constant_matrix(5, 1.0), 1.0 + 1e-9).cluster_sizes.size() == 5);
}

TEST_CASE("clustering block matrix splits into the two planted groups") {
    SimilarityMatrix m = SimilarityMatrix::identity(8);
    for (int i = 0; i < 8; ++i)
        for (int j = i + 1; j < 8; ++j) m.set(i, j, (i / 4 == j / 4) ? 0.9 : 0.1);
    Clustering c = average_linkage_cluster(m, 0.5);
    REQUIRE(c.cluster_sizes.size() == 2);
    CHECK(c.cluster_sizes.at(0) == 4);
    CHECK(c.cluster_sizes.at(1) == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(c.assignment[i] == c.assignment[0]);
        CHECK(c.assignment[4 + i] == c.assignment[4]);
    }
    CHECK(c.assignment[0] != c.assignment[4]);
}

// Tie-breaking is by cluster id, so exact equivariance is only guaranteed for
// tie-free matrices; continuous draws make ties measure-zero.
TEST_CASE("clustering is permutation-equivariant") {
    Rng rng(41);
    for (int trial = 0; trial < 30; ++trial) {
        int n = 6;
        SimilarityMatrix m = SimilarityMatrix::identity(n);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) m.set(i, j, rng.uniform_real());
        Clustering base = average_linkage_cluster(m, 0.5);

        std::vector<int> perm(n);
        for (int i = 0; i < n; ++i) perm[i] = i;
        for (int i = n - 1; i > 0; --i)
            std::swap(perm[i], perm[static_cast<int>(rng.uniform_u64(i + 1))]);
        SimilarityMatrix pm = SimilarityMatrix::identity(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) pm.values[i][j] = m.at(perm[i], perm[j]);
        Clustering permuted = average_linkage_cluster(pm, 0.5);

        // same-cluster relation must be preserved under relabeling
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                CHECK((permuted.assignment[i] == permuted.assignment[j]) ==
                      (base.assignment[perm[i]] == base.assignment[perm[j]]));
    }
}

TEST_CASE("diversity penalty formula") {
    SimilarityMatrix m = SimilarityMatrix::identity(8);
    Clustering singles = average_linkage_cluster(m, 0.5);
    CHECK(diversity_penalty(singles, 0, 8, 1.0) == doctest::Approx(0.125));

    Clustering one = average_linkage_cluster(constant_matrix(8, 1.0), 0.5);
    CHECK(diversity_penalty(one, 3, 8, 1.0) == doctest::Approx(1.0));

    SimilarityMatrix half = SimilarityMatrix::identity(8);
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) half.set(i, j, 0.9);
    Clustering c = average_linkage_cluster(half, 0.5);
    CHECK(diversity_penalty(c, 0, 8, 1.0) == doctest::Approx(0.5));
    CHECK(diversity_penalty(c, 7, 8, 1.0) == doctest::Approx(0.125));
}

TEST_CASE("penalty sum equals lambda_d * sum of squared cluster sizes / G") {
    Rng rng(55);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 8;
        SimilarityMatrix m = SimilarityMatrix::identity(n);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) m.set(i, j, rng.uniform_real());
        Clustering c = average_linkage_cluster(m, 0.5);
        double sum = 0.0;
        for (int i = 0; i < n; ++i) sum += diversity_penalty(c, i, n, 1.0);
        double expected = 0.0;
        for (const auto& [id, size] : c.cluster_sizes)
            expected += static_cast<double>(size) * size / n;
        CHECK(sum == doctest::Approx(expected).epsilon(1e-12));
        CHECK(sum >= 1.0 - 1e-12);  // Cauchy-Schwarz lower bound lambda_d * n / G = 1
    }
}
