#pragma once

#include <stdexcept>
#include <vector>

#include "evoforge/core.hpp"
#include "evoforge/rng.hpp"

namespace evoforge::perturb {

struct VideoTooShort : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct LengthMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bijection on {0..n-1}; output position i shows original frame mapping[i].
struct Permutation {
    std::vector<int> mapping;
    ShuffleStrategy strategy;

    bool is_identity() const;
    Permutation inverse() const;
};

// Uniform contiguous K-frame window. Throws VideoTooShort when n < K.
FrameWindow sample_window(const VideoRef& video, int k, Rng& rng);

// random: uniform bijection (identity resampled once when n >= 2);
// reverse: fixed reversal; block(b): blocks of b consecutive indices randomly
// reordered with intra-block order intact (final short block is a normal block).
Permutation make_permutation(int n, const ShuffleStrategy& strategy, Rng& rng);

// Reorders the frame list; each FrameRef keeps its original timestamp/index.
VideoRef apply_permutation(const VideoRef& video, const Permutation& perm);

// Frames [start_index, end_index] as a standalone clip (timestamps/indices kept).
VideoRef window_clip(const VideoRef& video, const FrameWindow& window);

}  // namespace evoforge::perturb
