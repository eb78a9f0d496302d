#include "evoforge/perturb.hpp"

#include <algorithm>
#include <numeric>

namespace evoforge::perturb {

bool Permutation::is_identity() const {
    for (size_t i = 0; i < mapping.size(); ++i)
        if (mapping[i] != static_cast<int>(i)) return false;
    return true;
}

Permutation Permutation::inverse() const {
    Permutation inv;
    inv.strategy = strategy;
    inv.mapping.assign(mapping.size(), 0);
    for (size_t i = 0; i < mapping.size(); ++i) inv.mapping[mapping[i]] = static_cast<int>(i);
    return inv;
}

FrameWindow sample_window(const VideoRef& video, int k, Rng& rng) {
    const int n = static_cast<int>(video.frames.size());
    if (n < k)
        throw VideoTooShort("video " + video.video_id + " has " + std::to_string(n) +
                            " frames, window needs " + std::to_string(k));
    int start = static_cast<int>(rng.uniform_u64(static_cast<std::uint64_t>(n - k + 1)));
    FrameWindow w;
    w.start_index = start;
    w.end_index = start + k - 1;
    w.t_s = video.frames[w.start_index].timestamp_s;
    w.t_e = video.frames[w.end_index].timestamp_s;
    return w;
}

namespace {

void fisher_yates(std::vector<int>& v, Rng& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.uniform_u64(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace

Permutation make_permutation(int n, const ShuffleStrategy& strategy, Rng& rng) {
    Permutation p;
    p.strategy = strategy;
    switch (strategy.kind) {
        case ShuffleKind::reverse: {
            p.mapping.resize(n);
            for (int i = 0; i < n; ++i) p.mapping[i] = n - 1 - i;
            break;
        }
        case ShuffleKind::random: {
            p.mapping.resize(n);
            std::iota(p.mapping.begin(), p.mapping.end(), 0);
            fisher_yates(p.mapping, rng);
            // An identity draw carries no contrastive signal; resample once.
            if (n >= 2 && p.is_identity()) fisher_yates(p.mapping, rng);
            break;
        }
        case ShuffleKind::block: {
            const int b = strategy.block_size;
            const int num_blocks = (n + b - 1) / b;
            std::vector<int> order(num_blocks);
            std::iota(order.begin(), order.end(), 0);
            fisher_yates(order, rng);
            if (num_blocks >= 2) {
                bool ident = true;
                for (int i = 0; i < num_blocks; ++i)
                    if (order[i] != i) ident = false;
                if (ident) fisher_yates(order, rng);
            }
            p.mapping.reserve(n);
            for (int blk : order) {
                int begin = blk * b;
                int end = std::min(begin + b, n);
                for (int i = begin; i < end; ++i) p.mapping.push_back(i);
            }
            break;
        }
    }
    return p;
}

VideoRef apply_permutation(const VideoRef& video, const Permutation& perm) {
    if (perm.mapping.size() != video.frames.size())
        throw LengthMismatch("permutation length " + std::to_string(perm.mapping.size()) +
                             " != frame count " + std::to_string(video.frames.size()));
    VideoRef out;
    out.video_id = video.video_id;
    out.duration_s = video.duration_s;
    out.frames.reserve(video.frames.size());
    for (int src : perm.mapping) out.frames.push_back(video.frames[src]);
    return out;
}

VideoRef window_clip(const VideoRef& video, const FrameWindow& window) {
    VideoRef out;
    out.video_id = video.video_id;
    out.duration_s = video.duration_s;
    for (int i = window.start_index; i <= window.end_index; ++i)
        out.frames.push_back(video.frames.at(static_cast<size_t>(i)));
    return out;
}

}  // namespace evoforge::perturb
