#pragma once

// Sliding-window inference: the model regresses n samples per window; all
// windows covering a position are averaged into the final estimate.

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "nirpulse/can.hpp"
#include "nirpulse/error.hpp"
#include "nirpulse/frames.hpp"

namespace nirpulse {

struct WindowConfig {
    std::size_t n = 64;     // samples per window
    std::size_t stride = 1; // start-to-start distance
};

inline void validate_window_config(const WindowConfig& wc) {
    require(wc.n >= 1, "window config: n must be >= 1");
    require(wc.stride >= 1, "window config: stride must be >= 1");
}

// How many windows cover each of t_positions positions when windows of
// length n start at 0, stride, 2*stride, ... while they fit entirely.
inline std::vector<std::size_t> coverage_counts(std::size_t t_positions, const WindowConfig& wc) {
    validate_window_config(wc);
    std::vector<std::size_t> counts(t_positions, 0);
    for (std::size_t s = 0; s + wc.n <= t_positions; s += wc.stride)
        for (std::size_t k = 0; k < wc.n; ++k) ++counts[s + k];
    return counts;
}

struct OverlapResult {
    std::vector<double> values;       // per position; NaN where no window lands
    std::vector<std::size_t> counts;  // windows covering each position
    std::size_t covered_begin = 0;    // [covered_begin, covered_end) is the hull of
    std::size_t covered_end = 0;      // covered positions (begin==end: none); a
                                      // stride larger than n leaves NaN holes inside
};

// Averages window outputs over their overlaps. window_fn(s) must return the
// n regressed values of the window starting at position s. Sums run in
// double regardless of the model's precision.
template <typename WindowFn>
OverlapResult overlap_average(std::size_t t_positions, const WindowConfig& wc, WindowFn&& window_fn) {
    validate_window_config(wc);
    OverlapResult r;
    r.values.assign(t_positions, std::numeric_limits<double>::quiet_NaN());
    r.counts.assign(t_positions, 0);
    std::vector<double> sums(t_positions, 0.0);
    for (std::size_t s = 0; s + wc.n <= t_positions; s += wc.stride) {
        const auto out = window_fn(s);
        require(out.size() == wc.n, "overlap_average: window function returned wrong length");
        for (std::size_t k = 0; k < wc.n; ++k) {
            sums[s + k] += static_cast<double>(out[k]);
            ++r.counts[s + k];
        }
        r.covered_end = s + wc.n;
    }
    for (std::size_t i = 0; i < t_positions; ++i)
        if (r.counts[i] > 0) r.values[i] = sums[i] / static_cast<double>(r.counts[i]);
    return r;
}

// Full-video regression. A window starting at frame s consumes frames
// s..s+n (motion needs pairs), so predictions exist for positions
// 0..frame_count-2 at most; the result has frame_count-1 entries.
template <typename T>
OverlapResult sliding_window_regress(const CanModel<T>& model, const FrameSequence& video,
                                     std::size_t stride, double epsilon = 1e-6) {
    const CanConfig& cfg = model.config;
    require(stride >= 1, "sliding_window_regress: stride must be >= 1");
    require(video.height == cfg.height && video.width == cfg.width,
            "sliding_window_regress: video resolution does not match the model config");
    const std::size_t t_positions = video.frame_count > 0 ? video.frame_count - 1 : 0;
    const WindowConfig wc{cfg.n, stride};
    if (t_positions < cfg.n) {
        OverlapResult empty;
        empty.values.assign(t_positions, std::numeric_limits<double>::quiet_NaN());
        empty.counts.assign(t_positions, 0);
        return empty;
    }

    const MotionMaps maps = motion_representation(video, epsilon);
    const std::size_t hw = cfg.height * cfg.width;
    CanCache<T> cache;
    std::vector<T> appearance(hw), motion(cfg.n * hw);
    return overlap_average(t_positions, wc, [&](std::size_t s) -> const std::vector<T>& {
        std::fill(appearance.begin(), appearance.end(), T(0));
        for (std::size_t k = 0; k <= cfg.n; ++k) {
            const float* f = video.frame(s + k);
            for (std::size_t p = 0; p < hw; ++p) appearance[p] += static_cast<T>(f[p]);
        }
        const T inv = T(1) / static_cast<T>(cfg.n + 1);
        for (auto& v : appearance) v *= inv;
        for (std::size_t k = 0; k < cfg.n; ++k) {
            const float* m = maps.map(s + k);
            for (std::size_t p = 0; p < hw; ++p) motion[k * hw + p] = static_cast<T>(m[p]);
        }
        return can_forward(model, appearance.data(), motion.data(), cache);
    });
}

} // namespace nirpulse
