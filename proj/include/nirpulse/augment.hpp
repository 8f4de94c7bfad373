#pragma once

// Heart-rate augmentation: per-bin target sampling over 40-140 bpm and the
// paired temporal stretch of signal and video, trimmed to a shared length.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "nirpulse/error.hpp"
#include "nirpulse/frames.hpp"
#include "nirpulse/rng.hpp"
#include "nirpulse/signal.hpp"

namespace nirpulse {

inline constexpr std::size_t kAugmentationBins = 10;
inline constexpr double kAugmentationHrMin = 40.0;
inline constexpr double kAugmentationBinWidth = 10.0;

struct AugmentationPlan {
    std::array<double, kAugmentationBins> targets_bpm{}; // one per 10-bpm bin
    double source_hr_bpm = 0.0;
    std::uint64_t seed = 0;
};

inline double augmentation_bin_low(std::size_t bin) {
    return kAugmentationHrMin + kAugmentationBinWidth * static_cast<double>(bin);
}

// One target HR drawn uniformly per bin; source HR estimated from the
// ground-truth peaks.
inline AugmentationPlan plan_augmentation(const PpgSignal& gt, std::uint64_t seed) {
    const auto extrema = detect_extrema(gt);
    require(extrema.peaks.size() >= 2, "plan_augmentation: ground truth has fewer than 2 peaks");
    AugmentationPlan plan;
    plan.source_hr_bpm = hr_from_rr(extrema, gt.sample_rate_hz);
    plan.seed = seed;
    Rng rng(seed);
    for (std::size_t k = 0; k < kAugmentationBins; ++k) {
        const double lo = augmentation_bin_low(k);
        plan.targets_bpm[k] = rng.uniform(lo, lo + kAugmentationBinWidth);
    }
    return plan;
}

// Duration scales by `factor` at an unchanged sample rate; a periodic input
// of frequency f comes out at f/factor.
inline PpgSignal time_stretch_signal(const PpgSignal& signal, double factor) {
    detail::check_gap_free(signal, "time_stretch_signal");
    require(factor > 0.0, "time_stretch_signal: factor must be positive");
    if (factor == 1.0) return PpgSignal{signal.samples, signal.sample_rate_hz, {}};
    return PpgSignal{detail::resample_by_ratio(signal.samples, factor), signal.sample_rate_hz, {}};
}

// Per-pixel temporal interpolation with the same index mapping as
// time_stretch_signal; fps is unchanged.
inline FrameSequence time_stretch_frames(const FrameSequence& seq, double factor) {
    require(seq.frame_count >= 2, "time_stretch_frames: need at least 2 frames");
    require(factor > 0.0, "time_stretch_frames: factor must be positive");
    const std::size_t out_count =
        static_cast<std::size_t>(std::floor(static_cast<double>(seq.frame_count - 1) * factor)) + 1;
    FrameSequence out;
    out.frame_count = out_count;
    out.height = seq.height;
    out.width = seq.width;
    out.fps = seq.fps;
    out.pixels.resize(out_count * seq.frame_size());
    const std::size_t fs = seq.frame_size();
    const double last = static_cast<double>(seq.frame_count - 1);
    for (std::size_t j = 0; j < out_count; ++j) {
        const double p = std::min(static_cast<double>(j) / factor, last);
        const std::size_t i = std::min(static_cast<std::size_t>(p), seq.frame_count - 2);
        const double frac = p - static_cast<double>(i);
        const float* a = seq.frame(i);
        const float* b = seq.frame(i + 1);
        float* dst = out.frame(j);
        if (frac == 0.0) {
            std::copy(a, a + fs, dst);
        } else {
            for (std::size_t k = 0; k < fs; ++k)
                dst[k] = static_cast<float>(a[k] + frac * (static_cast<double>(b[k]) - a[k]));
        }
    }
    return out;
}

struct AugmentedClip {
    FrameSequence frames;
    PpgSignal signal;
    double target_hr_bpm = 0.0;
    double factor = 1.0;
};

// Stretch the pair toward every bin target, then trim all clips (from the
// end) to the shortest one so slow heart rates carry no extra duration.
// Rejects the video when the common length cannot hold `min_length` samples.
inline std::vector<AugmentedClip> augment_pair(const FrameSequence& seq, const PpgSignal& gt,
                                               const AugmentationPlan& plan,
                                               std::size_t min_length) {
    detail::check_gap_free(gt, "augment_pair");
    require(plan.source_hr_bpm > 0.0, "augment_pair: plan has no source HR");
    require(std::abs(static_cast<double>(seq.fps) - gt.sample_rate_hz) < 1e-6,
            "augment_pair: video fps and signal rate must match");
    const double dur_gap = std::abs(seq.duration_s() - gt.duration_s());
    const double one_sample = std::max(1.0 / seq.fps, 1.0 / gt.sample_rate_hz);
    if (dur_gap > one_sample + 1e-9)
        throw rejection_error("augment_pair: video and signal durations differ by more than one sample");

    std::vector<AugmentedClip> clips;
    clips.reserve(kAugmentationBins);
    std::size_t shortest = std::numeric_limits<std::size_t>::max();
    for (double target : plan.targets_bpm) {
        AugmentedClip clip;
        clip.target_hr_bpm = target;
        clip.factor = plan.source_hr_bpm / target;
        clip.frames = time_stretch_frames(seq, clip.factor);
        clip.signal = time_stretch_signal(gt, clip.factor);
        shortest = std::min({shortest, clip.frames.frame_count, clip.signal.size()});
        clips.push_back(std::move(clip));
    }
    if (shortest < min_length)
        throw rejection_error("augment_pair: trimmed length " + std::to_string(shortest) +
                              " is below the window length " + std::to_string(min_length));
    for (auto& clip : clips) {
        clip.frames.pixels.resize(shortest * clip.frames.frame_size());
        clip.frames.frame_count = shortest;
        clip.signal.samples.resize(shortest);
    }
    return clips;
}

} // namespace nirpulse
