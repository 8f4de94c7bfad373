#pragma once

// Synthetic NIR data: a static Gaussian face blob whose brightness is
// modulated by a pulse waveform, plus optional per-pixel noise. Stands in
// for camera data so the whole pipeline can be exercised at desk scale.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "nirpulse/error.hpp"
#include "nirpulse/frames.hpp"
#include "nirpulse/rng.hpp"
#include "nirpulse/signal.hpp"

namespace nirpulse {

struct SynthSpec {
    std::size_t subjects = 1;     // used by callers generating whole datasets
    double hr_bpm = 60.0;         // target heart rate in [40, 140]
    double duration_s = 30.0;
    double fps = 30.0;
    std::size_t height = 16;
    std::size_t width = 16;
    double noise_sigma = 0.0;     // per-pixel Gaussian noise
    double dicrotic_ratio = 0.0;  // secondary-bump amplitude in [0, 1)
    std::uint64_t seed = 0;
};

// One default-length window (64 samples) plus the extra frame it consumes.
inline constexpr std::size_t kMinSyntheticFrames = 65;

struct SynthResult {
    FrameSequence video;
    PpgSignal gt;
    BoundingBox box;
};

inline void validate_synth_spec(const SynthSpec& spec) {
    require(spec.subjects >= 1, "synth spec: subjects must be >= 1");
    require(spec.hr_bpm >= 40.0 && spec.hr_bpm <= 140.0, "synth spec: hr must be in [40, 140] bpm");
    require(spec.fps > 0.0, "synth spec: fps must be positive");
    require(spec.height >= 4 && spec.width >= 4, "synth spec: frames must be at least 4x4");
    require(spec.noise_sigma >= 0.0, "synth spec: noise sigma must be non-negative");
    require(spec.dicrotic_ratio >= 0.0 && spec.dicrotic_ratio < 1.0,
            "synth spec: dicrotic ratio must be in [0, 1)");
    const double frames = std::floor(spec.duration_s * spec.fps) + 1.0;
    require(frames >= static_cast<double>(kMinSyntheticFrames),
            "synth spec: duration too short for one window");
}

// Pulse waveform g(t) = 0.5 + 0.4 sin(2 pi f t) + dicrotic * 0.4 sin(4 pi f t + phi),
// f = hr/60, with phi drawn deterministically from the seed.
inline SynthResult generate_synthetic(const SynthSpec& spec) {
    validate_synth_spec(spec);
    constexpr double kPi = 3.14159265358979323846;
    const double f = spec.hr_bpm / 60.0;
    Rng phase_rng(derive_seed(spec.seed, "synth.phase"));
    const double phi = phase_rng.uniform(0.0, 2.0 * kPi);
    const std::size_t frames =
        static_cast<std::size_t>(std::floor(spec.duration_s * spec.fps)) + 1;

    SynthResult out;
    std::vector<double> gt(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        const double t = static_cast<double>(i) / spec.fps;
        gt[i] = 0.5 + 0.4 * std::sin(2.0 * kPi * f * t) +
                spec.dicrotic_ratio * 0.4 * std::sin(4.0 * kPi * f * t + phi);
    }
    out.gt = make_signal(std::move(gt), spec.fps);

    // static Gaussian blob; brightness rides on the pulse
    const double cy = (static_cast<double>(spec.height) - 1.0) / 2.0;
    const double cx = (static_cast<double>(spec.width) - 1.0) / 2.0;
    const double sigma_b = static_cast<double>(std::min(spec.height, spec.width)) / 6.0;
    std::vector<double> blob(spec.height * spec.width);
    for (std::size_t y = 0; y < spec.height; ++y)
        for (std::size_t x = 0; x < spec.width; ++x) {
            const double dy = (static_cast<double>(y) - cy) / sigma_b;
            const double dx = (static_cast<double>(x) - cx) / sigma_b;
            blob[y * spec.width + x] = std::exp(-0.5 * (dy * dy + dx * dx));
        }

    out.video.frame_count = frames;
    out.video.height = spec.height;
    out.video.width = spec.width;
    out.video.fps = static_cast<float>(spec.fps);
    out.video.pixels.resize(frames * spec.height * spec.width);
    Rng noise_rng(derive_seed(spec.seed, "synth.noise"));
    for (std::size_t i = 0; i < frames; ++i) {
        const double modulation = 0.5 + 0.3 * (out.gt.samples[i] - 0.5);
        float* frame = out.video.frame(i);
        for (std::size_t p = 0; p < spec.height * spec.width; ++p) {
            double v = 0.2 + blob[p] * modulation;
            if (spec.noise_sigma > 0.0) v += spec.noise_sigma * noise_rng.gaussian();
            frame[p] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }

    // bounding box: blob extent out to two sigma, clamped to the frame
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - 2.0 * sigma_b)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - 2.0 * sigma_b)));
    const int x1 = std::min(static_cast<int>(spec.width), static_cast<int>(std::ceil(cx + 2.0 * sigma_b)) + 1);
    const int y1 = std::min(static_cast<int>(spec.height), static_cast<int>(std::ceil(cy + 2.0 * sigma_b)) + 1);
    out.box = BoundingBox{x0, y0, x1 - x0, y1 - y0};
    return out;
}

} // namespace nirpulse
