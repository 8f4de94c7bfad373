#pragma once

// Single-channel NIR frame sequences and the spatial/temporal frame
// operations: padded crop, bilinear resize, normalized frame differences.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "nirpulse/error.hpp"

namespace nirpulse {

// T x H x W intensities in [0,1], t-major row-major storage.
struct FrameSequence {
    std::size_t frame_count = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    float fps = 0.0f;
    std::vector<float> pixels;

    std::size_t frame_size() const { return height * width; }
    const float* frame(std::size_t t) const { return pixels.data() + t * frame_size(); }
    float* frame(std::size_t t) { return pixels.data() + t * frame_size(); }
    double duration_s() const {
        return frame_count == 0 ? 0.0 : static_cast<double>(frame_count - 1) / fps;
    }
};

inline FrameSequence make_frames(std::size_t t, std::size_t h, std::size_t w, float fps,
                                 std::vector<float> pixels) {
    require(t >= 1 && h >= 1 && w >= 1, "frame sequence dimensions must be positive");
    require(fps > 0.0f, "fps must be positive");
    require(pixels.size() == t * h * w, "pixel buffer size mismatch");
    for (float v : pixels)
        if (!(v >= 0.0f && v <= 1.0f))
            throw invariant_error("pixel out of [0,1] or non-finite");
    return FrameSequence{t, h, w, fps, std::move(pixels)};
}

struct BoundingBox {
    int x = 0; // left
    int y = 0; // top
    int w = 0;
    int h = 0;
};

// Normalized frame differences, (T-1) x H x W in [-1,1].
struct MotionMaps {
    std::size_t map_count = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<float> values;

    std::size_t map_size() const { return height * width; }
    const float* map(std::size_t t) const { return values.data() + t * map_size(); }
};

// Pixel rectangle [x0,x1) x [y0,y1) after padding and clamping.
struct CropRegion {
    std::size_t x0, y0, x1, y1;
    std::size_t width() const { return x1 - x0; }
    std::size_t height() const { return y1 - y0; }
};

inline CropRegion padded_region(const BoundingBox& box, double pad_fraction,
                                std::size_t frame_w, std::size_t frame_h) {
    require(pad_fraction >= 0.0, "pad fraction must be non-negative");
    require(box.w > 0 && box.h > 0, "bounding box must have positive size");
    const double px = pad_fraction * box.w;
    const double py = pad_fraction * box.h;
    const double x0 = std::floor(box.x - px);
    const double y0 = std::floor(box.y - py);
    const double x1 = std::ceil(box.x + box.w + px);
    const double y1 = std::ceil(box.y + box.h + py);
    const double cx0 = std::clamp(x0, 0.0, static_cast<double>(frame_w));
    const double cy0 = std::clamp(y0, 0.0, static_cast<double>(frame_h));
    const double cx1 = std::clamp(x1, 0.0, static_cast<double>(frame_w));
    const double cy1 = std::clamp(y1, 0.0, static_cast<double>(frame_h));
    if (!(cx1 > cx0 && cy1 > cy0))
        throw invariant_error("crop region does not intersect the frame");
    return CropRegion{static_cast<std::size_t>(cx0), static_cast<std::size_t>(cy0),
                      static_cast<std::size_t>(cx1), static_cast<std::size_t>(cy1)};
}

inline FrameSequence crop_with_padding(const FrameSequence& seq, const BoundingBox& box,
                                       double pad_fraction) {
    const CropRegion r = padded_region(box, pad_fraction, seq.width, seq.height);
    FrameSequence out;
    out.frame_count = seq.frame_count;
    out.height = r.height();
    out.width = r.width();
    out.fps = seq.fps;
    out.pixels.resize(out.frame_count * out.frame_size());
    for (std::size_t t = 0; t < seq.frame_count; ++t) {
        const float* src = seq.frame(t);
        float* dst = out.frame(t);
        for (std::size_t y = 0; y < out.height; ++y) {
            const float* row = src + (r.y0 + y) * seq.width + r.x0;
            std::copy(row, row + out.width, dst + y * out.width);
        }
    }
    return out;
}

namespace detail {

// Half-pixel-center source coordinate for output index i.
inline double src_coord(std::size_t i, double scale, std::size_t in_size) {
    const double c = (static_cast<double>(i) + 0.5) * scale - 0.5;
    return std::clamp(c, 0.0, static_cast<double>(in_size - 1));
}

inline void resize_frame_bilinear(const float* in, std::size_t in_h, std::size_t in_w,
                                  float* out, std::size_t out_h, std::size_t out_w) {
    const double sy = static_cast<double>(in_h) / static_cast<double>(out_h);
    const double sx = static_cast<double>(in_w) / static_cast<double>(out_w);
    for (std::size_t oy = 0; oy < out_h; ++oy) {
        const double fy = src_coord(oy, sy, in_h);
        const std::size_t y0 = static_cast<std::size_t>(fy);
        const std::size_t y1 = std::min(y0 + 1, in_h - 1);
        const double wy = fy - static_cast<double>(y0);
        for (std::size_t ox = 0; ox < out_w; ++ox) {
            const double fx = src_coord(ox, sx, in_w);
            const std::size_t x0 = static_cast<std::size_t>(fx);
            const std::size_t x1 = std::min(x0 + 1, in_w - 1);
            const double wx = fx - static_cast<double>(x0);
            const double top = in[y0 * in_w + x0] + wx * (in[y0 * in_w + x1] - in[y0 * in_w + x0]);
            const double bot = in[y1 * in_w + x0] + wx * (in[y1 * in_w + x1] - in[y1 * in_w + x0]);
            out[oy * out_w + ox] = static_cast<float>(top + wy * (bot - top));
        }
    }
}

} // namespace detail

inline FrameSequence resize_bilinear(const FrameSequence& seq, std::size_t out_h,
                                     std::size_t out_w) {
    require(out_h >= 1 && out_w >= 1, "resize dimensions must be positive");
    FrameSequence out;
    out.frame_count = seq.frame_count;
    out.height = out_h;
    out.width = out_w;
    out.fps = seq.fps;
    out.pixels.resize(out.frame_count * out_h * out_w);
    for (std::size_t t = 0; t < seq.frame_count; ++t)
        detail::resize_frame_bilinear(seq.frame(t), seq.height, seq.width, out.frame(t), out_h,
                                      out_w);
    return out;
}

// m(t) = (C(t+1) - C(t)) / (C(t+1) + C(t) + epsilon), per pixel.
inline MotionMaps motion_representation(const FrameSequence& seq, double epsilon = 1e-6) {
    require(seq.frame_count >= 2, "motion representation needs at least two frames");
    require(epsilon >= 0.0, "epsilon must be non-negative");
    MotionMaps out;
    out.map_count = seq.frame_count - 1;
    out.height = seq.height;
    out.width = seq.width;
    out.values.resize(out.map_count * out.map_size());
    const std::size_t fs = seq.frame_size();
    for (std::size_t t = 0; t < out.map_count; ++t) {
        const float* a = seq.frame(t);
        const float* b = seq.frame(t + 1);
        float* m = out.values.data() + t * fs;
        for (std::size_t i = 0; i < fs; ++i) {
            const double num = static_cast<double>(b[i]) - static_cast<double>(a[i]);
            const double den = static_cast<double>(b[i]) + static_cast<double>(a[i]) + epsilon;
            m[i] = den == 0.0 ? 0.0f : static_cast<float>(num / den);
        }
    }
    return out;
}

} // namespace nirpulse
