#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "nirpulse/infer.hpp"
#include "nirpulse/rng.hpp"

using namespace nirpulse;

namespace {

// Independent brute force: materialize every window, then count.
std::vector<std::size_t> brute_counts(std::size_t t, std::size_t n, std::size_t stride) {
    std::vector<std::size_t> counts(t, 0);
    std::size_t s = 0;
    while (true) {
        if (s + n > t) break;
        for (std::size_t k = s; k < s + n; ++k) counts[k] += 1;
        s += stride;
    }
    return counts;
}

CanConfig tiny_config() {
    CanConfig cfg;
    cfg.n = 3;
    cfg.height = 8;
    cfg.width = 8;
    cfg.c1 = 2;
    cfg.c2 = 2;
    cfg.hidden = 4;
    return cfg;
}

FrameSequence random_video(const CanConfig& cfg, std::size_t frames, std::uint64_t seed) {
    FrameSequence v;
    v.frame_count = frames;
    v.height = cfg.height;
    v.width = cfg.width;
    v.fps = 30.0f;
    v.pixels.resize(frames * cfg.height * cfg.width);
    Rng rng(seed);
    for (auto& p : v.pixels) p = (float)rng.uniform(0.05, 0.95);
    return v;
}

} // namespace

TEST_CASE("coverage counts for five positions, window three, stride one") {
    const auto counts = coverage_counts(5, WindowConfig{3, 1});
    REQUIRE(counts == std::vector<std::size_t>{1, 2, 3, 2, 1});
}

TEST_CASE("coverage counts match a brute-force enumeration everywhere") {
    for (std::size_t t = 0; t <= 30; ++t)
        for (std::size_t n = 1; n <= 8; ++n)
            for (std::size_t stride = 1; stride <= n; ++stride) {
                INFO("t=" << t << " n=" << n << " stride=" << stride);
                REQUIRE(coverage_counts(t, WindowConfig{n, stride}) == brute_counts(t, n, stride));
            }
}

TEST_CASE("overlap averaging reconstructs a shared underlying signal exactly") {
    // Every window reports the same underlying f at its positions, so the
    // average must give f back regardless of overlap multiplicity.
    const auto f = [](std::size_t i) { return 0.5 + 0.3 * std::sin(0.7 * (double)i); };
    for (std::size_t stride : {1u, 2u, 5u}) {
        const WindowConfig wc{5, stride};
        const std::size_t t = 23;
        const auto r = overlap_average(t, wc, [&](std::size_t s) {
            std::vector<double> out(wc.n);
            for (std::size_t k = 0; k < wc.n; ++k) out[k] = f(s + k);
            return out;
        });
        REQUIRE(r.values.size() == t);
        REQUIRE(r.counts == coverage_counts(t, wc));
        for (std::size_t i = 0; i < t; ++i) {
            if (r.counts[i] > 0)
                REQUIRE(std::abs(r.values[i] - f(i)) <= 1e-12);
            else
                REQUIRE(std::isnan(r.values[i]));
        }
    }
}

TEST_CASE("overlap averaging divides sums by the cover count") {
    // Window values depend on the window start, making the expected average
    // easy to state: window s contributes s at each covered position.
    const WindowConfig wc{2, 1};
    const auto r = overlap_average(4, wc, [&](std::size_t s) {
        return std::vector<double>{(double)s, (double)s};
    });
    // position 0: window 0 only -> 0; position 1: windows 0,1 -> 0.5;
    // position 2: windows 1,2 -> 1.5; position 3: window 2 only -> 2
    REQUIRE(r.values[0] == Catch::Approx(0.0));
    REQUIRE(r.values[1] == Catch::Approx(0.5));
    REQUIRE(r.values[2] == Catch::Approx(1.5));
    REQUIRE(r.values[3] == Catch::Approx(2.0));
    REQUIRE(r.covered_begin == 0);
    REQUIRE(r.covered_end == 4);
}

TEST_CASE("a stride beyond the window length leaves NaN holes") {
    const WindowConfig wc{2, 3};
    const auto r = overlap_average(8, wc, [&](std::size_t) {
        return std::vector<double>{1.0, 1.0};
    });
    REQUIRE(r.counts == std::vector<std::size_t>{1, 1, 0, 1, 1, 0, 1, 1});
    REQUIRE(std::isnan(r.values[2]));
    REQUIRE(std::isnan(r.values[5]));
    REQUIRE(r.values[0] == 1.0);
    REQUIRE(r.covered_end == 8);
}

TEST_CASE("overlap averaging rejects malformed window outputs") {
    REQUIRE_THROWS_AS(overlap_average(10, WindowConfig{3, 1},
                                      [](std::size_t) { return std::vector<double>{1.0}; }),
                      invariant_error);
    REQUIRE_THROWS_AS(coverage_counts(10, WindowConfig{0, 1}), invariant_error);
    REQUIRE_THROWS_AS(coverage_counts(10, WindowConfig{3, 0}), invariant_error);
}

TEST_CASE("sliding window regression covers frame_count-1 positions") {
    const auto cfg = tiny_config();
    const auto model = init_model<double>(cfg);
    const auto video = random_video(cfg, 12, 5);
    const auto r = sliding_window_regress(model, video, 1);
    REQUIRE(r.values.size() == 11);
    REQUIRE(r.counts == coverage_counts(11, WindowConfig{cfg.n, 1}));
    REQUIRE(r.covered_begin == 0);
    REQUIRE(r.covered_end == 11); // last start s=8 covers 8..10
    for (std::size_t i = 0; i < r.values.size(); ++i) {
        REQUIRE(r.counts[i] > 0);
        REQUIRE(std::isfinite(r.values[i]));
    }
}

TEST_CASE("an all-zero model regresses exactly zero everywhere covered") {
    const auto cfg = tiny_config();
    const auto model = make_model<double>(cfg);
    const auto video = random_video(cfg, 10, 6);
    const auto r = sliding_window_regress(model, video, 2);
    for (std::size_t i = 0; i < r.values.size(); ++i) {
        if (r.counts[i] > 0) REQUIRE(r.values[i] == 0.0);
    }
}

TEST_CASE("sliding window regression is deterministic and stride-consistent") {
    const auto cfg = tiny_config();
    const auto model = init_model<double>(cfg);
    const auto video = random_video(cfg, 20, 7);
    const auto a = sliding_window_regress(model, video, 1);
    const auto b = sliding_window_regress(model, video, 1);
    REQUIRE(a.values == b.values); // bitwise

    // stride n gives disjoint windows: each position is one window's raw output
    const auto c = sliding_window_regress(model, video, cfg.n);
    for (std::size_t i = 0; i < c.values.size(); ++i)
        if (c.counts[i] > 0) REQUIRE(c.counts[i] == 1);
}

TEST_CASE("videos shorter than a window produce an empty cover") {
    const auto cfg = tiny_config();
    const auto model = init_model<double>(cfg);
    const auto video = random_video(cfg, cfg.n, 8); // needs n+1 frames for one window
    const auto r = sliding_window_regress(model, video, 1);
    REQUIRE(r.covered_begin == r.covered_end);
    for (double v : r.values) REQUIRE(std::isnan(v));

    auto wrong = random_video(cfg, 12, 9);
    wrong.width = 4;
    wrong.pixels.resize(wrong.frame_count * wrong.height * wrong.width);
    REQUIRE_THROWS_AS(sliding_window_regress(model, wrong, 1), invariant_error);
}

TEST_CASE("float and double inference agree to float precision") {
    const auto cfg = tiny_config();
    CanConfig seeded = cfg;
    seeded.seed = 40;
    const auto md = init_model<double>(seeded);
    const auto mf = init_model<float>(seeded);
    const auto video = random_video(cfg, 16, 11);
    const auto rd = sliding_window_regress(md, video, 1);
    const auto rf = sliding_window_regress(mf, video, 1);
    REQUIRE(rd.values.size() == rf.values.size());
    for (std::size_t i = 0; i < rd.values.size(); ++i)
        if (rd.counts[i] > 0) REQUIRE(std::abs(rd.values[i] - rf.values[i]) < 1e-4);
}
