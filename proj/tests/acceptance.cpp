// Acceptance gate: one self-contained binary that re-verifies the load-bearing
// guarantees of the pipeline, printing one PASS/FAIL line per criterion.
//
// Usage: acceptance <path-to-nirpulse-binary> <scratch-dir>
//
//   C1  reference-data benchmark (skipped: recordings are license-gated)
//   C2  synthetic end-to-end run: train on 6 subjects, test on 2, MAE <= 3 bpm
//       within a 15-minute budget
//   C3  full-network and per-layer gradient checks, 64-bit, < 1e-5, <= 10 s
//   C4  snake activation: zero at zero, period shift identity, monotone grid
//   C5  attention mask absolute sum equals area/2 within 1e-5
//   C6  peak-trough normalization pins extrema on AM sinusoids within 1e-9
//   C7  heart-rate augmentation hits every 10-bpm bin within +-1 bpm
//   C8  window coverage matches brute force; overlap averaging reconstructs
//       exactly at stride 1
//   C9  peak detector equals a brute-force oracle; exact HR on even spacing;
//       resampling identity/affine behavior
//   C10 file formats round-trip: video, weights, manifest, signal CSV
//
// All tolerances are pinned here as constants. Exit code 0 iff nothing FAILs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nirpulse/augment.hpp"
#include "nirpulse/can.hpp"
#include "nirpulse/dataset.hpp"
#include "nirpulse/eval.hpp"
#include "nirpulse/infer.hpp"
#include "nirpulse/io.hpp"
#include "nirpulse/rng.hpp"
#include "nirpulse/signal.hpp"
#include "nirpulse/synthetic.hpp"

#ifdef _WIN32
#error "this gate assumes POSIX exit status decoding"
#endif
#include <sys/wait.h>

namespace fs = std::filesystem;
using namespace nirpulse;

namespace {

// Pinned acceptance tolerances.
constexpr double kMaeBudgetBpm = 3.0;
constexpr double kE2eBudgetSeconds = 900.0;
constexpr double kGradTol = 1e-5;
constexpr double kGradBudgetSeconds = 10.0;
constexpr double kSnakeTol = 1e-9;
constexpr double kMaskTol = 1e-5;
constexpr double kNormTol = 1e-9;
constexpr double kAugmentTolBpm = 1.0;
constexpr double kReconstructTol = 1e-12;
constexpr double kResampleTol = 1e-9;
constexpr double kCsvTol = 1e-9;

int failures = 0;

void report(const std::string& id, const std::string& name, bool pass,
            const std::string& detail) {
    std::cout << id << " " << name << ": " << (pass ? "PASS" : "FAIL");
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << "\n";
    if (!pass) ++failures;
}

void report_skip(const std::string& id, const std::string& name, const std::string& detail) {
    std::cout << id << " " << name << ": SKIP (" << detail << ")\n";
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

int run(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    return -2;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- C2: synthetic end-to-end -----------------------------------------------

void criterion_e2e(const fs::path& bin, const fs::path& dir) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string B = q(bin);
    const std::string quiet = " > " + q(dir / "e2e.log") + " 2>&1";
    const fs::path raw = dir / "raw", aug = dir / "aug", crop = dir / "crop";
    const fs::path model = dir / "model.canw", pred = dir / "pred", rep = dir / "rep";

    const std::vector<std::string> steps = {
        B + " --seed 7 synth --out " + q(raw) +
            " --subjects 8 --train-subjects 6 --duration 30 --fps 30 --size 16"
            " --hr-min 45 --hr-max 135" + quiet,
        B + " --seed 7 augment --manifest " + q(raw / "manifest.csv") + " --out " + q(aug) +
            quiet,
        B + " crop --manifest " + q(aug / "manifest.csv") + " --out " + q(crop) +
            " --size 16" + quiet,
        B + " --seed 7 train --manifest " + q(crop / "manifest.csv") + " --out " + q(model) +
            " --steps 3000 --batch 8 --lr 1e-3 --window 64 --c1 4 --c2 8 --hidden 32"
            " --window-stride 32" + quiet,
        B + " infer --manifest " + q(crop / "manifest.csv") + " --weights " + q(model) +
            " --out " + q(pred) + " --stride 1" + quiet,
        B + " eval --manifest " + q(crop / "manifest.csv") + " --pred " + q(pred) +
            " --out " + q(rep) + quiet,
    };
    for (const auto& cmd : steps) {
        const int rc = run(cmd);
        if (rc != 0) {
            report("C2", "synthetic end-to-end", false,
                   "pipeline step exited " + std::to_string(rc) + ", see " +
                       (dir / "e2e.log").string());
            return;
        }
    }
    const double elapsed = seconds_since(t0);
    EvaluationReport result;
    try {
        result = read_report_csv(rep / "report.csv");
    } catch (const std::exception& e) {
        report("C2", "synthetic end-to-end", false, std::string("report unreadable: ") + e.what());
        return;
    }
    const bool ok = result.included_count == 2 && result.excluded_count == 0 &&
                    std::isfinite(result.mae_bpm) && result.mae_bpm <= kMaeBudgetBpm &&
                    elapsed <= kE2eBudgetSeconds;
    report("C2", "synthetic end-to-end", ok,
           "MAE " + fmt(result.mae_bpm) + " bpm over " +
               std::to_string(result.included_count) + " held-out videos in " + fmt(elapsed) +
               " s; budgets " + fmt(kMaeBudgetBpm) + " bpm / " + fmt(kE2eBudgetSeconds) + " s");
}

// ---- C3: gradient checks -----------------------------------------------------

void criterion_gradients() {
    const auto t0 = std::chrono::steady_clock::now();

    CanConfig cfg;
    cfg.n = 3;
    cfg.height = 8;
    cfg.width = 8;
    cfg.c1 = 2;
    cfg.c2 = 2;
    cfg.hidden = 4;
    cfg.seed = 11;
    validate_config(cfg);

    // Full network in one sweep, via the library's checker.
    const double full = gradcheck_max_rel_error(cfg, 123, 1e-6);

    // Independent per-layer sweep against central differences.
    CanModel<double> model = init_model<double>(cfg);
    Rng rng(derive_seed(123, "acceptance.gradcheck"));
    std::vector<double> appearance(cfg.height * cfg.width);
    std::vector<double> motion(cfg.n * cfg.height * cfg.width);
    std::vector<double> target(cfg.n);
    for (auto& v : appearance) v = rng.uniform01();
    for (auto& v : motion) v = 2.0 * rng.uniform01() - 1.0;
    for (auto& v : target) v = rng.uniform01();

    CanCache<double> cache;
    const auto loss_of = [&]() {
        const auto& out = can_forward(model, appearance.data(), motion.data(), cache);
        double acc = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double d = out[i] - target[i];
            acc += d * d;
        }
        return acc / static_cast<double>(out.size());
    };

    CanModel<double> grads = make_model<double>(cfg);
    const auto& out = can_forward(model, appearance.data(), motion.data(), cache);
    std::vector<double> grad_out(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i)
        grad_out[i] = 2.0 * (out[i] - target[i]) / static_cast<double>(cfg.n);
    can_backward(model, cache, appearance.data(), motion.data(), grad_out.data(), grads);

    std::vector<std::pair<std::string, Tensor<double>*>> named;
    model.for_each_parameter(
        [&](const char* nm, Tensor<double>& t) { named.emplace_back(nm, &t); });
    const std::vector<Tensor<double>*> analytic = parameter_list(grads);

    const double eps = 1e-6;
    double worst_layer = 0.0;
    std::string worst_name = "-";
    bool all_layers_ok = true;
    for (std::size_t ti = 0; ti < named.size(); ++ti) {
        double layer_max = 0.0;
        Tensor<double>& tensor = *named[ti].second;
        for (std::size_t j = 0; j < tensor.size(); ++j) {
            const double orig = tensor.data[j];
            tensor.data[j] = orig + eps;
            const double lp = loss_of();
            tensor.data[j] = orig - eps;
            const double lm = loss_of();
            tensor.data[j] = orig;
            const double fd = (lp - lm) / (2.0 * eps);
            const double an = analytic[ti]->data[j];
            const double rel =
                std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
            layer_max = std::max(layer_max, rel);
        }
        if (layer_max >= kGradTol) all_layers_ok = false;
        if (layer_max > worst_layer) {
            worst_layer = layer_max;
            worst_name = named[ti].first;
        }
    }

    const double elapsed = seconds_since(t0);
    const bool ok =
        full < kGradTol && all_layers_ok && elapsed <= kGradBudgetSeconds;
    report("C3", "gradient checks", ok,
           "full-network max rel err " + fmt(full) + ", worst layer " + worst_name + " " +
               fmt(worst_layer) + ", " + fmt(elapsed) + " s");
}

// ---- C4: snake activation ----------------------------------------------------

void criterion_snake() {
    const std::size_t points = 10000;
    double worst_shift = 0.0;
    bool zero_ok = true, monotone_ok = true;
    for (const double a : {0.5, 1.0, 2.0}) {
        zero_ok = zero_ok && snake(0.0, a) == 0.0;
        const double period = std::numbers::pi / a;
        double prev = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < points; ++i) {
            const double x =
                -15.0 + 30.0 * static_cast<double>(i) / static_cast<double>(points - 1);
            const double y = snake(x, a);
            if (y < prev) monotone_ok = false;
            prev = y;
            worst_shift =
                std::max(worst_shift, std::abs(snake(x + period, a) - (y + period)));
        }
    }
    const bool ok = zero_ok && monotone_ok && worst_shift <= kSnakeTol;
    report("C4", "snake activation", ok,
           std::string("zero at zero ") + (zero_ok ? "yes" : "no") + ", monotone " +
               (monotone_ok ? "yes" : "no") + ", max shift error " + fmt(worst_shift));
}

// ---- C5: attention mask ------------------------------------------------------

void criterion_mask() {
    Rng rng(derive_seed(99, "acceptance.mask"));
    double worst = 0.0;
    for (int c = 0; c < 100; ++c) {
        const std::size_t h = 2 + static_cast<std::size_t>(rng.uniform01() * 15.0);
        const std::size_t w = 2 + static_cast<std::size_t>(rng.uniform01() * 15.0);
        std::vector<double> logits(h * w);
        for (auto& v : logits) v = 2.0 * rng.gaussian();
        const auto mask = attention_mask(logits);
        double sum = 0.0;
        for (double m : mask) sum += std::abs(m);
        worst = std::max(worst, std::abs(sum - static_cast<double>(h * w) / 2.0));
    }
    report("C5", "attention mask sum", worst <= kMaskTol,
           "max |sum - area/2| = " + fmt(worst) + " over 100 random maps");
}

// ---- C6: peak-trough normalization --------------------------------------------

void criterion_normalization() {
    Rng rng(derive_seed(99, "acceptance.norm"));
    double worst = 0.0;
    bool in_range = true;
    for (int c = 0; c < 50; ++c) {
        const double rate = 30.0;
        const double f = 0.8 + 2.2 * rng.uniform01();
        const double fm = 0.05 + 0.25 * rng.uniform01();
        const double depth = 0.1 + 0.5 * rng.uniform01();
        const double amp = 0.5 + 1.5 * rng.uniform01();
        const double offset = 2.0 * rng.uniform01() - 1.0;
        const double p1 = 2.0 * std::numbers::pi * rng.uniform01();
        const double p2 = 2.0 * std::numbers::pi * rng.uniform01();
        std::vector<double> v(601);
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double t = static_cast<double>(i) / rate;
            v[i] = offset + amp * (1.0 + depth * std::sin(2.0 * std::numbers::pi * fm * t + p1)) *
                                std::sin(2.0 * std::numbers::pi * f * t + p2);
        }
        const auto sig = make_signal(v, rate);
        const auto ex = detect_extrema(sig);
        const auto norm = normalize_peak_trough(sig, ex);
        for (std::size_t p : ex.peaks) worst = std::max(worst, std::abs(norm.samples[p] - 1.0));
        for (std::size_t t : ex.troughs) worst = std::max(worst, std::abs(norm.samples[t]));
        for (double x : norm.samples) in_range = in_range && x >= 0.0 && x <= 1.0;
    }
    report("C6", "peak-trough normalization", worst <= kNormTol && in_range,
           "max extremum error " + fmt(worst) + " over 50 AM sinusoids, outputs in [0,1]: " +
               (in_range ? "yes" : "no"));
}

// ---- C7: heart-rate augmentation ----------------------------------------------

void criterion_augmentation() {
    Rng rng(derive_seed(99, "acceptance.augment"));
    double worst = 0.0;
    bool bins_ok = true, lengths_ok = true;
    for (int c = 0; c < 100; ++c) {
        SynthSpec spec;
        spec.hr_bpm = 45.0 + 90.0 * rng.uniform01();
        spec.duration_s = 30.0;
        spec.fps = 30.0;
        spec.height = 4;
        spec.width = 4;
        spec.seed = derive_seed(7000, "case" + std::to_string(c));
        const SynthResult src = generate_synthetic(spec);

        const auto plan = plan_augmentation(src.gt, derive_seed(spec.seed, "plan"));
        for (std::size_t k = 0; k < kAugmentationBins; ++k) {
            const double lo = augmentation_bin_low(k);
            if (!(plan.targets_bpm[k] >= lo && plan.targets_bpm[k] < lo + 10.0))
                bins_ok = false;
        }
        const auto clips = augment_pair(src.video, src.gt, plan, 65);
        if (clips.size() != kAugmentationBins) bins_ok = false;
        for (const auto& clip : clips) {
            if (clip.signal.samples.size() != clips.front().signal.samples.size() ||
                clip.frames.frame_count != clips.front().frames.frame_count)
                lengths_ok = false;
            const double hr = hr_from_rr(detect_extrema(clip.signal), clip.signal.sample_rate_hz);
            worst = std::max(worst, std::abs(hr - clip.target_hr_bpm));
        }
    }
    report("C7", "heart-rate augmentation", bins_ok && lengths_ok && worst <= kAugmentTolBpm,
           "one clip per bin: " + std::string(bins_ok ? "yes" : "no") +
               ", shared length: " + (lengths_ok ? "yes" : "no") + ", max |hr - target| " +
               fmt(worst) + " bpm over 100 videos");
}

// ---- C8: window coverage and overlap averaging ---------------------------------

void criterion_coverage() {
    bool counts_ok = true;
    for (std::size_t t = 0; t <= 30; ++t) {
        for (std::size_t n = 1; n <= 8; ++n) {
            for (std::size_t stride = 1; stride <= n; ++stride) {
                const auto got = coverage_counts(t, {n, stride});
                std::vector<std::size_t> want(t, 0);
                for (std::size_t s = 0; s + n <= t; s += stride)
                    for (std::size_t j = 0; j < n; ++j) ++want[s + j];
                if (got != want) counts_ok = false;
            }
        }
    }

    const std::size_t t = 100, n = 8;
    const auto f = [](std::size_t i) {
        return 0.25 + 0.5 * std::sin(static_cast<double>(i) / 9.0);
    };
    const auto res = overlap_average(t, {n, 1}, [&](std::size_t s) {
        std::vector<double> out(n);
        for (std::size_t j = 0; j < n; ++j) out[j] = f(s + j);
        return out;
    });
    double worst = 0.0;
    for (std::size_t i = res.covered_begin; i < res.covered_end; ++i)
        worst = std::max(worst, std::abs(res.values[i] - f(i)));
    const bool ok = counts_ok && res.covered_begin == 0 && res.covered_end == t &&
                    worst <= kReconstructTol;
    report("C8", "window coverage", ok,
           std::string("counts match brute force: ") + (counts_ok ? "yes" : "no") +
               ", stride-1 reconstruction error " + fmt(worst));
}

// ---- C9: signal oracles ---------------------------------------------------------

std::vector<std::size_t> oracle_plateau_maxima(const std::vector<double>& v) {
    std::vector<std::size_t> out;
    const std::size_t n = v.size();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(v[i] > v[i - 1])) continue;
        std::size_t end = i;
        while (end + 1 < n && v[end + 1] == v[i]) ++end;
        if (end + 1 < n && v[i] > v[end + 1]) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> oracle_greedy(const std::vector<double>& v,
                                       std::vector<std::size_t> cand, std::size_t min_dist) {
    std::vector<std::size_t> order = std::move(cand);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (v[a] != v[b]) return v[a] > v[b];
        return a < b;
    });
    std::vector<std::size_t> kept;
    for (std::size_t c : order) {
        bool clash = false;
        for (std::size_t k : kept) {
            const std::size_t d = c > k ? c - k : k - c;
            if (d < min_dist) clash = true;
        }
        if (!clash) kept.push_back(c);
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

ExtremaIndex oracle_detect(const std::vector<double>& v, std::size_t min_dist) {
    std::vector<double> neg(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) neg[i] = -v[i];
    const auto peaks = oracle_greedy(v, oracle_plateau_maxima(v), min_dist);
    const auto troughs = oracle_greedy(neg, oracle_plateau_maxima(neg), min_dist);

    struct Ev {
        std::size_t idx;
        bool peak;
    };
    std::vector<Ev> evs;
    for (auto p : peaks) evs.push_back({p, true});
    for (auto t : troughs) evs.push_back({t, false});
    std::sort(evs.begin(), evs.end(), [](const Ev& a, const Ev& b) { return a.idx < b.idx; });

    ExtremaIndex out;
    std::size_t i = 0;
    while (i < evs.size()) {
        std::size_t best = evs[i].idx;
        std::size_t j = i + 1;
        while (j < evs.size() && evs[j].peak == evs[i].peak) {
            const std::size_t c = evs[j].idx;
            if (evs[i].peak ? v[c] > v[best] : v[c] < v[best]) best = c;
            ++j;
        }
        (evs[i].peak ? out.peaks : out.troughs).push_back(best);
        i = j;
    }
    return out;
}

void criterion_signal_oracles() {
    // Exhaustive detector agreement over every signal of length <= 11 on {0,1,2}.
    bool detector_ok = true;
    std::size_t checked = 0;
    for (std::size_t len = 1; len <= 11 && detector_ok; ++len) {
        std::vector<std::size_t> digits(len, 0);
        std::vector<double> v(len);
        bool done = false;
        while (!done && detector_ok) {
            for (std::size_t i = 0; i < len; ++i) v[i] = static_cast<double>(digits[i]);
            const auto sig = make_signal(v, 30.0);
            for (const std::size_t dist : {std::size_t{1}, std::size_t{3}}) {
                const auto got = detect_extrema(sig, dist, 0.0);
                const auto want = oracle_detect(v, dist);
                if (got.peaks != want.peaks || got.troughs != want.troughs) detector_ok = false;
                ++checked;
            }
            std::size_t pos = 0;
            while (pos < len && ++digits[pos] == 3) digits[pos++] = 0;
            done = pos == len;
        }
    }

    // Evenly spaced peaks give the exact closed-form rate.
    bool hr_ok = true;
    for (const std::size_t d : {std::size_t{5}, std::size_t{7}, std::size_t{12}, std::size_t{30}}) {
        for (const std::size_t k : {std::size_t{1}, std::size_t{2}, std::size_t{5}, std::size_t{40}}) {
            ExtremaIndex ex;
            for (std::size_t i = 0; i <= k; ++i) ex.peaks.push_back(2 + i * d);
            if (hr_from_rr(ex, 30.0) != 1800.0 / static_cast<double>(d)) hr_ok = false;
        }
    }

    // Resampling: bitwise identity at the source rate, affine exactness across rates.
    Rng rng(derive_seed(99, "acceptance.resample"));
    std::vector<double> rv(200);
    for (auto& x : rv) x = rng.uniform01();
    const auto rs = make_signal(rv, 30.0);
    const auto same = resample_linear(rs, 30.0);
    bool ident_ok = same.samples.size() == rv.size();
    for (std::size_t i = 0; ident_ok && i < rv.size(); ++i)
        ident_ok = same.samples[i] == rv[i];

    std::vector<double> av(101);
    for (std::size_t i = 0; i < av.size(); ++i) av[i] = 0.37 * static_cast<double>(i) - 2.1;
    const auto affine = resample_linear(make_signal(av, 25.0), 40.0);
    double affine_err = 0.0;
    for (std::size_t j = 0; j < affine.samples.size(); ++j) {
        const double src_pos = static_cast<double>(j) * 25.0 / 40.0;
        affine_err = std::max(affine_err,
                              std::abs(affine.samples[j] - (0.37 * src_pos - 2.1)));
    }

    const bool ok = detector_ok && hr_ok && ident_ok && affine_err <= kResampleTol;
    report("C9", "signal oracles", ok,
           "detector agreement on " + std::to_string(checked) + " signals: " +
               (detector_ok ? "yes" : "no") + ", exact even-spacing rate: " +
               (hr_ok ? "yes" : "no") + ", resample identity: " + (ident_ok ? "yes" : "no") +
               ", affine error " + fmt(affine_err));
}

// ---- C10: format round trips -----------------------------------------------------

void criterion_round_trips(const fs::path& dir) {
    Rng rng(derive_seed(99, "acceptance.io"));

    std::vector<float> px(7 * 9 * 5);
    for (auto& p : px) p = static_cast<float>(rng.uniform01());
    const auto video = make_frames(7, 9, 5, 23.5f, px);
    write_video_nirv(dir / "rt.nirv", video);
    const auto video2 = read_video_nirv(dir / "rt.nirv");
    const bool video_ok = video2.frame_count == video.frame_count &&
                          video2.height == video.height && video2.width == video.width &&
                          video2.fps == video.fps && video2.pixels == video.pixels;

    CanConfig cfg;
    cfg.n = 4;
    cfg.height = 8;
    cfg.width = 8;
    cfg.c1 = 2;
    cfg.c2 = 3;
    cfg.hidden = 5;
    cfg.snake_a = 1.7;
    cfg.seed = 99;
    const auto model = init_model<double>(cfg);
    save_weights(model, dir / "rt.canw");
    const auto model2 = load_weights<double>(dir / "rt.canw");
    bool weights_ok = model2.config.n == cfg.n && model2.config.snake_a == cfg.snake_a;
    const auto pa = parameter_list(model);
    const auto pb = parameter_list(model2);
    for (std::size_t i = 0; i < pa.size(); ++i)
        weights_ok = weights_ok && pa[i]->data == pb[i]->data;

    std::vector<ManifestRecord> recs(2);
    recs[0] = {"a_v0", "a", "a.nirv", "a.csv", "a.box", 30.0,
               "train", "synthetic", "still", 940, "original"};
    recs[1] = recs[0];
    recs[1].video_id = "a_v0_aug0";
    recs[1].video_path = "b.nirv";
    recs[1].provenance = make_augmented_provenance(72.25);
    write_manifest(recs, dir / "rt.manifest.csv");
    const auto recs2 = read_manifest(dir / "rt.manifest.csv");
    bool manifest_ok = recs2.size() == recs.size();
    for (std::size_t i = 0; manifest_ok && i < recs.size(); ++i)
        manifest_ok = recs2[i].video_id == recs[i].video_id &&
                      recs2[i].subject_id == recs[i].subject_id &&
                      recs2[i].video_path == recs[i].video_path &&
                      recs2[i].signal_path == recs[i].signal_path &&
                      recs2[i].bbox_path == recs[i].bbox_path &&
                      recs2[i].fps == recs[i].fps && recs2[i].split == recs[i].split &&
                      recs2[i].scenario == recs[i].scenario &&
                      recs2[i].motion == recs[i].motion &&
                      recs2[i].wavelength_nm == recs[i].wavelength_nm &&
                      recs2[i].provenance == recs[i].provenance;

    std::vector<double> sv(300);
    for (auto& x : sv) x = rng.uniform01();
    const auto sig = make_signal(sv, 30.0);
    write_signal_csv(dir / "rt.ppg.csv", sig);
    const auto sig2 = read_signal_csv(dir / "rt.ppg.csv");
    double csv_err = sig2.samples.size() == sv.size() && sig2.sample_rate_hz == 30.0
                         ? 0.0
                         : std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sv.size() && std::isfinite(csv_err); ++i)
        csv_err = std::max(csv_err, std::abs(sig2.samples[i] - sv[i]));

    const bool ok = video_ok && weights_ok && manifest_ok && csv_err <= kCsvTol;
    report("C10", "format round trips", ok,
           std::string("video: ") + (video_ok ? "lossless" : "FAIL") + ", weights: " +
               (weights_ok ? "lossless" : "FAIL") + ", manifest: " +
               (manifest_ok ? "lossless" : "FAIL") + ", signal CSV error " + fmt(csv_err));
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 3) {
        std::cerr << "usage: acceptance <nirpulse-binary> <scratch-dir>\n";
        return 2;
    }
    const fs::path bin = fs::absolute(argv[1]);
    const fs::path dir = fs::absolute(argv[2]);
    fs::remove_all(dir);
    fs::create_directories(dir);

    report_skip("C1", "reference-data benchmark",
                "source recordings are license-gated; the synthetic end-to-end run in C2 "
                "stands in");
    criterion_e2e(bin, dir);
    criterion_gradients();
    criterion_snake();
    criterion_mask();
    criterion_normalization();
    criterion_augmentation();
    criterion_coverage();
    criterion_signal_oracles();
    criterion_round_trips(dir);

    if (failures == 0) {
        std::cout << "acceptance: all criteria passed\n";
        return 0;
    }
    std::cout << "acceptance: " << failures << " criterion(s) failed\n";
    return 1;
}
