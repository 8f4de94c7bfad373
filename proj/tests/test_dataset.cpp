#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <set>
#include <vector>

#include "nirpulse/dataset.hpp"
#include "nirpulse/rng.hpp"
#include "nirpulse/synthetic.hpp"

using namespace nirpulse;

namespace {

ManifestRecord sample_record(const std::string& id, const std::string& subject,
                             const std::string& split, const std::string& provenance) {
    ManifestRecord rec;
    rec.video_id = id;
    rec.subject_id = subject;
    rec.video_path = id + ".nirv";
    rec.signal_path = id + ".ppg.csv";
    rec.bbox_path = id + ".bbox.csv";
    rec.fps = 30.0;
    rec.split = split;
    rec.scenario = "synthetic";
    rec.motion = "still";
    rec.wavelength_nm = 940;
    rec.provenance = provenance;
    return rec;
}

bool records_equal(const ManifestRecord& a, const ManifestRecord& b) {
    return a.video_id == b.video_id && a.subject_id == b.subject_id &&
           a.video_path == b.video_path && a.signal_path == b.signal_path &&
           a.bbox_path == b.bbox_path && a.fps == b.fps && a.split == b.split &&
           a.scenario == b.scenario && a.motion == b.motion &&
           a.wavelength_nm == b.wavelength_nm && a.provenance == b.provenance;
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name)
        : path(std::filesystem::temp_directory_path() / ("nirpulse_ds_" + name)) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

} // namespace

TEST_CASE("manifest round trip is lossless") {
    TempDir dir("manifest_rt");
    std::vector<ManifestRecord> records;
    records.push_back(sample_record("s0_v0", "s0", "train", "original"));
    records.push_back(sample_record("s0_v0_aug3", "s0", "train", make_augmented_provenance(72.5)));
    records.push_back(sample_record("s1_v0", "s1", "test", "original"));
    records[2].scenario = "indoor";
    records[2].motion = "small";
    records[2].wavelength_nm = 975;

    const auto path = dir.path / "manifest.csv";
    write_manifest(records, path);
    const auto back = read_manifest(path);
    REQUIRE(back.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) REQUIRE(records_equal(back[i], records[i]));
}

TEST_CASE("provenance encodes the augmentation target heart rate") {
    REQUIRE(make_augmented_provenance(72.5) == "augmented(72.50)");
    const auto rec = sample_record("v", "s", "train", "augmented(101.25)");
    REQUIRE(is_augmented(rec));
    REQUIRE(*augmented_target_hr(rec) == Catch::Approx(101.25));
    const auto orig = sample_record("v", "s", "train", "original");
    REQUIRE_FALSE(is_augmented(orig));

    auto bad = sample_record("v", "s", "train", "made-up");
    REQUIRE_THROWS_AS(validate_record(bad), format_error);
}

TEST_CASE("manifest validation enforces the split invariants") {
    // augmented record outside train
    std::vector<ManifestRecord> aug_test;
    aug_test.push_back(sample_record("v0", "s0", "test", make_augmented_provenance(90)));
    REQUIRE_THROWS_WITH(validate_manifest(aug_test),
                        Catch::Matchers::ContainsSubstring("augmented"));

    // subject straddles both splits
    std::vector<ManifestRecord> straddle;
    straddle.push_back(sample_record("v0", "s0", "train", "original"));
    straddle.push_back(sample_record("v1", "s0", "test", "original"));
    REQUIRE_THROWS_WITH(validate_manifest(straddle),
                        Catch::Matchers::ContainsSubstring("both splits"));

    // duplicate id
    std::vector<ManifestRecord> dup;
    dup.push_back(sample_record("v0", "s0", "train", "original"));
    dup.push_back(sample_record("v0", "s1", "train", "original"));
    REQUIRE_THROWS_WITH(validate_manifest(dup), Catch::Matchers::ContainsSubstring("duplicate"));

    // field vocabulary
    auto bad = sample_record("v0", "s0", "train", "original");
    bad.motion = "frantic";
    REQUIRE_THROWS_AS(validate_record(bad), format_error);
    bad = sample_record("v0", "s0", "train", "original");
    bad.split = "validation";
    REQUIRE_THROWS_AS(validate_record(bad), format_error);
    bad = sample_record("v0", "s0", "train", "original");
    bad.subject_id = "has,comma";
    REQUIRE_THROWS_AS(validate_record(bad), invariant_error);
}

TEST_CASE("split keeps augmented records out of the test set") {
    std::vector<ManifestRecord> records;
    records.push_back(sample_record("a_orig", "sa", "train", "original"));
    records.push_back(sample_record("a_aug", "sa", "train", make_augmented_provenance(55)));
    records.push_back(sample_record("b_orig", "sb", "train", "original"));
    records.push_back(sample_record("b_aug", "sb", "train", make_augmented_provenance(120)));

    const auto [train, test] = split_manifest(records, {"sa"}, {"sb"});
    REQUIRE(train.size() == 2); // both of sa's records
    REQUIRE(test.size() == 1);  // only sb's original
    REQUIRE(test[0].video_id == "b_orig");
    REQUIRE(test[0].split == "test");
    for (const auto& rec : train) REQUIRE(rec.split == "train");
    for (const auto& rec : test) REQUIRE_FALSE(is_augmented(rec));

    REQUIRE_THROWS_WITH(split_manifest(records, {"sa", "sb"}, {"sb"}),
                        Catch::Matchers::ContainsSubstring("both subject sets"));
    REQUIRE_THROWS_WITH(split_manifest(records, {"sa"}, std::set<std::string>{}),
                        Catch::Matchers::ContainsSubstring("neither"));
}

TEST_CASE("a clean 30 Hz signal loads unchanged") {
    TempDir dir("clean_load");
    const auto spec_out = generate_synthetic([] {
        SynthSpec s;
        s.hr_bpm = 66.0;
        s.duration_s = 10.0;
        s.seed = 5;
        return s;
    }());
    const auto rec = sample_record("v", "s", "train", "original");
    write_signal_csv(dir.path / rec.signal_path, spec_out.gt);
    const auto loaded = load_signal(dir.path, rec);
    REQUIRE(loaded.sample_rate_hz == 30.0);
    REQUIRE_FALSE(loaded.has_gaps());
    REQUIRE(loaded.size() == spec_out.gt.size());
    for (std::size_t i = 0; i < loaded.size(); ++i)
        REQUIRE(std::abs(loaded.samples[i] - spec_out.gt.samples[i]) <= 1e-9);
}

TEST_CASE("loading composes gap filling and resampling to the video rate") {
    TempDir dir("corrections");
    // a 29.7 Hz signal with 3 dropped samples
    const double rate = 29.7;
    const std::size_t n = 298; // ~10 s
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i)
        values[i] = 0.5 + 0.4 * std::sin(2.0 * 3.14159265358979323846 * 1.1 * (double)i / rate);
    PpgSignal gappy = make_signal(std::move(values), rate);
    gappy.gap_mask.assign(n, 0);
    gappy.gap_mask[40] = gappy.gap_mask[41] = gappy.gap_mask[150] = 1;

    const auto rec = sample_record("v", "s", "train", "original");
    write_signal_csv(dir.path / rec.signal_path, gappy);
    const auto loaded = load_signal(dir.path, rec);
    REQUIRE(loaded.sample_rate_hz == 30.0);
    REQUIRE_FALSE(loaded.has_gaps());
    for (double v : loaded.samples) REQUIRE(std::isfinite(v));
    // duration preserved within a sample
    REQUIRE(std::abs(loaded.duration_s() - gappy.duration_s()) <= 1.0 / 29.7);
}

TEST_CASE("load_pair rejects misaligned video and signal durations") {
    TempDir dir("misaligned");
    SynthSpec spec;
    spec.hr_bpm = 60.0;
    spec.duration_s = 10.0;
    spec.seed = 9;
    const auto data = generate_synthetic(spec);
    const auto rec = sample_record("v", "s", "train", "original");
    write_video_nirv(dir.path / rec.video_path, data.video);
    write_bbox_csv(dir.path / rec.bbox_path, {BoxEntry{-1, data.box}});

    // signal 2 s shorter than the video
    PpgSignal short_gt = data.gt;
    short_gt.samples.resize(short_gt.size() - 60);
    write_signal_csv(dir.path / rec.signal_path, short_gt);
    REQUIRE_THROWS_AS(load_pair(dir.path, rec), rejection_error);

    // matching signal loads fine
    write_signal_csv(dir.path / rec.signal_path, data.gt);
    const auto pair = load_pair(dir.path, rec);
    REQUIRE(pair.video.frame_count == data.video.frame_count);
    REQUIRE(pair.signal.size() == data.gt.size());

    // fps disagreement between manifest and file is a format error
    auto wrong_fps = rec;
    wrong_fps.fps = 25.0;
    REQUIRE_THROWS_AS(load_video(dir.path, wrong_fps), format_error);
}

TEST_CASE("synthetic GT at 60 bpm has 30-sample mean peak spacing") {
    SynthSpec spec;
    spec.hr_bpm = 60.0;
    spec.duration_s = 30.0;
    spec.seed = 1;
    const auto r = generate_synthetic(spec);
    REQUIRE(r.gt.sample_rate_hz == 30.0);
    const auto ex = detect_extrema(r.gt);
    REQUIRE(ex.peaks.size() >= 28);
    // the true peak falls between samples, so detection may jitter by one
    // sample, never more
    for (std::size_t i = 1; i < ex.peaks.size(); ++i) {
        const std::size_t d = ex.peaks[i] - ex.peaks[i - 1];
        REQUIRE(d >= 29);
        REQUIRE(d <= 31);
    }
    REQUIRE(hr_from_rr(ex, 30.0) == Catch::Approx(60.0).margin(0.2));
}

TEST_CASE("synthetic generator hits the target HR within half a bpm") {
    Rng rng(99);
    for (int c = 0; c < 100; ++c) {
        SynthSpec spec;
        spec.hr_bpm = rng.uniform(40.0, 140.0);
        spec.duration_s = 30.0;
        spec.dicrotic_ratio = rng.uniform(0.0, 0.3);
        spec.seed = 1000 + (std::uint64_t)c;
        const auto r = generate_synthetic(spec);
        const double hr = hr_from_rr(detect_extrema(r.gt), spec.fps);
        INFO("target " << spec.hr_bpm << " dicrotic " << spec.dicrotic_ratio << " got " << hr);
        REQUIRE(std::abs(hr - spec.hr_bpm) <= 0.5);
    }
}

TEST_CASE("synthetic output is bit-identical for the same seed") {
    SynthSpec spec;
    spec.hr_bpm = 92.0;
    spec.duration_s = 5.0;
    spec.noise_sigma = 0.01;
    spec.dicrotic_ratio = 0.2;
    spec.seed = 31;
    const auto a = generate_synthetic(spec);
    const auto b = generate_synthetic(spec);
    REQUIRE(a.video.pixels == b.video.pixels);
    REQUIRE(a.gt.samples == b.gt.samples);
    REQUIRE(a.box.x == b.box.x);

    SynthSpec other = spec;
    other.seed = 32;
    const auto c = generate_synthetic(other);
    REQUIRE(a.video.pixels != c.video.pixels); // noise stream differs
    REQUIRE(a.gt.samples != c.gt.samples);     // dicrotic phase differs
}

TEST_CASE("synthetic frames stay in range and the box sits inside them") {
    SynthSpec spec;
    spec.hr_bpm = 135.0;
    spec.duration_s = 4.0;
    spec.noise_sigma = 0.05;
    spec.seed = 3;
    const auto r = generate_synthetic(spec);
    REQUIRE(r.video.frame_count == 121);
    for (float p : r.video.pixels) {
        REQUIRE(p >= 0.0f);
        REQUIRE(p <= 1.0f);
    }
    REQUIRE(r.box.x >= 0);
    REQUIRE(r.box.y >= 0);
    REQUIRE(r.box.x + r.box.w <= (int)spec.width);
    REQUIRE(r.box.y + r.box.h <= (int)spec.height);
    REQUIRE(r.box.w >= 4);

    // the blob brightens the box region relative to the background corner
    const float* f0 = r.video.frame(0);
    const float center = f0[(spec.height / 2) * spec.width + spec.width / 2];
    const float corner = f0[0];
    REQUIRE(center > corner + 0.2f);
}

TEST_CASE("synthetic spec validation rejects out-of-range requests") {
    SynthSpec spec;
    spec.hr_bpm = 30.0;
    REQUIRE_THROWS_AS(generate_synthetic(spec), invariant_error);
    spec = SynthSpec{};
    spec.hr_bpm = 150.0;
    REQUIRE_THROWS_AS(generate_synthetic(spec), invariant_error);
    spec = SynthSpec{};
    spec.duration_s = 1.0; // 31 frames < one window
    REQUIRE_THROWS_AS(generate_synthetic(spec), invariant_error);
    spec = SynthSpec{};
    spec.dicrotic_ratio = 1.0;
    REQUIRE_THROWS_AS(generate_synthetic(spec), invariant_error);
    spec = SynthSpec{};
    spec.noise_sigma = -0.1;
    REQUIRE_THROWS_AS(generate_synthetic(spec), invariant_error);
}
