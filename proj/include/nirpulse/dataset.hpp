#pragma once

// Dataset manifest and loaders. A dataset directory holds a manifest CSV
// plus one video (NIRV1), one signal CSV and one bounding-box CSV per
// record, with paths stored relative to the manifest location. Loading a
// signal applies the ingest-time corrections: gap filling, then resampling
// to the video frame rate.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "nirpulse/error.hpp"
#include "nirpulse/frames.hpp"
#include "nirpulse/io.hpp"
#include "nirpulse/signal.hpp"

namespace nirpulse {

struct ManifestRecord {
    std::string video_id;
    std::string subject_id;
    std::string video_path;  // relative to the manifest directory
    std::string signal_path;
    std::string bbox_path;
    double fps = 30.0;
    std::string split;      // train | test
    std::string scenario;   // indoor | garage | driving | synthetic
    std::string motion;     // still | small | large
    int wavelength_nm = 940;
    std::string provenance; // original | augmented(<target hr>)
};

inline const char* kManifestHeader =
    "video_id,subject_id,video_path,signal_path,bbox_path,fps,split,scenario,motion,"
    "wavelength_nm,provenance";

inline std::string make_augmented_provenance(double target_hr_bpm) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "augmented(%.2f)", target_hr_bpm);
    return buf;
}

// Target HR of an augmented record; empty for original provenance.
inline std::optional<double> augmented_target_hr(const ManifestRecord& rec) {
    const std::string& p = rec.provenance;
    if (p == "original") return std::nullopt;
    if (p.rfind("augmented(", 0) == 0 && p.back() == ')') {
        const std::string inner = p.substr(10, p.size() - 11);
        return detail::parse_double(inner, "provenance '" + p + "'");
    }
    throw format_error("provenance '" + p + "' is neither 'original' nor 'augmented(<hr>)'");
}

inline bool is_augmented(const ManifestRecord& rec) {
    return augmented_target_hr(rec).has_value();
}

inline void validate_record(const ManifestRecord& rec) {
    auto one_of = [&](const std::string& v, std::initializer_list<const char*> allowed,
                      const char* field) {
        for (const char* a : allowed)
            if (v == a) return;
        throw format_error("record '" + rec.video_id + "': invalid " + field + " '" + v + "'");
    };
    require(!rec.video_id.empty(), "manifest record: empty video_id");
    require(!rec.subject_id.empty(), "manifest record: empty subject_id");
    require(!rec.video_path.empty() && !rec.signal_path.empty() && !rec.bbox_path.empty(),
            "record '" + rec.video_id + "': empty path");
    require(rec.fps > 0.0, "record '" + rec.video_id + "': fps must be positive");
    require(rec.wavelength_nm > 0, "record '" + rec.video_id + "': wavelength must be positive");
    one_of(rec.split, {"train", "test"}, "split");
    one_of(rec.scenario, {"indoor", "garage", "driving", "synthetic"}, "scenario");
    one_of(rec.motion, {"still", "small", "large"}, "motion");
    augmented_target_hr(rec); // throws on malformed provenance
    for (const std::string* f : {&rec.video_id, &rec.subject_id, &rec.video_path,
                                 &rec.signal_path, &rec.bbox_path, &rec.provenance})
        require(f->find(',') == std::string::npos && f->find('\n') == std::string::npos,
                "record '" + rec.video_id + "': fields must not contain commas or newlines");
}

// Whole-manifest invariants: unique ids, subject-disjoint splits, and
// augmented records confined to the train split.
inline void validate_manifest(const std::vector<ManifestRecord>& records) {
    std::set<std::string> ids;
    std::set<std::string> train_subjects, test_subjects;
    for (const auto& rec : records) {
        validate_record(rec);
        if (!ids.insert(rec.video_id).second)
            throw invariant_error("manifest: duplicate video_id '" + rec.video_id + "'");
        (rec.split == "train" ? train_subjects : test_subjects).insert(rec.subject_id);
        if (is_augmented(rec) && rec.split != "train")
            throw invariant_error("manifest: augmented record '" + rec.video_id +
                                  "' outside the train split");
    }
    for (const auto& s : train_subjects)
        if (test_subjects.count(s))
            throw invariant_error("manifest: subject '" + s + "' appears in both splits");
}

inline void write_manifest(const std::vector<ManifestRecord>& records,
                           const std::filesystem::path& path) {
    validate_manifest(records);
    std::string out = kManifestHeader;
    out += '\n';
    for (const auto& rec : records) {
        out += rec.video_id + ',' + rec.subject_id + ',' + rec.video_path + ',' +
               rec.signal_path + ',' + rec.bbox_path + ',' + detail::fmt9(rec.fps) + ',' +
               rec.split + ',' + rec.scenario + ',' + rec.motion + ',' +
               std::to_string(rec.wavelength_nm) + ',' + rec.provenance + '\n';
    }
    detail::write_file_bytes(path, out);
}

inline std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path) {
    const auto lines = detail::read_lines(path);
    if (lines.empty() || lines[0] != kManifestHeader)
        throw format_error(path.string() + ": bad or missing manifest header");
    std::vector<ManifestRecord> records;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = detail::split_csv_line(lines[i]);
        const std::string where = path.string() + ": line " + std::to_string(i + 1);
        if (f.size() != 11) throw format_error(where + ": expected 11 fields, got " +
                                               std::to_string(f.size()));
        ManifestRecord rec;
        rec.video_id = f[0];
        rec.subject_id = f[1];
        rec.video_path = f[2];
        rec.signal_path = f[3];
        rec.bbox_path = f[4];
        rec.fps = detail::parse_double(f[5], where);
        rec.split = f[6];
        rec.scenario = f[7];
        rec.motion = f[8];
        rec.wavelength_nm = static_cast<int>(detail::parse_int(f[9], where));
        rec.provenance = f[10];
        records.push_back(std::move(rec));
    }
    try {
        validate_manifest(records);
    } catch (const invariant_error& e) {
        throw format_error(path.string() + ": " + e.what());
    }
    return records;
}

// Subject-level split. Train keeps every record of the train subjects;
// test keeps only original-provenance records of the test subjects. The
// split fields of the returned records are rewritten accordingly.
inline std::pair<std::vector<ManifestRecord>, std::vector<ManifestRecord>>
split_manifest(const std::vector<ManifestRecord>& records,
               const std::set<std::string>& train_subjects,
               const std::set<std::string>& test_subjects) {
    for (const auto& s : train_subjects)
        if (test_subjects.count(s))
            throw invariant_error("split: subject '" + s + "' is in both subject sets");
    std::pair<std::vector<ManifestRecord>, std::vector<ManifestRecord>> out;
    for (const auto& rec : records) {
        if (train_subjects.count(rec.subject_id)) {
            out.first.push_back(rec);
            out.first.back().split = "train";
        } else if (test_subjects.count(rec.subject_id)) {
            if (!is_augmented(rec)) {
                out.second.push_back(rec);
                out.second.back().split = "test";
            }
        } else {
            throw invariant_error("split: subject '" + rec.subject_id +
                                  "' is in neither subject set");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Loaders with ingest-time corrections.

inline FrameSequence load_video(const std::filesystem::path& manifest_dir,
                                const ManifestRecord& rec) {
    FrameSequence video = read_video_nirv(manifest_dir / rec.video_path);
    if (std::abs(static_cast<double>(video.fps) - rec.fps) > 1e-3)
        throw format_error("record '" + rec.video_id + "': video fps " +
                           detail::fmt9(video.fps) + " does not match the manifest fps " +
                           detail::fmt9(rec.fps));
    return video;
}

// Gap filling then resampling to the record's frame rate; the result is
// gap-free at exactly rec.fps.
inline PpgSignal load_signal(const std::filesystem::path& manifest_dir,
                             const ManifestRecord& rec) {
    PpgSignal signal = read_signal_csv(manifest_dir / rec.signal_path);
    if (signal.has_gaps()) signal = fill_dropped_samples(signal);
    signal = resample_linear(signal, rec.fps);
    return signal;
}

inline std::vector<BoxEntry> load_boxes(const std::filesystem::path& manifest_dir,
                                        const ManifestRecord& rec) {
    return read_bbox_csv(manifest_dir / rec.bbox_path);
}

struct LoadedPair {
    FrameSequence video;
    PpgSignal signal;
};

// Loads and aligns a record; duration mismatch beyond one sample period
// rejects the record (callers may skip it and report the reason).
inline LoadedPair load_pair(const std::filesystem::path& manifest_dir,
                            const ManifestRecord& rec) {
    LoadedPair pair{load_video(manifest_dir, rec), load_signal(manifest_dir, rec)};
    const double gap = std::abs(pair.video.duration_s() - pair.signal.duration_s());
    const double one_sample = 1.0 / rec.fps;
    if (gap > one_sample + 1e-9)
        throw rejection_error("record '" + rec.video_id + "': video (" +
                              detail::fmt9(pair.video.duration_s()) + " s) and signal (" +
                              detail::fmt9(pair.signal.duration_s()) +
                              " s) are misaligned by more than one sample");
    return pair;
}

} // namespace nirpulse
