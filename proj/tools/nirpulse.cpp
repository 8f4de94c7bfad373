// nirpulse — command-line front end for the non-contact NIR pulse pipeline.
//
// Subcommands cover the full workflow: synthesize a labelled dataset, correct
// and normalize ground-truth signals, augment the training split across heart
// rate bins, crop videos to the face region, train the regression network,
// run sliding-window inference, and evaluate predicted heart rates.
//
// Conventions:
//   * logs go to standard error; data goes to files (and tables to stdout)
//   * exit codes: 0 ok, 2 usage error, 3 data/format error, 4 invariant
//   * all outputs are deterministic for a fixed seed (re-runs are
//     byte-identical); the seed comes from --seed or $NIRPULSE_SEED
//   * dataset commands read a manifest and write a fresh dataset directory,
//     never mutating their input

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nirpulse/augment.hpp"
#include "nirpulse/can.hpp"
#include "nirpulse/dataset.hpp"
#include "nirpulse/error.hpp"
#include "nirpulse/eval.hpp"
#include "nirpulse/frames.hpp"
#include "nirpulse/infer.hpp"
#include "nirpulse/io.hpp"
#include "nirpulse/rng.hpp"
#include "nirpulse/signal.hpp"
#include "nirpulse/synthetic.hpp"
#include "nirpulse/train.hpp"

namespace fs = std::filesystem;
using nirpulse::format_error;
using nirpulse::invariant_error;
using nirpulse::rejection_error;

namespace {

void log_line(const std::string& msg) { std::cerr << "[nirpulse] " << msg << "\n"; }

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
    return buf;
}

std::string fmt_double(double v) { return nirpulse::detail::fmt9(v); }

void copy_bytes(const fs::path& src, const fs::path& dst) {
    nirpulse::detail::write_file_bytes(dst, nirpulse::detail::read_file_bytes(src));
}

void ensure_parent(const fs::path& p) {
    const fs::path dir = p.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
}

fs::path manifest_directory(const fs::path& manifest) {
    return fs::absolute(manifest).parent_path();
}

// Dataset-to-dataset commands must not write into the directory they read.
void require_distinct_output(const fs::path& manifest, const fs::path& out_dir) {
    const fs::path in_dir = fs::weakly_canonical(manifest_directory(manifest));
    const fs::path out = fs::weakly_canonical(fs::absolute(out_dir));
    if (in_dir == out)
        throw invariant_error("output directory must differ from the input dataset directory");
}

std::vector<nirpulse::ManifestRecord> records_in_split(
    const std::vector<nirpulse::ManifestRecord>& records, const std::string& split) {
    if (split == "all") return records;
    std::vector<nirpulse::ManifestRecord> out;
    for (const auto& r : records)
        if (r.split == split) out.push_back(r);
    return out;
}

// ---- shared option state ----------------------------------------------------

struct GlobalOpts {
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

// ---- synth ------------------------------------------------------------------

struct SynthOpts {
    fs::path out;
    std::size_t subjects = 8;
    std::size_t train_subjects = 6;
    double duration_s = 30.0;
    double fps = 30.0;
    std::size_t size = 16;
    double hr_min = 45.0;
    double hr_max = 135.0;
    double noise_sigma = 0.005;
    double dicrotic = 0.2;
};

int run_synth(const SynthOpts& opt, const GlobalOpts& g) {
    nirpulse::require(opt.subjects >= 1, "synth: need at least one subject");
    nirpulse::require(opt.train_subjects <= opt.subjects,
                      "synth: train subject count exceeds the subject count");
    nirpulse::require(opt.hr_min <= opt.hr_max, "synth: hr-min must not exceed hr-max");
    fs::create_directories(opt.out);

    std::vector<nirpulse::ManifestRecord> records;
    for (std::size_t i = 0; i < opt.subjects; ++i) {
        const double hr = opt.subjects == 1
                              ? 0.5 * (opt.hr_min + opt.hr_max)
                              : opt.hr_min + static_cast<double>(i) * (opt.hr_max - opt.hr_min) /
                                                 static_cast<double>(opt.subjects - 1);
        const std::string subject = "s" + std::to_string(i);
        const std::string id = subject + "_v0";

        nirpulse::SynthSpec spec;
        spec.subjects = 1;
        spec.hr_bpm = hr;
        spec.duration_s = opt.duration_s;
        spec.fps = opt.fps;
        spec.height = opt.size;
        spec.width = opt.size;
        spec.noise_sigma = opt.noise_sigma;
        spec.dicrotic_ratio = opt.dicrotic;
        spec.seed = nirpulse::derive_seed(g.seed, id);

        const nirpulse::SynthResult res = nirpulse::generate_synthetic(spec);
        nirpulse::write_video_nirv(opt.out / (id + ".nirv"), res.video);
        nirpulse::write_signal_csv(opt.out / (id + ".ppg.csv"), res.gt);
        nirpulse::write_bbox_csv(opt.out / (id + ".bbox.csv"), {{-1, res.box}});

        nirpulse::ManifestRecord rec;
        rec.video_id = id;
        rec.subject_id = subject;
        rec.video_path = id + ".nirv";
        rec.signal_path = id + ".ppg.csv";
        rec.bbox_path = id + ".bbox.csv";
        rec.fps = opt.fps;
        rec.split = i < opt.train_subjects ? "train" : "test";
        rec.scenario = "synthetic";
        rec.motion = "still";
        rec.wavelength_nm = 940;
        rec.provenance = "original";
        records.push_back(rec);
        log_line("synth: " + id + " hr=" + fmt_double(hr) + " bpm split=" + rec.split);
    }
    nirpulse::write_manifest(records, opt.out / "manifest.csv");
    log_line("synth: wrote " + std::to_string(records.size()) + " video(s) to " +
             opt.out.string());
    return 0;
}

// ---- correct / normalize ----------------------------------------------------

struct SignalPassOpts {
    fs::path manifest;
    fs::path out;
};

// Copies a dataset while rewriting every ground-truth signal: gap filling and
// resampling to the manifest rate always run; `normalize` additionally maps
// peaks to 1 and troughs to 0.
int run_signal_pass(const SignalPassOpts& opt, bool normalize) {
    require_distinct_output(opt.manifest, opt.out);
    const fs::path in_dir = manifest_directory(opt.manifest);
    const auto records = nirpulse::read_manifest(opt.manifest);
    fs::create_directories(opt.out);

    for (const auto& rec : records) {
        nirpulse::PpgSignal sig = nirpulse::load_signal(in_dir, rec);
        if (normalize) sig = nirpulse::normalize_peak_trough(sig, nirpulse::detect_extrema(sig));
        const fs::path sig_out = opt.out / rec.signal_path;
        ensure_parent(sig_out);
        nirpulse::write_signal_csv(sig_out, sig);

        const fs::path video_out = opt.out / rec.video_path;
        ensure_parent(video_out);
        copy_bytes(in_dir / rec.video_path, video_out);
        const fs::path bbox_out = opt.out / rec.bbox_path;
        ensure_parent(bbox_out);
        copy_bytes(in_dir / rec.bbox_path, bbox_out);
    }
    nirpulse::write_manifest(records, opt.out / opt.manifest.filename());
    log_line(std::string(normalize ? "normalize" : "correct") + ": processed " +
             std::to_string(records.size()) + " signal(s) into " + opt.out.string());
    return 0;
}

// ---- augment ----------------------------------------------------------------

struct AugmentOpts {
    fs::path manifest;
    fs::path out;
    std::size_t min_frames = 65;
};

// Maps an output frame index back to the source frame whose content it shows,
// so per-frame bounding boxes follow a time-stretched clip.
std::vector<nirpulse::BoxEntry> stretch_boxes(const std::vector<nirpulse::BoxEntry>& boxes,
                                              double factor, std::size_t src_frames,
                                              std::size_t out_frames) {
    if (boxes.size() == 1 && boxes[0].frame < 0) return boxes;
    std::vector<nirpulse::BoxEntry> out(out_frames);
    for (std::size_t j = 0; j < out_frames; ++j) {
        const double p = std::min(static_cast<double>(j) / factor,
                                  static_cast<double>(src_frames - 1));
        const auto src = static_cast<std::size_t>(std::llround(p));
        out[j] = {static_cast<long long>(j),
                  nirpulse::box_for_frame(boxes, std::min(src, src_frames - 1))};
    }
    return out;
}

int run_augment(const AugmentOpts& opt, const GlobalOpts& g) {
    require_distinct_output(opt.manifest, opt.out);
    const fs::path in_dir = manifest_directory(opt.manifest);
    const auto records = nirpulse::read_manifest(opt.manifest);
    fs::create_directories(opt.out);

    // Copy every existing record through unchanged.
    for (const auto& rec : records) {
        for (const std::string* rel : {&rec.video_path, &rec.signal_path, &rec.bbox_path}) {
            const fs::path dst = opt.out / *rel;
            ensure_parent(dst);
            copy_bytes(in_dir / *rel, dst);
        }
    }

    std::vector<nirpulse::ManifestRecord> out_records = records;
    std::size_t augmented = 0, skipped = 0, sources = 0;
    for (const auto& rec : records) {
        if (rec.split != "train" || nirpulse::is_augmented(rec)) continue;
        ++sources;
        try {
            const nirpulse::LoadedPair pair = nirpulse::load_pair(in_dir, rec);
            const auto plan = nirpulse::plan_augmentation(
                pair.signal, nirpulse::derive_seed(g.seed, rec.video_id + "/aug"));
            const auto clips =
                nirpulse::augment_pair(pair.video, pair.signal, plan, opt.min_frames);
            const auto boxes = nirpulse::load_boxes(in_dir, rec);

            for (std::size_t k = 0; k < clips.size(); ++k) {
                const auto& clip = clips[k];
                const std::string id = rec.video_id + "_aug" + std::to_string(k);
                nirpulse::write_video_nirv(opt.out / (id + ".nirv"), clip.frames);
                nirpulse::write_signal_csv(opt.out / (id + ".ppg.csv"), clip.signal);
                nirpulse::write_bbox_csv(
                    opt.out / (id + ".bbox.csv"),
                    stretch_boxes(boxes, clip.factor, pair.video.frame_count,
                                  clip.frames.frame_count));

                nirpulse::ManifestRecord aug = rec;
                aug.video_id = id;
                aug.video_path = id + ".nirv";
                aug.signal_path = id + ".ppg.csv";
                aug.bbox_path = id + ".bbox.csv";
                aug.provenance = nirpulse::make_augmented_provenance(clip.target_hr_bpm);
                out_records.push_back(aug);
                ++augmented;
            }
        } catch (const rejection_error& e) {
            ++skipped;
            log_line(std::string("augment: skipping '") + rec.video_id + "': " + e.what());
        }
    }
    if (sources == 0)
        throw invariant_error("augment: the manifest has no original train records");

    nirpulse::validate_manifest(out_records);
    nirpulse::write_manifest(out_records, opt.out / opt.manifest.filename());
    log_line("augment: added " + std::to_string(augmented) + " clip(s) from " +
             std::to_string(sources - skipped) + " video(s), skipped " +
             std::to_string(skipped));
    return 0;
}

// ---- crop -------------------------------------------------------------------

struct CropOpts {
    fs::path manifest;
    fs::path out;
    std::size_t size = 64;
    double pad = 0.25;
};

nirpulse::FrameSequence crop_and_resize(const nirpulse::FrameSequence& seq,
                                        const std::vector<nirpulse::BoxEntry>& boxes,
                                        double pad, std::size_t size) {
    if (boxes.size() == 1 && boxes[0].frame < 0)
        return nirpulse::resize_bilinear(nirpulse::crop_with_padding(seq, boxes[0].box, pad),
                                         size, size);
    // Per-frame boxes: crop and resize one frame at a time.
    nirpulse::FrameSequence out;
    out.frame_count = seq.frame_count;
    out.height = size;
    out.width = size;
    out.fps = seq.fps;
    out.pixels.resize(seq.frame_count * size * size);
    nirpulse::FrameSequence one;
    one.frame_count = 1;
    one.height = seq.height;
    one.width = seq.width;
    one.fps = seq.fps;
    one.pixels.resize(seq.frame_size());
    for (std::size_t t = 0; t < seq.frame_count; ++t) {
        std::copy(seq.frame(t), seq.frame(t) + seq.frame_size(), one.pixels.begin());
        const nirpulse::BoundingBox box = nirpulse::box_for_frame(boxes, t);
        const nirpulse::FrameSequence r =
            nirpulse::resize_bilinear(nirpulse::crop_with_padding(one, box, pad), size, size);
        std::copy(r.frame(0), r.frame(0) + r.frame_size(), out.frame(t));
    }
    return out;
}

int run_crop(const CropOpts& opt) {
    require_distinct_output(opt.manifest, opt.out);
    nirpulse::require(opt.size >= 4, "crop: size must be at least 4");
    const fs::path in_dir = manifest_directory(opt.manifest);
    const auto records = nirpulse::read_manifest(opt.manifest);
    fs::create_directories(opt.out);

    for (const auto& rec : records) {
        const nirpulse::FrameSequence video = nirpulse::load_video(in_dir, rec);
        const auto boxes = nirpulse::load_boxes(in_dir, rec);
        const nirpulse::FrameSequence cropped =
            crop_and_resize(video, boxes, opt.pad, opt.size);

        const fs::path video_out = opt.out / rec.video_path;
        ensure_parent(video_out);
        nirpulse::write_video_nirv(video_out, cropped);
        const fs::path sig_out = opt.out / rec.signal_path;
        ensure_parent(sig_out);
        copy_bytes(in_dir / rec.signal_path, sig_out);
        // After cropping, the face fills the frame; record that box.
        const fs::path bbox_out = opt.out / rec.bbox_path;
        ensure_parent(bbox_out);
        nirpulse::write_bbox_csv(
            bbox_out,
            {{-1, nirpulse::BoundingBox{0, 0, static_cast<int>(opt.size),
                                        static_cast<int>(opt.size)}}});
    }
    nirpulse::write_manifest(records, opt.out / opt.manifest.filename());
    log_line("crop: wrote " + std::to_string(records.size()) + " video(s) at " +
             std::to_string(opt.size) + "x" + std::to_string(opt.size));
    return 0;
}

// ---- train ------------------------------------------------------------------

struct TrainOpts {
    fs::path manifest;
    fs::path out;
    fs::path loss_csv; // defaults to <out>.loss.csv
    std::size_t window = 64;
    std::size_t c1 = 4;
    std::size_t c2 = 8;
    std::size_t hidden = 32;
    double snake_a = 1.0;
    std::size_t steps = 2000;
    std::size_t batch = 8;
    double lr = 1e-3;
    std::size_t window_stride = 32;
    double epsilon = 1e-6;
    bool use_float64 = false;
};

template <typename T>
int run_train_typed(const TrainOpts& opt, const GlobalOpts& g) {
    const fs::path in_dir = manifest_directory(opt.manifest);
    const auto records = records_in_split(nirpulse::read_manifest(opt.manifest), "train");
    if (records.empty()) throw invariant_error("train: the manifest has no train records");

    nirpulse::CanConfig cfg;
    cfg.n = opt.window;
    cfg.c1 = opt.c1;
    cfg.c2 = opt.c2;
    cfg.hidden = opt.hidden;
    cfg.snake_a = opt.snake_a;
    cfg.seed = g.seed;

    std::vector<nirpulse::Window<T>> windows;
    std::size_t used = 0, skipped = 0;
    bool have_dims = false;
    for (const auto& rec : records) {
        try {
            const nirpulse::LoadedPair pair = nirpulse::load_pair(in_dir, rec);
            if (!have_dims) {
                cfg.height = pair.video.height;
                cfg.width = pair.video.width;
                nirpulse::validate_config(cfg);
                have_dims = true;
            }
            if (pair.video.height != cfg.height || pair.video.width != cfg.width)
                throw format_error("train: video '" + rec.video_id + "' is " +
                                   std::to_string(pair.video.height) + "x" +
                                   std::to_string(pair.video.width) +
                                   " but the model expects " + std::to_string(cfg.height) +
                                   "x" + std::to_string(cfg.width));
            const nirpulse::PpgSignal gt = nirpulse::normalize_peak_trough(
                pair.signal, nirpulse::detect_extrema(pair.signal));
            auto w = nirpulse::build_windows<T>(pair.video, gt, cfg, opt.window_stride,
                                                opt.epsilon);
            if (w.empty()) {
                ++skipped;
                log_line("train: skipping '" + rec.video_id + "': shorter than one window");
                continue;
            }
            for (auto& win : w) windows.push_back(std::move(win));
            ++used;
        } catch (const rejection_error& e) {
            ++skipped;
            log_line(std::string("train: skipping '") + rec.video_id + "': " + e.what());
        }
    }
    if (windows.empty()) throw invariant_error("train: no usable training windows");

    nirpulse::CanModel<T> model = nirpulse::init_model<T>(cfg);
    log_line("train: " + std::to_string(windows.size()) + " window(s) from " +
             std::to_string(used) + " video(s) (" + std::to_string(skipped) +
             " skipped), " + std::to_string(model.parameter_count()) + " parameters, " +
             (opt.use_float64 ? "float64" : "float32"));

    nirpulse::TrainConfig tc;
    tc.steps = opt.steps;
    tc.batch_size = opt.batch;
    tc.lr = opt.lr;
    tc.seed = g.seed;
    tc.threads = g.threads;
    const nirpulse::TrainResult result = nirpulse::train(model, windows, tc);

    for (std::size_t s = 0; s < result.loss_trace.size(); s += 500)
        log_line("train: step " + std::to_string(s) + " loss " +
                 fmt_double(result.loss_trace[s]));
    if (!result.loss_trace.empty())
        log_line("train: final step " + std::to_string(result.loss_trace.size() - 1) +
                 " loss " + fmt_double(result.loss_trace.back()));

    ensure_parent(opt.out);
    nirpulse::save_weights(model, opt.out);
    const fs::path loss_path =
        opt.loss_csv.empty() ? fs::path(opt.out.string() + ".loss.csv") : opt.loss_csv;
    std::string csv = "step,loss\n";
    for (std::size_t s = 0; s < result.loss_trace.size(); ++s)
        csv += std::to_string(s) + ',' + fmt_double(result.loss_trace[s]) + '\n';
    ensure_parent(loss_path);
    nirpulse::detail::write_file_bytes(loss_path, csv);
    log_line("train: wrote weights to " + opt.out.string() + " and loss trace to " +
             loss_path.string());
    return 0;
}

int run_train(const TrainOpts& opt, const GlobalOpts& g) {
    return opt.use_float64 ? run_train_typed<double>(opt, g) : run_train_typed<float>(opt, g);
}

// ---- infer ------------------------------------------------------------------

struct InferOpts {
    fs::path manifest;
    fs::path weights;
    fs::path out;
    std::size_t stride = 1;
    std::string split = "test";
    double epsilon = 1e-6;
    bool use_float64 = false;
};

template <typename T>
int run_infer_typed(const InferOpts& opt) {
    const fs::path in_dir = manifest_directory(opt.manifest);
    const auto records = records_in_split(nirpulse::read_manifest(opt.manifest), opt.split);
    if (records.empty())
        throw invariant_error("infer: no records in split '" + opt.split + "'");

    const nirpulse::CanModel<T> model = nirpulse::load_weights<T>(opt.weights);
    const std::string digest =
        hex64(nirpulse::fnv1a64(nirpulse::detail::read_file_bytes(opt.weights)));
    fs::create_directories(opt.out);

    std::size_t written = 0, skipped = 0;
    for (const auto& rec : records) {
        const nirpulse::FrameSequence video = nirpulse::load_video(in_dir, rec);
        if (video.height != model.config.height || video.width != model.config.width)
            throw format_error("infer: video '" + rec.video_id + "' is " +
                               std::to_string(video.height) + "x" +
                               std::to_string(video.width) + " but the model expects " +
                               std::to_string(model.config.height) + "x" +
                               std::to_string(model.config.width));
        const nirpulse::OverlapResult res =
            nirpulse::sliding_window_regress(model, video, opt.stride, opt.epsilon);
        if (res.covered_end == res.covered_begin) {
            ++skipped;
            log_line("infer: skipping '" + rec.video_id + "': no window fits (" +
                     std::to_string(video.frame_count) + " frames, window " +
                     std::to_string(model.config.n) + ")");
            continue;
        }

        std::vector<double> samples(res.values.begin(),
                                    res.values.begin() +
                                        static_cast<std::ptrdiff_t>(res.covered_end));
        std::vector<std::uint8_t> mask(samples.size(), 0);
        bool any_gap = false;
        for (std::size_t i = 0; i < samples.size(); ++i)
            if (std::isnan(samples[i])) mask[i] = 1, any_gap = true;
        const nirpulse::PpgSignal pred = nirpulse::make_signal(
            std::move(samples), rec.fps,
            any_gap ? std::move(mask) : std::vector<std::uint8_t>{});
        nirpulse::write_signal_csv(opt.out / (rec.video_id + ".pred.csv"), pred);

        nlohmann::json meta;
        meta["video_id"] = rec.video_id;
        meta["n"] = model.config.n;
        meta["stride"] = opt.stride;
        meta["t_positions"] = video.frame_count > 0 ? video.frame_count - 1 : 0;
        meta["covered_begin"] = res.covered_begin;
        meta["covered_end"] = res.covered_end;
        meta["sample_rate_hz"] = rec.fps;
        meta["model_digest"] = digest;
        nirpulse::detail::write_file_bytes(opt.out / (rec.video_id + ".pred.json"),
                                           meta.dump(2) + "\n");
        ++written;
    }
    log_line("infer: wrote " + std::to_string(written) + " prediction(s) (" +
             std::to_string(skipped) + " skipped) with model digest " + digest);
    return 0;
}

int run_infer(const InferOpts& opt) {
    return opt.use_float64 ? run_infer_typed<double>(opt) : run_infer_typed<float>(opt);
}

// ---- eval -------------------------------------------------------------------

struct EvalOpts {
    fs::path manifest;
    fs::path pred;
    fs::path out;
    std::string split = "test";
};

int run_eval(const EvalOpts& opt) {
    const fs::path in_dir = manifest_directory(opt.manifest);
    const auto records = records_in_split(nirpulse::read_manifest(opt.manifest), opt.split);
    if (records.empty())
        throw invariant_error("eval: no records in split '" + opt.split + "'");
    fs::create_directories(opt.out);

    std::vector<nirpulse::EvalPair> pairs;
    for (const auto& rec : records) {
        const fs::path pred_path = opt.pred / (rec.video_id + ".pred.csv");
        if (!fs::exists(pred_path))
            throw format_error("eval: missing prediction file " + pred_path.string());
        nirpulse::EvalPair pair;
        pair.video_id = rec.video_id;
        pair.pred = nirpulse::read_signal_csv(pred_path);
        nirpulse::PpgSignal gt = nirpulse::load_signal(in_dir, rec);
        pair.gt = nirpulse::normalize_peak_trough(gt, nirpulse::detect_extrema(gt));
        pairs.push_back(std::move(pair));
    }

    const nirpulse::EvaluationReport report = nirpulse::evaluate_set(pairs);
    nirpulse::write_report_csv(report, opt.out / "report.csv");
    for (const auto& pair : pairs) {
        const auto info = nirpulse::emit_plot_data(pair.pred, pair.gt,
                                                   opt.out / (pair.video_id + ".plot.csv"));
        if (info.truncated)
            log_line("eval: plot data for '" + pair.video_id +
                     "' truncated to the shorter signal");
    }
    std::cout << nirpulse::format_report_table(report);
    log_line("eval: wrote report and " + std::to_string(pairs.size()) +
             " plot file(s) to " + opt.out.string());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"nirpulse — non-contact NIR pulse estimation pipeline"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a plain `key = value` file");
    app.set_version_flag("--version", "nirpulse 1.0.0");

    GlobalOpts g;
    app.add_option("--seed", g.seed, "Base seed for all random choices")
        ->envname("NIRPULSE_SEED")
        ->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads for training")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    SynthOpts sy;
    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic labelled dataset");
    synth->fallthrough();
    synth->add_option("--out", sy.out, "Output dataset directory")->required();
    synth->add_option("--subjects", sy.subjects, "Number of subjects (one video each)")
        ->check(CLI::PositiveNumber)->capture_default_str();
    synth->add_option("--train-subjects", sy.train_subjects,
                      "First K subjects form the train split; the rest are test")
        ->capture_default_str();
    synth->add_option("--duration", sy.duration_s, "Video duration in seconds")
        ->capture_default_str();
    synth->add_option("--fps", sy.fps, "Frame rate and signal rate")->capture_default_str();
    synth->add_option("--size", sy.size, "Frame height and width in pixels")
        ->capture_default_str();
    synth->add_option("--hr-min", sy.hr_min, "Lowest subject heart rate (bpm)")
        ->capture_default_str();
    synth->add_option("--hr-max", sy.hr_max, "Highest subject heart rate (bpm)")
        ->capture_default_str();
    synth->add_option("--noise", sy.noise_sigma, "Per-pixel Gaussian noise sigma")
        ->capture_default_str();
    synth->add_option("--dicrotic", sy.dicrotic, "Secondary-bump amplitude ratio in [0,1)")
        ->capture_default_str();

    SignalPassOpts co;
    CLI::App* correct = app.add_subcommand(
        "correct", "Fill dropped ground-truth samples and resample to the manifest rate");
    correct->fallthrough();
    correct->add_option("--manifest", co.manifest, "Input manifest CSV")->required();
    correct->add_option("--out", co.out, "Output dataset directory")->required();

    SignalPassOpts no;
    CLI::App* normalize = app.add_subcommand(
        "normalize", "Correct signals, then map peaks to 1 and troughs to 0");
    normalize->fallthrough();
    normalize->add_option("--manifest", no.manifest, "Input manifest CSV")->required();
    normalize->add_option("--out", no.out, "Output dataset directory")->required();

    AugmentOpts au;
    CLI::App* augment = app.add_subcommand(
        "augment", "Append 10 time-stretched train clips per video, one per heart rate bin");
    augment->fallthrough();
    augment->add_option("--manifest", au.manifest, "Input manifest CSV")->required();
    augment->add_option("--out", au.out, "Output dataset directory")->required();
    augment->add_option("--min-frames", au.min_frames,
                        "Reject clips shorter than this many frames")
        ->check(CLI::PositiveNumber)->capture_default_str();

    CropOpts cr;
    CLI::App* crop = app.add_subcommand(
        "crop", "Crop videos to the padded face box and resize");
    crop->fallthrough();
    crop->add_option("--manifest", cr.manifest, "Input manifest CSV")->required();
    crop->add_option("--out", cr.out, "Output dataset directory")->required();
    crop->add_option("--size", cr.size, "Output frame height and width")
        ->capture_default_str();
    crop->add_option("--pad", cr.pad, "Padding fraction added around the box")
        ->check(CLI::NonNegativeNumber)->capture_default_str();

    TrainOpts tr;
    CLI::App* train = app.add_subcommand("train", "Train the regression network");
    train->fallthrough();
    train->add_option("--manifest", tr.manifest, "Input manifest CSV")->required();
    train->add_option("--out", tr.out, "Output weight file")->required();
    train->add_option("--loss-csv", tr.loss_csv, "Loss trace CSV (default <out>.loss.csv)");
    train->add_option("--window", tr.window, "Regression window length in samples")
        ->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--c1", tr.c1, "Channels in the first conv stage")
        ->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--c2", tr.c2, "Channels in the second conv stage")
        ->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--hidden", tr.hidden, "Hidden units in the dense head")
        ->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--snake-a", tr.snake_a, "Snake activation frequency")
        ->capture_default_str();
    train->add_option("--steps", tr.steps, "Optimizer steps")
        ->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--batch", tr.batch, "Windows per optimizer step")
        ->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--lr", tr.lr, "Learning rate")->capture_default_str();
    train->add_option("--window-stride", tr.window_stride,
                      "Stride between training windows")
        ->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--epsilon", tr.epsilon, "Stabilizer for frame differences")
        ->capture_default_str();
    train->add_flag("--float64", tr.use_float64, "Train in double precision");

    InferOpts in;
    CLI::App* infer = app.add_subcommand(
        "infer", "Regress pulse signals with overlap-averaged sliding windows");
    infer->fallthrough();
    infer->add_option("--manifest", in.manifest, "Input manifest CSV")->required();
    infer->add_option("--weights", in.weights, "Weight file from `train`")->required();
    infer->add_option("--out", in.out, "Output directory for predictions")->required();
    infer->add_option("--stride", in.stride, "Window start stride")
        ->check(CLI::PositiveNumber)->capture_default_str();
    infer->add_option("--split", in.split, "Manifest split to process")
        ->check(CLI::IsMember({"train", "test", "all"}))->capture_default_str();
    infer->add_option("--epsilon", in.epsilon, "Stabilizer for frame differences")
        ->capture_default_str();
    infer->add_flag("--float64", in.use_float64, "Run inference in double precision");

    EvalOpts ev;
    CLI::App* eval_cmd = app.add_subcommand(
        "eval", "Compare predicted heart rates against the ground truth");
    eval_cmd->fallthrough();
    eval_cmd->add_option("--manifest", ev.manifest, "Input manifest CSV")->required();
    eval_cmd->add_option("--pred", ev.pred, "Directory of `infer` predictions")->required();
    eval_cmd->add_option("--out", ev.out, "Output directory for the report")->required();
    eval_cmd->add_option("--split", ev.split, "Manifest split to evaluate")
        ->check(CLI::IsMember({"train", "test", "all"}))->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*synth) return run_synth(sy, g);
        if (*correct) return run_signal_pass(co, false);
        if (*normalize) return run_signal_pass(no, true);
        if (*augment) return run_augment(au, g);
        if (*crop) return run_crop(cr);
        if (*train) return run_train(tr, g);
        if (*infer) return run_infer(in);
        if (*eval_cmd) return run_eval(ev);
        std::cerr << "error: usage: no subcommand selected\n";
        return 2;
    } catch (const format_error& e) {
        std::cerr << "error: format: " << e.what() << "\n";
        return 3;
    } catch (const rejection_error& e) {
        std::cerr << "error: rejected: " << e.what() << "\n";
        return 3;
    } catch (const invariant_error& e) {
        std::cerr << "error: invariant: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 4;
    }
}
