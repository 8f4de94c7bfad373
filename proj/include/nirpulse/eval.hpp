#pragma once

// Heart-rate evaluation: one HR per video from R-R intervals on predicted
// and ground-truth waveforms, aggregated into a mean absolute error over a
// test set, plus plot-data and report emission.

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "nirpulse/error.hpp"
#include "nirpulse/io.hpp"
#include "nirpulse/signal.hpp"

namespace nirpulse {

struct VideoEvaluation {
    std::string video_id;
    double pred_hr_bpm = std::numeric_limits<double>::quiet_NaN();
    double gt_hr_bpm = std::numeric_limits<double>::quiet_NaN();
    double abs_error_bpm = std::numeric_limits<double>::quiet_NaN();
    bool excluded = false; // too few peaks on either side to form an R-R interval
};

// Whole-video HR comparison. Signals must be gap-free; a side with fewer
// than two detected peaks marks the video excluded instead of failing.
inline VideoEvaluation evaluate_video(const PpgSignal& pred, const PpgSignal& gt) {
    detail::check_gap_free(pred, "evaluate_video(pred)");
    detail::check_gap_free(gt, "evaluate_video(gt)");
    VideoEvaluation ev;
    const auto pred_ex = detect_extrema(pred);
    const auto gt_ex = detect_extrema(gt);
    if (pred_ex.peaks.size() >= 2) ev.pred_hr_bpm = hr_from_rr(pred_ex, pred.sample_rate_hz);
    if (gt_ex.peaks.size() >= 2) ev.gt_hr_bpm = hr_from_rr(gt_ex, gt.sample_rate_hz);
    if (pred_ex.peaks.size() < 2 || gt_ex.peaks.size() < 2) {
        ev.excluded = true;
        return ev;
    }
    ev.abs_error_bpm = std::abs(ev.pred_hr_bpm - ev.gt_hr_bpm);
    return ev;
}

struct EvalPair {
    std::string video_id;
    PpgSignal pred;
    PpgSignal gt;
};

struct EvaluationReport {
    std::vector<VideoEvaluation> videos; // in input order
    double mae_bpm = std::numeric_limits<double>::quiet_NaN();
    std::size_t included_count = 0;
    std::size_t excluded_count = 0;
};

inline EvaluationReport evaluate_set(const std::vector<EvalPair>& pairs) {
    require(!pairs.empty(), "evaluate_set: empty test set");
    EvaluationReport report;
    double total = 0.0;
    for (const auto& pair : pairs) {
        VideoEvaluation ev = evaluate_video(pair.pred, pair.gt);
        ev.video_id = pair.video_id;
        if (ev.excluded) {
            ++report.excluded_count;
        } else {
            ++report.included_count;
            total += ev.abs_error_bpm;
        }
        report.videos.push_back(std::move(ev));
    }
    if (report.included_count == 0)
        throw invariant_error("evaluate_set: every video was excluded (no reliable peaks)");
    report.mae_bpm = total / static_cast<double>(report.included_count);
    return report;
}

// ---------------------------------------------------------------------------
// Plot data: `t_sec,pred,gt` rows over the common covered range.

struct PlotDataInfo {
    std::size_t rows = 0;
    bool truncated = false; // inputs had unequal lengths
};

inline PlotDataInfo emit_plot_data(const PpgSignal& pred, const PpgSignal& gt,
                                   const std::filesystem::path& path) {
    detail::check_gap_free(pred, "emit_plot_data(pred)");
    detail::check_gap_free(gt, "emit_plot_data(gt)");
    require(std::abs(pred.sample_rate_hz - gt.sample_rate_hz) < 1e-9,
            "emit_plot_data: sample rates differ");
    PlotDataInfo info;
    info.rows = std::min(pred.size(), gt.size());
    info.truncated = pred.size() != gt.size();
    require(info.rows > 0, "emit_plot_data: empty signals");

    std::string out = "t_sec,pred,gt\n";
    for (std::size_t i = 0; i < info.rows; ++i) {
        out += detail::fmt9(static_cast<double>(i) / pred.sample_rate_hz);
        out += ',';
        out += detail::fmt9(pred.samples[i]);
        out += ',';
        out += detail::fmt9(gt.samples[i]);
        out += '\n';
    }
    detail::write_file_bytes(path, out);
    return info;
}

// Reads plot data back into (pred, gt). The time column must be a uniform,
// strictly increasing grid starting at 0.
inline std::pair<PpgSignal, PpgSignal> read_plot_csv(const std::filesystem::path& path) {
    const auto lines = detail::read_lines(path);
    if (lines.empty() || detail::split_csv_line(lines[0]) != std::vector<std::string>{"t_sec", "pred", "gt"})
        throw format_error(path.string() + ": expected header 't_sec,pred,gt'");
    if (lines.size() < 3) throw format_error(path.string() + ": need at least 2 data rows");

    std::vector<double> t, pred, gt;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = detail::split_csv_line(lines[i]);
        if (fields.size() != 3)
            throw format_error(path.string() + ": line " + std::to_string(i + 1) + ": expected 3 fields");
        const std::string where = path.string() + ": line " + std::to_string(i + 1);
        t.push_back(detail::parse_double(fields[0], where));
        pred.push_back(detail::parse_double(fields[1], where));
        gt.push_back(detail::parse_double(fields[2], where));
        if (t.size() >= 2 && !(t[t.size() - 2] < t.back()))
            throw format_error(where + ": time must be strictly increasing");
    }
    double rate = static_cast<double>(t.size() - 1) / (t.back() - t.front());
    const double snapped = std::round(rate);
    if (snapped > 0.0 && std::abs(rate - snapped) <= 1e-6 * rate) rate = snapped;
    return {PpgSignal{std::move(pred), rate, {}}, PpgSignal{std::move(gt), rate, {}}};
}

// ---------------------------------------------------------------------------
// Report emission: machine-readable CSV plus a plain-text table.

inline void write_report_csv(const EvaluationReport& report, const std::filesystem::path& path) {
    std::string out = "video_id,pred_hr,gt_hr,abs_err,excluded\n";
    for (const auto& v : report.videos) {
        out += v.video_id;
        out += ',';
        out += detail::fmt9(v.pred_hr_bpm);
        out += ',';
        out += detail::fmt9(v.gt_hr_bpm);
        out += ',';
        out += detail::fmt9(v.abs_error_bpm);
        out += ',';
        out += v.excluded ? '1' : '0';
        out += '\n';
    }
    detail::write_file_bytes(path, out);
}

inline EvaluationReport read_report_csv(const std::filesystem::path& path) {
    const auto lines = detail::read_lines(path);
    if (lines.empty() ||
        detail::split_csv_line(lines[0]) !=
            std::vector<std::string>{"video_id", "pred_hr", "gt_hr", "abs_err", "excluded"})
        throw format_error(path.string() + ": expected header 'video_id,pred_hr,gt_hr,abs_err,excluded'");
    EvaluationReport report;
    double total = 0.0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = detail::split_csv_line(lines[i]);
        const std::string where = path.string() + ": line " + std::to_string(i + 1);
        if (fields.size() != 5) throw format_error(where + ": expected 5 fields");
        VideoEvaluation v;
        v.video_id = fields[0];
        v.pred_hr_bpm = detail::parse_double(fields[1], where);
        v.gt_hr_bpm = detail::parse_double(fields[2], where);
        v.abs_error_bpm = detail::parse_double(fields[3], where);
        const long long excluded = detail::parse_int(fields[4], where);
        if (excluded != 0 && excluded != 1) throw format_error(where + ": excluded must be 0 or 1");
        v.excluded = excluded == 1;
        if (v.excluded) {
            ++report.excluded_count;
        } else {
            ++report.included_count;
            total += v.abs_error_bpm;
        }
        report.videos.push_back(std::move(v));
    }
    if (report.included_count > 0) report.mae_bpm = total / static_cast<double>(report.included_count);
    return report;
}

inline std::string format_report_table(const EvaluationReport& report) {
    std::string out;
    std::size_t id_width = 8;
    for (const auto& v : report.videos) id_width = std::max(id_width, v.video_id.size());
    auto pad = [](std::string s, std::size_t w) {
        while (s.size() < w) s.push_back(' ');
        return s;
    };
    auto num = [](double v) {
        if (std::isnan(v)) return std::string("-");
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", v);
        return std::string(buf);
    };
    out += pad("video_id", id_width) + "  pred_hr  gt_hr    abs_err  status\n";
    for (const auto& v : report.videos) {
        out += pad(v.video_id, id_width) + "  " + pad(num(v.pred_hr_bpm), 7) + "  " +
               pad(num(v.gt_hr_bpm), 7) + "  " + pad(num(v.abs_error_bpm), 7) + "  " +
               (v.excluded ? "excluded" : "ok") + "\n";
    }
    out += "MAE (bpm): " + num(report.mae_bpm) + " over " + std::to_string(report.included_count) +
           " video(s), " + std::to_string(report.excluded_count) + " excluded\n";
    return out;
}

} // namespace nirpulse
