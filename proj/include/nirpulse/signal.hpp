#pragma once

// 1-D PPG waveform type and signal operations: resampling, gap filling,
// extremum detection, peak-trough normalization and R-R heart rate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "nirpulse/error.hpp"

namespace nirpulse {

// Uniformly sampled scalar waveform. A missing sample is stored as NaN and
// flagged in gap_mask; an empty mask means "no gaps".
struct PpgSignal {
    std::vector<double> samples;
    double sample_rate_hz = 0.0;
    std::vector<std::uint8_t> gap_mask; // empty, or same length as samples

    std::size_t size() const { return samples.size(); }
    double duration_s() const {
        return samples.empty() ? 0.0 : static_cast<double>(samples.size() - 1) / sample_rate_hz;
    }
    bool has_gaps() const {
        for (auto m : gap_mask)
            if (m) return true;
        return false;
    }
};

inline PpgSignal make_signal(std::vector<double> samples, double sample_rate_hz,
                             std::vector<std::uint8_t> gap_mask = {}) {
    require(!samples.empty(), "signal must be nonempty");
    require(sample_rate_hz > 0.0, "sample rate must be positive");
    require(gap_mask.empty() || gap_mask.size() == samples.size(),
            "gap mask length must match samples");
    return PpgSignal{std::move(samples), sample_rate_hz, std::move(gap_mask)};
}

struct ExtremaIndex {
    std::vector<std::size_t> peaks;   // strictly increasing
    std::vector<std::size_t> troughs; // strictly increasing
};

namespace detail {

inline void check_gap_free(const PpgSignal& s, const char* op) {
    require(!s.samples.empty(), std::string(op) + ": empty signal");
    if (s.has_gaps()) throw invariant_error(std::string(op) + ": signal has gaps, fill them first");
    for (double v : s.samples)
        if (!std::isfinite(v))
            throw invariant_error(std::string(op) + ": signal has non-finite samples");
}

// Shared linear-resampling kernel. out[j] = input at source position j/ratio,
// out length = floor((len-1)*ratio)+1. Endpoint samples are copied exactly.
inline std::vector<double> resample_by_ratio(const std::vector<double>& in, double ratio) {
    const std::size_t len = in.size();
    const std::size_t out_len =
        static_cast<std::size_t>(std::floor(static_cast<double>(len - 1) * ratio)) + 1;
    std::vector<double> out(out_len);
    const double last = static_cast<double>(len - 1);
    for (std::size_t j = 0; j < out_len; ++j) {
        const double p = static_cast<double>(j) / ratio;
        if (p <= 0.0) {
            out[j] = in.front();
        } else if (p >= last) {
            out[j] = in.back();
        } else {
            const std::size_t i = static_cast<std::size_t>(p);
            const double frac = p - static_cast<double>(i);
            out[j] = frac == 0.0 ? in[i] : in[i] + frac * (in[i + 1] - in[i]);
        }
    }
    return out;
}

} // namespace detail

inline PpgSignal resample_linear(const PpgSignal& signal, double target_rate_hz) {
    detail::check_gap_free(signal, "resample_linear");
    require(target_rate_hz > 0.0, "resample_linear: target rate must be positive");
    if (target_rate_hz == signal.sample_rate_hz) {
        return PpgSignal{signal.samples, target_rate_hz, {}};
    }
    const double ratio = target_rate_hz / signal.sample_rate_hz;
    return PpgSignal{detail::resample_by_ratio(signal.samples, ratio), target_rate_hz, {}};
}

// Fill gaps by linear interpolation between nearest valid neighbors;
// leading/trailing gaps take the nearest valid value.
inline PpgSignal fill_dropped_samples(const PpgSignal& signal) {
    require(!signal.samples.empty(), "fill_dropped_samples: empty signal");
    const std::size_t n = signal.samples.size();
    std::vector<std::uint8_t> gap(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const bool masked = !signal.gap_mask.empty() && signal.gap_mask[i];
        gap[i] = masked || !std::isfinite(signal.samples[i]) ? 1 : 0;
    }
    std::vector<std::size_t> valid;
    for (std::size_t i = 0; i < n; ++i)
        if (!gap[i]) valid.push_back(i);
    if (valid.empty()) throw invariant_error("fill_dropped_samples: all samples missing");

    std::vector<double> out = signal.samples;
    for (std::size_t i = 0; i < valid.front(); ++i) out[i] = out[valid.front()];
    for (std::size_t i = valid.back() + 1; i < n; ++i) out[i] = out[valid.back()];
    for (std::size_t k = 0; k + 1 < valid.size(); ++k) {
        const std::size_t a = valid[k], b = valid[k + 1];
        for (std::size_t i = a + 1; i < b; ++i) {
            const double frac = static_cast<double>(i - a) / static_cast<double>(b - a);
            out[i] = out[a] + frac * (out[b] - out[a]);
        }
    }
    return PpgSignal{std::move(out), signal.sample_rate_hz, {}};
}

namespace detail {

struct ExtremumCandidate {
    std::size_t index;
    double value; // on the working (possibly negated) signal
};

// Strict local maxima with the plateau rule: the first sample of a maximal
// flat run that sits above both run-neighbors is the extremum. Endpoints are
// never extrema.
inline std::vector<ExtremumCandidate> local_maxima(const std::vector<double>& s) {
    std::vector<ExtremumCandidate> out;
    const std::size_t n = s.size();
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && s[j + 1] == s[i]) ++j; // run [i, j]
        if (i > 0 && j + 1 < n && s[i] > s[i - 1] && s[j] > s[j + 1]) {
            out.push_back({i, s[i]});
        }
        i = j + 1;
    }
    return out;
}

// Topographic prominence of a maximum: height above the higher of the two
// valley floors reached before meeting a strictly taller sample (or an end).
inline double prominence_at(const std::vector<double>& s, std::size_t idx) {
    const double h = s[idx];
    double left_base = h;
    for (std::size_t i = idx; i-- > 0;) {
        if (s[i] > h) break;
        left_base = std::min(left_base, s[i]);
    }
    double right_base = h;
    for (std::size_t i = idx + 1; i < s.size(); ++i) {
        if (s[i] > h) break;
        right_base = std::min(right_base, s[i]);
    }
    return h - std::max(left_base, right_base);
}

// Greedy retention by descending amplitude subject to a minimum index
// spacing. Ties broken toward the earlier index for determinism.
inline std::vector<std::size_t> greedy_select(std::vector<ExtremumCandidate> cands,
                                              std::size_t min_distance) {
    std::stable_sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
        if (a.value != b.value) return a.value > b.value;
        return a.index < b.index;
    });
    std::vector<std::size_t> kept;
    for (const auto& c : cands) {
        bool ok = true;
        for (std::size_t k : kept) {
            const std::size_t d = k > c.index ? k - c.index : c.index - k;
            if (d < min_distance) {
                ok = false;
                break;
            }
        }
        if (ok) kept.push_back(c.index);
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

} // namespace detail

// Enforce strict peak/trough alternation: within any run of same-kind
// extrema, keep the most extreme sample (earliest on ties).
inline ExtremaIndex alternation_fix(const std::vector<double>& samples,
                                    const std::vector<std::size_t>& peaks,
                                    const std::vector<std::size_t>& troughs) {
    struct Event {
        std::size_t index;
        bool is_peak;
    };
    std::vector<Event> events;
    events.reserve(peaks.size() + troughs.size());
    for (std::size_t p : peaks) events.push_back({p, true});
    for (std::size_t t : troughs) events.push_back({t, false});
    std::sort(events.begin(), events.end(),
              [](const Event& a, const Event& b) { return a.index < b.index; });

    ExtremaIndex out;
    std::size_t i = 0;
    while (i < events.size()) {
        std::size_t j = i;
        std::size_t best = events[i].index;
        while (j + 1 < events.size() && events[j + 1].is_peak == events[i].is_peak) {
            ++j;
            const std::size_t cand = events[j].index;
            if (events[i].is_peak ? samples[cand] > samples[best] : samples[cand] < samples[best])
                best = cand;
        }
        (events[i].is_peak ? out.peaks : out.troughs).push_back(best);
        i = j + 1;
    }
    return out;
}

inline ExtremaIndex detect_extrema(const PpgSignal& signal, std::size_t min_distance_samples,
                                   double min_prominence) {
    detail::check_gap_free(signal, "detect_extrema");
    require(min_distance_samples >= 1, "detect_extrema: min distance must be >= 1");
    require(min_prominence >= 0.0, "detect_extrema: prominence must be non-negative");

    const auto& s = signal.samples;
    std::vector<double> neg(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) neg[i] = -s[i];

    auto pick = [&](const std::vector<double>& work) {
        auto cands = detail::local_maxima(work);
        if (min_prominence > 0.0) {
            std::erase_if(cands, [&](const detail::ExtremumCandidate& c) {
                return detail::prominence_at(work, c.index) < min_prominence;
            });
        }
        return detail::greedy_select(std::move(cands), min_distance_samples);
    };

    return alternation_fix(s, pick(s), pick(neg));
}

// Detector defaults: spacing bounds HR at 220 bpm, prominence at a tenth of
// the segment range.
struct DetectorParams {
    std::size_t min_distance_samples;
    double min_prominence;
};

inline DetectorParams default_detector_params(const PpgSignal& signal) {
    detail::check_gap_free(signal, "default_detector_params");
    const auto [lo, hi] = std::minmax_element(signal.samples.begin(), signal.samples.end());
    const double dist = std::floor(signal.sample_rate_hz * 60.0 / 220.0);
    return DetectorParams{static_cast<std::size_t>(std::max(1.0, dist)), 0.1 * (*hi - *lo)};
}

inline ExtremaIndex detect_extrema(const PpgSignal& signal) {
    const auto p = default_detector_params(signal);
    return detect_extrema(signal, p.min_distance_samples, p.min_prominence);
}

// Map the waveform into [0,1] so that every peak reads 1 and every trough 0.
// The upper/lower envelopes interpolate the peak/trough samples linearly and
// extend by a constant outside the outermost extrema.
inline PpgSignal normalize_peak_trough(const PpgSignal& signal, const ExtremaIndex& extrema) {
    detail::check_gap_free(signal, "normalize_peak_trough");
    require(!extrema.peaks.empty(), "normalize_peak_trough: no peaks");
    require(!extrema.troughs.empty(), "normalize_peak_trough: no troughs");

    const auto& s = signal.samples;
    auto envelope = [&](const std::vector<std::size_t>& knots) {
        std::vector<double> env(s.size());
        std::size_t k = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i <= knots.front()) {
                env[i] = s[knots.front()];
            } else if (i >= knots.back()) {
                env[i] = s[knots.back()];
            } else {
                while (knots[k + 1] < i) ++k;
                const std::size_t a = knots[k], b = knots[k + 1];
                const double frac = static_cast<double>(i - a) / static_cast<double>(b - a);
                env[i] = s[a] + frac * (s[b] - s[a]);
            }
        }
        return env;
    };

    const std::vector<double> upper = envelope(extrema.peaks);
    const std::vector<double> lower = envelope(extrema.troughs);
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!(upper[i] > lower[i]))
            throw invariant_error("normalize_peak_trough: degenerate envelope at index " +
                                  std::to_string(i));
        out[i] = std::clamp((s[i] - lower[i]) / (upper[i] - lower[i]), 0.0, 1.0);
    }
    return PpgSignal{std::move(out), signal.sample_rate_hz, {}};
}

// Heart rate from the mean peak-to-peak interval.
inline double hr_from_rr(const ExtremaIndex& extrema, double sample_rate_hz) {
    require(sample_rate_hz > 0.0, "hr_from_rr: sample rate must be positive");
    require(extrema.peaks.size() >= 2, "hr_from_rr: need at least 2 peaks");
    // 60 / mean interval, arranged as one division so equally spaced peaks
    // with spacing d give exactly 60 * rate / d
    const double span_samples =
        static_cast<double>(extrema.peaks.back() - extrema.peaks.front());
    return 60.0 * sample_rate_hz * static_cast<double>(extrema.peaks.size() - 1) / span_samples;
}

inline double mae(const std::vector<double>& a, const std::vector<double>& b) {
    require(!a.empty() && a.size() == b.size(), "mae: sequences must be nonempty and equal length");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return acc / static_cast<double>(a.size());
}

inline double mse(const std::vector<double>& a, const std::vector<double>& b) {
    require(!a.empty() && a.size() == b.size(), "mse: sequences must be nonempty and equal length");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

} // namespace nirpulse
