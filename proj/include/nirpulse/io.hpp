#pragma once

// File formats: signal CSV (`t_sec,value`), NIRV1 raw video container and
// the bounding-box sidecar CSV. Binary formats are little-endian regardless
// of host order.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <limits>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nirpulse/error.hpp"
#include "nirpulse/frames.hpp"
#include "nirpulse/signal.hpp"

namespace nirpulse {

namespace detail {

inline std::string fmt9(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

class ByteReader {
public:
    ByteReader(std::string data, std::string origin)
        : data_(std::move(data)), origin_(std::move(origin)) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }

    std::uint32_t u32() {
        const char* p = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
        return v;
    }

    std::uint64_t u64() {
        const char* p = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
        return v;
    }

    float f32() {
        const std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }

    std::string_view bytes(std::size_t n) { return {take(n), n}; }
    std::size_t remaining() const { return data_.size() - pos_; }
    bool at_end() const { return pos_ == data_.size(); }
    const std::string& origin() const { return origin_; }

private:
    const char* take(std::size_t n) {
        if (pos_ + n > data_.size())
            throw format_error(origin_ + ": truncated file");
        const char* p = data_.data() + pos_;
        pos_ += n;
        return p;
    }

    std::string data_;
    std::string origin_;
    std::size_t pos_ = 0;
};

inline std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error(path.string() + ": cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (!in.good() && !in.eof()) throw format_error(path.string() + ": read failure");
    return std::move(ss).str();
}

inline void write_file_bytes(const std::filesystem::path& path, const std::string& bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw format_error(path.string() + ": cannot open for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out.good()) throw format_error(path.string() + ": write failure");
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_double(const std::string& s, const std::string& origin) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw format_error(origin + ": bad numeric field '" + s + "'");
    return v;
}

inline long long parse_int(const std::string& s, const std::string& origin) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const long long v = std::strtoll(begin, &end, 10);
    if (end == begin || *end != '\0')
        throw format_error(origin + ": bad integer field '" + s + "'");
    return v;
}

// Lines of a text file, excluding a trailing empty line.
inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
    const std::string bytes = read_file_bytes(path);
    std::vector<std::string> lines;
    std::string cur;
    for (char c : bytes) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    return lines;
}

} // namespace detail

// ---- signal CSV ------------------------------------------------------------

inline void write_signal_csv(const std::filesystem::path& path, const PpgSignal& signal) {
    std::string out = "t_sec,value\n";
    for (std::size_t i = 0; i < signal.samples.size(); ++i) {
        const bool gap = !signal.gap_mask.empty() && signal.gap_mask[i];
        const double t = static_cast<double>(i) / signal.sample_rate_hz;
        out += detail::fmt9(t);
        out += ',';
        out += gap ? "nan" : detail::fmt9(signal.samples[i]);
        out += '\n';
    }
    detail::write_file_bytes(path, out);
}

// Reads a signal CSV back onto a uniform grid. Rows may be missing (dropped
// samples); those grid slots come back as NaN gaps. A rate within 1e-6 of an
// integer is snapped so that text round trips of integer-rate signals stay
// exact.
inline PpgSignal read_signal_csv(const std::filesystem::path& path) {
    const std::string origin = path.string();
    const auto lines = detail::read_lines(path);
    if (lines.empty() || lines[0] != "t_sec,value" )
        throw format_error(origin + ": expected header 't_sec,value'");

    std::vector<double> times, values;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto fields = detail::split_csv_line(lines[i]);
        if (fields.size() != 2)
            throw format_error(origin + ": expected 2 fields on line " + std::to_string(i + 1));
        const double t = detail::parse_double(fields[0], origin);
        if (!std::isfinite(t)) throw format_error(origin + ": non-finite timestamp");
        if (!times.empty() && t <= times.back())
            throw format_error(origin + ": timestamps must be strictly increasing");
        times.push_back(t);
        values.push_back(detail::parse_double(fields[1], origin));
    }
    if (times.size() < 2) throw format_error(origin + ": need at least 2 samples");

    std::vector<double> diffs(times.size() - 1);
    for (std::size_t i = 0; i + 1 < times.size(); ++i) diffs[i] = times[i + 1] - times[i];
    std::nth_element(diffs.begin(), diffs.begin() + diffs.size() / 2, diffs.end());
    const double base_dt = diffs[diffs.size() / 2];
    if (!(base_dt > 0)) throw format_error(origin + ": degenerate sample spacing");

    std::vector<long long> grid(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        grid[i] = std::llround((times[i] - times[0]) / base_dt);
        if (i > 0 && grid[i] <= grid[i - 1])
            throw format_error(origin + ": irregular timestamps (not on a uniform grid)");
    }

    double rate = static_cast<double>(grid.back()) / (times.back() - times.front());
    const double snapped = std::round(rate);
    if (snapped > 0 && std::abs(rate - snapped) <= 1e-6 * rate) rate = snapped;

    const std::size_t n = static_cast<std::size_t>(grid.back()) + 1;
    std::vector<double> samples(n, std::numeric_limits<double>::quiet_NaN());
    std::vector<std::uint8_t> mask(n, 1);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const auto k = static_cast<std::size_t>(grid[i]);
        samples[k] = values[i];
        mask[k] = std::isnan(values[i]) ? 1 : 0;
    }
    bool any_gap = false;
    for (auto m : mask) any_gap = any_gap || m != 0;
    return make_signal(std::move(samples), rate, any_gap ? std::move(mask) : std::vector<std::uint8_t>{});
}

// ---- NIRV1 video -----------------------------------------------------------

inline void write_video_nirv(const std::filesystem::path& path, const FrameSequence& seq) {
    std::string out;
    out.reserve(17 + seq.pixels.size() * 4);
    out += "NIRV";
    out.push_back(0x01);
    detail::put_u32(out, static_cast<std::uint32_t>(seq.frame_count));
    detail::put_u32(out, static_cast<std::uint32_t>(seq.height));
    detail::put_u32(out, static_cast<std::uint32_t>(seq.width));
    detail::put_f32(out, seq.fps);
    for (float v : seq.pixels) detail::put_f32(out, v);
    detail::write_file_bytes(path, out);
}

inline FrameSequence read_video_nirv(const std::filesystem::path& path) {
    detail::ByteReader r(detail::read_file_bytes(path), path.string());
    if (r.remaining() < 5 || r.bytes(4) != "NIRV")
        throw format_error(path.string() + ": not a NIRV file (bad magic)");
    const auto version = r.u8();
    if (version != 0x01)
        throw format_error(path.string() + ": unsupported NIRV version " + std::to_string(version));
    const std::uint32_t t = r.u32(), h = r.u32(), w = r.u32();
    const float fps = r.f32();
    if (t == 0 || h == 0 || w == 0 || !(fps > 0.0f))
        throw format_error(path.string() + ": invalid NIRV header");
    const std::uint64_t count = static_cast<std::uint64_t>(t) * h * w;
    if (r.remaining() != count * 4)
        throw format_error(path.string() + ": pixel payload size mismatch");
    std::vector<float> pixels(count);
    for (auto& v : pixels) {
        v = r.f32();
        if (!(v >= 0.0f && v <= 1.0f))
            throw format_error(path.string() + ": pixel out of [0,1]");
    }
    return FrameSequence{t, h, w, fps, std::move(pixels)};
}

// ---- bounding-box sidecar ---------------------------------------------------

// frame == -1 means the box applies to every frame.
struct BoxEntry {
    long long frame = -1;
    BoundingBox box;
};

inline void write_bbox_csv(const std::filesystem::path& path, const std::vector<BoxEntry>& entries) {
    std::string out = "frame,x,y,w,h\n";
    for (const auto& e : entries) {
        out += std::to_string(e.frame) + ',' + std::to_string(e.box.x) + ',' +
               std::to_string(e.box.y) + ',' + std::to_string(e.box.w) + ',' +
               std::to_string(e.box.h) + '\n';
    }
    detail::write_file_bytes(path, out);
}

inline std::vector<BoxEntry> read_bbox_csv(const std::filesystem::path& path) {
    const std::string origin = path.string();
    const auto lines = detail::read_lines(path);
    if (lines.empty() || lines[0] != "frame,x,y,w,h")
        throw format_error(origin + ": expected header 'frame,x,y,w,h'");
    std::vector<BoxEntry> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto f = detail::split_csv_line(lines[i]);
        if (f.size() != 5)
            throw format_error(origin + ": expected 5 fields on line " + std::to_string(i + 1));
        BoxEntry e;
        e.frame = detail::parse_int(f[0], origin);
        e.box.x = static_cast<int>(detail::parse_int(f[1], origin));
        e.box.y = static_cast<int>(detail::parse_int(f[2], origin));
        e.box.w = static_cast<int>(detail::parse_int(f[3], origin));
        e.box.h = static_cast<int>(detail::parse_int(f[4], origin));
        if (e.box.w <= 0 || e.box.h <= 0)
            throw format_error(origin + ": bounding box must have positive size");
        out.push_back(e);
    }
    if (out.empty()) throw format_error(origin + ": no bounding boxes");
    return out;
}

// Single box covering every frame, or the per-frame box for `frame`.
inline BoundingBox box_for_frame(const std::vector<BoxEntry>& entries, std::size_t frame) {
    for (const auto& e : entries)
        if (e.frame == static_cast<long long>(frame)) return e.box;
    for (const auto& e : entries)
        if (e.frame == -1) return e.box;
    throw format_error("no bounding box for frame " + std::to_string(frame));
}

} // namespace nirpulse
