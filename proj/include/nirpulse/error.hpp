#pragma once

#include <stdexcept>
#include <string>

namespace nirpulse {

// Malformed or unreadable file content (bad magic, truncated data, bad CSV).
class format_error : public std::runtime_error {
public:
    explicit format_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A contract of the pipeline was violated (bad argument, broken invariant).
class invariant_error : public std::runtime_error {
public:
    explicit invariant_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A record is valid in form but unusable in substance (misaligned pair,
// too short after trimming). Callers may skip the record and continue.
class rejection_error : public std::runtime_error {
public:
    explicit rejection_error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw invariant_error(msg);
}

} // namespace nirpulse
