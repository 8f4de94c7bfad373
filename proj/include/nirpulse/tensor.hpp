#pragma once

// Minimal dense tensor: a shape vector plus flat row-major storage. All
// layer arithmetic works on raw pointers; the shape exists for validation
// and serialization.

#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "nirpulse/error.hpp"

namespace nirpulse {

inline std::size_t numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
}

template <typename T>
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)), data(numel(shape), T{}) {}

    std::size_t size() const { return data.size(); }
    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }
    void fill(T v) { std::fill(data.begin(), data.end(), v); }
};

inline std::string shape_string(const std::vector<std::size_t>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

} // namespace nirpulse
