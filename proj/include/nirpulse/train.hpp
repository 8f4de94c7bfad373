#pragma once

// Window construction and Adam training for the attention network.
//
// A training window covers n+1 consecutive frames: the n normalized frame
// differences form the motion input, the mean frame is the appearance
// input, and the n ground-truth samples aligned with the window start are
// the regression target.
//
// Training is deterministic: batches come from a seeded shuffle, gradients
// are accumulated per window and merged in window order, so results are
// bitwise identical for any --threads value.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "nirpulse/can.hpp"
#include "nirpulse/error.hpp"
#include "nirpulse/frames.hpp"
#include "nirpulse/rng.hpp"
#include "nirpulse/signal.hpp"

namespace nirpulse {

template <typename T>
struct Window {
    std::vector<T> appearance; // [h * w], mean of the n+1 frames
    std::vector<T> motion;     // [n, h, w], normalized frame differences
    std::vector<T> target;     // [n], normalized ground truth
};

// Slices a cropped video and its normalized ground truth into windows at
// the given stride. The signal must be gap-free, sampled at the frame rate,
// and at least as long as the video.
template <typename T>
std::vector<Window<T>> build_windows(const FrameSequence& video, const PpgSignal& gt,
                                     const CanConfig& cfg, std::size_t stride,
                                     double epsilon = 1e-6) {
    validate_config(cfg);
    require(stride >= 1, "build_windows: stride must be >= 1");
    require(video.height == cfg.height && video.width == cfg.width,
            "build_windows: video resolution does not match the model config");
    detail::check_gap_free(gt, "build_windows");
    require(std::abs(static_cast<double>(video.fps) - gt.sample_rate_hz) < 1e-6,
            "build_windows: video fps and signal rate must match");
    require(gt.size() >= video.frame_count,
            "build_windows: signal is shorter than the video");

    const std::size_t n = cfg.n, hw = cfg.height * cfg.width;
    std::vector<Window<T>> windows;
    if (video.frame_count < n + 1) return windows;

    const MotionMaps maps = motion_representation(video, epsilon);
    for (std::size_t s = 0; s + n + 1 <= video.frame_count; s += stride) {
        Window<T> w;
        w.appearance.assign(hw, T(0));
        for (std::size_t k = 0; k <= n; ++k) {
            const float* f = video.frame(s + k);
            for (std::size_t p = 0; p < hw; ++p) w.appearance[p] += static_cast<T>(f[p]);
        }
        const T inv = T(1) / static_cast<T>(n + 1);
        for (auto& v : w.appearance) v *= inv;

        w.motion.resize(n * hw);
        for (std::size_t k = 0; k < n; ++k) {
            const float* m = maps.map(s + k);
            for (std::size_t p = 0; p < hw; ++p) w.motion[k * hw + p] = static_cast<T>(m[p]);
        }

        w.target.resize(n);
        for (std::size_t k = 0; k < n; ++k) w.target[k] = static_cast<T>(gt.samples[s + k]);
        windows.push_back(std::move(w));
    }
    return windows;
}

struct TrainConfig {
    std::size_t steps = 2000;
    std::size_t batch_size = 8;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

struct TrainResult {
    std::vector<double> loss_trace; // batch MSE per step
};

namespace detail {

// Forward + MSE backward for one window; accumulates into `grads` and
// returns the window's MSE. `out_scale` folds the batch average into the
// output gradient.
template <typename T>
double window_loss_and_grad(const CanModel<T>& model, const Window<T>& w, T out_scale,
                            CanCache<T>& cache, CanModel<T>& grads) {
    const std::size_t n = model.config.n;
    can_forward(model, w.appearance.data(), w.motion.data(), cache);
    double loss = 0.0;
    std::vector<T> grad_out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const T d = cache.out[i] - w.target[i];
        loss += static_cast<double>(d) * static_cast<double>(d);
        grad_out[i] = T(2) * d / static_cast<T>(n) * out_scale;
    }
    can_backward(model, cache, w.appearance.data(), w.motion.data(), grad_out.data(), grads);
    return loss / static_cast<double>(n);
}

} // namespace detail

// Runs cfg.steps Adam updates on the model in place. Batches are drawn from
// a seeded shuffle of the window list, reshuffled whenever it is exhausted.
template <typename T>
TrainResult train(CanModel<T>& model, const std::vector<Window<T>>& windows,
                  const TrainConfig& cfg) {
    require(!windows.empty(), "train: no windows");
    require(cfg.batch_size >= 1, "train: batch size must be >= 1");
    require(cfg.threads >= 1, "train: threads must be >= 1");
    require(cfg.lr >= 0.0, "train: learning rate must be non-negative");
    const std::size_t n = model.config.n, hw = model.config.height * model.config.width;
    for (const auto& w : windows) {
        require(w.appearance.size() == hw && w.motion.size() == n * hw && w.target.size() == n,
                "train: window does not match the model config");
    }

    const std::size_t batch = std::min(cfg.batch_size, windows.size());
    Rng shuffle_rng(derive_seed(cfg.seed, "train.shuffle"));
    std::vector<std::size_t> order(windows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::size_t cursor = order.size(); // forces an initial shuffle

    CanModel<T> adam_m = make_model<T>(model.config);
    CanModel<T> adam_v = make_model<T>(model.config);

    // one gradient accumulator per batch slot so the merge order (and hence
    // the result) does not depend on the thread count
    std::vector<CanModel<T>> slot_grads;
    slot_grads.reserve(batch);
    for (std::size_t b = 0; b < batch; ++b) slot_grads.push_back(make_model<T>(model.config));
    std::vector<CanCache<T>> caches(std::max<std::size_t>(cfg.threads, 1));
    std::vector<double> slot_loss(batch, 0.0);

    TrainResult result;
    result.loss_trace.reserve(cfg.steps);
    CanModel<T> total = make_model<T>(model.config);
    const T out_scale = T(1) / static_cast<T>(batch);

    const auto p_model = parameter_list(model);
    const auto p_m = parameter_list(adam_m);
    const auto p_v = parameter_list(adam_v);
    const auto p_total = parameter_list(total);
    std::vector<std::vector<Tensor<T>*>> p_slots;
    p_slots.reserve(batch);
    for (auto& g : slot_grads) p_slots.push_back(parameter_list(g));

    for (std::size_t step = 1; step <= cfg.steps; ++step) {
        // assemble the batch indices
        std::vector<std::size_t> picks(batch);
        for (std::size_t b = 0; b < batch; ++b) {
            if (cursor == order.size()) {
                for (std::size_t i = order.size(); i > 1; --i)
                    std::swap(order[i - 1], order[shuffle_rng.next_u64() % i]);
                cursor = 0;
            }
            picks[b] = order[cursor++];
        }

        // per-window gradients, parallel over batch slots
        auto run_slot = [&](std::size_t b, CanCache<T>& cache) {
            auto& g = slot_grads[b];
            g.for_each_parameter([](const char*, Tensor<T>& t) { t.fill(T(0)); });
            slot_loss[b] =
                detail::window_loss_and_grad(model, windows[picks[b]], out_scale, cache, g);
        };
        if (cfg.threads <= 1 || batch == 1) {
            for (std::size_t b = 0; b < batch; ++b) run_slot(b, caches[0]);
        } else {
            const std::size_t workers = std::min(cfg.threads, batch);
            std::vector<std::thread> pool;
            pool.reserve(workers);
            for (std::size_t t = 0; t < workers; ++t) {
                pool.emplace_back([&, t]() {
                    for (std::size_t b = t; b < batch; b += workers) run_slot(b, caches[t]);
                });
            }
            for (auto& th : pool) th.join();
        }

        // merge in slot order, then one Adam step
        for (std::size_t ti = 0; ti < p_model.size(); ++ti) {
            auto& acc = p_total[ti]->data;
            std::fill(acc.begin(), acc.end(), T(0));
            for (std::size_t b = 0; b < batch; ++b) {
                const auto& src = p_slots[b][ti]->data;
                for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += src[i];
            }
        }
        double batch_loss = 0.0;
        for (std::size_t b = 0; b < batch; ++b) batch_loss += slot_loss[b];
        result.loss_trace.push_back(batch_loss / static_cast<double>(batch));

        const T lr = static_cast<T>(cfg.lr);
        const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
        const T eps = static_cast<T>(cfg.adam_eps);
        const T bc1 = T(1) - static_cast<T>(std::pow(cfg.beta1, static_cast<double>(step)));
        const T bc2 = T(1) - static_cast<T>(std::pow(cfg.beta2, static_cast<double>(step)));
        for (std::size_t ti = 0; ti < p_model.size(); ++ti) {
            auto& p = p_model[ti]->data;
            auto& m = p_m[ti]->data;
            auto& v = p_v[ti]->data;
            const auto& g = p_total[ti]->data;
            for (std::size_t i = 0; i < p.size(); ++i) {
                m[i] = b1 * m[i] + (T(1) - b1) * g[i];
                v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
                const T mhat = m[i] / bc1;
                const T vhat = v[i] / bc2;
                p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
            }
        }
    }
    return result;
}

} // namespace nirpulse
