#pragma once

// Convolutional attention network for window-level pulse regression.
//
// Two branches over a single window: an appearance branch (mean frame) that
// produces soft attention masks at two scales, and a motion branch (stacked
// normalized difference maps) that is gated by those masks, pooled twice,
// and regressed through two dense layers onto N output samples. The final
// activation is the snake function x + sin^2(a x)/a, which biases the head
// toward periodic outputs while staying monotonic.
//
// Everything is hand-rolled and deterministic: fixed accumulation order,
// no parallelism inside a single forward/backward.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "nirpulse/error.hpp"
#include "nirpulse/io.hpp"
#include "nirpulse/rng.hpp"
#include "nirpulse/tensor.hpp"

namespace nirpulse {

// ---------------------------------------------------------------------------
// Activations

// snake(x) = x + sin^2(a x) / a, strictly increasing for every a > 0.
template <typename T>
inline T snake(T x, T a) {
    const T s = std::sin(a * x);
    return x + s * s / a;
}

// d/dx snake(x) = 1 + sin(2 a x)  (>= 0, zero only at isolated points).
template <typename T>
inline T snake_deriv(T x, T a) {
    return T(1) + std::sin(T(2) * a * x);
}

template <typename T>
inline T sigmoid(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

// ---------------------------------------------------------------------------
// Model definition

struct CanConfig {
    std::size_t n = 64;      // output samples per window (= motion channels)
    std::size_t height = 16; // input height, divisible by 4
    std::size_t width = 16;  // input width, divisible by 4
    std::size_t c1 = 4;      // channels in stage 1
    std::size_t c2 = 8;      // channels in stage 2
    std::size_t hidden = 32; // dense layer width
    double snake_a = 1.0;
    std::uint64_t seed = 0;
};

inline void validate_config(const CanConfig& cfg) {
    require(cfg.n >= 1, "can config: n must be >= 1");
    require(cfg.height >= 4 && cfg.height % 4 == 0, "can config: height must be a positive multiple of 4");
    require(cfg.width >= 4 && cfg.width % 4 == 0, "can config: width must be a positive multiple of 4");
    require(cfg.c1 >= 1 && cfg.c2 >= 1 && cfg.hidden >= 1, "can config: channel and hidden sizes must be >= 1");
    require(cfg.snake_a > 0.0, "can config: snake_a must be positive");
}

template <typename T>
struct ConvParam {
    Tensor<T> weight; // [out, in, kh, kw]
    Tensor<T> bias;   // [out]
};

template <typename T>
struct DenseParam {
    Tensor<T> weight; // [out, in]
    Tensor<T> bias;   // [out]
};

template <typename T>
struct CanModel {
    CanConfig config;
    ConvParam<T> a1, a2; // appearance stem, 3x3
    ConvParam<T> g1, g2; // attention projections, 1x1 -> 1 channel
    ConvParam<T> m1, m2; // motion stage 1, 3x3
    ConvParam<T> m3, m4; // motion stage 2, 3x3
    DenseParam<T> d1, d2;

    // Canonical parameter order; serialization, init and Adam all follow it.
    template <typename F>
    void for_each_parameter(F&& f) {
        f("a1.weight", a1.weight); f("a1.bias", a1.bias);
        f("a2.weight", a2.weight); f("a2.bias", a2.bias);
        f("g1.weight", g1.weight); f("g1.bias", g1.bias);
        f("g2.weight", g2.weight); f("g2.bias", g2.bias);
        f("m1.weight", m1.weight); f("m1.bias", m1.bias);
        f("m2.weight", m2.weight); f("m2.bias", m2.bias);
        f("m3.weight", m3.weight); f("m3.bias", m3.bias);
        f("m4.weight", m4.weight); f("m4.bias", m4.bias);
        f("d1.weight", d1.weight); f("d1.bias", d1.bias);
        f("d2.weight", d2.weight); f("d2.bias", d2.bias);
    }
    template <typename F>
    void for_each_parameter(F&& f) const {
        const_cast<CanModel*>(this)->for_each_parameter(
            [&](const char* name, Tensor<T>& t) { f(name, static_cast<const Tensor<T>&>(t)); });
    }

    std::size_t parameter_count() const {
        std::size_t total = 0;
        for_each_parameter([&](const char*, const Tensor<T>& t) { total += t.size(); });
        return total;
    }
};

inline std::size_t can_flat_size(const CanConfig& cfg) {
    return cfg.c2 * (cfg.height / 4) * (cfg.width / 4);
}

// Pointers to every parameter tensor in canonical order.
template <typename T>
std::vector<Tensor<T>*> parameter_list(CanModel<T>& m) {
    std::vector<Tensor<T>*> out;
    m.for_each_parameter([&](const char*, Tensor<T>& t) { out.push_back(&t); });
    return out;
}

template <typename T>
std::vector<const Tensor<T>*> parameter_list(const CanModel<T>& m) {
    std::vector<const Tensor<T>*> out;
    m.for_each_parameter([&](const char*, const Tensor<T>& t) { out.push_back(&t); });
    return out;
}

// Allocates all parameters at their configured shapes, zero-filled.
template <typename T>
CanModel<T> make_model(const CanConfig& cfg) {
    validate_config(cfg);
    CanModel<T> m;
    m.config = cfg;
    auto conv = [](std::size_t oc, std::size_t ic, std::size_t k) {
        return ConvParam<T>{Tensor<T>({oc, ic, k, k}), Tensor<T>({oc})};
    };
    m.a1 = conv(cfg.c1, 1, 3);
    m.a2 = conv(cfg.c1, cfg.c1, 3);
    m.g1 = conv(1, cfg.c1, 1);
    m.g2 = conv(1, cfg.c1, 1);
    m.m1 = conv(cfg.c1, cfg.n, 3);
    m.m2 = conv(cfg.c1, cfg.c1, 3);
    m.m3 = conv(cfg.c2, cfg.c1, 3);
    m.m4 = conv(cfg.c2, cfg.c2, 3);
    m.d1 = DenseParam<T>{Tensor<T>({cfg.hidden, can_flat_size(cfg)}), Tensor<T>({cfg.hidden})};
    m.d2 = DenseParam<T>{Tensor<T>({cfg.n, cfg.hidden}), Tensor<T>({cfg.n})};
    return m;
}

// Uniform(-s, s) with s = sqrt(1 / fan_in), drawn in canonical parameter
// order from a single stream so the same seed gives the same model bitwise.
template <typename T>
CanModel<T> init_model(const CanConfig& cfg) {
    CanModel<T> m = make_model<T>(cfg);
    Rng rng(cfg.seed);
    // fan_in: conv [out, in, kh, kw] -> in*kh*kw; dense [out, in] -> in.
    // Bias tensors are rank 1 and always follow their weight tensor, so
    // they reuse the owning layer's fan_in.
    std::size_t layer_fan_in = 1;
    m.for_each_parameter([&](const char*, Tensor<T>& t) {
        if (t.shape.size() >= 2) {
            layer_fan_in = 1;
            for (std::size_t d = 1; d < t.shape.size(); ++d) layer_fan_in *= t.shape[d];
        }
        const double s = std::sqrt(1.0 / static_cast<double>(layer_fan_in));
        for (auto& v : t.data) v = static_cast<T>(rng.uniform(-s, s));
    });
    return m;
}

// ---------------------------------------------------------------------------
// Layer primitives (detail). All loops have a fixed order; accumulation is
// sequential in index order.

namespace detail {

// 3x3 convolution, zero-padded "same". weight [oc, ic, 3, 3].
template <typename T>
void conv3x3_forward(const T* w, const T* b, const T* x, T* y,
                     std::size_t ic, std::size_t oc, std::size_t h, std::size_t wd) {
    const std::size_t hw = h * wd;
    for (std::size_t o = 0; o < oc; ++o) {
        T* yp = y + o * hw;
        std::fill(yp, yp + hw, b[o]);
        for (std::size_t i = 0; i < ic; ++i) {
            const T* xp = x + i * hw;
            const T* wp = w + (o * ic + i) * 9;
            for (int ky = -1; ky <= 1; ++ky) {
                const std::size_t r0 = ky < 0 ? std::size_t(-ky) : 0;
                const std::size_t r1 = ky > 0 ? h - std::size_t(ky) : h;
                for (int kx = -1; kx <= 1; ++kx) {
                    const T wv = wp[std::size_t(ky + 1) * 3 + std::size_t(kx + 1)];
                    const std::size_t c0 = kx < 0 ? std::size_t(-kx) : 0;
                    const std::size_t c1 = kx > 0 ? wd - std::size_t(kx) : wd;
                    for (std::size_t r = r0; r < r1; ++r) {
                        T* yrow = yp + r * wd;
                        const T* xrow = xp + (r + std::size_t(ky + 1) - 1) * wd + kx;
                        for (std::size_t c = c0; c < c1; ++c) yrow[c] += wv * xrow[c];
                    }
                }
            }
        }
    }
}

// Gradients for conv3x3_forward. dx may be null when the input gradient is
// not needed (network inputs). dw/db are accumulated, dx is overwritten.
template <typename T>
void conv3x3_backward(const T* w, const T* x, const T* dy,
                      T* dx, T* dw, T* db,
                      std::size_t ic, std::size_t oc, std::size_t h, std::size_t wd) {
    const std::size_t hw = h * wd;
    if (dx) std::fill(dx, dx + ic * hw, T(0));
    for (std::size_t o = 0; o < oc; ++o) {
        const T* dyp = dy + o * hw;
        T bsum = T(0);
        for (std::size_t p = 0; p < hw; ++p) bsum += dyp[p];
        db[o] += bsum;
        for (std::size_t i = 0; i < ic; ++i) {
            const T* xp = x + i * hw;
            T* dxp = dx ? dx + i * hw : nullptr;
            const T* wp = w + (o * ic + i) * 9;
            T* dwp = dw + (o * ic + i) * 9;
            for (int ky = -1; ky <= 1; ++ky) {
                const std::size_t r0 = ky < 0 ? std::size_t(-ky) : 0;
                const std::size_t r1 = ky > 0 ? h - std::size_t(ky) : h;
                for (int kx = -1; kx <= 1; ++kx) {
                    const std::size_t c0 = kx < 0 ? std::size_t(-kx) : 0;
                    const std::size_t c1 = kx > 0 ? wd - std::size_t(kx) : wd;
                    const std::size_t widx = std::size_t(ky + 1) * 3 + std::size_t(kx + 1);
                    const T wv = wp[widx];
                    T wsum = T(0);
                    for (std::size_t r = r0; r < r1; ++r) {
                        const T* dyrow = dyp + r * wd;
                        const T* xrow = xp + (r + std::size_t(ky + 1) - 1) * wd + kx;
                        T* dxrow = dxp ? dxp + (r + std::size_t(ky + 1) - 1) * wd + kx : nullptr;
                        for (std::size_t c = c0; c < c1; ++c) {
                            wsum += dyrow[c] * xrow[c];
                            if (dxrow) dxrow[c] += wv * dyrow[c];
                        }
                    }
                    dwp[widx] += wsum;
                }
            }
        }
    }
}

// 1x1 convolution. weight [oc, ic].
template <typename T>
void conv1x1_forward(const T* w, const T* b, const T* x, T* y,
                     std::size_t ic, std::size_t oc, std::size_t hw) {
    for (std::size_t o = 0; o < oc; ++o) {
        T* yp = y + o * hw;
        std::fill(yp, yp + hw, b[o]);
        for (std::size_t i = 0; i < ic; ++i) {
            const T wv = w[o * ic + i];
            const T* xp = x + i * hw;
            for (std::size_t p = 0; p < hw; ++p) yp[p] += wv * xp[p];
        }
    }
}

template <typename T>
void conv1x1_backward(const T* w, const T* x, const T* dy,
                      T* dx, T* dw, T* db,
                      std::size_t ic, std::size_t oc, std::size_t hw) {
    if (dx) std::fill(dx, dx + ic * hw, T(0));
    for (std::size_t o = 0; o < oc; ++o) {
        const T* dyp = dy + o * hw;
        T bsum = T(0);
        for (std::size_t p = 0; p < hw; ++p) bsum += dyp[p];
        db[o] += bsum;
        for (std::size_t i = 0; i < ic; ++i) {
            const T wv = w[o * ic + i];
            const T* xp = x + i * hw;
            T wsum = T(0);
            for (std::size_t p = 0; p < hw; ++p) {
                wsum += dyp[p] * xp[p];
                if (dx) dx[i * hw + p] += wv * dyp[p];
            }
            dw[o * ic + i] += wsum;
        }
    }
}

template <typename T>
void tanh_forward(const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

// dx = dy * (1 - y^2), using the cached activation y.
template <typename T>
void tanh_backward(const T* y, const T* dy, T* dx, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dx[i] = dy[i] * (T(1) - y[i] * y[i]);
}

// 2x2 mean pooling, stride 2. h and wd must be even.
template <typename T>
void meanpool2_forward(const T* x, T* y, std::size_t ch, std::size_t h, std::size_t wd) {
    const std::size_t oh = h / 2, ow = wd / 2;
    for (std::size_t c = 0; c < ch; ++c) {
        const T* xp = x + c * h * wd;
        T* yp = y + c * oh * ow;
        for (std::size_t r = 0; r < oh; ++r)
            for (std::size_t q = 0; q < ow; ++q) {
                const T* s = xp + (2 * r) * wd + 2 * q;
                yp[r * ow + q] = (s[0] + s[1] + s[wd] + s[wd + 1]) * T(0.25);
            }
    }
}

template <typename T>
void meanpool2_backward(const T* dy, T* dx, std::size_t ch, std::size_t h, std::size_t wd) {
    const std::size_t oh = h / 2, ow = wd / 2;
    for (std::size_t c = 0; c < ch; ++c) {
        const T* dyp = dy + c * oh * ow;
        T* dxp = dx + c * h * wd;
        for (std::size_t r = 0; r < oh; ++r)
            for (std::size_t q = 0; q < ow; ++q) {
                const T g = dyp[r * ow + q] * T(0.25);
                T* s = dxp + (2 * r) * wd + 2 * q;
                s[0] = g; s[1] = g; s[wd] = g; s[wd + 1] = g;
            }
    }
}

// y[c, p] = x[c, p] * m[p]
template <typename T>
void gate_forward(const T* x, const T* m, T* y, std::size_t ch, std::size_t hw) {
    for (std::size_t c = 0; c < ch; ++c)
        for (std::size_t p = 0; p < hw; ++p) y[c * hw + p] = x[c * hw + p] * m[p];
}

template <typename T>
void gate_backward(const T* x, const T* m, const T* dy, T* dx, T* dm,
                   std::size_t ch, std::size_t hw) {
    std::fill(dm, dm + hw, T(0));
    for (std::size_t c = 0; c < ch; ++c)
        for (std::size_t p = 0; p < hw; ++p) {
            dx[c * hw + p] = dy[c * hw + p] * m[p];
            dm[p] += dy[c * hw + p] * x[c * hw + p];
        }
}

// y = W x + b, weight [out, in].
template <typename T>
void dense_forward(const T* w, const T* b, const T* x, T* y,
                   std::size_t in, std::size_t out) {
    for (std::size_t o = 0; o < out; ++o) {
        T acc = b[o];
        const T* wp = w + o * in;
        for (std::size_t i = 0; i < in; ++i) acc += wp[i] * x[i];
        y[o] = acc;
    }
}

template <typename T>
void dense_backward(const T* w, const T* x, const T* dy,
                    T* dx, T* dw, T* db,
                    std::size_t in, std::size_t out) {
    if (dx) std::fill(dx, dx + in, T(0));
    for (std::size_t o = 0; o < out; ++o) {
        const T g = dy[o];
        db[o] += g;
        const T* wp = w + o * in;
        T* dwp = dw + o * in;
        for (std::size_t i = 0; i < in; ++i) {
            dwp[i] += g * x[i];
            if (dx) dx[i] += wp[i] * g;
        }
    }
}

// sigma(z) and the normalized mask in one pass; returns sum(sigma).
template <typename T>
T mask_forward(const T* z, T* sig, T* mask, std::size_t hw) {
    T total = T(0);
    for (std::size_t p = 0; p < hw; ++p) {
        sig[p] = sigmoid(z[p]);
        total += std::abs(sig[p]);
    }
    const T scale = static_cast<T>(hw) / (T(2) * total);
    for (std::size_t p = 0; p < hw; ++p) mask[p] = sig[p] * scale;
    return total;
}

// Backprop through mask normalization and the sigmoid, overwriting dz.
// m_p = K s_p / S with K = hw/2, S = sum s:
//   dL/ds_p = K (dm_p S - sum_q dm_q s_q) / S^2, then dz = dL/ds * s(1-s).
template <typename T>
void mask_backward(const T* sig, T sig_sum, const T* dmask, T* dz, std::size_t hw) {
    const T K = static_cast<T>(hw) / T(2);
    T dot = T(0);
    for (std::size_t p = 0; p < hw; ++p) dot += dmask[p] * sig[p];
    const T inv_s = T(1) / sig_sum;
    const T inv_s2 = inv_s * inv_s;
    for (std::size_t p = 0; p < hw; ++p) {
        const T ds = K * (dmask[p] * inv_s - dot * inv_s2);
        dz[p] = ds * sig[p] * (T(1) - sig[p]);
    }
}

} // namespace detail

// Attention mask over a logit map: m = area * sigma(z) / (2 * sum|sigma(z)|).
// Sigmoid outputs are positive, so sum(m) == area / 2 up to rounding.
template <typename T>
inline std::vector<T> attention_mask(const std::vector<T>& logits) {
    require(!logits.empty(), "attention_mask: empty logit map");
    std::vector<T> sig(logits.size()), mask(logits.size());
    detail::mask_forward(logits.data(), sig.data(), mask.data(), logits.size());
    return mask;
}

// ---------------------------------------------------------------------------
// Full network forward/backward

template <typename T>
struct CanCache {
    // appearance branch
    std::vector<T> a1_pre, a1_act, a2_pre, a2_act;
    std::vector<T> g1_pre, g1_sig, mask1;
    std::vector<T> a_pooled;
    std::vector<T> g2_pre, g2_sig, mask2;
    T g1_sum = T(0), g2_sum = T(0);
    // motion branch
    std::vector<T> m1_pre, m1_act, m2_pre, m2_act, gated1, pooled1;
    std::vector<T> m3_pre, m3_act, m4_pre, m4_act, gated2, pooled2;
    // head
    std::vector<T> d1_pre, d1_act, d2_pre, out;
};

// appearance: [1, h, w]; motion: [n, h, w]; fills cache, returns cache.out.
template <typename T>
const std::vector<T>& can_forward(const CanModel<T>& model, const T* appearance,
                                  const T* motion, CanCache<T>& cc) {
    using namespace detail;
    const CanConfig& g = model.config;
    const std::size_t h = g.height, w = g.width, hw = h * w;
    const std::size_t h2 = h / 2, w2 = w / 2, hw2 = h2 * w2;
    const std::size_t h4 = h / 4, w4 = w / 4, hw4 = h4 * w4;
    const std::size_t flat = g.c2 * hw4;

    auto sz = [](std::vector<T>& v, std::size_t n) { v.resize(n); };
    sz(cc.a1_pre, g.c1 * hw);  sz(cc.a1_act, g.c1 * hw);
    sz(cc.a2_pre, g.c1 * hw);  sz(cc.a2_act, g.c1 * hw);
    sz(cc.g1_pre, hw);         sz(cc.g1_sig, hw);        sz(cc.mask1, hw);
    sz(cc.a_pooled, g.c1 * hw2);
    sz(cc.g2_pre, hw2);        sz(cc.g2_sig, hw2);       sz(cc.mask2, hw2);
    sz(cc.m1_pre, g.c1 * hw);  sz(cc.m1_act, g.c1 * hw);
    sz(cc.m2_pre, g.c1 * hw);  sz(cc.m2_act, g.c1 * hw);
    sz(cc.gated1, g.c1 * hw);  sz(cc.pooled1, g.c1 * hw2);
    sz(cc.m3_pre, g.c2 * hw2); sz(cc.m3_act, g.c2 * hw2);
    sz(cc.m4_pre, g.c2 * hw2); sz(cc.m4_act, g.c2 * hw2);
    sz(cc.gated2, g.c2 * hw2); sz(cc.pooled2, flat);
    sz(cc.d1_pre, g.hidden);   sz(cc.d1_act, g.hidden);
    sz(cc.d2_pre, g.n);        sz(cc.out, g.n);

    // appearance stem
    conv3x3_forward(model.a1.weight.ptr(), model.a1.bias.ptr(), appearance, cc.a1_pre.data(), 1, g.c1, h, w);
    tanh_forward(cc.a1_pre.data(), cc.a1_act.data(), cc.a1_act.size());
    conv3x3_forward(model.a2.weight.ptr(), model.a2.bias.ptr(), cc.a1_act.data(), cc.a2_pre.data(), g.c1, g.c1, h, w);
    tanh_forward(cc.a2_pre.data(), cc.a2_act.data(), cc.a2_act.size());

    // attention masks at both scales
    conv1x1_forward(model.g1.weight.ptr(), model.g1.bias.ptr(), cc.a2_act.data(), cc.g1_pre.data(), g.c1, 1, hw);
    cc.g1_sum = mask_forward(cc.g1_pre.data(), cc.g1_sig.data(), cc.mask1.data(), hw);
    meanpool2_forward(cc.a2_act.data(), cc.a_pooled.data(), g.c1, h, w);
    conv1x1_forward(model.g2.weight.ptr(), model.g2.bias.ptr(), cc.a_pooled.data(), cc.g2_pre.data(), g.c1, 1, hw2);
    cc.g2_sum = mask_forward(cc.g2_pre.data(), cc.g2_sig.data(), cc.mask2.data(), hw2);

    // motion branch, gated by the masks
    conv3x3_forward(model.m1.weight.ptr(), model.m1.bias.ptr(), motion, cc.m1_pre.data(), g.n, g.c1, h, w);
    tanh_forward(cc.m1_pre.data(), cc.m1_act.data(), cc.m1_act.size());
    conv3x3_forward(model.m2.weight.ptr(), model.m2.bias.ptr(), cc.m1_act.data(), cc.m2_pre.data(), g.c1, g.c1, h, w);
    tanh_forward(cc.m2_pre.data(), cc.m2_act.data(), cc.m2_act.size());
    gate_forward(cc.m2_act.data(), cc.mask1.data(), cc.gated1.data(), g.c1, hw);
    meanpool2_forward(cc.gated1.data(), cc.pooled1.data(), g.c1, h, w);

    conv3x3_forward(model.m3.weight.ptr(), model.m3.bias.ptr(), cc.pooled1.data(), cc.m3_pre.data(), g.c1, g.c2, h2, w2);
    tanh_forward(cc.m3_pre.data(), cc.m3_act.data(), cc.m3_act.size());
    conv3x3_forward(model.m4.weight.ptr(), model.m4.bias.ptr(), cc.m3_act.data(), cc.m4_pre.data(), g.c2, g.c2, h2, w2);
    tanh_forward(cc.m4_pre.data(), cc.m4_act.data(), cc.m4_act.size());
    gate_forward(cc.m4_act.data(), cc.mask2.data(), cc.gated2.data(), g.c2, hw2);
    meanpool2_forward(cc.gated2.data(), cc.pooled2.data(), g.c2, h2, w2);

    // dense head with snake output
    dense_forward(model.d1.weight.ptr(), model.d1.bias.ptr(), cc.pooled2.data(), cc.d1_pre.data(), flat, g.hidden);
    tanh_forward(cc.d1_pre.data(), cc.d1_act.data(), g.hidden);
    dense_forward(model.d2.weight.ptr(), model.d2.bias.ptr(), cc.d1_act.data(), cc.d2_pre.data(), g.hidden, g.n);
    const T a = static_cast<T>(g.snake_a);
    for (std::size_t i = 0; i < g.n; ++i) cc.out[i] = snake(cc.d2_pre[i], a);
    return cc.out;
}

// Convenience wrapper with shape validation.
template <typename T>
std::vector<T> can_forward(const CanModel<T>& model, const std::vector<T>& appearance,
                           const std::vector<T>& motion) {
    const CanConfig& g = model.config;
    require(appearance.size() == g.height * g.width, "can_forward: appearance size mismatch");
    require(motion.size() == g.n * g.height * g.width, "can_forward: motion size mismatch");
    CanCache<T> cc;
    return can_forward(model, appearance.data(), motion.data(), cc);
}

// Accumulates parameter gradients into `grads` (same shapes as the model).
// `cc` must hold the cache of the matching forward call.
template <typename T>
void can_backward(const CanModel<T>& model, const CanCache<T>& cc,
                  const T* appearance, const T* motion,
                  const T* grad_out, CanModel<T>& grads) {
    using namespace detail;
    const CanConfig& g = model.config;
    const std::size_t h = g.height, w = g.width, hw = h * w;
    const std::size_t h2 = h / 2, w2 = w / 2, hw2 = h2 * w2;
    const std::size_t flat = g.c2 * (h / 4) * (w / 4);
    const T a = static_cast<T>(g.snake_a);

    // head
    std::vector<T> d_d2_pre(g.n);
    for (std::size_t i = 0; i < g.n; ++i) d_d2_pre[i] = grad_out[i] * snake_deriv(cc.d2_pre[i], a);
    std::vector<T> d_d1_act(g.hidden);
    dense_backward(model.d2.weight.ptr(), cc.d1_act.data(), d_d2_pre.data(),
                   d_d1_act.data(), grads.d2.weight.ptr(), grads.d2.bias.ptr(), g.hidden, g.n);
    std::vector<T> d_d1_pre(g.hidden);
    tanh_backward(cc.d1_act.data(), d_d1_act.data(), d_d1_pre.data(), g.hidden);
    std::vector<T> d_pooled2(flat);
    dense_backward(model.d1.weight.ptr(), cc.pooled2.data(), d_d1_pre.data(),
                   d_pooled2.data(), grads.d1.weight.ptr(), grads.d1.bias.ptr(), flat, g.hidden);

    // motion stage 2
    std::vector<T> d_gated2(g.c2 * hw2);
    meanpool2_backward(d_pooled2.data(), d_gated2.data(), g.c2, h2, w2);
    std::vector<T> d_m4_act(g.c2 * hw2), d_mask2(hw2);
    gate_backward(cc.m4_act.data(), cc.mask2.data(), d_gated2.data(),
                  d_m4_act.data(), d_mask2.data(), g.c2, hw2);
    std::vector<T> d_m4_pre(g.c2 * hw2);
    tanh_backward(cc.m4_act.data(), d_m4_act.data(), d_m4_pre.data(), d_m4_pre.size());
    std::vector<T> d_m3_act(g.c2 * hw2);
    conv3x3_backward(model.m4.weight.ptr(), cc.m3_act.data(), d_m4_pre.data(),
                     d_m3_act.data(), grads.m4.weight.ptr(), grads.m4.bias.ptr(), g.c2, g.c2, h2, w2);
    std::vector<T> d_m3_pre(g.c2 * hw2);
    tanh_backward(cc.m3_act.data(), d_m3_act.data(), d_m3_pre.data(), d_m3_pre.size());
    std::vector<T> d_pooled1(g.c1 * hw2);
    conv3x3_backward(model.m3.weight.ptr(), cc.pooled1.data(), d_m3_pre.data(),
                     d_pooled1.data(), grads.m3.weight.ptr(), grads.m3.bias.ptr(), g.c1, g.c2, h2, w2);

    // motion stage 1
    std::vector<T> d_gated1(g.c1 * hw);
    meanpool2_backward(d_pooled1.data(), d_gated1.data(), g.c1, h, w);
    std::vector<T> d_m2_act(g.c1 * hw), d_mask1(hw);
    gate_backward(cc.m2_act.data(), cc.mask1.data(), d_gated1.data(),
                  d_m2_act.data(), d_mask1.data(), g.c1, hw);
    std::vector<T> d_m2_pre(g.c1 * hw);
    tanh_backward(cc.m2_act.data(), d_m2_act.data(), d_m2_pre.data(), d_m2_pre.size());
    std::vector<T> d_m1_act(g.c1 * hw);
    conv3x3_backward(model.m2.weight.ptr(), cc.m1_act.data(), d_m2_pre.data(),
                     d_m1_act.data(), grads.m2.weight.ptr(), grads.m2.bias.ptr(), g.c1, g.c1, h, w);
    std::vector<T> d_m1_pre(g.c1 * hw);
    tanh_backward(cc.m1_act.data(), d_m1_act.data(), d_m1_pre.data(), d_m1_pre.size());
    conv3x3_backward(model.m1.weight.ptr(), motion, d_m1_pre.data(),
                     static_cast<T*>(nullptr), grads.m1.weight.ptr(), grads.m1.bias.ptr(), g.n, g.c1, h, w);

    // attention masks back into the appearance stem. a2_act accumulates from
    // the g1 projection and (through the pool) the g2 projection.
    std::vector<T> d_a2_act(g.c1 * hw, T(0));

    std::vector<T> d_g2_pre(hw2);
    mask_backward(cc.g2_sig.data(), cc.g2_sum, d_mask2.data(), d_g2_pre.data(), hw2);
    std::vector<T> d_a_pooled(g.c1 * hw2);
    conv1x1_backward(model.g2.weight.ptr(), cc.a_pooled.data(), d_g2_pre.data(),
                     d_a_pooled.data(), grads.g2.weight.ptr(), grads.g2.bias.ptr(), g.c1, 1, hw2);
    std::vector<T> d_a2_from_pool(g.c1 * hw);
    meanpool2_backward(d_a_pooled.data(), d_a2_from_pool.data(), g.c1, h, w);
    for (std::size_t i = 0; i < d_a2_act.size(); ++i) d_a2_act[i] += d_a2_from_pool[i];

    std::vector<T> d_g1_pre(hw);
    mask_backward(cc.g1_sig.data(), cc.g1_sum, d_mask1.data(), d_g1_pre.data(), hw);
    std::vector<T> d_a2_from_g1(g.c1 * hw);
    conv1x1_backward(model.g1.weight.ptr(), cc.a2_act.data(), d_g1_pre.data(),
                     d_a2_from_g1.data(), grads.g1.weight.ptr(), grads.g1.bias.ptr(), g.c1, 1, hw);
    for (std::size_t i = 0; i < d_a2_act.size(); ++i) d_a2_act[i] += d_a2_from_g1[i];

    // appearance stem
    std::vector<T> d_a2_pre(g.c1 * hw);
    tanh_backward(cc.a2_act.data(), d_a2_act.data(), d_a2_pre.data(), d_a2_pre.size());
    std::vector<T> d_a1_act(g.c1 * hw);
    conv3x3_backward(model.a2.weight.ptr(), cc.a1_act.data(), d_a2_pre.data(),
                     d_a1_act.data(), grads.a2.weight.ptr(), grads.a2.bias.ptr(), g.c1, g.c1, h, w);
    std::vector<T> d_a1_pre(g.c1 * hw);
    tanh_backward(cc.a1_act.data(), d_a1_act.data(), d_a1_pre.data(), d_a1_pre.size());
    conv3x3_backward(model.a1.weight.ptr(), appearance, d_a1_pre.data(),
                     static_cast<T*>(nullptr), grads.a1.weight.ptr(), grads.a1.bias.ptr(), 1, g.c1, h, w);
}

// ---------------------------------------------------------------------------
// Gradient verification: compares can_backward against central differences
// on an MSE loss over random inputs and a freshly initialized model.
// Returns the maximum relative error across every parameter element, with
// the relative error floored at 1 to absorb finite-difference noise on
// near-zero gradients: |fd - an| / max(1, |fd|, |an|).

inline double gradcheck_max_rel_error(const CanConfig& cfg, std::uint64_t data_seed,
                                      double step = 1e-6) {
    CanModel<double> model = init_model<double>(cfg);
    Rng rng(data_seed);
    const std::size_t hw = cfg.height * cfg.width;
    std::vector<double> appearance(hw), motion(cfg.n * hw), target(cfg.n);
    for (auto& v : appearance) v = rng.uniform(0.0, 1.0);
    for (auto& v : motion) v = rng.uniform(-1.0, 1.0);
    for (auto& v : target) v = rng.uniform(0.0, 1.0);

    CanCache<double> cache;
    const auto loss = [&]() {
        const auto& out = can_forward(model, appearance.data(), motion.data(), cache);
        double sum = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double d = out[i] - target[i];
            sum += d * d;
        }
        return sum / static_cast<double>(out.size());
    };

    // analytic gradients
    loss();
    std::vector<double> grad_out(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i)
        grad_out[i] = 2.0 * (cache.out[i] - target[i]) / static_cast<double>(cfg.n);
    CanModel<double> grads = make_model<double>(cfg);
    can_backward(model, cache, appearance.data(), motion.data(), grad_out.data(), grads);

    double worst = 0.0;
    model.for_each_parameter([&](const char* name, Tensor<double>& t) {
        Tensor<double>* gt = nullptr;
        grads.for_each_parameter([&](const char* gname, Tensor<double>& g) {
            if (std::strcmp(gname, name) == 0) gt = &g;
        });
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double keep = t.data[i];
            t.data[i] = keep + step;
            const double lp = loss();
            t.data[i] = keep - step;
            const double lm = loss();
            t.data[i] = keep;
            const double fd = (lp - lm) / (2.0 * step);
            const double an = gt->data[i];
            const double err = std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
            worst = std::max(worst, err);
        }
    });
    return worst;
}

// ---------------------------------------------------------------------------
// Weight files. Binary, little endian, values stored as f64 regardless of
// the in-memory element type:
//   magic "CANW", u8 version (1),
//   u32 n, height, width, c1, c2, hidden, f64 snake_a, u64 seed,
//   u32 tensor_count, then per tensor in canonical order:
//     u32 name_len, name bytes, u32 rank, u32 dims[rank], f64 data[numel].

template <typename T>
void save_weights(const CanModel<T>& model, const std::filesystem::path& path) {
    std::string buf = "CANW";
    buf.push_back(0x01);
    const CanConfig& g = model.config;
    for (std::size_t v : {g.n, g.height, g.width, g.c1, g.c2, g.hidden})
        detail::put_u32(buf, static_cast<std::uint32_t>(v));
    detail::put_f64(buf, g.snake_a);
    detail::put_u64(buf, g.seed);

    std::uint32_t count = 0;
    model.for_each_parameter([&](const char*, const Tensor<T>&) { ++count; });
    detail::put_u32(buf, count);
    model.for_each_parameter([&](const char* name, const Tensor<T>& t) {
        const std::string n(name);
        detail::put_u32(buf, static_cast<std::uint32_t>(n.size()));
        buf.append(n);
        detail::put_u32(buf, static_cast<std::uint32_t>(t.shape.size()));
        for (std::size_t d : t.shape) detail::put_u32(buf, static_cast<std::uint32_t>(d));
        for (const T& v : t.data) detail::put_f64(buf, static_cast<double>(v));
    });
    detail::write_file_bytes(path, buf);
}

template <typename T>
CanModel<T> load_weights(const std::filesystem::path& path) {
    detail::ByteReader r(detail::read_file_bytes(path), path.string());
    if (r.bytes(4) != "CANW")
        throw format_error(r.origin() + ": bad magic, not a weight file");
    const std::uint8_t version = r.u8();
    if (version != 0x01)
        throw format_error(r.origin() + ": unsupported weight file version " + std::to_string(version));

    CanConfig cfg;
    cfg.n = r.u32();
    cfg.height = r.u32();
    cfg.width = r.u32();
    cfg.c1 = r.u32();
    cfg.c2 = r.u32();
    cfg.hidden = r.u32();
    cfg.snake_a = r.f64();
    cfg.seed = r.u64();

    CanModel<T> model;
    try {
        model = make_model<T>(cfg);
    } catch (const invariant_error& e) {
        throw format_error(r.origin() + ": invalid model config: " + e.what());
    }

    const std::uint32_t count = r.u32();
    std::uint32_t expected = 0;
    model.for_each_parameter([&](const char*, Tensor<T>&) { ++expected; });
    if (count != expected)
        throw format_error(r.origin() + ": expected " + std::to_string(expected) + " tensors, file has " +
                           std::to_string(count));

    model.for_each_parameter([&](const char* name, Tensor<T>& t) {
        const std::uint32_t name_len = r.u32();
        const std::string got(r.bytes(name_len));
        if (got != name)
            throw format_error(r.origin() + ": expected tensor '" + name + "', found '" + got + "'");
        const std::uint32_t rank = r.u32();
        std::vector<std::size_t> dims(rank);
        for (auto& d : dims) d = r.u32();
        if (dims != t.shape)
            throw format_error(r.origin() + ": tensor '" + got + "' has shape " + shape_string(dims) +
                               ", model needs " + shape_string(t.shape));
        for (auto& v : t.data) v = static_cast<T>(r.f64());
    });
    if (!r.at_end())
        throw format_error(r.origin() + ": trailing bytes after the last tensor");
    return model;
}

} // namespace nirpulse
