#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace ambiweight {

inline constexpr double kProbEpsilon = 1e-7;

template <typename T>
T clamp_prob(T p) {
    return std::clamp(p, static_cast<T>(kProbEpsilon), static_cast<T>(1.0 - kProbEpsilon));
}

// Weighted binary cross-entropy for one head:
//   L = w1 * (-y * ln p) + w0 * (1 - y) * (-ln(1 - p))
template <typename T>
T wbce(int y, T p, T w1, T w0) {
    p = clamp_prob(p);
    T loss = 0;
    if (y != 0) loss += w1 * (-std::log(p));
    else loss += w0 * (-std::log(static_cast<T>(1) - p));
    return loss;
}

// dL/dz with p = sigmoid(z), computed in logit form:
//   dL/dz = -w1 * y * (1 - p) + w0 * (1 - y) * p
template <typename T>
T wbce_grad_logit(int y, T z, T w1, T w0) {
    T p = static_cast<T>(1) / (static_cast<T>(1) + std::exp(-z));
    if (y != 0) return -w1 * (static_cast<T>(1) - p);
    return w0 * p;
}

// One batch of targets, predictions and per-element effective weights, all
// laid out row-major batch x heads.
template <typename T>
struct LossBatch {
    std::size_t n_samples = 0;
    std::size_t n_heads = 0;
    std::vector<std::uint8_t> y;
    std::vector<T> p;
    std::vector<T> w1;
    std::vector<T> w0;

    std::size_t idx(std::size_t s, std::size_t h) const { return s * n_heads + h; }
    void check() const {
        const std::size_t n = n_samples * n_heads;
        if (n == 0) throw std::invalid_argument("multilabel_loss: empty batch");
        if (y.size() != n || p.size() != n || w1.size() != n || w0.size() != n)
            throw std::invalid_argument("multilabel_loss: shape mismatch");
    }
};

// Pairwise summation; fixed evaluation order keeps reductions bit-stable.
template <typename T>
T pairwise_sum(const T* data, std::size_t n) {
    if (n <= 8) {
        T s = 0;
        for (std::size_t i = 0; i < n; ++i) s += data[i];
        return s;
    }
    std::size_t half = n / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

// Mean over heads of the per-head mean over samples.
template <typename T>
T multilabel_loss(const LossBatch<T>& batch) {
    batch.check();
    std::vector<T> per_sample(batch.n_samples);
    std::vector<T> per_head(batch.n_heads);
    for (std::size_t h = 0; h < batch.n_heads; ++h) {
        for (std::size_t s = 0; s < batch.n_samples; ++s) {
            const std::size_t i = batch.idx(s, h);
            per_sample[s] = wbce<T>(batch.y[i], batch.p[i], batch.w1[i], batch.w0[i]);
        }
        per_head[h] = pairwise_sum(per_sample.data(), per_sample.size()) / static_cast<T>(batch.n_samples);
    }
    return pairwise_sum(per_head.data(), per_head.size()) / static_cast<T>(batch.n_heads);
}

}  // namespace ambiweight
