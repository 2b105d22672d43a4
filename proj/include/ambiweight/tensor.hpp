#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ambiweight/loss.hpp"
#include "ambiweight/rng.hpp"

namespace ambiweight {

template <typename T>
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)), data(numel_of(shape), T(0)) {}
    Tensor(std::vector<std::size_t> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != numel_of(shape)) throw std::invalid_argument("Tensor: data/shape mismatch");
    }

    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        return std::accumulate(s.begin(), s.end(), std::size_t(1), std::multiplies<>());
    }
    static Tensor scalar(T v) { return Tensor({1}, {v}); }
    static Tensor full(std::vector<std::size_t> s, T v) {
        Tensor t(std::move(s));
        std::fill(t.data.begin(), t.data.end(), v);
        return t;
    }

    std::size_t numel() const { return data.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }
    T& operator[](std::size_t i) { return data[i]; }
    const T& operator[](std::size_t i) const { return data[i]; }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.data.assign(data.begin(), data.end());
        return out;
    }
};

struct ConvSpec {
    std::size_t stride = 1;
    std::size_t dilation = 1;
    std::size_t pad = 0;

    // "same" padding for stride 1 and odd kernels; effective extent (k-1)*d + 1.
    static ConvSpec same(std::size_t kernel, std::size_t dilation = 1) {
        return ConvSpec{1, dilation, (kernel - 1) * dilation / 2};
    }
};

// Channelwise running statistics for batch norm inference.
template <typename T>
struct BatchNormState {
    Tensor<T> running_mean;
    Tensor<T> running_var;
    T momentum = T(0.9);
    T epsilon = T(1e-5);

    explicit BatchNormState(std::size_t channels = 0)
        : running_mean({channels}), running_var(Tensor<T>::full({channels}, T(1))) {}
};

// Reverse-mode tape over dense tensors. Nodes are created in forward
// (topological) order; backward() sweeps them in reverse, accumulating
// gradients additively at fan-out.
template <typename T>
class Tape {
public:
    using NodeId = int;

    NodeId leaf(Tensor<T> value) {
        nodes_.push_back(Node{std::move(value), Tensor<T>(), nullptr});
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    // Leaf bound to an external parameter tensor; the tape remembers the
    // binding so gradients can be read back after backward().
    NodeId param(Tensor<T>* p) {
        NodeId id = leaf(*p);
        param_ids_.emplace_back(p, id);
        return id;
    }

    // Gradient for a registered parameter (zeros if it never received one).
    Tensor<T> grad_of(const Tensor<T>* p) const {
        for (const auto& [ptr, id] : param_ids_)
            if (ptr == p) {
                const Tensor<T>& g = grad(id);
                return g.data.empty() ? Tensor<T>(p->shape) : g;
            }
        throw std::invalid_argument("grad_of: tensor was not registered with param()");
    }

    const Tensor<T>& value(NodeId id) const { return nodes_.at(id).value; }
    const Tensor<T>& grad(NodeId id) const { return nodes_.at(id).grad; }

    NodeId add(NodeId a, NodeId b) {
        const auto& va = value(a);
        const auto& vb = value(b);
        if (va.shape != vb.shape) throw std::invalid_argument("add: shape mismatch");
        Tensor<T> out = va;
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] += vb[i];
        return record(std::move(out), [this, a, b](const Node& n) {
            accumulate(a, n.grad.data.data());
            accumulate(b, n.grad.data.data());
        });
    }

    NodeId relu(NodeId x) {
        Tensor<T> out = value(x);
        for (auto& v : out.data) v = v > 0 ? v : T(0);
        return record(std::move(out), [this, x](const Node& n) {
            auto& gx = ensure_grad(x);
            const auto& vx = value(x);
            for (std::size_t i = 0; i < gx.numel(); ++i)
                if (vx[i] > 0) gx[i] += n.grad[i];
        });
    }

    NodeId sigmoid(NodeId x) {
        Tensor<T> out = value(x);
        for (auto& v : out.data) v = T(1) / (T(1) + std::exp(-v));
        return record(std::move(out), [this, x](const Node& n) {
            auto& gx = ensure_grad(x);
            for (std::size_t i = 0; i < gx.numel(); ++i) {
                const T p = n.value[i];
                gx[i] += n.grad[i] * p * (T(1) - p);
            }
        });
    }

    NodeId sum(NodeId x) {
        const auto& vx = value(x);
        T s = pairwise_sum(vx.data.data(), vx.numel());
        return record(Tensor<T>::scalar(s), [this, x](const Node& n) {
            auto& gx = ensure_grad(x);
            for (auto& g : gx.data) g += n.grad[0];
        });
    }

    // x: N x D, weight: M x D, bias: M  ->  N x M
    NodeId dense(NodeId x, NodeId weight, NodeId bias) {
        const auto& vx = value(x);
        const auto& vw = value(weight);
        const auto& vb = value(bias);
        if (vx.shape.size() != 2 || vw.shape.size() != 2 || vx.shape[1] != vw.shape[1] ||
            vb.numel() != vw.shape[0])
            throw std::invalid_argument("dense: shape mismatch");
        const std::size_t n = vx.shape[0], d = vx.shape[1], m = vw.shape[0];
        Tensor<T> out({n, m});
        MatMap(out.data.data(), n, m).noalias() =
            CMatMap(vx.data.data(), n, d) * CMatMap(vw.data.data(), m, d).transpose();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) out[i * m + j] += vb[j];
        return record(std::move(out), [this, x, weight, bias, n, d, m](const Node& node) {
            CMatMap gy(node.grad.data.data(), n, m);
            MatMap(ensure_grad(x).data.data(), n, d).noalias() +=
                gy * CMatMap(value(weight).data.data(), m, d);
            MatMap(ensure_grad(weight).data.data(), m, d).noalias() +=
                gy.transpose() * CMatMap(value(x).data.data(), n, d);
            auto& gb = ensure_grad(bias);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j) gb[j] += gy(i, j);
        });
    }

    // input: N x C x H x W, kernel: F x C x kh x kw, bias: F (may be -1 for none).
    // Cross-correlation (no kernel flip) with stride, dilation and zero padding.
    NodeId conv2d(NodeId input, NodeId kernel, NodeId bias, const ConvSpec& spec) {
        const auto& vx = value(input);
        const auto& vk = value(kernel);
        if (vx.shape.size() != 4 || vk.shape.size() != 4 || vx.shape[1] != vk.shape[1])
            throw std::invalid_argument("conv2d: shape mismatch");
        const std::size_t n = vx.shape[0], c = vx.shape[1], h = vx.shape[2], w = vx.shape[3];
        const std::size_t f = vk.shape[0], kh = vk.shape[2], kw = vk.shape[3];
        const std::size_t eh = (kh - 1) * spec.dilation + 1, ew = (kw - 1) * spec.dilation + 1;
        if (h + 2 * spec.pad < eh || w + 2 * spec.pad < ew)
            throw std::invalid_argument("conv2d: input too small for kernel extent");
        const std::size_t oh = (h + 2 * spec.pad - eh) / spec.stride + 1;
        const std::size_t ow = (w + 2 * spec.pad - ew) / spec.stride + 1;
        if (bias >= 0 && value(bias).numel() != f) throw std::invalid_argument("conv2d: bias mismatch");

        const std::size_t ckk = c * kh * kw, ohw = oh * ow;
        Tensor<T> out({n, f, oh, ow});
        Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> col(ckk, ohw);
        CMatMap wmat(vk.data.data(), f, ckk);
        for (std::size_t s = 0; s < n; ++s) {
            im2col(vx.data.data() + s * c * h * w, c, h, w, kh, kw, spec, oh, ow, col);
            MatMap(out.data.data() + s * f * ohw, f, ohw).noalias() = wmat * col;
        }
        if (bias >= 0) {
            const auto& vb = value(bias);
            for (std::size_t s = 0; s < n; ++s)
                for (std::size_t j = 0; j < f; ++j) {
                    T* dst = out.data.data() + (s * f + j) * ohw;
                    for (std::size_t i = 0; i < ohw; ++i) dst[i] += vb[j];
                }
        }
        return record(std::move(out),
                      [this, input, kernel, bias, spec, n, c, h, w, f, kh, kw, oh, ow](const Node& node) {
            const std::size_t ckk = c * kh * kw, ohw = oh * ow;
            Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> col(ckk, ohw);
            Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> dcol(ckk, ohw);
            CMatMap wmat(value(kernel).data.data(), f, ckk);
            MatMap gw(ensure_grad(kernel).data.data(), f, ckk);
            auto& gx = ensure_grad(input);
            for (std::size_t s = 0; s < n; ++s) {
                CMatMap gy(node.grad.data.data() + s * f * ohw, f, ohw);
                im2col(value(input).data.data() + s * c * h * w, c, h, w, kh, kw, spec, oh, ow, col);
                gw.noalias() += gy * col.transpose();
                dcol.noalias() = wmat.transpose() * gy;
                col2im(dcol, c, h, w, kh, kw, spec, oh, ow, gx.data.data() + s * c * h * w);
            }
            if (bias >= 0) {
                auto& gb = ensure_grad(bias);
                for (std::size_t s = 0; s < n; ++s)
                    for (std::size_t j = 0; j < f; ++j) {
                        const T* src = node.grad.data.data() + (s * f + j) * ohw;
                        for (std::size_t i = 0; i < ohw; ++i) gb[j] += src[i];
                    }
            }
        });
    }

    // N x C x H x W -> N x C
    NodeId global_avg_pool(NodeId x) {
        const auto& vx = value(x);
        if (vx.shape.size() != 4) throw std::invalid_argument("global_avg_pool: expected NCHW");
        const std::size_t n = vx.shape[0], c = vx.shape[1], hw = vx.shape[2] * vx.shape[3];
        Tensor<T> out({n, c});
        for (std::size_t i = 0; i < n * c; ++i)
            out[i] = pairwise_sum(vx.data.data() + i * hw, hw) / static_cast<T>(hw);
        return record(std::move(out), [this, x, n, c, hw](const Node& node) {
            auto& gx = ensure_grad(x);
            for (std::size_t i = 0; i < n * c; ++i) {
                const T g = node.grad[i] / static_cast<T>(hw);
                T* dst = gx.data.data() + i * hw;
                for (std::size_t j = 0; j < hw; ++j) dst[j] += g;
            }
        });
    }

    // Channelwise batch norm over (N, H, W). Training mode uses batch
    // statistics and updates the running state; inference uses the state.
    NodeId batch_norm(NodeId x, NodeId gamma, NodeId beta, BatchNormState<T>* state, bool training) {
        const auto& vx = value(x);
        if (vx.shape.size() != 4) throw std::invalid_argument("batch_norm: expected NCHW");
        const std::size_t n = vx.shape[0], c = vx.shape[1], hw = vx.shape[2] * vx.shape[3];
        if (value(gamma).numel() != c || value(beta).numel() != c || state->running_mean.numel() != c)
            throw std::invalid_argument("batch_norm: channel mismatch");
        const T eps = state->epsilon;
        auto mean = std::make_shared<std::vector<T>>(c);
        auto inv_std = std::make_shared<std::vector<T>>(c);
        const std::size_t count = n * hw;
        for (std::size_t ch = 0; ch < c; ++ch) {
            T m = 0, v = 0;
            if (training) {
                for (std::size_t s = 0; s < n; ++s) {
                    const T* src = vx.data.data() + (s * c + ch) * hw;
                    m += pairwise_sum(src, hw);
                }
                m /= static_cast<T>(count);
                for (std::size_t s = 0; s < n; ++s) {
                    const T* src = vx.data.data() + (s * c + ch) * hw;
                    for (std::size_t j = 0; j < hw; ++j) v += (src[j] - m) * (src[j] - m);
                }
                v /= static_cast<T>(count);
                state->running_mean[ch] = state->momentum * state->running_mean[ch] + (T(1) - state->momentum) * m;
                state->running_var[ch] = state->momentum * state->running_var[ch] + (T(1) - state->momentum) * v;
            } else {
                m = state->running_mean[ch];
                v = state->running_var[ch];
            }
            (*mean)[ch] = m;
            (*inv_std)[ch] = T(1) / std::sqrt(v + eps);
        }
        Tensor<T> out = vx;
        const auto& vg = value(gamma);
        const auto& vb = value(beta);
        for (std::size_t s = 0; s < n; ++s)
            for (std::size_t ch = 0; ch < c; ++ch) {
                T* dst = out.data.data() + (s * c + ch) * hw;
                const T g = vg[ch], b = vb[ch], m = (*mean)[ch], is = (*inv_std)[ch];
                for (std::size_t j = 0; j < hw; ++j) dst[j] = g * (dst[j] - m) * is + b;
            }
        return record(std::move(out),
                      [this, x, gamma, beta, mean, inv_std, n, c, hw, training](const Node& node) {
            auto& gx = ensure_grad(x);
            auto& gg = ensure_grad(gamma);
            auto& gb = ensure_grad(beta);
            const auto& vx = value(x);
            const auto& vg = value(gamma);
            const std::size_t count = n * hw;
            for (std::size_t ch = 0; ch < c; ++ch) {
                const T m = (*mean)[ch], is = (*inv_std)[ch], g = vg[ch];
                T sum_dy = 0, sum_dy_xhat = 0;
                for (std::size_t s = 0; s < n; ++s) {
                    const T* dy = node.grad.data.data() + (s * c + ch) * hw;
                    const T* xv = vx.data.data() + (s * c + ch) * hw;
                    for (std::size_t j = 0; j < hw; ++j) {
                        sum_dy += dy[j];
                        sum_dy_xhat += dy[j] * (xv[j] - m) * is;
                    }
                }
                gb[ch] += sum_dy;
                gg[ch] += sum_dy_xhat;
                for (std::size_t s = 0; s < n; ++s) {
                    const T* dy = node.grad.data.data() + (s * c + ch) * hw;
                    const T* xv = vx.data.data() + (s * c + ch) * hw;
                    T* dx = gx.data.data() + (s * c + ch) * hw;
                    for (std::size_t j = 0; j < hw; ++j) {
                        const T xhat = (xv[j] - m) * is;
                        if (training) {
                            dx[j] += g * is *
                                     (dy[j] - sum_dy / static_cast<T>(count) -
                                      xhat * sum_dy_xhat / static_cast<T>(count));
                        } else {
                            dx[j] += g * is * dy[j];
                        }
                    }
                }
            }
        });
    }

    // Zeroes whole channels with probability `rate`, rescaling survivors by
    // 1/(1-rate). Identity in inference mode.
    NodeId spatial_dropout(NodeId x, double rate, Rng* rng, bool training) {
        return dropout_impl(x, rate, rng, training, /*spatial=*/true);
    }

    NodeId dropout(NodeId x, double rate, Rng* rng, bool training) {
        return dropout_impl(x, rate, rng, training, /*spatial=*/false);
    }

    // Adds Normal(0, stddev) noise elementwise in training mode.
    NodeId gaussian_noise(NodeId x, double stddev, Rng* rng, bool training) {
        if (!training || stddev == 0.0) return identity(x);
        Tensor<T> out = value(x);
        for (auto& v : out.data) v += static_cast<T>(rng->normal(0.0, stddev));
        return record(std::move(out), [this, x](const Node& n) { accumulate(x, n.grad.data.data()); });
    }

    // Fused weighted BCE over logits: mean over samples then heads of
    //   w1 * (-y ln p) + w0 * (1-y) * (-ln(1-p)),  p = sigmoid(z).
    // The backward path uses the logit-form gradient.
    NodeId wbce_loss(NodeId logits, const std::vector<std::uint8_t>& y, const std::vector<T>& w1,
                     const std::vector<T>& w0) {
        const auto& vz = value(logits);
        if (vz.shape.size() != 2) throw std::invalid_argument("wbce_loss: expected batch x heads");
        const std::size_t count = vz.numel();
        if (y.size() != count || w1.size() != count || w0.size() != count)
            throw std::invalid_argument("wbce_loss: target/weight size mismatch");
        std::vector<T> elem(count);
        for (std::size_t i = 0; i < count; ++i) {
            const T p = T(1) / (T(1) + std::exp(-vz[i]));
            elem[i] = wbce<T>(y[i], p, w1[i], w0[i]);
        }
        const T loss = pairwise_sum(elem.data(), count) / static_cast<T>(count);
        auto yp = std::make_shared<std::vector<std::uint8_t>>(y);
        auto w1p = std::make_shared<std::vector<T>>(w1);
        auto w0p = std::make_shared<std::vector<T>>(w0);
        return record(Tensor<T>::scalar(loss),
                      [this, logits, yp, w1p, w0p, count](const Node& node) {
            auto& gz = ensure_grad(logits);
            const auto& vz = value(logits);
            const T scale = node.grad[0] / static_cast<T>(count);
            for (std::size_t i = 0; i < count; ++i)
                gz[i] += scale * wbce_grad_logit<T>((*yp)[i], vz[i], (*w1p)[i], (*w0p)[i]);
        });
    }

    // Reverse topological sweep from a scalar node.
    void backward(NodeId loss) {
        if (value(loss).numel() != 1) throw std::invalid_argument("backward: loss must be scalar");
        for (auto& n : nodes_)
            if (!n.grad.data.empty()) std::fill(n.grad.data.begin(), n.grad.data.end(), T(0));
        ensure_grad(loss)[0] = T(1);
        for (NodeId id = loss; id >= 0; --id) {
            const Node& n = nodes_[id];
            if (n.backward_fn && !n.grad.data.empty()) n.backward_fn(n);
        }
    }

private:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;  // lazily allocated
        std::function<void(const Node&)> backward_fn;
    };

    using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
    using CMatMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

    NodeId record(Tensor<T> out, std::function<void(const Node&)> fn) {
        nodes_.push_back(Node{std::move(out), Tensor<T>(), std::move(fn)});
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    NodeId identity(NodeId x) {
        return record(value(x), [this, x](const Node& n) { accumulate(x, n.grad.data.data()); });
    }

    NodeId dropout_impl(NodeId x, double rate, Rng* rng, bool training, bool spatial) {
        if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0,1)");
        if (!training || rate == 0.0) return identity(x);
        const auto& vx = value(x);
        auto mask = std::make_shared<std::vector<T>>(vx.numel());
        const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
        if (spatial) {
            if (vx.shape.size() != 4) throw std::invalid_argument("spatial_dropout: expected NCHW");
            const std::size_t nc = vx.shape[0] * vx.shape[1], hw = vx.shape[2] * vx.shape[3];
            for (std::size_t i = 0; i < nc; ++i) {
                const T m = rng->bernoulli(rate) ? T(0) : keep_scale;
                std::fill_n(mask->data() + i * hw, hw, m);
            }
        } else {
            for (auto& m : *mask) m = rng->bernoulli(rate) ? T(0) : keep_scale;
        }
        Tensor<T> out = vx;
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= (*mask)[i];
        return record(std::move(out), [this, x, mask](const Node& n) {
            auto& gx = ensure_grad(x);
            for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += n.grad[i] * (*mask)[i];
        });
    }

    Tensor<T>& ensure_grad(NodeId id) {
        Node& n = nodes_.at(id);
        if (n.grad.data.empty()) n.grad = Tensor<T>(n.value.shape);
        return n.grad;
    }

    void accumulate(NodeId id, const T* src) {
        auto& g = ensure_grad(id);
        for (std::size_t i = 0; i < g.numel(); ++i) g[i] += src[i];
    }

    static void im2col(const T* src, std::size_t c, std::size_t h, std::size_t w, std::size_t kh,
                       std::size_t kw, const ConvSpec& spec, std::size_t oh, std::size_t ow,
                       Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& col) {
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t ki = 0; ki < kh; ++ki)
                for (std::size_t kj = 0; kj < kw; ++kj) {
                    const std::size_t row = (ch * kh + ki) * kw + kj;
                    for (std::size_t oi = 0; oi < oh; ++oi) {
                        const std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(oi * spec.stride + ki * spec.dilation) -
                                                  static_cast<std::ptrdiff_t>(spec.pad);
                        for (std::size_t oj = 0; oj < ow; ++oj) {
                            const std::ptrdiff_t jj = static_cast<std::ptrdiff_t>(oj * spec.stride + kj * spec.dilation) -
                                                      static_cast<std::ptrdiff_t>(spec.pad);
                            T v = T(0);
                            if (ii >= 0 && ii < static_cast<std::ptrdiff_t>(h) && jj >= 0 &&
                                jj < static_cast<std::ptrdiff_t>(w))
                                v = src[(ch * h + ii) * w + jj];
                            col(row, oi * ow + oj) = v;
                        }
                    }
                }
    }

    static void col2im(const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& dcol, std::size_t c,
                       std::size_t h, std::size_t w, std::size_t kh, std::size_t kw,
                       const ConvSpec& spec, std::size_t oh, std::size_t ow, T* dst) {
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t ki = 0; ki < kh; ++ki)
                for (std::size_t kj = 0; kj < kw; ++kj) {
                    const std::size_t row = (ch * kh + ki) * kw + kj;
                    for (std::size_t oi = 0; oi < oh; ++oi) {
                        const std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(oi * spec.stride + ki * spec.dilation) -
                                                  static_cast<std::ptrdiff_t>(spec.pad);
                        if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(h)) continue;
                        for (std::size_t oj = 0; oj < ow; ++oj) {
                            const std::ptrdiff_t jj = static_cast<std::ptrdiff_t>(oj * spec.stride + kj * spec.dilation) -
                                                      static_cast<std::ptrdiff_t>(spec.pad);
                            if (jj < 0 || jj >= static_cast<std::ptrdiff_t>(w)) continue;
                            dst[(ch * h + ii) * w + jj] += dcol(row, oi * ow + oj);
                        }
                    }
                }
    }

    std::vector<Node> nodes_;
    std::vector<std::pair<Tensor<T>*, NodeId>> param_ids_;
};

// Standard Adam with bias correction.
template <typename T>
struct AdamState {
    std::vector<Tensor<T>> m;
    std::vector<Tensor<T>> v;
    std::uint64_t step = 0;
};

template <typename T>
struct AdamConfig {
    T lr = T(1e-4);
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T eps = T(1e-8);
};

template <typename T>
void adam_step(const std::vector<Tensor<T>*>& params, const std::vector<const Tensor<T>*>& grads,
               AdamState<T>& state, const AdamConfig<T>& cfg = {}) {
    if (params.size() != grads.size()) throw std::invalid_argument("adam_step: params/grads mismatch");
    if (state.m.empty()) {
        for (auto* p : params) {
            state.m.emplace_back(p->shape);
            state.v.emplace_back(p->shape);
        }
    }
    if (state.m.size() != params.size()) throw std::invalid_argument("adam_step: state size mismatch");
    state.step += 1;
    const T bc1 = T(1) - std::pow(cfg.beta1, static_cast<T>(state.step));
    const T bc2 = T(1) - std::pow(cfg.beta2, static_cast<T>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor<T>& p = *params[i];
        const Tensor<T>& g = *grads[i];
        if (p.shape != g.shape || p.shape != state.m[i].shape)
            throw std::invalid_argument("adam_step: shape mismatch");
        for (std::size_t j = 0; j < p.numel(); ++j) {
            state.m[i][j] = cfg.beta1 * state.m[i][j] + (T(1) - cfg.beta1) * g[j];
            state.v[i][j] = cfg.beta2 * state.v[i][j] + (T(1) - cfg.beta2) * g[j] * g[j];
            const T mhat = state.m[i][j] / bc1;
            const T vhat = state.v[i][j] / bc2;
            p[j] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

}  // namespace ambiweight
