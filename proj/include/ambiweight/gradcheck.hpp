#pragma once

// Finite-difference gradient checking shared by the tensor tests, the
// acceptance suite and the gradcheck CLI command.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "ambiweight/models.hpp"
#include "ambiweight/tensor.hpp"

namespace ambiweight::gradcheck {

struct CheckResult {
    std::string name;
    double max_rel_error = 0.0;
    bool passed = false;
    double tolerance = 0.0;
};

// Central finite difference of a scalar function against the analytic
// gradient of `input`, elementwise. Relative error is normalized by
// max(|analytic|, |numeric|, floor).
template <typename T>
double max_rel_error(const std::function<T(const Tensor<T>&)>& f, Tensor<T> x,
                     const Tensor<T>& analytic, T h, T floor = T(1e-6)) {
    double worst = 0.0;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const T saved = x[i];
        x[i] = saved + h;
        const T plus = f(x);
        x[i] = saved - h;
        const T minus = f(x);
        x[i] = saved;
        const double numeric = (static_cast<double>(plus) - static_cast<double>(minus)) /
                               (2.0 * static_cast<double>(h));
        const double denom =
            std::max({std::abs(numeric), std::abs(static_cast<double>(analytic[i])),
                      static_cast<double>(floor)});
        worst = std::max(worst, std::abs(numeric - static_cast<double>(analytic[i])) / denom);
    }
    return worst;
}

// Builds a scalar graph via `build`, backprops, and finite-difference checks
// the gradient with respect to every listed tensor.
template <typename T>
double check_op(const std::function<T(Tape<T>&, const std::vector<Tensor<T>*>&)>& build,
                std::vector<Tensor<T>*> inputs, T h) {
    // one forward+backward for the analytic gradients; the build callback
    // registers every input via tape.param and runs backward itself
    std::vector<Tensor<T>> analytic;
    {
        Tape<T> g;
        build(g, inputs);
        for (auto* in : inputs) analytic.push_back(g.grad_of(in));
    }
    double worst = 0.0;
    for (std::size_t which = 0; which < inputs.size(); ++which) {
        Tensor<T>& target = *inputs[which];
        auto f = [&](const Tensor<T>& x) {
            Tensor<T> saved = target;
            target = x;
            Tape<T> t;
            const T value = build(t, inputs);
            target = saved;
            return value;
        };
        worst = std::max(worst, max_rel_error<T>(f, target, analytic[which], h));
    }
    return worst;
}

// Adds small random noise to every parameter. Freshly constructed nets sit
// exactly on relu kinks (zero biases on relu'd inputs make whole channels of
// preactivations exactly zero), where finite differences and subgradients
// legitimately disagree; jittering moves the check to a generic point.
template <typename T>
void jitter_parameters(Network<T>& net, Rng& rng, double stddev = 0.05) {
    for (auto& p : net.parameters())
        for (auto& v : p.tensor->data) v += static_cast<T>(rng.normal(0.0, stddev));
}

// Central-difference check of a 32-bit network against a 64-bit twin with the
// same architecture: parameters are copied across, the numeric directional
// derivative is taken on the double net (finite differences at float step
// sizes would otherwise be swamped by rounding and relu-kink crossings), and
// the float net's analytic gradient is compared against it.
inline double check_network_directional_vs_double(Network<float>& net, Network<double>& twin,
                                                  const Tensor<float>& input,
                                                  const std::vector<std::uint8_t>& y,
                                                  const std::vector<float>& w1,
                                                  const std::vector<float>& w0,
                                                  std::size_t n_directions, double h, Rng& rng) {
    auto params = net.parameters();
    auto twin_params = twin.parameters();
    if (params.size() != twin_params.size())
        throw std::invalid_argument("gradcheck: twin parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i)
        *twin_params[i].tensor = params[i].tensor->template cast<double>();
    const Tensor<double> input_d = input.template cast<double>();
    const std::vector<double> w1_d(w1.begin(), w1.end());
    const std::vector<double> w0_d(w0.begin(), w0.end());

    // analytic gradient from the 32-bit pipeline under test
    std::vector<Tensor<float>> grads;
    {
        Tape<float> tape;
        auto logits = net.forward_logits(tape, tape.leaf(input), /*training=*/false, nullptr);
        auto loss = tape.wbce_loss(logits, y, w1, w0);
        tape.backward(loss);
        for (auto& p : params) grads.push_back(tape.grad_of(p.tensor));
    }
    auto twin_loss = [&]() {
        Tape<double> tape;
        auto logits = twin.forward_logits(tape, tape.leaf(input_d), false, nullptr);
        auto loss = tape.wbce_loss(logits, y, w1_d, w0_d);
        return tape.value(loss)[0];
    };
    double worst = 0.0;
    for (std::size_t d = 0; d < n_directions; ++d) {
        std::vector<Tensor<double>> direction;
        double dot = 0.0;
        for (std::size_t i = 0; i < params.size(); ++i) {
            Tensor<double> v(params[i].tensor->shape);
            for (std::size_t j = 0; j < v.numel(); ++j) {
                v[j] = rng.normal(0.0, 1.0);
                dot += v[j] * static_cast<double>(grads[i][j]);
            }
            direction.push_back(std::move(v));
        }
        auto shift = [&](double scale) {
            for (std::size_t i = 0; i < twin_params.size(); ++i)
                for (std::size_t j = 0; j < twin_params[i].tensor->numel(); ++j)
                    (*twin_params[i].tensor)[j] += scale * direction[i][j];
        };
        shift(h);
        const double plus = twin_loss();
        shift(-2 * h);
        const double minus = twin_loss();
        shift(h);
        const double numeric = (plus - minus) / (2.0 * h);
        const double denom = std::max({std::abs(numeric), std::abs(dot), 1e-4});
        worst = std::max(worst, std::abs(numeric - dot) / denom);
    }
    return worst;
}

}  // namespace ambiweight::gradcheck
