#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ambiweight/checkpoint.hpp"
#include "ambiweight/tensor.hpp"

namespace ambiweight {

template <typename T>
struct NamedParam {
    std::string name;
    Tensor<T>* tensor;
    bool trainable = true;
};

template <typename T>
class Network {
public:
    virtual ~Network() = default;

    // Returns the logits node (batch x head_count). Callers apply
    // tape.sigmoid for probabilities.
    virtual typename Tape<T>::NodeId forward_logits(Tape<T>& tape, typename Tape<T>::NodeId input,
                                                    bool training, Rng* rng) = 0;
    virtual std::vector<NamedParam<T>> parameters() = 0;
    // Non-trainable buffers (batch norm running statistics); snapshotted
    // together with parameters for best-epoch checkpointing.
    virtual std::vector<NamedParam<T>> state_tensors() { return {}; }
    virtual std::size_t head_count() const = 0;
    virtual std::string arch_name() const = 0;
};

template <typename T>
std::size_t count_parameters(Network<T>& net, bool trainable_only = false) {
    std::size_t total = 0;
    for (const auto& p : net.parameters())
        if (!trainable_only || p.trainable) total += p.tensor->numel();
    return total;
}

namespace detail {

template <typename T>
Tensor<T> he_normal(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng) {
    Tensor<T> t(std::move(shape));
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : t.data) v = static_cast<T>(rng.normal(0.0, stddev));
    return t;
}

template <typename T>
struct ConvLayer {
    Tensor<T> kernel;  // F x C x kh x kw
    Tensor<T> bias;    // F
    ConvSpec spec;

    void init(std::size_t out_ch, std::size_t in_ch, std::size_t k, ConvSpec s, Rng& rng) {
        kernel = he_normal<T>({out_ch, in_ch, k, k}, in_ch * k * k, rng);
        bias = Tensor<T>({out_ch});
        spec = s;
    }
};

template <typename T>
struct NormLayer {
    Tensor<T> gamma;
    Tensor<T> beta;
    mutable BatchNormState<T> state;

    void init(std::size_t channels) {
        gamma = Tensor<T>::full({channels}, T(1));
        beta = Tensor<T>({channels});
        state = BatchNormState<T>(channels);
    }
};

}  // namespace detail

struct DilatedBottleneckConfig {
    std::size_t in_channels = 16;
    std::size_t bottleneck_channels = 8;
    std::size_t out_channels = 16;
    std::vector<std::size_t> dilations = {1, 2};
    double spatial_dropout_rate = 0.2;
};

struct StagePlan {
    std::size_t blocks = 2;
    std::size_t channels = 16;
};

struct CustomNetConfig {
    std::size_t input_size = 32;
    std::size_t in_channels = 1;
    std::vector<StagePlan> stages = {{2, 16}, {2, 32}};
    double noise_stddev = 0.1;
    std::size_t head_count = 4;  // 2K
    double final_dropout = 0.5;
    double spatial_dropout_rate = 0.2;
    bool use_batch_norm = true;  // gradient-check builds run norm-free
    std::uint64_t init_seed = 1;
};

struct SimpleCNNConfig {
    std::size_t in_channels = 1;
    // (channels, stride) per 3x3 conv
    std::vector<std::pair<std::size_t, std::size_t>> conv_plan = {{8, 1}, {16, 2}, {32, 2}};
    std::size_t head_count = 4;
    std::uint64_t init_seed = 1;
};

// Residual bottleneck with parallel dilation-1/dilation-2 convolutions,
// pre-activation ordering and spatial dropout.
template <typename T>
class DilatedBottleneckBlock {
public:
    DilatedBottleneckBlock(const DilatedBottleneckConfig& cfg, bool use_batch_norm, Rng& rng)
        : cfg_(cfg), use_bn_(use_batch_norm) {
        if (cfg.in_channels != cfg.out_channels)
            throw std::invalid_argument("DilatedBottleneckBlock: identity skip needs in==out channels");
        reduce_.init(cfg.bottleneck_channels, cfg.in_channels, 1, ConvSpec::same(1), rng);
        for (auto d : cfg.dilations) {
            detail::ConvLayer<T> conv;
            conv.init(cfg.bottleneck_channels, cfg.bottleneck_channels, 3, ConvSpec::same(3, d), rng);
            dilated_.push_back(std::move(conv));
        }
        expand_.init(cfg.out_channels, cfg.bottleneck_channels, 1, ConvSpec::same(1), rng);
        if (use_bn_) {
            norm_in_.init(cfg.in_channels);
            norm_mid_.init(cfg.bottleneck_channels);
            norm_out_.init(cfg.bottleneck_channels);
        }
    }

    typename Tape<T>::NodeId forward(Tape<T>& tape, typename Tape<T>::NodeId x, bool training,
                                     Rng* rng) {
        auto t = preact(tape, x, norm_in_, training);
        t = conv(tape, reduce_, t);
        t = preact(tape, t, norm_mid_, training);
        auto branch = conv(tape, dilated_[0], t);
        for (std::size_t i = 1; i < dilated_.size(); ++i)
            branch = tape.add(branch, conv(tape, dilated_[i], t));
        branch = tape.spatial_dropout(branch, cfg_.spatial_dropout_rate, rng, training);
        branch = preact(tape, branch, norm_out_, training);
        branch = conv(tape, expand_, branch);
        return tape.add(x, branch);
    }

    void collect(const std::string& prefix, std::vector<NamedParam<T>>& out) {
        out.push_back({prefix + ".reduce.kernel", &reduce_.kernel});
        out.push_back({prefix + ".reduce.bias", &reduce_.bias});
        for (std::size_t i = 0; i < dilated_.size(); ++i) {
            out.push_back({prefix + ".dil" + std::to_string(cfg_.dilations[i]) + ".kernel", &dilated_[i].kernel});
            out.push_back({prefix + ".dil" + std::to_string(cfg_.dilations[i]) + ".bias", &dilated_[i].bias});
        }
        out.push_back({prefix + ".expand.kernel", &expand_.kernel});
        out.push_back({prefix + ".expand.bias", &expand_.bias});
        if (use_bn_) {
            const detail::NormLayer<T>* norms[] = {&norm_in_, &norm_mid_, &norm_out_};
            const char* names[] = {".norm_in", ".norm_mid", ".norm_out"};
            for (int i = 0; i < 3; ++i) {
                out.push_back({prefix + names[i] + ".gamma", const_cast<Tensor<T>*>(&norms[i]->gamma)});
                out.push_back({prefix + names[i] + ".beta", const_cast<Tensor<T>*>(&norms[i]->beta)});
            }
        }
    }

    void collect_state(const std::string& prefix, std::vector<NamedParam<T>>& out) {
        if (!use_bn_) return;
        detail::NormLayer<T>* norms[] = {&norm_in_, &norm_mid_, &norm_out_};
        const char* names[] = {".norm_in", ".norm_mid", ".norm_out"};
        for (int i = 0; i < 3; ++i) {
            out.push_back({prefix + names[i] + ".running_mean", &norms[i]->state.running_mean, false});
            out.push_back({prefix + names[i] + ".running_var", &norms[i]->state.running_var, false});
        }
    }

    // Zeroing the residual branch makes the block an identity map.
    void zero_residual_branch() {
        std::fill(expand_.kernel.data.begin(), expand_.kernel.data.end(), T(0));
        std::fill(expand_.bias.data.begin(), expand_.bias.data.end(), T(0));
    }

private:
    typename Tape<T>::NodeId preact(Tape<T>& tape, typename Tape<T>::NodeId x,
                                    detail::NormLayer<T>& norm, bool training) {
        if (use_bn_)
            x = tape.batch_norm(x, tape.param(&norm.gamma), tape.param(&norm.beta), &norm.state, training);
        return tape.relu(x);
    }
    typename Tape<T>::NodeId conv(Tape<T>& tape, detail::ConvLayer<T>& layer,
                                  typename Tape<T>::NodeId x) {
        return tape.conv2d(x, tape.param(&layer.kernel), tape.param(&layer.bias), layer.spec);
    }

    DilatedBottleneckConfig cfg_;
    bool use_bn_;
    detail::ConvLayer<T> reduce_;
    std::vector<detail::ConvLayer<T>> dilated_;
    detail::ConvLayer<T> expand_;
    detail::NormLayer<T> norm_in_, norm_mid_, norm_out_;
};

// Gaussian noise -> stem conv -> cascaded DB stages with strided 1x1
// downsampling between stages -> GAP -> dropout -> dense -> 2K logits.
template <typename T>
class CustomNet : public Network<T> {
public:
    explicit CustomNet(const CustomNetConfig& cfg) : cfg_(cfg) {
        if (cfg.stages.empty()) throw std::invalid_argument("CustomNet: empty stage plan");
        if (cfg.head_count % 2 != 0) throw std::invalid_argument("CustomNet: head count must be even");
        if (cfg.input_size >> cfg.stages.size() == 0)
            throw std::invalid_argument("CustomNet: input too small for stage count");
        Rng rng(mix_seed(cfg.init_seed, 0x6d6f64656cULL));
        stem_.init(cfg.stages[0].channels, cfg.in_channels, 3, ConvSpec::same(3), rng);
        for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
            if (s > 0) {
                detail::ConvLayer<T> down;
                down.init(cfg.stages[s].channels, cfg.stages[s - 1].channels, 1,
                          ConvSpec{2, 1, 0}, rng);
                downsample_.push_back(std::move(down));
            }
            DilatedBottleneckConfig bc;
            bc.in_channels = bc.out_channels = cfg.stages[s].channels;
            bc.bottleneck_channels = std::max<std::size_t>(1, cfg.stages[s].channels / 2);
            bc.spatial_dropout_rate = cfg.spatial_dropout_rate;
            for (std::size_t b = 0; b < cfg.stages[s].blocks; ++b)
                blocks_.emplace_back(std::make_unique<DilatedBottleneckBlock<T>>(bc, cfg.use_batch_norm, rng));
            blocks_per_stage_.push_back(cfg.stages[s].blocks);
        }
        if (cfg.use_batch_norm) final_norm_.init(cfg.stages.back().channels);
        const std::size_t feat = cfg.stages.back().channels;
        head_weight_ = detail::he_normal<T>({cfg.head_count, feat}, feat, rng);
        head_bias_ = Tensor<T>({cfg.head_count});
    }

    typename Tape<T>::NodeId forward_logits(Tape<T>& tape, typename Tape<T>::NodeId input,
                                            bool training, Rng* rng) override {
        auto x = tape.gaussian_noise(input, cfg_.noise_stddev, rng, training);
        x = tape.conv2d(x, tape.param(&stem_.kernel), tape.param(&stem_.bias), stem_.spec);
        std::size_t block_idx = 0;
        for (std::size_t s = 0; s < blocks_per_stage_.size(); ++s) {
            if (s > 0)
                x = tape.conv2d(x, tape.param(&downsample_[s - 1].kernel),
                                tape.param(&downsample_[s - 1].bias), downsample_[s - 1].spec);
            for (std::size_t b = 0; b < blocks_per_stage_[s]; ++b)
                x = blocks_[block_idx++]->forward(tape, x, training, rng);
        }
        if (cfg_.use_batch_norm)
            x = tape.batch_norm(x, tape.param(&final_norm_.gamma), tape.param(&final_norm_.beta),
                                &final_norm_.state, training);
        x = tape.relu(x);
        x = tape.global_avg_pool(x);
        x = tape.dropout(x, cfg_.final_dropout, rng, training);
        return tape.dense(x, tape.param(&head_weight_), tape.param(&head_bias_));
    }

    std::vector<NamedParam<T>> parameters() override {
        std::vector<NamedParam<T>> out;
        out.push_back({"stem.kernel", &stem_.kernel});
        out.push_back({"stem.bias", &stem_.bias});
        for (std::size_t i = 0; i < downsample_.size(); ++i) {
            out.push_back({"down" + std::to_string(i) + ".kernel", &downsample_[i].kernel});
            out.push_back({"down" + std::to_string(i) + ".bias", &downsample_[i].bias});
        }
        for (std::size_t i = 0; i < blocks_.size(); ++i)
            blocks_[i]->collect("block" + std::to_string(i), out);
        if (cfg_.use_batch_norm) {
            out.push_back({"final_norm.gamma", &final_norm_.gamma});
            out.push_back({"final_norm.beta", &final_norm_.beta});
        }
        out.push_back({"head.weight", &head_weight_});
        out.push_back({"head.bias", &head_bias_});
        return out;
    }

    std::vector<NamedParam<T>> state_tensors() override {
        std::vector<NamedParam<T>> out;
        for (std::size_t i = 0; i < blocks_.size(); ++i)
            blocks_[i]->collect_state("block" + std::to_string(i), out);
        if (cfg_.use_batch_norm) {
            out.push_back({"final_norm.running_mean", &final_norm_.state.running_mean, false});
            out.push_back({"final_norm.running_var", &final_norm_.state.running_var, false});
        }
        return out;
    }

    std::size_t head_count() const override { return cfg_.head_count; }
    std::string arch_name() const override { return "db_net"; }
    const CustomNetConfig& config() const { return cfg_; }
    DilatedBottleneckBlock<T>& block(std::size_t i) { return *blocks_.at(i); }

private:
    CustomNetConfig cfg_;
    detail::ConvLayer<T> stem_;
    std::vector<detail::ConvLayer<T>> downsample_;
    std::vector<std::unique_ptr<DilatedBottleneckBlock<T>>> blocks_;
    std::vector<std::size_t> blocks_per_stage_;
    detail::NormLayer<T> final_norm_;
    Tensor<T> head_weight_;
    Tensor<T> head_bias_;
};

// Plain 3x3 conv stack with ReLU, GAP and a dense head. The second
// architecture used to show the weighting scheme is model-agnostic.
template <typename T>
class SimpleCNN : public Network<T> {
public:
    explicit SimpleCNN(const SimpleCNNConfig& cfg) : cfg_(cfg) {
        if (cfg.conv_plan.empty()) throw std::invalid_argument("SimpleCNN: empty conv plan");
        Rng rng(mix_seed(cfg.init_seed, 0x73696d706cULL));
        std::size_t in_ch = cfg.in_channels;
        for (auto [channels, stride] : cfg.conv_plan) {
            detail::ConvLayer<T> conv;
            conv.init(channels, in_ch, 3, ConvSpec{stride, 1, 1}, rng);
            convs_.push_back(std::move(conv));
            in_ch = channels;
        }
        head_weight_ = detail::he_normal<T>({cfg.head_count, in_ch}, in_ch, rng);
        head_bias_ = Tensor<T>({cfg.head_count});
    }

    typename Tape<T>::NodeId forward_logits(Tape<T>& tape, typename Tape<T>::NodeId input,
                                            bool /*training*/, Rng* /*rng*/) override {
        auto x = input;
        for (auto& conv : convs_) {
            x = tape.conv2d(x, tape.param(&conv.kernel), tape.param(&conv.bias), conv.spec);
            x = tape.relu(x);
        }
        x = tape.global_avg_pool(x);
        return tape.dense(x, tape.param(&head_weight_), tape.param(&head_bias_));
    }

    std::vector<NamedParam<T>> parameters() override {
        std::vector<NamedParam<T>> out;
        for (std::size_t i = 0; i < convs_.size(); ++i) {
            out.push_back({"conv" + std::to_string(i) + ".kernel", &convs_[i].kernel});
            out.push_back({"conv" + std::to_string(i) + ".bias", &convs_[i].bias});
        }
        out.push_back({"head.weight", &head_weight_});
        out.push_back({"head.bias", &head_bias_});
        return out;
    }

    std::size_t head_count() const override { return cfg_.head_count; }
    std::string arch_name() const override { return "simple_cnn"; }

private:
    SimpleCNNConfig cfg_;
    std::vector<detail::ConvLayer<T>> convs_;
    Tensor<T> head_weight_;
    Tensor<T> head_bias_;
};

template <typename T>
void save_network(Network<T>& net, const std::string& path) {
    std::vector<std::pair<std::string, const Tensor<float>*>> tensors;
    std::vector<Tensor<float>> storage;
    auto params = net.parameters();
    for (auto& s : net.state_tensors()) params.push_back(s);
    storage.reserve(params.size());
    for (const auto& p : params) storage.push_back(p.tensor->template cast<float>());
    for (std::size_t i = 0; i < params.size(); ++i) tensors.emplace_back(params[i].name, &storage[i]);
    save_checkpoint(path, tensors);
}

template <typename T>
void load_network(Network<T>& net, const std::string& path) {
    auto loaded = load_checkpoint(path);
    auto params = net.parameters();
    for (auto& s : net.state_tensors()) params.push_back(s);
    if (loaded.size() != params.size())
        throw std::runtime_error("checkpoint: tensor count mismatch (" + std::to_string(loaded.size()) +
                                 " vs " + std::to_string(params.size()) + ")");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (loaded[i].first != params[i].name)
            throw std::runtime_error("checkpoint: tensor name mismatch: " + loaded[i].first);
        if (loaded[i].second.shape != params[i].tensor->shape)
            throw std::runtime_error("checkpoint: shape mismatch for " + loaded[i].first);
        *params[i].tensor = loaded[i].second.template cast<T>();
    }
}

}  // namespace ambiweight
