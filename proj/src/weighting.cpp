#include "ambiweight/weighting.hpp"

#include <algorithm>

namespace ambiweight {

ClassWeights class_weights(std::uint64_t f1, std::uint64_t f0) {
    if (f1 + f0 == 0) throw std::invalid_argument("class_weights: empty class (f1 + f0 = 0)");
    ClassWeights w;
    w.f1 = f1;
    w.f0 = f0;
    w.w1 = static_cast<double>(f0) / static_cast<double>(f1 + f0);
    w.w0 = 1.0 - w.w1;
    return w;
}

ModifierDraw draw_modifier(const ModifierConfig& cfg, Rng& rng) {
    ModifierDraw d;
    d.m = std::clamp(rng.normal(cfg.mu, cfg.sigma), 0.0, 1.0);
    d.m_bar = 1.0 - d.m;
    return d;
}

Rng modifier_stream(const ModifierConfig& cfg, std::uint64_t sample_key, std::uint64_t finding_index,
                    std::uint64_t step) {
    return Rng(mix_seed(mix_seed(cfg.seed, sample_key), finding_index, step));
}

HeadWeights effective_weights(PairState pair, const ClassWeights& positive_head,
                              const ClassWeights& negated_head, const ModifierDraw& draw) {
    if (pair == PairState::Contradiction)
        throw std::invalid_argument("effective_weights: contradictory (1,1) sample");
    HeadWeights out{positive_head, negated_head};
    if (pair == PairState::Ambiguous) {
        out.positive.w0 *= draw.m;
        out.negated.w0 *= draw.m_bar;
    }
    return out;
}

}  // namespace ambiweight
