#pragma once

#include <cstdint>
#include <stdexcept>

#include "ambiweight/labelcore.hpp"
#include "ambiweight/rng.hpp"

namespace ambiweight {

// Inverse-frequency class weights for one head: w1 = f0/(f1+f0), w0 = 1 - w1.
struct ClassWeights {
    double w1 = 0.5;
    double w0 = 0.5;
    std::uint64_t f1 = 0;
    std::uint64_t f0 = 0;
};

struct ModifierConfig {
    double mu = 0.5;
    double sigma = 0.05;
    std::uint64_t seed = 0;
    bool enabled = true;  // disabled means multiplier 1 on both heads (baseline)
};

// Multipliers for the ambiguous (0,0) case; m scales the positive head's w0,
// m_bar = 1 - m scales the negated head's w0.
struct ModifierDraw {
    double m = 1.0;
    double m_bar = 0.0;
};

struct HeadWeights {
    ClassWeights positive;
    ClassWeights negated;
};

ClassWeights class_weights(std::uint64_t f1, std::uint64_t f0);

// m ~ Normal(mu, sigma) clamped to [0,1]; one fresh draw per ambiguous
// (sample, finding, step).
ModifierDraw draw_modifier(const ModifierConfig& cfg, Rng& rng);

// Deterministic stream for a given (config seed, sample, finding, step), so
// parallel data loading replays exactly.
Rng modifier_stream(const ModifierConfig& cfg, std::uint64_t sample_key, std::uint64_t finding_index,
                    std::uint64_t step);

// Identity on non-ambiguous pairs; on Ambiguous, multiplies w0 of the positive
// head by m and w0 of the negated head by m_bar. Contradiction is rejected.
HeadWeights effective_weights(PairState pair, const ClassWeights& positive_head,
                              const ClassWeights& negated_head, const ModifierDraw& draw);

}  // namespace ambiweight
