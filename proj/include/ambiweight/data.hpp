#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ambiweight/labelcore.hpp"
#include "ambiweight/rng.hpp"

namespace ambiweight {

enum class ShapeKind : std::uint8_t { Blob, Line, Ring };

ShapeKind shape_kind_from_string(const std::string& s);
const char* to_string(ShapeKind k);

struct FindingSpec {
    std::string name;
    ShapeKind shape = ShapeKind::Blob;
    double prevalence = 0.3;
    // Report policy: remaining probability mass becomes NoMention.
    double p_affirm_given_present = 0.9;
    double p_negate_given_absent = 0.5;
};

struct SynthConfig {
    std::size_t n_samples = 1000;
    std::size_t image_size = 32;
    std::vector<FindingSpec> findings = {
        {"blob", ShapeKind::Blob, 0.3, 0.9, 0.5},
        {"line", ShapeKind::Line, 0.3, 0.9, 0.5},
    };
    double background_noise = 0.05;
    std::uint64_t seed = 0;
};

struct Sample {
    std::string sample_id;
    std::vector<float> image;  // H x W, values in [0,1]
    std::vector<std::uint8_t> truth;       // audits and generation only
    std::vector<MentionState> states;      // observed labels used for training
};

struct Dataset {
    std::size_t image_size = 0;
    std::vector<std::string> finding_names;
    std::vector<Sample> samples;

    std::size_t head_count() const { return 2 * finding_names.size(); }
    LabelMatrix label_matrix(const FindingVocabulary& vocab) const;
    FindingVocabulary vocabulary() const;
};

struct AugmentConfig {
    double rotation_deg = 10.0;
    double shift_frac = 0.10;
    double scale_min = 0.95;
    double scale_max = 1.05;
    double apply_prob = 0.8;
};

// Pure function of (cfg.seed, cfg); per-sample streams keyed by sample index.
Dataset generate(const SynthConfig& cfg);

struct SplitIndices {
    std::vector<std::size_t> train, val, test;
};

// Deterministic shuffle-then-cut split; disjoint and exhaustive.
SplitIndices split(std::size_t n_samples, double train_frac, double val_frac, double test_frac,
                   std::uint64_t seed);

// With probability apply_prob, one rotation+shift+scale composite with
// bilinear resampling and zero fill; otherwise exact identity.
std::vector<float> augment(const std::vector<float>& image, std::size_t size,
                           const AugmentConfig& cfg, Rng& rng);

void write_pgm(const std::string& path, const std::vector<float>& image, std::size_t width,
               std::size_t height);
std::vector<float> read_pgm(const std::string& path, std::size_t& width, std::size_t& height);

enum class IngestMode : std::uint8_t { Strict, Lenient };

// Manifest CSV: header `sample_id,image_path,<finding>_state,...`; image
// paths resolve relative to the manifest location. Truth bits are never
// written. In strict mode a (1,1) pair aborts ingestion; lenient mode drops
// the row and reports the count.
void save_manifest(const Dataset& dataset, const std::string& dir,
                   const std::string& manifest_name = "manifest.csv");
Dataset load_manifest(const std::string& manifest_path, IngestMode mode = IngestMode::Strict,
                      std::size_t* dropped = nullptr);

}  // namespace ambiweight
