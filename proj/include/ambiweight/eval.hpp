#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ambiweight/data.hpp"
#include "ambiweight/models.hpp"
#include "ambiweight/weighting.hpp"

namespace ambiweight {

struct RocResult {
    std::size_t head_id = 0;
    double auc = 0.0;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
};

// Mann-Whitney AUC: fraction of (pos, neg) pairs with score_pos > score_neg,
// ties counted 0.5. Throws if either class is empty.
RocResult roc_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

// Sample indices whose pair state for the finding is PositiveExists or
// NegationExists. Evaluation targets come from the pair bits A and A-bar.
std::vector<std::size_t> filter_unambiguous(const Dataset& dataset,
                                            const std::vector<std::size_t>& subset,
                                            std::size_t finding_index);

struct TrainConfig {
    double lr = 1e-4;
    std::size_t batch_size = 64;
    std::size_t epochs = 20;
    AugmentConfig augment;
    bool augment_enabled = true;
    ModifierConfig modifier;  // modifier.enabled = false -> baseline
    bool class_weights_enabled = true;
    std::uint64_t seed = 0;
};

struct EpochLog {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_auc_mean = 0.0;
};

struct TrainResult {
    std::vector<EpochLog> log;
    std::size_t best_epoch = 0;
    double best_val_auc = 0.0;
    std::vector<ClassWeights> head_weights;  // per head, from the training split
};

using NetworkF = Network<float>;

// Per-head inverse-frequency weights over the given subset.
std::vector<ClassWeights> compute_head_weights(const Dataset& dataset,
                                               const std::vector<std::size_t>& subset);

// Forward in inference mode, batched; returns batch x heads sigmoid scores.
std::vector<std::vector<double>> predict(NetworkF& net, const Dataset& dataset,
                                         const std::vector<std::size_t>& subset,
                                         std::size_t batch_size = 64);

// Per-head AUC on the unambiguous-filtered subset. Heads whose filtered set
// lacks a class come back empty.
std::vector<std::optional<RocResult>> evaluate(NetworkF& net, const Dataset& dataset,
                                               const std::vector<std::size_t>& subset);

// Full training loop: augment -> forward -> pair states -> modifier draws ->
// effective weights -> loss -> backward -> Adam. Keeps the parameters of the
// best validation epoch. Throws on non-finite loss.
TrainResult train(NetworkF& net, const Dataset& dataset, const std::vector<std::size_t>& train_idx,
                  const std::vector<std::size_t>& val_idx, const TrainConfig& cfg);

struct SweepRow {
    std::string arm;  // "baseline", "unweighted" or the mu value
    std::uint64_t seed = 0;
    std::string head;  // finding name or finding name with "no " prefix
    double auc = 0.0;
};

struct SweepConfig {
    std::vector<double> mu_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    double sigma = 0.05;
    bool include_unweighted = false;
    std::size_t jobs = 1;  // parallel arms; results are identical at any value
    TrainConfig train;
    std::function<std::unique_ptr<NetworkF>(std::uint64_t seed)> make_network;
};

struct SweepReport {
    std::vector<SweepRow> rows;
    std::vector<std::string> head_names;
    std::vector<std::string> failures;  // annotated, not fatal

    // mean AUC across seeds for one (arm, head); NaN when absent
    double mean_auc(const std::string& arm, const std::string& head) const;
    // arm from the mu grid maximizing mean AUC over all heads
    std::string best_mu() const;
};

std::vector<std::string> head_names(const Dataset& dataset);

SweepReport mu_sweep(const Dataset& dataset, const SplitIndices& splits, const SweepConfig& cfg);

void write_sweep_csv(const SweepReport& report, const std::string& path);
SweepReport read_sweep_csv(const std::string& path);
void write_training_log_csv(const std::vector<EpochLog>& log, const std::string& path);

// One line chart per head family (positive heads, negated heads): AUC vs mu,
// dashed baseline level per head.
void write_sweep_svg(const SweepReport& report, const std::string& positive_path,
                     const std::string& negated_path);

}  // namespace ambiweight
