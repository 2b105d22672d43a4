// Acceptance gate: one pass/fail line per criterion, exit 0 only when all
// criteria hold. Tolerances are pinned here and should not be loosened.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ambiweight/eval.hpp"
#include "ambiweight/textlabeler.hpp"
#include "ambiweight/gradcheck.hpp"

using namespace ambiweight;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool passed = false;
    std::string detail;
};

Tensor<double> random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
    Tensor<double> t(std::move(shape));
    for (auto& v : t.data) v = rng.normal(0.0, scale);
    return t;
}

// ---------------------------------------------------------------- criterion 1

Outcome check_gradients() {
    const auto t0 = Clock::now();
    constexpr double kTol = 1e-6;
    constexpr double kH = 1e-5;
    Rng rng(101);
    double worst = 0.0;
    std::string worst_op;
    auto track = [&](const std::string& op, double err) {
        if (err > worst) {
            worst = err;
            worst_op = op;
        }
    };

    {  // conv2d across stride/dilation, with bias
        for (const auto& [stride, dilation] :
             std::vector<std::pair<std::size_t, std::size_t>>{{1, 1}, {1, 2}, {2, 1}}) {
            Tensor<double> x = random_tensor({2, 2, 6, 6}, rng);
            Tensor<double> k = random_tensor({3, 2, 3, 3}, rng);
            Tensor<double> b = random_tensor({3}, rng);
            ConvSpec spec{stride, dilation, dilation};
            auto build = [spec](Tape<double>& t, const std::vector<Tensor<double>*>& in) {
                auto y = t.conv2d(t.param(in[0]), t.param(in[1]), t.param(in[2]), spec);
                auto s = t.sum(t.sigmoid(y));
                t.backward(s);
                return t.value(s)[0];
            };
            track("conv2d", gradcheck::check_op<double>(build, {&x, &k, &b}, kH));
        }
    }
    {  // dense + relu + sigmoid + gap + add chain
        Tensor<double> x = random_tensor({2, 3, 4, 4}, rng);
        for (auto& v : x.data)
            if (std::abs(v) < 0.05) v += 0.1;  // stay off the relu kink
        Tensor<double> w = random_tensor({2, 3}, rng);
        Tensor<double> b = random_tensor({2}, rng);
        auto build = [](Tape<double>& t, const std::vector<Tensor<double>*>& in) {
            auto a = t.relu(t.param(in[0]));
            auto d = t.dense(t.global_avg_pool(a), t.param(in[1]), t.param(in[2]));
            auto sg = t.sigmoid(d);
            auto s = t.sum(t.add(sg, sg));
            t.backward(s);
            return t.value(s)[0];
        };
        track("dense/relu/sigmoid/gap", gradcheck::check_op<double>(build, {&x, &w, &b}, kH));
    }
    {  // batch norm, training mode
        Tensor<double> x = random_tensor({3, 2, 4, 4}, rng);
        Tensor<double> gamma = random_tensor({2}, rng, 0.3);
        for (auto& g : gamma.data) g += 1.0;
        Tensor<double> beta = random_tensor({2}, rng, 0.3);
        auto build = [](Tape<double>& t, const std::vector<Tensor<double>*>& in) {
            BatchNormState<double> state(2);
            auto y = t.batch_norm(t.param(in[0]), t.param(in[1]), t.param(in[2]), &state, true);
            auto s = t.sum(t.sigmoid(y));
            t.backward(s);
            return t.value(s)[0];
        };
        // wider step than kH: the summed loss is ~50, so central differences
        // at 1e-5 are dominated by cancellation noise on the small per-element
        // gradients batch norm produces
        track("batch_norm", gradcheck::check_op<double>(build, {&x, &gamma, &beta}, 1e-4));
    }
    {  // dropout family with a frozen mask stream
        Tensor<double> x = random_tensor({2, 4, 3, 3}, rng);
        auto build = [](Tape<double>& t, const std::vector<Tensor<double>*>& in) {
            Rng mask(5);  // same mask every evaluation
            auto a = t.dropout(t.param(in[0]), 0.3, &mask, true);
            a = t.spatial_dropout(a, 0.2, &mask, true);
            a = t.gaussian_noise(a, 0.1, &mask, true);
            auto s = t.sum(t.sigmoid(a));
            t.backward(s);
            return t.value(s)[0];
        };
        track("dropout/noise", gradcheck::check_op<double>(build, {&x}, kH));
    }
    {  // fused weighted BCE over logits
        Tensor<double> z = random_tensor({3, 4}, rng);
        std::vector<std::uint8_t> y = {1, 0, 1, 0, 0, 1, 0, 1, 1, 1, 0, 0};
        std::vector<double> w1(12), w0(12);
        for (auto& v : w1) v = rng.uniform(0.1, 1.0);
        for (auto& v : w0) v = rng.uniform(0.1, 1.0);
        auto build = [&](Tape<double>& t, const std::vector<Tensor<double>*>& in) {
            auto loss = t.wbce_loss(t.param(in[0]), y, w1, w0);
            t.backward(loss);
            return t.value(loss)[0];
        };
        track("wbce_loss", gradcheck::check_op<double>(build, {&z}, kH));
    }
    if (worst >= kTol)
        return {false, "per-op worst rel error " + std::to_string(worst) + " (" + worst_op + ")"};

    // end-to-end at 32-bit on the desk-scale custom net (inference mode, so
    // batch norm is a fixed affine map and dropout is the identity)
    CustomNetConfig cfg;  // 32x32, stages {2,16},{2,32}, 4 heads
    cfg.init_seed = 7;
    CustomNet<float> net(cfg);
    CustomNet<double> twin(cfg);
    Rng jitter_rng(102);
    gradcheck::jitter_parameters(net, jitter_rng);  // move off the relu kinks at init
    Rng img_rng(103);
    Tensor<float> input({2, 1, 32, 32});
    for (auto& v : input.data) v = static_cast<float>(img_rng.uniform());
    std::vector<std::uint8_t> y = {1, 0, 0, 1, 0, 1, 1, 0};
    std::vector<float> w1(8, 0.7f), w0(8, 0.3f);
    Rng dir_rng(104);
    const double e2e = gradcheck::check_network_directional_vs_double(net, twin, input, y, w1, w0,
                                                                      3, 1e-7, dir_rng);
    const double elapsed = seconds_since(t0);
    std::ostringstream detail;
    detail << "per-op worst " << worst << " (" << worst_op << "), end-to-end " << e2e << ", "
           << elapsed << " s";
    if (e2e >= 1e-3) return {false, detail.str()};
    if (elapsed >= 120.0) return {false, detail.str() + " (over the 2 min budget)"};
    return {true, detail.str()};
}

// ---------------------------------------------------------------- criterion 2

Outcome check_formulas() {
    Rng rng(201);
    // inverse-frequency weights, exact identities on 1,000 random count pairs
    for (int i = 0; i < 1000; ++i) {
        const auto f1 = rng.index(100000);
        const auto f0 = rng.index(100000);
        if (f1 + f0 == 0) continue;
        const auto w = class_weights(f1, f0);
        if (w.w1 != static_cast<double>(f0) / static_cast<double>(f1 + f0))
            return {false, "w1 != f0/(f1+f0) at f1=" + std::to_string(f1)};
        if (w.w1 + w.w0 != 1.0) return {false, "w1+w0 != 1 at f1=" + std::to_string(f1)};
    }

    // loss vs a direct long-double evaluation
    double worst_rel = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.index(8), h = 1 + rng.index(6);
        LossBatch<double> batch{n, h, {}, {}, {}, {}};
        for (std::size_t i = 0; i < n * h; ++i) {
            batch.y.push_back(rng.bernoulli(0.5) ? 1 : 0);
            batch.p.push_back(rng.uniform(1e-6, 1.0 - 1e-6));
            batch.w1.push_back(rng.uniform(0.0, 1.0));
            batch.w0.push_back(rng.uniform(0.0, 1.0));
        }
        long double direct = 0.0L;
        for (std::size_t head = 0; head < h; ++head) {
            long double head_sum = 0.0L;
            for (std::size_t s = 0; s < n; ++s) {
                const std::size_t i = s * h + head;
                const long double p = batch.p[i];
                head_sum += batch.y[i] ? -batch.w1[i] * std::log(p)
                                       : -batch.w0[i] * std::log(1.0L - p);
            }
            direct += head_sum / static_cast<long double>(n);
        }
        direct /= static_cast<long double>(h);
        const double got = multilabel_loss(batch);
        const double rel = std::abs(got - static_cast<double>(direct)) /
                           std::max(1e-30, std::abs(static_cast<double>(direct)));
        worst_rel = std::max(worst_rel, rel);
    }
    if (worst_rel >= 1e-12)
        return {false, "loss rel error " + std::to_string(worst_rel) + " vs direct evaluation"};

    // gaussian modifier draws: empirical mean and hard [0,1] bounds
    ModifierConfig mc;
    mc.mu = 0.8;
    mc.sigma = 0.05;
    mc.seed = 77;
    mc.enabled = true;
    double sum = 0.0;
    constexpr int kDraws = 100000;
    for (int i = 0; i < kDraws; ++i) {
        Rng stream = modifier_stream(mc, i, 0, 0);
        const auto d = draw_modifier(mc, stream);
        if (d.m < 0.0 || d.m > 1.0) return {false, "modifier draw out of [0,1]"};
        if (d.m_bar != 1.0 - d.m) return {false, "m_bar != 1 - m"};
        sum += d.m;
    }
    const double mean = sum / kDraws;
    std::ostringstream detail;
    detail << "weights exact on 1000 pairs, loss rel err " << worst_rel << ", modifier mean "
           << mean;
    if (std::abs(mean - mc.mu) > 0.002) return {false, detail.str()};
    return {true, detail.str()};
}

// ---------------------------------------------------------------- criterion 3

Outcome check_pair_logic() {
    if (pair_state(1, 1) != PairState::Contradiction) return {false, "(1,1) != contradiction"};
    if (pair_state(1, 0) != PairState::PositiveExists) return {false, "(1,0) != positive-exists"};
    if (pair_state(0, 1) != PairState::NegationExists) return {false, "(0,1) != negation-exists"};
    if (pair_state(0, 0) != PairState::Ambiguous) return {false, "(0,0) != ambiguous"};

    FindingVocabulary vocab({{0, "a", {}}, {1, "b", {}}, {2, "c", {}}});
    Rng rng(301);
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<MentionState> states;
        for (int f = 0; f < 3; ++f)
            states.push_back(static_cast<MentionState>(rng.index(3)));
        auto row = encode_targets(states, vocab);
        for (std::size_t f = 0; f < 3; ++f)
            if (row[2 * f] == 1 && row[2 * f + 1] == 1)
                return {false, "encode_targets produced a (1,1) pair"};
    }

    // strict ingestion refuses a contradictory manifest row
    const fs::path dir = fs::temp_directory_path() / "ambiweight_acceptance_c3";
    fs::remove_all(dir);
    fs::create_directories(dir / "images");
    write_pgm((dir / "images" / "s0.pgm").string(), std::vector<float>(16, 0.5f), 4, 4);
    {
        std::ofstream out(dir / "manifest.csv");
        out << "sample_id,image_path,a_state\n";
        out << "s0,images/s0.pgm,contradiction\n";
    }
    bool threw = false;
    try {
        load_manifest((dir / "manifest.csv").string(), IngestMode::Strict);
    } catch (const std::exception&) {
        threw = true;
    }
    fs::remove_all(dir);
    if (!threw) return {false, "strict ingestion accepted a (1,1) row"};
    return {true, "4-case table exhaustive, encoder never emits (1,1), strict ingest rejects it"};
}

// ---------------------------------------------------------------- criterion 4

Outcome check_auc_oracle() {
    Rng rng(401);
    std::size_t checked = 0;
    for (int instance = 0; instance < 200; ++instance) {
        // mostly small, a handful at the 10^4 cap
        const std::size_t n = instance % 40 == 0 ? 10000 : 2 + rng.index(1500);
        std::vector<double> scores(n);
        std::vector<std::uint8_t> labels(n);
        const std::size_t levels = 2 + rng.index(12);  // quantized scores force ties
        for (auto& s : scores) s = static_cast<double>(rng.index(levels)) / static_cast<double>(levels);
        for (auto& l : labels) l = rng.bernoulli(rng.uniform(0.2, 0.8)) ? 1 : 0;
        labels[0] = 1;
        labels[n - 1] = 0;

        const double fast = roc_auc(scores, labels).auc;
        double wins = 0.0;
        std::size_t n1 = 0, n0 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!labels[i]) {
                ++n0;
                continue;
            }
            ++n1;
            for (std::size_t j = 0; j < n; ++j) {
                if (labels[j]) continue;
                if (scores[i] > scores[j]) wins += 1.0;
                else if (scores[i] == scores[j]) wins += 0.5;
            }
        }
        const double brute = wins / (static_cast<double>(n1) * static_cast<double>(n0));
        if (fast != brute) {
            return {false, "mismatch at instance " + std::to_string(instance) + ": fast " +
                               std::to_string(fast) + " vs brute " + std::to_string(brute)};
        }
        ++checked;
    }
    return {true, std::to_string(checked) + " random tied instances, exact equality"};
}

// ---------------------------------------------------------------- criterion 5

Outcome check_ambiguity_calibration() {
    // Solve the report policy for three target no-mention rates. With
    // prevalence p and affirm probability pa,
    //   P(NoMention) = p (1 - pa) + (1 - p)(1 - pn).
    const double prevalence = 0.3, p_affirm = 0.9;
    const std::vector<double> targets = {0.50, 0.23, 0.66};
    SynthConfig cfg;
    cfg.n_samples = 10000;
    cfg.image_size = 16;
    cfg.seed = 501;
    cfg.findings.clear();
    const ShapeKind shapes[] = {ShapeKind::Blob, ShapeKind::Line, ShapeKind::Ring};
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double pn = 1.0 - (targets[i] - prevalence * (1.0 - p_affirm)) / (1.0 - prevalence);
        cfg.findings.push_back({"f" + std::to_string(i), shapes[i], prevalence, p_affirm, pn});
    }
    auto ds = generate(cfg);
    std::ostringstream detail;
    for (std::size_t f = 0; f < targets.size(); ++f) {
        std::size_t silent = 0;
        for (const auto& s : ds.samples) silent += s.states[f] == MentionState::NoMention;
        const double rate = static_cast<double>(silent) / static_cast<double>(ds.samples.size());
        detail << (f ? ", " : "") << "target " << targets[f] << " got " << rate;
        if (std::abs(rate - targets[f]) > 0.02) return {false, detail.str()};
    }
    return {true, detail.str()};
}

// ---------------------------------------------------------------- criterion 6

struct ArmScores {
    double negated_mean = 0.0;
    double positive_mean = 0.0;
};

Outcome check_central_claim() {
    const auto t0 = Clock::now();

    // Pinned desk-scale config: two negated pairs, a report policy under
    // which most truly-absent findings go unmentioned, so the (0,0) samples
    // push the negated heads toward false negatives unless down-weighted.
    SynthConfig synth;
    synth.n_samples = 4000;
    synth.image_size = 32;
    synth.seed = 601;
    synth.background_noise = 0.25;
    synth.findings = {
        {"blob", ShapeKind::Blob, 0.35, 0.95, 0.08},
        {"line", ShapeKind::Line, 0.35, 0.95, 0.08},
    };
    auto ds = generate(synth);
    auto splits = split(ds.samples.size(), 0.7, 0.1, 0.2, synth.seed);

    TrainConfig base;
    base.lr = 1e-3;
    base.batch_size = 64;
    base.epochs = 6;
    base.augment_enabled = false;
    base.class_weights_enabled = true;

    // Six seeds: the negated-head gain distribution is heavy-tailed (the
    // modifier mostly rescues runs whose baseline negated head collapses
    // early), so a three-seed mean is too noisy to pin.
    const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6};

    auto make_db = [](std::uint64_t seed) -> std::unique_ptr<NetworkF> {
        CustomNetConfig cfg;
        cfg.input_size = 32;
        cfg.stages = {{1, 8}, {1, 16}};
        cfg.head_count = 4;
        cfg.noise_stddev = 0.05;
        cfg.init_seed = seed;
        return std::make_unique<CustomNet<float>>(cfg);
    };
    auto make_simple = [](std::uint64_t seed) -> std::unique_ptr<NetworkF> {
        SimpleCNNConfig cfg;
        cfg.conv_plan = {{8, 2}, {16, 2}};
        cfg.head_count = 4;
        cfg.init_seed = seed;
        return std::make_unique<SimpleCNN<float>>(cfg);
    };

    auto run_arm = [&](const std::function<std::unique_ptr<NetworkF>(std::uint64_t)>& factory,
                       bool modifiers) -> ArmScores {
        double neg_sum = 0.0, pos_sum = 0.0;
        std::size_t neg_n = 0, pos_n = 0;
        for (auto seed : seeds) {
            auto net = factory(seed);
            TrainConfig tc = base;
            tc.seed = seed;
            tc.modifier.enabled = modifiers;
            tc.modifier.mu = 0.8;
            tc.modifier.sigma = 0.05;
            tc.modifier.seed = seed;
            train(*net, ds, splits.train, splits.val, tc);
            auto results = evaluate(*net, ds, splits.test);
            for (std::size_t h = 0; h < results.size(); ++h) {
                if (!results[h]) continue;
                if (h % 2 == 0) {
                    pos_sum += results[h]->auc;
                    ++pos_n;
                } else {
                    neg_sum += results[h]->auc;
                    ++neg_n;
                }
            }
        }
        if (neg_n == 0 || pos_n == 0) return {std::nan(""), std::nan("")};
        return {neg_sum / static_cast<double>(neg_n), pos_sum / static_cast<double>(pos_n)};
    };

    std::ostringstream detail;
    bool ok = true;
    const std::pair<const char*, std::function<std::unique_ptr<NetworkF>(std::uint64_t)>> archs[] = {
        {"db_net", make_db},
        {"simple_cnn", make_simple},
    };
    for (const auto& [name, factory] : archs) {
        const ArmScores baseline = run_arm(factory, false);
        const ArmScores weighted = run_arm(factory, true);
        const double neg_gain = weighted.negated_mean - baseline.negated_mean;
        const double pos_drop = baseline.positive_mean - weighted.positive_mean;
        detail << name << ": negated " << baseline.negated_mean << " -> " << weighted.negated_mean
               << " (gain " << neg_gain << "), positive " << baseline.positive_mean << " -> "
               << weighted.positive_mean << " (drop " << pos_drop << "); ";
        if (!(neg_gain >= 0.03)) ok = false;
        if (!(pos_drop <= 0.02)) ok = false;
    }
    const double elapsed = seconds_since(t0);
    detail << elapsed << " s";
    if (elapsed > 1800.0) ok = false;
    return {ok, detail.str()};
}

// ---------------------------------------------------------------- criterion 7

Outcome check_unambiguous_filter() {
    Rng rng(701);
    for (int trial = 0; trial < 50; ++trial) {
        SynthConfig cfg;
        cfg.n_samples = 40 + rng.index(100);
        cfg.image_size = 8;
        cfg.seed = 700 + trial;
        auto ds = generate(cfg);
        std::vector<std::size_t> subset;
        for (std::size_t i = 0; i < ds.samples.size(); ++i)
            if (rng.bernoulli(0.6)) subset.push_back(i);
        for (std::size_t f = 0; f < ds.finding_names.size(); ++f) {
            auto kept = filter_unambiguous(ds, subset, f);
            std::vector<std::size_t> expect;
            for (auto i : subset)
                if (ds.samples[i].states[f] != MentionState::NoMention) expect.push_back(i);
            if (kept != expect)
                return {false, "recount mismatch at trial " + std::to_string(trial)};
        }
    }
    return {true, "50 random datasets, exclusion set matches a brute-force recount"};
}

// ---------------------------------------------------------------- criterion 8

Outcome check_determinism() {
    SynthConfig synth;
    synth.n_samples = 120;
    synth.image_size = 12;
    synth.seed = 801;
    auto ds = generate(synth);
    auto splits = split(ds.samples.size(), 0.7, 0.1, 0.2, synth.seed);

    SweepConfig cfg;
    cfg.mu_grid = {0.5, 0.8};
    cfg.seeds = {1, 2};
    cfg.train.epochs = 1;
    cfg.train.batch_size = 32;
    cfg.train.augment_enabled = false;
    cfg.train.lr = 1e-3;
    cfg.make_network = [](std::uint64_t seed) -> std::unique_ptr<NetworkF> {
        SimpleCNNConfig c;
        c.conv_plan = {{4, 2}};
        c.head_count = 4;
        c.init_seed = seed;
        return std::make_unique<SimpleCNN<float>>(c);
    };

    const fs::path dir = fs::temp_directory_path() / "ambiweight_acceptance_c8";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto run = [&](const std::string& name) {
        auto report = mu_sweep(ds, splits, cfg);
        write_sweep_csv(report, (dir / name).string());
        std::ifstream in(dir / name, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    };
    const std::string a = run("a.csv");
    const std::string b = run("b.csv");
    fs::remove_all(dir);
    if (a.empty() || a != b) return {false, "repeated sweep CSVs differ"};
    return {true, "two identical sweeps produced byte-identical CSVs (" +
                      std::to_string(a.size()) + " bytes)"};
}

// ---------------------------------------------------------------- criterion 9

Outcome check_labeler_fixture() {
    FindingVocabulary vocab({
        {0, "pneumothorax", {"ptx"}},
        {1, "pleural effusion", {"effusion"}},
        {2, "consolidation", {}},
        {3, "edema", {}},
        {4, "cardiomegaly", {"enlarged heart"}},
    });
    NegationRuleSet rules;

    const MentionState A = MentionState::Affirmed;
    const MentionState N = MentionState::Negated;
    const MentionState X = MentionState::NoMention;

    struct Golden {
        const char* body;
        std::vector<MentionState> expect;  // ptx, effusion, consolidation, edema, cardiomegaly
    };
    const std::vector<Golden> fixture = {
        {"no pneumothorax, pleural effusion and consolidation", {N, N, N, X, X}},
        {"there is a small pleural effusion", {X, A, X, X, X}},
        {"no evidence of pneumothorax", {N, X, X, X, X}},
        {"pneumothorax is present. no pleural effusion", {A, N, X, X, X}},
        {"without consolidation or edema", {X, X, N, N, X}},
        {"no pneumothorax but there is consolidation", {N, X, A, X, X}},
        {"lungs are clear. no consolidation was observed", {X, X, N, X, X}},
        {"patient denies edema", {X, X, X, N, X}},
        {"negative for cardiomegaly and edema", {X, X, X, N, N}},
        {"heart size is normal without evidence of cardiomegaly", {X, X, X, X, N}},
        {"free of pleural effusion; consolidation noted", {X, N, A, X, X}},
        {"enlarged heart consistent with edema", {X, X, X, A, A}},
        {"no ptx", {N, X, X, X, X}},
        {"pneumothorax", {A, X, X, X, X}},
        {"not a pneumothorax", {N, X, X, X, X}},
        {"however no pleural effusion is seen although consolidation persists", {X, N, A, X, X}},
        // six tokens between trigger and mention: outside the negation scope
        {"no findings in either costophrenic angle suggesting pleural effusion", {X, A, X, X, X}},
        {"no pneumothorax, no pleural effusion, no consolidation", {N, N, N, X, X}},
        {"consolidation and pleural effusion are present. no edema", {X, A, A, N, X}},
        {"impression: enlarged heart. no consolidation, edema or pleural effusion. ptx", {A, N, N, N, A}},
    };

    for (std::size_t i = 0; i < fixture.size(); ++i) {
        Report report{"r" + std::to_string(i), fixture[i].body};
        const auto got = label_report(report, vocab, rules);
        if (got != fixture[i].expect) {
            std::string diff;
            for (std::size_t f = 0; f < got.size(); ++f)
                if (got[f] != fixture[i].expect[f])
                    diff += " " + std::string(vocab.findings()[f].canonical_name) + "=" +
                            to_string(got[f]);
            return {false, "report " + std::to_string(i) + " (\"" + fixture[i].body +
                               "\") mislabeled:" + diff};
        }
    }
    return {true, "key sentence negates all three findings; 20-report golden fixture pinned"};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {"1 gradient correctness", check_gradients},
        {"2 formula fidelity", check_formulas},
        {"3 pair-state logic", check_pair_logic},
        {"4 auc oracle", check_auc_oracle},
        {"5 ambiguity calibration", check_ambiguity_calibration},
        {"6 central claim (desk scale)", check_central_claim},
        {"7 unambiguous-only evaluation", check_unambiguous_filter},
        {"8 sweep determinism", check_determinism},
        {"9 labeler fixture", check_labeler_fixture},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        Outcome outcome;
        try {
            outcome = c.run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (outcome.passed ? "PASS" : "FAIL") << " criterion " << c.name << " -- "
                  << outcome.detail << "\n"
                  << std::flush;
        if (!outcome.passed) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
