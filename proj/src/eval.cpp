#include "ambiweight/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <thread>

#include "ambiweight/log.hpp"

namespace ambiweight {

RocResult roc_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("roc_auc: size mismatch");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (auto l : labels) n_pos += l ? 1 : 0;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw std::invalid_argument("roc_auc: AUC undefined with a single class");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t(0));
    std::sort(order.begin(), order.end(),
              [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // doubled midranks keep everything in integers, so ties are exact
    std::vector<std::int64_t> rank2(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const std::int64_t r2 = static_cast<std::int64_t>(i + j) + 2;  // (i+1) + (j+1)
        for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = r2;
        i = j + 1;
    }
    std::int64_t u2 = 0;
    for (std::size_t k = 0; k < n; ++k)
        if (labels[k]) u2 += rank2[k];
    u2 -= static_cast<std::int64_t>(n_pos) * static_cast<std::int64_t>(n_pos + 1);

    RocResult r;
    r.n_pos = n_pos;
    r.n_neg = n_neg;
    r.auc = static_cast<double>(u2) /
            (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
    return r;
}

namespace {

PairState pair_of(MentionState s) {
    switch (s) {
        case MentionState::Affirmed: return PairState::PositiveExists;
        case MentionState::Negated: return PairState::NegationExists;
        case MentionState::NoMention: return PairState::Ambiguous;
    }
    return PairState::Ambiguous;
}

}  // namespace

std::vector<std::size_t> filter_unambiguous(const Dataset& dataset,
                                            const std::vector<std::size_t>& subset,
                                            std::size_t finding_index) {
    std::vector<std::size_t> out;
    for (auto idx : subset) {
        const PairState p = pair_of(dataset.samples[idx].states[finding_index]);
        if (p == PairState::PositiveExists || p == PairState::NegationExists) out.push_back(idx);
    }
    return out;
}

std::vector<ClassWeights> compute_head_weights(const Dataset& dataset,
                                               const std::vector<std::size_t>& subset) {
    const std::size_t n_findings = dataset.finding_names.size();
    std::vector<ClassWeights> out(2 * n_findings);
    for (std::size_t f = 0; f < n_findings; ++f) {
        std::uint64_t pos_f1 = 0, neg_f1 = 0;
        for (auto idx : subset) {
            const MentionState s = dataset.samples[idx].states[f];
            if (s == MentionState::Affirmed) ++pos_f1;
            if (s == MentionState::Negated) ++neg_f1;
        }
        const std::uint64_t n = subset.size();
        out[2 * f] = class_weights(pos_f1, n - pos_f1);
        out[2 * f + 1] = class_weights(neg_f1, n - neg_f1);
    }
    return out;
}

namespace {

Tensor<float> batch_images(const Dataset& dataset, const std::vector<std::size_t>& indices) {
    const std::size_t size = dataset.image_size;
    Tensor<float> batch({indices.size(), 1, size, size});
    for (std::size_t i = 0; i < indices.size(); ++i)
        std::copy(dataset.samples[indices[i]].image.begin(), dataset.samples[indices[i]].image.end(),
                  batch.data.begin() + i * size * size);
    return batch;
}

}  // namespace

std::vector<std::vector<double>> predict(NetworkF& net, const Dataset& dataset,
                                         const std::vector<std::size_t>& subset,
                                         std::size_t batch_size) {
    std::vector<std::vector<double>> scores(subset.size());
    for (std::size_t start = 0; start < subset.size(); start += batch_size) {
        const std::size_t end = std::min(subset.size(), start + batch_size);
        std::vector<std::size_t> chunk(subset.begin() + start, subset.begin() + end);
        Tape<float> tape;
        auto input = tape.leaf(batch_images(dataset, chunk));
        auto probs = tape.sigmoid(net.forward_logits(tape, input, /*training=*/false, nullptr));
        const auto& v = tape.value(probs);
        const std::size_t heads = net.head_count();
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            scores[start + i].resize(heads);
            for (std::size_t h = 0; h < heads; ++h)
                scores[start + i][h] = static_cast<double>(v[i * heads + h]);
        }
    }
    return scores;
}

std::vector<std::optional<RocResult>> evaluate(NetworkF& net, const Dataset& dataset,
                                               const std::vector<std::size_t>& subset) {
    const std::size_t n_findings = dataset.finding_names.size();
    std::vector<std::optional<RocResult>> out(2 * n_findings);
    for (std::size_t f = 0; f < n_findings; ++f) {
        auto kept = filter_unambiguous(dataset, subset, f);
        if (kept.empty()) {
            log_warn("evaluation skipped for finding '" + dataset.finding_names[f] +
                     "': no unambiguous samples");
            continue;
        }
        auto scores = predict(net, dataset, kept);
        for (int negated = 0; negated <= 1; ++negated) {
            const std::size_t head = 2 * f + negated;
            std::vector<double> head_scores(kept.size());
            std::vector<std::uint8_t> labels(kept.size());
            for (std::size_t i = 0; i < kept.size(); ++i) {
                head_scores[i] = scores[i][head];
                const MentionState s = dataset.samples[kept[i]].states[f];
                labels[i] = negated ? (s == MentionState::Negated ? 1 : 0)
                                    : (s == MentionState::Affirmed ? 1 : 0);
            }
            try {
                RocResult r = roc_auc(head_scores, labels);
                r.head_id = head;
                out[head] = r;
            } catch (const std::invalid_argument&) {
                log_warn("evaluation skipped for head " + std::to_string(head) + ": single class");
            }
        }
    }
    return out;
}

namespace {

struct Snapshot {
    std::vector<Tensor<float>> values;

    static Snapshot take(NetworkF& net) {
        Snapshot s;
        for (auto& p : net.parameters()) s.values.push_back(*p.tensor);
        for (auto& p : net.state_tensors()) s.values.push_back(*p.tensor);
        return s;
    }
    void restore(NetworkF& net) const {
        std::size_t i = 0;
        for (auto& p : net.parameters()) *p.tensor = values[i++];
        for (auto& p : net.state_tensors()) *p.tensor = values[i++];
    }
};

double mean_defined_auc(const std::vector<std::optional<RocResult>>& results) {
    double sum = 0;
    std::size_t count = 0;
    for (const auto& r : results)
        if (r) {
            sum += r->auc;
            ++count;
        }
    return count ? sum / static_cast<double>(count) : 0.0;
}

}  // namespace

TrainResult train(NetworkF& net, const Dataset& dataset, const std::vector<std::size_t>& train_idx,
                  const std::vector<std::size_t>& val_idx, const TrainConfig& cfg) {
    if (net.head_count() != dataset.head_count())
        throw std::invalid_argument("train: model head count does not match dataset");
    if (train_idx.empty()) throw std::invalid_argument("train: empty training split");

    TrainResult result;
    const std::size_t n_findings = dataset.finding_names.size();
    if (cfg.class_weights_enabled) {
        result.head_weights = compute_head_weights(dataset, train_idx);
    } else {
        ClassWeights unit;
        unit.w1 = unit.w0 = 1.0;
        result.head_weights.assign(2 * n_findings, unit);
    }

    auto params = net.parameters();
    std::vector<Tensor<float>*> param_ptrs;
    for (auto& p : params) param_ptrs.push_back(p.tensor);
    AdamState<float> adam;
    AdamConfig<float> adam_cfg;
    adam_cfg.lr = static_cast<float>(cfg.lr);

    const std::size_t image_numel = dataset.image_size * dataset.image_size;
    std::uint64_t global_step = 0;
    Snapshot best = Snapshot::take(net);
    result.best_val_auc = -1.0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<std::size_t> order = train_idx;
        Rng shuffle_rng(mix_seed(cfg.seed, 0x65706f6368ULL, epoch));
        std::shuffle(order.begin(), order.end(), shuffle_rng.engine());

        double loss_sum = 0;
        std::size_t step_count = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const std::size_t bsz = end - start;

            Tensor<float> input({bsz, 1, dataset.image_size, dataset.image_size});
            std::vector<std::uint8_t> y(bsz * 2 * n_findings);
            std::vector<float> w1(y.size()), w0(y.size());
            for (std::size_t b = 0; b < bsz; ++b) {
                const std::size_t idx = order[start + b];
                const Sample& sample = dataset.samples[idx];
                std::vector<float> img = sample.image;
                if (cfg.augment_enabled) {
                    Rng aug_rng(mix_seed(mix_seed(cfg.seed, 0x617567ULL, idx), global_step));
                    img = augment(img, dataset.image_size, cfg.augment, aug_rng);
                }
                std::copy(img.begin(), img.end(), input.data.begin() + b * image_numel);

                for (std::size_t f = 0; f < n_findings; ++f) {
                    const MentionState s = sample.states[f];
                    const PairState pair = pair_of(s);
                    y[b * 2 * n_findings + 2 * f] = s == MentionState::Affirmed ? 1 : 0;
                    y[b * 2 * n_findings + 2 * f + 1] = s == MentionState::Negated ? 1 : 0;
                    ModifierDraw draw;  // defaults to identity (m=1, m_bar=0)
                    HeadWeights hw{result.head_weights[2 * f], result.head_weights[2 * f + 1]};
                    if (pair == PairState::Ambiguous && cfg.modifier.enabled) {
                        Rng mod_rng = modifier_stream(cfg.modifier, idx, f, global_step);
                        draw = draw_modifier(cfg.modifier, mod_rng);
                        hw = effective_weights(pair, hw.positive, hw.negated, draw);
                    }
                    w1[b * 2 * n_findings + 2 * f] = static_cast<float>(hw.positive.w1);
                    w0[b * 2 * n_findings + 2 * f] = static_cast<float>(hw.positive.w0);
                    w1[b * 2 * n_findings + 2 * f + 1] = static_cast<float>(hw.negated.w1);
                    w0[b * 2 * n_findings + 2 * f + 1] = static_cast<float>(hw.negated.w0);
                }
            }

            Tape<float> tape;
            Rng net_rng(mix_seed(cfg.seed, 0x6e6574ULL, global_step));
            auto logits = net.forward_logits(tape, tape.leaf(std::move(input)), true, &net_rng);
            auto loss_node = tape.wbce_loss(logits, y, w1, w0);
            const double loss = tape.value(loss_node)[0];
            if (!std::isfinite(loss)) {
                std::ostringstream msg;
                msg << "train: non-finite loss " << loss << " at epoch " << epoch << " step "
                    << global_step << " (batch " << start / cfg.batch_size << ", size " << bsz << ")";
                throw std::runtime_error(msg.str());
            }
            tape.backward(loss_node);

            std::vector<Tensor<float>> grads;
            grads.reserve(param_ptrs.size());
            for (auto* p : param_ptrs) grads.push_back(tape.grad_of(p));
            std::vector<const Tensor<float>*> grad_ptrs;
            for (auto& g : grads) grad_ptrs.push_back(&g);
            adam_step(param_ptrs, grad_ptrs, adam, adam_cfg);

            loss_sum += loss;
            ++step_count;
            ++global_step;
        }

        EpochLog log_entry;
        log_entry.epoch = epoch;
        log_entry.train_loss = loss_sum / static_cast<double>(step_count);
        log_entry.val_auc_mean = val_idx.empty() ? 0.0 : mean_defined_auc(evaluate(net, dataset, val_idx));
        result.log.push_back(log_entry);
        log_info("epoch " + std::to_string(epoch) + ": train_loss=" + std::to_string(log_entry.train_loss) +
                 " val_auc_mean=" + std::to_string(log_entry.val_auc_mean));

        if (log_entry.val_auc_mean > result.best_val_auc) {
            result.best_val_auc = log_entry.val_auc_mean;
            result.best_epoch = epoch;
            best = Snapshot::take(net);
        }
    }
    best.restore(net);
    return result;
}

std::vector<std::string> head_names(const Dataset& dataset) {
    std::vector<std::string> names;
    for (const auto& f : dataset.finding_names) {
        names.push_back(f);
        names.push_back("no " + f);
    }
    return names;
}

double SweepReport::mean_auc(const std::string& arm, const std::string& head) const {
    double sum = 0;
    std::size_t count = 0;
    for (const auto& r : rows)
        if (r.arm == arm && r.head == head) {
            sum += r.auc;
            ++count;
        }
    return count ? sum / static_cast<double>(count) : std::nan("");
}

std::string SweepReport::best_mu() const {
    std::string best;
    double best_mean = -1;
    for (const auto& r : rows) {
        if (r.arm == "baseline" || r.arm == "unweighted") continue;
        double sum = 0;
        std::size_t count = 0;
        for (const auto& q : rows)
            if (q.arm == r.arm) {
                sum += q.auc;
                ++count;
            }
        const double mean = sum / static_cast<double>(count);
        if (mean > best_mean) {
            best_mean = mean;
            best = r.arm;
        }
    }
    return best;
}

namespace {

std::string format_mu(double mu) {
    std::ostringstream out;
    out << std::setprecision(10) << mu;
    return out.str();
}

}  // namespace

SweepReport mu_sweep(const Dataset& dataset, const SplitIndices& splits, const SweepConfig& cfg) {
    if (cfg.mu_grid.empty()) throw std::invalid_argument("mu_sweep: empty grid");
    if (!cfg.make_network) throw std::invalid_argument("mu_sweep: missing network factory");

    SweepReport report;
    report.head_names = head_names(dataset);

    struct Arm {
        std::string name;
        std::uint64_t seed;
        bool modifiers;
        bool class_weights;
        double mu;
    };
    std::vector<Arm> arms;
    for (auto seed : cfg.seeds) arms.push_back({"baseline", seed, false, true, 0.0});
    if (cfg.include_unweighted)
        for (auto seed : cfg.seeds) arms.push_back({"unweighted", seed, false, false, 0.0});
    for (auto mu : cfg.mu_grid)
        for (auto seed : cfg.seeds) arms.push_back({format_mu(mu), seed, true, true, mu});

    // Each arm trains independently; per-arm results are collected into
    // indexed slots so the report is identical for any job count.
    struct ArmResult {
        std::vector<SweepRow> rows;
        std::vector<std::string> failures;
    };
    std::vector<ArmResult> results(arms.size());
    auto run_arm = [&](std::size_t i) {
        const auto& arm = arms[i];
        log_info("sweep arm '" + arm.name + "' seed " + std::to_string(arm.seed));
        try {
            auto net = cfg.make_network(arm.seed);
            TrainConfig tc = cfg.train;
            tc.seed = arm.seed;
            tc.class_weights_enabled = arm.class_weights;
            tc.modifier.enabled = arm.modifiers;
            tc.modifier.mu = arm.mu;
            tc.modifier.sigma = cfg.sigma;
            tc.modifier.seed = arm.seed;
            train(*net, dataset, splits.train, splits.val, tc);
            auto aucs = evaluate(*net, dataset, splits.test);
            for (std::size_t h = 0; h < aucs.size(); ++h) {
                if (!aucs[h]) {
                    results[i].failures.push_back("arm " + arm.name + " seed " +
                                                  std::to_string(arm.seed) +
                                                  ": AUC undefined for head " + report.head_names[h]);
                    continue;
                }
                results[i].rows.push_back({arm.name, arm.seed, report.head_names[h], aucs[h]->auc});
            }
        } catch (const std::exception& e) {
            results[i].failures.push_back("arm " + arm.name + " seed " + std::to_string(arm.seed) +
                                          " failed: " + e.what());
        }
    };
    const std::size_t jobs = std::max<std::size_t>(1, cfg.jobs);
    if (jobs == 1) {
        for (std::size_t i = 0; i < arms.size(); ++i) run_arm(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < std::min(jobs, arms.size()); ++j)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < arms.size(); i = next.fetch_add(1))
                    run_arm(i);
            });
        for (auto& t : pool) t.join();
    }
    for (auto& r : results) {
        report.rows.insert(report.rows.end(), r.rows.begin(), r.rows.end());
        report.failures.insert(report.failures.end(), r.failures.begin(), r.failures.end());
    }
    return report;
}

void write_sweep_csv(const SweepReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write sweep CSV: " + path);
    out << "mu,seed,head,auc\n";
    out << std::setprecision(17);
    for (const auto& r : report.rows)
        out << r.arm << "," << r.seed << "," << r.head << "," << r.auc << "\n";
    for (const auto& f : report.failures) out << "# failure: " << f << "\n";
}

SweepReport read_sweep_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open sweep CSV: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("mu,seed,head,auc", 0) != 0)
        throw std::runtime_error("bad sweep CSV header in " + path);
    SweepReport report;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        SweepRow r;
        std::string seed_str, auc_str;
        if (!std::getline(row, r.arm, ',') || !std::getline(row, seed_str, ',') ||
            !std::getline(row, r.head, ',') || !std::getline(row, auc_str))
            throw std::runtime_error("bad sweep CSV row: " + line);
        r.seed = std::stoull(seed_str);
        r.auc = std::stod(auc_str);
        report.rows.push_back(std::move(r));
    }
    for (const auto& r : report.rows)
        if (std::find(report.head_names.begin(), report.head_names.end(), r.head) ==
            report.head_names.end())
            report.head_names.push_back(r.head);
    return report;
}

void write_training_log_csv(const std::vector<EpochLog>& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write training log: " + path);
    out << "epoch,train_loss,val_auc_mean\n" << std::setprecision(17);
    for (const auto& e : log) out << e.epoch << "," << e.train_loss << "," << e.val_auc_mean << "\n";
}

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

void write_family_svg(const SweepReport& report, const std::vector<std::string>& heads,
                      const std::string& title, const std::string& path) {
    std::vector<double> mus;
    for (const auto& r : report.rows) {
        if (r.arm == "baseline" || r.arm == "unweighted") continue;
        const double mu = std::stod(r.arm);
        if (std::find(mus.begin(), mus.end(), mu) == mus.end()) mus.push_back(mu);
    }
    std::sort(mus.begin(), mus.end());

    const double width = 640, height = 420, ml = 60, mr = 160, mt = 40, mb = 50;
    const double px = width - ml - mr, py = height - mt - mb;
    auto xpos = [&](double mu) {
        if (mus.size() < 2) return ml + px / 2;
        return ml + (mu - mus.front()) / (mus.back() - mus.front()) * px;
    };
    auto ypos = [&](double auc) { return mt + (1.0 - auc) * py; };  // y axis 0..1

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write SVG: " + path);
    out << std::setprecision(6);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
        << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<text x='" << ml << "' y='24' font-family='sans-serif' font-size='16'>" << title
        << "</text>\n";
    // axes
    out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << mt + py
        << "' stroke='black'/>\n";
    out << "<line x1='" << ml << "' y1='" << mt + py << "' x2='" << ml + px << "' y2='" << mt + py
        << "' stroke='black'/>\n";
    for (double tick = 0.0; tick <= 1.001; tick += 0.25) {
        out << "<text x='" << ml - 38 << "' y='" << ypos(tick) + 4
            << "' font-family='sans-serif' font-size='11'>" << tick << "</text>\n";
        out << "<line x1='" << ml - 4 << "' y1='" << ypos(tick) << "' x2='" << ml << "' y2='"
            << ypos(tick) << "' stroke='black'/>\n";
    }
    for (auto mu : mus) {
        out << "<text x='" << xpos(mu) - 8 << "' y='" << mt + py + 18
            << "' font-family='sans-serif' font-size='11'>" << mu << "</text>\n";
        out << "<line x1='" << xpos(mu) << "' y1='" << mt + py << "' x2='" << xpos(mu) << "' y2='"
            << mt + py + 4 << "' stroke='black'/>\n";
    }
    out << "<text x='" << ml + px / 2 << "' y='" << height - 10
        << "' font-family='sans-serif' font-size='12'>mu</text>\n";

    std::size_t color = 0;
    for (const auto& head : heads) {
        const char* c = kPalette[color % 6];
        std::ostringstream points;
        for (auto mu : mus) {
            const double auc = report.mean_auc(format_mu(mu), head);
            if (std::isnan(auc)) continue;
            points << xpos(mu) << "," << ypos(auc) << " ";
        }
        out << "<polyline fill='none' stroke='" << c << "' stroke-width='2' points='" << points.str()
            << "'/>\n";
        const double baseline = report.mean_auc("baseline", head);
        if (!std::isnan(baseline))
            out << "<line x1='" << ml << "' y1='" << ypos(baseline) << "' x2='" << ml + px << "' y2='"
                << ypos(baseline) << "' stroke='" << c << "' stroke-dasharray='6,4'/>\n";
        out << "<text x='" << ml + px + 10 << "' y='" << mt + 16 + 18 * color
            << "' font-family='sans-serif' font-size='12' fill='" << c << "'>" << head << "</text>\n";
        ++color;
    }
    out << "</svg>\n";
}

}  // namespace

void write_sweep_svg(const SweepReport& report, const std::string& positive_path,
                     const std::string& negated_path) {
    std::vector<std::string> positive, negated;
    for (const auto& h : report.head_names)
        (h.rfind("no ", 0) == 0 ? negated : positive).push_back(h);
    write_family_svg(report, positive, "AUC vs mu (positive heads)", positive_path);
    write_family_svg(report, negated, "AUC vs mu (negated heads)", negated_path);
}

}  // namespace ambiweight
