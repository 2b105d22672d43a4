// ambiweight command-line tool: synth, label, train, sweep, eval, gradcheck,
// report. Every command is deterministic given (config, seed); randomness
// flows only from the config seed. Exit codes: 0 success, 1 usage, 2 config,
// 3 data, 4 numerical failure.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ambiweight/checkpoint.hpp"
#include "ambiweight/data.hpp"
#include "ambiweight/eval.hpp"
#include "ambiweight/gradcheck.hpp"
#include "ambiweight/labelcore.hpp"
#include "ambiweight/log.hpp"
#include "ambiweight/models.hpp"
#include "ambiweight/textlabeler.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ambiweight;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ------------------------------------------------------------- config schema

void reject_unknown_keys(const json& obj, const std::string& path,
                         std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(path + ": expected a JSON object");
    for (const auto& [key, _] : obj.items()) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* a) { return key == a; }) == allowed.end())
            throw ConfigError(path + ": unknown key '" + key + "'");
    }
}

template <typename T>
void read_field(const json& obj, const std::string& path, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path + "." + key + ": wrong type");
    }
}

void require_range(double v, double lo, double hi, const std::string& field) {
    if (!(v >= lo && v <= hi))
        throw ConfigError(field + ": must be in [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "], got " + std::to_string(v));
}

struct ModelSection {
    std::string arch = "db_net";  // or "simple_cnn"
    std::size_t input_size = 32;
    std::vector<StagePlan> stages = {{2, 16}, {2, 32}};
    double noise_stddev = 0.1;
    bool use_batch_norm = true;
    std::vector<std::pair<std::size_t, std::size_t>> conv_plan = {{8, 1}, {16, 2}, {32, 2}};
};

struct SplitSection {
    double train = 0.7, val = 0.1, test = 0.2;
};

struct SweepSection {
    std::vector<double> mu_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<std::uint64_t> seeds;  // empty -> derived from --seed
    double sigma = 0.05;
    bool include_unweighted = false;
};

struct TrainSection {
    double lr = 1e-4;
    std::size_t batch_size = 64;
    std::size_t epochs = 20;
    bool class_weights_enabled = true;
    bool augment_enabled = true;
};

struct RunConfig {
    std::optional<std::uint64_t> seed;
    SynthConfig synth;
    AugmentConfig augment;
    ModifierConfig modifier;
    ModelSection model;
    TrainSection train;
    SplitSection split;
    SweepSection sweep;
    std::vector<std::string> sections;  // which sections the config file provided

    bool has(const char* section) const {
        return std::find(sections.begin(), sections.end(), section) != sections.end();
    }
};

SynthConfig parse_synth(const json& j) {
    reject_unknown_keys(j, "synth",
                        {"n_samples", "image_size", "background_noise", "findings"});
    SynthConfig s;
    read_field(j, "synth", "n_samples", s.n_samples);
    read_field(j, "synth", "image_size", s.image_size);
    read_field(j, "synth", "background_noise", s.background_noise);
    if (j.contains("findings")) {
        if (!j.at("findings").is_array()) throw ConfigError("synth.findings: expected an array");
        s.findings.clear();
        std::size_t i = 0;
        for (const auto& f : j.at("findings")) {
            const std::string path = "synth.findings[" + std::to_string(i) + "]";
            reject_unknown_keys(f, path,
                                {"name", "shape", "prevalence", "p_affirm_given_present",
                                 "p_negate_given_absent"});
            FindingSpec spec;
            read_field(f, path, "name", spec.name);
            if (spec.name.empty()) throw ConfigError(path + ".name: required");
            if (f.contains("shape")) {
                try {
                    spec.shape = shape_kind_from_string(f.at("shape").get<std::string>());
                } catch (const std::exception& e) {
                    throw ConfigError(path + ".shape: " + e.what());
                }
            }
            read_field(f, path, "prevalence", spec.prevalence);
            read_field(f, path, "p_affirm_given_present", spec.p_affirm_given_present);
            read_field(f, path, "p_negate_given_absent", spec.p_negate_given_absent);
            if (!(spec.prevalence > 0.0 && spec.prevalence < 1.0))
                throw ConfigError(path + ".prevalence: must be in (0,1), got " +
                                  std::to_string(spec.prevalence));
            require_range(spec.p_affirm_given_present, 0.0, 1.0, path + ".p_affirm_given_present");
            require_range(spec.p_negate_given_absent, 0.0, 1.0, path + ".p_negate_given_absent");
            s.findings.push_back(std::move(spec));
            ++i;
        }
        if (s.findings.empty()) throw ConfigError("synth.findings: must not be empty");
    }
    if (s.n_samples == 0) throw ConfigError("synth.n_samples: must be positive");
    if (s.image_size < 4) throw ConfigError("synth.image_size: must be at least 4");
    require_range(s.background_noise, 0.0, 1.0, "synth.background_noise");
    return s;
}

AugmentConfig parse_augment(const json& j, bool& enabled) {
    reject_unknown_keys(j, "augment",
                        {"rotation_deg", "shift_frac", "scale_min", "scale_max", "apply_prob",
                         "enabled"});
    AugmentConfig a;
    read_field(j, "augment", "rotation_deg", a.rotation_deg);
    read_field(j, "augment", "shift_frac", a.shift_frac);
    read_field(j, "augment", "scale_min", a.scale_min);
    read_field(j, "augment", "scale_max", a.scale_max);
    read_field(j, "augment", "apply_prob", a.apply_prob);
    read_field(j, "augment", "enabled", enabled);
    require_range(a.apply_prob, 0.0, 1.0, "augment.apply_prob");
    if (a.scale_min > a.scale_max) throw ConfigError("augment.scale_min: exceeds scale_max");
    return a;
}

ModifierConfig parse_modifier(const json& j) {
    reject_unknown_keys(j, "modifier", {"mu", "sigma", "enabled"});
    ModifierConfig m;
    read_field(j, "modifier", "mu", m.mu);
    read_field(j, "modifier", "sigma", m.sigma);
    read_field(j, "modifier", "enabled", m.enabled);
    require_range(m.mu, 0.0, 1.0, "modifier.mu");
    if (m.sigma < 0.0) throw ConfigError("modifier.sigma: must be non-negative");
    return m;
}

ModelSection parse_model(const json& j) {
    reject_unknown_keys(j, "model",
                        {"arch", "input_size", "stages", "noise_stddev", "use_batch_norm",
                         "conv_plan"});
    ModelSection m;
    read_field(j, "model", "arch", m.arch);
    if (m.arch != "db_net" && m.arch != "simple_cnn")
        throw ConfigError("model.arch: expected 'db_net' or 'simple_cnn', got '" + m.arch + "'");
    read_field(j, "model", "input_size", m.input_size);
    read_field(j, "model", "noise_stddev", m.noise_stddev);
    read_field(j, "model", "use_batch_norm", m.use_batch_norm);
    if (j.contains("stages")) {
        m.stages.clear();
        for (const auto& s : j.at("stages")) {
            if (!s.is_array() || s.size() != 2)
                throw ConfigError("model.stages: expected [blocks, channels] pairs");
            m.stages.push_back({s[0].get<std::size_t>(), s[1].get<std::size_t>()});
        }
    }
    if (j.contains("conv_plan")) {
        m.conv_plan.clear();
        for (const auto& s : j.at("conv_plan")) {
            if (!s.is_array() || s.size() != 2)
                throw ConfigError("model.conv_plan: expected [channels, stride] pairs");
            m.conv_plan.push_back({s[0].get<std::size_t>(), s[1].get<std::size_t>()});
        }
    }
    return m;
}

TrainSection parse_train(const json& j) {
    reject_unknown_keys(j, "train",
                        {"lr", "batch_size", "epochs", "class_weights_enabled",
                         "augment_enabled"});
    TrainSection t;
    read_field(j, "train", "lr", t.lr);
    read_field(j, "train", "batch_size", t.batch_size);
    read_field(j, "train", "epochs", t.epochs);
    read_field(j, "train", "class_weights_enabled", t.class_weights_enabled);
    read_field(j, "train", "augment_enabled", t.augment_enabled);
    if (!(t.lr > 0.0)) throw ConfigError("train.lr: must be positive");
    if (t.batch_size == 0) throw ConfigError("train.batch_size: must be positive");
    if (t.epochs == 0) throw ConfigError("train.epochs: must be positive");
    return t;
}

SplitSection parse_split(const json& j) {
    reject_unknown_keys(j, "split", {"train", "val", "test"});
    SplitSection s;
    read_field(j, "split", "train", s.train);
    read_field(j, "split", "val", s.val);
    read_field(j, "split", "test", s.test);
    if (std::abs(s.train + s.val + s.test - 1.0) > 1e-9)
        throw ConfigError("split: fractions must sum to 1");
    return s;
}

SweepSection parse_sweep(const json& j) {
    reject_unknown_keys(j, "sweep", {"mu_grid", "seeds", "sigma", "include_unweighted"});
    SweepSection s;
    read_field(j, "sweep", "mu_grid", s.mu_grid);
    read_field(j, "sweep", "seeds", s.seeds);
    read_field(j, "sweep", "sigma", s.sigma);
    read_field(j, "sweep", "include_unweighted", s.include_unweighted);
    if (s.mu_grid.empty()) throw ConfigError("sweep.mu_grid: must not be empty");
    for (double mu : s.mu_grid) require_range(mu, 0.0, 1.0, "sweep.mu_grid entry");
    if (s.sigma < 0.0) throw ConfigError("sweep.sigma: must be non-negative");
    return s;
}

RunConfig load_run_config(const std::string& path) {
    RunConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    reject_unknown_keys(j, "config",
                        {"seed", "synth", "augment", "modifier", "model", "train", "split",
                         "sweep"});
    if (j.contains("seed")) {
        std::uint64_t s = 0;
        read_field(j, "config", "seed", s);
        cfg.seed = s;
    }
    for (const char* sec : {"synth", "augment", "modifier", "model", "train", "split", "sweep"})
        if (j.contains(sec)) cfg.sections.push_back(sec);
    if (j.contains("synth")) cfg.synth = parse_synth(j.at("synth"));
    if (j.contains("augment")) cfg.augment = parse_augment(j.at("augment"), cfg.train.augment_enabled);
    if (j.contains("modifier")) cfg.modifier = parse_modifier(j.at("modifier"));
    if (j.contains("model")) cfg.model = parse_model(j.at("model"));
    if (j.contains("train")) {
        const bool keep = cfg.train.augment_enabled;
        cfg.train = parse_train(j.at("train"));
        if (!j.at("train").contains("augment_enabled")) cfg.train.augment_enabled = keep;
    }
    if (j.contains("split")) cfg.split = parse_split(j.at("split"));
    if (j.contains("sweep")) cfg.sweep = parse_sweep(j.at("sweep"));
    return cfg;
}

// Resolution bookkeeping: flag > config > default, printed at startup.
class Resolution {
public:
    template <typename T>
    void note(const std::string& key, const T& value, const char* source) {
        std::ostringstream os;
        os << std::boolalpha << value;
        lines_.push_back("  " + key + " = " + os.str() + " (" + source + ")");
    }
    void print(const std::string& command) const {
        std::cout << "resolved configuration for '" << command << "':\n";
        for (const auto& l : lines_) std::cout << l << "\n";
    }

private:
    std::vector<std::string> lines_;
};

const char* source_of(bool flag_set, bool config_had) {
    return flag_set ? "flag" : (config_had ? "config" : "default");
}

std::uint64_t resolve_seed(const CLI::App* cmd, std::uint64_t flag_seed, const RunConfig& cfg,
                           Resolution& res) {
    if (cmd->count("--seed")) {
        res.note("seed", flag_seed, "flag");
        return flag_seed;
    }
    if (cfg.seed) {
        res.note("seed", *cfg.seed, "config");
        return *cfg.seed;
    }
    throw ConfigError("--seed is required (flag or config 'seed')");
}

std::unique_ptr<NetworkF> build_network(const ModelSection& m, std::size_t head_count,
                                        std::uint64_t init_seed) {
    if (m.arch == "simple_cnn") {
        SimpleCNNConfig cfg;
        cfg.conv_plan = m.conv_plan;
        cfg.head_count = head_count;
        cfg.init_seed = init_seed;
        return std::make_unique<SimpleCNN<float>>(cfg);
    }
    CustomNetConfig cfg;
    cfg.input_size = m.input_size;
    cfg.stages = m.stages;
    cfg.noise_stddev = m.noise_stddev;
    cfg.use_batch_norm = m.use_batch_norm;
    cfg.head_count = head_count;
    cfg.init_seed = init_seed;
    return std::make_unique<CustomNet<float>>(cfg);
}

Dataset load_data(const std::string& path, bool lenient) {
    std::size_t dropped = 0;
    Dataset ds;
    try {
        ds = load_manifest(path, lenient ? IngestMode::Lenient : IngestMode::Strict, &dropped);
    } catch (const std::exception& e) {
        throw DataError(e.what());
    }
    if (dropped > 0)
        log_warn("dropped " + std::to_string(dropped) + " contradictory row(s) from " + path);
    if (ds.samples.empty()) throw DataError("no usable samples in " + path);
    return ds;
}

std::string fmt_auc(const std::optional<RocResult>& r) {
    if (!r) return "n/a";
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << r->auc;
    return os.str();
}

// ------------------------------------------------------------------ commands

int cmd_synth(const RunConfig& cfg, const CLI::App* cmd, std::uint64_t flag_seed,
              const std::string& out_dir) {
    Resolution res;
    SynthConfig synth = cfg.synth;
    synth.seed = resolve_seed(cmd, flag_seed, cfg, res);
    const char* synth_src = cfg.has("synth") ? "config" : "default";
    res.note("n_samples", synth.n_samples, synth_src);
    res.note("image_size", synth.image_size, synth_src);
    res.note("background_noise", synth.background_noise, synth_src);
    res.note("findings", synth.findings.size(), synth_src);
    res.note("out", out_dir, "flag");
    res.print("synth");

    auto ds = generate(synth);
    try {
        save_manifest(ds, out_dir);
    } catch (const std::exception& e) {
        throw DataError(e.what());
    }

    // generation audit
    auto vocab = ds.vocabulary();
    auto matrix = ds.label_matrix(vocab);
    std::cout << "\ngeneration audit (" << ds.samples.size() << " samples, " << ds.image_size
              << "x" << ds.image_size << "):\n";
    std::cout << std::left << std::setw(16) << "finding" << std::right << std::setw(12)
              << "prevalence" << std::setw(12) << "affirmed" << std::setw(12) << "negated"
              << std::setw(12) << "nomention" << std::setw(12) << "ambiguity" << "\n";
    const double n = static_cast<double>(ds.samples.size());
    for (std::size_t f = 0; f < ds.finding_names.size(); ++f) {
        std::size_t truth = 0, aff = 0, neg = 0, nom = 0;
        for (const auto& s : ds.samples) {
            truth += s.truth[f];
            aff += s.states[f] == MentionState::Affirmed;
            neg += s.states[f] == MentionState::Negated;
            nom += s.states[f] == MentionState::NoMention;
        }
        std::cout << std::left << std::setw(16) << ds.finding_names[f] << std::right << std::fixed
                  << std::setprecision(4) << std::setw(12) << truth / n << std::setw(12) << aff / n
                  << std::setw(12) << neg / n << std::setw(12) << nom / n << std::setw(12)
                  << ambiguity_rate(matrix, vocab, vocab.finding(f).finding_id) << "\n";
    }
    std::cout << "wrote " << ds.samples.size() << " images and manifest to " << out_dir << "\n";
    return kExitOk;
}

int cmd_label(const std::string& reports_path, const std::string& vocab_path,
              const std::string& triggers_path, const std::string& out_path) {
    FindingVocabulary vocab;
    NegationRuleSet rules;
    try {
        vocab = FindingVocabulary::load(vocab_path);
        if (!triggers_path.empty()) rules = NegationRuleSet::load_triggers(triggers_path);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }

    std::ifstream in(reports_path);
    if (!in) throw DataError("cannot open reports file: " + reports_path);
    std::ofstream out(out_path);
    if (!out) throw DataError("cannot write manifest: " + out_path);

    out << "sample_id,image_path";
    for (const auto& f : vocab.findings()) out << "," << f.canonical_name << "_state";
    out << "\n";

    std::vector<std::size_t> affirmed(vocab.size(), 0), negated(vocab.size(), 0),
        nomention(vocab.size(), 0);
    std::string line;
    std::size_t line_no = 0, n_reports = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError("reports line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("report_id") || !j.contains("body"))
            throw DataError("reports line " + std::to_string(line_no) +
                            ": expected {\"report_id\", \"body\"}");
        Report report{j.at("report_id").get<std::string>(), j.at("body").get<std::string>()};
        auto states = label_report(report, vocab, rules);
        out << report.report_id << ",";
        for (std::size_t f = 0; f < states.size(); ++f) {
            out << "," << to_string(states[f]);
            affirmed[f] += states[f] == MentionState::Affirmed;
            negated[f] += states[f] == MentionState::Negated;
            nomention[f] += states[f] == MentionState::NoMention;
        }
        out << "\n";
        ++n_reports;
    }
    if (n_reports == 0) log_warn("no reports in " + reports_path + "; wrote an empty manifest");

    std::cout << "labeled " << n_reports << " report(s) -> " << out_path << "\n";
    std::cout << std::left << std::setw(20) << "finding" << std::right << std::setw(10)
              << "affirmed" << std::setw(10) << "negated" << std::setw(12) << "nomention" << "\n";
    for (std::size_t f = 0; f < vocab.size(); ++f)
        std::cout << std::left << std::setw(20) << vocab.finding(f).canonical_name << std::right
                  << std::setw(10) << affirmed[f] << std::setw(10) << negated[f] << std::setw(12)
                  << nomention[f] << "\n";
    return kExitOk;
}

TrainConfig make_train_config(const RunConfig& cfg, std::uint64_t seed) {
    TrainConfig tc;
    tc.lr = cfg.train.lr;
    tc.batch_size = cfg.train.batch_size;
    tc.epochs = cfg.train.epochs;
    tc.augment = cfg.augment;
    tc.augment_enabled = cfg.train.augment_enabled;
    tc.modifier = cfg.modifier;
    tc.class_weights_enabled = cfg.train.class_weights_enabled;
    tc.seed = seed;
    tc.modifier.seed = seed;
    return tc;
}

int cmd_train(RunConfig cfg, const CLI::App* cmd, std::uint64_t flag_seed,
              const std::string& data_path, const std::string& out_dir, bool lenient,
              double flag_lr, std::size_t flag_epochs, double flag_mu) {
    Resolution res;
    const std::uint64_t seed = resolve_seed(cmd, flag_seed, cfg, res);
    if (cmd->count("--lr")) cfg.train.lr = flag_lr;
    if (cmd->count("--epochs")) cfg.train.epochs = flag_epochs;
    if (cmd->count("--mu")) {
        require_range(flag_mu, 0.0, 1.0, "--mu");
        cfg.modifier.mu = flag_mu;
        cfg.modifier.enabled = true;
    }
    res.note("model.arch", cfg.model.arch, cfg.has("model") ? "config" : "default");
    res.note("train.lr", cfg.train.lr, source_of(cmd->count("--lr") > 0, cfg.has("train")));
    res.note("train.epochs", cfg.train.epochs,
             source_of(cmd->count("--epochs") > 0, cfg.has("train")));
    res.note("train.batch_size", cfg.train.batch_size, cfg.has("train") ? "config" : "default");
    res.note("modifier.enabled", cfg.modifier.enabled,
             source_of(cmd->count("--mu") > 0, cfg.has("modifier")));
    res.note("modifier.mu", cfg.modifier.mu,
             source_of(cmd->count("--mu") > 0, cfg.has("modifier")));
    res.note("modifier.sigma", cfg.modifier.sigma, cfg.has("modifier") ? "config" : "default");
    res.print("train");

    auto ds = load_data(data_path, lenient);
    auto splits = split(ds.samples.size(), cfg.split.train, cfg.split.val, cfg.split.test, seed);
    cfg.model.input_size = ds.image_size;
    auto net = build_network(cfg.model, ds.head_count(), seed);

    TrainResult result;
    try {
        result = train(*net, ds, splits.train, splits.val, make_train_config(cfg, seed));
    } catch (const std::exception& e) {
        throw NumericalError(e.what());
    }

    fs::create_directories(out_dir);
    const std::string ckpt = (fs::path(out_dir) / "model.awck").string();
    const std::string log_csv = (fs::path(out_dir) / "training_log.csv").string();
    save_network(*net, ckpt);
    write_training_log_csv(result.log, log_csv);

    std::cout << "trained " << net->arch_name() << " (" << count_parameters(*net, true)
              << " trainable parameters) on " << splits.train.size() << " samples\n";
    std::cout << "best epoch " << result.best_epoch << ", validation AUC mean " << std::fixed
              << std::setprecision(4) << result.best_val_auc << "\n";
    auto test_results = evaluate(*net, ds, splits.test);
    auto names = head_names(ds);
    std::cout << "test AUC (unambiguous only):\n";
    for (std::size_t h = 0; h < test_results.size(); ++h)
        std::cout << "  " << std::left << std::setw(20) << names[h] << fmt_auc(test_results[h])
                  << "\n";
    std::cout << "checkpoint: " << ckpt << "\ntraining log: " << log_csv << "\n";
    return kExitOk;
}

int cmd_sweep(RunConfig cfg, const CLI::App* cmd, std::uint64_t flag_seed,
              const std::string& data_path, const std::string& out_dir, bool lenient,
              const std::vector<double>& flag_grid, std::size_t flag_n_seeds,
              std::size_t jobs) {
    Resolution res;
    const std::uint64_t seed = resolve_seed(cmd, flag_seed, cfg, res);
    if (cmd->count("--grid")) {
        for (double mu : flag_grid) require_range(mu, 0.0, 1.0, "--grid entry");
        cfg.sweep.mu_grid = flag_grid;
    }
    std::vector<std::uint64_t> seeds = cfg.sweep.seeds;
    if (cmd->count("--seeds") || seeds.empty()) {
        const std::size_t n = cmd->count("--seeds") ? flag_n_seeds : 3;
        if (n == 0) throw ConfigError("--seeds: must be positive");
        seeds.clear();
        for (std::size_t i = 1; i <= n; ++i) seeds.push_back(seed + i);
    }
    if (jobs == 0) throw ConfigError("--jobs: must be positive");
    res.note("sweep.mu_grid", cfg.sweep.mu_grid.size(),
             source_of(cmd->count("--grid") > 0, cfg.has("sweep")));
    res.note("sweep.seeds", seeds.size(),
             source_of(cmd->count("--seeds") > 0, cfg.has("sweep") && !cfg.sweep.seeds.empty()));
    res.note("sweep.sigma", cfg.sweep.sigma, cfg.has("sweep") ? "config" : "default");
    res.note("jobs", jobs, source_of(cmd->count("--jobs") > 0, false));
    res.note("train.epochs", cfg.train.epochs, cfg.has("train") ? "config" : "default");
    res.print("sweep");

    auto ds = load_data(data_path, lenient);
    auto splits = split(ds.samples.size(), cfg.split.train, cfg.split.val, cfg.split.test, seed);
    cfg.model.input_size = ds.image_size;

    SweepConfig sc;
    sc.mu_grid = cfg.sweep.mu_grid;
    sc.seeds = seeds;
    sc.sigma = cfg.sweep.sigma;
    sc.include_unweighted = cfg.sweep.include_unweighted;
    sc.jobs = jobs;
    sc.train = make_train_config(cfg, seed);
    const ModelSection model = cfg.model;
    const std::size_t heads = ds.head_count();
    sc.make_network = [model, heads](std::uint64_t arm_seed) {
        return build_network(model, heads, arm_seed);
    };

    auto report = mu_sweep(ds, splits, sc);
    if (report.rows.empty()) throw NumericalError("sweep produced no rows; all arms failed");

    fs::create_directories(out_dir);
    const std::string csv = (fs::path(out_dir) / "sweep.csv").string();
    write_sweep_csv(report, csv);
    write_sweep_svg(report, (fs::path(out_dir) / "sweep_positive.svg").string(),
                    (fs::path(out_dir) / "sweep_negated.svg").string());

    std::cout << "sweep complete: " << report.rows.size() << " rows, best mu arm '"
              << report.best_mu() << "'\n";
    for (const auto& f : report.failures) log_warn(f);
    std::cout << "report: " << csv << "\n";
    return kExitOk;
}

int cmd_eval(RunConfig cfg, const std::string& ckpt_path, const std::string& data_path,
             bool lenient) {
    auto ds = load_data(data_path, lenient);
    cfg.model.input_size = ds.image_size;
    auto net = build_network(cfg.model, ds.head_count(), 1);
    try {
        load_network(*net, ckpt_path);
    } catch (const std::exception& e) {
        throw DataError(e.what());
    }

    std::vector<std::size_t> all(ds.samples.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    auto results = evaluate(*net, ds, all);
    auto names = head_names(ds);
    std::cout << "per-head AUC on " << ds.samples.size() << " samples (unambiguous only):\n";
    std::cout << std::left << std::setw(20) << "head" << std::right << std::setw(10) << "auc"
              << std::setw(8) << "n_pos" << std::setw(8) << "n_neg" << "\n";
    for (std::size_t h = 0; h < results.size(); ++h) {
        std::cout << std::left << std::setw(20) << names[h] << std::right << std::setw(10)
                  << fmt_auc(results[h]);
        if (results[h])
            std::cout << std::setw(8) << results[h]->n_pos << std::setw(8) << results[h]->n_neg;
        std::cout << "\n";
    }
    return kExitOk;
}

int cmd_gradcheck() {
    struct Check {
        std::string name;
        double err;
        double tol;
    };
    std::vector<Check> checks;
    Rng rng(101);
    auto random_tensor = [&rng](std::vector<std::size_t> shape, double scale = 1.0) {
        Tensor<double> t(std::move(shape));
        for (auto& v : t.data) v = rng.normal(0.0, scale);
        return t;
    };
    constexpr double kH = 1e-5;

    for (const auto& [stride, dilation] :
         std::vector<std::pair<std::size_t, std::size_t>>{{1, 1}, {1, 2}, {2, 1}}) {
        Tensor<double> x = random_tensor({2, 2, 6, 6});
        Tensor<double> k = random_tensor({3, 2, 3, 3});
        Tensor<double> b = random_tensor({3});
        ConvSpec spec{stride, dilation, dilation};
        auto build = [spec](Tape<double>& t, const std::vector<Tensor<double>*>& in) {
            auto y = t.conv2d(t.param(in[0]), t.param(in[1]), t.param(in[2]), spec);
            auto s = t.sum(t.sigmoid(y));
            t.backward(s);
            return t.value(s)[0];
        };
        checks.push_back({"conv2d stride=" + std::to_string(stride) +
                              " dilation=" + std::to_string(dilation),
                          gradcheck::check_op<double>(build, {&x, &k, &b}, kH), 1e-6});
    }
    {
        Tensor<double> x = random_tensor({2, 3, 4, 4});
        for (auto& v : x.data)
            if (std::abs(v) < 0.05) v += 0.1;  // stay off the relu kink
        Tensor<double> w = random_tensor({2, 3});
        Tensor<double> b = random_tensor({2});
        auto build = [](Tape<double>& t, const std::vector<Tensor<double>*>& in) {
            auto a = t.relu(t.param(in[0]));
            auto d = t.dense(t.global_avg_pool(a), t.param(in[1]), t.param(in[2]));
            auto s = t.sum(t.sigmoid(d));
            t.backward(s);
            return t.value(s)[0];
        };
        checks.push_back({"dense/relu/sigmoid/gap",
                          gradcheck::check_op<double>(build, {&x, &w, &b}, kH), 1e-6});
    }
    {
        Tensor<double> x = random_tensor({3, 2, 4, 4});
        Tensor<double> gamma = random_tensor({2}, 0.3);
        for (auto& g : gamma.data) g += 1.0;
        Tensor<double> beta = random_tensor({2}, 0.3);
        auto build = [](Tape<double>& t, const std::vector<Tensor<double>*>& in) {
            BatchNormState<double> state(2);
            auto y = t.batch_norm(t.param(in[0]), t.param(in[1]), t.param(in[2]), &state, true);
            auto s = t.sum(t.sigmoid(y));
            t.backward(s);
            return t.value(s)[0];
        };
        // wide step: cancellation noise dominates the small per-element
        // gradients batch norm produces at kH
        checks.push_back({"batch_norm", gradcheck::check_op<double>(build, {&x, &gamma, &beta}, 1e-4),
                          1e-6});
    }
    {
        Tensor<double> x = random_tensor({2, 4, 3, 3});
        auto build = [](Tape<double>& t, const std::vector<Tensor<double>*>& in) {
            Rng mask(5);  // same mask every evaluation
            auto a = t.dropout(t.param(in[0]), 0.3, &mask, true);
            a = t.spatial_dropout(a, 0.2, &mask, true);
            a = t.gaussian_noise(a, 0.1, &mask, true);
            auto s = t.sum(t.sigmoid(a));
            t.backward(s);
            return t.value(s)[0];
        };
        checks.push_back({"dropout/noise", gradcheck::check_op<double>(build, {&x}, kH), 1e-6});
    }
    {
        Tensor<double> z = random_tensor({3, 4});
        std::vector<std::uint8_t> y = {1, 0, 1, 0, 0, 1, 0, 1, 1, 1, 0, 0};
        std::vector<double> w1(12), w0(12);
        for (auto& v : w1) v = rng.uniform(0.1, 1.0);
        for (auto& v : w0) v = rng.uniform(0.1, 1.0);
        auto build = [&](Tape<double>& t, const std::vector<Tensor<double>*>& in) {
            auto loss = t.wbce_loss(t.param(in[0]), y, w1, w0);
            t.backward(loss);
            return t.value(loss)[0];
        };
        checks.push_back({"wbce_loss", gradcheck::check_op<double>(build, {&z}, kH), 1e-6});
    }
    {
        CustomNetConfig cfg;
        cfg.init_seed = 7;
        CustomNet<float> net(cfg);
        CustomNet<double> twin(cfg);
        Rng jr(102);
        gradcheck::jitter_parameters(net, jr);  // move off the relu kinks at init
        Rng img(103);
        Tensor<float> input({2, 1, cfg.input_size, cfg.input_size});
        for (auto& v : input.data) v = static_cast<float>(img.uniform());
        std::vector<std::uint8_t> y = {1, 0, 0, 1, 0, 1, 1, 0};
        std::vector<float> w1(8, 0.7f), w0(8, 0.3f);
        Rng dir(104);
        checks.push_back({"end-to-end db_net (32-bit vs 64-bit twin)",
                          gradcheck::check_network_directional_vs_double(net, twin, input, y, w1,
                                                                         w0, 3, 1e-7, dir),
                          1e-3});
    }

    bool all_ok = true;
    for (const auto& c : checks) {
        const bool ok = c.err < c.tol;
        all_ok = all_ok && ok;
        std::cout << (ok ? "PASS " : "FAIL ") << std::left << std::setw(42) << c.name
                  << " max rel error " << std::scientific << std::setprecision(3) << c.err
                  << " (tolerance " << c.tol << ")\n"
                  << std::defaultfloat;
    }
    if (!all_ok) throw NumericalError("gradient check failed");
    return kExitOk;
}

int cmd_report(const std::string& in_csv, const std::string& out_dir) {
    SweepReport report;
    try {
        report = read_sweep_csv(in_csv);
    } catch (const std::exception& e) {
        throw DataError(e.what());
    }
    if (report.rows.empty()) throw DataError("sweep CSV has no rows: " + in_csv);
    fs::create_directories(out_dir);
    const std::string pos_svg = (fs::path(out_dir) / "sweep_positive.svg").string();
    const std::string neg_svg = (fs::path(out_dir) / "sweep_negated.svg").string();
    write_sweep_svg(report, pos_svg, neg_svg);

    // arm x head mean table
    std::vector<std::string> arms;
    for (const auto& r : report.rows)
        if (std::find(arms.begin(), arms.end(), r.arm) == arms.end()) arms.push_back(r.arm);
    std::cout << std::left << std::setw(12) << "arm";
    for (const auto& h : report.head_names) std::cout << std::right << std::setw(16) << h;
    std::cout << "\n";
    for (const auto& arm : arms) {
        std::cout << std::left << std::setw(12) << arm;
        for (const auto& h : report.head_names) {
            const double m = report.mean_auc(arm, h);
            std::cout << std::right << std::setw(16);
            if (std::isnan(m)) std::cout << "n/a";
            else std::cout << std::fixed << std::setprecision(4) << m;
        }
        std::cout << "\n";
    }
    std::cout << "best mu arm: " << report.best_mu() << "\n";
    std::cout << "charts: " << pos_svg << ", " << neg_svg << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ambiguity-aware multi-label training toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir, data_path, reports_path, vocab_path, triggers_path,
        ckpt_path, in_csv;
    std::uint64_t seed = 0;
    double lr = 0.0, mu = 0.0;
    std::size_t epochs = 0, n_seeds = 3, jobs = 1;
    std::vector<double> grid;
    bool lenient = false;

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    synth->add_option("--config", config_path, "run config JSON");
    synth->add_option("--seed", seed, "generation seed");
    synth->add_option("--out", out_dir, "output directory")->required();

    auto* label = app.add_subcommand("label", "label free-text reports into a manifest");
    label->add_option("--reports", reports_path, "reports JSONL ({report_id, body} per line)")
        ->required();
    label->add_option("--vocab", vocab_path, "finding vocabulary file")->required();
    label->add_option("--triggers", triggers_path, "negation trigger file (optional)");
    label->add_option("--out", out_dir, "output manifest CSV")->required();

    auto* train_cmd = app.add_subcommand("train", "train one model on a manifest");
    train_cmd->add_option("--config", config_path, "run config JSON");
    train_cmd->add_option("--data", data_path, "manifest CSV")->required();
    train_cmd->add_option("--seed", seed, "training seed");
    train_cmd->add_option("--out", out_dir, "output directory")->required();
    train_cmd->add_option("--lr", lr, "learning rate override");
    train_cmd->add_option("--epochs", epochs, "epoch count override");
    train_cmd->add_option("--mu", mu, "enable modifiers with this mu");
    train_cmd->add_flag("--lenient", lenient, "drop contradictory rows instead of failing");

    auto* sweep = app.add_subcommand("sweep", "mu sweep with baseline arms");
    sweep->add_option("--config", config_path, "run config JSON");
    sweep->add_option("--data", data_path, "manifest CSV")->required();
    sweep->add_option("--seed", seed, "master seed");
    sweep->add_option("--out", out_dir, "output directory")->required();
    sweep->add_option("--grid", grid, "mu grid override")->delimiter(',');
    sweep->add_option("--seeds", n_seeds, "number of seeds per arm");
    sweep->add_option("--jobs", jobs, "parallel arms (default 1)");
    sweep->add_flag("--lenient", lenient, "drop contradictory rows instead of failing");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a manifest");
    eval_cmd->add_option("--config", config_path, "run config JSON (model architecture)");
    eval_cmd->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();
    eval_cmd->add_option("--data", data_path, "manifest CSV")->required();
    eval_cmd->add_flag("--lenient", lenient, "drop contradictory rows instead of failing");

    app.add_subcommand("gradcheck", "run the finite-difference gradient suite");

    auto* report = app.add_subcommand("report", "render a sweep CSV into SVG charts");
    report->add_option("--in", in_csv, "sweep CSV")->required();
    report->add_option("--out-dir", out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints usage/message
        return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
    }

    try {
        RunConfig cfg = load_run_config(config_path);
        if (synth->parsed()) return cmd_synth(cfg, synth, seed, out_dir);
        if (label->parsed()) return cmd_label(reports_path, vocab_path, triggers_path, out_dir);
        if (train_cmd->parsed())
            return cmd_train(cfg, train_cmd, seed, data_path, out_dir, lenient, lr, epochs, mu);
        if (sweep->parsed())
            return cmd_sweep(cfg, sweep, seed, data_path, out_dir, lenient, grid, n_seeds, jobs);
        if (eval_cmd->parsed()) return cmd_eval(cfg, ckpt_path, data_path, lenient);
        if (app.get_subcommand("gradcheck")->parsed()) return cmd_gradcheck();
        if (report->parsed()) return cmd_report(in_csv, out_dir);
    } catch (const ConfigError& e) {
        log_error(e.what());
        return kExitConfig;
    } catch (const DataError& e) {
        log_error(e.what());
        return kExitData;
    } catch (const NumericalError& e) {
        log_error(e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        log_error(e.what());
        return kExitNumerical;
    }
    return kExitUsage;
}
