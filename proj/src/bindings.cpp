// Python bindings for the core operations: pair-state logic, class weights
// and modifiers, the weighted loss, report labeling, synthetic data, ROC AUC
// and the training/sweep harness.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>
#include <vector>

#include "ambiweight/data.hpp"
#include "ambiweight/eval.hpp"
#include "ambiweight/labelcore.hpp"
#include "ambiweight/loss.hpp"
#include "ambiweight/models.hpp"
#include "ambiweight/textlabeler.hpp"
#include "ambiweight/weighting.hpp"

namespace py = pybind11;
using namespace ambiweight;

namespace {

MentionState state_from_string(const std::string& s) { return mention_state_from_string(s); }

std::vector<std::string> states_to_strings(const std::vector<MentionState>& states) {
    std::vector<std::string> out;
    out.reserve(states.size());
    for (auto s : states) out.push_back(to_string(s));
    return out;
}

}  // namespace

PYBIND11_MODULE(_ambiweight, m) {
    m.doc() = "ambiguity-aware multi-label training toolkit (C++ core)";

    // ---------------------------------------------------------- pair logic
    m.def(
        "pair_state",
        [](int a, int a_bar) { return std::string(to_string(pair_state(a, a_bar))); },
        py::arg("a"), py::arg("a_bar"),
        "Interpretation of a (label, negation) bit pair: Contradiction, "
        "PositiveExists, NegationExists or Ambiguous.");
    m.def(
        "encode_targets",
        [](const std::vector<std::string>& states) {
            std::vector<MentionState> ms;
            ms.reserve(states.size());
            for (const auto& s : states) ms.push_back(state_from_string(s));
            std::vector<Finding> findings;
            for (std::size_t i = 0; i < states.size(); ++i)
                findings.push_back({static_cast<int>(i), "f" + std::to_string(i), {}});
            return encode_targets(ms, FindingVocabulary(std::move(findings)));
        },
        py::arg("states"),
        "Per-finding mention states ('affirmed'/'negated'/'nomention') to the "
        "interleaved 2K head targets.");

    // ------------------------------------------------- weights and modifiers
    py::class_<ClassWeights>(m, "ClassWeights")
        .def_readonly("w1", &ClassWeights::w1)
        .def_readonly("w0", &ClassWeights::w0)
        .def_readonly("f1", &ClassWeights::f1)
        .def_readonly("f0", &ClassWeights::f0);
    m.def("class_weights", &class_weights, py::arg("f1"), py::arg("f0"),
          "Inverse-frequency weights: w1 = f0/(f1+f0), w0 = 1 - w1.");

    m.def(
        "draw_modifier",
        [](double mu, double sigma, std::uint64_t seed, std::uint64_t sample_key,
           std::uint64_t finding_index, std::uint64_t step) {
            ModifierConfig cfg;
            cfg.mu = mu;
            cfg.sigma = sigma;
            cfg.seed = seed;
            Rng stream = modifier_stream(cfg, sample_key, finding_index, step);
            auto d = draw_modifier(cfg, stream);
            return py::make_tuple(d.m, d.m_bar);
        },
        py::arg("mu"), py::arg("sigma"), py::arg("seed"), py::arg("sample_key") = 0,
        py::arg("finding_index") = 0, py::arg("step") = 0,
        "One deterministic modifier draw (m, m_bar) for the given stream key.");

    m.def(
        "effective_weights",
        [](const std::string& pair, const ClassWeights& pos, const ClassWeights& neg, double m,
           double m_bar) {
            PairState p;
            if (pair == "contradiction") p = PairState::Contradiction;
            else if (pair == "positive_exists") p = PairState::PositiveExists;
            else if (pair == "negation_exists") p = PairState::NegationExists;
            else if (pair == "ambiguous") p = PairState::Ambiguous;
            else throw std::invalid_argument("unknown pair state: " + pair);
            auto hw = effective_weights(p, pos, neg, {m, m_bar});
            return py::make_tuple(hw.positive, hw.negated);
        },
        py::arg("pair"), py::arg("positive"), py::arg("negated"), py::arg("m"), py::arg("m_bar"),
        "Apply the modifier draw to an ambiguous pair's w0; identity otherwise.");

    // ---------------------------------------------------------------- loss
    m.def(
        "multilabel_loss",
        [](const std::vector<std::uint8_t>& y, const std::vector<double>& p,
           const std::vector<double>& w1, const std::vector<double>& w0, std::size_t n_heads) {
            LossBatch<double> batch;
            if (n_heads == 0 || y.size() % n_heads != 0)
                throw std::invalid_argument("multilabel_loss: bad head count");
            batch.n_heads = n_heads;
            batch.n_samples = y.size() / n_heads;
            batch.y = y;
            batch.p = p;
            batch.w1 = w1;
            batch.w0 = w0;
            return multilabel_loss(batch);
        },
        py::arg("y"), py::arg("p"), py::arg("w1"), py::arg("w0"), py::arg("n_heads"),
        "Weighted BCE averaged per head then across heads; row-major batch x heads.");

    // ------------------------------------------------------------- labeling
    m.def(
        "label_report",
        [](const std::string& body, const std::vector<std::string>& names) {
            std::vector<Finding> findings;
            for (std::size_t i = 0; i < names.size(); ++i)
                findings.push_back({static_cast<int>(i), names[i], {names[i]}});
            FindingVocabulary vocab(std::move(findings));
            NegationRuleSet rules;
            return states_to_strings(label_report({"r", body}, vocab, rules));
        },
        py::arg("body"), py::arg("findings"),
        "Rule-based mention states for each finding name in the report body.");
    m.def("tokenize", &tokenize, py::arg("body"));

    // ------------------------------------------------------------ evaluation
    m.def(
        "roc_auc",
        [](const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
            return roc_auc(scores, labels).auc;
        },
        py::arg("scores"), py::arg("labels"),
        "Mann-Whitney AUC with ties counted 0.5.");

    // ----------------------------------------------------- data and training
    py::class_<Dataset>(m, "Dataset")
        .def_property_readonly("image_size", [](const Dataset& d) { return d.image_size; })
        .def_property_readonly("finding_names",
                               [](const Dataset& d) { return d.finding_names; })
        .def("__len__", [](const Dataset& d) { return d.samples.size(); })
        .def("states",
             [](const Dataset& d, std::size_t i) {
                 return states_to_strings(d.samples.at(i).states);
             })
        .def("image", [](const Dataset& d, std::size_t i) { return d.samples.at(i).image; });

    m.def(
        "generate",
        [](std::size_t n_samples, std::size_t image_size, std::uint64_t seed,
           const std::vector<py::dict>& findings, double background_noise) {
            SynthConfig cfg;
            cfg.n_samples = n_samples;
            cfg.image_size = image_size;
            cfg.seed = seed;
            cfg.background_noise = background_noise;
            if (!findings.empty()) {
                cfg.findings.clear();
                for (const auto& f : findings) {
                    FindingSpec spec;
                    spec.name = f["name"].cast<std::string>();
                    if (f.contains("shape"))
                        spec.shape = shape_kind_from_string(f["shape"].cast<std::string>());
                    if (f.contains("prevalence"))
                        spec.prevalence = f["prevalence"].cast<double>();
                    if (f.contains("p_affirm_given_present"))
                        spec.p_affirm_given_present = f["p_affirm_given_present"].cast<double>();
                    if (f.contains("p_negate_given_absent"))
                        spec.p_negate_given_absent = f["p_negate_given_absent"].cast<double>();
                    cfg.findings.push_back(std::move(spec));
                }
            }
            return generate(cfg);
        },
        py::arg("n_samples"), py::arg("image_size") = 32, py::arg("seed") = 0,
        py::arg("findings") = std::vector<py::dict>{}, py::arg("background_noise") = 0.05,
        "Synthetic dataset with per-finding report policies.");

    m.def("load_manifest",
          [](const std::string& path, bool lenient) {
              std::size_t dropped = 0;
              auto ds = load_manifest(path, lenient ? IngestMode::Lenient : IngestMode::Strict,
                                      &dropped);
              return py::make_tuple(ds, dropped);
          },
          py::arg("path"), py::arg("lenient") = false);

    m.def(
        "train_and_evaluate",
        [](const Dataset& ds, std::uint64_t seed, std::size_t epochs, double lr,
           std::size_t batch_size, bool modifiers, double mu, double sigma) {
            auto splits = split(ds.samples.size(), 0.7, 0.1, 0.2, seed);
            SimpleCNNConfig mc;
            mc.conv_plan = {{8, 2}, {16, 2}};
            mc.head_count = ds.head_count();
            mc.init_seed = seed;
            SimpleCNN<float> net(mc);
            TrainConfig tc;
            tc.lr = lr;
            tc.batch_size = batch_size;
            tc.epochs = epochs;
            tc.augment_enabled = false;
            tc.seed = seed;
            tc.modifier.enabled = modifiers;
            tc.modifier.mu = mu;
            tc.modifier.sigma = sigma;
            tc.modifier.seed = seed;
            train(net, ds, splits.train, splits.val, tc);
            auto results = evaluate(net, ds, splits.test);
            py::dict out;
            auto names = head_names(ds);
            for (std::size_t h = 0; h < results.size(); ++h)
                out[py::str(names[h])] =
                    results[h] ? py::object(py::float_(results[h]->auc)) : py::none();
            return out;
        },
        py::arg("dataset"), py::arg("seed"), py::arg("epochs") = 2, py::arg("lr") = 1e-3,
        py::arg("batch_size") = 32, py::arg("modifiers") = false, py::arg("mu") = 0.8,
        py::arg("sigma") = 0.05,
        "Train a small CNN on a 70/10/20 split and return per-head test AUC "
        "on unambiguous samples.");
}
