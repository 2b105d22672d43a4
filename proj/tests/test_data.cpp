#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ambiweight/data.hpp"

using namespace ambiweight;
namespace fs = std::filesystem;

namespace {

SynthConfig small_config(std::uint64_t seed = 42) {
    SynthConfig cfg;
    cfg.n_samples = 50;
    cfg.image_size = 16;
    cfg.seed = seed;
    return cfg;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

double state_fraction(const Dataset& ds, std::size_t finding, MentionState which) {
    std::size_t hits = 0;
    for (const auto& s : ds.samples)
        if (s.states[finding] == which) ++hits;
    return static_cast<double>(hits) / static_cast<double>(ds.samples.size());
}

}  // namespace

TEST_CASE("generate") {
    SUBCASE("basic invariants: counts, ranges, unique ids") {
        auto ds = generate(small_config());
        REQUIRE(ds.samples.size() == 50);
        CHECK(ds.image_size == 16);
        CHECK(ds.finding_names == std::vector<std::string>{"blob", "line"});
        std::set<std::string> ids;
        for (const auto& s : ds.samples) {
            ids.insert(s.sample_id);
            REQUIRE(s.image.size() == 16 * 16);
            REQUIRE(s.truth.size() == 2);
            REQUIRE(s.states.size() == 2);
            for (float v : s.image) {
                CHECK(v >= 0.0f);
                CHECK(v <= 1.0f);
            }
        }
        CHECK(ids.size() == 50);
    }

    SUBCASE("same seed reproduces, different seed differs") {
        auto a = generate(small_config(7));
        auto b = generate(small_config(7));
        auto c = generate(small_config(8));
        REQUIRE(a.samples.size() == b.samples.size());
        for (std::size_t i = 0; i < a.samples.size(); ++i) {
            CHECK(a.samples[i].image == b.samples[i].image);
            CHECK(a.samples[i].truth == b.samples[i].truth);
            CHECK(a.samples[i].states == b.samples[i].states);
        }
        bool any_diff = false;
        for (std::size_t i = 0; i < a.samples.size(); ++i)
            if (a.samples[i].image != c.samples[i].image) any_diff = true;
        CHECK(any_diff);
    }

    SUBCASE("states follow the truth when the report policy is certain") {
        auto cfg = small_config();
        for (auto& f : cfg.findings) {
            f.p_affirm_given_present = 1.0;
            f.p_negate_given_absent = 1.0;
        }
        auto ds = generate(cfg);
        for (const auto& s : ds.samples)
            for (std::size_t f = 0; f < 2; ++f)
                CHECK(s.states[f] == (s.truth[f] ? MentionState::Affirmed : MentionState::Negated));
        auto matrix = ds.label_matrix(ds.vocabulary());
        CHECK(ambiguity_rate(matrix, ds.vocabulary(), 0) == 0.0);
    }

    SUBCASE("silent report policy makes every pair ambiguous") {
        auto cfg = small_config();
        for (auto& f : cfg.findings) {
            f.p_affirm_given_present = 0.0;
            f.p_negate_given_absent = 0.0;
        }
        auto ds = generate(cfg);
        auto vocab = ds.vocabulary();
        auto matrix = ds.label_matrix(vocab);
        CHECK(ambiguity_rate(matrix, vocab, 0) == 1.0);
        CHECK(ambiguity_rate(matrix, vocab, 1) == 1.0);
    }

    SUBCASE("no-mention rate matches the policy's closed form at n = 10000") {
        auto cfg = small_config(11);
        cfg.n_samples = 10000;
        cfg.findings[0].prevalence = 0.3;
        cfg.findings[0].p_affirm_given_present = 0.9;
        cfg.findings[0].p_negate_given_absent = 0.5;
        auto ds = generate(cfg);
        // P(NoMention) = prev*(1-p_affirm) + (1-prev)*(1-p_negate)
        const double expect = 0.3 * 0.1 + 0.7 * 0.5;
        // 4 binomial standard deviations ~ 0.0194
        CHECK(state_fraction(ds, 0, MentionState::NoMention) ==
              doctest::Approx(expect).epsilon(0.02 / expect));
        // prevalence itself is sampled correctly
        std::size_t present = 0;
        for (const auto& s : ds.samples) present += s.truth[0];
        CHECK(static_cast<double>(present) / 10000.0 == doctest::Approx(0.3).epsilon(0.02 / 0.3));
    }

    SUBCASE("generated labels never contradict") {
        auto ds = generate(small_config(5));
        auto matrix = ds.label_matrix(ds.vocabulary());
        CHECK(validate(matrix).empty());
    }

    SUBCASE("bad configs rejected") {
        auto cfg = small_config();
        cfg.findings[0].prevalence = 1.0;
        CHECK_THROWS_AS(generate(cfg), std::invalid_argument);
        cfg = small_config();
        cfg.findings[0].p_negate_given_absent = 1.5;
        CHECK_THROWS_AS(generate(cfg), std::invalid_argument);
    }
}

TEST_CASE("split") {
    SUBCASE("10 samples at 70/10/20") {
        auto s = split(10, 0.7, 0.1, 0.2, 1);
        CHECK(s.train.size() == 7);
        CHECK(s.val.size() == 1);
        CHECK(s.test.size() == 2);
    }

    SUBCASE("disjoint and exhaustive for odd sizes") {
        for (std::size_t n : {1u, 2u, 3u, 17u, 100u, 1001u}) {
            auto s = split(n, 0.7, 0.1, 0.2, 3);
            std::vector<std::size_t> all;
            for (const auto* part : {&s.train, &s.val, &s.test})
                all.insert(all.end(), part->begin(), part->end());
            REQUIRE(all.size() == n);
            std::sort(all.begin(), all.end());
            for (std::size_t i = 0; i < n; ++i) CHECK(all[i] == i);
        }
    }

    SUBCASE("deterministic in the seed and actually shuffled") {
        auto a = split(100, 0.7, 0.1, 0.2, 9);
        auto b = split(100, 0.7, 0.1, 0.2, 9);
        auto c = split(100, 0.7, 0.1, 0.2, 10);
        CHECK(a.train == b.train);
        CHECK(a.val == b.val);
        CHECK(a.test == b.test);
        CHECK(a.train != c.train);
        std::vector<std::size_t> sorted = a.train;
        std::sort(sorted.begin(), sorted.end());
        CHECK(a.train != sorted);  // first 70 indices in order would mean no shuffle
    }

    SUBCASE("fractions must sum to 1") {
        CHECK_THROWS_AS(split(10, 0.5, 0.1, 0.2, 1), std::invalid_argument);
        CHECK_THROWS_AS(split(10, 0.9, 0.2, -0.1, 1), std::invalid_argument);
    }
}

TEST_CASE("augment") {
    auto ds = generate(small_config(2));
    const auto& img = ds.samples[0].image;

    SUBCASE("apply_prob 0 is a bitwise identity") {
        AugmentConfig cfg;
        cfg.apply_prob = 0.0;
        Rng rng(1);
        for (int rep = 0; rep < 20; ++rep) CHECK(augment(img, 16, cfg, rng) == img);
    }

    SUBCASE("application rate is 80 percent within 1 point over 10000 trials") {
        AugmentConfig cfg;  // defaults: +-10 deg, +-10% shift, [0.95,1.05] scale, p=0.8
        Rng rng(77);
        std::size_t changed = 0;
        for (int rep = 0; rep < 10000; ++rep)
            if (augment(img, 16, cfg, rng) != img) ++changed;
        CHECK(static_cast<double>(changed) / 10000.0 == doctest::Approx(0.8).epsilon(0.01 / 0.8));
    }

    SUBCASE("output preserves shape and range") {
        AugmentConfig cfg;
        cfg.apply_prob = 1.0;
        Rng rng(5);
        for (int rep = 0; rep < 50; ++rep) {
            auto out = augment(img, 16, cfg, rng);
            REQUIRE(out.size() == img.size());
            for (float v : out) {
                CHECK(v >= 0.0f);
                CHECK(v <= 1.0f);
            }
        }
    }

    SUBCASE("deterministic given the same stream") {
        AugmentConfig cfg;
        Rng a(9), b(9);
        for (int rep = 0; rep < 10; ++rep) CHECK(augment(img, 16, cfg, a) == augment(img, 16, cfg, b));
    }
}

TEST_CASE("pgm io") {
    TempDir tmp("ambiweight_pgm_test");
    const std::string path = (tmp.path / "img.pgm").string();

    SUBCASE("byte-exact round trip") {
        std::vector<float> img(6 * 4);
        for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<float>(i * 10) / 255.0f;
        write_pgm(path, img, 6, 4);
        std::size_t w = 0, h = 0;
        auto back = read_pgm(path, w, h);
        CHECK(w == 6);
        CHECK(h == 4);
        CHECK(back == img);
    }

    SUBCASE("full white maps to exactly 1.0, black to 0.0") {
        write_pgm(path, {0.0f, 1.0f, 2.0f, -1.0f}, 2, 2);  // out-of-range clamps
        std::size_t w = 0, h = 0;
        auto back = read_pgm(path, w, h);
        CHECK(back == std::vector<float>{0.0f, 1.0f, 1.0f, 0.0f});
    }

    SUBCASE("header comments are skipped") {
        std::ofstream out(path, std::ios::binary);
        out << "P5\n# a comment\n2 1\n# another\n255\n";
        out.put(static_cast<char>(255));
        out.put(static_cast<char>(0));
        out.close();
        std::size_t w = 0, h = 0;
        auto back = read_pgm(path, w, h);
        CHECK(w == 2);
        CHECK(h == 1);
        CHECK(back == std::vector<float>{1.0f, 0.0f});
    }

    SUBCASE("non-P5 files are rejected") {
        std::ofstream out(path);
        out << "P2\n2 2\n255\n0 0 0 0\n";
        out.close();
        std::size_t w = 0, h = 0;
        CHECK_THROWS_AS(read_pgm(path, w, h), std::runtime_error);
    }
}

TEST_CASE("manifest io") {
    TempDir tmp("ambiweight_manifest_test");
    const std::string dir = tmp.path.string();
    const std::string manifest = (tmp.path / "manifest.csv").string();

    SUBCASE("round trip preserves states and quantized images") {
        auto ds = generate(small_config(13));
        save_manifest(ds, dir);
        auto back = load_manifest(manifest);
        REQUIRE(back.samples.size() == ds.samples.size());
        CHECK(back.image_size == ds.image_size);
        CHECK(back.finding_names == ds.finding_names);
        for (std::size_t i = 0; i < ds.samples.size(); ++i) {
            CHECK(back.samples[i].sample_id == ds.samples[i].sample_id);
            CHECK(back.samples[i].states == ds.samples[i].states);
            REQUIRE(back.samples[i].image.size() == ds.samples[i].image.size());
            for (std::size_t j = 0; j < ds.samples[i].image.size(); ++j) {
                const float quantized =
                    static_cast<float>(std::lround(ds.samples[i].image[j] * 255.0f)) / 255.0f;
                CHECK(back.samples[i].image[j] == quantized);
            }
        }
    }

    SUBCASE("ground truth never leaks into the manifest file") {
        auto ds = generate(small_config(13));
        save_manifest(ds, dir);
        std::ifstream in(manifest);
        std::stringstream all;
        all << in.rdbuf();
        const std::string text = all.str();
        CHECK(text.find("truth") == std::string::npos);
        CHECK(text.substr(0, text.find('\n')) == "sample_id,image_path,blob_state,line_state");
        // only observed mention states appear
        std::string line;
        std::istringstream reread(text);
        std::getline(reread, line);  // header
        while (std::getline(reread, line)) {
            const auto last = line.rfind(',');
            const std::string state = line.substr(last + 1);
            CHECK((state == "affirmed" || state == "negated" || state == "nomention"));
        }
    }

    SUBCASE("strict mode aborts on a contradictory row, naming the sample") {
        auto ds = generate(small_config(13));
        save_manifest(ds, dir);
        std::ofstream out(manifest, std::ios::app);
        out << "sbad,images/s0.pgm,contradiction,affirmed\n";
        out.close();
        CHECK_THROWS_WITH_AS(load_manifest(manifest, IngestMode::Strict),
                             doctest::Contains("sbad"), std::runtime_error);
    }

    SUBCASE("lenient mode drops contradictory rows and reports the count") {
        auto ds = generate(small_config(13));
        save_manifest(ds, dir);
        std::ofstream out(manifest, std::ios::app);
        out << "sbad1,images/s0.pgm,contradiction,affirmed\n";
        out << "sbad2,images/s1.pgm,negated,contradiction\n";
        out.close();
        std::size_t dropped = 0;
        auto back = load_manifest(manifest, IngestMode::Lenient, &dropped);
        CHECK(dropped == 2);
        CHECK(back.samples.size() == ds.samples.size());
        for (const auto& s : back.samples) {
            CHECK(s.sample_id != "sbad1");
            CHECK(s.sample_id != "sbad2");
        }
    }

    SUBCASE("malformed rows are reported with their line number") {
        auto ds = generate(small_config(13));
        ds.samples.resize(3);
        save_manifest(ds, dir);
        std::ofstream out(manifest, std::ios::app);
        out << "s99,images/s0.pgm,affirmed,upside_down\n";  // line 5
        out.close();
        CHECK_THROWS_WITH_AS(load_manifest(manifest), doctest::Contains("line 5"),
                             std::runtime_error);
    }

    SUBCASE("bad headers rejected") {
        std::ofstream out(manifest);
        out << "id,path,blob_state\n";
        out.close();
        CHECK_THROWS_AS(load_manifest(manifest), std::runtime_error);
        std::ofstream out2(manifest);
        out2 << "sample_id,image_path,blob\n";  // missing _state suffix
        out2.close();
        CHECK_THROWS_AS(load_manifest(manifest), std::runtime_error);
    }
}
