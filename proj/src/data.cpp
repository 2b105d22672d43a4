#include "ambiweight/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

namespace ambiweight {

namespace fs = std::filesystem;

ShapeKind shape_kind_from_string(const std::string& s) {
    if (s == "blob") return ShapeKind::Blob;
    if (s == "line") return ShapeKind::Line;
    if (s == "ring") return ShapeKind::Ring;
    throw std::invalid_argument("unknown shape kind: '" + s + "'");
}

const char* to_string(ShapeKind k) {
    switch (k) {
        case ShapeKind::Blob: return "blob";
        case ShapeKind::Line: return "line";
        case ShapeKind::Ring: return "ring";
    }
    return "?";
}

LabelMatrix Dataset::label_matrix(const FindingVocabulary& vocab) const {
    std::vector<std::string> ids;
    std::vector<std::uint8_t> targets;
    ids.reserve(samples.size());
    for (const auto& s : samples) {
        ids.push_back(s.sample_id);
        auto row = encode_targets(s.states, vocab);
        targets.insert(targets.end(), row.begin(), row.end());
    }
    return LabelMatrix(vocab.head_count(), std::move(ids), std::move(targets));
}

FindingVocabulary Dataset::vocabulary() const {
    std::vector<Finding> findings;
    for (std::size_t i = 0; i < finding_names.size(); ++i)
        findings.push_back({static_cast<int>(i), finding_names[i], {}});
    return FindingVocabulary(std::move(findings));
}

namespace {

void render_blob(std::vector<float>& img, std::size_t size, Rng& rng) {
    const double cx = rng.uniform(0.25, 0.75) * size;
    const double cy = rng.uniform(0.25, 0.75) * size;
    const double radius = rng.uniform(0.10, 0.18) * size;
    const double amp = rng.uniform(0.55, 0.85);
    for (std::size_t i = 0; i < size; ++i)
        for (std::size_t j = 0; j < size; ++j) {
            const double d2 = (i - cy) * (i - cy) + (j - cx) * (j - cx);
            img[i * size + j] += static_cast<float>(amp * std::exp(-d2 / (2 * radius * radius)));
        }
}

void render_line(std::vector<float>& img, std::size_t size, Rng& rng) {
    const double angle = rng.uniform(0.0, 3.14159265358979);
    const double cx = rng.uniform(0.3, 0.7) * size;
    const double cy = rng.uniform(0.3, 0.7) * size;
    const double nx = -std::sin(angle), ny = std::cos(angle);
    const double thickness = rng.uniform(0.8, 1.6);
    const double amp = rng.uniform(0.55, 0.85);
    for (std::size_t i = 0; i < size; ++i)
        for (std::size_t j = 0; j < size; ++j) {
            const double dist = std::abs((j - cx) * nx + (i - cy) * ny);
            img[i * size + j] += static_cast<float>(amp * std::exp(-dist * dist / (2 * thickness * thickness)));
        }
}

void render_ring(std::vector<float>& img, std::size_t size, Rng& rng) {
    const double cx = rng.uniform(0.3, 0.7) * size;
    const double cy = rng.uniform(0.3, 0.7) * size;
    const double radius = rng.uniform(0.15, 0.30) * size;
    const double thickness = rng.uniform(1.0, 2.0);
    const double amp = rng.uniform(0.55, 0.85);
    for (std::size_t i = 0; i < size; ++i)
        for (std::size_t j = 0; j < size; ++j) {
            const double d = std::sqrt((i - cy) * (i - cy) + (j - cx) * (j - cx)) - radius;
            img[i * size + j] += static_cast<float>(amp * std::exp(-d * d / (2 * thickness * thickness)));
        }
}

std::string csv_field(const std::string& line, std::size_t& pos) {
    auto comma = line.find(',', pos);
    std::string field = comma == std::string::npos ? line.substr(pos) : line.substr(pos, comma - pos);
    pos = comma == std::string::npos ? line.size() : comma + 1;
    return field;
}

}  // namespace

Dataset generate(const SynthConfig& cfg) {
    for (const auto& f : cfg.findings) {
        // prevalence 0 is allowed as the degenerate all-absent case
        if (f.prevalence < 0.0 || f.prevalence >= 1.0)
            throw std::invalid_argument("generate: prevalence out of [0,1) for " + f.name);
        if (f.p_affirm_given_present < 0 || f.p_affirm_given_present > 1 ||
            f.p_negate_given_absent < 0 || f.p_negate_given_absent > 1)
            throw std::invalid_argument("generate: report policy probability out of [0,1] for " + f.name);
    }
    Dataset ds;
    ds.image_size = cfg.image_size;
    for (const auto& f : cfg.findings) ds.finding_names.push_back(f.name);
    ds.samples.resize(cfg.n_samples);
    const std::size_t size = cfg.image_size;
    for (std::size_t s = 0; s < cfg.n_samples; ++s) {
        Rng rng(mix_seed(cfg.seed, 0x64617461ULL, s));
        Sample& sample = ds.samples[s];
        sample.sample_id = "s" + std::to_string(s);
        sample.image.assign(size * size, 0.0f);
        for (auto& px : sample.image)
            px = static_cast<float>(std::clamp(0.15 + rng.normal(0.0, cfg.background_noise), 0.0, 1.0));
        sample.truth.resize(cfg.findings.size());
        sample.states.resize(cfg.findings.size());
        for (std::size_t f = 0; f < cfg.findings.size(); ++f) {
            const FindingSpec& spec = cfg.findings[f];
            const bool present = rng.bernoulli(spec.prevalence);
            sample.truth[f] = present ? 1 : 0;
            if (present) {
                switch (spec.shape) {
                    case ShapeKind::Blob: render_blob(sample.image, size, rng); break;
                    case ShapeKind::Line: render_line(sample.image, size, rng); break;
                    case ShapeKind::Ring: render_ring(sample.image, size, rng); break;
                }
                sample.states[f] = rng.bernoulli(spec.p_affirm_given_present) ? MentionState::Affirmed
                                                                              : MentionState::NoMention;
            } else {
                sample.states[f] = rng.bernoulli(spec.p_negate_given_absent) ? MentionState::Negated
                                                                             : MentionState::NoMention;
            }
        }
        for (auto& px : sample.image) px = std::clamp(px, 0.0f, 1.0f);
    }
    return ds;
}

SplitIndices split(std::size_t n_samples, double train_frac, double val_frac, double test_frac,
                   std::uint64_t seed) {
    if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
        throw std::invalid_argument("split: fractions must sum to 1");
    if (train_frac < 0 || val_frac < 0 || test_frac < 0)
        throw std::invalid_argument("split: negative fraction");
    std::vector<std::size_t> order(n_samples);
    std::iota(order.begin(), order.end(), std::size_t(0));
    Rng rng(mix_seed(seed, 0x73706c6974ULL));
    std::shuffle(order.begin(), order.end(), rng.engine());
    const std::size_t n_train = static_cast<std::size_t>(std::llround(train_frac * n_samples));
    const std::size_t n_val = static_cast<std::size_t>(std::llround(val_frac * n_samples));
    SplitIndices out;
    out.train.assign(order.begin(), order.begin() + n_train);
    out.val.assign(order.begin() + n_train, order.begin() + std::min(n_train + n_val, n_samples));
    out.test.assign(order.begin() + std::min(n_train + n_val, n_samples), order.end());
    return out;
}

std::vector<float> augment(const std::vector<float>& image, std::size_t size,
                           const AugmentConfig& cfg, Rng& rng) {
    if (!rng.bernoulli(cfg.apply_prob)) return image;
    const double theta = rng.uniform(-cfg.rotation_deg, cfg.rotation_deg) * 3.14159265358979 / 180.0;
    const double dx = rng.uniform(-cfg.shift_frac, cfg.shift_frac) * size;
    const double dy = rng.uniform(-cfg.shift_frac, cfg.shift_frac) * size;
    const double scale = rng.uniform(cfg.scale_min, cfg.scale_max);
    if (theta == 0.0 && dx == 0.0 && dy == 0.0 && scale == 1.0) return image;

    const double c = std::cos(theta), s = std::sin(theta);
    const double center = (static_cast<double>(size) - 1.0) / 2.0;
    std::vector<float> out(size * size, 0.0f);
    // inverse map: output pixel -> source coordinates
    for (std::size_t i = 0; i < size; ++i)
        for (std::size_t j = 0; j < size; ++j) {
            const double y = (static_cast<double>(i) - center - dy) / scale;
            const double x = (static_cast<double>(j) - center - dx) / scale;
            const double sx = c * x + s * y + center;
            const double sy = -s * x + c * y + center;
            const auto x0 = static_cast<std::ptrdiff_t>(std::floor(sx));
            const auto y0 = static_cast<std::ptrdiff_t>(std::floor(sy));
            const double fx = sx - x0, fy = sy - y0;
            double acc = 0;
            for (int di = 0; di <= 1; ++di)
                for (int dj = 0; dj <= 1; ++dj) {
                    const std::ptrdiff_t yy = y0 + di, xx = x0 + dj;
                    if (yy < 0 || yy >= static_cast<std::ptrdiff_t>(size) || xx < 0 ||
                        xx >= static_cast<std::ptrdiff_t>(size))
                        continue;  // zero fill outside
                    const double w = (di ? fy : 1 - fy) * (dj ? fx : 1 - fx);
                    acc += w * image[yy * size + xx];
                }
            out[i * size + j] = static_cast<float>(std::clamp(acc, 0.0, 1.0));
        }
    return out;
}

void write_pgm(const std::string& path, const std::vector<float>& image, std::size_t width,
               std::size_t height) {
    if (image.size() != width * height) throw std::invalid_argument("write_pgm: size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write PGM: " + path);
    out << "P5\n" << width << " " << height << "\n255\n";
    std::vector<unsigned char> bytes(image.size());
    for (std::size_t i = 0; i < image.size(); ++i)
        bytes[i] = static_cast<unsigned char>(std::lround(std::clamp(image[i], 0.0f, 1.0f) * 255.0f));
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<float> read_pgm(const std::string& path, std::size_t& width, std::size_t& height) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open PGM: " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw std::runtime_error("not a binary (P5) PGM: " + path);
    std::size_t maxval = 0;
    // header tokens may be separated by whitespace/comments
    auto next_value = [&in, &path]() -> std::size_t {
        std::string tok;
        while (in >> tok) {
            if (tok[0] == '#') {
                std::string rest;
                std::getline(in, rest);
                continue;
            }
            return std::stoul(tok);
        }
        throw std::runtime_error("truncated PGM header: " + path);
    };
    width = next_value();
    height = next_value();
    maxval = next_value();
    if (maxval == 0 || maxval > 255) throw std::runtime_error("unsupported PGM maxval in " + path);
    in.get();  // single whitespace after maxval
    std::vector<unsigned char> bytes(width * height);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!in) throw std::runtime_error("truncated PGM data: " + path);
    std::vector<float> image(bytes.size());
    for (std::size_t i = 0; i < bytes.size(); ++i)
        image[i] = static_cast<float>(bytes[i]) / static_cast<float>(maxval);
    return image;
}

void save_manifest(const Dataset& dataset, const std::string& dir, const std::string& manifest_name) {
    fs::create_directories(fs::path(dir) / "images");
    std::ofstream out(fs::path(dir) / manifest_name);
    if (!out) throw std::runtime_error("cannot write manifest in " + dir);
    out << "sample_id,image_path";
    for (const auto& name : dataset.finding_names) out << "," << name << "_state";
    out << "\n";
    for (const auto& s : dataset.samples) {
        const std::string rel = "images/" + s.sample_id + ".pgm";
        write_pgm((fs::path(dir) / rel).string(), s.image, dataset.image_size, dataset.image_size);
        out << s.sample_id << "," << rel;
        for (auto st : s.states) out << "," << to_string(st);
        out << "\n";
    }
}

Dataset load_manifest(const std::string& manifest_path, IngestMode mode, std::size_t* dropped) {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("cannot open manifest: " + manifest_path);
    const fs::path base = fs::path(manifest_path).parent_path();

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty manifest: " + manifest_path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    Dataset ds;
    {
        std::size_t pos = 0;
        const std::string c0 = csv_field(line, pos);
        const std::string c1 = csv_field(line, pos);
        if (c0 != "sample_id" || c1 != "image_path")
            throw std::runtime_error("manifest header must start with 'sample_id,image_path': " +
                                     manifest_path);
        while (pos < line.size()) {
            std::string col = csv_field(line, pos);
            const std::string suffix = "_state";
            if (col.size() <= suffix.size() || col.substr(col.size() - suffix.size()) != suffix)
                throw std::runtime_error("manifest: bad state column '" + col + "'");
            ds.finding_names.push_back(col.substr(0, col.size() - suffix.size()));
        }
    }
    if (ds.finding_names.empty()) throw std::runtime_error("manifest has no finding columns");

    std::size_t dropped_count = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t pos = 0;
        Sample s;
        s.sample_id = csv_field(line, pos);
        const std::string image_rel = csv_field(line, pos);
        bool contradiction = false;
        for (std::size_t f = 0; f < ds.finding_names.size(); ++f) {
            if (pos > line.size())
                throw std::runtime_error("manifest line " + std::to_string(line_no) + ": missing state column");
            const std::string field = csv_field(line, pos);
            if (field == "contradiction") {
                contradiction = true;
                s.states.push_back(MentionState::NoMention);
            } else {
                try {
                    s.states.push_back(mention_state_from_string(field));
                } catch (const std::exception&) {
                    throw std::runtime_error("manifest line " + std::to_string(line_no) + ": bad state '" +
                                             field + "'");
                }
            }
        }
        if (contradiction) {
            if (mode == IngestMode::Strict)
                throw std::runtime_error("manifest line " + std::to_string(line_no) +
                                         ": contradictory (1,1) pair for sample " + s.sample_id);
            ++dropped_count;
            continue;
        }
        std::size_t w = 0, h = 0;
        s.image = read_pgm((base / image_rel).string(), w, h);
        if (w != h) throw std::runtime_error("manifest: non-square image for sample " + s.sample_id);
        if (ds.image_size == 0) ds.image_size = w;
        if (w != ds.image_size)
            throw std::runtime_error("manifest: inconsistent image size for sample " + s.sample_id);
        ds.samples.push_back(std::move(s));
    }
    if (dropped) *dropped = dropped_count;
    return ds;
}

}  // namespace ambiweight
