#include "ambiweight/labelcore.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace ambiweight {

namespace {

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

const char* to_string(MentionState s) {
    switch (s) {
        case MentionState::Affirmed: return "affirmed";
        case MentionState::Negated: return "negated";
        case MentionState::NoMention: return "nomention";
    }
    return "?";
}

const char* to_string(PairState s) {
    switch (s) {
        case PairState::Contradiction: return "contradiction";
        case PairState::PositiveExists: return "positive_exists";
        case PairState::NegationExists: return "negation_exists";
        case PairState::Ambiguous: return "ambiguous";
    }
    return "?";
}

MentionState mention_state_from_string(const std::string& s) {
    if (s == "affirmed") return MentionState::Affirmed;
    if (s == "negated") return MentionState::Negated;
    if (s == "nomention") return MentionState::NoMention;
    throw std::invalid_argument("unknown mention state: '" + s + "'");
}

FindingVocabulary::FindingVocabulary(std::vector<Finding> findings)
    : findings_(std::move(findings)) {
    std::unordered_set<int> seen;
    for (auto& f : findings_) {
        if (!seen.insert(f.finding_id).second)
            throw std::invalid_argument("duplicate finding_id " + std::to_string(f.finding_id));
        if (std::find(f.synonyms.begin(), f.synonyms.end(), f.canonical_name) == f.synonyms.end())
            f.synonyms.push_back(f.canonical_name);
        for (auto& syn : f.synonyms) {
            syn = to_lower(trim(syn));
            if (syn.empty()) throw std::invalid_argument("empty synonym for finding " + f.canonical_name);
        }
    }
}

FindingVocabulary FindingVocabulary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vocabulary file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

// Line format: finding_id,canonical_name,synonym1|synonym2|...
FindingVocabulary FindingVocabulary::parse(const std::string& text) {
    std::vector<Finding> findings;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto c1 = line.find(',');
        auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos)
            throw std::runtime_error("vocabulary line " + std::to_string(line_no) + ": expected 'id,name[,synonyms]'");
        Finding f;
        try {
            f.finding_id = std::stoi(trim(line.substr(0, c1)));
        } catch (const std::exception&) {
            throw std::runtime_error("vocabulary line " + std::to_string(line_no) + ": bad finding_id");
        }
        std::string name_part = c2 == std::string::npos ? line.substr(c1 + 1) : line.substr(c1 + 1, c2 - c1 - 1);
        f.canonical_name = to_lower(trim(name_part));
        if (f.canonical_name.empty())
            throw std::runtime_error("vocabulary line " + std::to_string(line_no) + ": empty canonical name");
        if (c2 != std::string::npos) {
            std::string syns = line.substr(c2 + 1);
            std::size_t pos = 0;
            while (pos <= syns.size()) {
                auto bar = syns.find('|', pos);
                std::string syn = trim(syns.substr(pos, bar == std::string::npos ? std::string::npos : bar - pos));
                if (!syn.empty()) f.synonyms.push_back(to_lower(syn));
                if (bar == std::string::npos) break;
                pos = bar + 1;
            }
        }
        findings.push_back(std::move(f));
    }
    return FindingVocabulary(std::move(findings));
}

std::size_t FindingVocabulary::index_of(int finding_id) const {
    for (std::size_t i = 0; i < findings_.size(); ++i)
        if (findings_[i].finding_id == finding_id) return i;
    throw std::out_of_range("unknown finding_id " + std::to_string(finding_id));
}

LabelMatrix::LabelMatrix(std::size_t head_count, std::vector<std::string> sample_ids,
                         std::vector<std::uint8_t> targets)
    : head_count_(head_count), sample_ids_(std::move(sample_ids)), targets_(std::move(targets)) {
    if (targets_.size() != sample_ids_.size() * head_count_)
        throw std::invalid_argument("LabelMatrix: targets size does not match n_samples * head_count");
}

PairState LabelMatrix::pair(std::size_t sample, std::size_t finding_index) const {
    return pair_state(at(sample, FindingVocabulary::positive_head(finding_index)),
                      at(sample, FindingVocabulary::negated_head(finding_index)));
}

PairState pair_state(int a, int a_bar) {
    if (a != 0) return a_bar != 0 ? PairState::Contradiction : PairState::PositiveExists;
    return a_bar != 0 ? PairState::NegationExists : PairState::Ambiguous;
}

std::vector<std::uint8_t> encode_targets(const std::vector<MentionState>& states,
                                         const FindingVocabulary& vocab) {
    if (states.size() != vocab.size())
        throw std::invalid_argument("encode_targets: " + std::to_string(states.size()) +
                                    " states for a vocabulary of " + std::to_string(vocab.size()));
    std::vector<std::uint8_t> row(vocab.head_count(), 0);
    for (std::size_t i = 0; i < states.size(); ++i) {
        switch (states[i]) {
            case MentionState::Affirmed: row[FindingVocabulary::positive_head(i)] = 1; break;
            case MentionState::Negated: row[FindingVocabulary::negated_head(i)] = 1; break;
            case MentionState::NoMention: break;
        }
    }
    return row;
}

double ambiguity_rate(const LabelMatrix& matrix, const FindingVocabulary& vocab, int finding_id) {
    std::size_t idx = vocab.index_of(finding_id);
    if (matrix.n_samples() == 0) return 0.0;
    std::size_t ambiguous = 0;
    for (std::size_t s = 0; s < matrix.n_samples(); ++s)
        if (matrix.pair(s, idx) == PairState::Ambiguous) ++ambiguous;
    return static_cast<double>(ambiguous) / static_cast<double>(matrix.n_samples());
}

std::vector<Violation> validate(const LabelMatrix& matrix) {
    std::vector<Violation> out;
    const std::size_t n_findings = matrix.head_count() / 2;
    for (std::size_t s = 0; s < matrix.n_samples(); ++s)
        for (std::size_t f = 0; f < n_findings; ++f)
            if (matrix.pair(s, f) == PairState::Contradiction)
                out.push_back({s, f, matrix.sample_ids()[s]});
    return out;
}

}  // namespace ambiweight
