#include "ambiweight/textlabeler.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace ambiweight {

namespace {

std::vector<std::string> split_tokens(const std::string& phrase) {
    return tokenize(phrase);
}

// True if the token sequence `seq` ends at token index `end` (inclusive).
bool sequence_ends_at(const std::vector<std::string>& tokens, const std::vector<std::string>& seq,
                      std::size_t end) {
    if (seq.empty() || end + 1 < seq.size()) return false;
    std::size_t start = end + 1 - seq.size();
    for (std::size_t i = 0; i < seq.size(); ++i)
        if (tokens[start + i] != seq[i]) return false;
    return true;
}

bool contains(const std::vector<std::string>& haystack, const std::string& needle) {
    return std::find(haystack.begin(), haystack.end(), needle) != haystack.end();
}

}  // namespace

NegationRuleSet NegationRuleSet::load_triggers(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trigger file: " + path);
    NegationRuleSet rules;
    rules.pre_triggers.clear();
    std::string line;
    while (std::getline(in, line)) {
        auto begin = line.find_first_not_of(" \t\r\n");
        if (begin == std::string::npos) continue;
        auto end = line.find_last_not_of(" \t\r\n");
        std::string t = line.substr(begin, end - begin + 1);
        if (t.empty() || t[0] == '#') continue;
        std::transform(t.begin(), t.end(), t.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        rules.pre_triggers.push_back(t);
    }
    return rules;
}

std::vector<std::string> tokenize(const std::string& body) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(current);
            current.clear();
        }
    };
    for (unsigned char c : body) {
        if (std::isspace(c)) {
            flush();
        } else if (std::isalnum(c) || c == '\'' || c == '-') {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
            tokens.push_back(std::string(1, static_cast<char>(c)));
        }
    }
    flush();
    return tokens;
}

std::vector<Mention> find_mentions(const std::vector<std::string>& tokens,
                                   const FindingVocabulary& vocab) {
    // Tokenized synonym lists, computed once per call.
    struct SynSeq {
        int finding_id;
        std::vector<std::string> seq;
    };
    std::vector<SynSeq> sequences;
    for (const auto& f : vocab.findings())
        for (const auto& syn : f.synonyms) sequences.push_back({f.finding_id, split_tokens(syn)});

    std::vector<Mention> mentions;
    std::size_t i = 0;
    while (i < tokens.size()) {
        const SynSeq* best = nullptr;
        for (const auto& s : sequences) {
            if (s.seq.empty() || i + s.seq.size() > tokens.size()) continue;
            bool match = true;
            for (std::size_t k = 0; k < s.seq.size(); ++k)
                if (tokens[i + k] != s.seq[k]) { match = false; break; }
            if (match && (!best || s.seq.size() > best->seq.size())) best = &s;
        }
        if (best) {
            mentions.push_back({best->finding_id, i, i + best->seq.size(), Polarity::Affirmed});
            i += best->seq.size();
        } else {
            ++i;
        }
    }
    return mentions;
}

Polarity resolve_polarity(const std::vector<std::string>& tokens, const Mention& mention,
                          const NegationRuleSet& rules) {
    if (mention.start >= mention.end || mention.end > tokens.size())
        throw std::invalid_argument("resolve_polarity: invalid mention span");

    std::vector<std::vector<std::string>> trigger_seqs;
    for (const auto& t : rules.pre_triggers) trigger_seqs.push_back(split_tokens(t));

    // Backward scan with a token budget. "," and "and" re-arm the budget so a
    // trigger carries across list conjunctions; any terminator kills the scope.
    std::size_t budget = rules.max_scope_tokens;
    std::size_t j = mention.start;
    while (j > 0 && budget > 0) {
        --j;
        const std::string& tok = tokens[j];
        if (contains(rules.scope_terminators, tok)) return Polarity::Affirmed;
        for (const auto& seq : trigger_seqs)
            if (sequence_ends_at(tokens, seq, j)) return Polarity::Negated;
        if (tok == "," || tok == "and") {
            budget = rules.max_scope_tokens;
        } else {
            --budget;
        }
    }
    return Polarity::Affirmed;
}

std::vector<MentionState> label_report(const Report& report, const FindingVocabulary& vocab,
                                       const NegationRuleSet& rules) {
    auto tokens = tokenize(report.body);
    auto mentions = find_mentions(tokens, vocab);

    std::vector<MentionState> states(vocab.size(), MentionState::NoMention);
    for (auto& m : mentions) {
        m.polarity = resolve_polarity(tokens, m, rules);
        std::size_t idx = vocab.index_of(m.finding_id);
        if (m.polarity == Polarity::Affirmed) {
            states[idx] = MentionState::Affirmed;  // Affirmed wins any conflict
        } else if (states[idx] == MentionState::NoMention) {
            states[idx] = MentionState::Negated;
        }
    }
    return states;
}

}  // namespace ambiweight
