#pragma once

#include <string>
#include <vector>

#include "ambiweight/labelcore.hpp"

namespace ambiweight {

struct Report {
    std::string report_id;
    std::string body;
};

enum class Polarity : std::uint8_t { Affirmed, Negated };

struct Mention {
    int finding_id = 0;
    std::size_t start = 0;  // token index, inclusive
    std::size_t end = 0;    // token index, exclusive
    Polarity polarity = Polarity::Affirmed;
};

// NegEx-style pre-negation rules. Triggers are lowercase token sequences;
// scope ends at a terminator or after max_scope_tokens, but "," and "and"
// re-arm a live scope so list conjunctions stay negated.
struct NegationRuleSet {
    std::vector<std::string> pre_triggers = {"no", "not", "without", "negative for", "free of", "denies"};
    std::vector<std::string> scope_terminators = {".", ";", ":", "but", "however", "although"};
    std::size_t max_scope_tokens = 6;

    static NegationRuleSet load_triggers(const std::string& path);
};

// Lowercased tokens; punctuation split off as standalone tokens.
std::vector<std::string> tokenize(const std::string& body);

// Longest-match, non-overlapping synonym matches. Polarity left Affirmed.
std::vector<Mention> find_mentions(const std::vector<std::string>& tokens,
                                   const FindingVocabulary& vocab);

Polarity resolve_polarity(const std::vector<std::string>& tokens, const Mention& mention,
                          const NegationRuleSet& rules);

// Per-finding MentionState in vocabulary order. Affirmed beats Negated on
// intra-report conflict; findings with no mention map to NoMention.
std::vector<MentionState> label_report(const Report& report, const FindingVocabulary& vocab,
                                       const NegationRuleSet& rules);

}  // namespace ambiweight
