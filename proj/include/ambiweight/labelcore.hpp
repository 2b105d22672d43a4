#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ambiweight {

enum class MentionState : std::uint8_t { Affirmed, Negated, NoMention };

// Interpretation of a (label, negation) bit pair.
enum class PairState : std::uint8_t { Contradiction, PositiveExists, NegationExists, Ambiguous };

const char* to_string(MentionState s);
const char* to_string(PairState s);
MentionState mention_state_from_string(const std::string& s);

struct Finding {
    int finding_id = 0;
    std::string canonical_name;
    std::vector<std::string> synonyms;  // lowercase, includes canonical name
};

// Finding vocabulary. Each finding owns two sigmoid heads; the layout is
// interleaved and stable across serialization:
//   positive_head = 2 * finding_index, negated_head = 2 * finding_index + 1.
class FindingVocabulary {
public:
    FindingVocabulary() = default;
    explicit FindingVocabulary(std::vector<Finding> findings);

    static FindingVocabulary load(const std::string& path);
    static FindingVocabulary parse(const std::string& text);

    std::size_t size() const { return findings_.size(); }
    std::size_t head_count() const { return 2 * findings_.size(); }
    const Finding& finding(std::size_t index) const { return findings_.at(index); }
    const std::vector<Finding>& findings() const { return findings_; }

    std::size_t index_of(int finding_id) const;
    static std::size_t positive_head(std::size_t finding_index) { return 2 * finding_index; }
    static std::size_t negated_head(std::size_t finding_index) { return 2 * finding_index + 1; }

private:
    std::vector<Finding> findings_;
};

// Per-sample binary targets over the 2K heads.
class LabelMatrix {
public:
    LabelMatrix() = default;
    LabelMatrix(std::size_t head_count, std::vector<std::string> sample_ids,
                std::vector<std::uint8_t> targets);

    std::size_t n_samples() const { return sample_ids_.size(); }
    std::size_t head_count() const { return head_count_; }
    std::uint8_t at(std::size_t sample, std::size_t head) const {
        return targets_[sample * head_count_ + head];
    }
    const std::vector<std::string>& sample_ids() const { return sample_ids_; }
    const std::vector<std::uint8_t>& targets() const { return targets_; }

    PairState pair(std::size_t sample, std::size_t finding_index) const;

private:
    std::size_t head_count_ = 0;
    std::vector<std::string> sample_ids_;
    std::vector<std::uint8_t> targets_;  // row-major n_samples x head_count
};

struct Violation {
    std::size_t sample_index;
    std::size_t finding_index;
    std::string sample_id;
};

// Table-1 pair logic. Total over the four bit combinations.
PairState pair_state(int a, int a_bar);

// Affirmed -> (1,0), Negated -> (0,1), NoMention -> (0,0) at the
// finding's two heads. One state per vocabulary finding.
std::vector<std::uint8_t> encode_targets(const std::vector<MentionState>& states,
                                         const FindingVocabulary& vocab);

// Fraction of samples whose pair for the given finding is Ambiguous.
double ambiguity_rate(const LabelMatrix& matrix, const FindingVocabulary& vocab, int finding_id);

// Every (sample, finding) whose pair is (1,1). Empty iff consistent.
std::vector<Violation> validate(const LabelMatrix& matrix);

}  // namespace ambiweight
