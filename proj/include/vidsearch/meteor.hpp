#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace vidsearch {

/// Lowercase tokens with no empty entries and no whitespace inside a token.
using TokenSeq = std::vector<std::string>;

/// Lowercases, splits on whitespace, strips leading/trailing ASCII
/// punctuation from each token and drops tokens that become empty.
TokenSeq tokenize(std::string_view text);

enum class MatchStage : std::uint8_t { exact = 0, stem = 1, synonym = 2 };

const char* to_string(MatchStage stage) noexcept;

struct AlignedPair {
    std::size_t hyp = 0;
    std::size_t ref = 0;
    MatchStage stage = MatchStage::exact;

    friend bool operator==(const AlignedPair&, const AlignedPair&) = default;
};

struct Alignment {
    std::vector<AlignedPair> pairs;  // sorted by hyp index
    bool approximate = false;        // search budget exhausted; not guaranteed min-chunk

    std::size_t size() const noexcept { return pairs.size(); }
};

using Stemmer = std::function<std::string(const std::string&)>;
/// word -> related words exactly as loaded; a pair matches when either side
/// lists the other. No transitive closure.
using SynonymTable = std::map<std::string, std::set<std::string>>;

struct MatcherConfig {
    Stemmer stemmer;  // empty: stem stage disabled
    SynonymTable synonyms;
    std::uint64_t node_budget = 1'000'000;

    bool synonymous(const std::string& a, const std::string& b) const;
};

/// Strips the longest of -ing, -es, -ed, -s when at least two characters
/// remain.
std::string suffix_stem(const std::string& token);

/// Lines of `word<TAB>syn1,syn2,...`. Blank lines and lines starting with
/// '#' are ignored.
SynonymTable parse_synonym_table(std::string_view text);
SynonymTable load_synonym_table(const std::filesystem::path& path);

/// Highest-priority stage under which two tokens match, or nothing.
std::optional<MatchStage> match_stage(const std::string& hyp_token, const std::string& ref_token,
                                      const MatcherConfig& config);

/// One-to-one unigram alignment. Maximizes matches stage by stage
/// (exact, then stem, then synonym); among those, minimizes the chunk count;
/// remaining ties go to the lexicographically smallest (hyp, ref) pair list.
Alignment align(const TokenSeq& hyp, const TokenSeq& ref, const MatcherConfig& config = {});

/// Maximal runs of pairs that are consecutive in both hyp and ref order.
std::size_t count_chunks(const Alignment& alignment);

struct ScoreBreakdown {
    std::size_t matches = 0;
    double precision = 0.0;
    double recall = 0.0;
    double fmean = 0.0;
    std::size_t chunks = 0;
    double penalty = 0.0;
    double score = 0.0;
    bool approximate = false;
};

/// Fmean = 10PR / (R + 9P), penalty = 0.5 (chunks / m)^3,
/// score = Fmean (1 - penalty). All zero when nothing matches.
ScoreBreakdown meteor_score(const TokenSeq& hyp, const TokenSeq& ref,
                            const MatcherConfig& config = {});

/// Breakdown from a precomputed alignment.
ScoreBreakdown score_alignment(const Alignment& alignment, std::size_t hyp_len,
                               std::size_t ref_len);

}  // namespace vidsearch
