#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vidsearch/caption_index.hpp"
#include "vidsearch/meteor.hpp"

namespace vidsearch {

inline constexpr std::size_t kDefaultTopK = 3;

struct SearchResult {
    std::string clip_path;
    std::string caption;
    double score = 0.0;
    ScoreBreakdown breakdown;
};

/// Caption index with captions tokenized once at construction. Immutable.
class SearchIndex {
public:
    struct Entry {
        std::string clip_path;
        std::string caption;
        TokenSeq tokens;
    };

    SearchIndex() = default;
    explicit SearchIndex(const CaptionIndex& index);

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    std::span<const Entry> entries() const noexcept { return entries_; }

    /// Scores every entry once with meteor_score(tokenize(query), caption
    /// tokens); sorts by descending score with ties broken by ascending
    /// clip path and keeps min(k, size()). Throws InvalidQueryError when the
    /// query has no tokens and InvalidInputError when k == 0.
    std::vector<SearchResult> rank(std::string_view query, std::size_t k = kDefaultTopK,
                                   const MatcherConfig& config = {}) const;

    using Scorer = std::function<ScoreBreakdown(const TokenSeq& hyp, const TokenSeq& ref)>;
    std::vector<SearchResult> rank_with(std::string_view query, std::size_t k,
                                        const Scorer& scorer) const;

private:
    std::vector<Entry> entries_;  // clip path order
};

std::vector<SearchResult> rank(std::string_view query, const CaptionIndex& index,
                               std::size_t k = kDefaultTopK, const MatcherConfig& config = {});

/// `[{"clip", "caption", "score", "approx"}, ...]`; the service payload.
nlohmann::json results_to_json(std::span<const SearchResult> results);

}  // namespace vidsearch
