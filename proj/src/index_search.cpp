#include "vidsearch/index_search.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "vidsearch/error.hpp"

namespace vidsearch {

SearchIndex::SearchIndex(const CaptionIndex& index) {
    entries_.reserve(index.size());
    for (const auto& [path, caption] : index) {
        entries_.push_back({path, caption, tokenize(caption)});
    }
}

std::vector<SearchResult> SearchIndex::rank(std::string_view query, std::size_t k,
                                            const MatcherConfig& config) const {
    return rank_with(query, k, [&config](const TokenSeq& hyp, const TokenSeq& ref) {
        return meteor_score(hyp, ref, config);
    });
}

std::vector<SearchResult> SearchIndex::rank_with(std::string_view query, std::size_t k,
                                                 const Scorer& scorer) const {
    if (k < 1) throw InvalidInputError("k must be at least 1");
    const TokenSeq q = tokenize(query);
    if (q.empty()) throw InvalidQueryError("query has no searchable tokens");

    std::vector<SearchResult> scored;
    scored.reserve(entries_.size());
    for (const auto& e : entries_) {
        auto b = scorer(q, e.tokens);
        scored.push_back({e.clip_path, e.caption, b.score, b});
    }
    const std::size_t keep = std::min(k, scored.size());
    auto better = [](const SearchResult& a, const SearchResult& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.clip_path < b.clip_path;
    };
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                      scored.end(), better);
    scored.resize(keep);
    return scored;
}

std::vector<SearchResult> rank(std::string_view query, const CaptionIndex& index, std::size_t k,
                               const MatcherConfig& config) {
    return SearchIndex(index).rank(query, k, config);
}

nlohmann::json results_to_json(std::span<const SearchResult> results) {
    auto arr = nlohmann::json::array();
    for (const auto& r : results) {
        arr.push_back({{"clip", r.clip_path},
                       {"caption", r.caption},
                       {"score", r.score},
                       {"approx", r.breakdown.approximate}});
    }
    return arr;
}

}  // namespace vidsearch
