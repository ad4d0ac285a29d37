#include "vidsearch/meteor.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "vidsearch/error.hpp"

namespace vidsearch {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_ascii_punct(char c) {
    const auto u = static_cast<unsigned char>(c);
    return u < 0x80 && std::ispunct(u) != 0;
}

constexpr std::size_t kStages = 3;
constexpr int kNoEdge = -1;

}  // namespace

TokenSeq tokenize(std::string_view text) {
    TokenSeq out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_space(text[j])) ++j;
        std::size_t a = i;
        std::size_t b = j;
        while (a < b && is_ascii_punct(text[a])) ++a;
        while (b > a && is_ascii_punct(text[b - 1])) --b;
        if (a < b) {
            std::string tok(text.substr(a, b - a));
            for (auto& c : tok) {
                const auto u = static_cast<unsigned char>(c);
                if (u < 0x80) c = static_cast<char>(std::tolower(u));
            }
            out.push_back(std::move(tok));
        }
        i = j;
    }
    return out;
}

const char* to_string(MatchStage stage) noexcept {
    switch (stage) {
        case MatchStage::exact: return "exact";
        case MatchStage::stem: return "stem";
        case MatchStage::synonym: return "synonym";
    }
    return "?";
}

bool MatcherConfig::synonymous(const std::string& a, const std::string& b) const {
    if (synonyms.empty()) return false;
    if (auto it = synonyms.find(a); it != synonyms.end() && it->second.count(b)) return true;
    if (auto it = synonyms.find(b); it != synonyms.end() && it->second.count(a)) return true;
    return false;
}

std::string suffix_stem(const std::string& token) {
    static constexpr std::array<std::string_view, 4> kSuffixes{"ing", "es", "ed", "s"};
    for (auto suffix : kSuffixes) {
        if (token.size() >= suffix.size() + 2 &&
            std::string_view(token).substr(token.size() - suffix.size()) == suffix) {
            return token.substr(0, token.size() - suffix.size());
        }
    }
    return token;
}

SynonymTable parse_synonym_table(std::string_view text) {
    SynonymTable table;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    auto lower = [](std::string s) {
        for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return s;
    };
    auto trim = [](std::string_view s) {
        while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
        while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
        return s;
    };
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (trim(line).empty() || line.front() == '#') continue;
        const std::size_t tab = line.find('\t');
        const auto word = tab == line.npos ? std::string_view{} : trim(line.substr(0, tab));
        if (tab == line.npos || word.empty()) {
            throw ParseError("synonym table line " + std::to_string(line_no) +
                             ": expected word<TAB>syn1,syn2,...");
        }
        auto& entry = table[lower(std::string(word))];
        std::string_view rest = line.substr(tab + 1);
        while (!rest.empty()) {
            const std::size_t comma = rest.find(',');
            const auto syn = trim(rest.substr(0, comma));
            if (!syn.empty()) entry.insert(lower(std::string(syn)));
            if (comma == rest.npos) break;
            rest.remove_prefix(comma + 1);
        }
    }
    return table;
}

SynonymTable load_synonym_table(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInputError("cannot open synonym table: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_synonym_table(ss.str());
}

std::optional<MatchStage> match_stage(const std::string& hyp_token, const std::string& ref_token,
                                      const MatcherConfig& config) {
    if (hyp_token == ref_token) return MatchStage::exact;
    if (config.stemmer && config.stemmer(hyp_token) == config.stemmer(ref_token)) {
        return MatchStage::stem;
    }
    if (config.synonymous(hyp_token, ref_token)) return MatchStage::synonym;
    return std::nullopt;
}

namespace {

// Maximum-weight assignment on a square matrix of non-negative weights
// (zero weight means "leave unmatched"). Returns the optimal total weight.
std::int64_t max_weight_assignment(const std::vector<std::vector<std::int64_t>>& w) {
    const std::size_t n = w.size();
    if (n == 0) return 0;
    constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
    // Potentials and matching, 1-based as in the classic O(n^3) formulation.
    std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<std::int64_t> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            std::int64_t delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const std::int64_t cur = -w[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::int64_t total = 0;
    for (std::size_t j = 1; j <= n; ++j) {
        if (p[j] != 0) total += w[p[j] - 1][j - 1];
    }
    return total;
}

class AlignmentSearch {
public:
    AlignmentSearch(const TokenSeq& hyp, const TokenSeq& ref, const MatcherConfig& config)
        : hyp_(hyp), ref_(ref), config_(config) {
        stage_.assign(hyp.size(), std::vector<int>(ref.size(), kNoEdge));
        for (std::size_t i = 0; i < hyp.size(); ++i) {
            for (std::size_t j = 0; j < ref.size(); ++j) {
                if (auto s = match_stage(hyp[i], ref[j], config)) {
                    stage_[i][j] = static_cast<int>(*s);
                }
            }
        }
        intern();
    }

    Alignment run() {
        Alignment out;
        if (hyp_.empty() || ref_.empty()) return out;
        compute_targets();
        if (target_[0] + target_[1] + target_[2] == 0) return out;
        fix_forced_pairs();

        ref_used_.assign(ref_.size(), 0);
        for (std::size_t i = 0; i < hyp_.size(); ++i) ++hyp_rem_type_[type_of_hyp_[i]];
        for (std::size_t i = 0; i < hyp_.size(); ++i) ++hyp_rem_class_[class_of_hyp_[i]];
        for (std::size_t j = 0; j < ref_.size(); ++j) ++ref_free_type_[type_of_ref_[j]];
        for (std::size_t j = 0; j < ref_.size(); ++j) ++ref_free_class_[class_of_ref_[j]];

        dfs(0);

        if (!aborted_ && have_best_) {
            out.pairs = best_;
        } else if (have_best_) {
            out.pairs = best_;
            out.approximate = true;
        } else {
            out.pairs = greedy();
            out.approximate = true;
        }
        return out;
    }

private:
    void intern() {
        std::unordered_map<std::string, std::size_t> types;
        std::unordered_map<std::string, std::size_t> classes;
        auto id = [](std::unordered_map<std::string, std::size_t>& m, const std::string& key) {
            return m.emplace(key, m.size()).first->second;
        };
        auto stem_key = [&](const std::string& t) {
            return config_.stemmer ? config_.stemmer(t) : t;
        };
        for (const auto& t : hyp_) type_of_hyp_.push_back(id(types, t));
        for (const auto& t : ref_) type_of_ref_.push_back(id(types, t));
        for (const auto& t : hyp_) class_of_hyp_.push_back(id(classes, stem_key(t)));
        for (const auto& t : ref_) class_of_ref_.push_back(id(classes, stem_key(t)));
        hyp_rem_type_.assign(types.size(), 0);
        ref_free_type_.assign(types.size(), 0);
        hyp_rem_class_.assign(classes.size(), 0);
        ref_free_class_.assign(classes.size(), 0);
    }

    // Lexicographically best (exact, stem, synonym) match counts, via one
    // weighted assignment with weights that cannot trade a higher stage for
    // any number of lower ones.
    void compute_targets() {
        const std::size_t n = std::max(hyp_.size(), ref_.size());
        const std::int64_t base = static_cast<std::int64_t>(std::min(hyp_.size(), ref_.size())) + 1;
        const std::array<std::int64_t, kStages> weight{base * base, base, 1};
        std::vector<std::vector<std::int64_t>> w(n, std::vector<std::int64_t>(n, 0));
        for (std::size_t i = 0; i < hyp_.size(); ++i) {
            for (std::size_t j = 0; j < ref_.size(); ++j) {
                if (stage_[i][j] != kNoEdge) w[i][j] = weight[static_cast<std::size_t>(stage_[i][j])];
            }
        }
        const std::int64_t total = max_weight_assignment(w);
        target_[0] = static_cast<std::size_t>(total / weight[0]);
        target_[1] = static_cast<std::size_t>((total % weight[0]) / weight[1]);
        target_[2] = static_cast<std::size_t>(total % weight[1]);
    }

    // A token occurring once on each side must be exactly matched in every
    // alignment that maximizes exact matches.
    void fix_forced_pairs() {
        std::vector<std::size_t> hyp_count(hyp_rem_type_.size(), 0), ref_count(hyp_rem_type_.size(), 0);
        for (auto t : type_of_hyp_) ++hyp_count[t];
        for (auto t : type_of_ref_) ++ref_count[t];
        forced_.assign(hyp_.size(), kUnforced);
        ref_forced_.assign(ref_.size(), 0);
        for (std::size_t i = 0; i < hyp_.size(); ++i) {
            const auto t = type_of_hyp_[i];
            if (hyp_count[t] != 1 || ref_count[t] != 1) continue;
            for (std::size_t j = 0; j < ref_.size(); ++j) {
                if (type_of_ref_[j] == t) {
                    forced_[i] = j;
                    ref_forced_[j] = 1;
                }
            }
        }
    }

    bool feasible(std::size_t i) const {
        const std::size_t need_exact = target_[0] - std::min(target_[0], count_[0]);
        const std::size_t need_stem = target_[1] - std::min(target_[1], count_[1]);
        const std::size_t need_syn = target_[2] - std::min(target_[2], count_[2]);
        const std::size_t need = need_exact + need_stem + need_syn;
        if (need > hyp_.size() - i) return false;
        if (need_exact > 0) {
            std::size_t cap = 0;
            for (std::size_t t = 0; t < hyp_rem_type_.size(); ++t) {
                cap += std::min(hyp_rem_type_[t], ref_free_type_[t]);
            }
            if (need_exact > cap) return false;
        }
        if (need_stem > 0) {
            std::size_t cap = 0;
            for (std::size_t c = 0; c < hyp_rem_class_.size(); ++c) {
                cap += std::min(hyp_rem_class_[c], ref_free_class_[c]);
            }
            if (need_exact + need_stem > cap) return false;
        }
        return true;
    }

    void dfs(std::size_t i) {
        if (aborted_) return;
        if (++nodes_ > config_.node_budget) {
            aborted_ = true;
            return;
        }
        if (have_best_ && chunks_ >= best_chunks_) return;
        if (count_[0] > target_[0] || !feasible(i)) return;
        if (i == hyp_.size()) {
            if (count_ == target_) {
                best_ = current_;
                best_chunks_ = chunks_;
                have_best_ = true;
            }
            return;
        }

        const auto type = type_of_hyp_[i];
        const auto cls = class_of_hyp_[i];
        --hyp_rem_type_[type];
        --hyp_rem_class_[cls];

        auto try_pair = [&](std::size_t j) {
            const auto s = static_cast<std::size_t>(stage_[i][j]);
            const bool extends = !current_.empty() && current_.back().hyp + 1 == i &&
                                 current_.back().ref + 1 == j;
            ref_used_[j] = 1;
            --ref_free_type_[type_of_ref_[j]];
            --ref_free_class_[class_of_ref_[j]];
            ++count_[s];
            if (!extends) ++chunks_;
            current_.push_back({i, j, static_cast<MatchStage>(s)});
            dfs(i + 1);
            current_.pop_back();
            if (!extends) --chunks_;
            --count_[s];
            ++ref_free_class_[class_of_ref_[j]];
            ++ref_free_type_[type_of_ref_[j]];
            ref_used_[j] = 0;
        };

        if (forced_[i] != kUnforced) {
            try_pair(forced_[i]);
        } else {
            for (std::size_t j = 0; j < ref_.size() && !aborted_; ++j) {
                if (stage_[i][j] == kNoEdge || ref_used_[j] || ref_forced_[j]) continue;
                try_pair(j);
            }
            if (!aborted_) dfs(i + 1);
        }

        ++hyp_rem_class_[cls];
        ++hyp_rem_type_[type];
    }

    std::vector<AlignedPair> greedy() const {
        std::vector<AlignedPair> pairs;
        std::vector<char> hyp_used(hyp_.size(), 0), ref_used(ref_.size(), 0);
        for (int s = 0; s < static_cast<int>(kStages); ++s) {
            for (std::size_t i = 0; i < hyp_.size(); ++i) {
                if (hyp_used[i]) continue;
                for (std::size_t j = 0; j < ref_.size(); ++j) {
                    if (!ref_used[j] && stage_[i][j] == s) {
                        hyp_used[i] = ref_used[j] = 1;
                        pairs.push_back({i, j, static_cast<MatchStage>(s)});
                        break;
                    }
                }
            }
        }
        std::sort(pairs.begin(), pairs.end(),
                  [](const AlignedPair& a, const AlignedPair& b) { return a.hyp < b.hyp; });
        return pairs;
    }

    static constexpr std::size_t kUnforced = std::numeric_limits<std::size_t>::max();

    const TokenSeq& hyp_;
    const TokenSeq& ref_;
    const MatcherConfig& config_;
    std::vector<std::vector<int>> stage_;

    std::vector<std::size_t> type_of_hyp_, type_of_ref_, class_of_hyp_, class_of_ref_;
    std::vector<std::size_t> hyp_rem_type_, ref_free_type_, hyp_rem_class_, ref_free_class_;
    std::vector<std::size_t> forced_;
    std::vector<char> ref_forced_;
    std::vector<char> ref_used_;

    std::array<std::size_t, kStages> target_{};
    std::array<std::size_t, kStages> count_{};
    std::size_t chunks_ = 0;
    std::vector<AlignedPair> current_;

    std::vector<AlignedPair> best_;
    std::size_t best_chunks_ = 0;
    bool have_best_ = false;

    std::uint64_t nodes_ = 0;
    bool aborted_ = false;
};

}  // namespace

Alignment align(const TokenSeq& hyp, const TokenSeq& ref, const MatcherConfig& config) {
    return AlignmentSearch(hyp, ref, config).run();
}

std::size_t count_chunks(const Alignment& alignment) {
    std::size_t chunks = 0;
    const auto& p = alignment.pairs;
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (k == 0 || p[k - 1].hyp + 1 != p[k].hyp || p[k - 1].ref + 1 != p[k].ref) ++chunks;
    }
    return chunks;
}

ScoreBreakdown score_alignment(const Alignment& alignment, std::size_t hyp_len,
                               std::size_t ref_len) {
    ScoreBreakdown out;
    out.approximate = alignment.approximate;
    const std::size_t m = alignment.size();
    if (m == 0 || hyp_len == 0 || ref_len == 0) return out;
    out.matches = m;
    out.precision = static_cast<double>(m) / static_cast<double>(hyp_len);
    out.recall = static_cast<double>(m) / static_cast<double>(ref_len);
    out.fmean = 10.0 * out.precision * out.recall / (out.recall + 9.0 * out.precision);
    out.chunks = count_chunks(alignment);
    const double frag = static_cast<double>(out.chunks) / static_cast<double>(m);
    out.penalty = 0.5 * frag * frag * frag;
    out.score = out.fmean * (1.0 - out.penalty);
    return out;
}

ScoreBreakdown meteor_score(const TokenSeq& hyp, const TokenSeq& ref, const MatcherConfig& config) {
    return score_alignment(align(hyp, ref, config), hyp.size(), ref.size());
}

}  // namespace vidsearch
