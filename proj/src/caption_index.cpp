#include "vidsearch/caption_index.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vidsearch/error.hpp"

namespace vidsearch {

using nlohmann::json;

CaptionIndex::CaptionIndex(Map entries) {
    for (auto& [k, v] : entries) insert(k, std::move(v));
}

void CaptionIndex::insert(std::string clip_path, std::string caption) {
    if (clip_path.empty()) throw InvalidInputError("caption index: empty clip path");
    if (caption.empty()) throw InvalidInputError("caption index: empty caption for " + clip_path);
    auto [it, inserted] = entries_.emplace(std::move(clip_path), std::move(caption));
    if (!inserted) throw InvalidInputError("caption index: duplicate clip path " + it->first);
}

std::string serialize_index(const CaptionIndex& index) {
    json j = json::object();
    for (const auto& [k, v] : index) j[k] = v;
    return j.dump(2) + "\n";
}

CaptionIndex parse_index(std::string_view text) {
    std::set<std::string> seen;
    std::string duplicate;
    // The callback sees top-level keys before nlohmann collapses duplicates.
    json::parser_callback_t cb = [&](int depth, json::parse_event_t event, json& parsed) {
        if (event == json::parse_event_t::key && depth == 1) {
            const auto key = parsed.get<std::string>();
            if (!seen.insert(key).second && duplicate.empty()) duplicate = key;
        }
        return true;
    };
    json j;
    try {
        j = json::parse(text.begin(), text.end(), cb);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("caption index: invalid JSON: ") + e.what());
    }
    if (!duplicate.empty()) throw ParseError("caption index: duplicate key \"" + duplicate + "\"");
    if (!j.is_object()) throw ParseError("caption index: expected a JSON object of clip -> caption");

    CaptionIndex index;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!it.value().is_string()) {
            throw ParseError("caption index: value for key \"" + it.key() + "\" is not a string");
        }
        auto caption = it.value().get<std::string>();
        if (caption.empty()) {
            throw ParseError("caption index: empty caption for key \"" + it.key() + "\"");
        }
        if (it.key().empty()) throw ParseError("caption index: empty key");
        index.insert(it.key(), std::move(caption));
    }
    return index;
}

void save_index(const CaptionIndex& index, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInputError("cannot write index: " + path.string());
    out << serialize_index(index);
    if (!out) throw InvalidInputError("failed writing index: " + path.string());
}

CaptionIndex load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInputError("cannot open index: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_index(ss.str());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

}  // namespace vidsearch
