#include "vidsearch/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "vidsearch/error.hpp"

namespace vidsearch {

namespace fs = std::filesystem;
using nlohmann::json;

const VideoRecord* Manifest::find_video(std::string_view video_id) const {
    for (const auto& v : videos) {
        if (v.video_id == video_id) return &v;
    }
    return nullptr;
}

namespace {

std::string where(const char* array, std::size_t pos, const std::string& id) {
    std::string s = std::string(array) + "[" + std::to_string(pos) + "]";
    if (!id.empty()) s += " (video_id \"" + id + "\")";
    return s;
}

const json* find_any(const json& obj, std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
        if (auto it = obj.find(k); it != obj.end()) return &*it;
    }
    return nullptr;
}

std::string category_code(const json& v) {
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
    return {};
}

std::map<std::string, std::string> parse_category_names(const json& j) {
    std::map<std::string, std::string> names;
    if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (!j[i].is_string()) throw ParseError("category_names[" + std::to_string(i) + "] is not a string");
            names[std::to_string(i)] = j[i].get<std::string>();
        }
    } else if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!it.value().is_string()) {
                throw ParseError("category_names[\"" + it.key() + "\"] is not a string");
            }
            names[it.key()] = it.value().get<std::string>();
        }
    } else {
        throw ParseError("category_names must be an object or an array");
    }
    return names;
}

double seconds_field(const json& rec, std::initializer_list<const char*> keys, const std::string& at,
                     const char* field) {
    const json* v = find_any(rec, keys);
    if (!v) throw ParseError(at + ": missing field " + field);
    if (!v->is_number()) throw ParseError(at + ": field " + field + " must be a number");
    return v->get<double>();
}

}  // namespace

Manifest parse_manifest(std::string_view json_text, std::vector<std::string>* warnings) {
    json doc;
    try {
        doc = json::parse(json_text.begin(), json_text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("manifest: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("manifest: top level must be an object");
    if (!doc.contains("videos") || !doc["videos"].is_array()) {
        throw ParseError("manifest: missing array field videos");
    }
    if (!doc.contains("sentences") || !doc["sentences"].is_array()) {
        throw ParseError("manifest: missing array field sentences");
    }

    Manifest m;
    if (auto it = doc.find("category_names"); it != doc.end()) {
        m.category_names = parse_category_names(*it);
    }

    std::unordered_set<std::string> ids;
    const auto& videos = doc["videos"];
    for (std::size_t i = 0; i < videos.size(); ++i) {
        const auto& rec = videos[i];
        if (!rec.is_object()) throw ParseError(where("videos", i, {}) + ": expected an object");
        VideoRecord v;
        const json* id = find_any(rec, {"video_id"});
        if (!id) {
            // Some releases carry only a string "id"; numeric ids are row numbers.
            if (auto alt = rec.find("id"); alt != rec.end() && alt->is_string()) id = &*alt;
        }
        if (!id || !id->is_string() || id->get<std::string>().empty()) {
            throw ParseError(where("videos", i, {}) + ": missing field video_id");
        }
        v.video_id = id->get<std::string>();
        const auto at = where("videos", i, v.video_id);

        const json* url = find_any(rec, {"url"});
        if (!url) throw ParseError(at + ": missing field url");
        if (!url->is_string()) throw ParseError(at + ": field url must be a string");
        v.url = url->get<std::string>();

        const json* cat = find_any(rec, {"category"});
        if (!cat) throw ParseError(at + ": missing field category");
        if (cat->is_string()) {
            v.category = cat->get<std::string>();
        } else if (cat->is_number_integer()) {
            const auto code = category_code(*cat);
            auto named = m.category_names.find(code);
            v.category = named != m.category_names.end() ? named->second : code;
        } else {
            throw ParseError(at + ": field category must be a string or an integer");
        }

        v.start_time = seconds_field(rec, {"start time", "start_time", "start"}, at, "start_time");
        v.end_time = seconds_field(rec, {"end time", "end_time", "end"}, at, "end_time");
        if (!(v.start_time >= 0.0) || !std::isfinite(v.start_time)) {
            throw ParseError(at + ": start_time must be >= 0");
        }
        if (!(v.end_time > v.start_time) || !std::isfinite(v.end_time)) {
            throw ParseError(at + ": end_time must exceed start_time");
        }
        if (auto lp = rec.find("local_path"); lp != rec.end() && !lp->is_null()) {
            if (!lp->is_string()) throw ParseError(at + ": field local_path must be a string");
            v.local_path = lp->get<std::string>();
        }
        if (!ids.insert(v.video_id).second) throw ParseError(at + ": duplicate video_id");
        m.videos.push_back(std::move(v));
    }

    std::vector<std::string> dangling;
    std::unordered_map<std::string, std::size_t> per_video;
    const auto& sentences = doc["sentences"];
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        const auto& rec = sentences[i];
        const auto at = "sentences[" + std::to_string(i) + "]";
        if (!rec.is_object()) throw ParseError(at + ": expected an object");
        const json* id = find_any(rec, {"video_id"});
        if (!id || !id->is_string()) throw ParseError(at + ": missing field video_id");
        const json* cap = find_any(rec, {"caption"});
        if (!cap || !cap->is_string()) throw ParseError(at + ": missing field caption");
        SentenceRecord s{id->get<std::string>(), cap->get<std::string>()};
        if (s.caption.empty()) throw ParseError(at + ": empty caption");
        if (!ids.count(s.video_id)) {
            if (std::find(dangling.begin(), dangling.end(), s.video_id) == dangling.end()) {
                dangling.push_back(s.video_id);
            }
        }
        ++per_video[s.video_id];
        m.sentences.push_back(std::move(s));
    }
    if (!dangling.empty()) {
        std::string list;
        for (const auto& d : dangling) list += (list.empty() ? "" : ", ") + ("\"" + d + "\"");
        throw ReferentialError("manifest: sentences refer to unknown video_id: " + list);
    }

    if (warnings) {
        for (const auto& v : m.videos) {
            const auto n = per_video[v.video_id];
            if (n != kExpectedSentencesPerVideo) {
                warnings->push_back("video " + v.video_id + " has " + std::to_string(n) +
                                    " sentences (expected " +
                                    std::to_string(kExpectedSentencesPerVideo) + ")");
            }
        }
    }
    return m;
}

Manifest load_manifest(const fs::path& path, std::vector<std::string>* warnings) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInputError("cannot open manifest: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_manifest(ss.str(), warnings);
}

std::string serialize_manifest(const Manifest& manifest) {
    json doc = json::object();
    auto videos = json::array();
    for (const auto& v : manifest.videos) {
        json rec = {{"video_id", v.video_id},
                    {"url", v.url},
                    {"category", v.category},
                    {"start time", v.start_time},
                    {"end time", v.end_time}};
        if (v.local_path) rec["local_path"] = *v.local_path;
        videos.push_back(std::move(rec));
    }
    auto sentences = json::array();
    for (const auto& s : manifest.sentences) {
        sentences.push_back({{"video_id", s.video_id}, {"caption", s.caption}});
    }
    doc["videos"] = std::move(videos);
    doc["sentences"] = std::move(sentences);
    if (!manifest.category_names.empty()) doc["category_names"] = manifest.category_names;
    return doc.dump(2) + "\n";
}

std::vector<VideoRecord> filter_sample(const Manifest& manifest,
                                       const std::vector<std::string>& categories,
                                       std::size_t per_category,
                                       std::vector<std::string>* warnings) {
    if (per_category < 1) throw InvalidInputError("per_category must be at least 1");
    std::set<std::string> known;
    for (const auto& v : manifest.videos) known.insert(v.category);

    std::vector<VideoRecord> out;
    std::set<std::string> done;
    for (const auto& cat : categories) {
        if (!known.count(cat)) throw InvalidInputError("unknown category: " + cat);
        if (!done.insert(cat).second) continue;
        std::size_t taken = 0;
        for (const auto& v : manifest.videos) {
            if (taken == per_category) break;
            if (v.category == cat) {
                out.push_back(v);
                ++taken;
            }
        }
        if (taken < per_category && warnings) {
            warnings->push_back("category " + cat + ": only " + std::to_string(taken) + " of " +
                                std::to_string(per_category) + " requested videos available");
        }
    }
    return out;
}

std::vector<std::string> sentences_for(const Manifest& manifest, std::string_view video_id) {
    if (!manifest.find_video(video_id)) {
        throw MissingCaptionError("no video with id \"" + std::string(video_id) + "\" in manifest");
    }
    std::vector<std::string> out;
    for (const auto& s : manifest.sentences) {
        if (s.video_id == video_id) out.push_back(s.caption);
    }
    return out;
}

FrameSpan clip_frame_span(const VideoRecord& record, double fps, std::size_t frame_count) {
    if (!(fps > 0.0) || !std::isfinite(fps)) throw InvalidInputError("frame rate must be positive");
    const auto first = static_cast<std::size_t>(std::floor(record.start_time * fps));
    const auto end = std::min(frame_count, static_cast<std::size_t>(std::ceil(record.end_time * fps)));
    if (first >= end) {
        throw InvalidInputError("video " + record.video_id + ": clip " + std::to_string(record.start_time) + "-" +
                                std::to_string(record.end_time) + " s lies outside its " +
                                std::to_string(frame_count) + " frames");
    }
    return {first, end - first};
}

const char* to_string(Availability a) noexcept {
    switch (a) {
        case Availability::available: return "available";
        case Availability::unavailable: return "unavailable";
        case Availability::error: return "error";
    }
    return "error";
}

fs::path FileSystemFetcher::resolve(const std::string& url) const {
    std::string_view s = url;
    if (s.starts_with("file://")) s.remove_prefix(7);
    fs::path p{std::string(s)};
    if (p.is_relative() && !root_.empty()) p = root_ / p;
    return p;
}

Availability FileSystemFetcher::probe(const std::string& url) const {
    std::error_code ec;
    const auto p = resolve(url);
    const bool ok = fs::is_regular_file(p, ec) || fs::is_directory(p, ec);
    if (ec && ec != std::errc::no_such_file_or_directory) return Availability::error;
    return ok ? Availability::available : Availability::unavailable;
}

fs::path FileSystemFetcher::fetch(const std::string& url, const fs::path& dest) const {
    const auto src = resolve(url);
    if (!fs::exists(src)) throw TransportError("fetch: source not found: " + src.string());
    if (dest.has_parent_path()) fs::create_directories(dest.parent_path());
    fs::copy(src, dest, fs::copy_options::overwrite_existing | fs::copy_options::recursive);
    return dest;
}

AvailabilityReport check_availability(const std::vector<VideoRecord>& records,
                                      const Fetcher& fetcher) {
    AvailabilityReport report;
    for (const auto& r : records) {
        Availability status;
        try {
            status = fetcher.probe(r.url);
        } catch (const std::exception&) {
            status = Availability::error;
        }
        report[r.video_id] = status;
    }
    return report;
}

json availability_to_json(const AvailabilityReport& report) {
    json j = json::object();
    for (const auto& [id, status] : report) j[id] = to_string(status);
    return j;
}

}  // namespace vidsearch
