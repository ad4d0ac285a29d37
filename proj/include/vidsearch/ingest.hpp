#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace vidsearch {

struct VideoRecord {
    std::string video_id;
    std::string url;
    std::string category;
    double start_time = 0.0;  // seconds
    double end_time = 0.0;    // seconds
    std::optional<std::string> local_path;

    friend bool operator==(const VideoRecord&, const VideoRecord&) = default;
};

struct SentenceRecord {
    std::string video_id;
    std::string caption;

    friend bool operator==(const SentenceRecord&, const SentenceRecord&) = default;
};

/// MSR-VTT style corpus description: videos plus clip-sentence pairs.
struct Manifest {
    std::vector<VideoRecord> videos;
    std::vector<SentenceRecord> sentences;
    std::map<std::string, std::string> category_names;  // numeric code -> name

    const VideoRecord* find_video(std::string_view video_id) const;

    friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// Sentences per video in the reference corpus; deviations only warn.
inline constexpr std::size_t kExpectedSentencesPerVideo = 20;

/// Accepts `start time`/`start_time`/`start` (and the same for end), string or
/// integer categories, and an optional top-level `category_names` given as an
/// object (code -> name) or an array indexed by code.
///
/// Throws ParseError (with record position and field) for malformed records
/// and ReferentialError listing every dangling sentence video_id.
Manifest parse_manifest(std::string_view json_text, std::vector<std::string>* warnings = nullptr);
Manifest load_manifest(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);

/// Canonical key spelling; parse_manifest(serialize_manifest(m)) == m.
std::string serialize_manifest(const Manifest& manifest);

/// For each requested category (in request order), the first per_category
/// videos of that category in manifest order. Scarce categories add a warning.
/// Throws InvalidInputError for per_category == 0 or a category that no video has.
std::vector<VideoRecord> filter_sample(const Manifest& manifest,
                                       const std::vector<std::string>& categories,
                                       std::size_t per_category,
                                       std::vector<std::string>* warnings = nullptr);

/// Manifest-order captions for one video. Throws MissingCaptionError for an
/// unknown id.
std::vector<std::string> sentences_for(const Manifest& manifest, std::string_view video_id);

struct FrameSpan {
    std::size_t first = 0;
    std::size_t count = 0;
};

/// Frames [floor(start * fps), ceil(end * fps)) of the record's source video,
/// clamped to frame_count. Throws InvalidInputError when nothing remains.
FrameSpan clip_frame_span(const VideoRecord& record, double fps, std::size_t frame_count);

enum class Availability { available, unavailable, error };

const char* to_string(Availability a) noexcept;

/// Stand-in for the downloader: probe must not have side effects.
class Fetcher {
public:
    virtual ~Fetcher() = default;
    virtual Availability probe(const std::string& url) const = 0;
    virtual std::filesystem::path fetch(const std::string& url,
                                        const std::filesystem::path& dest) const = 0;
};

/// Treats URLs (optionally `file://`-prefixed) as local paths, relative ones
/// resolved against root.
class FileSystemFetcher final : public Fetcher {
public:
    explicit FileSystemFetcher(std::filesystem::path root = {}) : root_(std::move(root)) {}

    Availability probe(const std::string& url) const override;
    std::filesystem::path fetch(const std::string& url,
                                const std::filesystem::path& dest) const override;

    std::filesystem::path resolve(const std::string& url) const;

private:
    std::filesystem::path root_;
};

using AvailabilityReport = std::map<std::string, Availability>;

/// One probe per record; a throwing probe yields Availability::error for that
/// record only.
AvailabilityReport check_availability(const std::vector<VideoRecord>& records,
                                      const Fetcher& fetcher);

/// `{"<video_id>": "available"|"unavailable"|"error", ...}`
nlohmann::json availability_to_json(const AvailabilityReport& report);

}  // namespace vidsearch
