#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "vidsearch/caption_index.hpp"
#include "vidsearch/frame.hpp"
#include "vidsearch/ingest.hpp"
#include "vidsearch/meteor.hpp"

namespace vidsearch {

inline constexpr std::size_t kDefaultFrameStride = 10;
inline constexpr std::size_t kDefaultFeatureDim = 64;

using FeatureVector = std::vector<double>;

struct Caption {
    std::string text;
    TokenSeq tokens;

    static Caption from_text(std::string text);
};

struct ClipMetadata {
    std::string clip_path;
    std::string video_id;
    std::size_t scene_index = 0;
};

class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;
    virtual std::size_t dimension() const = 0;
    virtual FeatureVector extract(const Frame& frame) const = 0;
};

class Captioner {
public:
    virtual ~Captioner() = default;
    virtual Caption caption(const FeatureVector& pooled, const ClipMetadata& clip) const = 0;
};

/// Reference extractor: the 27-bin (B=3) L1 colour histogram, then the mean
/// of each channel scaled to [0, 1], then zeros up to the requested dimension.
class ColorHistogramExtractor final : public FeatureExtractor {
public:
    static constexpr std::size_t kHistogramBins = 27;
    static constexpr std::size_t kMinDimension = kHistogramBins + 3;

    explicit ColorHistogramExtractor(std::size_t dimension = kDefaultFeatureDim);

    std::size_t dimension() const override { return dimension_; }
    FeatureVector extract(const Frame& frame) const override;

private:
    std::size_t dimension_;
};

/// Deterministic test captioner: picks the argmax among the first 27 pooled
/// features (a B=3 colour bucket) and returns a fixed phrase for it.
class MockCaptioner final : public Captioner {
public:
    Caption caption(const FeatureVector& pooled, const ClipMetadata& clip) const override;

    static std::size_t dominant_bucket(const FeatureVector& pooled);
    static const std::string& phrase_for_bucket(std::size_t bucket);
};

/// Returns the first ground-truth sentence for the clip's video_id.
class DatasetCaptioner final : public Captioner {
public:
    explicit DatasetCaptioner(const Manifest& manifest);

    Caption caption(const FeatureVector& pooled, const ClipMetadata& clip) const override;

private:
    std::unordered_map<std::string, std::string> first_sentence_;
    std::unordered_set<std::string> known_videos_;
};

/// POSTs `{"features": [...], "clip": "path"}` to an external service and
/// expects `{"caption": "..."}` back.
class RemoteCaptioner final : public Captioner {
public:
    /// base_url like "http://host:port"; path defaults to "/caption".
    explicit RemoteCaptioner(std::string base_url, std::string path = "/caption",
                             int timeout_seconds = 30);

    Caption caption(const FeatureVector& pooled, const ClipMetadata& clip) const override;

private:
    std::string base_url_;
    std::string path_;
    int timeout_seconds_;
};

/// Indices 0, n, ..., (k-1) n with k = floor(l / n); one frame at index 0
/// when k == 0.
std::vector<std::size_t> sample_indices(std::size_t frame_count, std::size_t stride);
std::vector<Frame> sample_frames(const VideoSource& source, std::size_t stride = kDefaultFrameStride);

/// Element-wise mean.
FeatureVector meanpool(std::span<const FeatureVector> vectors);

Caption caption_clip(const VideoSource& source, const FeatureExtractor& extractor,
                     const Captioner& captioner, std::size_t stride = kDefaultFrameStride,
                     const ClipMetadata& clip = {});

struct ClipJob {
    std::string clip_path;
    std::shared_ptr<const VideoSource> source;
    ClipMetadata metadata;  // clip_path is filled from the job when empty
};

struct ClipFailure {
    std::string clip_path;
    std::string reason;

    friend bool operator==(const ClipFailure&, const ClipFailure&) = default;
};

struct CorpusResult {
    CaptionIndex index;
    std::vector<ClipFailure> failures;  // sorted by clip path
};

/// Captions every clip; a failing clip is recorded and the rest still run.
/// Throws InvalidInputError on duplicate clip paths. With workers > 1 clips
/// are processed concurrently; the components must then be thread-safe.
CorpusResult caption_corpus(const std::vector<ClipJob>& clips, const FeatureExtractor& extractor,
                            const Captioner& captioner, std::size_t stride = kDefaultFrameStride,
                            std::size_t workers = 1);

}  // namespace vidsearch
