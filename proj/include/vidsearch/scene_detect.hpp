#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vidsearch/frame.hpp"

namespace vidsearch {

inline constexpr double kDefaultSceneThreshold = 0.3;
inline constexpr std::size_t kDefaultBinsPerChannel = 8;

/// L1-normalized joint RGB histogram with B bins per channel, flattened as
/// index = r_bin * B * B + g_bin * B + b_bin.
class FrameHistogram {
public:
    FrameHistogram() = default;
    FrameHistogram(std::size_t bins_per_channel, std::vector<double> bins);

    std::size_t bins_per_channel() const noexcept { return bins_per_channel_; }
    std::size_t size() const noexcept { return bins_.size(); }
    std::span<const double> bins() const noexcept { return bins_; }
    double operator[](std::size_t i) const { return bins_[i]; }

    static std::size_t flat_index(std::size_t bins_per_channel, std::size_t r_bin,
                                  std::size_t g_bin, std::size_t b_bin) {
        return (r_bin * bins_per_channel + g_bin) * bins_per_channel + b_bin;
    }

    friend bool operator==(const FrameHistogram&, const FrameHistogram&) = default;

private:
    std::size_t bins_per_channel_ = 0;
    std::vector<double> bins_;
};

struct SceneBoundary {
    std::size_t start_frame = 0;  // inclusive
    std::size_t end_frame = 0;    // inclusive

    std::size_t length() const noexcept { return end_frame - start_frame + 1; }
    friend bool operator==(const SceneBoundary&, const SceneBoundary&) = default;
};

/// Channel value v lands in bin floor(v * B / 256). Throws InvalidInputError
/// on a zero-area frame or bins_per_channel outside [1, 256].
FrameHistogram compute_histogram(const Frame& frame,
                                 std::size_t bins_per_channel = kDefaultBinsPerChannel);

/// Euclidean distance between flattened histograms.
double histogram_distance(const FrameHistogram& a, const FrameHistogram& b);

/// Streaming hard-cut detector. Holds only the previous frame's histogram.
/// A new scene starts at frame i when distance(hist(i-1), hist(i)) > threshold.
class SceneDetector {
public:
    explicit SceneDetector(double threshold = kDefaultSceneThreshold,
                           std::size_t bins_per_channel = kDefaultBinsPerChannel);

    /// Feeds the next frame; returns the index of the new scene's first frame
    /// when a cut is declared before it.
    std::optional<std::size_t> push(const Frame& frame);

    /// Closes the last scene and returns all boundaries. Throws if no frame
    /// was pushed.
    std::vector<SceneBoundary> finish();

    std::size_t frames_seen() const noexcept { return next_index_; }
    std::size_t histograms_computed() const noexcept { return histograms_computed_; }

private:
    double threshold_;
    std::size_t bins_;
    std::optional<FrameHistogram> previous_;
    std::size_t next_index_ = 0;
    std::size_t scene_start_ = 0;
    std::size_t histograms_computed_ = 0;
    std::vector<SceneBoundary> scenes_;
};

/// Single pass over the source, reading each frame exactly once in order.
std::vector<SceneBoundary> detect_scenes(const VideoSource& source,
                                         double threshold = kDefaultSceneThreshold,
                                         std::size_t bins_per_channel = kDefaultBinsPerChannel);

/// `[{"start_frame": int, "end_frame": int}, ...]`
nlohmann::json boundaries_to_json(std::span<const SceneBoundary> scenes);
std::vector<SceneBoundary> boundaries_from_json(const nlohmann::json& j);

}  // namespace vidsearch
