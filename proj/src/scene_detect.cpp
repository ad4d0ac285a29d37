#include "vidsearch/scene_detect.hpp"

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "vidsearch/error.hpp"

namespace vidsearch {

FrameHistogram::FrameHistogram(std::size_t bins_per_channel, std::vector<double> bins)
    : bins_per_channel_(bins_per_channel), bins_(std::move(bins)) {
    if (bins_.size() != bins_per_channel * bins_per_channel * bins_per_channel) {
        throw InvalidInputError("histogram length must be B^3");
    }
}

FrameHistogram compute_histogram(const Frame& frame, std::size_t bins_per_channel) {
    if (bins_per_channel < 1 || bins_per_channel > 256) {
        throw InvalidInputError("bins_per_channel must be in [1, 256]");
    }
    if (frame.empty()) throw InvalidInputError("cannot histogram a zero-area frame");

    const std::size_t b = bins_per_channel;
    std::vector<std::size_t> counts(b * b * b, 0);
    const auto px = frame.bytes();
    for (std::size_t i = 0; i < px.size(); i += 3) {
        const std::size_t rb = px[i] * b / 256;
        const std::size_t gb = px[i + 1] * b / 256;
        const std::size_t bb = px[i + 2] * b / 256;
        ++counts[FrameHistogram::flat_index(b, rb, gb, bb)];
    }

    const double total = static_cast<double>(frame.pixel_count());
    std::vector<double> bins(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        bins[i] = static_cast<double>(counts[i]) / total;
    }
    return FrameHistogram(b, std::move(bins));
}

double histogram_distance(const FrameHistogram& a, const FrameHistogram& b) {
    if (a.size() != b.size()) {
        throw InvalidInputError("histogram length mismatch: " + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

SceneDetector::SceneDetector(double threshold, std::size_t bins_per_channel)
    : threshold_(threshold), bins_(bins_per_channel) {
    if (!(threshold > 0.0) || !std::isfinite(threshold)) {
        throw InvalidInputError("scene threshold must be a positive finite number");
    }
    if (bins_per_channel < 1 || bins_per_channel > 256) {
        throw InvalidInputError("bins_per_channel must be in [1, 256]");
    }
}

std::optional<std::size_t> SceneDetector::push(const Frame& frame) {
    FrameHistogram current = compute_histogram(frame, bins_);
    ++histograms_computed_;
    std::optional<std::size_t> cut;
    const std::size_t index = next_index_++;
    if (previous_ && histogram_distance(*previous_, current) > threshold_) {
        scenes_.push_back({scene_start_, index - 1});
        scene_start_ = index;
        cut = index;
    }
    previous_ = std::move(current);
    return cut;
}

std::vector<SceneBoundary> SceneDetector::finish() {
    if (next_index_ == 0) throw InvalidInputError("scene detection needs at least one frame");
    std::vector<SceneBoundary> out = std::move(scenes_);
    out.push_back({scene_start_, next_index_ - 1});
    scenes_.clear();
    previous_.reset();
    next_index_ = 0;
    scene_start_ = 0;
    return out;
}

std::vector<SceneBoundary> detect_scenes(const VideoSource& source, double threshold,
                                         std::size_t bins_per_channel) {
    const std::size_t n = source.frame_count();
    if (n == 0) throw InvalidInputError("video source has no frames");
    SceneDetector detector(threshold, bins_per_channel);
    for (std::size_t i = 0; i < n; ++i) {
        detector.push(source.frame(i));
    }
    return detector.finish();
}

nlohmann::json boundaries_to_json(std::span<const SceneBoundary> scenes) {
    auto arr = nlohmann::json::array();
    for (const auto& s : scenes) {
        arr.push_back({{"start_frame", s.start_frame}, {"end_frame", s.end_frame}});
    }
    return arr;
}

std::vector<SceneBoundary> boundaries_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ParseError("scene boundaries: expected a JSON array");
    std::vector<SceneBoundary> out;
    std::size_t expected_start = 0;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& e = j[i];
        if (!e.is_object() || !e.contains("start_frame") || !e.contains("end_frame") ||
            !e["start_frame"].is_number_unsigned() || !e["end_frame"].is_number_unsigned()) {
            throw ParseError("scene boundaries: entry " + std::to_string(i) +
                             " needs unsigned start_frame and end_frame");
        }
        SceneBoundary b{e["start_frame"].get<std::size_t>(), e["end_frame"].get<std::size_t>()};
        if (b.start_frame != expected_start || b.end_frame < b.start_frame) {
            throw ParseError("scene boundaries: entry " + std::to_string(i) +
                             " does not tile the frame range");
        }
        expected_start = b.end_frame + 1;
        out.push_back(b);
    }
    return out;
}

}  // namespace vidsearch
