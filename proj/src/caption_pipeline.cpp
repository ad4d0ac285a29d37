#include "vidsearch/caption_pipeline.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <mutex>
#include <set>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "vidsearch/error.hpp"
#include "vidsearch/scene_detect.hpp"

namespace vidsearch {

using nlohmann::json;

Caption Caption::from_text(std::string text) {
    Caption c;
    c.tokens = tokenize(text);
    c.text = std::move(text);
    return c;
}

ColorHistogramExtractor::ColorHistogramExtractor(std::size_t dimension) : dimension_(dimension) {
    if (dimension < kMinDimension) {
        throw InvalidInputError("colour-histogram features need dimension >= " +
                                std::to_string(kMinDimension));
    }
}

FeatureVector ColorHistogramExtractor::extract(const Frame& frame) const {
    const auto hist = compute_histogram(frame, 3);
    FeatureVector out(dimension_, 0.0);
    std::copy(hist.bins().begin(), hist.bins().end(), out.begin());
    std::array<double, 3> sums{0.0, 0.0, 0.0};
    const auto px = frame.bytes();
    for (std::size_t i = 0; i < px.size(); i += 3) {
        sums[0] += px[i];
        sums[1] += px[i + 1];
        sums[2] += px[i + 2];
    }
    const double n = static_cast<double>(frame.pixel_count()) * 255.0;
    for (std::size_t c = 0; c < 3; ++c) out[kHistogramBins + c] = sums[c] / n;
    return out;
}

namespace {

// Bucket index r*9 + g*3 + b over levels {dark, mid, bright}.
const std::array<std::string, 27> kPhrases = [] {
    const std::array<const char*, 27> names{
        "black",  "navy",       "blue",       "dark green",  "teal",        "azure",
        "green",  "spring green", "cyan",     "maroon",      "purple",      "violet",
        "olive",  "gray",       "lavender",   "chartreuse",  "light green", "pale cyan",
        "red",    "crimson",    "magenta",    "orange",      "salmon",      "pink",
        "yellow", "cream",      "white"};
    std::array<std::string, 27> out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        out[i] = std::string("a scene in ") + names[i] + " tones";
    }
    return out;
}();

}  // namespace

std::size_t MockCaptioner::dominant_bucket(const FeatureVector& pooled) {
    if (pooled.size() < ColorHistogramExtractor::kHistogramBins) {
        throw InvalidInputError("mock captioner needs at least 27 pooled features");
    }
    const auto first = pooled.begin();
    const auto last = first + static_cast<std::ptrdiff_t>(ColorHistogramExtractor::kHistogramBins);
    return static_cast<std::size_t>(std::max_element(first, last) - first);
}

const std::string& MockCaptioner::phrase_for_bucket(std::size_t bucket) {
    return kPhrases.at(bucket);
}

Caption MockCaptioner::caption(const FeatureVector& pooled, const ClipMetadata&) const {
    return Caption::from_text(phrase_for_bucket(dominant_bucket(pooled)));
}

DatasetCaptioner::DatasetCaptioner(const Manifest& manifest) {
    for (const auto& v : manifest.videos) known_videos_.insert(v.video_id);
    for (const auto& s : manifest.sentences) first_sentence_.emplace(s.video_id, s.caption);
}

Caption DatasetCaptioner::caption(const FeatureVector&, const ClipMetadata& clip) const {
    if (auto it = first_sentence_.find(clip.video_id); it != first_sentence_.end()) {
        return Caption::from_text(it->second);
    }
    if (known_videos_.count(clip.video_id)) {
        throw MissingCaptionError("video \"" + clip.video_id + "\" has no ground-truth sentences");
    }
    throw MissingCaptionError("no ground-truth caption for video_id \"" + clip.video_id + "\"");
}

RemoteCaptioner::RemoteCaptioner(std::string base_url, std::string path, int timeout_seconds)
    : base_url_(std::move(base_url)), path_(std::move(path)), timeout_seconds_(timeout_seconds) {}

Caption RemoteCaptioner::caption(const FeatureVector& pooled, const ClipMetadata& clip) const {
    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout_seconds_);
    client.set_read_timeout(timeout_seconds_);
    const json body = {{"features", pooled}, {"clip", clip.clip_path}};
    auto res = client.Post(path_, body.dump(), "application/json");
    if (!res) {
        throw TransportError("remote captioner: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw TransportError("remote captioner: HTTP " + std::to_string(res->status));
    }
    json reply;
    try {
        reply = json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw TransportError(std::string("remote captioner: bad JSON reply: ") + e.what());
    }
    if (!reply.is_object() || !reply.contains("caption") || !reply["caption"].is_string()) {
        throw TransportError("remote captioner: reply lacks a string \"caption\"");
    }
    return Caption::from_text(reply["caption"].get<std::string>());
}

std::vector<std::size_t> sample_indices(std::size_t frame_count, std::size_t stride) {
    if (stride < 1) throw InvalidInputError("frame stride must be at least 1");
    if (frame_count == 0) throw InvalidInputError("video source has no frames");
    const std::size_t k = std::max<std::size_t>(1, frame_count / stride);
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = i * stride;
    return out;
}

std::vector<Frame> sample_frames(const VideoSource& source, std::size_t stride) {
    std::vector<Frame> frames;
    for (auto i : sample_indices(source.frame_count(), stride)) frames.push_back(source.frame(i));
    return frames;
}

FeatureVector meanpool(std::span<const FeatureVector> vectors) {
    if (vectors.empty()) throw InvalidInputError("meanpool needs at least one vector");
    const std::size_t d = vectors.front().size();
    FeatureVector sum(d, 0.0);
    for (const auto& v : vectors) {
        if (v.size() != d) {
            throw InvalidInputError("meanpool: ragged feature lengths " + std::to_string(d) +
                                    " and " + std::to_string(v.size()));
        }
        for (std::size_t i = 0; i < d; ++i) sum[i] += v[i];
    }
    const double n = static_cast<double>(vectors.size());
    for (auto& x : sum) x /= n;
    return sum;
}

Caption caption_clip(const VideoSource& source, const FeatureExtractor& extractor,
                     const Captioner& captioner, std::size_t stride, const ClipMetadata& clip) {
    std::vector<FeatureVector> features;
    for (auto i : sample_indices(source.frame_count(), stride)) {
        auto f = extractor.extract(source.frame(i));
        if (f.size() != extractor.dimension()) {
            throw InvalidInputError("feature extractor returned wrong dimension");
        }
        for (double x : f) {
            if (!std::isfinite(x)) throw InvalidInputError("feature extractor returned non-finite value");
        }
        features.push_back(std::move(f));
    }
    return captioner.caption(meanpool(features), clip);
}

CorpusResult caption_corpus(const std::vector<ClipJob>& clips, const FeatureExtractor& extractor,
                            const Captioner& captioner, std::size_t stride, std::size_t workers) {
    std::set<std::string> paths;
    for (const auto& c : clips) {
        if (!paths.insert(c.clip_path).second) {
            throw InvalidInputError("duplicate clip path: " + c.clip_path);
        }
    }

    struct Outcome {
        std::string caption;
        std::string error;
    };
    std::vector<Outcome> outcomes(clips.size());

    auto process = [&](std::size_t k) {
        const auto& job = clips[k];
        try {
            if (!job.source) throw InvalidInputError("clip has no video source");
            ClipMetadata meta = job.metadata;
            if (meta.clip_path.empty()) meta.clip_path = job.clip_path;
            auto c = caption_clip(*job.source, extractor, captioner, stride, meta);
            if (c.text.empty()) throw InvalidInputError("captioner returned an empty caption");
            outcomes[k].caption = std::move(c.text);
        } catch (const std::exception& e) {
            outcomes[k].error = e.what();
        }
    };

    workers = std::max<std::size_t>(1, std::min(workers, clips.size()));
    if (workers == 1) {
        for (std::size_t k = 0; k < clips.size(); ++k) process(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < clips.size(); k = next++) process(k);
            });
        }
    }

    CorpusResult result;
    for (std::size_t k = 0; k < clips.size(); ++k) {
        if (outcomes[k].error.empty()) {
            result.index.insert(clips[k].clip_path, std::move(outcomes[k].caption));
        } else {
            result.failures.push_back({clips[k].clip_path, std::move(outcomes[k].error)});
        }
    }
    std::sort(result.failures.begin(), result.failures.end(),
              [](const ClipFailure& a, const ClipFailure& b) { return a.clip_path < b.clip_path; });
    return result;
}

}  // namespace vidsearch
