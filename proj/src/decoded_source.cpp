#include <mutex>

#include <opencv2/core.hpp>
#include <opencv2/videoio.hpp>

#include "vidsearch/error.hpp"
#include "vidsearch/frame.hpp"

namespace vidsearch {

namespace {

class DecodedVideoSource final : public VideoSource {
public:
    explicit DecodedVideoSource(const std::filesystem::path& path) : path_(path) {
        if (!capture_.open(path.string())) {
            throw InvalidInputError("cannot open video: " + path.string());
        }
        const double n = capture_.get(cv::CAP_PROP_FRAME_COUNT);
        frame_count_ = n > 0 ? static_cast<std::size_t>(n) : 0;
        const double fps = capture_.get(cv::CAP_PROP_FPS);
        fps_ = fps > 0 ? fps : 30.0;
    }

    std::size_t frame_count() const override { return frame_count_; }
    double frame_rate() const override { return fps_; }

    Frame frame(std::size_t index) const override {
        if (index >= frame_count_) {
            throw InvalidInputError("frame index " + std::to_string(index) + " out of range");
        }
        std::lock_guard lock(mutex_);
        if (index != next_) {
            capture_.set(cv::CAP_PROP_POS_FRAMES, static_cast<double>(index));
        }
        cv::Mat bgr;
        if (!capture_.read(bgr) || bgr.empty()) {
            throw InvalidInputError("failed to decode frame " + std::to_string(index) + " of " +
                                    path_.string());
        }
        next_ = index + 1;
        if (bgr.type() != CV_8UC3) bgr.convertTo(bgr, CV_8UC3);
        std::vector<std::uint8_t> px(3 * static_cast<std::size_t>(bgr.rows) * static_cast<std::size_t>(bgr.cols));
        std::size_t o = 0;
        for (int y = 0; y < bgr.rows; ++y) {
            const auto* row = bgr.ptr<cv::Vec3b>(y);
            for (int x = 0; x < bgr.cols; ++x) {
                px[o++] = row[x][2];
                px[o++] = row[x][1];
                px[o++] = row[x][0];
            }
        }
        return Frame(static_cast<std::size_t>(bgr.cols), static_cast<std::size_t>(bgr.rows), std::move(px));
    }

private:
    std::filesystem::path path_;
    mutable std::mutex mutex_;
    mutable cv::VideoCapture capture_;
    mutable std::size_t next_ = 0;
    std::size_t frame_count_ = 0;
    double fps_ = 30.0;
};

}  // namespace

std::unique_ptr<VideoSource> open_decoded_video(const std::filesystem::path& path) {
    return std::make_unique<DecodedVideoSource>(path);
}

}  // namespace vidsearch
