#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace vidsearch {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Decoded RGB image, row-major, 8 bits per channel.
class Frame {
public:
    Frame() = default;
    /// Throws InvalidInputError unless width, height > 0 and
    /// pixels.size() == 3 * width * height.
    Frame(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels);

    static Frame filled(std::size_t width, std::size_t height, Rgb color);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept { return width_ * height_; }
    bool empty() const noexcept { return pixel_count() == 0; }

    std::span<const std::uint8_t> bytes() const noexcept { return pixels_; }
    Rgb at(std::size_t x, std::size_t y) const;
    void set(std::size_t x, std::size_t y, Rgb color);

    friend bool operator==(const Frame&, const Frame&) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

/// Random-access frame provider. frame(i) must return identical data on
/// repeated reads of the same index.
class VideoSource {
public:
    virtual ~VideoSource() = default;
    virtual std::size_t frame_count() const = 0;
    virtual Frame frame(std::size_t index) const = 0;
    virtual double frame_rate() const { return 30.0; }
};

/// Frames held in memory; used by tests and the Python bindings.
class InMemorySource final : public VideoSource {
public:
    explicit InMemorySource(std::vector<Frame> frames, double fps = 30.0);

    std::size_t frame_count() const override { return frames_.size(); }
    Frame frame(std::size_t index) const override;
    double frame_rate() const override { return fps_; }

private:
    std::vector<Frame> frames_;
    double fps_;
};

/// A directory of binary P6 PPM images (maxval 255); lexicographic filename
/// order is frame order. Frames are read from disk on every access.
class FrameDirectorySource final : public VideoSource {
public:
    explicit FrameDirectorySource(const std::filesystem::path& dir, double fps = 30.0);

    std::size_t frame_count() const override { return files_.size(); }
    Frame frame(std::size_t index) const override;
    double frame_rate() const override { return fps_; }

    const std::vector<std::filesystem::path>& files() const noexcept { return files_; }

private:
    std::vector<std::filesystem::path> files_;
    double fps_;
};

/// Contiguous window [first, first + count) of another source.
class SubrangeSource final : public VideoSource {
public:
    SubrangeSource(const VideoSource& base, std::size_t first, std::size_t count);

    std::size_t frame_count() const override { return count_; }
    Frame frame(std::size_t index) const override;
    double frame_rate() const override { return base_.frame_rate(); }

private:
    const VideoSource& base_;
    std::size_t first_;
    std::size_t count_;
};

Frame read_ppm(const std::filesystem::path& path);
Frame decode_ppm(std::span<const std::uint8_t> data);
std::vector<std::uint8_t> encode_ppm(const Frame& frame);
void write_ppm(const std::filesystem::path& path, const Frame& frame);

/// Writes frames as `<dir>/<000000>.ppm ...`; creates dir if needed.
void write_frame_directory(const std::filesystem::path& dir, std::span<const Frame> frames);

#ifdef VIDSEARCH_HAVE_OPENCV
/// System-decoder-backed source (OpenCV videoio). Seeks are only as exact as
/// the container allows.
std::unique_ptr<VideoSource> open_decoded_video(const std::filesystem::path& path);
#endif

}  // namespace vidsearch
