#include "vidsearch/frame.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "vidsearch/error.hpp"

namespace vidsearch {

namespace fs = std::filesystem;

Frame::Frame(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width == 0 || height == 0) {
        throw InvalidInputError("frame must have non-zero width and height");
    }
    if (pixels_.size() != 3 * width * height) {
        throw InvalidInputError("frame pixel buffer size " + std::to_string(pixels_.size()) +
                                " does not match 3*" + std::to_string(width) + "*" +
                                std::to_string(height));
    }
}

Frame Frame::filled(std::size_t width, std::size_t height, Rgb color) {
    std::vector<std::uint8_t> px(3 * width * height);
    for (std::size_t i = 0; i < px.size(); i += 3) {
        px[i] = color.r;
        px[i + 1] = color.g;
        px[i + 2] = color.b;
    }
    return Frame(width, height, std::move(px));
}

Rgb Frame::at(std::size_t x, std::size_t y) const {
    const std::size_t o = 3 * (y * width_ + x);
    return {pixels_.at(o), pixels_.at(o + 1), pixels_.at(o + 2)};
}

void Frame::set(std::size_t x, std::size_t y, Rgb color) {
    const std::size_t o = 3 * (y * width_ + x);
    pixels_.at(o) = color.r;
    pixels_.at(o + 1) = color.g;
    pixels_.at(o + 2) = color.b;
}

InMemorySource::InMemorySource(std::vector<Frame> frames, double fps)
    : frames_(std::move(frames)), fps_(fps) {}

Frame InMemorySource::frame(std::size_t index) const {
    if (index >= frames_.size()) {
        throw InvalidInputError("frame index " + std::to_string(index) + " out of range");
    }
    return frames_[index];
}

FrameDirectorySource::FrameDirectorySource(const fs::path& dir, double fps) : fps_(fps) {
    if (!fs::is_directory(dir)) {
        throw InvalidInputError("frame directory not found: " + dir.string());
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
            files_.push_back(entry.path());
        }
    }
    std::sort(files_.begin(), files_.end(), [](const fs::path& a, const fs::path& b) {
        return a.filename().string() < b.filename().string();
    });
}

Frame FrameDirectorySource::frame(std::size_t index) const {
    if (index >= files_.size()) {
        throw InvalidInputError("frame index " + std::to_string(index) + " out of range");
    }
    return read_ppm(files_[index]);
}

SubrangeSource::SubrangeSource(const VideoSource& base, std::size_t first, std::size_t count)
    : base_(base), first_(first), count_(count) {
    if (first > base.frame_count() || count > base.frame_count() - first) {
        throw InvalidInputError("subrange exceeds source frame count");
    }
}

Frame SubrangeSource::frame(std::size_t index) const {
    if (index >= count_) {
        throw InvalidInputError("frame index " + std::to_string(index) + " out of range");
    }
    return base_.frame(first_ + index);
}

namespace {

class PpmReader {
public:
    explicit PpmReader(std::span<const std::uint8_t> data) : data_(data) {}

    void skip_space_and_comments() {
        while (pos_ < data_.size()) {
            if (data_[pos_] == '#') {
                while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
            } else if (std::isspace(data_[pos_])) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::size_t read_uint() {
        skip_space_and_comments();
        if (pos_ >= data_.size() || !std::isdigit(data_[pos_])) {
            throw ParseError("ppm: expected unsigned integer in header");
        }
        std::size_t v = 0;
        while (pos_ < data_.size() && std::isdigit(data_[pos_])) {
            v = v * 10 + static_cast<std::size_t>(data_[pos_] - '0');
            if (v > (1u << 24)) throw ParseError("ppm: header value too large");
            ++pos_;
        }
        return v;
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

}  // namespace

Frame decode_ppm(std::span<const std::uint8_t> data) {
    if (data.size() < 2 || data[0] != 'P' || data[1] != '6') {
        throw ParseError("ppm: missing P6 magic");
    }
    PpmReader rd(data);
    rd.pos_ = 2;
    const std::size_t w = rd.read_uint();
    const std::size_t h = rd.read_uint();
    const std::size_t maxval = rd.read_uint();
    if (maxval != 255) throw ParseError("ppm: only maxval 255 is supported");
    if (rd.pos_ >= data.size() || !std::isspace(data[rd.pos_])) {
        throw ParseError("ppm: expected single whitespace after maxval");
    }
    ++rd.pos_;
    const std::size_t need = 3 * w * h;
    if (data.size() - rd.pos_ < need) throw ParseError("ppm: truncated pixel data");
    std::vector<std::uint8_t> px(data.begin() + static_cast<std::ptrdiff_t>(rd.pos_),
                                 data.begin() + static_cast<std::ptrdiff_t>(rd.pos_ + need));
    if (w == 0 || h == 0) throw ParseError("ppm: zero-area image");
    return Frame(w, h, std::move(px));
}

Frame read_ppm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInputError("cannot open ppm: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    try {
        return decode_ppm(bytes);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_ppm(const Frame& frame) {
    const std::string header = "P6\n" + std::to_string(frame.width()) + " " +
                               std::to_string(frame.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    const auto px = frame.bytes();
    out.insert(out.end(), px.begin(), px.end());
    return out;
}

void write_ppm(const fs::path& path, const Frame& frame) {
    const auto bytes = encode_ppm(frame);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInputError("cannot write ppm: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_frame_directory(const fs::path& dir, std::span<const Frame> frames) {
    fs::create_directories(dir);
    char name[32];
    for (std::size_t i = 0; i < frames.size(); ++i) {
        std::snprintf(name, sizeof name, "%06zu.ppm", i);
        write_ppm(dir / name, frames[i]);
    }
}

}  // namespace vidsearch
