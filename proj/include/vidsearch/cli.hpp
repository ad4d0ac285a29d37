#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "vidsearch/frame.hpp"

namespace vidsearch::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;

/// Entry point shared by the `vidsearch` binary and the tests.
/// Subcommands: ingest, split, caption, search, serve, synth.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
/// Same, with args excluding the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct VideoDir {
    std::string video_id;
    std::filesystem::path frames_dir;  // `<video>/frames` of .ppm files
    std::filesystem::path media_file;  // or a container file decoded through OpenCV
};

/// A directory holding `frames/` is one video named after the directory;
/// otherwise every subdirectory holding `frames/` is a video. When built with
/// OpenCV, container files (.mp4, .avi, ...) count too, named by their stem,
/// and root may be such a file. Sorted by id; duplicate ids are an error.
std::vector<VideoDir> discover_videos(const std::filesystem::path& root);

std::shared_ptr<const VideoSource> open_video(const VideoDir& video);

/// `<video_id>_s<scene_index>` with optional prefix and extension.
std::string clip_name(const std::string& video_id, std::size_t scene_index,
                      const std::string& prefix = {}, const std::string& extension = {});

}  // namespace vidsearch::cli
