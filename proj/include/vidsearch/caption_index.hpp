#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace vidsearch {

/// Persistent clip-path -> caption map; the searchable database.
/// Keys are unique relative `/`-separated paths, values are non-empty.
class CaptionIndex {
public:
    using Map = std::map<std::string, std::string>;

    CaptionIndex() = default;
    explicit CaptionIndex(Map entries);

    /// Throws InvalidInputError on a duplicate key, an empty key or an empty caption.
    void insert(std::string clip_path, std::string caption);

    bool contains(const std::string& clip_path) const { return entries_.count(clip_path) != 0; }
    const std::string& at(const std::string& clip_path) const { return entries_.at(clip_path); }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const Map& entries() const noexcept { return entries_; }

    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    friend bool operator==(const CaptionIndex&, const CaptionIndex&) = default;

private:
    Map entries_;
};

/// Pretty JSON object with keys in lexicographic order, UTF-8, trailing newline.
std::string serialize_index(const CaptionIndex& index);
/// Throws ParseError naming the offending key for non-string or empty values
/// and duplicate keys; a non-object document is also a ParseError.
CaptionIndex parse_index(std::string_view text);

void save_index(const CaptionIndex& index, const std::filesystem::path& path);
CaptionIndex load_index(const std::filesystem::path& path);

}  // namespace vidsearch
