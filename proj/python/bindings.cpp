#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <filesystem>
#include <variant>

#include "vidsearch/caption_index.hpp"
#include "vidsearch/caption_pipeline.hpp"
#include "vidsearch/error.hpp"
#include "vidsearch/index_search.hpp"
#include "vidsearch/ingest.hpp"
#include "vidsearch/meteor.hpp"
#include "vidsearch/scene_detect.hpp"

namespace py = pybind11;
using namespace vidsearch;

namespace {

TokenSeq as_tokens(const std::variant<std::string, TokenSeq>& text) {
    if (const auto* s = std::get_if<std::string>(&text)) return tokenize(*s);
    return std::get<TokenSeq>(text);
}

MatcherConfig matcher(bool stem, const std::optional<SynonymTable>& synonyms) {
    MatcherConfig cfg;
    if (stem) cfg.stemmer = suffix_stem;
    if (synonyms) cfg.synonyms = *synonyms;
    return cfg;
}

py::dict breakdown_dict(const ScoreBreakdown& b) {
    py::dict d;
    d["matches"] = b.matches;
    d["precision"] = b.precision;
    d["recall"] = b.recall;
    d["fmean"] = b.fmean;
    d["chunks"] = b.chunks;
    d["penalty"] = b.penalty;
    d["score"] = b.score;
    d["approximate"] = b.approximate;
    return d;
}

using Boundaries = std::vector<std::pair<std::size_t, std::size_t>>;

Boundaries as_pairs(const std::vector<SceneBoundary>& scenes) {
    Boundaries out;
    for (const auto& s : scenes) out.emplace_back(s.start_frame, s.end_frame);
    return out;
}

}  // namespace

PYBIND11_MODULE(_vidsearch, m) {
    m.doc() = "Scene splitting, caption indexing and METEOR search";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidInputError>(m, "InvalidInputError", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<ReferentialError>(m, "ReferentialError", base.ptr());
    py::register_exception<MissingCaptionError>(m, "MissingCaptionError", base.ptr());
    py::register_exception<InvalidQueryError>(m, "InvalidQueryError", base.ptr());
    py::register_exception<TransportError>(m, "TransportError", base.ptr());

    py::class_<Frame>(m, "Frame")
        .def(py::init([](std::size_t w, std::size_t h, const py::bytes& pixels) {
                 const std::string s = pixels;
                 return Frame(w, h, std::vector<std::uint8_t>(s.begin(), s.end()));
             }),
             py::arg("width"), py::arg("height"), py::arg("pixels"))
        .def_static(
            "filled",
            [](std::size_t w, std::size_t h, std::tuple<std::uint8_t, std::uint8_t, std::uint8_t> c) {
                return Frame::filled(w, h, {std::get<0>(c), std::get<1>(c), std::get<2>(c)});
            },
            py::arg("width"), py::arg("height"), py::arg("rgb"))
        .def_property_readonly("width", &Frame::width)
        .def_property_readonly("height", &Frame::height)
        .def("pixels", [](const Frame& f) {
            const auto b = f.bytes();
            return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
        })
        .def(py::self == py::self);

    m.def("read_ppm", [](const std::filesystem::path& p) { return read_ppm(p); }, py::arg("path"));
    m.def("write_ppm", [](const Frame& f, const std::filesystem::path& p) { write_ppm(p, f); },
          py::arg("frame"), py::arg("path"));

    m.def(
        "compute_histogram",
        [](const Frame& f, std::size_t bins) {
            const auto h = compute_histogram(f, bins);
            return std::vector<double>(h.bins().begin(), h.bins().end());
        },
        py::arg("frame"), py::arg("bins_per_channel") = kDefaultBinsPerChannel);
    m.def(
        "histogram_distance",
        [](const std::vector<double>& a, const std::vector<double>& b) {
            const auto bpc = [](std::size_t n) {
                const auto c = static_cast<std::size_t>(std::llround(std::cbrt(static_cast<double>(n))));
                return c;
            };
            return histogram_distance(FrameHistogram(bpc(a.size()), a), FrameHistogram(bpc(b.size()), b));
        },
        py::arg("a"), py::arg("b"));
    m.def(
        "detect_scenes",
        [](const std::vector<Frame>& frames, double threshold, std::size_t bins) {
            return as_pairs(detect_scenes(InMemorySource(frames), threshold, bins));
        },
        py::arg("frames"), py::arg("threshold") = kDefaultSceneThreshold,
        py::arg("bins_per_channel") = kDefaultBinsPerChannel);
    m.def(
        "detect_scenes_in_directory",
        [](const std::filesystem::path& dir, double threshold, std::size_t bins) {
            py::gil_scoped_release release;
            return as_pairs(detect_scenes(FrameDirectorySource(dir), threshold, bins));
        },
        py::arg("directory"), py::arg("threshold") = kDefaultSceneThreshold,
        py::arg("bins_per_channel") = kDefaultBinsPerChannel);

    m.def("sample_indices", &sample_indices, py::arg("frame_count"), py::arg("stride") = kDefaultFrameStride);
    m.def(
        "meanpool", [](const std::vector<FeatureVector>& v) { return meanpool(v); }, py::arg("vectors"));

    m.def("tokenize", &tokenize, py::arg("text"));
    m.def("suffix_stem", &suffix_stem, py::arg("token"));
    m.def("parse_synonym_table", &parse_synonym_table, py::arg("text"));
    m.def(
        "align",
        [](const std::variant<std::string, TokenSeq>& hyp, const std::variant<std::string, TokenSeq>& ref,
           bool stem, const std::optional<SynonymTable>& synonyms) {
            const auto a = align(as_tokens(hyp), as_tokens(ref), matcher(stem, synonyms));
            std::vector<std::tuple<std::size_t, std::size_t, std::string>> out;
            for (const auto& p : a.pairs) out.emplace_back(p.hyp, p.ref, to_string(p.stage));
            return out;
        },
        py::arg("hyp"), py::arg("ref"), py::arg("stem") = false, py::arg("synonyms") = py::none());
    m.def(
        "meteor_score",
        [](const std::variant<std::string, TokenSeq>& hyp, const std::variant<std::string, TokenSeq>& ref,
           bool stem, const std::optional<SynonymTable>& synonyms) {
            return breakdown_dict(meteor_score(as_tokens(hyp), as_tokens(ref), matcher(stem, synonyms)));
        },
        py::arg("hyp"), py::arg("ref"), py::arg("stem") = false, py::arg("synonyms") = py::none());

    m.def(
        "serialize_index", [](const CaptionIndex::Map& e) { return serialize_index(CaptionIndex(e)); },
        py::arg("index"));
    m.def(
        "parse_index", [](const std::string& text) { return parse_index(text).entries(); }, py::arg("text"));
    m.def(
        "save_index",
        [](const CaptionIndex::Map& e, const std::filesystem::path& p) { save_index(CaptionIndex(e), p); },
        py::arg("index"), py::arg("path"));
    m.def(
        "load_index", [](const std::filesystem::path& p) { return load_index(p).entries(); }, py::arg("path"));
    m.def(
        "rank",
        [](const std::string& query, const CaptionIndex::Map& index, std::size_t k, bool stem,
           const std::optional<SynonymTable>& synonyms) {
            std::vector<SearchResult> results;
            {
                py::gil_scoped_release release;
                results = rank(query, CaptionIndex(index), k, matcher(stem, synonyms));
            }
            py::list out;
            for (const auto& r : results) {
                py::dict d;
                d["clip"] = r.clip_path;
                d["caption"] = r.caption;
                d["score"] = r.score;
                d["approx"] = r.breakdown.approximate;
                out.append(std::move(d));
            }
            return out;
        },
        py::arg("query"), py::arg("index"), py::arg("k") = kDefaultTopK, py::arg("stem") = false,
        py::arg("synonyms") = py::none());

    py::class_<VideoRecord>(m, "VideoRecord")
        .def_readonly("video_id", &VideoRecord::video_id)
        .def_readonly("url", &VideoRecord::url)
        .def_readonly("category", &VideoRecord::category)
        .def_readonly("start_time", &VideoRecord::start_time)
        .def_readonly("end_time", &VideoRecord::end_time)
        .def_readonly("local_path", &VideoRecord::local_path)
        .def("__repr__", [](const VideoRecord& v) { return "<VideoRecord " + v.video_id + ">"; });
    py::class_<SentenceRecord>(m, "SentenceRecord")
        .def_readonly("video_id", &SentenceRecord::video_id)
        .def_readonly("caption", &SentenceRecord::caption);
    py::class_<Manifest>(m, "Manifest")
        .def_readonly("videos", &Manifest::videos)
        .def_readonly("sentences", &Manifest::sentences)
        .def_readonly("category_names", &Manifest::category_names)
        .def("sentences_for", [](const Manifest& mf, const std::string& id) { return sentences_for(mf, id); })
        .def("to_json", &serialize_manifest);

    m.def(
        "parse_manifest",
        [](const std::string& text) {
            std::vector<std::string> warnings;
            auto mf = parse_manifest(text, &warnings);
            return std::make_pair(std::move(mf), std::move(warnings));
        },
        py::arg("text"));
    m.def(
        "filter_sample",
        [](const Manifest& mf, const std::vector<std::string>& categories, std::size_t per_category) {
            std::vector<std::string> warnings;
            auto picked = filter_sample(mf, categories, per_category, &warnings);
            return std::make_pair(std::move(picked), std::move(warnings));
        },
        py::arg("manifest"), py::arg("categories"), py::arg("per_category"));

    m.attr("DEFAULT_SCENE_THRESHOLD") = kDefaultSceneThreshold;
    m.attr("DEFAULT_BINS_PER_CHANNEL") = kDefaultBinsPerChannel;
    m.attr("DEFAULT_FRAME_STRIDE") = kDefaultFrameStride;
    m.attr("DEFAULT_TOP_K") = kDefaultTopK;
}
