#include "vidsearch/cli.hpp"

#include <algorithm>
#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vidsearch/caption_pipeline.hpp"
#include "vidsearch/error.hpp"
#include "vidsearch/index_search.hpp"
#include "vidsearch/ingest.hpp"
#include "vidsearch/scene_detect.hpp"
#include "vidsearch/service.hpp"

namespace vidsearch::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool is_container_file(const fs::path& p) {
#ifdef VIDSEARCH_HAVE_OPENCV
    static const std::set<std::string> kExt{".mp4", ".m4v", ".avi", ".mkv", ".webm", ".mov", ".mpg", ".mpeg"};
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return fs::is_regular_file(p) && kExt.count(ext) > 0;
#else
    (void)p;
    return false;
#endif
}

}  // namespace

std::vector<VideoDir> discover_videos(const fs::path& root) {
    if (is_container_file(root)) return {{root.stem().string(), {}, root}};
    if (!fs::is_directory(root)) throw InvalidInputError("video directory not found: " + root.string());
    std::vector<VideoDir> out;
    if (fs::is_directory(root / "frames")) {
        const auto canon = fs::weakly_canonical(root);
        out.push_back({canon.filename().string(), root / "frames", {}});
        return out;
    }
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory() && fs::is_directory(entry.path() / "frames")) {
            out.push_back({entry.path().filename().string(), entry.path() / "frames", {}});
        } else if (is_container_file(entry.path())) {
            out.push_back({entry.path().stem().string(), {}, entry.path()});
        }
    }
    std::sort(out.begin(), out.end(),
              [](const VideoDir& a, const VideoDir& b) { return a.video_id < b.video_id; });
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (out[i].video_id == out[i - 1].video_id) {
            throw InvalidInputError("two videos share the id " + out[i].video_id + " under " + root.string());
        }
    }
    return out;
}

std::shared_ptr<const VideoSource> open_video(const VideoDir& video) {
    if (!video.frames_dir.empty()) return std::make_shared<FrameDirectorySource>(video.frames_dir);
#ifdef VIDSEARCH_HAVE_OPENCV
    return open_decoded_video(video.media_file);
#else
    throw InvalidInputError("built without OpenCV; cannot decode " + video.media_file.string());
#endif
}

std::string clip_name(const std::string& video_id, std::size_t scene_index, const std::string& prefix,
                      const std::string& extension) {
    return prefix + video_id + "_s" + std::to_string(scene_index) + extension;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInputError("cannot write " + path.string());
    out << text;
}

std::vector<std::string> split_list(const std::vector<std::string>& raw) {
    std::vector<std::string> out;
    for (const auto& item : raw) {
        std::stringstream ss(item);
        std::string part;
        while (std::getline(ss, part, ',')) {
            if (!part.empty()) out.push_back(part);
        }
    }
    return out;
}

Rgb parse_color(const std::string& name) {
    static const std::map<std::string, Rgb> kNamed{
        {"black", {0, 0, 0}},       {"white", {255, 255, 255}}, {"red", {255, 0, 0}},
        {"green", {0, 255, 0}},     {"blue", {0, 0, 255}},      {"yellow", {255, 255, 0}},
        {"cyan", {0, 255, 255}},    {"magenta", {255, 0, 255}}, {"gray", {128, 128, 128}}};
    if (auto it = kNamed.find(name); it != kNamed.end()) return it->second;
    if (name.size() == 7 && name[0] == '#') {
        unsigned r = 0, g = 0, b = 0;
        if (std::sscanf(name.c_str() + 1, "%2x%2x%2x", &r, &g, &b) == 3) {
            return {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                    static_cast<std::uint8_t>(b)};
        }
    }
    throw InvalidInputError("unknown colour: " + name);
}

// The view keeps its base alive.
std::shared_ptr<const VideoSource> subrange(std::shared_ptr<const VideoSource> base, std::size_t first,
                                            std::size_t count) {
    auto sub = std::make_shared<SubrangeSource>(*base, first, count);
    return std::shared_ptr<const VideoSource>(sub.get(), [sub, base](const VideoSource*) {});
}

/// With a manifest, narrows the video to the record's start/end times.
std::shared_ptr<const VideoSource> open_clip(const VideoDir& v, const Manifest* trim) {
    auto src = open_video(v);
    if (!trim) return src;
    const VideoRecord* rec = trim->find_video(v.video_id);
    if (!rec) throw InvalidInputError("--trim: video " + v.video_id + " is not in the manifest");
    const auto span = clip_frame_span(*rec, src->frame_rate(), src->frame_count());
    return subrange(std::move(src), span.first, span.count);
}

std::atomic<HttpServer*> g_running_server{nullptr};

extern "C" void handle_stop_signal(int) {
    if (auto* s = g_running_server.load()) s->stop();
}

struct IngestArgs {
    std::string manifest;
    std::vector<std::string> categories;
    std::size_t per_category = 100;
    std::string out;
    std::string fetch_root;
};

int cmd_ingest(const IngestArgs& a, std::ostream& out, std::ostream& err) {
    std::vector<std::string> warnings;
    const Manifest m = load_manifest(a.manifest, &warnings);
    const auto cats = split_list(a.categories);
    if (cats.empty()) throw InvalidInputError("at least one category is required");
    const auto records = filter_sample(m, cats, a.per_category, &warnings);

    const fs::path root = a.fetch_root.empty() ? fs::path(a.manifest).parent_path() : fs::path(a.fetch_root);
    const FileSystemFetcher fetcher(root);
    const auto report = check_availability(records, fetcher);

    Manifest filtered;
    filtered.category_names = m.category_names;
    filtered.videos = records;
    std::set<std::string> keep;
    for (const auto& r : records) keep.insert(r.video_id);
    for (const auto& s : m.sentences) {
        if (keep.count(s.video_id)) filtered.sentences.push_back(s);
    }

    const fs::path out_dir(a.out);
    write_text(out_dir / "availability.json", availability_to_json(report).dump(2) + "\n");
    write_text(out_dir / "manifest.json", serialize_manifest(filtered));

    for (const auto& w : warnings) err << "warning: " << w << "\n";
    std::size_t available = 0;
    for (const auto& [id, st] : report) available += st == Availability::available;
    out << "selected " << records.size() << " videos, " << available << " available; wrote "
        << (out_dir / "availability.json").string() << "\n";
    return kExitOk;
}

struct SplitArgs {
    std::string videos;
    std::string manifest;
    bool trim = false;
    double threshold = kDefaultSceneThreshold;
    std::size_t bins = kDefaultBinsPerChannel;
    std::string out;
};

int cmd_split(const SplitArgs& a, std::ostream& out, std::ostream&) {
    std::optional<Manifest> manifest;
    if (a.trim) {
        if (a.manifest.empty()) throw InvalidInputError("--trim needs --manifest");
        manifest = load_manifest(a.manifest);
    }
    const auto videos = discover_videos(a.videos);
    if (videos.empty()) throw InvalidInputError("no videos found under " + a.videos);
    for (const auto& v : videos) {
        const auto clip = open_clip(v, manifest ? &*manifest : nullptr);
        const VideoSource& src = *clip;
        const auto scenes = detect_scenes(src, a.threshold, a.bins);
        const auto path = fs::path(a.out) / (v.video_id + ".scenes.json");
        write_text(path, boundaries_to_json(scenes).dump(2) + "\n");
        out << v.video_id << ": " << src.frame_count() << " frames, " << scenes.size()
            << " scenes -> " << path.string() << "\n";
    }
    return kExitOk;
}

struct CaptionArgs {
    std::string videos;
    std::string scenes;
    std::string backend = "mock";
    std::string manifest;
    std::string remote_url;
    std::size_t stride = kDefaultFrameStride;
    std::size_t dim = kDefaultFeatureDim;
    double threshold = kDefaultSceneThreshold;
    std::size_t bins = kDefaultBinsPerChannel;
    std::string clip_prefix;
    std::string clip_ext;
    std::size_t workers = 1;
    bool strict = false;
    bool trim = false;
    std::string out;
};

int cmd_caption(const CaptionArgs& a, std::ostream& out, std::ostream& err) {
    std::unique_ptr<Captioner> captioner;
    std::optional<Manifest> manifest;
    if (a.backend == "mock") {
        captioner = std::make_unique<MockCaptioner>();
    } else if (a.backend == "dataset") {
        if (a.manifest.empty()) throw InvalidInputError("--manifest is required for the dataset backend");
        manifest = load_manifest(a.manifest);
        captioner = std::make_unique<DatasetCaptioner>(*manifest);
    } else if (a.backend == "remote") {
        if (a.remote_url.empty()) throw InvalidInputError("--remote-url is required for the remote backend");
        captioner = std::make_unique<RemoteCaptioner>(a.remote_url);
    } else {
        throw InvalidInputError("unknown captioner backend: " + a.backend);
    }
    if (a.trim && !manifest) {
        if (a.manifest.empty()) throw InvalidInputError("--trim needs --manifest");
        manifest = load_manifest(a.manifest);
    }
    const ColorHistogramExtractor extractor(a.dim);

    const auto videos = discover_videos(a.videos);
    if (videos.empty()) throw InvalidInputError("no videos found under " + a.videos);

    std::vector<ClipJob> jobs;
    for (const auto& v : videos) {
        const auto src = open_clip(v, a.trim ? &*manifest : nullptr);
        std::vector<SceneBoundary> scenes;
        if (!a.scenes.empty()) {
            const auto path = fs::path(a.scenes) / (v.video_id + ".scenes.json");
            std::ifstream in(path);
            if (!in) throw InvalidInputError("missing scene file: " + path.string());
            json j;
            try {
                j = json::parse(in);
            } catch (const json::parse_error& e) {
                throw ParseError(path.string() + ": " + e.what());
            }
            scenes = boundaries_from_json(j);
            if (scenes.empty() || scenes.back().end_frame + 1 != src->frame_count()) {
                throw ParseError(path.string() + ": scenes do not cover the video's " +
                                 std::to_string(src->frame_count()) + " frames");
            }
        } else {
            scenes = detect_scenes(*src, a.threshold, a.bins);
        }
        for (std::size_t k = 0; k < scenes.size(); ++k) {
            ClipJob job;
            job.clip_path = clip_name(v.video_id, k, a.clip_prefix, a.clip_ext);
            job.source = subrange(src, scenes[k].start_frame, scenes[k].length());
            job.metadata = {job.clip_path, v.video_id, k};
            jobs.push_back(std::move(job));
        }
    }

    const auto result = caption_corpus(jobs, extractor, *captioner, a.stride, a.workers);
    save_index(result.index, a.out);
    for (const auto& f : result.failures) err << "failed: " << f.clip_path << ": " << f.reason << "\n";
    out << "captioned " << result.index.size() << " of " << jobs.size() << " clips -> " << a.out << "\n";
    if (a.strict && !result.failures.empty()) return kExitInternal;
    return kExitOk;
}

struct SearchArgs {
    std::string index;
    std::string query;
    std::size_t k = kDefaultTopK;
    bool json_out = false;
    bool stem = false;
    std::string synonyms;
};

int cmd_search(const SearchArgs& a, std::ostream& out, std::ostream&) {
    const SearchIndex index(load_index(a.index));
    MatcherConfig cfg;
    if (a.stem) cfg.stemmer = suffix_stem;
    if (!a.synonyms.empty()) cfg.synonyms = load_synonym_table(a.synonyms);
    const auto results = index.rank(a.query, a.k, cfg);
    if (a.json_out) {
        out << results_to_json(results).dump() << "\n";
        return kExitOk;
    }
    out << std::left << std::setw(5) << "rank" << std::setw(10) << "score" << "clip / caption\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        std::ostringstream score;
        score << std::fixed << std::setprecision(6) << r.score << (r.breakdown.approximate ? "~" : "");
        out << std::left << std::setw(5) << (i + 1) << std::setw(10) << score.str() << r.clip_path
            << "\n" << std::string(15, ' ') << r.caption << "\n";
    }
    return kExitOk;
}

struct ServeArgs {
    ServiceConfig config;
    std::string tls_cert;
    std::string tls_key;
};

int cmd_serve(ServeArgs& a, std::ostream& out, std::ostream&) {
    auto& c = a.config;
    if (!a.tls_cert.empty()) c.tls_cert = a.tls_cert;
    if (!a.tls_key.empty()) c.tls_key = a.tls_key;
    if (c.index_path.empty()) throw InvalidInputError("an index path is required (--index or INDEX_PATH)");
    c.validate();
    auto index = std::make_shared<const SearchIndex>(load_index(c.index_path));
    auto service = std::make_shared<SearchService>(index, c.media_root,
                                                   std::shared_ptr<const SpeechToText>(make_speech_client(c)),
                                                   c.k_default);
    HttpServer server(service, c);
    const int port = server.bind(c.host, c.port);
    if (port < 0) throw InvalidInputError("cannot bind " + c.host + ":" + std::to_string(c.port));
    out << "serving " << index->size() << " clips on " << (server.tls() ? "https" : "http") << "://"
        << c.host << ":" << port << std::endl;
    g_running_server = &server;
    auto prev_int = std::signal(SIGINT, handle_stop_signal);
    auto prev_term = std::signal(SIGTERM, handle_stop_signal);
    const bool ok = server.listen_after_bind();
    g_running_server = nullptr;
    std::signal(SIGINT, prev_int);
    std::signal(SIGTERM, prev_term);
    return ok ? kExitOk : kExitInternal;
}

struct SynthArgs {
    std::string out;
    std::vector<std::string> colors;
    std::size_t frames_per_scene = 30;
    std::size_t width = 32;
    std::size_t height = 24;
};

int cmd_synth(const SynthArgs& a, std::ostream& out, std::ostream&) {
    const auto names = split_list(a.colors);
    if (names.empty()) throw InvalidInputError("at least one colour is required");
    if (a.frames_per_scene == 0 || a.width == 0 || a.height == 0) {
        throw InvalidInputError("frame count and size must be positive");
    }
    std::vector<Frame> frames;
    for (const auto& n : names) {
        const Rgb c = parse_color(n);
        for (std::size_t i = 0; i < a.frames_per_scene; ++i) frames.push_back(Frame::filled(a.width, a.height, c));
    }
    write_frame_directory(fs::path(a.out) / "frames", frames);
    out << "wrote " << frames.size() << " frames to " << (fs::path(a.out) / "frames").string() << "\n";
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Searchable video-clip database: split, caption, index and query clips", "vidsearch"};
    app.require_subcommand(1);

    IngestArgs ingest;
    auto* ingest_cmd = app.add_subcommand("ingest", "Subset a manifest by category and probe availability");
    ingest_cmd->add_option("--manifest", ingest.manifest, "MSR-VTT style manifest JSON")->required();
    ingest_cmd->add_option("--categories", ingest.categories, "Comma-separated category names")->required();
    ingest_cmd->add_option("--per-category", ingest.per_category, "Videos per category")->capture_default_str();
    ingest_cmd->add_option("--out", ingest.out, "Output directory")->required();
    ingest_cmd->add_option("--fetch-root", ingest.fetch_root, "Root for relative URLs (default: manifest dir)");

    SplitArgs split;
    auto* split_cmd = app.add_subcommand("split", "Detect scene boundaries in frame-directory videos");
    split_cmd->add_option("--videos", split.videos, "Video directory (or directory of videos)")->required();
    split_cmd->add_option("--threshold", split.threshold, "Histogram distance threshold")->capture_default_str();
    split_cmd->add_option("--bins", split.bins, "Histogram bins per channel")->capture_default_str();
    split_cmd->add_option("--manifest", split.manifest, "Manifest with clip start/end times");
    split_cmd->add_flag("--trim", split.trim, "Cut each video to its manifest start/end first");
    split_cmd->add_option("--out", split.out, "Output directory for <video_id>.scenes.json")->required();

    CaptionArgs caption;
    auto* caption_cmd = app.add_subcommand("caption", "Caption every scene and write the caption index");
    caption_cmd->add_option("--videos", caption.videos, "Video directory (or directory of videos)")->required();
    caption_cmd->add_option("--scenes", caption.scenes, "Directory of <video_id>.scenes.json (default: detect)");
    caption_cmd->add_option("--backend", caption.backend, "Captioner: mock, dataset or remote")
        ->check(CLI::IsMember({"mock", "dataset", "remote"}))
        ->capture_default_str();
    caption_cmd->add_option("--manifest", caption.manifest, "Manifest for the dataset backend");
    caption_cmd->add_option("--remote-url", caption.remote_url, "Base URL of the remote captioner");
    caption_cmd->add_option("--stride", caption.stride, "Sample every nth frame")->capture_default_str();
    caption_cmd->add_option("--dim", caption.dim, "Feature dimension")->capture_default_str();
    caption_cmd->add_option("--threshold", caption.threshold, "Scene threshold when detecting")->capture_default_str();
    caption_cmd->add_option("--bins", caption.bins, "Histogram bins when detecting")->capture_default_str();
    caption_cmd->add_option("--clip-prefix", caption.clip_prefix, "Prefix for clip paths in the index");
    caption_cmd->add_option("--clip-ext", caption.clip_ext, "Extension appended to clip paths");
    caption_cmd->add_option("--workers", caption.workers, "Clips captioned concurrently")->capture_default_str();
    caption_cmd->add_flag("--strict", caption.strict, "Exit 1 if any clip fails");
    caption_cmd->add_flag("--trim", caption.trim, "Cut each video to its manifest start/end first");
    caption_cmd->add_option("--out", caption.out, "Index JSON to write")->required();

    SearchArgs search;
    auto* search_cmd = app.add_subcommand("search", "Rank indexed clips against a text query");
    search_cmd->add_option("--index", search.index, "Caption index JSON")->required();
    search_cmd->add_option("--query,-q", search.query, "Query text")->required();
    search_cmd->add_option("--k,-k", search.k, "Number of results")->capture_default_str()->check(CLI::PositiveNumber);
    search_cmd->add_flag("--json", search.json_out, "Print the API JSON payload");
    search_cmd->add_flag("--stem", search.stem, "Enable the suffix stemmer stage");
    search_cmd->add_option("--synonyms", search.synonyms, "Synonym table (word<TAB>syn,...)");

    ServeArgs serve;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP search service");
    serve_cmd->add_option("--index", serve.config.index_path, "Caption index JSON")->envname("INDEX_PATH");
    serve_cmd->add_option("--media-root", serve.config.media_root, "Directory of clip media")->envname("MEDIA_ROOT");
    serve_cmd->add_option("--static-root", serve.config.static_root, "Web UI assets served at /")->envname("STATIC_ROOT");
    serve_cmd->add_option("--host", serve.config.host, "Bind address")->capture_default_str();
    serve_cmd->add_option("--port", serve.config.port, "Port")->envname("PORT")->capture_default_str();
    serve_cmd->add_option("--k-default", serve.config.k_default, "Default result count")->capture_default_str();
    serve_cmd->add_option("--tls-cert", serve.tls_cert, "PEM certificate")->envname("TLS_CERT");
    serve_cmd->add_option("--tls-key", serve.tls_key, "PEM private key")->envname("TLS_KEY");
    serve_cmd->add_option("--stt", serve.config.stt_backend, "Speech backend: mock or remote")
        ->envname("STT_BACKEND")
        ->check(CLI::IsMember({"mock", "remote"}))
        ->capture_default_str();
    serve_cmd->add_option("--stt-url", serve.config.stt_url, "Remote speech backend URL")->envname("STT_URL");
    serve_cmd->add_option("--mock-transcript", serve.config.mock_transcript, "Canned mock transcript")->envname("MOCK_TRANSCRIPT");

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic solid-colour frame-directory video");
    synth_cmd->add_option("--out", synth.out, "Video directory to create")->required();
    synth_cmd->add_option("--colors", synth.colors, "Comma-separated colours, one scene each")->required();
    synth_cmd->add_option("--frames-per-scene", synth.frames_per_scene, "Frames per colour")->capture_default_str();
    synth_cmd->add_option("--width", synth.width, "Frame width")->capture_default_str();
    synth_cmd->add_option("--height", synth.height, "Frame height")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        if (*ingest_cmd) return cmd_ingest(ingest, out, err);
        if (*split_cmd) return cmd_split(split, out, err);
        if (*caption_cmd) return cmd_caption(caption, out, err);
        if (*search_cmd) return cmd_search(search, out, err);
        if (*serve_cmd) return cmd_serve(serve, out, err);
        if (*synth_cmd) return cmd_synth(synth, out, err);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitUsage;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("vidsearch");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace vidsearch::cli
