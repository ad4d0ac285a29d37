// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "oracle/meteor_bruteforce.hpp"
#include "test_support.hpp"
#include "vidsearch/caption_index.hpp"
#include "vidsearch/caption_pipeline.hpp"
#include "vidsearch/cli.hpp"
#include "vidsearch/error.hpp"
#include "vidsearch/index_search.hpp"
#include "vidsearch/ingest.hpp"
#include "vidsearch/meteor.hpp"
#include "vidsearch/scene_detect.hpp"
#include "vidsearch/service.hpp"
#include "vidsearch/speech.hpp"

using namespace vidsearch;
using nlohmann::json;
using vidsearch::test::read_file;
using vidsearch::test::TempDir;
using vidsearch::test::write_file;
using vidsearch::test::write_video;
using Clock = std::chrono::steady_clock;

namespace {

constexpr Rgb kRed{255, 0, 0}, kGreen{0, 255, 0}, kBlue{0, 0, 255};

struct Outcome {
    bool ok = true;
    std::string detail;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(12);
    s << v;
    return s.str();
}

int run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    return cli::run(args, out, err);
}

// ---------------------------------------------------------------- scenes

Outcome scene_tricolour() {
    Outcome o;
    TempDir dir;
    write_video(dir.path(), "tri", {{kRed, 30}, {kGreen, 30}, {kBlue, 30}});
    const FrameDirectorySource src(dir.path() / "tri" / "frames");
    const auto t0 = Clock::now();
    const auto scenes = detect_scenes(src, 0.3, 8);
    const double dt = seconds_since(t0);
    o.expect(src.frame_count() == 90, "expected 90 ppm frames");
    o.expect(scenes == std::vector<SceneBoundary>{{0, 29}, {30, 59}, {60, 89}},
             "boundaries " + boundaries_to_json(scenes).dump());
    o.expect(dt < 1.0, "took " + fmt(dt) + " s");
    o.detail += (o.detail.empty() ? "" : "; ") + std::string("runtime ") + fmt(dt) + " s";
    return o;
}

Outcome scene_constant() {
    Outcome o;
    TempDir dir;
    write_video(dir.path(), "flat", {{{90, 120, 30}, 50}});
    const auto scenes = detect_scenes(FrameDirectorySource(dir.path() / "flat" / "frames"));
    o.expect(scenes == std::vector<SceneBoundary>{{0, 49}}, "boundaries " + boundaries_to_json(scenes).dump());
    return o;
}

// ------------------------------------------------------------- histograms

Outcome histogram_red_blue() {
    Outcome o;
    const auto d = histogram_distance(compute_histogram(Frame::filled(16, 16, kRed)),
                                      compute_histogram(Frame::filled(16, 16, kBlue)));
    o.expect(std::abs(d - std::sqrt(2.0)) <= 1e-9, "distance " + fmt(d));
    return o;
}

Outcome histogram_l1() {
    Outcome o;
    std::mt19937 rng(2024);
    std::uniform_int_distribution<int> byte(0, 255), side(1, 40);
    for (int t = 0; t < 100; ++t) {
        const auto w = static_cast<std::size_t>(side(rng)), h = static_cast<std::size_t>(side(rng));
        std::vector<std::uint8_t> px(w * h * 3);
        for (auto& p : px) p = static_cast<std::uint8_t>(byte(rng));
        const auto hist = compute_histogram(Frame(w, h, std::move(px)));
        double sum = 0;
        for (double b : hist.bins()) sum += b;
        if (std::abs(sum - 1.0) > 1e-9) {
            o.expect(false, "frame " + std::to_string(t) + " sums to " + fmt(sum));
            break;
        }
    }
    return o;
}

// --------------------------------------------------------------- sampling

Outcome frame_sampling() {
    Outcome o;
    const std::vector<std::pair<std::size_t, std::size_t>> cases{{30, 10}, {95, 10}, {5, 10}};
    const std::vector<std::size_t> expected{3, 9, 1};
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto [l, n] = cases[i];
        const auto src = vidsearch::test::solid_video({{kRed, l}}, 2, 2);
        const auto got = sample_frames(src, n).size();
        o.expect(got == expected[i], "(" + std::to_string(l) + "," + std::to_string(n) + ") gave " +
                                         std::to_string(got));
    }
    return o;
}

// ----------------------------------------------------------------- meteor

Outcome meteor_examples() {
    Outcome o;
    const auto a = meteor_score(tokenize("a man rides a horse"), tokenize("a man rides a horse"));
    o.expect(a.matches == 5 && a.chunks == 1, "identical: m/chunks");
    o.expect(std::abs(a.penalty - 0.004) <= 1e-9, "identical penalty " + fmt(a.penalty));
    o.expect(std::abs(a.score - 0.996) <= 1e-9, "identical score " + fmt(a.score));
    const auto b = meteor_score(tokenize("the cat sat"), tokenize("on the mat"));
    o.expect(b.matches == 1 && std::abs(b.fmean - 1.0 / 3) <= 1e-9, "cat/mat fmean " + fmt(b.fmean));
    o.expect(std::abs(b.score - 1.0 / 6) <= 1e-9, "cat/mat score " + fmt(b.score));
    const auto c = meteor_score(tokenize("a b c d"), tokenize("a c b d"));
    o.expect(c.chunks == 4, "swapped chunks " + std::to_string(c.chunks));
    o.expect(std::abs(c.score - 0.5) <= 1e-9, "swapped score " + fmt(c.score));
    return o;
}

bool agrees(const TokenSeq& hyp, const TokenSeq& ref, std::string& why) {
    const auto want = oracle::best_alignment(hyp, ref);
    const auto got = align(hyp, ref);
    const auto chunks = count_chunks(got);
    bool same_pairs = got.pairs.size() == want.pairs.size();
    for (std::size_t k = 0; same_pairs && k < got.pairs.size(); ++k) {
        same_pairs = got.pairs[k].hyp == want.pairs[k].hyp && got.pairs[k].ref == want.pairs[k].ref;
    }
    if (got.pairs.size() == want.cardinality() && chunks == want.chunks && same_pairs && !got.approximate) {
        return true;
    }
    std::string h, r;
    for (const auto& t : hyp) h += t + " ";
    for (const auto& t : ref) r += t + " ";
    why = "hyp [" + h + "] ref [" + r + "]: got m=" + std::to_string(got.pairs.size()) + " chunks=" +
          std::to_string(chunks) + ", oracle m=" + std::to_string(want.cardinality()) +
          " chunks=" + std::to_string(want.chunks);
    return false;
}

// Every labelling of hyp+ref over the vocabulary is a renaming of one whose
// labels appear in first-occurrence order; exact matching only sees equality,
// so checking those canonical labellings covers every pair.
Outcome meteor_exhaustive() {
    Outcome o;
    const std::vector<std::string> vocab{"a", "man", "rides", "the", "horse"};
    constexpr std::size_t kMaxLen = 6;
    const auto t0 = Clock::now();
    std::size_t checked = 0;
    std::string why;
    std::vector<std::size_t> labels;
    std::function<bool(std::size_t, std::size_t, std::size_t)> gen = [&](std::size_t hl, std::size_t rl,
                                                                         std::size_t used) {
        if (labels.size() == hl + rl) {
            TokenSeq hyp, ref;
            for (std::size_t i = 0; i < labels.size(); ++i) (i < hl ? hyp : ref).push_back(vocab[labels[i]]);
            ++checked;
            return agrees(hyp, ref, why);
        }
        for (std::size_t l = 0; l <= used && l < vocab.size(); ++l) {
            labels.push_back(l);
            const bool ok = gen(hl, rl, std::max(used, l + 1));
            labels.pop_back();
            if (!ok) return false;
        }
        return true;
    };
    bool ok = true;
    for (std::size_t hl = 0; hl <= kMaxLen && ok; ++hl) {
        for (std::size_t rl = 0; rl <= kMaxLen && ok; ++rl) ok = gen(hl, rl, 0);
    }
    o.expect(ok, why);

    // Unreduced cross-check on the short end.
    const auto seqs = oracle::all_sequences(vocab, 0, 4);
    for (std::size_t i = 0; i < seqs.size() && ok; ++i) {
        for (std::size_t j = 0; j < seqs.size() && ok; ++j) {
            ok = agrees(seqs[i], seqs[j], why);
            ++checked;
        }
    }
    o.expect(ok, why);
    const double dt = seconds_since(t0);
    o.expect(dt < 60.0, "took " + fmt(dt) + " s");
    o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(checked) + " pairs in " + fmt(dt) + " s";
    return o;
}

// ------------------------------------------------------------- end to end

const std::vector<std::pair<std::string, std::string>> kCorpus{
    {"v1", "a man rides a horse"},           {"v2", "a dog catches a frisbee in the park"},
    {"v3", "an anchor reads the evening news"}, {"v4", "a chef slices onions"},
    {"v5", "a man rides a bike down a hill"},   {"v6", "children play on the beach"}};

std::string corpus_manifest() {
    json m{{"videos", json::array()}, {"sentences", json::array()}};
    for (const auto& [id, caption] : kCorpus) {
        m["videos"].push_back({{"video_id", id}, {"url", id + ".mp4"}, {"category", "people"},
                               {"start time", 0}, {"end time", 2}});
        m["sentences"].push_back({{"video_id", id}, {"caption", caption}});
        m["sentences"].push_back({{"video_id", id}, {"caption", "another description of " + id}});
    }
    return m.dump(2);
}

Outcome end_to_end_search() {
    Outcome o;
    TempDir dir;
    const auto videos = dir.path() / "videos";
    const std::vector<Rgb> palette{kRed, kGreen, kBlue, {255, 255, 0}, {0, 255, 255}, {255, 0, 255}};
    for (std::size_t i = 0; i < kCorpus.size(); ++i) write_video(videos, kCorpus[i].first, {{palette[i], 12}});
    write_file(dir.path() / "manifest.json", corpus_manifest());

    auto pipeline = [&](const std::string& tag) {
        const auto scenes = dir.path() / ("scenes_" + tag);
        const auto index = dir.path() / ("index_" + tag + ".json");
        if (run_cli({"split", "--videos", videos.string(), "--out", scenes.string()}) != 0) return std::string();
        if (run_cli({"caption", "--videos", videos.string(), "--scenes", scenes.string(), "--backend", "dataset",
                     "--manifest", (dir.path() / "manifest.json").string(), "--out", index.string()}) != 0) {
            return std::string();
        }
        return read_file(index);
    };
    const auto first = pipeline("a");
    const auto second = pipeline("b");
    o.expect(!first.empty(), "pipeline failed");
    if (first.empty()) return o;
    o.expect(first == second, "index files differ between runs");

    const auto idx = parse_index(first);
    o.expect(idx.size() == 6, "index has " + std::to_string(idx.size()) + " clips");
    const SearchIndex search(idx);
    for (const auto& [id, caption] : kCorpus) {
        const auto r = search.rank(caption, 3);
        const double L = static_cast<double>(tokenize(caption).size());
        o.expect(r.size() == 3, "top-3 size for " + id);
        if (r.size() != 3) continue;
        o.expect(r[0].clip_path == id + "_s0", "query for " + id + " ranked " + r[0].clip_path + " first");
        o.expect(std::abs(r[0].score - (1 - 0.5 / (L * L * L))) <= 1e-9, "score " + fmt(r[0].score));
        o.expect(r[0].score >= r[1].score && r[1].score >= r[2].score, "not descending for " + id);
    }
    return o;
}

// ------------------------------------------------------------------ index

Outcome index_roundtrip() {
    Outcome o;
    TempDir dir;
    const CaptionIndex idx(CaptionIndex::Map{{"clips/v1_s0.mp4", "a man rides a horse"},
                                             {"clips/v1_s1.mp4", "caf\xc3\xa9 \"quoted\" scene"},
                                             {"clips/v2_s0.mp4", "a dog runs"}});
    save_index(idx, dir.path() / "a.json");
    const auto loaded = load_index(dir.path() / "a.json");
    save_index(loaded, dir.path() / "b.json");
    o.expect(loaded == idx, "loaded index differs");
    o.expect(read_file(dir.path() / "a.json") == read_file(dir.path() / "b.json"), "re-save not byte-stable");

    auto rejects_naming = [&](const std::string& text, const std::string& key) {
        write_file(dir.path() / "bad.json", text);
        try {
            load_index(dir.path() / "bad.json");
        } catch (const ParseError& e) {
            return std::string(e.what()).find(key) != std::string::npos;
        }
        return false;
    };
    o.expect(rejects_naming(R"({"good": "x", "clips/bad": 7})", "clips/bad"), "non-string value");
    o.expect(rejects_naming(R"({"clips/dup": "x", "clips/dup": "y"})", "clips/dup"), "duplicate key");
    o.expect(rejects_naming(R"({"clips/empty": ""})", "clips/empty"), "empty caption");
    write_file(dir.path() / "arr.json", "[\"x\"]");
    bool array_rejected = false;
    try {
        load_index(dir.path() / "arr.json");
    } catch (const ParseError&) {
        array_rejected = true;
    }
    o.expect(array_rejected, "array document accepted");
    return o;
}

// ---------------------------------------------------------------- service

Outcome service_contract() {
    Outcome o;
    TempDir dir;
    std::string media(1000, '\0');
    for (std::size_t i = 0; i < media.size(); ++i) media[i] = static_cast<char>((i * 7) % 256);
    write_file(dir.path() / "media" / "v1_s0.mp4", media);
    write_file(dir.path() / "outside.txt", "secret");
    CaptionIndex::Map entries;
    for (const auto& [id, caption] : kCorpus) entries[id + "_s0.mp4"] = caption;
    const CaptionIndex idx(entries);

    ServiceConfig cfg;
    cfg.media_root = dir.path() / "media";
    auto svc = std::make_shared<SearchService>(std::make_shared<SearchIndex>(idx), cfg.media_root,
                                               std::make_shared<EchoSpeechToText>());
    HttpServer server(svc, cfg);
    const int port = server.bind("127.0.0.1", 0);
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    httplib::Client cli("127.0.0.1", port);

    o.expect(cfg.k_default == 3 && svc->k_default() == 3, "k default is not 3");

    auto r = cli.Get("/api/search?q=a%20man%20rides%20a%20horse");
    o.expect(r && r->status == 200, "search status");
    if (r) {
        o.expect(r->body == results_to_json(rank("a man rides a horse", idx)).dump(), "payload differs from rank()");
        o.expect(json::parse(r->body).size() == 3, "default k did not return 3");
    }
    r = cli.Get("/media/v1_s0.mp4", {{"Range", "bytes=0-99"}});
    o.expect(r && r->status == 206, "range status");
    if (r) {
        o.expect(r->get_header_value("Content-Range") == "bytes 0-99/1000", "Content-Range header");
        o.expect(r->body == media.substr(0, 100), "206 slice bytes");
    }
    r = cli.Get("/media/v1_s0.mp4", {{"Range", "bytes=250-259"}});
    o.expect(r && r->status == 206 && r->body == media.substr(250, 10), "mid-file slice");
    r = cli.Get("/media/v1_s0.mp4");
    o.expect(r && r->status == 200 && r->body == media, "full body without range");
    r = cli.Get("/media/..%2Foutside.txt");
    o.expect(r && r->status == 403, "traversal not refused");
    r = cli.Get("/media/v1_s0.mp4", {{"Range", "bytes=2000-3000"}});
    o.expect(r && r->status == 416, "unsatisfiable range");
    r = cli.Get("/media/v1_s0.mp4", {{"Range", "bytes=9-2"}});
    o.expect(r && r->status == 416, "inverted range");

    server.stop();
    t.join();
    return o;
}

// ----------------------------------------------------------------- ingest

class ScriptedFetcher final : public Fetcher {
public:
    Availability probe(const std::string& url) const override {
        ++probes;
        if (url == "n2.mp4") throw TransportError("timeout");
        return url == "s2.mp4" ? Availability::unavailable : Availability::available;
    }
    std::filesystem::path fetch(const std::string&, const std::filesystem::path& dest) const override {
        ++fetches;
        return dest;
    }
    mutable int probes = 0;
    mutable int fetches = 0;
};

Outcome ingest_contract() {
    Outcome o;
    const std::string text = R"({"videos": [
      {"video_id": "s1", "url": "s1.mp4", "category": "sports", "start time": 0, "end time": 10},
      {"video_id": "n1", "url": "n1.mp4", "category": "news", "start time": 0, "end time": 10},
      {"video_id": "s2", "url": "s2.mp4", "category": "sports", "start time": 3, "end time": 8.5},
      {"video_id": "f1", "url": "f1.mp4", "category": "food", "start time": 0, "end time": 4},
      {"video_id": "s3", "url": "s3.mp4", "category": "sports", "start time": 0, "end time": 10},
      {"video_id": "n2", "url": "n2.mp4", "category": "news", "start time": 1, "end time": 2}
    ], "sentences": [
      {"video_id": "s1", "caption": "a goal is scored"}, {"video_id": "n1", "caption": "a weather report"},
      {"video_id": "s2", "caption": "a tennis rally"}, {"video_id": "f1", "caption": "baking bread"},
      {"video_id": "s3", "caption": "a marathon"}, {"video_id": "n2", "caption": "an interview"}
    ]})";
    const auto m = parse_manifest(text);
    o.expect(m.videos.size() == 6 && m.sentences.size() == 6, "parsed counts");
    const auto picked = filter_sample(m, {"sports", "news"}, 2);
    std::vector<std::string> ids;
    for (const auto& v : picked) ids.push_back(v.video_id);
    o.expect(ids == std::vector<std::string>{"s1", "s2", "n1", "n2"}, "filtered ids");
    const auto again = filter_sample(m, {"sports", "news"}, 2);
    o.expect(again == picked, "filter not deterministic");

    const ScriptedFetcher f;
    const auto report = check_availability(picked, f);
    o.expect(f.probes == 4 && f.fetches == 0, "probe/fetch counts");
    o.expect(report.size() == 4, "report size");
    o.expect(report.at("s1") == Availability::available, "s1 status");
    o.expect(report.at("s2") == Availability::unavailable, "s2 status");
    o.expect(report.at("n1") == Availability::available, "n1 status");
    o.expect(report.at("n2") == Availability::error, "n2 status");
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"scene detection: 90-frame tri-colour video -> 3 exact scenes in < 1 s", scene_tricolour},
        {"scene detection: constant 50-frame video -> 1 scene", scene_constant},
        {"histogram: red vs blue distance = sqrt(2)", histogram_red_blue},
        {"histogram: L1 norm 1 across 100 random frames", histogram_l1},
        {"sampling: (30,10) (95,10) (5,10) -> 3 9 1", frame_sampling},
        {"meteor: hand-derived scores 0.996, 1/6, 0.5", meteor_examples},
        {"meteor: alignment equals brute force on all pairs up to length 6", meteor_exhaustive},
        {"end-to-end: dataset-captioned 6-clip search and byte-identical reruns", end_to_end_search},
        {"index: byte-stable round trip and named-key rejection", index_roundtrip},
        {"service: payload equals rank(), range semantics, default k 3", service_contract},
        {"ingest: parse, 2x2 deterministic filter, per-record availability", ingest_contract},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.ok = false;
            o.detail = std::string("exception: ") + e.what();
        }
        if (!o.ok) ++failed;
        std::cout << (o.ok ? "PASS" : "FAIL") << "  " << name;
        if (!o.detail.empty()) std::cout << "  (" << o.detail << ")";
        std::cout << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
              << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
