#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "test_support.hpp"
#include "vidsearch/error.hpp"
#include "vidsearch/scene_detect.hpp"

#ifdef VIDSEARCH_HAVE_OPENCV
#include <opencv2/core.hpp>
#include <opencv2/videoio.hpp>
#endif

using namespace vidsearch;
using vidsearch::test::solid_video;
using vidsearch::test::TempDir;

namespace {

constexpr Rgb kRed{255, 0, 0};
constexpr Rgb kGreen{0, 255, 0};
constexpr Rgb kBlue{0, 0, 255};

Frame half_and_half(Rgb left, Rgb right) {
    Frame f = Frame::filled(4, 2, left);
    for (std::size_t y = 0; y < 2; ++y) {
        for (std::size_t x = 2; x < 4; ++x) f.set(x, y, right);
    }
    return f;
}

Frame random_frame(std::mt19937& rng) {
    std::uniform_int_distribution<std::size_t> dim(1, 24);
    std::uniform_int_distribution<int> byte(0, 255);
    const std::size_t w = dim(rng), h = dim(rng);
    std::vector<std::uint8_t> px(3 * w * h);
    for (auto& p : px) p = static_cast<std::uint8_t>(byte(rng));
    return Frame(w, h, std::move(px));
}

// Records every frame access so tests can assert single-pass reading.
class CountingSource final : public VideoSource {
public:
    explicit CountingSource(std::vector<Frame> frames) : frames_(std::move(frames)) {}
    std::size_t frame_count() const override { return frames_.size(); }
    Frame frame(std::size_t i) const override {
        reads.push_back(i);
        return frames_.at(i);
    }
    mutable std::vector<std::size_t> reads;

private:
    std::vector<Frame> frames_;
};

void check_tiling(const std::vector<SceneBoundary>& scenes, std::size_t frame_count) {
    REQUIRE_FALSE(scenes.empty());
    CHECK(scenes.front().start_frame == 0);
    CHECK(scenes.back().end_frame == frame_count - 1);
    for (std::size_t k = 0; k < scenes.size(); ++k) {
        CHECK(scenes[k].start_frame <= scenes[k].end_frame);
        if (k > 0) CHECK(scenes[k].start_frame == scenes[k - 1].end_frame + 1);
    }
}

}  // namespace

TEST_CASE("frame invariants") {
    CHECK_THROWS_AS(Frame(0, 4, {}), InvalidInputError);
    CHECK_THROWS_AS(Frame(2, 2, std::vector<std::uint8_t>(11)), InvalidInputError);
    const Frame f(2, 1, {1, 2, 3, 4, 5, 6});
    CHECK(f.at(1, 0) == Rgb{4, 5, 6});
}

TEST_CASE("compute_histogram") {
    SUBCASE("single colour puts all mass in one bin") {
        const auto h = compute_histogram(Frame::filled(8, 8, kRed), 8);
        REQUIRE(h.size() == 512);
        const std::size_t red_bin = FrameHistogram::flat_index(8, 7, 0, 0);
        CHECK(h[red_bin] == 1.0);
        CHECK(std::count(h.bins().begin(), h.bins().end(), 0.0) == 511);
    }
    SUBCASE("half red half blue") {
        const auto h = compute_histogram(half_and_half(kRed, kBlue), 8);
        CHECK(h[FrameHistogram::flat_index(8, 7, 0, 0)] == 0.5);
        CHECK(h[FrameHistogram::flat_index(8, 0, 0, 7)] == 0.5);
        CHECK(std::count(h.bins().begin(), h.bins().end(), 0.0) == 510);
    }
    SUBCASE("2x1 frame with B=2, enumerated by hand") {
        // (255,0,0) -> bins (1,0,0) -> flat 1*4+0*2+0 = 4
        // (0,255,0) -> bins (0,1,0) -> flat 0*4+1*2+0 = 2
        const Frame f(2, 1, {255, 0, 0, 0, 255, 0});
        const auto h = compute_histogram(f, 2);
        REQUIRE(h.size() == 8);
        const std::vector<double> expected{0, 0, 0.5, 0, 0.5, 0, 0, 0};
        CHECK(std::vector<double>(h.bins().begin(), h.bins().end()) == expected);
    }
    SUBCASE("binning rule floor(v*B/256)") {
        const Frame f(3, 1, {127, 0, 0, 128, 0, 0, 255, 255, 255});
        const auto h = compute_histogram(f, 2);
        CHECK(h[FrameHistogram::flat_index(2, 0, 0, 0)] == doctest::Approx(1.0 / 3));
        CHECK(h[FrameHistogram::flat_index(2, 1, 0, 0)] == doctest::Approx(1.0 / 3));
        CHECK(h[FrameHistogram::flat_index(2, 1, 1, 1)] == doctest::Approx(1.0 / 3));
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(compute_histogram(Frame{}, 8), InvalidInputError);
        CHECK_THROWS_AS(compute_histogram(Frame::filled(2, 2, kRed), 0), InvalidInputError);
    }
}

TEST_CASE("histograms are L1-normalized on random frames") {
    std::mt19937 rng(7);
    for (int t = 0; t < 100; ++t) {
        const auto h = compute_histogram(random_frame(rng), 8);
        const double sum = std::accumulate(h.bins().begin(), h.bins().end(), 0.0);
        CHECK(std::abs(sum - 1.0) <= 1e-9);
        CHECK(std::all_of(h.bins().begin(), h.bins().end(), [](double v) { return v >= 0; }));
    }
}

TEST_CASE("histogram_distance") {
    const auto red = compute_histogram(Frame::filled(4, 4, kRed));
    const auto blue = compute_histogram(Frame::filled(4, 4, kBlue));
    const auto mixed = compute_histogram(half_and_half(kRed, kBlue));
    CHECK(histogram_distance(red, red) == 0.0);
    CHECK(std::abs(histogram_distance(red, blue) - std::sqrt(2.0)) <= 1e-12);
    CHECK(std::abs(histogram_distance(mixed, red) - std::sqrt(0.5)) <= 1e-12);
    CHECK_THROWS_AS(histogram_distance(red, compute_histogram(Frame::filled(1, 1, kRed), 4)),
                    InvalidInputError);
}

TEST_CASE("histogram distance satisfies the metric axioms on random pairs") {
    std::mt19937 rng(11);
    for (int t = 0; t < 200; ++t) {
        const auto a = compute_histogram(random_frame(rng), 4);
        const auto b = compute_histogram(random_frame(rng), 4);
        const auto c = compute_histogram(random_frame(rng), 4);
        const double ab = histogram_distance(a, b);
        CHECK(ab >= 0.0);
        CHECK(ab == histogram_distance(b, a));
        CHECK(histogram_distance(a, a) == 0.0);
        CHECK((ab == 0.0) == (a == b));
        CHECK(histogram_distance(a, c) <= ab + histogram_distance(b, c) + 1e-12);
    }
}

TEST_CASE("detect_scenes examples") {
    SUBCASE("constant video is one scene") {
        const auto src = solid_video({{kGreen, 50}});
        CHECK(detect_scenes(src, 0.3) == std::vector<SceneBoundary>{{0, 49}});
    }
    SUBCASE("tri-colour video splits at each colour change") {
        const auto src = solid_video({{kRed, 30}, {kGreen, 30}, {kBlue, 30}});
        CHECK(detect_scenes(src, 0.3) == std::vector<SceneBoundary>{{0, 29}, {30, 59}, {60, 89}});
    }
    SUBCASE("threshold above sqrt(2) never cuts") {
        const auto src = solid_video({{kRed, 15}, {kBlue, 15}});
        CHECK(detect_scenes(src, 2.0) == std::vector<SceneBoundary>{{0, 29}});
    }
    SUBCASE("cut requires strictly greater distance") {
        const auto src = solid_video({{kRed, 2}, {kBlue, 2}});
        CHECK(detect_scenes(src, std::sqrt(2.0)).size() == 1);
        CHECK(detect_scenes(src, std::nextafter(std::sqrt(2.0), 0.0)).size() == 2);
    }
    SUBCASE("single frame") {
        CHECK(detect_scenes(solid_video({{kRed, 1}})) == std::vector<SceneBoundary>{{0, 0}});
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(detect_scenes(InMemorySource({})), InvalidInputError);
        CHECK_THROWS_AS(detect_scenes(solid_video({{kRed, 3}}), 0.0), InvalidInputError);
        CHECK_THROWS_AS(detect_scenes(solid_video({{kRed, 3}}), -1.0), InvalidInputError);
    }
}

TEST_CASE("detect_scenes reads each frame once, in order") {
    std::vector<Frame> frames;
    for (int i = 0; i < 40; ++i) frames.push_back(Frame::filled(3, 3, i < 20 ? kRed : kBlue));
    const CountingSource src(frames);
    const auto scenes = detect_scenes(src);
    std::vector<std::size_t> expected(40);
    std::iota(expected.begin(), expected.end(), 0);
    CHECK(src.reads == expected);
    CHECK(scenes.size() == 2);

    SceneDetector det;
    for (const auto& f : frames) det.push(f);
    CHECK(det.histograms_computed() == 40);
    CHECK(det.finish().size() == 2);
}

TEST_CASE("scene properties on random videos") {
    std::mt19937 rng(3);
    std::uniform_int_distribution<int> byte(0, 255);
    std::uniform_int_distribution<int> len(1, 60);
    for (int t = 0; t < 30; ++t) {
        std::vector<Frame> frames;
        const int n = len(rng);
        Rgb c{0, 0, 0};
        for (int i = 0; i < n; ++i) {
            if (i % 7 == 0) {
                c = {static_cast<std::uint8_t>(byte(rng)), static_cast<std::uint8_t>(byte(rng)),
                     static_cast<std::uint8_t>(byte(rng))};
            }
            Frame f = Frame::filled(6, 4, c);
            f.set(static_cast<std::size_t>(i % 6), 0, {static_cast<std::uint8_t>(byte(rng)), 0, 0});
            frames.push_back(std::move(f));
        }
        const InMemorySource src(frames);
        std::size_t previous_count = std::numeric_limits<std::size_t>::max();
        for (double thr : {0.05, 0.1, 0.3, 0.7, 1.0, 1.5}) {
            const auto scenes = detect_scenes(src, thr);
            check_tiling(scenes, frames.size());
            CHECK(scenes.size() <= previous_count);
            previous_count = scenes.size();
            CHECK(scenes == detect_scenes(src, thr));
        }
    }
}

TEST_CASE("ppm codec and frame-directory source") {
    TempDir dir;
    std::mt19937 rng(5);
    std::vector<Frame> frames;
    for (int i = 0; i < 3; ++i) frames.push_back(random_frame(rng));
    write_frame_directory(dir.path() / "frames", frames);

    const FrameDirectorySource src(dir.path() / "frames");
    REQUIRE(src.frame_count() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(src.frame(i) == frames[i]);
        CHECK(src.frame(i) == src.frame(i));
    }
    CHECK(src.files()[0].filename() == "000000.ppm");

    SUBCASE("header comments are accepted") {
        const std::string text = "P6\n# made by hand\n2 1\n255\n";
        std::vector<std::uint8_t> bytes(text.begin(), text.end());
        for (std::uint8_t b : {1, 2, 3, 4, 5, 6}) bytes.push_back(b);
        CHECK(decode_ppm(bytes) == Frame(2, 1, {1, 2, 3, 4, 5, 6}));
    }
    SUBCASE("malformed files") {
        const std::string p3 = "P3\n1 1\n255\n0 0 0\n";
        CHECK_THROWS_AS(decode_ppm({reinterpret_cast<const std::uint8_t*>(p3.data()), p3.size()}), ParseError);
        const std::string truncated = "P6\n4 4\n255\nabc";
        CHECK_THROWS_AS(
            decode_ppm({reinterpret_cast<const std::uint8_t*>(truncated.data()), truncated.size()}),
            ParseError);
        const std::string deep = "P6\n1 1\n65535\n000000";
        CHECK_THROWS_AS(decode_ppm({reinterpret_cast<const std::uint8_t*>(deep.data()), deep.size()}),
                        ParseError);
    }
    SUBCASE("lexicographic filename order") {
        TempDir d2;
        write_ppm(d2.path() / "b.ppm", Frame::filled(1, 1, kBlue));
        write_ppm(d2.path() / "a.ppm", Frame::filled(1, 1, kRed));
        std::ofstream(d2.path() / "notes.txt") << "ignored";
        const FrameDirectorySource s(d2.path());
        REQUIRE(s.frame_count() == 2);
        CHECK(s.frame(0) == Frame::filled(1, 1, kRed));
    }
    CHECK_THROWS_AS(FrameDirectorySource(dir.path() / "missing"), InvalidInputError);
}

TEST_CASE("subrange source") {
    const auto src = solid_video({{kRed, 5}, {kBlue, 5}});
    const SubrangeSource sub(src, 5, 5);
    CHECK(sub.frame_count() == 5);
    CHECK(sub.frame(0) == Frame::filled(8, 6, kBlue));
    CHECK_THROWS_AS(SubrangeSource(src, 6, 5), InvalidInputError);
}

TEST_CASE("boundary JSON") {
    const std::vector<SceneBoundary> scenes{{0, 29}, {30, 59}};
    const auto j = boundaries_to_json(scenes);
    CHECK(j.dump() == R"([{"end_frame":29,"start_frame":0},{"end_frame":59,"start_frame":30}])");
    CHECK(boundaries_from_json(j) == scenes);
    CHECK_THROWS_AS(boundaries_from_json(nlohmann::json::parse(R"([{"start_frame":1,"end_frame":3}])")),
                    ParseError);
    CHECK_THROWS_AS(boundaries_from_json(nlohmann::json::object()), ParseError);
}

#ifdef VIDSEARCH_HAVE_OPENCV
TEST_CASE("decoded video source") {
    TempDir dir;
    const auto path = dir.path() / "tri.avi";
    cv::VideoWriter writer(path.string(), cv::VideoWriter::fourcc('M', 'J', 'P', 'G'), 30.0, cv::Size(32, 24));
    if (!writer.isOpened()) {
        MESSAGE("no MJPG writer available; skipping decoded-source check");
        return;
    }
    for (const cv::Scalar bgr : {cv::Scalar(0, 0, 255), cv::Scalar(0, 255, 0), cv::Scalar(255, 0, 0)}) {
        for (int i = 0; i < 10; ++i) writer.write(cv::Mat(24, 32, CV_8UC3, bgr));
    }
    writer.release();
    const auto src = open_decoded_video(path);
    REQUIRE(src->frame_count() == 30);
    const auto first = src->frame(0);
    CHECK(first.width() == 32);
    CHECK(first.at(0, 0).r > 200);
    CHECK(detect_scenes(*src) == std::vector<SceneBoundary>{{0, 9}, {10, 19}, {20, 29}});
}
#endif
