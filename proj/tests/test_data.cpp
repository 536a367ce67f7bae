#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <random>

#include "vdblur/data.hpp"
#include "vdblur/image_io.hpp"

using namespace vdblur;
namespace fs = std::filesystem;

namespace {

Image random_image(int h, int w, unsigned seed) {
    Image img(h, w);
    std::mt19937 rng(seed);
    for (auto& b : img.rgb) b = static_cast<std::uint8_t>(rng() % 256);
    return img;
}

VideoClip random_clip(int frames, int h, int w, unsigned seed) {
    VideoClip clip;
    for (int i = 0; i < frames; ++i) clip.frames.push_back(random_image(h, w, seed + i));
    return clip;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("vdblur_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("BT.601 conversion endpoints") {
    Image img(1, 3);
    // gray, black, white
    img.at(0, 0, 0) = img.at(0, 0, 1) = img.at(0, 0, 2) = 128;
    img.at(0, 1, 0) = img.at(0, 1, 1) = img.at(0, 1, 2) = 0;
    img.at(0, 2, 0) = img.at(0, 2, 1) = img.at(0, 2, 2) = 255;

    const YCbCrPlanes p = rgb_to_ycbcr(img);
    CHECK(p.y.at(0, 0) == doctest::Approx(0.502).epsilon(1e-3));
    CHECK(p.cb.at(0, 0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(p.cr.at(0, 0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(p.y.at(0, 1) == doctest::Approx(0.0));
    CHECK(p.cb.at(0, 1) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(p.y.at(0, 2) == doctest::Approx(1.0));
    CHECK(p.cr.at(0, 2) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("10^4 random pixels roundtrip within 1/255") {
    const Image img = random_image(100, 100, 77);
    const YCbCrPlanes p = rgb_to_ycbcr(img);
    const Image back = ycbcr_to_rgb(p.y, p.cb, p.cr);
    for (std::size_t i = 0; i < img.rgb.size(); ++i)
        REQUIRE(std::abs(int(img.rgb[i]) - int(back.rgb[i])) <= 1);
}

TEST_CASE("make_windows replicates edges and keeps the center") {
    const VideoClip clip = random_clip(10, 12, 12, 5);
    const auto windows = make_windows(clip, 5);
    REQUIRE(windows.size() == 10);

    const LumaClip planes = to_ycbcr_planes(clip);
    // window 0 = [f0, f0, f0, f1, f2]
    CHECK(windows[0].luma[0].v == planes.y[0].v);
    CHECK(windows[0].luma[1].v == planes.y[0].v);
    CHECK(windows[0].luma[2].v == planes.y[0].v);
    CHECK(windows[0].luma[3].v == planes.y[1].v);
    CHECK(windows[0].luma[4].v == planes.y[2].v);
    // interior window 5 = [f3..f7]
    for (int k = 0; k < 5; ++k) CHECK(windows[5].luma[k].v == planes.y[3 + k].v);
    // center luma equals the converted frame for all i
    for (int i = 0; i < 10; ++i) CHECK(windows[i].center_luma().v == planes.y[i].v);

    SUBCASE("T=1 windows are the frames themselves") {
        const auto singles = make_windows(clip, 1);
        for (int i = 0; i < 10; ++i) {
            CHECK(singles[i].T() == 1);
            CHECK(singles[i].center_luma().v == planes.y[i].v);
        }
    }
    SUBCASE("even T and empty clips are rejected") {
        CHECK_THROWS_AS(make_windows(clip, 4), ConfigError);
        VideoClip empty;
        CHECK_THROWS_AS(make_windows(empty, 3), DataError);
    }
}

TEST_CASE("synthetic blur") {
    SUBCASE("n=1 is the identity") {
        const VideoClip clip = random_clip(4, 8, 8, 11);
        const VideoClip out = synthetic_blur(clip, 1);
        for (int i = 0; i < 4; ++i) CHECK(out.frames[i].rgb == clip.frames[i].rgb);
    }
    SUBCASE("constant clips are unchanged") {
        VideoClip clip;
        for (int i = 0; i < 6; ++i) {
            Image f(4, 4);
            std::fill(f.rgb.begin(), f.rgb.end(), 93);
            clip.frames.push_back(std::move(f));
        }
        const VideoClip out = synthetic_blur(clip, 3);
        for (const auto& f : out.frames)
            for (auto b : f.rgb) CHECK(b == 93);
    }
    SUBCASE("three-frame mean hits the arithmetic average") {
        // values 0, 0.3, 0.9 of full scale -> mean 0.4
        VideoClip clip;
        for (double v : {0.0, 0.3, 0.9}) {
            Image f(4, 4);
            std::fill(f.rgb.begin(), f.rgb.end(),
                      static_cast<std::uint8_t>(std::lround(v * 255.0)));
            clip.frames.push_back(std::move(f));
        }
        const VideoClip out = synthetic_blur(clip, 3);
        for (auto b : out.frames[1].rgb) CHECK(int(b) == int(std::lround(0.4 * 255.0)));
    }
    SUBCASE("matches a flat-loop mean and preserves mean intensity") {
        const VideoClip clip = random_clip(9, 6, 6, 13);
        const int n = 5, half = 2;
        const VideoClip out = synthetic_blur(clip, n);
        for (int t = 0; t < 9; ++t) {
            double got_mean = 0.0, want_mean = 0.0;
            for (std::size_t i = 0; i < out.frames[t].rgb.size(); ++i) {
                unsigned sum = 0;
                for (int k = -half; k <= half; ++k)
                    sum += clip.frames[std::clamp(t + k, 0, 8)].rgb[i];
                const auto want = static_cast<std::uint8_t>((sum + n / 2) / n);
                REQUIRE(out.frames[t].rgb[i] == want);
                got_mean += out.frames[t].rgb[i];
                want_mean += want;
            }
            CHECK(std::abs(got_mean - want_mean) / out.frames[t].rgb.size() < 1e-6);
        }
    }
    SUBCASE("even widths are rejected") {
        const VideoClip clip = random_clip(4, 4, 4, 17);
        CHECK_THROWS_AS(synthetic_blur(clip, 2), ConfigError);
    }
}

TEST_CASE("png roundtrip") {
    TempDir tmp;
    const Image img = random_image(17, 23, 19);
    write_png(tmp.path / "a.png", img);
    const Image back = read_png(tmp.path / "a.png");
    REQUIRE(back.same_shape(img));
    CHECK(back.rgb == img.rgb);
}

TEST_CASE("clip directories load in numeric filename order") {
    TempDir tmp;
    VideoClip clip = random_clip(12, 6, 6, 23);
    write_clip_dir(tmp.path / "c", clip);
    const VideoClip back = load_clip_dir(tmp.path / "c");
    REQUIRE(back.frame_count() == 12);
    for (int i = 0; i < 12; ++i) CHECK(back.frames[i].rgb == clip.frames[i].rgb);

    SUBCASE("numeric sort beats lexicographic") {
        fs::rename(tmp.path / "c" / "00002.png", tmp.path / "c" / "100.png");
        const VideoClip mixed = load_clip_dir(tmp.path / "c");
        // frame "100" now sorts last
        CHECK(mixed.frames[11].rgb == clip.frames[2].rgb);
        CHECK(mixed.frames[2].rgb == clip.frames[3].rgb);
    }
}

TEST_CASE("generic_pairs layout") {
    TempDir tmp;
    SyntheticConfig cfg;
    cfg.clips = 2;
    cfg.frames = 8;
    cfg.height = 16;
    cfg.width = 20;
    cfg.blur_n = 3;
    cfg.seed = 9;
    build_synthetic_dataset(tmp.path, cfg);

    const auto pairs = load_dataset(tmp.path, DatasetLayout::GenericPairs);
    REQUIRE(pairs.size() == 2);
    for (const auto& p : pairs) {
        CHECK(p.sharp.has_value());
        CHECK(p.blurry.frame_count() == 8);
        CHECK(p.sharp->frame_count() == 8);
        CHECK(p.blurry.height() == 16);
    }

    SUBCASE("missing sharp twin raises a descriptive error") {
        fs::remove_all(tmp.path / "sharp" / "clip001");
        CHECK_THROWS_WITH_AS(load_dataset(tmp.path, DatasetLayout::GenericPairs),
                             doctest::Contains("sharp"), DataError);
    }
}

TEST_CASE("videodeblurring layouts") {
    TempDir tmp;
    const VideoClip clip = random_clip(4, 8, 8, 31);

    SUBCASE("quantitative pairs input with GT") {
        write_clip_dir(tmp.path / "vid1" / "input", clip);
        write_clip_dir(tmp.path / "vid1" / "GT", clip);
        const auto pairs = load_dataset(tmp.path, DatasetLayout::VideoDeblurringQuant);
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0].sharp.has_value());
    }
    SUBCASE("qualitative subset has no ground truth") {
        write_clip_dir(tmp.path / "scene1" / "input", clip);
        const auto pairs = load_dataset(tmp.path, DatasetLayout::VideoDeblurringQual);
        REQUIRE(pairs.size() == 1);
        CHECK_FALSE(pairs[0].sharp.has_value());
    }
    SUBCASE("quantitative without GT errors with the expected structure") {
        write_clip_dir(tmp.path / "vid1" / "input", clip);
        CHECK_THROWS_WITH_AS(load_dataset(tmp.path, DatasetLayout::VideoDeblurringQuant),
                             doctest::Contains("{input,GT}"), DataError);
    }
}

TEST_CASE("blurred kitti layout yields left/right groups of three") {
    TempDir tmp;
    const VideoClip three = random_clip(3, 8, 8, 37);
    for (const char* scene : {"000", "001"}) {
        for (const char* cam : {"left", "right"}) {
            write_clip_dir(tmp.path / scene / cam / "blurry", three);
            write_clip_dir(tmp.path / scene / cam / "sharp", three);
        }
    }
    const auto pairs = load_dataset(tmp.path, DatasetLayout::BlurredKitti);
    REQUIRE(pairs.size() == 4);
    CHECK(pairs[0].id == "000/left");
    CHECK(pairs[1].id == "000/right");
    for (const auto& p : pairs) {
        CHECK(p.blurry.frame_count() == 3);
        CHECK(p.sharp.has_value());
    }

    SUBCASE("wrong group size is rejected") {
        write_clip_dir(tmp.path / "002" / "left" / "blurry", random_clip(4, 8, 8, 41));
        write_clip_dir(tmp.path / "002" / "left" / "sharp", random_clip(4, 8, 8, 41));
        write_clip_dir(tmp.path / "002" / "right" / "blurry", three);
        write_clip_dir(tmp.path / "002" / "right" / "sharp", three);
        CHECK_THROWS_WITH_AS(load_dataset(tmp.path, DatasetLayout::BlurredKitti),
                             doctest::Contains("3 frames"), DataError);
    }
}

TEST_CASE("decoded-frame cache honors VDBLUR_CACHE") {
    TempDir tmp, cache;
    const VideoClip clip = random_clip(5, 6, 6, 43);
    write_clip_dir(tmp.path / "c", clip);

    setenv("VDBLUR_CACHE", cache.path.string().c_str(), 1);
    const VideoClip first = load_clip_dir(tmp.path / "c");
    bool have_cache_file = false;
    for (const auto& e : fs::directory_iterator(cache.path)) have_cache_file |= e.is_regular_file();
    CHECK(have_cache_file);
    const VideoClip second = load_clip_dir(tmp.path / "c");
    unsetenv("VDBLUR_CACHE");

    REQUIRE(second.frame_count() == 5);
    for (int i = 0; i < 5; ++i) CHECK(second.frames[i].rgb == first.frames[i].rgb);
}

TEST_CASE("synthetic clips are deterministic per seed and move over time") {
    const VideoClip a = make_synthetic_clip(6, 24, 24, 99);
    const VideoClip b = make_synthetic_clip(6, 24, 24, 99);
    for (int i = 0; i < 6; ++i) CHECK(a.frames[i].rgb == b.frames[i].rgb);

    const VideoClip c = make_synthetic_clip(6, 24, 24, 100);
    CHECK(a.frames[0].rgb != c.frames[0].rgb);
    // temporal motion: consecutive frames differ
    CHECK(a.frames[0].rgb != a.frames[1].rgb);
}
