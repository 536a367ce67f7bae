#include "vdblur/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <random>

#include "vdblur/image_io.hpp"

namespace vdblur {

namespace fs = std::filesystem;

LumaClip to_ycbcr_planes(const VideoClip& clip) {
    LumaClip out;
    out.y.resize(clip.frames.size());
    out.cb.resize(clip.frames.size());
    out.cr.resize(clip.frames.size());
#pragma omp parallel for schedule(static)
    for (int i = 0; i < clip.frame_count(); ++i) {
        YCbCrPlanes p = rgb_to_ycbcr(clip.frames[i]);
        out.y[i] = std::move(p.y);
        out.cb[i] = std::move(p.cb);
        out.cr[i] = std::move(p.cr);
    }
    return out;
}

FrameWindow make_window(const LumaClip& clip, int index, int T) {
    if (T < 1 || T % 2 == 0)
        throw ConfigError("window T must be odd and >= 1, got " + std::to_string(T));
    const int n = clip.frame_count();
    if (n == 0) throw DataError("cannot window an empty clip");
    if (index < 0 || index >= n)
        throw DataError("window index " + std::to_string(index) + " outside clip of " +
                        std::to_string(n) + " frames");
    FrameWindow w;
    w.center_index = (T - 1) / 2;
    w.luma.reserve(T);
    for (int k = -(T - 1) / 2; k <= (T - 1) / 2; ++k)
        w.luma.push_back(clip.y[std::clamp(index + k, 0, n - 1)]);
    w.chroma_cb = clip.cb[index];
    w.chroma_cr = clip.cr[index];
    return w;
}

std::vector<FrameWindow> make_windows(const VideoClip& clip, int T) {
    if (clip.frames.empty()) throw DataError("cannot window an empty clip");
    const LumaClip planes = to_ycbcr_planes(clip);
    std::vector<FrameWindow> windows;
    windows.reserve(clip.frames.size());
    for (int i = 0; i < clip.frame_count(); ++i) windows.push_back(make_window(planes, i, T));
    return windows;
}

VideoClip synthetic_blur(const VideoClip& sharp, int n) {
    if (n < 1 || n % 2 == 0)
        throw ConfigError("blur width must be odd and >= 1, got " + std::to_string(n));
    if (sharp.frames.empty()) throw DataError("cannot blur an empty clip");
    if (n > sharp.frame_count())
        throw ConfigError("blur width " + std::to_string(n) + " exceeds clip length " +
                          std::to_string(sharp.frame_count()));
    VideoClip out;
    out.source = sharp.source;
    out.fps = sharp.fps;
    out.frames.resize(sharp.frames.size());
    const int half = (n - 1) / 2;
    const int count = sharp.frame_count();
#pragma omp parallel for schedule(static)
    for (int t = 0; t < count; ++t) {
        Image frame(sharp.height(), sharp.width());
        const std::size_t bytes = frame.rgb.size();
        for (std::size_t i = 0; i < bytes; ++i) {
            unsigned sum = 0;
            for (int k = -half; k <= half; ++k)
                sum += sharp.frames[std::clamp(t + k, 0, count - 1)].rgb[i];
            frame.rgb[i] = static_cast<std::uint8_t>((sum + n / 2) / n);
        }
        out.frames[t] = std::move(frame);
    }
    return out;
}

std::string layout_name(DatasetLayout layout) {
    switch (layout) {
        case DatasetLayout::GenericPairs: return "generic_pairs";
        case DatasetLayout::VideoDeblurringQuant: return "videodeblurring_quant";
        case DatasetLayout::VideoDeblurringQual: return "videodeblurring_qual";
        case DatasetLayout::BlurredKitti: return "blurred_kitti";
    }
    return "generic_pairs";
}

DatasetLayout layout_from_name(const std::string& name) {
    if (name == "generic_pairs") return DatasetLayout::GenericPairs;
    if (name == "videodeblurring_quant") return DatasetLayout::VideoDeblurringQuant;
    if (name == "videodeblurring_qual") return DatasetLayout::VideoDeblurringQual;
    if (name == "blurred_kitti") return DatasetLayout::BlurredKitti;
    throw ConfigError("unknown dataset layout '" + name +
                      "' (expected generic_pairs, videodeblurring_quant, videodeblurring_qual or "
                      "blurred_kitti)");
}

namespace {

bool numeric_stem(const std::string& s, long& value) {
    if (s.empty()) return false;
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (end == nullptr || *end != '\0') return false;
    value = v;
    return true;
}

std::vector<fs::path> list_png_files(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        if (e.path().extension() == ".png") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
        long va = 0, vb = 0;
        const bool na = numeric_stem(a.stem().string(), va);
        const bool nb = numeric_stem(b.stem().string(), vb);
        if (na && nb) return va < vb;
        return a.filename().string() < b.filename().string();
    });
    return files;
}

std::vector<fs::path> list_subdirs(const fs::path& dir) {
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory()) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

// Decoded-frame cache keyed by the clip directory and file mtimes.
fs::path cache_path_for(const fs::path& dir) {
    const char* root = std::getenv("VDBLUR_CACHE");
    if (root == nullptr || *root == '\0') return {};
    std::uint64_t hash = 1469598103934665603ull;
    for (char ch : fs::absolute(dir).string()) {
        hash ^= static_cast<unsigned char>(ch);
        hash *= 1099511628211ull;
    }
    char name[32];
    std::snprintf(name, sizeof(name), "%016llx.clip", static_cast<unsigned long long>(hash));
    return fs::path(root) / name;
}

std::uint64_t dir_signature(const std::vector<fs::path>& files) {
    std::uint64_t hash = 1469598103934665603ull;
    auto mix = [&hash](std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            hash ^= (v >> (8 * i)) & 0xff;
            hash *= 1099511628211ull;
        }
    };
    for (const auto& f : files) {
        for (char ch : f.filename().string()) {
            hash ^= static_cast<unsigned char>(ch);
            hash *= 1099511628211ull;
        }
        mix(static_cast<std::uint64_t>(
            fs::last_write_time(f).time_since_epoch().count()));
        mix(static_cast<std::uint64_t>(fs::file_size(f)));
    }
    return hash;
}

constexpr char kCacheMagic[8] = {'V', 'D', 'C', 'A', 'C', 'H', 'E', '1'};

bool try_read_cache(const fs::path& cache, std::uint64_t signature, VideoClip& clip) {
    std::ifstream in(cache, std::ios::binary);
    if (!in) return false;
    char magic[8];
    std::uint64_t sig = 0;
    std::uint32_t count = 0, h = 0, w = 0;
    in.read(magic, 8);
    in.read(reinterpret_cast<char*>(&sig), 8);
    in.read(reinterpret_cast<char*>(&count), 4);
    in.read(reinterpret_cast<char*>(&h), 4);
    in.read(reinterpret_cast<char*>(&w), 4);
    if (!in || std::memcmp(magic, kCacheMagic, 8) != 0 || sig != signature) return false;
    clip.frames.assign(count, Image());
    for (auto& f : clip.frames) {
        f = Image(static_cast<int>(h), static_cast<int>(w));
        in.read(reinterpret_cast<char*>(f.rgb.data()), static_cast<std::streamsize>(f.rgb.size()));
    }
    return static_cast<bool>(in);
}

void write_cache(const fs::path& cache, std::uint64_t signature, const VideoClip& clip) {
    std::error_code ec;
    fs::create_directories(cache.parent_path(), ec);
    const fs::path tmp = cache.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) return;  // cache is best effort
        const std::uint64_t sig = signature;
        const std::uint32_t count = static_cast<std::uint32_t>(clip.frames.size());
        const std::uint32_t h = static_cast<std::uint32_t>(clip.height());
        const std::uint32_t w = static_cast<std::uint32_t>(clip.width());
        out.write(kCacheMagic, 8);
        out.write(reinterpret_cast<const char*>(&sig), 8);
        out.write(reinterpret_cast<const char*>(&count), 4);
        out.write(reinterpret_cast<const char*>(&h), 4);
        out.write(reinterpret_cast<const char*>(&w), 4);
        for (const auto& f : clip.frames)
            out.write(reinterpret_cast<const char*>(f.rgb.data()),
                      static_cast<std::streamsize>(f.rgb.size()));
    }
    fs::rename(tmp, cache, ec);
}

}  // namespace

VideoClip load_clip_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
    const auto files = list_png_files(dir);
    if (files.empty()) throw DataError("no .png frames in " + dir.string());

    VideoClip clip;
    clip.source = dir.string();

    const fs::path cache = cache_path_for(dir);
    std::uint64_t signature = 0;
    if (!cache.empty()) {
        signature = dir_signature(files);
        if (try_read_cache(cache, signature, clip) && !clip.frames.empty()) return clip;
        clip.frames.clear();
    }

    clip.frames.resize(files.size());
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < static_cast<int>(files.size()); ++i) clip.frames[i] = read_png(files[i]);

    for (const auto& f : clip.frames)
        if (f.h != clip.height() || f.w != clip.width())
            throw DataError("frames in " + dir.string() + " have mixed sizes");

    if (!cache.empty()) write_cache(cache, signature, clip);
    return clip;
}

void write_clip_dir(const fs::path& dir, const VideoClip& clip) {
    fs::create_directories(dir);
    for (int i = 0; i < clip.frame_count(); ++i) {
        char name[16];
        std::snprintf(name, sizeof(name), "%05d.png", i);
        write_png(dir / name, clip.frames[i]);
    }
}

std::vector<ClipPair> load_dataset(const fs::path& root, DatasetLayout layout) {
    if (!fs::is_directory(root)) throw DataError("dataset root does not exist: " + root.string());
    std::vector<ClipPair> pairs;

    switch (layout) {
        case DatasetLayout::GenericPairs: {
            const fs::path blurry = root / "blurry", sharp = root / "sharp";
            if (!fs::is_directory(blurry) || !fs::is_directory(sharp))
                throw DataError("generic_pairs expects " + root.string() +
                                "/{blurry,sharp}/<clip>/<NNNNN>.png");
            for (const auto& dir : list_subdirs(blurry)) {
                const fs::path twin = sharp / dir.filename();
                if (!fs::is_directory(twin))
                    throw DataError("clip '" + dir.filename().string() +
                                    "' has no sharp twin; expected " + twin.string());
                ClipPair p;
                p.id = dir.filename().string();
                p.blurry = load_clip_dir(dir);
                p.sharp = load_clip_dir(twin);
                if (p.sharp->frame_count() != p.blurry.frame_count())
                    throw DataError("clip '" + p.id + "': blurry has " +
                                    std::to_string(p.blurry.frame_count()) + " frames, sharp has " +
                                    std::to_string(p.sharp->frame_count()));
                pairs.push_back(std::move(p));
            }
            break;
        }
        case DatasetLayout::VideoDeblurringQuant: {
            for (const auto& dir : list_subdirs(root)) {
                const fs::path input = dir / "input", gt = dir / "GT";
                if (!fs::is_directory(input) || !fs::is_directory(gt))
                    throw DataError("videodeblurring_quant expects " + root.string() +
                                    "/<video>/{input,GT}/<NNNNN>.png; offending entry: " +
                                    dir.string());
                ClipPair p;
                p.id = dir.filename().string();
                p.blurry = load_clip_dir(input);
                p.sharp = load_clip_dir(gt);
                pairs.push_back(std::move(p));
            }
            break;
        }
        case DatasetLayout::VideoDeblurringQual: {
            for (const auto& dir : list_subdirs(root)) {
                const fs::path input = dir / "input";
                if (!fs::is_directory(input))
                    throw DataError("videodeblurring_qual expects " + root.string() +
                                    "/<scene>/input/<NNNNN>.png; offending entry: " + dir.string());
                ClipPair p;
                p.id = dir.filename().string();
                p.blurry = load_clip_dir(input);
                pairs.push_back(std::move(p));
            }
            break;
        }
        case DatasetLayout::BlurredKitti: {
            for (const auto& scene : list_subdirs(root)) {
                for (const char* cam : {"left", "right"}) {
                    const fs::path blurry = scene / cam / "blurry";
                    const fs::path sharp = scene / cam / "sharp";
                    if (!fs::is_directory(blurry) || !fs::is_directory(sharp))
                        throw DataError("blurred_kitti expects " + root.string() +
                                        "/<scene>/{left,right}/{blurry,sharp}/<NNN>.png; missing " +
                                        (scene / cam).string());
                    ClipPair p;
                    p.id = scene.filename().string() + "/" + cam;
                    p.blurry = load_clip_dir(blurry);
                    p.sharp = load_clip_dir(sharp);
                    if (p.blurry.frame_count() != 3 || p.sharp->frame_count() != 3)
                        throw DataError("blurred_kitti group '" + p.id + "' must hold 3 frames "
                                        "per camera, found " +
                                        std::to_string(p.blurry.frame_count()) + "/" +
                                        std::to_string(p.sharp->frame_count()));
                    pairs.push_back(std::move(p));
                }
            }
            break;
        }
    }
    if (pairs.empty()) throw DataError("no clips found under " + root.string());
    return pairs;
}

VideoClip make_synthetic_clip(int frames, int height, int width, std::uint64_t seed) {
    if (frames < 1 || height < 8 || width < 8)
        throw ConfigError("synthetic clip needs frames >= 1 and size >= 8x8");
    std::mt19937 rng(static_cast<std::uint32_t>(seed));
    auto unif = [&rng](double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(rng()) / 4294967296.0);
    };

    // Drifting band-limited texture: a handful of cosine waves sharing a
    // global velocity, plus moving blobs for local structure.
    struct Wave {
        double fu, fv, phase, amp;
    };
    const int n_waves = 6;
    std::vector<Wave> waves(n_waves);
    for (auto& wv : waves) {
        wv.fu = std::floor(unif(1.0, 5.0));
        wv.fv = std::floor(unif(1.0, 5.0));
        wv.phase = unif(0.0, 6.28318530717958648);
        wv.amp = unif(0.3, 1.0);
    }
    struct Blob {
        double cx, cy, vx, vy, sigma, amp;
    };
    const int n_blobs = 3;
    std::vector<Blob> blobs(n_blobs);
    for (auto& b : blobs) {
        b.cx = unif(0.1, 0.9) * width;
        b.cy = unif(0.1, 0.9) * height;
        b.vx = unif(-2.0, 2.0);
        b.vy = unif(-2.0, 2.0);
        b.sigma = unif(0.06, 0.16) * std::min(height, width);
        b.amp = unif(0.8, 1.6) * (rng() % 2 == 0 ? 1.0 : -1.0);
    }
    const double vel_x = unif(-2.5, 2.5);
    const double vel_y = unif(-2.5, 2.5);
    double mix[3][2];
    for (auto& row : mix) {
        row[0] = unif(0.25, 0.75);
        row[1] = unif(0.10, 0.45);
    }

    VideoClip clip;
    clip.source = "synthetic:" + std::to_string(seed);
    clip.frames.reserve(frames);
    for (int t = 0; t < frames; ++t) {
        Image img(height, width);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const double sx = x + t * vel_x;
                const double sy = y + t * vel_y;
                double field = 0.0;
                for (const auto& wv : waves)
                    field += wv.amp * std::cos(6.28318530717958648 *
                                                   (wv.fu * sx / width + wv.fv * sy / height) +
                                               wv.phase);
                double blob = 0.0;
                for (const auto& b : blobs) {
                    const double dx = x - (b.cx + t * b.vx);
                    const double dy = y - (b.cy + t * b.vy);
                    blob += b.amp * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
                }
                for (int ch = 0; ch < 3; ++ch) {
                    const double v =
                        0.5 + mix[ch][1] * std::tanh(0.8 * field + (ch == 1 ? 1.2 : 1.0) * blob) +
                        (mix[ch][0] - 0.5) * 0.3;
                    img.at(y, x, ch) =
                        static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
                }
            }
        }
        clip.frames.push_back(std::move(img));
    }
    return clip;
}

void build_synthetic_dataset(const fs::path& root, const SyntheticConfig& cfg) {
    if (cfg.clips < 1) throw ConfigError("need at least one synthetic clip");
    for (int i = 0; i < cfg.clips; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "clip%03d", i);
        const VideoClip sharp =
            make_synthetic_clip(cfg.frames, cfg.height, cfg.width, cfg.seed * 1000003ull + i);
        const VideoClip blurry = synthetic_blur(sharp, cfg.blur_n);
        write_clip_dir(root / "sharp" / name, sharp);
        write_clip_dir(root / "blurry" / name, blurry);
    }
}

}  // namespace vdblur
