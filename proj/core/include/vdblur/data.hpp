#ifndef VDBLUR_DATA_HPP
#define VDBLUR_DATA_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vdblur/color.hpp"
#include "vdblur/image.hpp"

namespace vdblur {

// Ordered frames of one video, 8-bit RGB. Frame order follows the numeric
// sort of the source filenames.
struct VideoClip {
    std::vector<Image> frames;
    std::string source;
    double fps = 0.0;  // optional metadata

    int frame_count() const { return static_cast<int>(frames.size()); }
    int height() const { return frames.empty() ? 0 : frames.front().h; }
    int width() const { return frames.empty() ? 0 : frames.front().w; }
};

// A clip converted to YCbCr planes once, shared by the window assemblers.
struct LumaClip {
    std::vector<Plane<float>> y, cb, cr;
    int frame_count() const { return static_cast<int>(y.size()); }
    int height() const { return y.empty() ? 0 : y.front().h; }
    int width() const { return y.empty() ? 0 : y.front().w; }
};

LumaClip to_ycbcr_planes(const VideoClip& clip);

// Window centered on frame `index` with edge replication at clip boundaries.
FrameWindow make_window(const LumaClip& clip, int index, int T);

// One window per frame; list length equals the clip length.
std::vector<FrameWindow> make_windows(const VideoClip& clip, int T);

// Temporal mean over n frames with edge replication; simulates motion blur
// from camera shake. Per-pixel sums are integer-exact, rounded half up.
VideoClip synthetic_blur(const VideoClip& sharp, int n);

// Blurry window plus the sharp center luma it should restore.
struct SamplePair {
    FrameWindow window;
    Plane<float> target;
};

enum class DatasetLayout { GenericPairs, VideoDeblurringQuant, VideoDeblurringQual, BlurredKitti };

std::string layout_name(DatasetLayout layout);
DatasetLayout layout_from_name(const std::string& name);

struct ClipPair {
    std::string id;
    VideoClip blurry;
    std::optional<VideoClip> sharp;
};

// Directory adapters. Expected structures:
//   generic_pairs:          root/{blurry,sharp}/<clip>/<NNNNN>.png
//   videodeblurring_quant:  root/<video>/{input,GT}/<NNNNN>.png
//   videodeblurring_qual:   root/<scene>/input/<NNNNN>.png
//   blurred_kitti:          root/<scene>/{left,right}/{blurry,sharp}/<NNN>.png
//                           (3 frames per camera)
// Set VDBLUR_CACHE to a directory to cache decoded frames between runs.
std::vector<ClipPair> load_dataset(const std::filesystem::path& root, DatasetLayout layout);

// Loads one directory of PNG frames in numeric filename order.
VideoClip load_clip_dir(const std::filesystem::path& dir);

void write_clip_dir(const std::filesystem::path& dir, const VideoClip& clip);

// Procedural sharp clip for the desk-scale harness: drifting band-limited
// texture plus moving blobs, deterministic per seed.
VideoClip make_synthetic_clip(int frames, int height, int width, std::uint64_t seed);

struct SyntheticConfig {
    int clips = 6;
    int frames = 24;
    int height = 48;
    int width = 64;
    int blur_n = 5;
    std::uint64_t seed = 0;
};

// Emits the generic_pairs layout: sharp procedural clips and their
// temporally blurred counterparts.
void build_synthetic_dataset(const std::filesystem::path& root, const SyntheticConfig& cfg);

}  // namespace vdblur

#endif
