#ifndef VDBLUR_EVALUATION_HPP
#define VDBLUR_EVALUATION_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vdblur/data.hpp"
#include "vdblur/network.hpp"

namespace vdblur {

// Peak signal-to-noise ratio over all RGB channels, in dB. Identical frames
// return the cap value (100 dB) so averages stay finite.
inline constexpr double kPsnrCapDb = 100.0;
double psnr(const Image& a, const Image& b, double max_val = 255.0);

struct EvalRow {
    std::string video_id;
    double psnr_db = 0.0;
};

// Per-video and average PSNR for one method.
struct EvalReport {
    std::string method;
    std::vector<EvalRow> per_video;
    double average = 0.0;
    std::string checkpoint_id;
    std::string dataset;
    std::string timestamp;  // kept in memory; file outputs stay deterministic

    double recompute_average() const;
    // (left, right) camera averages when video ids end in /left, /right.
    std::optional<std::pair<double, double>> left_right_averages() const;
};

struct EvalTable {
    std::vector<EvalReport> methods;
};

// What evaluate() runs per window: a model checkpoint, or the identity
// (output := center input luma) used as a debugging baseline.
struct EvalModel {
    const NetworkSpec* spec = nullptr;
    const ModelParameters<float>* params = nullptr;
    std::string label = "identity";
    std::string checkpoint_id;

    bool is_identity() const { return spec == nullptr || params == nullptr; }
};

// Scores every paired clip: per-video PSNR is the mean over frames of the
// full-frame RGB PSNR after chroma recombination. The first report is the
// INPUT baseline (blurry vs sharp).
EvalTable evaluate(const EvalModel& model, const std::vector<ClipPair>& dataset,
                   const std::string& dataset_label = "");

void write_report_csv(const std::filesystem::path& path, const EvalTable& table);
void write_report_table(const std::filesystem::path& path, const EvalTable& table);
std::string format_report_table(const EvalTable& table);

// Restores every frame of a clip with the model (or identity passthrough).
VideoClip deblur_clip(const EvalModel& model, const VideoClip& blurry, int window_T);

// Per-frame (input, output, ground-truth) strips for qualitative inspection.
void dump_triptychs(const std::filesystem::path& dir, const VideoClip& input,
                    const VideoClip& output, const VideoClip* ground_truth);

}  // namespace vdblur

#endif
