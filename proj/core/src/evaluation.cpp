#include "vdblur/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vdblur/generator.hpp"
#include "vdblur/image_io.hpp"

namespace vdblur {

namespace {

std::string now_string() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", std::gmtime(&t));
    return buf;
}

Plane<float> run_model(const EvalModel& model, const FrameWindow& window) {
    if (model.is_identity()) return window.center_luma();
    return generator_forward(*model.spec, *model.params, window);
}

}  // namespace

double psnr(const Image& a, const Image& b, double max_val) {
    if (!a.same_shape(b))
        throw ConfigError("psnr: frame shapes differ, " + std::to_string(a.h) + "x" +
                          std::to_string(a.w) + " vs " + std::to_string(b.h) + "x" +
                          std::to_string(b.w));
    if (max_val <= 0.0) throw ConfigError("psnr: max_val must be positive");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.rgb.size(); ++i) {
        const double d = static_cast<double>(a.rgb[i]) - static_cast<double>(b.rgb[i]);
        acc += d * d;
    }
    const double mse = acc / static_cast<double>(a.rgb.size());
    if (mse == 0.0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(max_val * max_val / mse));
}

double EvalReport::recompute_average() const {
    double acc = 0.0;
    for (const auto& row : per_video) acc += row.psnr_db;
    return per_video.empty() ? 0.0 : acc / static_cast<double>(per_video.size());
}

std::optional<std::pair<double, double>> EvalReport::left_right_averages() const {
    double left = 0.0, right = 0.0;
    int nl = 0, nr = 0;
    for (const auto& row : per_video) {
        if (row.video_id.ends_with("/left")) {
            left += row.psnr_db;
            ++nl;
        } else if (row.video_id.ends_with("/right")) {
            right += row.psnr_db;
            ++nr;
        }
    }
    if (nl == 0 || nr == 0) return std::nullopt;
    return std::make_pair(left / nl, right / nr);
}

EvalTable evaluate(const EvalModel& model, const std::vector<ClipPair>& dataset,
                   const std::string& dataset_label) {
    if (dataset.empty()) throw DataError("evaluate: empty dataset");
    for (const auto& p : dataset)
        if (!p.sharp.has_value())
            throw DataError("evaluate: clip '" + p.id +
                            "' has no ground truth; use the qualitative (deblur) mode instead");

    EvalReport input_row, method_row;
    input_row.method = "INPUT";
    method_row.method = model.label;
    method_row.checkpoint_id = model.checkpoint_id;
    input_row.dataset = method_row.dataset = dataset_label;
    input_row.timestamp = method_row.timestamp = now_string();

    const int T = model.is_identity() ? 1 : model.spec->window_T;
    for (const auto& pair : dataset) {
        const VideoClip& sharp = *pair.sharp;
        if (sharp.frame_count() != pair.blurry.frame_count())
            throw DataError("evaluate: clip '" + pair.id + "' has mismatched frame counts");

        double input_acc = 0.0, method_acc = 0.0;
        const LumaClip planes = to_ycbcr_planes(pair.blurry);
        for (int i = 0; i < pair.blurry.frame_count(); ++i) {
            input_acc += psnr(pair.blurry.frames[i], sharp.frames[i]);
            const FrameWindow window = make_window(planes, i, T);
            const Plane<float> luma = run_model(model, window);
            const Image restored = recombine(luma, window);
            method_acc += psnr(restored, sharp.frames[i]);
        }
        const double n = pair.blurry.frame_count();
        input_row.per_video.push_back({pair.id, input_acc / n});
        method_row.per_video.push_back({pair.id, method_acc / n});
    }
    input_row.average = input_row.recompute_average();
    method_row.average = method_row.recompute_average();
    return EvalTable{{input_row, method_row}};
}

void write_report_csv(const std::filesystem::path& path, const EvalTable& table) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "method,video,psnr_db\n";
    char buf[64];
    for (const auto& report : table.methods) {
        for (const auto& row : report.per_video) {
            std::snprintf(buf, sizeof(buf), "%.6f", row.psnr_db);
            out << report.method << "," << row.video_id << "," << buf << "\n";
        }
        std::snprintf(buf, sizeof(buf), "%.6f", report.average);
        out << report.method << ",average," << buf << "\n";
        if (const auto lr = report.left_right_averages()) {
            std::snprintf(buf, sizeof(buf), "%.6f", lr->first);
            out << report.method << ",average_left," << buf << "\n";
            std::snprintf(buf, sizeof(buf), "%.6f", lr->second);
            out << report.method << ",average_right," << buf << "\n";
        }
    }
}

std::string format_report_table(const EvalTable& table) {
    // Aligned columns: one row per method, one column per video + Average.
    std::vector<std::string> videos;
    if (!table.methods.empty())
        for (const auto& row : table.methods.front().per_video) videos.push_back(row.video_id);

    std::size_t name_w = 8;
    for (const auto& r : table.methods) name_w = std::max(name_w, r.method.size());

    std::ostringstream out;
    out << std::left;
    auto pad = [&](const std::string& s, std::size_t w) {
        out << s;
        for (std::size_t i = s.size(); i < w + 2; ++i) out << ' ';
    };
    pad("method", name_w);
    for (const auto& v : videos) pad(v, std::max<std::size_t>(7, v.size()));
    pad("Average", 7);
    out << "\n";

    char buf[32];
    for (const auto& r : table.methods) {
        pad(r.method, name_w);
        for (const auto& row : r.per_video) {
            std::snprintf(buf, sizeof(buf), "%.2f", row.psnr_db);
            pad(buf, std::max<std::size_t>(7, row.video_id.size()));
        }
        std::snprintf(buf, sizeof(buf), "%.2f", r.average);
        pad(buf, 7);
        if (const auto lr = r.left_right_averages()) {
            std::snprintf(buf, sizeof(buf), "  LEFT %.2f  RIGHT %.2f", lr->first, lr->second);
            out << buf;
        }
        out << "\n";
    }
    return out.str();
}

void write_report_table(const std::filesystem::path& path, const EvalTable& table) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << format_report_table(table);
}

VideoClip deblur_clip(const EvalModel& model, const VideoClip& blurry, int window_T) {
    VideoClip out;
    out.source = blurry.source;
    out.fps = blurry.fps;
    const int T = model.is_identity() ? window_T : model.spec->window_T;
    const LumaClip planes = to_ycbcr_planes(blurry);
    out.frames.reserve(blurry.frames.size());
    for (int i = 0; i < blurry.frame_count(); ++i) {
        const FrameWindow window = make_window(planes, i, T);
        const Plane<float> luma = run_model(model, window);
        out.frames.push_back(recombine(luma, window));
    }
    return out;
}

void dump_triptychs(const std::filesystem::path& dir, const VideoClip& input,
                    const VideoClip& output, const VideoClip* ground_truth) {
    std::filesystem::create_directories(dir);
    const int panels = ground_truth != nullptr ? 3 : 2;
    for (int i = 0; i < input.frame_count(); ++i) {
        const int h = input.height(), w = input.width();
        Image strip(h, panels * w);
        auto blit = [&](const Image& src, int panel) {
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    for (int c = 0; c < 3; ++c) strip.at(y, panel * w + x, c) = src.at(y, x, c);
        };
        blit(input.frames[i], 0);
        blit(output.frames[i], 1);
        if (ground_truth != nullptr) blit(ground_truth->frames[i], 2);
        char name[16];
        std::snprintf(name, sizeof(name), "%05d.png", i);
        write_png(dir / name, strip);
    }
}

}  // namespace vdblur
