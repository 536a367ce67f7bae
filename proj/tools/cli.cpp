#include "cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <optional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "vdblur/checkpoint.hpp"
#include "vdblur/evaluation.hpp"
#include "vdblur/image_io.hpp"
#include "vdblur/studies.hpp"
#include "vdblur/train.hpp"

namespace vdblur::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string default_run_name(const std::string& command) {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", std::gmtime(&t));
    return std::string("runs/") + buf + "-" + command;
}

void write_effective_config(const fs::path& out_dir, const std::string& command,
                            const TrainConfig* cfg, const json& extra) {
    fs::create_directories(out_dir);
    json j;
    j["command"] = command;
    if (cfg != nullptr) j["train"] = json::parse(train_config_to_json(*cfg));
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    std::ofstream out(out_dir / "effective_config.json");
    if (!out) throw DataError("cannot write " + (out_dir / "effective_config.json").string());
    out << j.dump(2) << "\n";
}

struct CommonOpts {
    std::string config_path;
    std::string dataset_root;
    std::string layout = "generic_pairs";
    std::string checkpoint;
    std::string out;
    std::string variant;
    int window_T = 0;
    double alpha = -1.0;
    long long seed = -1;
    int workers = 0;
    long long steps = 0;
    bool resume = false;
};

void add_train_flags(CLI::App* app, CommonOpts& o) {
    app->add_option("--config", o.config_path, "JSON config file; flags override its values");
    app->add_option("--variant", o.variant, "Generator variant")
        ->check(CLI::IsMember({"net3d", "multi2d", "single2d"}));
    app->add_option("--window-T", o.window_T, "Temporal window size (odd)");
    app->add_option("--alpha", o.alpha, "Adversarial loss weight");
    app->add_option("--seed", o.seed, "Random seed");
    app->add_option("--steps", o.steps, "Training steps");
}

TrainConfig resolve_train_config(const CommonOpts& o) {
    TrainConfig cfg;
    if (!o.config_path.empty()) cfg = load_train_config(o.config_path);
    if (!o.variant.empty()) cfg.variant = variant_from_name(o.variant);
    if (o.window_T > 0) cfg.window_T = o.window_T;
    if (o.alpha >= 0.0) cfg.alpha.alpha = o.alpha;
    if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
    if (o.steps > 0) cfg.max_steps = o.steps;
    cfg.validate();
    return cfg;
}

void apply_workers(int workers) {
#ifdef _OPENMP
    if (workers > 0) omp_set_num_threads(workers);
#else
    (void)workers;
#endif
}

fs::path require_dir(const std::string& path, const std::string& what) {
    if (path.empty()) throw CLI::ValidationError(what + " is required");
    if (!fs::is_directory(path))
        throw CLI::ValidationError(what + " does not exist: " + path);
    return path;
}

fs::path require_file(const std::string& path, const std::string& what) {
    if (path.empty()) throw CLI::ValidationError(what + " is required");
    if (!fs::is_regular_file(path))
        throw CLI::ValidationError(what + " does not exist: " + path);
    return path;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) seeds.push_back(std::stoull(item));
    return seeds;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    return out;
}

int cmd_make_synthetic(const CommonOpts& o, const SyntheticConfig& synth) {
    const fs::path out = o.out.empty() ? default_run_name("make-synthetic") : o.out;
    build_synthetic_dataset(out, synth);
    json extra;
    extra["synthetic"] = {{"clips", synth.clips},   {"frames", synth.frames},
                          {"height", synth.height}, {"width", synth.width},
                          {"blur_n", synth.blur_n}, {"seed", synth.seed}};
    write_effective_config(out, "make-synthetic", nullptr, extra);
    std::printf("wrote %d clip pairs under %s\n", synth.clips, out.string().c_str());
    return 0;
}

int cmd_train(const CommonOpts& o, int holdout) {
    const fs::path root = require_dir(o.dataset_root, "--dataset-root");
    const TrainConfig cfg = resolve_train_config(o);
    const fs::path out = o.out.empty() ? default_run_name("train") : o.out;
    apply_workers(o.workers);

    const fs::path state = out / "state.vdbc";
    if (o.resume && !fs::is_regular_file(state))
        throw CLI::ValidationError("--resume given but no state file at " + state.string());

    json extra;
    extra["dataset_root"] = root.string();
    extra["layout"] = o.layout;
    extra["holdout_clips"] = holdout;
    write_effective_config(out, "train", &cfg, extra);

    auto pairs = load_dataset(root, layout_from_name(o.layout));
    TrainingSet data = make_training_set(std::move(pairs), holdout);
    const TrainResult result =
        train_generator(cfg, data, out, o.resume ? state : fs::path());
    std::printf("phase-1 done: %ld steps, final content loss %.6g\n", result.steps_run,
                result.final_loss);
    std::printf("checkpoint: %s\n", result.checkpoint_path.string().c_str());
    return 0;
}

int cmd_finetune(const CommonOpts& o, int holdout) {
    const fs::path root = require_dir(o.dataset_root, "--dataset-root");
    const fs::path ckpt_path = require_file(o.checkpoint, "--checkpoint");
    TrainConfig cfg = resolve_train_config(o);
    const fs::path out = o.out.empty() ? default_run_name("finetune-gan") : o.out;
    apply_workers(o.workers);

    const Checkpoint gen = load_checkpoint(ckpt_path);
    cfg.variant = gen.spec.variant;
    cfg.window_T = gen.spec.window_T;

    const fs::path state = out / "state.vdbc";
    if (o.resume && !fs::is_regular_file(state))
        throw CLI::ValidationError("--resume given but no state file at " + state.string());

    json extra;
    extra["dataset_root"] = root.string();
    extra["layout"] = o.layout;
    extra["generator_checkpoint"] = ckpt_path.string();
    extra["holdout_clips"] = holdout;
    write_effective_config(out, "finetune-gan", &cfg, extra);

    auto pairs = load_dataset(root, layout_from_name(o.layout));
    TrainingSet data = make_training_set(std::move(pairs), holdout);
    const TrainResult result =
        train_gan(cfg, data, gen, out, o.resume ? state : fs::path());
    std::printf("fine-tune done: %ld steps, best validation PSNR %.3f dB\n", result.steps_run,
                result.best_val_psnr);
    std::printf("checkpoint: %s\n", result.checkpoint_path.string().c_str());
    return 0;
}

int cmd_deblur(const CommonOpts& o, const std::string& input, bool identity, int window_T) {
    const fs::path clip_dir = require_dir(input, "--input");
    std::optional<Checkpoint> ckpt;
    if (!identity) {
        const fs::path p = require_file(o.checkpoint, "--checkpoint");
        ckpt = load_checkpoint(p);
    }
    const fs::path out = o.out.empty() ? default_run_name("deblur") : o.out;
    apply_workers(o.workers);

    EvalModel model;
    if (ckpt.has_value()) {
        model.spec = &ckpt->spec;
        model.params = &ckpt->generator;
        model.label = variant_name(ckpt->spec.variant);
        model.checkpoint_id = ckpt->id;
    }

    const VideoClip blurry = load_clip_dir(clip_dir);
    const VideoClip restored = deblur_clip(model, blurry, window_T);
    write_clip_dir(out / "frames", restored);

    json extra;
    extra["input"] = clip_dir.string();
    extra["identity"] = identity;
    if (ckpt.has_value()) extra["checkpoint"] = o.checkpoint;
    write_effective_config(out, "deblur", nullptr, extra);
    std::printf("restored %d frames into %s\n", restored.frame_count(),
                (out / "frames").string().c_str());
    return 0;
}

int cmd_eval(const CommonOpts& o, bool identity, bool input_baseline, bool triptychs) {
    const fs::path root = require_dir(o.dataset_root, "--dataset-root");
    std::optional<Checkpoint> ckpt;
    if (!identity && !input_baseline) {
        const fs::path p = require_file(o.checkpoint, "--checkpoint");
        ckpt = load_checkpoint(p);
    }
    const fs::path out = o.out.empty() ? default_run_name("eval") : o.out;
    apply_workers(o.workers);

    const auto pairs = load_dataset(root, layout_from_name(o.layout));

    EvalModel model;
    if (ckpt.has_value()) {
        model.spec = &ckpt->spec;
        model.params = &ckpt->generator;
        model.label = variant_name(ckpt->spec.variant) + "-" + ckpt->id.substr(0, 8);
        model.checkpoint_id = ckpt->id;
    }
    EvalTable table = evaluate(model, pairs, root.filename().string());
    if (input_baseline) table.methods.resize(1);  // INPUT row only

    write_report_csv(out / "reports" / "psnr.csv", table);
    write_report_table(out / "reports" / "psnr.txt", table);

    if (triptychs && ckpt.has_value()) {
        for (const auto& pair : pairs) {
            const VideoClip restored = deblur_clip(model, pair.blurry, ckpt->spec.window_T);
            const VideoClip* gt = pair.sharp.has_value() ? &*pair.sharp : nullptr;
            dump_triptychs(out / "frames" / pair.id, pair.blurry, restored, gt);
        }
    }

    json extra;
    extra["dataset_root"] = root.string();
    extra["layout"] = o.layout;
    extra["identity"] = identity;
    extra["input_baseline"] = input_baseline;
    if (ckpt.has_value()) extra["checkpoint"] = o.checkpoint;
    write_effective_config(out, "eval", nullptr, extra);

    std::fputs(format_report_table(table).c_str(), stdout);
    return 0;
}

int cmd_ablation(const CommonOpts& o, const std::string& variants_csv,
                 const std::string& seeds_csv, int holdout, long long gan_steps) {
    const fs::path root = require_dir(o.dataset_root, "--dataset-root");
    const fs::path out = o.out.empty() ? default_run_name("ablation") : o.out;
    apply_workers(o.workers);

    AblationConfig cfg;
    cfg.base = resolve_train_config(o);
    if (!variants_csv.empty()) {
        cfg.variants.clear();
        std::stringstream ss(variants_csv);
        std::string item;
        while (std::getline(ss, item, ',')) cfg.variants.push_back(item);
    }
    if (!seeds_csv.empty()) cfg.seeds = parse_seed_list(seeds_csv);
    cfg.holdout_clips = holdout;
    cfg.gan_steps = gan_steps;

    json extra;
    extra["dataset_root"] = root.string();
    extra["layout"] = o.layout;
    extra["variants"] = cfg.variants;
    extra["seeds"] = cfg.seeds;
    extra["holdout_clips"] = holdout;
    write_effective_config(out, "ablation", &cfg.base, extra);

    const auto pairs = load_dataset(root, layout_from_name(o.layout));
    const AblationResult result = ablation_study(cfg, pairs, out / "work");

    write_report_csv(out / "reports" / "ablation.csv", result.table);
    write_report_table(out / "reports" / "ablation.txt", result.table);
    std::fputs(format_report_table(result.table).c_str(), stdout);
    std::printf("ranking:");
    for (const auto& name : result.ranking) std::printf(" %s", name.c_str());
    std::printf("\n");
    return 0;
}

int cmd_window_study(const CommonOpts& o, const std::string& t_csv, int holdout) {
    const fs::path root = require_dir(o.dataset_root, "--dataset-root");
    const fs::path out = o.out.empty() ? default_run_name("window-study") : o.out;
    apply_workers(o.workers);

    WindowStudyConfig cfg;
    cfg.base = resolve_train_config(o);
    if (!t_csv.empty()) cfg.T_list = parse_int_list(t_csv);
    cfg.holdout_clips = holdout;

    json extra;
    extra["dataset_root"] = root.string();
    extra["layout"] = o.layout;
    extra["T_list"] = cfg.T_list;
    extra["holdout_clips"] = holdout;
    write_effective_config(out, "window-study", &cfg.base, extra);

    const auto pairs = load_dataset(root, layout_from_name(o.layout));
    const WindowStudyResult result = window_study(cfg, pairs, out / "work");

    write_report_csv(out / "reports" / "window_study.csv", result.table);
    write_report_table(out / "reports" / "window_study.txt", result.table);
    std::fputs(format_report_table(result.table).c_str(), stdout);
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"video deblurring toolkit: 3D-convolutional restoration with "
                 "adversarial fine-tuning"};
    app.require_subcommand(1);

    CommonOpts o;
    SyntheticConfig synth;
    std::string input_dir, variants_csv, seeds_csv, t_csv;
    bool identity = false, input_baseline = false, triptychs = false;
    int holdout = 1, deblur_T = 5;
    long long gan_steps = 0;
    long long synth_seed = 0;

    auto* make = app.add_subcommand("make-synthetic",
                                    "Generate a synthetic blur dataset (generic_pairs layout)");
    make->add_option("--out", o.out, "Output dataset directory");
    make->add_option("--clips", synth.clips, "Number of clips");
    make->add_option("--frames", synth.frames, "Frames per clip");
    make->add_option("--height", synth.height, "Frame height");
    make->add_option("--width", synth.width, "Frame width");
    make->add_option("--n,--blur-n", synth.blur_n, "Temporal blur width (odd)");
    make->add_option("--seed", synth_seed, "Generation seed");

    auto* train = app.add_subcommand("train", "Phase 1: content-only generator training");
    train->add_option("--dataset-root", o.dataset_root, "Dataset root directory");
    train->add_option("--layout", o.layout, "Dataset layout")
        ->check(CLI::IsMember({"generic_pairs", "videodeblurring_quant", "videodeblurring_qual",
                               "blurred_kitti"}));
    train->add_option("--out", o.out, "Run directory");
    train->add_option("--workers", o.workers, "Math worker threads");
    train->add_option("--holdout", holdout, "Clips held out for validation");
    train->add_flag("--resume", o.resume, "Continue from the run's state file");
    add_train_flags(train, o);

    auto* finetune =
        app.add_subcommand("finetune-gan", "Phase 2: adversarial fine-tuning of a checkpoint");
    finetune->add_option("--dataset-root", o.dataset_root, "Dataset root directory");
    finetune->add_option("--layout", o.layout, "Dataset layout");
    finetune->add_option("--checkpoint", o.checkpoint, "Phase-1 generator checkpoint");
    finetune->add_option("--out", o.out, "Run directory");
    finetune->add_option("--workers", o.workers, "Math worker threads");
    finetune->add_option("--holdout", holdout, "Clips held out for validation");
    finetune->add_flag("--resume", o.resume, "Continue from the run's state file");
    add_train_flags(finetune, o);

    auto* deblur = app.add_subcommand("deblur", "Restore a blurry clip directory");
    deblur->add_option("--input", input_dir, "Directory of blurry PNG frames");
    deblur->add_option("--checkpoint", o.checkpoint, "Model checkpoint");
    deblur->add_flag("--identity", identity, "Debug passthrough (output := input luma)");
    deblur->add_option("--window-T", deblur_T, "Window size for the identity path");
    deblur->add_option("--out", o.out, "Output directory");
    deblur->add_option("--workers", o.workers, "Math worker threads");

    auto* eval = app.add_subcommand("eval", "PSNR report on a paired dataset");
    eval->add_option("--dataset-root", o.dataset_root, "Dataset root directory");
    eval->add_option("--layout", o.layout, "Dataset layout")
        ->check(CLI::IsMember({"generic_pairs", "videodeblurring_quant", "blurred_kitti"}));
    eval->add_option("--checkpoint", o.checkpoint, "Model checkpoint");
    eval->add_flag("--identity", identity, "Score the identity model");
    eval->add_flag("--input-baseline", input_baseline, "Emit only the INPUT row");
    eval->add_flag("--triptychs", triptychs, "Dump input/output/GT strips per frame");
    eval->add_option("--out", o.out, "Run directory");
    eval->add_option("--workers", o.workers, "Math worker threads");

    auto* ablation =
        app.add_subcommand("ablation", "Train and score variants under the same budget");
    ablation->add_option("--dataset-root", o.dataset_root, "Dataset root directory");
    ablation->add_option("--layout", o.layout, "Dataset layout");
    ablation->add_option("--out", o.out, "Run directory");
    ablation->add_option("--variants", variants_csv, "Comma list from single2d,multi2d,net3d,gan");
    ablation->add_option("--seeds", seeds_csv, "Comma list of seeds");
    ablation->add_option("--holdout", holdout, "Clips held out for scoring");
    ablation->add_option("--gan-steps", gan_steps, "Fine-tune steps for the gan row");
    ablation->add_option("--workers", o.workers, "Math worker threads");
    add_train_flags(ablation, o);

    auto* wstudy = app.add_subcommand("window-study", "PSNR versus temporal window size");
    wstudy->add_option("--dataset-root", o.dataset_root, "Dataset root directory");
    wstudy->add_option("--layout", o.layout, "Dataset layout");
    wstudy->add_option("--out", o.out, "Run directory");
    wstudy->add_option("--T-list", t_csv, "Comma list of odd window sizes");
    wstudy->add_option("--holdout", holdout, "Clips held out for scoring");
    wstudy->add_option("--workers", o.workers, "Math worker threads");
    add_train_flags(wstudy, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        synth.seed = static_cast<std::uint64_t>(synth_seed);
        if (make->parsed()) return cmd_make_synthetic(o, synth);
        if (train->parsed()) return cmd_train(o, holdout);
        if (finetune->parsed()) return cmd_finetune(o, holdout);
        if (deblur->parsed()) return cmd_deblur(o, input_dir, identity, deblur_T);
        if (eval->parsed()) return cmd_eval(o, identity, input_baseline, triptychs);
        if (ablation->parsed()) return cmd_ablation(o, variants_csv, seeds_csv, holdout, gan_steps);
        if (wstudy->parsed()) return cmd_window_study(o, t_csv, holdout);
    } catch (const CLI::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "failure: %s\n", e.what());
        return 2;
    }
    return 1;
}

}  // namespace vdblur::cli
