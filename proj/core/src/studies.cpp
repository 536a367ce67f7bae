#include "vdblur/studies.hpp"

#include <algorithm>

namespace vdblur {

namespace fs = std::filesystem;

namespace {

EvalReport seed_average(const std::string& label, const std::vector<EvalReport>& runs) {
    EvalReport avg;
    avg.method = label;
    avg.dataset = runs.front().dataset;
    avg.timestamp = runs.front().timestamp;
    for (std::size_t v = 0; v < runs.front().per_video.size(); ++v) {
        double acc = 0.0;
        for (const auto& r : runs) acc += r.per_video[v].psnr_db;
        avg.per_video.push_back(
            {runs.front().per_video[v].video_id, acc / static_cast<double>(runs.size())});
    }
    avg.average = avg.recompute_average();
    return avg;
}

}  // namespace

AblationResult ablation_study(const AblationConfig& cfg, const std::vector<ClipPair>& dataset,
                              const fs::path& work_dir) {
    if (cfg.variants.empty()) throw ConfigError("ablation needs at least one variant");
    if (cfg.seeds.empty()) throw ConfigError("ablation needs at least one seed");
    for (const auto& v : cfg.variants)
        if (v != "gan") (void)variant_from_name(v);

    const bool want_gan =
        std::find(cfg.variants.begin(), cfg.variants.end(), "gan") != cfg.variants.end();

    TrainingSet data = make_training_set(dataset, cfg.holdout_clips);

    AblationResult result;
    EvalReport input_row;
    std::map<std::string, std::vector<EvalReport>> rows;

    for (std::uint64_t seed : cfg.seeds) {
        std::map<std::string, Checkpoint> phase1;
        auto run_phase1 = [&](const std::string& name) {
            TrainConfig tc = cfg.base;
            tc.variant = variant_from_name(name);
            tc.seed = seed;
            const fs::path dir =
                work_dir.empty() ? fs::path()
                                 : work_dir / (name + "-seed" + std::to_string(seed));
            TrainResult tr = train_generator(tc, data, dir);
            phase1.emplace(name, std::move(tr.checkpoint));
        };

        for (const auto& name : cfg.variants)
            if (name != "gan") run_phase1(name);
        if (want_gan && !phase1.count("net3d")) run_phase1("net3d");

        std::map<std::string, Checkpoint> trained;
        for (auto& [name, ckpt] : phase1) trained.emplace(name, std::move(ckpt));
        if (want_gan) {
            TrainConfig tc = cfg.base;
            tc.variant = Variant::Net3D;
            tc.seed = seed;
            if (cfg.gan_steps > 0) tc.max_steps = cfg.gan_steps;
            const fs::path dir =
                work_dir.empty() ? fs::path() : work_dir / ("gan-seed" + std::to_string(seed));
            TrainResult tr = train_gan(tc, data, trained.at("net3d"), dir);
            trained.emplace("gan", std::move(tr.checkpoint));
        }

        for (const auto& name : cfg.variants) {
            const Checkpoint& ckpt = trained.at(name);
            EvalModel model;
            model.spec = &ckpt.spec;
            model.params = &ckpt.generator;
            model.label = name;
            model.checkpoint_id = ckpt.id;
            EvalTable table = evaluate(model, data.validation, "ablation");
            if (input_row.per_video.empty()) input_row = table.methods[0];
            rows[name].push_back(table.methods[1]);
            result.seed_psnr[name].push_back(table.methods[1].average);
        }
    }

    result.table.methods.push_back(input_row);
    for (const auto& name : cfg.variants) {
        EvalReport avg = seed_average(name, rows.at(name));
        result.mean_psnr[name] = avg.average;
        result.table.methods.push_back(std::move(avg));
    }
    for (const auto& name : cfg.variants) result.ranking.push_back(name);
    std::sort(result.ranking.begin(), result.ranking.end(),
              [&](const std::string& a, const std::string& b) {
                  return result.mean_psnr.at(a) > result.mean_psnr.at(b);
              });
    return result;
}

WindowStudyResult window_study(const WindowStudyConfig& cfg,
                               const std::vector<ClipPair>& dataset, const fs::path& work_dir) {
    if (cfg.T_list.empty()) throw ConfigError("window study needs at least one T");
    for (int T : cfg.T_list)
        if (T < 1 || T % 2 == 0)
            throw ConfigError("window sizes must be odd, got " + std::to_string(T));

    WindowStudyResult result;
    EvalReport input_row;
    for (int T : cfg.T_list) {
        TrainConfig tc = cfg.base;
        tc.variant = Variant::Net3D;
        tc.window_T = T;

        TrainingSet data = make_training_set(dataset, cfg.holdout_clips);
        const fs::path dir = work_dir.empty() ? fs::path() : work_dir / ("T" + std::to_string(T));
        TrainResult tr = train_generator(tc, data, dir);

        EvalModel model;
        model.spec = &tr.checkpoint.spec;
        model.params = &tr.checkpoint.generator;
        model.label = "net3d-T" + std::to_string(T);
        model.checkpoint_id = tr.checkpoint.id;
        EvalTable table = evaluate(model, data.validation, "window-study");
        if (input_row.per_video.empty()) input_row = table.methods[0];
        result.table.methods.push_back(table.methods[1]);
        result.psnr_by_T[T] = table.methods[1].average;
    }
    result.table.methods.insert(result.table.methods.begin(), input_row);
    return result;
}

}  // namespace vdblur
