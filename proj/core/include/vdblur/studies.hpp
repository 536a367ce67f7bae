#ifndef VDBLUR_STUDIES_HPP
#define VDBLUR_STUDIES_HPP

#include <map>

#include "vdblur/evaluation.hpp"
#include "vdblur/train.hpp"

namespace vdblur {

// Trains every requested variant under the same budget (same seeds, steps
// and data) and scores each on the held-out clips. "gan" fine-tunes the
// net3d checkpoint of the same seed.
struct AblationConfig {
    TrainConfig base;
    std::vector<std::string> variants{"single2d", "multi2d", "net3d", "gan"};
    std::vector<std::uint64_t> seeds{1};
    int holdout_clips = 1;
    long gan_steps = 0;  // 0: reuse base.max_steps
};

struct AblationResult {
    EvalTable table;  // INPUT row plus one seed-averaged row per variant
    std::vector<std::string> ranking;  // variant labels, best PSNR first
    std::map<std::string, double> mean_psnr;
    // per variant, per seed averages (for trend checks across seeds)
    std::map<std::string, std::vector<double>> seed_psnr;
};

AblationResult ablation_study(const AblationConfig& cfg, const std::vector<ClipPair>& dataset,
                              const std::filesystem::path& work_dir);

// One trained model per window size, same budget each.
struct WindowStudyConfig {
    TrainConfig base;
    std::vector<int> T_list{3, 5, 7, 9, 11};
    int holdout_clips = 1;
};

struct WindowStudyResult {
    EvalTable table;  // INPUT row plus one row per T
    std::map<int, double> psnr_by_T;
};

WindowStudyResult window_study(const WindowStudyConfig& cfg,
                               const std::vector<ClipPair>& dataset,
                               const std::filesystem::path& work_dir);

}  // namespace vdblur

#endif
