#ifndef VDBLUR_TRAIN_HPP
#define VDBLUR_TRAIN_HPP

#include <cstdint>
#include <deque>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "vdblur/checkpoint.hpp"
#include "vdblur/data.hpp"
#include "vdblur/losses.hpp"
#include "vdblur/network.hpp"

namespace vdblur {

class TrainingError : public std::runtime_error {
  public:
    explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

enum class OptimizerKind { SgdMomentum, Adam };
std::string optimizer_name(OptimizerKind k);
OptimizerKind optimizer_from_name(const std::string& name);

struct TrainConfig {
    Variant variant = Variant::Net3D;
    int window_T = 5;
    int batch_size = 4;
    int patch_size = 128;
    double init_std = 0.01;
    double lr_phase1 = 1e-4;
    double lr_plateau = 1e-5;    // learning rate after the plateau decay
    double lr_finetune = 1e-5;   // adversarial fine-tuning rate
    long plateau_patience = 5000;
    long plateau_smooth_window = 1000;
    LossWeights alpha{0.0002};
    long max_steps = 150000;
    std::uint64_t seed = 0;
    long eval_every = 1000;
    long checkpoint_every = 5000;
    long early_stop_evals = 0;  // 0 disables; stop after N evals without a new best PSNR
    OptimizerKind optimizer = OptimizerKind::SgdMomentum;
    double momentum = 0.9;
    double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
    double grad_clip = 0.0;  // global L2 norm; 0 disables
    GeneratorScale scale{};

    void validate() const;
};

std::string train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& text);
TrainConfig load_train_config(const std::filesystem::path& path);

// Clips prepared for training plus held-out full clips for validation PSNR.
struct TrainingSet {
    std::vector<LumaClip> blurry, sharp;  // aligned pairs
    std::vector<ClipPair> validation;
};

TrainingSet make_training_set(std::vector<ClipPair> pairs, int holdout_clips);

// Crop offset and flips shared by every frame of a sample.
struct AugmentPlan {
    int dy = 0, dx = 0;
    bool hflip = false, vflip = false;
};

AugmentPlan make_augment_plan(std::mt19937& rng, int h, int w, int patch_size);
SamplePair apply_augment(const SamplePair& sample, const AugmentPlan& plan, int patch_size);
SamplePair augment(const SamplePair& sample, std::mt19937& rng, int patch_size);

// Plain SGD with momentum, or Adam. Moment buffers align with the canonical
// trainable-array order.
template <class S>
class Optimizer {
  public:
    Optimizer() = default;
    Optimizer(OptimizerKind kind, const TrainConfig& cfg,
              const std::vector<std::vector<S>*>& params);

    void step(double lr, const std::vector<std::vector<S>*>& params,
              const std::vector<std::vector<S>*>& grads, double grad_clip);

    OptimizerKind kind() const { return kind_; }
    long step_count() const { return t_; }

    std::vector<NamedArray> pack(const std::string& prefix) const;
    void unpack(const std::map<std::string, NamedArray>& arrays, const std::string& prefix);

  private:
    OptimizerKind kind_ = OptimizerKind::SgdMomentum;
    double momentum_ = 0.9, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    long t_ = 0;
    std::vector<std::vector<S>> m_, v_;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::filesystem::path checkpoint_path;
    double final_loss = 0.0;
    double best_val_psnr = 0.0;
    long steps_run = 0;
};

// Phase 1: content-only training from Gaussian init. Writes periodic
// checkpoints, an append-only CSV log and a resumable state file under
// out_dir. Non-finite losses abort with a diagnostic naming the step and
// batch.
TrainResult train_generator(const TrainConfig& cfg, const TrainingSet& data,
                            const std::filesystem::path& out_dir,
                            const std::filesystem::path& resume_state = {});

// Phase 2: adversarial fine-tuning from a phase-1 checkpoint, alternating
// one discriminator and one generator update per step. Keeps the best
// validation-PSNR snapshot; the returned checkpoint is that snapshot.
TrainResult train_gan(const TrainConfig& cfg, const TrainingSet& data,
                      const Checkpoint& generator_checkpoint,
                      const std::filesystem::path& out_dir,
                      const std::filesystem::path& resume_state = {});

extern template class Optimizer<float>;
extern template class Optimizer<double>;

}  // namespace vdblur

#endif
