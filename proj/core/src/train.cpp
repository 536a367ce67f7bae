#include "vdblur/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "spec_json.hpp"
#include "vdblur/discriminator.hpp"
#include "vdblur/evaluation.hpp"
#include "vdblur/generator.hpp"

namespace vdblur {

namespace fs = std::filesystem;
using nlohmann::json;

std::string optimizer_name(OptimizerKind k) {
    return k == OptimizerKind::Adam ? "adam" : "sgd_momentum";
}

OptimizerKind optimizer_from_name(const std::string& name) {
    if (name == "adam") return OptimizerKind::Adam;
    if (name == "sgd_momentum") return OptimizerKind::SgdMomentum;
    throw ConfigError("unknown optimizer '" + name + "' (expected sgd_momentum or adam)");
}

void TrainConfig::validate() const {
    if (window_T < 1 || window_T % 2 == 0)
        throw ConfigError("window_T must be odd and >= 1, got " + std::to_string(window_T));
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (patch_size < 8) throw ConfigError("patch_size must be >= 8");
    if (lr_phase1 <= 0 || lr_plateau <= 0 || lr_finetune <= 0)
        throw ConfigError("learning rates must be positive");
    if (init_std <= 0) throw ConfigError("init_std must be positive");
    if (max_steps < 0) throw ConfigError("max_steps must be >= 0");
    if (plateau_patience < 1 || plateau_smooth_window < 1)
        throw ConfigError("plateau settings must be >= 1");
    if (eval_every < 1 || checkpoint_every < 1)
        throw ConfigError("eval_every and checkpoint_every must be >= 1");
    alpha.validate();
}

std::string train_config_to_json(const TrainConfig& cfg) {
    json j;
    j["variant"] = variant_name(cfg.variant);
    j["window_T"] = cfg.window_T;
    j["batch_size"] = cfg.batch_size;
    j["patch_size"] = cfg.patch_size;
    j["init_std"] = cfg.init_std;
    j["lr_phase1"] = cfg.lr_phase1;
    j["lr_plateau"] = cfg.lr_plateau;
    j["lr_finetune"] = cfg.lr_finetune;
    j["plateau_patience"] = cfg.plateau_patience;
    j["plateau_smooth_window"] = cfg.plateau_smooth_window;
    j["alpha"] = cfg.alpha.alpha;
    j["max_steps"] = cfg.max_steps;
    j["seed"] = cfg.seed;
    j["eval_every"] = cfg.eval_every;
    j["checkpoint_every"] = cfg.checkpoint_every;
    j["early_stop_evals"] = cfg.early_stop_evals;
    j["optimizer"] = optimizer_name(cfg.optimizer);
    j["momentum"] = cfg.momentum;
    j["adam_beta1"] = cfg.adam_beta1;
    j["adam_beta2"] = cfg.adam_beta2;
    j["adam_eps"] = cfg.adam_eps;
    j["grad_clip"] = cfg.grad_clip;
    j["scale"] = {{"head_channels", cfg.scale.head_channels},
                  {"body_channels", cfg.scale.body_channels},
                  {"residual_blocks", cfg.scale.residual_blocks},
                  {"tail_channels", cfg.scale.tail_channels}};
    return j.dump(2);
}

TrainConfig train_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config JSON: ") + e.what());
    }
    TrainConfig cfg;
    if (j.contains("variant")) cfg.variant = variant_from_name(j["variant"].get<std::string>());
    cfg.window_T = j.value("window_T", cfg.window_T);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.patch_size = j.value("patch_size", cfg.patch_size);
    cfg.init_std = j.value("init_std", cfg.init_std);
    cfg.lr_phase1 = j.value("lr_phase1", cfg.lr_phase1);
    cfg.lr_plateau = j.value("lr_plateau", cfg.lr_plateau);
    cfg.lr_finetune = j.value("lr_finetune", cfg.lr_finetune);
    cfg.plateau_patience = j.value("plateau_patience", cfg.plateau_patience);
    cfg.plateau_smooth_window = j.value("plateau_smooth_window", cfg.plateau_smooth_window);
    cfg.alpha.alpha = j.value("alpha", cfg.alpha.alpha);
    cfg.max_steps = j.value("max_steps", cfg.max_steps);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.eval_every = j.value("eval_every", cfg.eval_every);
    cfg.checkpoint_every = j.value("checkpoint_every", cfg.checkpoint_every);
    cfg.early_stop_evals = j.value("early_stop_evals", cfg.early_stop_evals);
    if (j.contains("optimizer"))
        cfg.optimizer = optimizer_from_name(j["optimizer"].get<std::string>());
    cfg.momentum = j.value("momentum", cfg.momentum);
    cfg.adam_beta1 = j.value("adam_beta1", cfg.adam_beta1);
    cfg.adam_beta2 = j.value("adam_beta2", cfg.adam_beta2);
    cfg.adam_eps = j.value("adam_eps", cfg.adam_eps);
    cfg.grad_clip = j.value("grad_clip", cfg.grad_clip);
    if (j.contains("scale")) {
        const auto& s = j["scale"];
        cfg.scale.head_channels = s.value("head_channels", cfg.scale.head_channels);
        cfg.scale.body_channels = s.value("body_channels", cfg.scale.body_channels);
        cfg.scale.residual_blocks = s.value("residual_blocks", cfg.scale.residual_blocks);
        cfg.scale.tail_channels = s.value("tail_channels", cfg.scale.tail_channels);
    }
    cfg.validate();
    return cfg;
}

TrainConfig load_train_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return train_config_from_json(ss.str());
}

TrainingSet make_training_set(std::vector<ClipPair> pairs, int holdout_clips) {
    if (holdout_clips < 0 || holdout_clips >= static_cast<int>(pairs.size()))
        throw ConfigError("holdout_clips must leave at least one training clip");
    TrainingSet set;
    const int train_n = static_cast<int>(pairs.size()) - holdout_clips;
    for (int i = 0; i < train_n; ++i) {
        if (!pairs[i].sharp.has_value())
            throw DataError("training clip '" + pairs[i].id + "' has no sharp ground truth");
        set.blurry.push_back(to_ycbcr_planes(pairs[i].blurry));
        set.sharp.push_back(to_ycbcr_planes(*pairs[i].sharp));
    }
    for (int i = train_n; i < static_cast<int>(pairs.size()); ++i)
        set.validation.push_back(std::move(pairs[i]));
    return set;
}

AugmentPlan make_augment_plan(std::mt19937& rng, int h, int w, int patch_size) {
    if (h < patch_size || w < patch_size)
        throw ConfigError("frame " + std::to_string(h) + "x" + std::to_string(w) +
                          " is smaller than the " + std::to_string(patch_size) + " patch");
    AugmentPlan plan;
    plan.dy = static_cast<int>(rng() % static_cast<unsigned>(h - patch_size + 1));
    plan.dx = static_cast<int>(rng() % static_cast<unsigned>(w - patch_size + 1));
    plan.hflip = (rng() & 1u) != 0;
    plan.vflip = (rng() & 1u) != 0;
    return plan;
}

namespace {

Plane<float> crop_flip(const Plane<float>& src, const AugmentPlan& plan, int p) {
    Plane<float> out(p, p);
    for (int y = 0; y < p; ++y) {
        const int sy = plan.vflip ? plan.dy + p - 1 - y : plan.dy + y;
        for (int x = 0; x < p; ++x) {
            const int sx = plan.hflip ? plan.dx + p - 1 - x : plan.dx + x;
            out.at(y, x) = src.at(sy, sx);
        }
    }
    return out;
}

}  // namespace

SamplePair apply_augment(const SamplePair& sample, const AugmentPlan& plan, int patch_size) {
    SamplePair out;
    out.window.center_index = sample.window.center_index;
    for (const auto& plane : sample.window.luma)
        out.window.luma.push_back(crop_flip(plane, plan, patch_size));
    out.window.chroma_cb = crop_flip(sample.window.chroma_cb, plan, patch_size);
    out.window.chroma_cr = crop_flip(sample.window.chroma_cr, plan, patch_size);
    out.target = crop_flip(sample.target, plan, patch_size);
    return out;
}

SamplePair augment(const SamplePair& sample, std::mt19937& rng, int patch_size) {
    const auto plan =
        make_augment_plan(rng, sample.window.height(), sample.window.width(), patch_size);
    return apply_augment(sample, plan, patch_size);
}

template <class S>
Optimizer<S>::Optimizer(OptimizerKind kind, const TrainConfig& cfg,
                        const std::vector<std::vector<S>*>& params)
    : kind_(kind),
      momentum_(cfg.momentum),
      beta1_(cfg.adam_beta1),
      beta2_(cfg.adam_beta2),
      eps_(cfg.adam_eps) {
    for (const auto* p : params) m_.emplace_back(p->size(), S(0));
    if (kind_ == OptimizerKind::Adam)
        for (const auto* p : params) v_.emplace_back(p->size(), S(0));
}

template <class S>
void Optimizer<S>::step(double lr, const std::vector<std::vector<S>*>& params,
                        const std::vector<std::vector<S>*>& grads, double grad_clip) {
    if (params.size() != m_.size() || grads.size() != params.size())
        throw ConfigError("optimizer buffers do not match the parameter arrays");

    S clip_scale = S(1);
    if (grad_clip > 0) {
        double sq = 0.0;
        for (const auto* g : grads)
            for (S v : *g) sq += static_cast<double>(v) * v;
        const double norm = std::sqrt(sq);
        if (norm > grad_clip) clip_scale = static_cast<S>(grad_clip / norm);
    }

    ++t_;
    if (kind_ == OptimizerKind::SgdMomentum) {
        const S mu = static_cast<S>(momentum_);
        for (std::size_t a = 0; a < params.size(); ++a) {
            auto& p = *params[a];
            const auto& g = *grads[a];
            auto& m = m_[a];
            for (std::size_t i = 0; i < p.size(); ++i) {
                m[i] = mu * m[i] + clip_scale * g[i];
                p[i] -= static_cast<S>(lr) * m[i];
            }
        }
    } else {
        const S b1 = static_cast<S>(beta1_), b2 = static_cast<S>(beta2_);
        const S corr1 = S(1) - static_cast<S>(std::pow(beta1_, t_));
        const S corr2 = S(1) - static_cast<S>(std::pow(beta2_, t_));
        for (std::size_t a = 0; a < params.size(); ++a) {
            auto& p = *params[a];
            const auto& g = *grads[a];
            auto& m = m_[a];
            auto& v = v_[a];
            for (std::size_t i = 0; i < p.size(); ++i) {
                const S gi = clip_scale * g[i];
                m[i] = b1 * m[i] + (S(1) - b1) * gi;
                v[i] = b2 * v[i] + (S(1) - b2) * gi * gi;
                const S mhat = m[i] / corr1;
                const S vhat = v[i] / corr2;
                p[i] -= static_cast<S>(lr) * mhat / (std::sqrt(vhat) + static_cast<S>(eps_));
            }
        }
    }
}

template <class S>
std::vector<NamedArray> Optimizer<S>::pack(const std::string& prefix) const {
    std::vector<NamedArray> arrays;
    auto dump = [&](const std::vector<std::vector<S>>& bufs, const std::string& tag) {
        for (std::size_t i = 0; i < bufs.size(); ++i) {
            NamedArray a;
            a.name = prefix + tag + "/" + std::to_string(i);
            a.dims = {bufs[i].size()};
            a.data.assign(bufs[i].begin(), bufs[i].end());
            arrays.push_back(std::move(a));
        }
    };
    dump(m_, "m");
    if (kind_ == OptimizerKind::Adam) dump(v_, "v");
    NamedArray t;
    t.name = prefix + "t";
    t.dims = {1};
    t.data = {static_cast<float>(t_)};
    arrays.push_back(std::move(t));
    return arrays;
}

template <class S>
void Optimizer<S>::unpack(const std::map<std::string, NamedArray>& arrays,
                          const std::string& prefix) {
    auto load = [&](std::vector<std::vector<S>>& bufs, const std::string& tag) {
        for (std::size_t i = 0; i < bufs.size(); ++i) {
            const auto it = arrays.find(prefix + tag + "/" + std::to_string(i));
            if (it == arrays.end() || it->second.data.size() != bufs[i].size())
                throw ConfigError("train state is missing optimizer array " + prefix + tag + "/" +
                                  std::to_string(i));
            bufs[i].assign(it->second.data.begin(), it->second.data.end());
        }
    };
    load(m_, "m");
    if (kind_ == OptimizerKind::Adam) load(v_, "v");
    const auto it = arrays.find(prefix + "t");
    if (it == arrays.end()) throw ConfigError("train state is missing optimizer step count");
    t_ = static_cast<long>(it->second.data.at(0));
}

namespace {

// Everything the training loop needs to restart bit-exactly.
struct LoopState {
    long step = 0;
    double lr = 0.0;
    bool decayed = false;
    double best_smoothed = 0.0;
    bool have_best_smoothed = false;
    long steps_since_improve = 0;
    std::deque<double> loss_window;
    double loss_window_sum = 0.0;
    double best_val_psnr = 0.0;
    bool have_best_val = false;
    long best_val_step = 0;
    long evals_since_best = 0;
    std::mt19937 data_rng;
};

std::string rng_to_string(const std::mt19937& rng) {
    std::ostringstream ss;
    ss << rng;
    return ss.str();
}

void rng_from_string(std::mt19937& rng, const std::string& text) {
    std::istringstream ss(text);
    ss >> rng;
    if (!ss) throw ConfigError("train state holds a malformed RNG state");
}

struct Batch {
    Tensor<float> input;    // generator input
    Tensor<float> target;   // sharp center luma, N x 1 x 1 x p x p
    std::string description;
};

// Draw order per sample: clip, frame, crop dy, crop dx, hflip, vflip.
Batch sample_batch(const TrainConfig& cfg, const TrainingSet& data, std::mt19937& rng) {
    const int n_clips = static_cast<int>(data.blurry.size());
    std::vector<FrameWindow> windows;
    std::vector<Plane<float>> targets;
    std::ostringstream desc;
    for (int s = 0; s < cfg.batch_size; ++s) {
        const int ci = static_cast<int>(rng() % static_cast<unsigned>(n_clips));
        const LumaClip& blurry = data.blurry[ci];
        const LumaClip& sharp = data.sharp[ci];
        const int fi = static_cast<int>(rng() % static_cast<unsigned>(blurry.frame_count()));
        const auto plan = make_augment_plan(rng, blurry.height(), blurry.width(), cfg.patch_size);

        SamplePair full;
        full.window = make_window(blurry, fi, cfg.window_T);
        full.target = sharp.y[fi];
        SamplePair patch = apply_augment(full, plan, cfg.patch_size);
        windows.push_back(std::move(patch.window));
        targets.push_back(std::move(patch.target));
        desc << (s ? ", " : "") << "clip " << ci << " frame " << fi;
    }

    Batch batch;
    batch.description = desc.str();
    const int N = cfg.batch_size, p = cfg.patch_size;
    batch.target = Tensor<float>(N, 1, 1, p, p);
    for (int s = 0; s < N; ++s)
        std::copy(targets[s].v.begin(), targets[s].v.end(),
                  batch.target.v.begin() + static_cast<std::ptrdiff_t>(s) * p * p);

    switch (cfg.variant) {
        case Variant::Net3D: {
            batch.input = Tensor<float>(N, 1, cfg.window_T, p, p);
            for (int s = 0; s < N; ++s)
                for (int t = 0; t < cfg.window_T; ++t)
                    std::copy(windows[s].luma[t].v.begin(), windows[s].luma[t].v.end(),
                              &batch.input.v[batch.input.index(s, 0, t, 0, 0)]);
            break;
        }
        case Variant::Multi2D: {
            batch.input = Tensor<float>(N, cfg.window_T, 1, p, p);
            for (int s = 0; s < N; ++s)
                for (int t = 0; t < cfg.window_T; ++t)
                    std::copy(windows[s].luma[t].v.begin(), windows[s].luma[t].v.end(),
                              &batch.input.v[batch.input.index(s, t, 0, 0, 0)]);
            break;
        }
        case Variant::Single2D: {
            batch.input = Tensor<float>(N, 1, 1, p, p);
            for (int s = 0; s < N; ++s)
                std::copy(windows[s].center_luma().v.begin(), windows[s].center_luma().v.end(),
                          &batch.input.v[batch.input.index(s, 0, 0, 0, 0)]);
            break;
        }
    }
    return batch;
}

double validation_psnr(const NetworkSpec& spec, const ModelParameters<float>& params,
                       const std::vector<ClipPair>& validation) {
    if (validation.empty()) return 0.0;
    EvalModel model;
    model.spec = &spec;
    model.params = &params;
    model.label = "val";
    const EvalTable table = evaluate(model, validation);
    return table.methods.back().average;
}

// Smoothed-loss plateau tracker; decays the rate once.
void track_plateau(const TrainConfig& cfg, LoopState& st, double loss) {
    st.loss_window.push_back(loss);
    st.loss_window_sum += loss;
    if (static_cast<long>(st.loss_window.size()) > cfg.plateau_smooth_window) {
        st.loss_window_sum -= st.loss_window.front();
        st.loss_window.pop_front();
    }
    if (static_cast<long>(st.loss_window.size()) < cfg.plateau_smooth_window) return;
    const double smoothed = st.loss_window_sum / static_cast<double>(st.loss_window.size());
    if (!st.have_best_smoothed || smoothed < st.best_smoothed) {
        st.best_smoothed = smoothed;
        st.have_best_smoothed = true;
        st.steps_since_improve = 0;
    } else {
        ++st.steps_since_improve;
    }
    if (!st.decayed && st.steps_since_improve >= cfg.plateau_patience) {
        st.lr = cfg.lr_plateau;
        st.decayed = true;
    }
}

class TrainLog {
  public:
    TrainLog(const fs::path& dir, bool append) {
        if (dir.empty()) return;
        fs::create_directories(dir);
        const fs::path path = dir / "training_log.csv";
        const bool fresh = !append || !fs::exists(path);
        out_.open(path, append ? std::ios::app : std::ios::trunc);
        if (!out_) throw DataError("cannot open training log " + path.string());
        if (fresh) out_ << "step,content_loss,adv_loss,d_loss,lr,val_psnr\n";
    }

    void row(long step, double content, const double* adv, const double* dl, double lr,
             const double* val) {
        if (!out_.is_open()) return;
        char buf[64];
        out_ << step << ",";
        std::snprintf(buf, sizeof(buf), "%.8g", content);
        out_ << buf << ",";
        if (adv) {
            std::snprintf(buf, sizeof(buf), "%.8g", *adv);
            out_ << buf;
        }
        out_ << ",";
        if (dl) {
            std::snprintf(buf, sizeof(buf), "%.8g", *dl);
            out_ << buf;
        }
        out_ << ",";
        std::snprintf(buf, sizeof(buf), "%.8g", lr);
        out_ << buf << ",";
        if (val) {
            std::snprintf(buf, sizeof(buf), "%.6f", *val);
            out_ << buf;
        }
        out_ << "\n";
        out_.flush();
    }

  private:
    std::ofstream out_;
};

json loop_state_to_json(const LoopState& st) {
    json j;
    j["step"] = st.step;
    j["lr"] = st.lr;
    j["decayed"] = st.decayed;
    j["best_smoothed"] = st.best_smoothed;
    j["have_best_smoothed"] = st.have_best_smoothed;
    j["steps_since_improve"] = st.steps_since_improve;
    j["loss_window"] = std::vector<double>(st.loss_window.begin(), st.loss_window.end());
    j["best_val_psnr"] = st.best_val_psnr;
    j["have_best_val"] = st.have_best_val;
    j["best_val_step"] = st.best_val_step;
    j["evals_since_best"] = st.evals_since_best;
    j["rng"] = rng_to_string(st.data_rng);
    return j;
}

LoopState loop_state_from_json(const json& j) {
    LoopState st;
    st.step = j.at("step").get<long>();
    st.lr = j.at("lr").get<double>();
    st.decayed = j.at("decayed").get<bool>();
    st.best_smoothed = j.at("best_smoothed").get<double>();
    st.have_best_smoothed = j.at("have_best_smoothed").get<bool>();
    st.steps_since_improve = j.at("steps_since_improve").get<long>();
    for (double v : j.at("loss_window")) {
        st.loss_window.push_back(v);
        st.loss_window_sum += v;
    }
    st.best_val_psnr = j.at("best_val_psnr").get<double>();
    st.have_best_val = j.at("have_best_val").get<bool>();
    st.best_val_step = j.at("best_val_step").get<long>();
    st.evals_since_best = j.at("evals_since_best").get<long>();
    rng_from_string(st.data_rng, j.at("rng").get<std::string>());
    return st;
}

void check_finite(double loss, long step, const Batch& batch, const char* what) {
    if (std::isfinite(loss)) return;
    throw TrainingError(std::string(what) + " became non-finite at step " + std::to_string(step) +
                        " (batch: " + batch.description + ")");
}

}  // namespace

TrainResult train_generator(const TrainConfig& cfg, const TrainingSet& data,
                            const fs::path& out_dir, const fs::path& resume_state) {
    cfg.validate();
    if (data.blurry.empty()) throw ConfigError("training set has no clips");

    const NetworkSpec spec = build_generator(cfg.variant, cfg.window_T, cfg.scale);
    ModelParameters<float> params;
    Optimizer<float> opt;
    LoopState st;

    const bool resuming = !resume_state.empty();
    if (resuming) {
        const Archive ar = read_archive(resume_state);
        const json manifest = json::parse(ar.manifest_json);
        if (manifest.value("kind", "") != "train_state" ||
            manifest.value("phase", "") != "generator")
            throw ConfigError(resume_state.string() + " is not a phase-1 training state");
        params = unpack_generator(spec, ar.arrays, "g/");
        opt = Optimizer<float>(cfg.optimizer, cfg, trainable_arrays(params));
        opt.unpack(ar.arrays, "opt/g/");
        st = loop_state_from_json(manifest.at("loop"));
    } else {
        params = init_weights<float>(spec, cfg.seed, cfg.init_std);
        opt = Optimizer<float>(cfg.optimizer, cfg, trainable_arrays(params));
        st.lr = cfg.lr_phase1;
        st.data_rng.seed(static_cast<std::uint32_t>(cfg.seed));
    }

    const fs::path log_dir = out_dir.empty() ? fs::path() : out_dir / "logs";
    const fs::path ckpt_dir = out_dir.empty() ? fs::path() : out_dir / "checkpoints";
    TrainLog log(log_dir, resuming);

    auto save_state = [&]() {
        if (out_dir.empty()) return;
        json manifest;
        manifest["kind"] = "train_state";
        manifest["phase"] = "generator";
        manifest["loop"] = loop_state_to_json(st);
        manifest["generator"] = detail::spec_to_json(spec);
        std::vector<NamedArray> arrays = pack_generator(spec, params, "g/");
        auto om = opt.pack("opt/g/");
        arrays.insert(arrays.end(), om.begin(), om.end());
        write_archive(out_dir / "state.vdbc", manifest.dump(2), arrays);
    };

    auto save_checkpoint_file = [&](const fs::path& path) {
        Checkpoint ckpt;
        ckpt.spec = spec;
        ckpt.generator = params;
        ckpt.step = st.step;
        save_checkpoint(path, ckpt);
        return ckpt;
    };

    GeneratorTape<float> tape;
    ModelParameters<float> grads = make_zero_grads<float>(spec);
    auto grad_arrays = trainable_arrays(grads);
    double last_loss = 0.0;

    while (st.step < cfg.max_steps) {
        Batch batch = sample_batch(cfg, data, st.data_rng);
        const Tensor<float> out = generator_train_forward(spec, params, batch.input, tape, true);
        Tensor<float> d_out;
        const double loss = content_loss_batch(out, batch.target, &d_out);
        check_finite(loss, st.step, batch, "content loss");
        last_loss = loss;

        for (auto* g : grad_arrays) std::fill(g->begin(), g->end(), 0.0f);
        generator_backward(spec, params, tape, d_out, grads);
        opt.step(st.lr, trainable_arrays(params), grad_arrays, cfg.grad_clip);

        const bool eval_now = !data.validation.empty() && (st.step + 1) % cfg.eval_every == 0;
        double val = 0.0;
        if (eval_now) {
            val = validation_psnr(spec, params, data.validation);
            if (!st.have_best_val || val > st.best_val_psnr) {
                st.best_val_psnr = val;
                st.have_best_val = true;
                st.best_val_step = st.step + 1;
            }
        }
        log.row(st.step, loss, nullptr, nullptr, st.lr, eval_now ? &val : nullptr);
        track_plateau(cfg, st, loss);
        ++st.step;

        if (!out_dir.empty() && (st.step % cfg.checkpoint_every == 0 || st.step == cfg.max_steps)) {
            char name[48];
            std::snprintf(name, sizeof(name), "gen_step%08ld.vdbc", st.step);
            save_checkpoint_file(ckpt_dir / name);
            save_state();
        }
    }

    TrainResult result;
    result.final_loss = last_loss;
    result.best_val_psnr = st.best_val_psnr;
    result.steps_run = st.step;
    if (!out_dir.empty()) {
        result.checkpoint_path = ckpt_dir / "generator.vdbc";
        result.checkpoint = save_checkpoint_file(result.checkpoint_path);
        save_state();
    } else {
        result.checkpoint.spec = spec;
        result.checkpoint.generator = std::move(params);
        result.checkpoint.step = st.step;
    }
    return result;
}

TrainResult train_gan(const TrainConfig& cfg, const TrainingSet& data,
                      const Checkpoint& generator_checkpoint, const fs::path& out_dir,
                      const fs::path& resume_state) {
    cfg.validate();
    if (data.blurry.empty()) throw ConfigError("training set has no clips");

    const NetworkSpec spec = generator_checkpoint.spec;
    if (spec.variant != cfg.variant || spec.window_T != cfg.window_T)
        throw ConfigError("checkpoint variant/T (" + variant_name(spec.variant) + ", T=" +
                          std::to_string(spec.window_T) + ") does not match the config (" +
                          variant_name(cfg.variant) + ", T=" + std::to_string(cfg.window_T) + ")");

    DiscriminatorSpec d_spec;
    d_spec.conv_stages = {{2, 64}, {3, 128}, {4, 256}, {5, 512}};
    if (cfg.scale.body_channels < 64) {
        // Downsized generator: shrink the discriminator proportionally.
        const int b = cfg.scale.body_channels;
        d_spec.conv_stages = {{2, b}, {2, 2 * b}};
        d_spec.fc = {4 * b, 2};
    }
    d_spec.input_h = d_spec.input_w = cfg.patch_size;
    d_spec.validate();

    ModelParameters<float> g_params = generator_checkpoint.generator;
    DiscriminatorParameters<float> d_params;
    Optimizer<float> g_opt, d_opt;
    LoopState st;

    const bool resuming = !resume_state.empty();
    if (resuming) {
        const Archive ar = read_archive(resume_state);
        const json manifest = json::parse(ar.manifest_json);
        if (manifest.value("kind", "") != "train_state" || manifest.value("phase", "") != "gan")
            throw ConfigError(resume_state.string() + " is not a fine-tuning state");
        g_params = unpack_generator(spec, ar.arrays, "g/");
        d_params = unpack_discriminator(d_spec, ar.arrays, "d/");
        g_opt = Optimizer<float>(cfg.optimizer, cfg, trainable_arrays(g_params));
        d_opt = Optimizer<float>(cfg.optimizer, cfg, disc_trainable_arrays(d_params));
        g_opt.unpack(ar.arrays, "opt/g/");
        d_opt.unpack(ar.arrays, "opt/d/");
        st = loop_state_from_json(manifest.at("loop"));
    } else {
        d_params = init_discriminator<float>(d_spec, cfg.seed ^ 0x9e3779b9u, cfg.init_std);
        g_opt = Optimizer<float>(cfg.optimizer, cfg, trainable_arrays(g_params));
        d_opt = Optimizer<float>(cfg.optimizer, cfg, disc_trainable_arrays(d_params));
        st.lr = cfg.lr_finetune;
        st.data_rng.seed(static_cast<std::uint32_t>(cfg.seed) * 2654435761u + 1u);
    }

    ModelParameters<float> best_params = g_params;  // best-PSNR snapshot
    const fs::path log_dir = out_dir.empty() ? fs::path() : out_dir / "logs";
    const fs::path ckpt_dir = out_dir.empty() ? fs::path() : out_dir / "checkpoints";
    TrainLog log(log_dir, resuming);

    auto save_state = [&]() {
        if (out_dir.empty()) return;
        json manifest;
        manifest["kind"] = "train_state";
        manifest["phase"] = "gan";
        manifest["loop"] = loop_state_to_json(st);
        manifest["generator"] = detail::spec_to_json(spec);
        manifest["discriminator"] = detail::disc_spec_to_json(d_spec);
        std::vector<NamedArray> arrays = pack_generator(spec, g_params, "g/");
        auto d = pack_discriminator(d_spec, d_params, "d/");
        auto b = pack_generator(spec, best_params, "best/g/");
        auto gm = g_opt.pack("opt/g/");
        auto dm = d_opt.pack("opt/d/");
        for (auto* extra : {&d, &b, &gm, &dm})
            arrays.insert(arrays.end(), extra->begin(), extra->end());
        write_archive(out_dir / "state.vdbc", manifest.dump(2), arrays);
    };
    if (resuming) {
        const Archive ar = read_archive(resume_state);
        best_params = unpack_generator(spec, ar.arrays, "best/g/");
    }

    GeneratorTape<float> g_tape;
    DiscriminatorTape<float> d_tape_sharp, d_tape_fake, d_tape_g;
    ModelParameters<float> g_grads = make_zero_grads<float>(spec);
    auto d_grads = make_zero_disc_grads<float>(d_spec);
    auto g_grad_arrays = trainable_arrays(g_grads);
    auto d_grad_arrays = disc_trainable_arrays(d_grads);
    double last_loss = 0.0;
    bool stopped_early = false;

    while (st.step < cfg.max_steps && !stopped_early) {
        Batch batch = sample_batch(cfg, data, st.data_rng);

        // Generator forward once; the fake batch serves both updates.
        Tensor<float> fake = generator_train_forward(spec, g_params, batch.input, g_tape, true);

        // Discriminator update on sharp and generated batches.
        auto p_sharp =
            discriminator_train_forward(d_spec, d_params, batch.target, d_tape_sharp, true);
        auto p_fake = discriminator_train_forward(d_spec, d_params, fake, d_tape_fake, false);
        std::vector<float> d_ps, d_pf;
        const double d_loss = discriminator_loss_batch(p_sharp, p_fake, &d_ps, &d_pf);
        check_finite(d_loss, st.step, batch, "discriminator loss");
        for (auto* g : d_grad_arrays) std::fill(g->begin(), g->end(), 0.0f);
        discriminator_backward(d_spec, d_params, d_tape_sharp, d_ps, d_grads);
        discriminator_backward(d_spec, d_params, d_tape_fake, d_pf, d_grads);
        d_opt.step(st.lr, disc_trainable_arrays(d_params), d_grad_arrays, cfg.grad_clip);

        // Generator update against the refreshed discriminator.
        Tensor<float> d_fake_combined;
        const double content = content_loss_batch(fake, batch.target, &d_fake_combined);
        double adv = 0.0;
        if (cfg.alpha.alpha > 0.0) {
            auto p_g = discriminator_train_forward(d_spec, d_params, fake, d_tape_g, false);
            std::vector<float> d_p;
            adv = adversarial_loss_batch(p_g, &d_p);
            auto d_scratch = make_zero_disc_grads<float>(d_spec);
            Tensor<float> d_fake_adv;
            discriminator_backward(d_spec, d_params, d_tape_g, d_p, d_scratch, &d_fake_adv);
            const float a = static_cast<float>(cfg.alpha.alpha);
            for (std::size_t i = 0; i < d_fake_combined.v.size(); ++i)
                d_fake_combined.v[i] += a * d_fake_adv.v[i];
        }
        const double g_loss = combined_loss(content, adv, cfg.alpha);
        check_finite(g_loss, st.step, batch, "combined loss");
        last_loss = g_loss;
        for (auto* g : g_grad_arrays) std::fill(g->begin(), g->end(), 0.0f);
        generator_backward(spec, g_params, g_tape, d_fake_combined, g_grads);
        g_opt.step(st.lr, trainable_arrays(g_params), g_grad_arrays, cfg.grad_clip);

        const bool eval_now = !data.validation.empty() && (st.step + 1) % cfg.eval_every == 0;
        double val = 0.0;
        if (eval_now) {
            val = validation_psnr(spec, g_params, data.validation);
            if (!st.have_best_val || val > st.best_val_psnr) {
                st.best_val_psnr = val;
                st.have_best_val = true;
                st.best_val_step = st.step + 1;
                st.evals_since_best = 0;
                best_params = g_params;
            } else {
                ++st.evals_since_best;
                if (cfg.early_stop_evals > 0 && st.evals_since_best >= cfg.early_stop_evals)
                    stopped_early = true;
            }
        }
        log.row(st.step, content, &adv, &d_loss, st.lr, eval_now ? &val : nullptr);
        ++st.step;

        if (!out_dir.empty() && (st.step % cfg.checkpoint_every == 0 || st.step == cfg.max_steps ||
                                 stopped_early)) {
            save_state();
        }
    }

    if (!st.have_best_val) best_params = g_params;  // no validation: keep the final weights

    TrainResult result;
    result.final_loss = last_loss;
    result.best_val_psnr = st.best_val_psnr;
    result.steps_run = st.step;
    result.checkpoint.spec = spec;
    result.checkpoint.generator = std::move(best_params);
    result.checkpoint.disc_spec = d_spec;
    result.checkpoint.discriminator = d_params;
    result.checkpoint.step = st.step;
    if (!out_dir.empty()) {
        result.checkpoint_path = ckpt_dir / "gan.vdbc";
        save_checkpoint(result.checkpoint_path, result.checkpoint);
        save_state();
    }
    return result;
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace vdblur
