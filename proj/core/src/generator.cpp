#include "vdblur/generator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "vdblur/color.hpp"

namespace vdblur {

namespace {

// Box-Muller over mt19937 so the draw sequence does not depend on the
// standard library's distribution implementation.
class NormalSampler {
  public:
    explicit NormalSampler(std::uint64_t seed) : rng_(static_cast<std::uint32_t>(seed)) {}

    double next(double stddev) {
        if (have_spare_) {
            have_spare_ = false;
            return spare_ * stddev;
        }
        const double u1 = (static_cast<double>(rng_()) + 1.0) / 4294967297.0;
        const double u2 = (static_cast<double>(rng_()) + 1.0) / 4294967297.0;
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * 3.14159265358979323846 * u2);
        have_spare_ = true;
        return mag * std::cos(2.0 * 3.14159265358979323846 * u2) * stddev;
    }

  private:
    std::mt19937 rng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

template <class S>
void add_bias(Tensor<S>& x, const std::vector<S>& bias) {
    if (bias.empty()) return;  // BN layers carry no bias
    const std::size_t plane = static_cast<std::size_t>(x.t) * x.h * x.w;
    for (int in = 0; in < x.n; ++in) {
        for (int c = 0; c < x.c; ++c) {
            S* p = &x.v[x.index(in, c, 0, 0, 0)];
            const S b = bias[c];
            for (std::size_t i = 0; i < plane; ++i) p[i] += b;
        }
    }
}

template <class S>
void add_tensor(Tensor<S>& x, const Tensor<S>& y, const std::string& what) {
    if (!x.same_shape(y))
        throw ConfigError(what + ": skip shapes differ, " + x.shape_str() + " vs " +
                          y.shape_str());
    for (std::size_t i = 0; i < x.v.size(); ++i) x.v[i] += y.v[i];
}

template <class S>
void relu_inplace(Tensor<S>& x) {
    for (auto& v : x.v) v = std::max(S(0), v);
}

}  // namespace

template <class S>
ModelParameters<S> init_weights(const NetworkSpec& spec, std::uint64_t seed, double stddev) {
    NormalSampler sampler(seed);
    ModelParameters<S> params;
    for (const auto& l : spec.layers) {
        LayerParams<S> lp;
        lp.kernels.resize(l.geom.kernel_count());
        for (auto& k : lp.kernels) k = static_cast<S>(sampler.next(stddev));
        if (l.batch_norm) {
            lp.bn_scale.assign(l.geom.out_channels, S(1));
            lp.bn_shift.assign(l.geom.out_channels, S(0));
            lp.bn_mean.assign(l.geom.out_channels, S(0));
            lp.bn_var.assign(l.geom.out_channels, S(1));
        } else {
            lp.bias.assign(l.geom.out_channels, S(0));
        }
        params.layers.emplace(l.id, std::move(lp));
    }
    return params;
}

template <class S>
Tensor<S> window_input(const NetworkSpec& spec, const FrameWindow& window) {
    const int T = window.T();
    const int H = window.height(), W = window.width();
    if (spec.variant != Variant::Single2D && T != spec.window_T)
        throw ConfigError("window has T=" + std::to_string(T) + ", spec expects T=" +
                          std::to_string(spec.window_T));

    auto copy_plane = [&](Tensor<S>& dst, int c, int t, const Plane<float>& p) {
        S* d = &dst.v[dst.index(0, c, t, 0, 0)];
        for (std::size_t i = 0; i < p.v.size(); ++i) d[i] = static_cast<S>(p.v[i]);
    };

    switch (spec.variant) {
        case Variant::Net3D: {
            Tensor<S> in(1, 1, T, H, W);
            for (int t = 0; t < T; ++t) copy_plane(in, 0, t, window.luma[t]);
            return in;
        }
        case Variant::Multi2D: {
            Tensor<S> in(1, T, 1, H, W);
            for (int t = 0; t < T; ++t) copy_plane(in, t, 0, window.luma[t]);
            return in;
        }
        case Variant::Single2D: {
            Tensor<S> in(1, 1, 1, H, W);
            copy_plane(in, 0, 0, window.center_luma());
            return in;
        }
    }
    throw ConfigError("unreachable variant");
}

template <class S>
Tensor<S> generator_train_forward(const NetworkSpec& spec, ModelParameters<S>& params,
                                  const Tensor<S>& input, GeneratorTape<S>& tape,
                                  bool update_running_stats) {
    const std::size_t nL = spec.layers.size();
    tape.input = input;
    tape.conv_out.assign(nL, Tensor<S>());
    tape.out.assign(nL, Tensor<S>());
    tape.bn.assign(nL, BatchNormStats<S>());

    const Tensor<S>* cur = &input;
    for (std::size_t i = 0; i < nL; ++i) {
        const LayerDesc& l = spec.layers[i];
        LayerParams<S>& lp = params.layers.at(l.id);
        const std::string name = "L" + std::to_string(l.id);
        detail::check_conv_input(l.geom, cur->c, cur->t, cur->h, cur->w, name);

        Tensor<S> x;
        conv3d_raw(*cur, l.geom, lp.kernels.data(), x);
        add_bias(x, lp.bias);
        if (l.batch_norm) {
            tape.conv_out[i] = x;  // BN input, needed for backward
            batchnorm_forward_train(x, lp.bn_scale.data(), lp.bn_shift.data(), tape.bn[i],
                                    lp.bn_mean.data(), lp.bn_var.data(), update_running_stats);
        }
        for (int src : l.skip_from) {
            const auto idx = static_cast<std::size_t>(src - spec.layers.front().id);
            add_tensor(x, tape.out[idx], name);
        }
        if (l.activation == Activation::ReLU) relu_inplace(x);
        tape.out[i] = std::move(x);
        cur = &tape.out[i];
    }
    return tape.out.back();
}

template <class S>
Tensor<S> generator_infer_forward(const NetworkSpec& spec, const ModelParameters<S>& params,
                                  const Tensor<S>& input) {
    const std::size_t nL = spec.layers.size();

    // Retain a layer's output only while a later layer still consumes it.
    std::vector<int> remaining(nL, 0);
    for (std::size_t i = 0; i + 1 < nL; ++i) remaining[i] = 1;  // sequential consumer
    for (const auto& l : spec.layers)
        for (int src : l.skip_from) remaining[static_cast<std::size_t>(src - spec.layers.front().id)]++;

    std::vector<Tensor<S>> kept(nL);
    Tensor<S> cur = input;
    for (std::size_t i = 0; i < nL; ++i) {
        const LayerDesc& l = spec.layers[i];
        const LayerParams<S>& lp = params.layers.at(l.id);
        const std::string name = "L" + std::to_string(l.id);
        detail::check_conv_input(l.geom, cur.c, cur.t, cur.h, cur.w, name);

        Tensor<S> x;
        conv3d_raw(cur, l.geom, lp.kernels.data(), x);
        add_bias(x, lp.bias);
        if (l.batch_norm)
            batchnorm_forward_inference(x, lp.bn_scale.data(), lp.bn_shift.data(),
                                        lp.bn_mean.data(), lp.bn_var.data());
        for (int src : l.skip_from) {
            const auto idx = static_cast<std::size_t>(src - spec.layers.front().id);
            add_tensor(x, kept[idx], name);
            if (--remaining[idx] == 0) kept[idx] = Tensor<S>();
        }
        if (l.activation == Activation::ReLU) relu_inplace(x);

        if (i + 1 == nL) return x;
        if (remaining[i] > 1) {
            kept[i] = x;  // also a skip source
            --remaining[i];
            cur = std::move(x);
        } else {
            cur = std::move(x);
        }
    }
    return cur;
}

template <class S>
ModelParameters<S> make_zero_grads(const NetworkSpec& spec) {
    ModelParameters<S> g;
    for (const auto& l : spec.layers) {
        LayerParams<S> lp;
        lp.kernels.assign(l.geom.kernel_count(), S(0));
        if (l.batch_norm) {
            lp.bn_scale.assign(l.geom.out_channels, S(0));
            lp.bn_shift.assign(l.geom.out_channels, S(0));
        } else {
            lp.bias.assign(l.geom.out_channels, S(0));
        }
        g.layers.emplace(l.id, std::move(lp));
    }
    return g;
}

template <class S>
void generator_backward(const NetworkSpec& spec, const ModelParameters<S>& params,
                        const GeneratorTape<S>& tape, const Tensor<S>& d_output,
                        ModelParameters<S>& grads, Tensor<S>* d_input) {
    const std::size_t nL = spec.layers.size();
    std::vector<Tensor<S>> d_acc(nL);
    d_acc[nL - 1] = d_output;

    auto accumulate = [](Tensor<S>& dst, const Tensor<S>& src) {
        if (dst.empty()) {
            dst = src;
        } else {
            for (std::size_t i = 0; i < dst.v.size(); ++i) dst.v[i] += src.v[i];
        }
    };

    for (std::size_t ii = nL; ii-- > 0;) {
        const LayerDesc& l = spec.layers[ii];
        const LayerParams<S>& lp = params.layers.at(l.id);
        LayerParams<S>& gp = grads.layers.at(l.id);

        Tensor<S> g = std::move(d_acc[ii]);
        if (l.activation == Activation::ReLU) {
            const Tensor<S>& out = tape.out[ii];
            for (std::size_t i = 0; i < g.v.size(); ++i)
                if (out.v[i] <= S(0)) g.v[i] = S(0);
        }
        // g is now the gradient at the post-skip value; it flows unchanged
        // into every skip source.
        for (int src : l.skip_from)
            accumulate(d_acc[static_cast<std::size_t>(src - spec.layers.front().id)], g);
        if (l.batch_norm)
            batchnorm_backward(g, tape.conv_out[ii], lp.bn_scale.data(), tape.bn[ii],
                               gp.bn_scale.data(), gp.bn_shift.data());

        const Tensor<S>& layer_in = (ii == 0) ? tape.input : tape.out[ii - 1];
        conv3d_backward_params(layer_in, g, l.geom, gp.kernels.data(),
                               gp.bias.empty() ? nullptr : gp.bias.data());

        if (ii > 0) {
            Tensor<S> d_in(layer_in.n, layer_in.c, layer_in.t, layer_in.h, layer_in.w);
            conv3d_backward_input(g, l.geom, lp.kernels.data(), d_in);
            accumulate(d_acc[ii - 1], d_in);
        } else if (d_input != nullptr) {
            *d_input = Tensor<S>(layer_in.n, layer_in.c, layer_in.t, layer_in.h, layer_in.w);
            conv3d_backward_input(g, l.geom, lp.kernels.data(), *d_input);
        }
    }
}

template <class S>
Plane<S> generator_forward(const NetworkSpec& spec, const ModelParameters<S>& params,
                           const FrameWindow& window) {
    validate_parameters(spec, params);
    Tensor<S> in = window_input<S>(spec, window);
    Tensor<S> out = generator_infer_forward(spec, params, in);
    Plane<S> luma(out.h, out.w);
    for (std::size_t i = 0; i < luma.v.size(); ++i)
        luma.v[i] = std::clamp(out.v[i], S(0), S(1));
    return luma;
}

Image recombine(const Plane<float>& luma_out, const FrameWindow& window) {
    return ycbcr_to_rgb(luma_out, window.chroma_cb, window.chroma_cr);
}

template ModelParameters<float> init_weights(const NetworkSpec&, std::uint64_t, double);
template ModelParameters<double> init_weights(const NetworkSpec&, std::uint64_t, double);
template Tensor<float> window_input(const NetworkSpec&, const FrameWindow&);
template Tensor<double> window_input(const NetworkSpec&, const FrameWindow&);
template Tensor<float> generator_train_forward(const NetworkSpec&, ModelParameters<float>&,
                                               const Tensor<float>&, GeneratorTape<float>&, bool);
template Tensor<double> generator_train_forward(const NetworkSpec&, ModelParameters<double>&,
                                                const Tensor<double>&, GeneratorTape<double>&,
                                                bool);
template Tensor<float> generator_infer_forward(const NetworkSpec&, const ModelParameters<float>&,
                                               const Tensor<float>&);
template Tensor<double> generator_infer_forward(const NetworkSpec&, const ModelParameters<double>&,
                                                const Tensor<double>&);
template void generator_backward(const NetworkSpec&, const ModelParameters<float>&,
                                 const GeneratorTape<float>&, const Tensor<float>&,
                                 ModelParameters<float>&, Tensor<float>*);
template void generator_backward(const NetworkSpec&, const ModelParameters<double>&,
                                 const GeneratorTape<double>&, const Tensor<double>&,
                                 ModelParameters<double>&, Tensor<double>*);
template ModelParameters<float> make_zero_grads(const NetworkSpec&);
template ModelParameters<double> make_zero_grads(const NetworkSpec&);
template Plane<float> generator_forward(const NetworkSpec&, const ModelParameters<float>&,
                                        const FrameWindow&);
template Plane<double> generator_forward(const NetworkSpec&, const ModelParameters<double>&,
                                         const FrameWindow&);

}  // namespace vdblur
