#include "vdblur/discriminator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace vdblur {

namespace {

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
    if (bias.empty()) return;  // convs under batch norm carry no bias
    const std::size_t plane = static_cast<std::size_t>(x.t) * x.h * x.w;
    for (int in = 0; in < x.n; ++in)
        for (int c = 0; c < x.c; ++c) {
            S* p = &x.v[x.index(in, c, 0, 0, 0)];
            for (std::size_t i = 0; i < plane; ++i) p[i] += bias[c];
        }
}

// Two-class softmax via the logit difference; numerically stable.
template <class S>
S p_real_from_logits(S z_real, S z_fake) {
    const S d = z_real - z_fake;
    if (d >= S(0)) {
        const S e = std::exp(-d);
        return S(1) / (S(1) + e);
    }
    const S e = std::exp(d);
    return e / (S(1) + e);
}

}  // namespace

DiscriminatorSpec DiscriminatorSpec::standard(int input_h, int input_w) {
    DiscriminatorSpec spec;
    spec.input_h = input_h;
    spec.input_w = input_w;
    spec.validate();
    return spec;
}

int DiscriminatorSpec::conv_layer_count() const {
    int n = 0;
    for (const auto& [count, ch] : conv_stages) n += count;
    return n;
}

std::vector<LayerDesc> DiscriminatorSpec::conv_layers() const {
    std::vector<LayerDesc> layers;
    int in_ch = 1;
    int id = 1;
    for (const auto& [count, channels] : conv_stages) {
        for (int j = 0; j < count; ++j) {
            LayerDesc l;
            l.id = id++;
            l.geom.in_channels = in_ch;
            l.geom.out_channels = channels;
            l.geom.kp = l.geom.kr = 3;
            l.geom.kq = 1;
            l.geom.spatial_padding = 1;
            l.geom.spatial_stride = (j == 0) ? 2 : 1;
            l.batch_norm = true;
            l.activation = Activation::ReLU;
            layers.push_back(l);
            in_ch = channels;
        }
    }
    return layers;
}

std::pair<int, int> DiscriminatorSpec::feature_hw() const {
    int h = input_h, w = input_w;
    for (const auto& l : conv_layers()) {
        h = l.geom.out_h(h);
        w = l.geom.out_w(w);
    }
    return {h, w};
}

int DiscriminatorSpec::flatten_size() const {
    const auto [h, w] = feature_hw();
    return conv_stages.back().second * h * w;
}

void DiscriminatorSpec::validate() const {
    if (conv_stages.empty()) throw ConfigError("discriminator needs at least one conv stage");
    for (const auto& [count, ch] : conv_stages)
        if (count < 1 || ch < 1) throw ConfigError("discriminator stage counts must be positive");
    if (fc.size() < 1 || fc.back() != 2)
        throw ConfigError("discriminator FC head must end in width 2");
    const auto [h, w] = feature_hw();
    if (h < 1 || w < 1)
        throw ConfigError("discriminator input " + std::to_string(input_h) + "x" +
                          std::to_string(input_w) + " collapses below 1x1 at the FC head");
}

template <class S>
DiscriminatorParameters<S> init_discriminator(const DiscriminatorSpec& spec, std::uint64_t seed,
                                              double stddev) {
    spec.validate();
    NormalSampler sampler(seed);
    DiscriminatorParameters<S> params;
    for (const auto& l : spec.conv_layers()) {
        LayerParams<S> lp;
        lp.kernels.resize(l.geom.kernel_count());
        for (auto& k : lp.kernels) k = static_cast<S>(sampler.next(stddev));
        lp.bn_scale.assign(l.geom.out_channels, S(1));
        lp.bn_shift.assign(l.geom.out_channels, S(0));
        lp.bn_mean.assign(l.geom.out_channels, S(0));
        lp.bn_var.assign(l.geom.out_channels, S(1));
        params.convs.emplace(l.id, std::move(lp));
    }
    int in_dim = spec.flatten_size();
    for (int width : spec.fc) {
        FcParams<S> f;
        f.in = in_dim;
        f.out = width;
        f.weight.resize(static_cast<std::size_t>(width) * in_dim);
        for (auto& v : f.weight) v = static_cast<S>(sampler.next(stddev));
        f.bias.assign(width, S(0));
        params.fc.push_back(std::move(f));
        in_dim = width;
    }
    return params;
}

template <class S>
std::vector<S> discriminator_train_forward(const DiscriminatorSpec& spec,
                                           DiscriminatorParameters<S>& params,
                                           const Tensor<S>& input, DiscriminatorTape<S>& tape,
                                           bool update_running_stats) {
    if (input.h != spec.input_h || input.w != spec.input_w)
        throw ConfigError("discriminator input is " + std::to_string(input.h) + "x" +
                          std::to_string(input.w) + ", spec expects " +
                          std::to_string(spec.input_h) + "x" + std::to_string(spec.input_w));
    const auto layers = spec.conv_layers();
    const std::size_t nC = layers.size();
    tape.input = input;
    tape.conv_out.assign(nC, Tensor<S>());
    tape.out.assign(nC, Tensor<S>());
    tape.bn.assign(nC, BatchNormStats<S>());

    const Tensor<S>* cur = &input;
    for (std::size_t i = 0; i < nC; ++i) {
        const LayerDesc& l = layers[i];
        LayerParams<S>& lp = params.convs.at(l.id);
        Tensor<S> x;
        conv3d_raw(*cur, l.geom, lp.kernels.data(), x);
        add_bias(x, lp.bias);
        tape.conv_out[i] = x;
        batchnorm_forward_train(x, lp.bn_scale.data(), lp.bn_shift.data(), tape.bn[i],
                                lp.bn_mean.data(), lp.bn_var.data(), update_running_stats);
        for (auto& v : x.v) v = std::max(S(0), v);
        tape.out[i] = std::move(x);
        cur = &tape.out[i];
    }

    // FC head: flatten, hidden layers with ReLU, final layer to 2 logits.
    const int N = input.n;
    const Tensor<S>& feat = tape.out.back();
    const int flat = spec.flatten_size();
    tape.fc_in.assign(params.fc.size(), {});
    std::vector<S> a(static_cast<std::size_t>(N) * flat);
    for (int in = 0; in < N; ++in)
        std::copy(feat.v.begin() + in * static_cast<std::ptrdiff_t>(flat),
                  feat.v.begin() + (in + 1) * static_cast<std::ptrdiff_t>(flat),
                  a.begin() + in * static_cast<std::ptrdiff_t>(flat));

    for (std::size_t li = 0; li < params.fc.size(); ++li) {
        const FcParams<S>& f = params.fc[li];
        tape.fc_in[li] = a;
        std::vector<S> z(static_cast<std::size_t>(N) * f.out);
#pragma omp parallel for collapse(2) schedule(static)
        for (int in = 0; in < N; ++in) {
            for (int o = 0; o < f.out; ++o) {
                const S* w = &f.weight[static_cast<std::size_t>(o) * f.in];
                const S* av = &a[static_cast<std::size_t>(in) * f.in];
                S acc = f.bias[o];
                for (int k = 0; k < f.in; ++k) acc += w[k] * av[k];
                z[static_cast<std::size_t>(in) * f.out + o] = acc;
            }
        }
        if (li + 1 < params.fc.size())
            for (auto& v : z) v = std::max(S(0), v);  // hidden FC uses ReLU
        a = std::move(z);
    }

    tape.logits = a;
    tape.p_real.resize(N);
    for (int in = 0; in < N; ++in)
        tape.p_real[in] = p_real_from_logits(a[2 * in], a[2 * in + 1]);
    return tape.p_real;
}

template <class S>
DiscriminatorParameters<S> make_zero_disc_grads(const DiscriminatorSpec& spec) {
    DiscriminatorParameters<S> g;
    for (const auto& l : spec.conv_layers()) {
        LayerParams<S> lp;
        lp.kernels.assign(l.geom.kernel_count(), S(0));
        lp.bn_scale.assign(l.geom.out_channels, S(0));
        lp.bn_shift.assign(l.geom.out_channels, S(0));
        g.convs.emplace(l.id, std::move(lp));
    }
    int in_dim = spec.flatten_size();
    for (int width : spec.fc) {
        FcParams<S> f;
        f.in = in_dim;
        f.out = width;
        f.weight.assign(static_cast<std::size_t>(width) * in_dim, S(0));
        f.bias.assign(width, S(0));
        g.fc.push_back(std::move(f));
        in_dim = width;
    }
    return g;
}

template <class S>
void discriminator_backward(const DiscriminatorSpec& spec,
                            const DiscriminatorParameters<S>& params,
                            const DiscriminatorTape<S>& tape, const std::vector<S>& d_p_real,
                            DiscriminatorParameters<S>& grads, Tensor<S>* d_input) {
    const int N = tape.input.n;

    // Softmax backward: p = sigmoid(z_real - z_fake).
    std::vector<S> g(static_cast<std::size_t>(N) * 2);
    for (int in = 0; in < N; ++in) {
        const S p = tape.p_real[in];
        const S dp = d_p_real[in] * p * (S(1) - p);
        g[2 * in] = dp;
        g[2 * in + 1] = -dp;
    }

    // FC layers in reverse.
    for (std::size_t li = params.fc.size(); li-- > 0;) {
        const FcParams<S>& f = params.fc[li];
        FcParams<S>& fg = grads.fc[li];
        const std::vector<S>& a = tape.fc_in[li];

        if (li + 1 < params.fc.size()) {
            // g currently holds d(post-ReLU); mask by the sign of z, which
            // equals the sign of the next layer's input activation.
            const std::vector<S>& relu_out = tape.fc_in[li + 1];
            for (std::size_t i = 0; i < g.size(); ++i)
                if (relu_out[i] <= S(0)) g[i] = S(0);
        }

#pragma omp parallel for schedule(static)
        for (int o = 0; o < f.out; ++o) {
            S bacc = S(0);
            S* wg = &fg.weight[static_cast<std::size_t>(o) * f.in];
            for (int in = 0; in < N; ++in) {
                const S go = g[static_cast<std::size_t>(in) * f.out + o];
                bacc += go;
                const S* av = &a[static_cast<std::size_t>(in) * f.in];
                for (int k = 0; k < f.in; ++k) wg[k] += go * av[k];
            }
            fg.bias[o] += bacc;
        }

        std::vector<S> da(static_cast<std::size_t>(N) * f.in, S(0));
#pragma omp parallel for collapse(2) schedule(static)
        for (int in = 0; in < N; ++in) {
            for (int k = 0; k < f.in; ++k) {
                S acc = S(0);
                for (int o = 0; o < f.out; ++o)
                    acc += f.weight[static_cast<std::size_t>(o) * f.in + k] *
                           g[static_cast<std::size_t>(in) * f.out + o];
                da[static_cast<std::size_t>(in) * f.in + k] = acc;
            }
        }
        g = std::move(da);
    }

    // Unflatten into the conv feature gradient.
    const auto layers = spec.conv_layers();
    const Tensor<S>& feat = tape.out.back();
    Tensor<S> d_feat(feat.n, feat.c, feat.t, feat.h, feat.w);
    std::copy(g.begin(), g.end(), d_feat.v.begin());

    for (std::size_t ii = layers.size(); ii-- > 0;) {
        const LayerDesc& l = layers[ii];
        const LayerParams<S>& lp = params.convs.at(l.id);
        LayerParams<S>& gp = grads.convs.at(l.id);

        const Tensor<S>& out = tape.out[ii];
        for (std::size_t i = 0; i < d_feat.v.size(); ++i)
            if (out.v[i] <= S(0)) d_feat.v[i] = S(0);
        batchnorm_backward(d_feat, tape.conv_out[ii], lp.bn_scale.data(), tape.bn[ii],
                           gp.bn_scale.data(), gp.bn_shift.data());

        const Tensor<S>& layer_in = (ii == 0) ? tape.input : tape.out[ii - 1];
        conv3d_backward_params(layer_in, d_feat, l.geom, gp.kernels.data(),
                               static_cast<S*>(nullptr));

        if (ii > 0) {
            Tensor<S> d_in(layer_in.n, layer_in.c, layer_in.t, layer_in.h, layer_in.w);
            conv3d_backward_input(d_feat, l.geom, lp.kernels.data(), d_in);
            d_feat = std::move(d_in);
        } else if (d_input != nullptr) {
            *d_input = Tensor<S>(layer_in.n, layer_in.c, layer_in.t, layer_in.h, layer_in.w);
            conv3d_backward_input(d_feat, l.geom, lp.kernels.data(), *d_input);
        }
    }
}

template <class S>
std::pair<S, S> discriminator_forward(const DiscriminatorSpec& spec,
                                      const DiscriminatorParameters<S>& params,
                                      const Plane<S>& frame) {
    if (frame.h != spec.input_h || frame.w != spec.input_w)
        throw ConfigError("discriminator input is " + std::to_string(frame.h) + "x" +
                          std::to_string(frame.w) + ", spec expects " +
                          std::to_string(spec.input_h) + "x" + std::to_string(spec.input_w));
    Tensor<S> x(1, 1, 1, frame.h, frame.w);
    std::copy(frame.v.begin(), frame.v.end(), x.v.begin());

    for (const auto& l : spec.conv_layers()) {
        const LayerParams<S>& lp = params.convs.at(l.id);
        Tensor<S> y;
        conv3d_raw(x, l.geom, lp.kernels.data(), y);
        add_bias(y, lp.bias);
        batchnorm_forward_inference(y, lp.bn_scale.data(), lp.bn_shift.data(), lp.bn_mean.data(),
                                    lp.bn_var.data());
        for (auto& v : y.v) v = std::max(S(0), v);
        x = std::move(y);
    }

    std::vector<S> a(x.v.begin(), x.v.end());
    for (std::size_t li = 0; li < params.fc.size(); ++li) {
        const FcParams<S>& f = params.fc[li];
        std::vector<S> z(f.out);
        for (int o = 0; o < f.out; ++o) {
            const S* w = &f.weight[static_cast<std::size_t>(o) * f.in];
            S acc = f.bias[o];
            for (int k = 0; k < f.in; ++k) acc += w[k] * a[k];
            z[o] = acc;
        }
        if (li + 1 < params.fc.size())
            for (auto& v : z) v = std::max(S(0), v);
        a = std::move(z);
    }
    const S p = p_real_from_logits(a[0], a[1]);
    return {p, S(1) - p};
}

template DiscriminatorParameters<float> init_discriminator(const DiscriminatorSpec&, std::uint64_t,
                                                           double);
template DiscriminatorParameters<double> init_discriminator(const DiscriminatorSpec&,
                                                            std::uint64_t, double);
template std::vector<float> discriminator_train_forward(const DiscriminatorSpec&,
                                                        DiscriminatorParameters<float>&,
                                                        const Tensor<float>&,
                                                        DiscriminatorTape<float>&, bool);
template std::vector<double> discriminator_train_forward(const DiscriminatorSpec&,
                                                         DiscriminatorParameters<double>&,
                                                         const Tensor<double>&,
                                                         DiscriminatorTape<double>&, bool);
template void discriminator_backward(const DiscriminatorSpec&,
                                     const DiscriminatorParameters<float>&,
                                     const DiscriminatorTape<float>&, const std::vector<float>&,
                                     DiscriminatorParameters<float>&, Tensor<float>*);
template void discriminator_backward(const DiscriminatorSpec&,
                                     const DiscriminatorParameters<double>&,
                                     const DiscriminatorTape<double>&, const std::vector<double>&,
                                     DiscriminatorParameters<double>&, Tensor<double>*);
template <class S>
std::vector<std::vector<S>*> disc_trainable_arrays(DiscriminatorParameters<S>& params) {
    std::vector<std::vector<S>*> arrays;
    for (auto& [id, lp] : params.convs) {
        arrays.push_back(&lp.kernels);
        arrays.push_back(&lp.bn_scale);
        arrays.push_back(&lp.bn_shift);
    }
    for (auto& f : params.fc) {
        arrays.push_back(&f.weight);
        arrays.push_back(&f.bias);
    }
    return arrays;
}

template DiscriminatorParameters<float> make_zero_disc_grads(const DiscriminatorSpec&);
template DiscriminatorParameters<double> make_zero_disc_grads(const DiscriminatorSpec&);
template std::vector<std::vector<float>*> disc_trainable_arrays(DiscriminatorParameters<float>&);
template std::vector<std::vector<double>*> disc_trainable_arrays(DiscriminatorParameters<double>&);
template std::pair<float, float> discriminator_forward(const DiscriminatorSpec&,
                                                       const DiscriminatorParameters<float>&,
                                                       const Plane<float>&);
template std::pair<double, double> discriminator_forward(const DiscriminatorSpec&,
                                                         const DiscriminatorParameters<double>&,
                                                         const Plane<double>&);

}  // namespace vdblur
