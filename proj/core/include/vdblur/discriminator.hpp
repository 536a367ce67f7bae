#ifndef VDBLUR_DISCRIMINATOR_HPP
#define VDBLUR_DISCRIMINATOR_HPP

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "vdblur/batchnorm.hpp"
#include "vdblur/network.hpp"

namespace vdblur {

// VGG-like binary classifier: stacked 3x3 conv stages with BN+ReLU, one
// stride-2 reduction at the start of each stage, then FC layers and a
// two-way softmax. Scores a luma frame as real-sharp versus generated.
struct DiscriminatorSpec {
    std::vector<std::pair<int, int>> conv_stages{{2, 64}, {3, 128}, {4, 256}, {5, 512}};
    std::vector<int> fc{4096, 2};
    int input_h = 128;
    int input_w = 128;

    static DiscriminatorSpec standard(int input_h, int input_w);

    int conv_layer_count() const;
    std::vector<LayerDesc> conv_layers() const;  // derived; ids are 1-based
    std::pair<int, int> feature_hw() const;      // spatial extent entering the FC head
    int flatten_size() const;
    void validate() const;
};

template <class S>
struct FcParams {
    int in = 0, out = 0;
    std::vector<S> weight;  // out x in
    std::vector<S> bias;    // out
};

template <class S>
struct DiscriminatorParameters {
    std::map<int, LayerParams<S>> convs;
    std::vector<FcParams<S>> fc;

    template <class U>
    DiscriminatorParameters<U> cast() const {
        DiscriminatorParameters<U> r;
        for (const auto& [id, lp] : convs) {
            LayerParams<U> u;
            u.kernels.assign(lp.kernels.begin(), lp.kernels.end());
            u.bias.assign(lp.bias.begin(), lp.bias.end());
            u.bn_scale.assign(lp.bn_scale.begin(), lp.bn_scale.end());
            u.bn_shift.assign(lp.bn_shift.begin(), lp.bn_shift.end());
            u.bn_mean.assign(lp.bn_mean.begin(), lp.bn_mean.end());
            u.bn_var.assign(lp.bn_var.begin(), lp.bn_var.end());
            r.convs.emplace(id, std::move(u));
        }
        for (const auto& f : fc) {
            FcParams<U> u;
            u.in = f.in;
            u.out = f.out;
            u.weight.assign(f.weight.begin(), f.weight.end());
            u.bias.assign(f.bias.begin(), f.bias.end());
            r.fc.push_back(std::move(u));
        }
        return r;
    }
};

template <class S>
struct DiscriminatorTape {
    Tensor<S> input;
    std::vector<Tensor<S>> conv_out, out;
    std::vector<BatchNormStats<S>> bn;
    std::vector<std::vector<S>> fc_in;  // activation entering each FC layer, [n * in]
    std::vector<S> logits;              // [n * 2]
    std::vector<S> p_real;              // [n]
};

template <class S>
DiscriminatorParameters<S> init_discriminator(const DiscriminatorSpec& spec, std::uint64_t seed,
                                              double stddev = 0.01);

// Training-mode batched forward; returns p_real per sample.
template <class S>
std::vector<S> discriminator_train_forward(const DiscriminatorSpec& spec,
                                           DiscriminatorParameters<S>& params,
                                           const Tensor<S>& input, DiscriminatorTape<S>& tape,
                                           bool update_running_stats);

// Backward from per-sample d(loss)/d(p_real). Accumulates parameter
// gradients; optionally returns the gradient w.r.t. the input frames.
template <class S>
void discriminator_backward(const DiscriminatorSpec& spec,
                            const DiscriminatorParameters<S>& params,
                            const DiscriminatorTape<S>& tape, const std::vector<S>& d_p_real,
                            DiscriminatorParameters<S>& grads, Tensor<S>* d_input = nullptr);

template <class S>
DiscriminatorParameters<S> make_zero_disc_grads(const DiscriminatorSpec& spec);

// Trainable arrays in a canonical order, matching trainable_arrays() for the
// generator (conv layers first, then FC weight/bias pairs).
template <class S>
std::vector<std::vector<S>*> disc_trainable_arrays(DiscriminatorParameters<S>& params);

// Scores a single luma frame with running statistics.
// Returns (p_real, p_fake); the pair sums to 1.
template <class S>
std::pair<S, S> discriminator_forward(const DiscriminatorSpec& spec,
                                      const DiscriminatorParameters<S>& params,
                                      const Plane<S>& frame);

extern template DiscriminatorParameters<float> init_discriminator(const DiscriminatorSpec&,
                                                                  std::uint64_t, double);
extern template DiscriminatorParameters<double> init_discriminator(const DiscriminatorSpec&,
                                                                   std::uint64_t, double);
extern template std::vector<float> discriminator_train_forward(const DiscriminatorSpec&,
                                                               DiscriminatorParameters<float>&,
                                                               const Tensor<float>&,
                                                               DiscriminatorTape<float>&, bool);
extern template std::vector<double> discriminator_train_forward(const DiscriminatorSpec&,
                                                                DiscriminatorParameters<double>&,
                                                                const Tensor<double>&,
                                                                DiscriminatorTape<double>&, bool);
extern template void discriminator_backward(const DiscriminatorSpec&,
                                            const DiscriminatorParameters<float>&,
                                            const DiscriminatorTape<float>&,
                                            const std::vector<float>&,
                                            DiscriminatorParameters<float>&, Tensor<float>*);
extern template void discriminator_backward(const DiscriminatorSpec&,
                                            const DiscriminatorParameters<double>&,
                                            const DiscriminatorTape<double>&,
                                            const std::vector<double>&,
                                            DiscriminatorParameters<double>&, Tensor<double>*);
extern template DiscriminatorParameters<float> make_zero_disc_grads(const DiscriminatorSpec&);
extern template DiscriminatorParameters<double> make_zero_disc_grads(const DiscriminatorSpec&);
extern template std::vector<std::vector<float>*> disc_trainable_arrays(
    DiscriminatorParameters<float>&);
extern template std::vector<std::vector<double>*> disc_trainable_arrays(
    DiscriminatorParameters<double>&);
extern template std::pair<float, float> discriminator_forward(const DiscriminatorSpec&,
                                                              const DiscriminatorParameters<float>&,
                                                              const Plane<float>&);
extern template std::pair<double, double> discriminator_forward(
    const DiscriminatorSpec&, const DiscriminatorParameters<double>&, const Plane<double>&);

}  // namespace vdblur

#endif
