#ifndef VDBLUR_GENERATOR_HPP
#define VDBLUR_GENERATOR_HPP

#include <cstdint>
#include <vector>

#include "vdblur/batchnorm.hpp"
#include "vdblur/image.hpp"
#include "vdblur/network.hpp"

namespace vdblur {

// Activation cache kept during a training-mode forward pass, consumed by the
// backward pass. Index i corresponds to spec.layers[i].
template <class S>
struct GeneratorTape {
    Tensor<S> input;
    std::vector<Tensor<S>> conv_out;  // conv + bias, kept only for BN layers
    std::vector<Tensor<S>> out;       // layer output (post BN/skips/activation)
    std::vector<BatchNormStats<S>> bn;
};

// Gaussian(0, std^2) kernels, zero biases, unit batch-norm scale; the draw
// sequence is fixed (own Box-Muller over mt19937) so a seed reproduces the
// same parameters on any platform.
template <class S>
ModelParameters<S> init_weights(const NetworkSpec& spec, std::uint64_t seed, double stddev = 0.01);

// Arranges a frame window as the generator input tensor for the variant:
// net3d 1xTxHxW, multi2d Tx1xHxW, single2d the center frame as 1x1xHxW.
template <class S>
Tensor<S> window_input(const NetworkSpec& spec, const FrameWindow& window);

// Batched forward in training mode (batch statistics; activations taped).
template <class S>
Tensor<S> generator_train_forward(const NetworkSpec& spec, ModelParameters<S>& params,
                                  const Tensor<S>& input, GeneratorTape<S>& tape,
                                  bool update_running_stats);

// Batched forward in inference mode (running statistics, minimal retention).
template <class S>
Tensor<S> generator_infer_forward(const NetworkSpec& spec, const ModelParameters<S>& params,
                                  const Tensor<S>& input);

// Accumulates parameter gradients for d(loss)/d(output); optionally returns
// the gradient w.r.t. the network input.
template <class S>
void generator_backward(const NetworkSpec& spec, const ModelParameters<S>& params,
                        const GeneratorTape<S>& tape, const Tensor<S>& d_output,
                        ModelParameters<S>& grads, Tensor<S>* d_input = nullptr);

// Zero-valued gradient arrays shaped like the spec's parameters.
template <class S>
ModelParameters<S> make_zero_grads(const NetworkSpec& spec);

// Restores the deblurred center frame for one window: inference mode,
// output clamped to [0,1].
template <class S>
Plane<S> generator_forward(const NetworkSpec& spec, const ModelParameters<S>& params,
                           const FrameWindow& window);

// YCbCr -> RGB recombination of the restored luma with the window's chroma.
Image recombine(const Plane<float>& luma_out, const FrameWindow& window);

extern template ModelParameters<float> init_weights(const NetworkSpec&, std::uint64_t, double);
extern template ModelParameters<double> init_weights(const NetworkSpec&, std::uint64_t, double);
extern template Tensor<float> window_input(const NetworkSpec&, const FrameWindow&);
extern template Tensor<double> window_input(const NetworkSpec&, const FrameWindow&);
extern template Tensor<float> generator_train_forward(const NetworkSpec&, ModelParameters<float>&,
                                                      const Tensor<float>&, GeneratorTape<float>&,
                                                      bool);
extern template Tensor<double> generator_train_forward(const NetworkSpec&,
                                                       ModelParameters<double>&,
                                                       const Tensor<double>&,
                                                       GeneratorTape<double>&, bool);
extern template Tensor<float> generator_infer_forward(const NetworkSpec&,
                                                      const ModelParameters<float>&,
                                                      const Tensor<float>&);
extern template Tensor<double> generator_infer_forward(const NetworkSpec&,
                                                       const ModelParameters<double>&,
                                                       const Tensor<double>&);
extern template void generator_backward(const NetworkSpec&, const ModelParameters<float>&,
                                        const GeneratorTape<float>&, const Tensor<float>&,
                                        ModelParameters<float>&, Tensor<float>*);
extern template void generator_backward(const NetworkSpec&, const ModelParameters<double>&,
                                        const GeneratorTape<double>&, const Tensor<double>&,
                                        ModelParameters<double>&, Tensor<double>*);
extern template ModelParameters<float> make_zero_grads(const NetworkSpec&);
extern template ModelParameters<double> make_zero_grads(const NetworkSpec&);
extern template Plane<float> generator_forward(const NetworkSpec&, const ModelParameters<float>&,
                                               const FrameWindow&);
extern template Plane<double> generator_forward(const NetworkSpec&, const ModelParameters<double>&,
                                                const FrameWindow&);

}  // namespace vdblur

#endif
