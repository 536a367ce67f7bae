#ifndef VDBLUR_CONV3D_HPP
#define VDBLUR_CONV3D_HPP

#include <string>
#include <vector>

#include "vdblur/tensor.hpp"

namespace vdblur {

enum class Activation { None, ReLU };

// Kernel/padding geometry of one convolution layer. Kernels span two spatial
// axes (P vertical, R horizontal) and the temporal axis (Q, in frames).
struct Conv3DGeom {
    int in_channels = 0;
    int out_channels = 0;
    int kp = 3;  // spatial, vertical
    int kq = 1;  // temporal
    int kr = 3;  // spatial, horizontal
    int spatial_stride = 1;
    int spatial_padding = 1;
    int temporal_padding = 0;

    int out_t(int in_t) const { return in_t + 2 * temporal_padding - kq + 1; }
    int out_h(int in_h) const { return (in_h + 2 * spatial_padding - kp) / spatial_stride + 1; }
    int out_w(int in_w) const { return (in_w + 2 * spatial_padding - kr) / spatial_stride + 1; }
    std::size_t kernel_count() const {
        return static_cast<std::size_t>(out_channels) * in_channels * kp * kq * kr;
    }
};

// One convolution layer with its weights. Kernel array order is
// (out, in, P, Q, R), matching the checkpoint layout.
template <class S>
struct Conv3DLayer {
    Conv3DGeom geom;
    std::vector<S> kernels;
    std::vector<S> bias;
    Activation activation = Activation::None;
    bool batch_norm = false;

    std::size_t kidx(int o, int m, int p, int q, int r) const {
        return ((((static_cast<std::size_t>(o) * geom.in_channels + m) * geom.kp + p) * geom.kq +
                 q) *
                    geom.kr +
                r);
    }
};

namespace detail {
void check_conv_input(const Conv3DGeom& g, int in_c, int in_t, int in_h, int in_w,
                      const std::string& layer_name);
}

// Cross-correlation per the layer geometry, plus bias, then activation.
// Temporal extent shrinks to in_t - kq + 1 when temporal_padding is 0.
// The batch axis maps; the contract is per sample.
template <class S>
Tensor<S> conv3d_forward(const Tensor<S>& input, const Conv3DLayer<S>& layer,
                         const std::string& layer_name = "conv3d");

// Same convolution without bias or activation; used by the network engines,
// which insert batch norm and skip additions between conv and activation.
template <class S>
void conv3d_raw(const Tensor<S>& input, const Conv3DGeom& geom, const S* kernels, Tensor<S>& out);

// Gradient w.r.t. the convolution input. d_out has the raw-conv output shape.
template <class S>
void conv3d_backward_input(const Tensor<S>& d_out, const Conv3DGeom& geom, const S* kernels,
                           Tensor<S>& d_input);

// Gradients w.r.t. kernels and bias, accumulated into d_kernels / d_bias.
template <class S>
void conv3d_backward_params(const Tensor<S>& input, const Tensor<S>& d_out, const Conv3DGeom& geom,
                            S* d_kernels, S* d_bias);

extern template Tensor<float> conv3d_forward(const Tensor<float>&, const Conv3DLayer<float>&,
                                             const std::string&);
extern template Tensor<double> conv3d_forward(const Tensor<double>&, const Conv3DLayer<double>&,
                                              const std::string&);
extern template void conv3d_raw(const Tensor<float>&, const Conv3DGeom&, const float*,
                                Tensor<float>&);
extern template void conv3d_raw(const Tensor<double>&, const Conv3DGeom&, const double*,
                                Tensor<double>&);
extern template void conv3d_backward_input(const Tensor<float>&, const Conv3DGeom&, const float*,
                                           Tensor<float>&);
extern template void conv3d_backward_input(const Tensor<double>&, const Conv3DGeom&, const double*,
                                           Tensor<double>&);
extern template void conv3d_backward_params(const Tensor<float>&, const Tensor<float>&,
                                            const Conv3DGeom&, float*, float*);
extern template void conv3d_backward_params(const Tensor<double>&, const Tensor<double>&,
                                            const Conv3DGeom&, double*, double*);

}  // namespace vdblur

#endif
