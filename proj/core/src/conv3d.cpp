#include "vdblur/conv3d.hpp"

#include <algorithm>

namespace vdblur {

namespace detail {

void check_conv_input(const Conv3DGeom& g, int in_c, int in_t, int in_h, int in_w,
                      const std::string& layer_name) {
    if (in_c != g.in_channels)
        throw ConfigError(layer_name + ": input has " + std::to_string(in_c) +
                          " channels, layer expects " + std::to_string(g.in_channels));
    if (in_t + 2 * g.temporal_padding < g.kq)
        throw ConfigError(layer_name + ": temporal extent " + std::to_string(in_t) +
                          " is smaller than the temporal kernel " + std::to_string(g.kq));
    if (in_h + 2 * g.spatial_padding < g.kp || in_w + 2 * g.spatial_padding < g.kr)
        throw ConfigError(layer_name + ": spatial size " + std::to_string(in_h) + "x" +
                          std::to_string(in_w) + " is smaller than the kernel " +
                          std::to_string(g.kp) + "x" + std::to_string(g.kr));
}

}  // namespace detail

template <class S>
void conv3d_raw(const Tensor<S>& input, const Conv3DGeom& g, const S* kernels, Tensor<S>& out) {
    const int ot = g.out_t(input.t), oh = g.out_h(input.h), ow = g.out_w(input.w);
    if (out.n != input.n || out.c != g.out_channels || out.t != ot || out.h != oh || out.w != ow)
        out = Tensor<S>(input.n, g.out_channels, ot, oh, ow);

    const int kp = g.kp, kq = g.kq, kr = g.kr;
    const int sp = g.spatial_padding, tp = g.temporal_padding, st = g.spatial_stride;
    const std::size_t ktap = static_cast<std::size_t>(kp) * kq * kr;

#pragma omp parallel for collapse(2) schedule(static)
    for (int in = 0; in < input.n; ++in) {
        for (int o = 0; o < g.out_channels; ++o) {
            for (int to = 0; to < ot; ++to) {
                for (int y = 0; y < oh; ++y) {
                    S* out_row = &out.v[out.index(in, o, to, y, 0)];
                    for (int x = 0; x < ow; ++x) out_row[x] = S(0);
                    for (int m = 0; m < g.in_channels; ++m) {
                        const S* k = kernels + (static_cast<std::size_t>(o) * g.in_channels + m) * ktap;
                        for (int q = 0; q < kq; ++q) {
                            const int it = to + q - tp;
                            if (it < 0 || it >= input.t) continue;
                            for (int p = 0; p < kp; ++p) {
                                const int iy = st * y + p - sp;
                                if (iy < 0 || iy >= input.h) continue;
                                const S* in_row = &input.v[input.index(in, m, it, iy, 0)];
                                const S* krow = k + (static_cast<std::size_t>(p) * kq + q) * kr;
                                for (int x = 0; x < ow; ++x) {
                                    const int x0 = st * x - sp;
                                    S acc = out_row[x];
                                    for (int r = 0; r < kr; ++r) {
                                        const int ix = x0 + r;
                                        if (ix < 0 || ix >= input.w) continue;
                                        acc += in_row[ix] * krow[r];
                                    }
                                    out_row[x] = acc;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

template <class S>
Tensor<S> conv3d_forward(const Tensor<S>& input, const Conv3DLayer<S>& layer,
                         const std::string& layer_name) {
    const Conv3DGeom& g = layer.geom;
    detail::check_conv_input(g, input.c, input.t, input.h, input.w, layer_name);
    if (layer.kernels.size() != g.kernel_count())
        throw ConfigError(layer_name + ": kernel array has " +
                          std::to_string(layer.kernels.size()) + " values, geometry needs " +
                          std::to_string(g.kernel_count()));
    if (static_cast<int>(layer.bias.size()) != g.out_channels)
        throw ConfigError(layer_name + ": bias size " + std::to_string(layer.bias.size()) +
                          " does not match " + std::to_string(g.out_channels) +
                          " output channels");

    Tensor<S> out;
    conv3d_raw(input, g, layer.kernels.data(), out);
    const std::size_t plane = static_cast<std::size_t>(out.t) * out.h * out.w;
    for (int in = 0; in < out.n; ++in) {
        for (int o = 0; o < g.out_channels; ++o) {
            S* p = &out.v[out.index(in, o, 0, 0, 0)];
            const S b = layer.bias[o];
            if (layer.activation == Activation::ReLU) {
                for (std::size_t i = 0; i < plane; ++i) p[i] = std::max(S(0), p[i] + b);
            } else {
                for (std::size_t i = 0; i < plane; ++i) p[i] += b;
            }
        }
    }
    return out;
}

template <class S>
void conv3d_backward_input(const Tensor<S>& d_out, const Conv3DGeom& g, const S* kernels,
                           Tensor<S>& d_input) {
    const int kp = g.kp, kq = g.kq, kr = g.kr;
    const int sp = g.spatial_padding, tp = g.temporal_padding, st = g.spatial_stride;
    const std::size_t ktap = static_cast<std::size_t>(kp) * kq * kr;
    d_input.fill(S(0));

    // Gather form: every d_input element is written by exactly one thread,
    // with a fixed summation order, so results do not depend on thread count.
#pragma omp parallel for collapse(2) schedule(static)
    for (int in = 0; in < d_input.n; ++in) {
        for (int m = 0; m < g.in_channels; ++m) {
            for (int it = 0; it < d_input.t; ++it) {
                for (int iy = 0; iy < d_input.h; ++iy) {
                    for (int ix = 0; ix < d_input.w; ++ix) {
                        S acc = S(0);
                        for (int o = 0; o < g.out_channels; ++o) {
                            const S* k =
                                kernels + (static_cast<std::size_t>(o) * g.in_channels + m) * ktap;
                            for (int q = 0; q < kq; ++q) {
                                const int to = it - q + tp;
                                if (to < 0 || to >= d_out.t) continue;
                                for (int p = 0; p < kp; ++p) {
                                    const int ny = iy + sp - p;
                                    if (ny < 0 || ny % st != 0) continue;
                                    const int y = ny / st;
                                    if (y >= d_out.h) continue;
                                    for (int r = 0; r < kr; ++r) {
                                        const int nx = ix + sp - r;
                                        if (nx < 0 || nx % st != 0) continue;
                                        const int x = nx / st;
                                        if (x >= d_out.w) continue;
                                        acc += d_out.at(in, o, to, y, x) *
                                               k[(static_cast<std::size_t>(p) * kq + q) * kr + r];
                                    }
                                }
                            }
                        }
                        d_input.at(in, m, it, iy, ix) = acc;
                    }
                }
            }
        }
    }
}

template <class S>
void conv3d_backward_params(const Tensor<S>& input, const Tensor<S>& d_out, const Conv3DGeom& g,
                            S* d_kernels, S* d_bias) {
    const int kp = g.kp, kq = g.kq, kr = g.kr;
    const int sp = g.spatial_padding, tp = g.temporal_padding, st = g.spatial_stride;
    const std::size_t ktap = static_cast<std::size_t>(kp) * kq * kr;

#pragma omp parallel for schedule(static)
    for (int o = 0; o < g.out_channels; ++o) {
        if (d_bias != nullptr) {
            S bacc = S(0);
            for (int in = 0; in < d_out.n; ++in) {
                const S* p = &d_out.v[d_out.index(in, o, 0, 0, 0)];
                const std::size_t plane = static_cast<std::size_t>(d_out.t) * d_out.h * d_out.w;
                for (std::size_t i = 0; i < plane; ++i) bacc += p[i];
            }
            d_bias[o] += bacc;
        }

        for (int m = 0; m < g.in_channels; ++m) {
            S* k = d_kernels + (static_cast<std::size_t>(o) * g.in_channels + m) * ktap;
            for (int p = 0; p < kp; ++p) {
                for (int q = 0; q < kq; ++q) {
                    for (int r = 0; r < kr; ++r) {
                        S acc = S(0);
                        for (int in = 0; in < d_out.n; ++in) {
                            for (int to = 0; to < d_out.t; ++to) {
                                const int it = to + q - tp;
                                if (it < 0 || it >= input.t) continue;
                                for (int y = 0; y < d_out.h; ++y) {
                                    const int iy = st * y + p - sp;
                                    if (iy < 0 || iy >= input.h) continue;
                                    const S* in_row = &input.v[input.index(in, m, it, iy, 0)];
                                    const S* do_row = &d_out.v[d_out.index(in, o, to, y, 0)];
                                    for (int x = 0; x < d_out.w; ++x) {
                                        const int ix = st * x + r - sp;
                                        if (ix < 0 || ix >= input.w) continue;
                                        acc += in_row[ix] * do_row[x];
                                    }
                                }
                            }
                        }
                        k[(static_cast<std::size_t>(p) * kq + q) * kr + r] += acc;
                    }
                }
            }
        }
    }
}

template Tensor<float> conv3d_forward(const Tensor<float>&, const Conv3DLayer<float>&,
                                      const std::string&);
template Tensor<double> conv3d_forward(const Tensor<double>&, const Conv3DLayer<double>&,
                                       const std::string&);
template void conv3d_raw(const Tensor<float>&, const Conv3DGeom&, const float*, Tensor<float>&);
template void conv3d_raw(const Tensor<double>&, const Conv3DGeom&, const double*, Tensor<double>&);
template void conv3d_backward_input(const Tensor<float>&, const Conv3DGeom&, const float*,
                                    Tensor<float>&);
template void conv3d_backward_input(const Tensor<double>&, const Conv3DGeom&, const double*,
                                    Tensor<double>&);
template void conv3d_backward_params(const Tensor<float>&, const Tensor<float>&, const Conv3DGeom&,
                                     float*, float*);
template void conv3d_backward_params(const Tensor<double>&, const Tensor<double>&,
                                     const Conv3DGeom&, double*, double*);

}  // namespace vdblur
