#include "oracle.hpp"

#include <cmath>

namespace vdblur::oracle {

Tensor<double> conv3d_oracle(const Tensor<double>& input, const Conv3DLayer<double>& layer) {
    const Conv3DGeom& g = layer.geom;
    if (input.c != g.in_channels) throw ConfigError("conv3d_oracle: channel mismatch");
    Tensor<double> out(input.n, g.out_channels, g.out_t(input.t), g.out_h(input.h),
                       g.out_w(input.w));
    for (int n = 0; n < out.n; ++n) {
        for (int j = 0; j < out.c; ++j) {
            for (int z = 0; z < out.t; ++z) {
                for (int y = 0; y < out.h; ++y) {
                    for (int x = 0; x < out.w; ++x) {
                        double acc = 0.0;
                        for (int m = 0; m < g.in_channels; ++m) {
                            for (int p = 0; p < g.kp; ++p) {
                                for (int q = 0; q < g.kq; ++q) {
                                    for (int r = 0; r < g.kr; ++r) {
                                        const int iy = g.spatial_stride * y + p - g.spatial_padding;
                                        const int it = z + q - g.temporal_padding;
                                        const int ix = g.spatial_stride * x + r - g.spatial_padding;
                                        if (it < 0 || it >= input.t) continue;
                                        if (iy < 0 || iy >= input.h) continue;
                                        if (ix < 0 || ix >= input.w) continue;
                                        acc += input.at(n, m, it, iy, ix) *
                                               layer.kernels[layer.kidx(j, m, p, q, r)];
                                    }
                                }
                            }
                        }
                        acc += layer.bias[j];
                        if (layer.activation == Activation::ReLU && acc < 0.0) acc = 0.0;
                        out.at(n, j, z, y, x) = acc;
                    }
                }
            }
        }
    }
    return out;
}

Tensor<double> conv2d_oracle(const Tensor<double>& input, const Conv3DLayer<double>& layer) {
    const Conv3DGeom& g = layer.geom;
    if (input.t != 1 || g.kq != 1) throw ConfigError("conv2d_oracle: expects a single frame");
    Tensor<double> out(input.n, g.out_channels, 1, g.out_h(input.h), g.out_w(input.w));
    for (int n = 0; n < out.n; ++n) {
        for (int j = 0; j < out.c; ++j) {
            for (int y = 0; y < out.h; ++y) {
                for (int x = 0; x < out.w; ++x) {
                    double acc = layer.bias[j];
                    for (int m = 0; m < g.in_channels; ++m) {
                        for (int p = 0; p < g.kp; ++p) {
                            for (int r = 0; r < g.kr; ++r) {
                                const int iy = g.spatial_stride * y + p - g.spatial_padding;
                                const int ix = g.spatial_stride * x + r - g.spatial_padding;
                                if (iy < 0 || iy >= input.h || ix < 0 || ix >= input.w) continue;
                                acc += input.at(n, m, 0, iy, ix) *
                                       layer.kernels[layer.kidx(j, m, p, 0, r)];
                            }
                        }
                    }
                    if (layer.activation == Activation::ReLU && acc < 0.0) acc = 0.0;
                    out.at(n, j, 0, y, x) = acc;
                }
            }
        }
    }
    return out;
}

GradCheckReport grad_check(const std::function<double(std::span<const double>)>& fn,
                           std::span<double> params, std::span<const double> analytic,
                           const FiniteDiffConfig& cfg) {
    GradCheckReport report;
    report.count = params.size();
    double sum_rel = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + cfg.step;
        const double up = fn(params);
        params[i] = saved - cfg.step;
        const double down = fn(params);
        params[i] = saved;
        if (!std::isfinite(up) || !std::isfinite(down)) {
            report.non_finite.push_back(i);
            continue;
        }
        const double fd = (up - down) / (2.0 * cfg.step);
        const double a = analytic[i];
        const double denom = std::max({std::abs(a), std::abs(fd), cfg.denom_floor});
        const double rel = std::abs(a - fd) / denom;
        sum_rel += rel;
        if (rel > report.max_rel_error) {
            report.max_rel_error = rel;
            report.worst_index = i;
        }
    }
    report.mean_rel_error = params.empty() ? 0.0 : sum_rel / static_cast<double>(params.size());
    return report;
}

double content_loss_oracle(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return acc / static_cast<double>(a.size());
}

double discriminator_loss_oracle(double p_real_on_sharp, double p_real_on_generated) {
    return -(std::log(p_real_on_sharp + 1e-12) + std::log(1.0 - p_real_on_generated + 1e-12));
}

}  // namespace vdblur::oracle
