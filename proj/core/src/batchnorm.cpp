#include "vdblur/batchnorm.hpp"

#include <cmath>

namespace vdblur {

template <class S>
void batchnorm_forward_train(Tensor<S>& x, const S* scale, const S* shift, BatchNormStats<S>& st,
                             S* running_mean, S* running_var, bool update_running) {
    const int C = x.c;
    const std::size_t plane = static_cast<std::size_t>(x.t) * x.h * x.w;
    const S m_count = static_cast<S>(static_cast<double>(x.n) * plane);
    st.mean.assign(C, S(0));
    st.inv_std.assign(C, S(0));

#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c) {
        S sum = S(0), sq = S(0);
        for (int in = 0; in < x.n; ++in) {
            const S* p = &x.v[x.index(in, c, 0, 0, 0)];
            for (std::size_t i = 0; i < plane; ++i) {
                sum += p[i];
                sq += p[i] * p[i];
            }
        }
        const S mean = sum / m_count;
        S var = sq / m_count - mean * mean;
        if (var < S(0)) var = S(0);  // guard rounding on constant inputs
        st.mean[c] = mean;
        st.inv_std[c] = S(1) / std::sqrt(var + static_cast<S>(kBatchNormEps));
        if (update_running) {
            const S m = static_cast<S>(kBatchNormMomentum);
            running_mean[c] = m * running_mean[c] + (S(1) - m) * mean;
            running_var[c] = m * running_var[c] + (S(1) - m) * var;
        }
        const S a = scale[c] * st.inv_std[c];
        const S b = shift[c] - a * mean;
        for (int in = 0; in < x.n; ++in) {
            S* p = &x.v[x.index(in, c, 0, 0, 0)];
            for (std::size_t i = 0; i < plane; ++i) p[i] = a * p[i] + b;
        }
    }
}

template <class S>
void batchnorm_forward_inference(Tensor<S>& x, const S* scale, const S* shift,
                                 const S* running_mean, const S* running_var) {
    const int C = x.c;
    const std::size_t plane = static_cast<std::size_t>(x.t) * x.h * x.w;
#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c) {
        const S inv = S(1) / std::sqrt(running_var[c] + static_cast<S>(kBatchNormEps));
        const S a = scale[c] * inv;
        const S b = shift[c] - a * running_mean[c];
        for (int in = 0; in < x.n; ++in) {
            S* p = &x.v[x.index(in, c, 0, 0, 0)];
            for (std::size_t i = 0; i < plane; ++i) p[i] = a * p[i] + b;
        }
    }
}

template <class S>
void batchnorm_backward(Tensor<S>& g, const Tensor<S>& conv_out, const S* scale,
                        const BatchNormStats<S>& st, S* d_scale, S* d_shift) {
    const int C = g.c;
    const std::size_t plane = static_cast<std::size_t>(g.t) * g.h * g.w;
    const S m_count = static_cast<S>(static_cast<double>(g.n) * plane);

#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c) {
        const S mean = st.mean[c], inv = st.inv_std[c];
        S sum_g = S(0), sum_gx = S(0);
        for (int in = 0; in < g.n; ++in) {
            const S* gp = &g.v[g.index(in, c, 0, 0, 0)];
            const S* xp = &conv_out.v[conv_out.index(in, c, 0, 0, 0)];
            for (std::size_t i = 0; i < plane; ++i) {
                sum_g += gp[i];
                sum_gx += gp[i] * (xp[i] - mean) * inv;
            }
        }
        d_shift[c] += sum_g;
        d_scale[c] += sum_gx;
        const S a = scale[c] * inv;
        for (int in = 0; in < g.n; ++in) {
            S* gp = &g.v[g.index(in, c, 0, 0, 0)];
            const S* xp = &conv_out.v[conv_out.index(in, c, 0, 0, 0)];
            for (std::size_t i = 0; i < plane; ++i) {
                const S xhat = (xp[i] - mean) * inv;
                gp[i] = a * (gp[i] - (sum_g + xhat * sum_gx) / m_count);
            }
        }
    }
}

template void batchnorm_forward_train(Tensor<float>&, const float*, const float*,
                                      BatchNormStats<float>&, float*, float*, bool);
template void batchnorm_forward_train(Tensor<double>&, const double*, const double*,
                                      BatchNormStats<double>&, double*, double*, bool);
template void batchnorm_forward_inference(Tensor<float>&, const float*, const float*, const float*,
                                          const float*);
template void batchnorm_forward_inference(Tensor<double>&, const double*, const double*,
                                          const double*, const double*);
template void batchnorm_backward(Tensor<float>&, const Tensor<float>&, const float*,
                                 const BatchNormStats<float>&, float*, float*);
template void batchnorm_backward(Tensor<double>&, const Tensor<double>&, const double*,
                                 const BatchNormStats<double>&, double*, double*);

}  // namespace vdblur
