#ifndef VDBLUR_BATCHNORM_HPP
#define VDBLUR_BATCHNORM_HPP

#include <vector>

#include "vdblur/tensor.hpp"

namespace vdblur {

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;  // running = m*running + (1-m)*batch

template <class S>
struct BatchNormStats {
    std::vector<S> mean, inv_std;  // per channel, batch statistics
};

// Normalizes x in place per channel over (n, t, h, w) using batch statistics.
// Optionally folds the batch statistics into the running arrays.
template <class S>
void batchnorm_forward_train(Tensor<S>& x, const S* scale, const S* shift, BatchNormStats<S>& st,
                             S* running_mean, S* running_var, bool update_running);

// Normalizes x in place using the stored running statistics.
template <class S>
void batchnorm_forward_inference(Tensor<S>& x, const S* scale, const S* shift,
                                 const S* running_mean, const S* running_var);

// Backward through training-mode normalization. g is dL/dy on input and
// dL/dx on output; conv_out is the original (pre-normalization) activation.
template <class S>
void batchnorm_backward(Tensor<S>& g, const Tensor<S>& conv_out, const S* scale,
                        const BatchNormStats<S>& st, S* d_scale, S* d_shift);

extern template void batchnorm_forward_train(Tensor<float>&, const float*, const float*,
                                             BatchNormStats<float>&, float*, float*, bool);
extern template void batchnorm_forward_train(Tensor<double>&, const double*, const double*,
                                             BatchNormStats<double>&, double*, double*, bool);
extern template void batchnorm_forward_inference(Tensor<float>&, const float*, const float*,
                                                 const float*, const float*);
extern template void batchnorm_forward_inference(Tensor<double>&, const double*, const double*,
                                                 const double*, const double*);
extern template void batchnorm_backward(Tensor<float>&, const Tensor<float>&, const float*,
                                        const BatchNormStats<float>&, float*, float*);
extern template void batchnorm_backward(Tensor<double>&, const Tensor<double>&, const double*,
                                        const BatchNormStats<double>&, double*, double*);

}  // namespace vdblur

#endif
