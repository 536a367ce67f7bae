#ifndef VDBLUR_TESTS_ORACLE_HPP
#define VDBLUR_TESTS_ORACLE_HPP

#include <functional>
#include <span>
#include <vector>

#include "vdblur/conv3d.hpp"
#include "vdblur/tensor.hpp"

// Brute-force references used only by tests. Everything here runs at 64-bit
// and is written as the plainest possible transcription, independent of the
// production kernels it checks.
namespace vdblur::oracle {

// Direct nested-loop evaluation of the layer's convolution, bias and
// activation. No reordering, no row hoisting.
Tensor<double> conv3d_oracle(const Tensor<double>& input, const Conv3DLayer<double>& layer);

// Plain 2D convolution over C x H x W (for the Q=1, T=1 degenerate case).
Tensor<double> conv2d_oracle(const Tensor<double>& input, const Conv3DLayer<double>& layer);

struct FiniteDiffConfig {
    double step = 1e-5;
    double tolerance = 1e-4;
    double denom_floor = 1e-6;  // scale floor for the relative error
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    double mean_rel_error = 0.0;
    std::size_t worst_index = 0;
    std::size_t count = 0;
    std::vector<std::size_t> non_finite;  // parameters where fn went non-finite

    bool passed(const FiniteDiffConfig& cfg) const {
        return non_finite.empty() && max_rel_error < cfg.tolerance;
    }
};

// Central differences (fn(p+h) - fn(p-h)) / 2h against the supplied analytic
// gradient. Parameters are perturbed in place and restored.
GradCheckReport grad_check(const std::function<double(std::span<const double>)>& fn,
                           std::span<double> params, std::span<const double> analytic,
                           const FiniteDiffConfig& cfg = {});

// Flat-loop mean of squared differences.
double content_loss_oracle(std::span<const double> a, std::span<const double> b);

// Two-class cross entropy from the probability pair, evaluated directly.
double discriminator_loss_oracle(double p_real_on_sharp, double p_real_on_generated);

}  // namespace vdblur::oracle

#endif
