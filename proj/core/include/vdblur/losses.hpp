#ifndef VDBLUR_LOSSES_HPP
#define VDBLUR_LOSSES_HPP

#include <vector>

#include "vdblur/tensor.hpp"

namespace vdblur {

// Keeps log terms finite when a probability saturates.
inline constexpr double kLogEps = 1e-12;

struct LossWeights {
    double alpha = 0.0002;  // weight of the adversarial term
    void validate() const;  // alpha in [0, 0.1]
};

// Per-pixel mean squared error between a sharp frame and a restored one.
template <class S>
S content_loss(const Plane<S>& sharp, const Plane<S>& deblurred);

// log(1 - p + eps); minimized when the discriminator scores the restored
// frame as real (p -> 1).
template <class S>
S adversarial_loss(S p_real_of_generated);

// content + alpha * adversarial.
template <class S>
S combined_loss(S content, S adversarial, const LossWeights& w);

// -[log(p_sharp + eps) + log(1 - p_generated + eps)]: the discriminator's
// ascent objective negated for minimization (two-class cross entropy).
template <class S>
S discriminator_loss(S p_real_on_sharp, S p_real_on_generated);

// Batched variants used by the training loop; losses average over the
// mini-batch. Gradient outputs are optional.

template <class S>
S content_loss_batch(const Tensor<S>& output, const Tensor<S>& target, Tensor<S>* d_output);

template <class S>
S adversarial_loss_batch(const std::vector<S>& p_real, std::vector<S>* d_p);

template <class S>
S discriminator_loss_batch(const std::vector<S>& p_sharp, const std::vector<S>& p_generated,
                           std::vector<S>* d_p_sharp, std::vector<S>* d_p_generated);

extern template float content_loss(const Plane<float>&, const Plane<float>&);
extern template double content_loss(const Plane<double>&, const Plane<double>&);
extern template float adversarial_loss(float);
extern template double adversarial_loss(double);
extern template float combined_loss(float, float, const LossWeights&);
extern template double combined_loss(double, double, const LossWeights&);
extern template float discriminator_loss(float, float);
extern template double discriminator_loss(double, double);
extern template float content_loss_batch(const Tensor<float>&, const Tensor<float>&,
                                         Tensor<float>*);
extern template double content_loss_batch(const Tensor<double>&, const Tensor<double>&,
                                          Tensor<double>*);
extern template float adversarial_loss_batch(const std::vector<float>&, std::vector<float>*);
extern template double adversarial_loss_batch(const std::vector<double>&, std::vector<double>*);
extern template float discriminator_loss_batch(const std::vector<float>&,
                                               const std::vector<float>&, std::vector<float>*,
                                               std::vector<float>*);
extern template double discriminator_loss_batch(const std::vector<double>&,
                                                const std::vector<double>&, std::vector<double>*,
                                                std::vector<double>*);

}  // namespace vdblur

#endif
