#include "vdblur/losses.hpp"

#include <cmath>

namespace vdblur {

void LossWeights::validate() const {
    if (!(alpha >= 0.0 && alpha <= 0.1))
        throw ConfigError("alpha must lie in [0, 0.1], got " + std::to_string(alpha));
}

template <class S>
S content_loss(const Plane<S>& sharp, const Plane<S>& deblurred) {
    if (sharp.h != deblurred.h || sharp.w != deblurred.w)
        throw ConfigError("content_loss: shapes differ, " + std::to_string(sharp.h) + "x" +
                          std::to_string(sharp.w) + " vs " + std::to_string(deblurred.h) + "x" +
                          std::to_string(deblurred.w));
    S acc = S(0);
    for (std::size_t i = 0; i < sharp.v.size(); ++i) {
        const S d = sharp.v[i] - deblurred.v[i];
        acc += d * d;
    }
    return acc / static_cast<S>(sharp.v.size());
}

template <class S>
S adversarial_loss(S p_real_of_generated) {
    return std::log(S(1) - p_real_of_generated + static_cast<S>(kLogEps));
}

template <class S>
S combined_loss(S content, S adversarial, const LossWeights& w) {
    w.validate();
    return content + static_cast<S>(w.alpha) * adversarial;
}

template <class S>
S discriminator_loss(S p_real_on_sharp, S p_real_on_generated) {
    return -(std::log(p_real_on_sharp + static_cast<S>(kLogEps)) +
             std::log(S(1) - p_real_on_generated + static_cast<S>(kLogEps)));
}

template <class S>
S content_loss_batch(const Tensor<S>& output, const Tensor<S>& target, Tensor<S>* d_output) {
    if (!output.same_shape(target))
        throw ConfigError("content_loss_batch: shapes differ, " + output.shape_str() + " vs " +
                          target.shape_str());
    const std::size_t per_sample = output.v.size() / static_cast<std::size_t>(output.n);
    S acc = S(0);
    for (std::size_t i = 0; i < output.v.size(); ++i) {
        const S d = output.v[i] - target.v[i];
        acc += d * d;
    }
    if (d_output != nullptr) {
        if (!d_output->same_shape(output))
            *d_output = Tensor<S>(output.n, output.c, output.t, output.h, output.w);
        const S k = S(2) / static_cast<S>(output.v.size());
        for (std::size_t i = 0; i < output.v.size(); ++i)
            d_output->v[i] = k * (output.v[i] - target.v[i]);
    }
    return acc / static_cast<S>(per_sample) / static_cast<S>(output.n);
}

template <class S>
S adversarial_loss_batch(const std::vector<S>& p_real, std::vector<S>* d_p) {
    const S n = static_cast<S>(p_real.size());
    S acc = S(0);
    for (S p : p_real) acc += std::log(S(1) - p + static_cast<S>(kLogEps));
    if (d_p != nullptr) {
        d_p->resize(p_real.size());
        for (std::size_t i = 0; i < p_real.size(); ++i)
            (*d_p)[i] = S(-1) / ((S(1) - p_real[i] + static_cast<S>(kLogEps)) * n);
    }
    return acc / n;
}

template <class S>
S discriminator_loss_batch(const std::vector<S>& p_sharp, const std::vector<S>& p_generated,
                           std::vector<S>* d_p_sharp, std::vector<S>* d_p_generated) {
    if (p_sharp.size() != p_generated.size())
        throw ConfigError("discriminator_loss_batch: batch sizes differ");
    const S n = static_cast<S>(p_sharp.size());
    S acc = S(0);
    for (std::size_t i = 0; i < p_sharp.size(); ++i)
        acc -= std::log(p_sharp[i] + static_cast<S>(kLogEps)) +
               std::log(S(1) - p_generated[i] + static_cast<S>(kLogEps));
    if (d_p_sharp != nullptr) {
        d_p_sharp->resize(p_sharp.size());
        for (std::size_t i = 0; i < p_sharp.size(); ++i)
            (*d_p_sharp)[i] = S(-1) / ((p_sharp[i] + static_cast<S>(kLogEps)) * n);
    }
    if (d_p_generated != nullptr) {
        d_p_generated->resize(p_generated.size());
        for (std::size_t i = 0; i < p_generated.size(); ++i)
            (*d_p_generated)[i] = S(1) / ((S(1) - p_generated[i] + static_cast<S>(kLogEps)) * n);
    }
    return acc / n;
}

template float content_loss(const Plane<float>&, const Plane<float>&);
template double content_loss(const Plane<double>&, const Plane<double>&);
template float adversarial_loss(float);
template double adversarial_loss(double);
template float combined_loss(float, float, const LossWeights&);
template double combined_loss(double, double, const LossWeights&);
template float discriminator_loss(float, float);
template double discriminator_loss(double, double);
template float content_loss_batch(const Tensor<float>&, const Tensor<float>&, Tensor<float>*);
template double content_loss_batch(const Tensor<double>&, const Tensor<double>&, Tensor<double>*);
template float adversarial_loss_batch(const std::vector<float>&, std::vector<float>*);
template double adversarial_loss_batch(const std::vector<double>&, std::vector<double>*);
template float discriminator_loss_batch(const std::vector<float>&, const std::vector<float>&,
                                        std::vector<float>*, std::vector<float>*);
template double discriminator_loss_batch(const std::vector<double>&, const std::vector<double>&,
                                         std::vector<double>*, std::vector<double>*);

}  // namespace vdblur
