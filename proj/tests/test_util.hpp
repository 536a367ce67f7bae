#ifndef VDBLUR_TESTS_UTIL_HPP
#define VDBLUR_TESTS_UTIL_HPP

#include <random>
#include <span>
#include <vector>

#include "vdblur/image.hpp"
#include "vdblur/network.hpp"

namespace vdblur::testutil {

inline std::vector<double> gather(const std::vector<std::vector<double>*>& arrays) {
    std::vector<double> flat;
    for (const auto* a : arrays) flat.insert(flat.end(), a->begin(), a->end());
    return flat;
}

inline void scatter(std::span<const double> flat, const std::vector<std::vector<double>*>& arrays) {
    std::size_t off = 0;
    for (auto* a : arrays) {
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
                  flat.begin() + static_cast<std::ptrdiff_t>(off + a->size()), a->begin());
        off += a->size();
    }
}

inline Tensor<double> random_input(int n, int c, int t, int h, int w, unsigned seed) {
    Tensor<double> x(n, c, t, h, w);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& v : x.v) v = u(rng);
    return x;
}

// Gradient checks run at a generic parameter point: larger kernel scale and
// nonzero biases/shifts keep pre-activation values away from the ReLU kinks
// that corrupt finite differences at the degenerate all-zero-bias init.
inline void make_generic_point(ModelParameters<double>& params, unsigned seed) {
    std::mt19937 rng(seed * 77 + 1);
    std::normal_distribution<double> nb(0.0, 0.3), ns(0.0, 0.5), nk(0.0, 0.2);
    for (auto& [id, lp] : params.layers) {
        for (auto& b : lp.bias) b = nb(rng);
        for (auto& s : lp.bn_scale) s = 1.0 + 0.2 * nb(rng);
        for (auto& s : lp.bn_shift) s = ns(rng);
    }
    (void)nk;
}

inline FrameWindow random_window(int T, int h, int w, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    FrameWindow win;
    win.center_index = (T - 1) / 2;
    for (int t = 0; t < T; ++t) {
        Plane<float> p(h, w);
        for (auto& v : p.v) v = u(rng);
        win.luma.push_back(std::move(p));
    }
    win.chroma_cb = Plane<float>(h, w);
    win.chroma_cr = Plane<float>(h, w);
    for (auto& v : win.chroma_cb.v) v = u(rng);
    for (auto& v : win.chroma_cr.v) v = u(rng);
    return win;
}

}  // namespace vdblur::testutil

#endif
