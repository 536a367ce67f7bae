#ifndef VDBLUR_TENSOR_HPP
#define VDBLUR_TENSOR_HPP

#include <cassert>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace vdblur {

// Dense N x C x T x H x W volume, row-major, W fastest.
// Single samples use n = 1; 2D feature maps use t = 1.
template <class S>
struct Tensor {
    int n = 0, c = 0, t = 0, h = 0, w = 0;
    std::vector<S> v;

    Tensor() = default;
    Tensor(int n_, int c_, int t_, int h_, int w_)
        : n(n_), c(c_), t(t_), h(h_), w(w_),
          v(static_cast<std::size_t>(n_) * c_ * t_ * h_ * w_, S(0)) {}

    static Tensor volume(int c_, int t_, int h_, int w_) { return Tensor(1, c_, t_, h_, w_); }

    std::size_t size() const { return v.size(); }
    bool empty() const { return v.empty(); }

    std::size_t index(int in, int ic, int it, int iy, int ix) const {
        return ((((static_cast<std::size_t>(in) * c + ic) * t + it) * h + iy) * w + ix);
    }
    S& at(int in, int ic, int it, int iy, int ix) { return v[index(in, ic, it, iy, ix)]; }
    S at(int in, int ic, int it, int iy, int ix) const { return v[index(in, ic, it, iy, ix)]; }

    S* data() { return v.data(); }
    const S* data() const { return v.data(); }

    void fill(S x) { std::fill(v.begin(), v.end(), x); }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && t == o.t && h == o.h && w == o.w;
    }
    std::string shape_str() const {
        return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(t) + "x" +
               std::to_string(h) + "x" + std::to_string(w);
    }

    template <class U>
    Tensor<U> cast() const {
        Tensor<U> r(n, c, t, h, w);
        for (std::size_t i = 0; i < v.size(); ++i) r.v[i] = static_cast<U>(v[i]);
        return r;
    }
};

// H x W plane of scalars; used for luma/chroma channels in [0,1].
template <class S>
struct Plane {
    int h = 0, w = 0;
    std::vector<S> v;

    Plane() = default;
    Plane(int h_, int w_) : h(h_), w(w_), v(static_cast<std::size_t>(h_) * w_, S(0)) {}

    S& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
    S at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
    std::size_t size() const { return v.size(); }

    template <class U>
    Plane<U> cast() const {
        Plane<U> r(h, w);
        for (std::size_t i = 0; i < v.size(); ++i) r.v[i] = static_cast<U>(v[i]);
        return r;
    }
};

// Configuration / shape problems surface as this exception type.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Dataset / file problems.
class DataError : public std::runtime_error {
  public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace vdblur

#endif
