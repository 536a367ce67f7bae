#ifndef VDBLUR_IMAGE_HPP
#define VDBLUR_IMAGE_HPP

#include <cstdint>
#include <vector>

#include "vdblur/tensor.hpp"

namespace vdblur {

// 8-bit RGB frame, interleaved, row-major.
struct Image {
    int h = 0, w = 0;
    std::vector<std::uint8_t> rgb;

    Image() = default;
    Image(int h_, int w_) : h(h_), w(w_), rgb(static_cast<std::size_t>(h_) * w_ * 3, 0) {}

    std::uint8_t& at(int y, int x, int ch) {
        return rgb[(static_cast<std::size_t>(y) * w + x) * 3 + ch];
    }
    std::uint8_t at(int y, int x, int ch) const {
        return rgb[(static_cast<std::size_t>(y) * w + x) * 3 + ch];
    }
    bool same_shape(const Image& o) const { return h == o.h && w == o.w; }
};

// Temporal stack of T luma planes centered on the frame to restore, plus the
// center frame's chroma for recombination. All values in [0,1].
struct FrameWindow {
    std::vector<Plane<float>> luma;  // T planes
    int center_index = 0;            // (T-1)/2
    Plane<float> chroma_cb, chroma_cr;

    int T() const { return static_cast<int>(luma.size()); }
    int height() const { return luma.empty() ? 0 : luma.front().h; }
    int width() const { return luma.empty() ? 0 : luma.front().w; }
    const Plane<float>& center_luma() const { return luma[center_index]; }
};

}  // namespace vdblur

#endif
