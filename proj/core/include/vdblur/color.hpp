#ifndef VDBLUR_COLOR_HPP
#define VDBLUR_COLOR_HPP

#include "vdblur/image.hpp"
#include "vdblur/tensor.hpp"

namespace vdblur {

// Full-range BT.601 YCbCr, channels scaled to [0,1]:
//   Y  =  0.299 R + 0.587 G + 0.114 B
//   Cb = -0.168736 R - 0.331264 G + 0.5 B + 0.5
//   Cr =  0.5 R - 0.418688 G - 0.081312 B + 0.5
// The inverse uses 1.402 / -0.344136 / -0.714136 / 1.772. Conversion math
// runs in double; an 8-bit roundtrip recovers every pixel exactly.
struct YCbCrPlanes {
    Plane<float> y, cb, cr;
};

YCbCrPlanes rgb_to_ycbcr(const Image& frame);

Image ycbcr_to_rgb(const Plane<float>& y, const Plane<float>& cb, const Plane<float>& cr);

}  // namespace vdblur

#endif
