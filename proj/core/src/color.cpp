#include "vdblur/color.hpp"

#include <algorithm>
#include <cmath>

namespace vdblur {

namespace {

inline std::uint8_t quantize(double x) {
    const double s = std::lround(std::clamp(x, 0.0, 1.0) * 255.0);
    return static_cast<std::uint8_t>(s);
}

}  // namespace

YCbCrPlanes rgb_to_ycbcr(const Image& frame) {
    YCbCrPlanes out{Plane<float>(frame.h, frame.w), Plane<float>(frame.h, frame.w),
                    Plane<float>(frame.h, frame.w)};
    const std::size_t n = static_cast<std::size_t>(frame.h) * frame.w;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = frame.rgb[3 * i] / 255.0;
        const double g = frame.rgb[3 * i + 1] / 255.0;
        const double b = frame.rgb[3 * i + 2] / 255.0;
        const double y = 0.299 * r + 0.587 * g + 0.114 * b;
        const double cb = -0.168736 * r - 0.331264 * g + 0.5 * b + 0.5;
        const double cr = 0.5 * r - 0.418688 * g - 0.081312 * b + 0.5;
        out.y.v[i] = static_cast<float>(std::clamp(y, 0.0, 1.0));
        out.cb.v[i] = static_cast<float>(std::clamp(cb, 0.0, 1.0));
        out.cr.v[i] = static_cast<float>(std::clamp(cr, 0.0, 1.0));
    }
    return out;
}

Image ycbcr_to_rgb(const Plane<float>& y, const Plane<float>& cb, const Plane<float>& cr) {
    if (cb.h != y.h || cb.w != y.w || cr.h != y.h || cr.w != y.w)
        throw ConfigError("ycbcr_to_rgb: plane sizes differ");
    Image out(y.h, y.w);
    const std::size_t n = y.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double yy = y.v[i];
        const double db = cb.v[i] - 0.5;
        const double dr = cr.v[i] - 0.5;
        out.rgb[3 * i] = quantize(yy + 1.402 * dr);
        out.rgb[3 * i + 1] = quantize(yy - 0.344136 * db - 0.714136 * dr);
        out.rgb[3 * i + 2] = quantize(yy + 1.772 * db);
    }
    return out;
}

}  // namespace vdblur
