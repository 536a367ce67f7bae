#ifndef VDBLUR_IMAGE_IO_HPP
#define VDBLUR_IMAGE_IO_HPP

#include <filesystem>

#include "vdblur/image.hpp"

namespace vdblur {

// 8-bit RGB PNG codec. Grayscale/palette/alpha inputs are expanded to RGB.
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);

}  // namespace vdblur

#endif
