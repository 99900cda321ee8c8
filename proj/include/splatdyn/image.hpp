// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace splatdyn {

/// Row-major single-channel image.
template <typename T>
struct Image {
    int width = 0;
    int height = 0;
    std::vector<T> pixels;

    Image() = default;
    Image(int w, int h, T fill = T{}) : width(w), height(h), pixels(std::size_t(w) * std::size_t(h), fill) {}

    T& at(int x, int y) { return pixels[std::size_t(y) * width + x]; }
    const T& at(int x, int y) const { return pixels[std::size_t(y) * width + x]; }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
};

using LabelImage = Image<std::uint16_t>;
using RgbaImage = Image<Eigen::Vector4f>;

class ImageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// 16-bit grayscale PNG; pixel value is the object label. 8-bit grayscale is accepted on read.
LabelImage read_label_png(const std::filesystem::path& path);
void write_label_png(const LabelImage& image, const std::filesystem::path& path);

/// RGBA in [0,1], quantized to 8 bits. Color is stored premultiplied by the renderer;
/// these writers un-premultiply nothing and write the values as-is.
void write_rgba_png(const RgbaImage& image, const std::filesystem::path& path);
void write_ppm(const RgbaImage& image, const std::filesystem::path& path);

/// Pixelwise AND of two label images: 1 where both are nonzero, else 0.
/// Used to intersect a removal mask with an externally tracked artifact mask.
LabelImage intersect_masks(const LabelImage& a, const LabelImage& b);

} // namespace splatdyn
