// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace splatdyn {
namespace {

struct FileCloser {
    void operator()(std::FILE* f) const
    {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode)
{
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw ImageError("cannot open '" + path.string() + "'");
    return f;
}

void write_png(const std::filesystem::path& path, int width, int height, int bit_depth, int color_type,
               const std::vector<std::vector<png_byte>>& rows)
{
    auto f = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw ImageError("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw ImageError("failed writing '" + path.string() + "'");
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (const auto& row : rows) png_write_row(png, row.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::uint8_t quantize(float v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); }

} // namespace

LabelImage read_label_png(const std::filesystem::path& path)
{
    auto f = open_file(path, "rb");
    png_byte sig[8];
    if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8)) throw ImageError("not a PNG: " + path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ImageError("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ImageError("failed reading '" + path.string() + "'");
    }
    png_init_io(png, f.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));
    const int depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (color != PNG_COLOR_TYPE_GRAY || (depth != 8 && depth != 16)) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ImageError("label mask must be 8- or 16-bit grayscale: " + path.string());
    }
    if (depth == 16) png_set_swap(png); // host order
    png_read_update_info(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    std::vector<png_byte> row(rowbytes);
    LabelImage img(width, height);
    for (int y = 0; y < height; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < width; ++x) {
            if (depth == 16) {
                std::uint16_t v;
                std::memcpy(&v, row.data() + 2 * x, 2);
                img.at(x, y) = v;
            } else {
                img.at(x, y) = row[x];
            }
        }
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_label_png(const LabelImage& image, const std::filesystem::path& path)
{
    std::vector<std::vector<png_byte>> rows(image.height, std::vector<png_byte>(std::size_t(image.width) * 2));
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const std::uint16_t v = image.at(x, y);
            rows[y][2 * x] = static_cast<png_byte>(v >> 8); // PNG is big-endian
            rows[y][2 * x + 1] = static_cast<png_byte>(v & 0xff);
        }
    }
    write_png(path, image.width, image.height, 16, PNG_COLOR_TYPE_GRAY, rows);
}

void write_rgba_png(const RgbaImage& image, const std::filesystem::path& path)
{
    std::vector<std::vector<png_byte>> rows(image.height, std::vector<png_byte>(std::size_t(image.width) * 4));
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            for (int c = 0; c < 4; ++c) rows[y][4 * x + c] = quantize(image.at(x, y)[c]);
    write_png(path, image.width, image.height, 8, PNG_COLOR_TYPE_RGB_ALPHA, rows);
}

void write_ppm(const RgbaImage& image, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ImageError("cannot open '" + path.string() + "'");
    out << "P6\n" << image.width << " " << image.height << "\n255\n";
    for (const auto& px : image.pixels) {
        const char rgb[3] = {char(quantize(px[0])), char(quantize(px[1])), char(quantize(px[2]))};
        out.write(rgb, 3);
    }
}

LabelImage intersect_masks(const LabelImage& a, const LabelImage& b)
{
    if (a.width != b.width || a.height != b.height) throw ImageError("mask dimensions differ");
    LabelImage out(a.width, a.height);
    for (std::size_t i = 0; i < a.pixels.size(); ++i) out.pixels[i] = (a.pixels[i] != 0 && b.pixels[i] != 0) ? 1 : 0;
    return out;
}

} // namespace splatdyn
