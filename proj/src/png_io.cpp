#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cloudvol/evaluation.hpp"

namespace cloudvol {

void write_png_gray(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& pixels) {
    if (width < 1 || height < 1 || pixels.size() != std::size_t(width) * height)
        throw config_error("write_png_gray: bad image dimensions");

    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw io_error("cannot open for writing: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw io_error("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw io_error("libpng write failed: " + path);
    }

    png_init_io(png, fp);
    png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y)
        png_write_row(png, const_cast<png_bytep>(pixels.data() + std::size_t(y) * width));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

void write_png_mask(const std::string& path, const BinaryImage& mask) {
    std::vector<std::uint8_t> pixels(mask.data.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = mask.data[i] ? 255 : 0;
    write_png_gray(path, mask.width, mask.height, pixels);
}

void write_png_opacity(const std::string& path, const OpacityMap& om) {
    std::vector<std::uint8_t> pixels(om.opacity.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        const double v = std::clamp(double(om.opacity[i]), 0.0, 1.0);
        pixels[i] = std::uint8_t(std::lround(v * 255.0));
    }
    write_png_gray(path, om.width, om.height, pixels);
}

} // namespace cloudvol
