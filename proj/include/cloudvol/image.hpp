#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cloudvol/errors.hpp"

namespace cloudvol {

/// Per-pixel z-depth image in meters, row-major. +inf encodes sky (no
/// surface along the ray); every finite value must be > 0.
struct DepthMap {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    DepthMap() = default;
    DepthMap(int w, int h, float fill);

    float at(int x, int y) const { return data[std::size_t(y) * width + x]; }
    float& at(int x, int y) { return data[std::size_t(y) * width + x]; }

    void validate() const;
};

struct BinaryImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    BinaryImage() = default;
    BinaryImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(std::size_t(w) * h, fill) {}

    std::uint8_t at(int x, int y) const { return data[std::size_t(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return data[std::size_t(y) * width + x]; }
};

/// C-channel float image, row-major, channels interleaved:
/// data[(y*width + x)*channels + c].
struct FeatureImage {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<float> data;

    FeatureImage() = default;
    FeatureImage(int w, int h, int c)
        : width(w), height(h), channels(c), data(std::size_t(w) * h * c, 0.0f) {}

    const float* at(int x, int y) const {
        return data.data() + (std::size_t(y) * width + x) * channels;
    }
    float* at(int x, int y) { return data.data() + (std::size_t(y) * width + x) * channels; }
};

/// Depth-map file format "DMAP": magic (4 bytes), little-endian u32 width and
/// height, then f32 little-endian row-major z-depths with IEEE +inf for sky.
void write_depth_map(const DepthMap& d, const std::string& path);
DepthMap read_depth_map(const std::string& path);

} // namespace cloudvol
