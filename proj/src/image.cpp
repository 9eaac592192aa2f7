#include "cloudvol/image.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace cloudvol {

DepthMap::DepthMap(int w, int h, float fill) : width(w), height(h) {
    if (w < 1 || h < 1) throw config_error("DepthMap: width and height must be >= 1");
    data.assign(std::size_t(w) * h, fill);
}

void DepthMap::validate() const {
    if (data.size() != std::size_t(width) * height)
        throw numeric_error("DepthMap: data length does not match dimensions");
    for (std::size_t i = 0; i < data.size(); ++i) {
        const float v = data[i];
        if (std::isnan(v) || v <= 0.0f)
            throw numeric_error("DepthMap: non-positive or NaN depth at pixel " + std::to_string(i));
    }
}

namespace {
constexpr char kMagic[4] = {'D', 'M', 'A', 'P'};

void put_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {(unsigned char)(v & 0xff), (unsigned char)((v >> 8) & 0xff),
                          (unsigned char)((v >> 16) & 0xff), (unsigned char)((v >> 24) & 0xff)};
    out.write(reinterpret_cast<char*>(b), 4);
}

std::uint32_t get_u32(const unsigned char* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}
} // namespace

void write_depth_map(const DepthMap& d, const std::string& path) {
    d.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open for writing: " + path);
    out.write(kMagic, 4);
    put_u32(out, std::uint32_t(d.width));
    put_u32(out, std::uint32_t(d.height));
    for (float v : d.data) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        put_u32(out, bits);
    }
    if (!out) throw io_error("write failed: " + path);
}

DepthMap read_depth_map(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open for reading: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < 12) throw io_error(path + ": truncated header at byte offset " +
                                          std::to_string(bytes.size()));
    if (std::memcmp(p, kMagic, 4) != 0)
        throw io_error(path + ": bad magic (expected \"DMAP\") at byte offset 0");
    const std::uint32_t w = get_u32(p + 4);
    const std::uint32_t h = get_u32(p + 8);
    if (w < 1 || h < 1) throw io_error(path + ": zero image dimension at byte offset 4");
    const std::size_t expected = 12 + std::size_t(w) * h * 4;
    if (bytes.size() != expected)
        throw io_error(path + ": payload size mismatch at byte offset " +
                       std::to_string(bytes.size()) + " (expected " + std::to_string(expected) + ")");
    DepthMap d(int(w), int(h), 0.0f);
    for (std::size_t i = 0; i < std::size_t(w) * h; ++i) {
        std::uint32_t bits = get_u32(p + 12 + 4 * i);
        float v;
        std::memcpy(&v, &bits, sizeof(v));
        d.data[i] = v;
    }
    d.validate();
    return d;
}

} // namespace cloudvol
