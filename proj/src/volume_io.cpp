#include "cloudvol/volume_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

namespace cloudvol {

namespace {

constexpr char kMagic[4] = {'V', 'O', 'L', '1'};
constexpr std::size_t kHeaderSize = 49;

void put_u32(std::string& buf, std::uint32_t v) {
    buf.push_back(char(v & 0xff));
    buf.push_back(char((v >> 8) & 0xff));
    buf.push_back(char((v >> 16) & 0xff));
    buf.push_back(char((v >> 24) & 0xff));
}

void put_f64(std::string& buf, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) buf.push_back(char((bits >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

double get_f64(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t(p[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

float get_f32(const unsigned char* p) {
    std::uint32_t bits = get_u32(p);
    float v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

std::string header(const GridDomain& d, VolumeKind kind) {
    std::string buf;
    buf.reserve(kHeaderSize);
    buf.append(kMagic, 4);
    put_u32(buf, std::uint32_t(d.nx));
    put_u32(buf, std::uint32_t(d.ny));
    put_u32(buf, std::uint32_t(d.nz));
    buf.push_back(char(kind));
    put_f64(buf, d.origin.x);
    put_f64(buf, d.origin.y);
    put_f64(buf, d.origin.z);
    put_f64(buf, d.voxel_size);
    return buf;
}

void write_bytes(const std::string& path, const std::string& head, const char* payload,
                 std::size_t payload_size) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open for writing: " + path);
    out.write(head.data(), std::streamsize(head.size()));
    out.write(payload, std::streamsize(payload_size));
    if (!out) throw io_error("write failed: " + path);
}

[[noreturn]] void format_error(const std::string& path, std::size_t offset, const std::string& what) {
    throw io_error(path + ": " + what + " at byte offset " + std::to_string(offset));
}

} // namespace

void write_volume(const ScalarGrid& grid, const std::string& path) {
    grid.domain.validate();
    if (grid.data.size() != grid.domain.voxel_count())
        throw numeric_error("density grid: data length does not match dims");
    validate_density(grid);
    // x86 floats are already little-endian IEEE754; serialize explicitly anyway.
    std::string payload;
    payload.reserve(grid.data.size() * 4);
    for (float f : grid.data) {
        std::uint32_t bits;
        std::memcpy(&bits, &f, sizeof(bits));
        put_u32(payload, bits);
    }
    write_bytes(path, header(grid.domain, VolumeKind::density), payload.data(), payload.size());
}

void write_volume(const CarvingGrid& grid, const std::string& path) {
    grid.domain.validate();
    if (grid.data.size() != grid.domain.voxel_count())
        throw numeric_error("binary grid: data length does not match dims");
    validate_binary(grid);
    write_bytes(path, header(grid.domain, VolumeKind::binary),
                reinterpret_cast<const char*>(grid.data.data()), grid.data.size());
}

AnyVolume read_volume(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open for reading: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());

    if (bytes.size() < kHeaderSize) format_error(path, bytes.size(), "truncated header");
    if (std::memcmp(p, kMagic, 4) != 0) format_error(path, 0, "bad magic (expected \"VOL1\")");

    GridDomain d;
    const std::uint32_t nx = get_u32(p + 4);
    const std::uint32_t ny = get_u32(p + 8);
    const std::uint32_t nz = get_u32(p + 12);
    if (nx < 1 || ny < 1 || nz < 1) format_error(path, 4, "zero voxel dimension");
    // 2^31 voxels is far beyond any grid this pipeline produces.
    const std::uint64_t count = std::uint64_t(nx) * ny * nz;
    if (count > (std::uint64_t(1) << 31)) format_error(path, 4, "implausible voxel count");
    const std::uint8_t kind = p[16];
    if (kind > 1) format_error(path, 16, "unknown volume kind " + std::to_string(int(kind)));
    d.origin = {get_f64(p + 17), get_f64(p + 25), get_f64(p + 33)};
    d.voxel_size = get_f64(p + 41);
    if (!(d.voxel_size > 0.0) || !std::isfinite(d.voxel_size))
        format_error(path, 41, "invalid voxel size");
    d.nx = int(nx);
    d.ny = int(ny);
    d.nz = int(nz);

    const std::size_t elem = (kind == 0) ? 4 : 1;
    const std::size_t expected = kHeaderSize + std::size_t(count) * elem;
    if (bytes.size() < expected)
        format_error(path, bytes.size(), "truncated payload (expected " + std::to_string(expected) +
                                             " bytes total)");
    if (bytes.size() > expected)
        format_error(path, expected, "trailing bytes after payload");

    if (kind == 0) {
        ScalarGrid g(d);
        for (std::size_t i = 0; i < count; ++i) {
            const float v = get_f32(p + kHeaderSize + 4 * i);
            if (!std::isfinite(v) || v < 0.0f)
                format_error(path, kHeaderSize + 4 * i, "non-finite or negative density value");
            g.data[i] = v;
        }
        return g;
    }
    CarvingGrid g(d);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint8_t v = p[kHeaderSize + i];
        if (v > 1) format_error(path, kHeaderSize + i, "binary payload value not in {0,1}");
        g.data[i] = v;
    }
    return g;
}

ScalarGrid read_density_volume(const std::string& path) {
    AnyVolume v = read_volume(path);
    if (auto* g = std::get_if<ScalarGrid>(&v)) return std::move(*g);
    throw io_error(path + ": expected density volume, found binary");
}

CarvingGrid read_binary_volume(const std::string& path) {
    AnyVolume v = read_volume(path);
    if (auto* g = std::get_if<CarvingGrid>(&v)) return std::move(*g);
    throw io_error(path + ": expected binary volume, found density");
}

} // namespace cloudvol
