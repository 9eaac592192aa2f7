#pragma once

#include <string>
#include <variant>

#include "cloudvol/grid.hpp"

namespace cloudvol {

/// On-disk volume format "VOL1", little endian throughout, no compression:
///
///   bytes 0-3    magic "VOL1"
///   bytes 4-15   u32 Nx, Ny, Nz
///   byte  16     u8 kind: 0 = density f32, 1 = binary u8
///   bytes 17-40  f64 origin x, y, z (meters)
///   bytes 41-48  f64 voxel_size (meters)
///   bytes 49-    payload, z-fastest layout: index = (ix*Ny + iy)*Nz + iz
///
/// Round-trips are bit-exact. Malformed files (wrong magic, bad dims,
/// truncated payload, invalid values) raise io_error naming the byte offset.
enum class VolumeKind : std::uint8_t { density = 0, binary = 1 };

using AnyVolume = std::variant<ScalarGrid, CarvingGrid>;

void write_volume(const ScalarGrid& grid, const std::string& path);
void write_volume(const CarvingGrid& grid, const std::string& path);

AnyVolume read_volume(const std::string& path);

/// Convenience readers; throw io_error if the file holds the other kind.
ScalarGrid read_density_volume(const std::string& path);
CarvingGrid read_binary_volume(const std::string& path);

} // namespace cloudvol
