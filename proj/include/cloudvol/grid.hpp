#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

#include "cloudvol/errors.hpp"
#include "cloudvol/vec3.hpp"

namespace cloudvol {

/// Regular world-aligned voxel lattice. Grid coordinate g maps to world
/// position origin + g * voxel_size; integer coordinates are the voxel
/// centers where data is stored. World frame is x east, y north, z up,
/// in meters.
struct GridDomain {
    Vec3 origin{-5000.0, -5000.0, 400.0}; // minimum corner, meters
    double voxel_size = 50.0;             // meters
    int nx = 200;
    int ny = 200;
    int nz = 72;

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
               static_cast<std::size_t>(nz);
    }

    // z-fastest layout keeps vertical columns contiguous.
    std::size_t index(int ix, int iy, int iz) const {
        return (static_cast<std::size_t>(ix) * ny + iy) * nz + iz;
    }

    bool operator==(const GridDomain& o) const {
        return origin.x == o.origin.x && origin.y == o.origin.y && origin.z == o.origin.z &&
               voxel_size == o.voxel_size && nx == o.nx && ny == o.ny && nz == o.nz;
    }
    bool operator!=(const GridDomain& o) const { return !(*this == o); }

    void validate() const {
        if (!(voxel_size > 0.0)) throw config_error("GridDomain: voxel_size must be > 0");
        if (nx < 1 || ny < 1 || nz < 1) throw config_error("GridDomain: all dims must be >= 1");
    }
};

template <typename T>
struct VoxelGrid {
    GridDomain domain;
    std::vector<T> data;

    VoxelGrid() = default;
    explicit VoxelGrid(const GridDomain& d, T fill = T{}) : domain(d) {
        domain.validate();
        data.assign(domain.voxel_count(), fill);
    }

    T& at(int ix, int iy, int iz) { return data[domain.index(ix, iy, iz)]; }
    const T& at(int ix, int iy, int iz) const { return data[domain.index(ix, iy, iz)]; }
};

/// Scalar extinction densities in 1/m. Values must be finite and >= 0.
using DensityGrid = VoxelGrid<float>;
/// Same storage, no sign restriction (TSDF values live in [-1, 1]).
using ScalarGrid = VoxelGrid<float>;
/// Binary occupancy-possibility grid: 1 = not carved, 0 = carved empty.
using CarvingGrid = VoxelGrid<std::uint8_t>;

inline Vec3 world_to_grid(const Vec3& p, const GridDomain& domain) {
    return (p - domain.origin) / domain.voxel_size;
}

inline Vec3 grid_to_world(const Vec3& g, const GridDomain& domain) {
    return domain.origin + g * domain.voxel_size;
}

inline Vec3 voxel_center(const GridDomain& domain, int ix, int iy, int iz) {
    return grid_to_world(Vec3{double(ix), double(iy), double(iz)}, domain);
}

/// Trilinear interpolation of the 8 surrounding voxels. Coordinates outside
/// [0, dim-1] in any axis return 0 (empty-outside boundary condition).
/// Interpolates z, then y, then x; exact at integer coordinates.
double sample_trilinear(const VoxelGrid<float>& grid, const Vec3& g);

/// Throws numeric_error unless every value is finite and >= 0.
void validate_density(const VoxelGrid<float>& grid);
/// Throws numeric_error unless every element is 0 or 1.
void validate_binary(const VoxelGrid<std::uint8_t>& grid);

} // namespace cloudvol
