#pragma once

#include <vector>

#include "cloudvol/camera.hpp"
#include "cloudvol/grid.hpp"

namespace cloudvol {

struct CarveConfig {
    double epsilon = 1000.0; // margin (m) allowing for depth errors
    int min_views = 1;       // observations required before carving binds

    void validate() const {
        if (!(epsilon >= 0.0)) throw config_error("CarveConfig: epsilon must be >= 0");
        if (min_views < 1) throw config_error("CarveConfig: min_views must be >= 1");
    }
};

/// Single-view depth carving. A voxel center is kept (1) when the view has no
/// information about it, or when it is less than epsilon in front of the
/// observed surface: keep iff z(x) > D(uv) - epsilon. Sky pixels put the
/// surface at infinite depth, carving the entire ray.
CarvingGrid carve_single_view(const GridDomain& domain, const CameraModel& cam,
                              const DepthMap& depth, const CarveConfig& cfg);

/// Voxelwise product of the per-view carvings. All inputs must share the
/// domain; the list must be non-empty.
CarvingGrid combine_carvings(const std::vector<CarvingGrid>& carvings);

/// One-pass equivalent of carve_single_view + combine_carvings that also
/// honors cfg.min_views: a voxel observed by fewer views is kept regardless
/// of what those views say.
CarvingGrid depth_carve(const GridDomain& domain, const std::vector<CameraModel>& cams,
                        const std::vector<DepthMap>& depths, const CarveConfig& cfg);

/// Classic visual-hull carving: a voxel is kept iff every view that observes
/// it projects it onto a cloud (mask = 1) pixel.
CarvingGrid silhouette_carve(const GridDomain& domain, const std::vector<CameraModel>& cams,
                             const std::vector<BinaryImage>& masks);

/// Per voxel, the mean over observing views of clamp(d / truncation, -1, 1)
/// with d from signed_view_distance (sky contributes -1). Voxels observed by
/// no view get 0. Views are accumulated in list order so the result does not
/// depend on thread count.
ScalarGrid tsdf_fuse(const GridDomain& domain, const std::vector<CameraModel>& cams,
                     const std::vector<DepthMap>& depths, double truncation = 1000.0);

struct FeatureVolume {
    GridDomain domain;
    int channels = 0;
    std::vector<float> data;          // (((ix*Ny + iy)*Nz + iz)*C + c)
    std::vector<std::uint32_t> counts; // contributing views per voxel

    const float* at(int ix, int iy, int iz) const {
        return data.data() + domain.index(ix, iy, iz) * channels;
    }
    std::uint32_t count_at(int ix, int iy, int iz) const {
        return counts[domain.index(ix, iy, iz)];
    }
};

/// Backprojects per-view feature images into the grid: every voxel center is
/// projected into every camera; in-frustum views contribute their
/// nearest-pixel feature vector and the result is the mean over contributors
/// (fixed view-order summation). Unobserved voxels keep a zero vector.
FeatureVolume backproject_features(const GridDomain& domain, const std::vector<CameraModel>& cams,
                                   const std::vector<FeatureImage>& images);

/// Kept voxels take fill_value (1/m), carved voxels 0.
ScalarGrid carving_to_density(const CarvingGrid& carving, double fill_value = 0.04);

} // namespace cloudvol
