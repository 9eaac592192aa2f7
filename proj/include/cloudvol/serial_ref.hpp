#pragma once

#include "cloudvol/advection.hpp"
#include "cloudvol/carving.hpp"
#include "cloudvol/evaluation.hpp"
#include "cloudvol/synthetic.hpp"

// Straightforward single-threaded implementations of the hot kernels. They
// follow the per-voxel / per-pixel contracts directly (per-voxel trilinear
// sampling instead of the column fast path, plain loops instead of OpenMP)
// and must produce bit-identical results to the parallel kernels. Tests
// compare the two; tools/bench_kernels times them.
namespace cloudvol::serial {

CarvingGrid carve_single_view(const GridDomain& domain, const CameraModel& cam,
                              const DepthMap& depth, const CarveConfig& cfg);

CarvingGrid silhouette_carve(const GridDomain& domain, const std::vector<CameraModel>& cams,
                             const std::vector<BinaryImage>& masks);

ScalarGrid tsdf_fuse(const GridDomain& domain, const std::vector<CameraModel>& cams,
                     const std::vector<DepthMap>& depths, double truncation = 1000.0);

ScalarGrid advect(const ScalarGrid& grid, double u, double v, double dt);

double wind_objective(const std::vector<ScalarGrid>& frames, double u, double v,
                      const SequenceConfig& cfg);

ScalarGrid integrate(const std::vector<ScalarGrid>& frames, const WindProfile& wind,
                     const SequenceConfig& cfg);

DepthMap render_depth(const DensityGrid& grid, const CameraModel& cam, double surface_threshold,
                      double step = 25.0);

OpacityMap render_opacity(const DensityGrid& grid, const CameraModel& cam, double step = 25.0);

} // namespace cloudvol::serial
