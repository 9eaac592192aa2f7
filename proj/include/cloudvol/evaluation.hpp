#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cloudvol/camera.hpp"
#include "cloudvol/grid.hpp"

namespace cloudvol {

struct OpacityMap {
    int width = 0;
    int height = 0;
    std::vector<float> opacity; // 1 - exp(-optical depth), in [0, 1]
    std::vector<float> depth;   // z-depth of the 50% transmittance crossing, +inf if never

    float opacity_at(int x, int y) const { return opacity[std::size_t(y) * width + x]; }
    float depth_at(int x, int y) const { return depth[std::size_t(y) * width + x]; }
};

struct EvalThresholds {
    double opacity_threshold = 0.15;
    double depth_threshold = 4000.0;            // m; beyond this is background
    double silhouette_depth_threshold = 20000.0; // m; mask = depth < this
    double ray_step = 25.0;                     // m

    void validate() const {
        if (!(opacity_threshold > 0.0 && opacity_threshold <= 1.0))
            throw config_error("EvalThresholds: opacity_threshold must be in (0, 1]");
        if (!(depth_threshold > 0.0) || !(silhouette_depth_threshold > 0.0))
            throw config_error("EvalThresholds: depth thresholds must be > 0");
        if (!(ray_step > 0.0)) throw config_error("EvalThresholds: ray_step must be > 0");
    }
};

/// Density level whose single-voxel optical depth reaches the segmentation
/// opacity threshold: sigma = -ln(1 - threshold) / voxel_size. Used as the
/// default surface threshold for depth rendering.
double segmentation_density_level(double opacity_threshold, double voxel_size);

/// Beer-Lambert rendering: per pixel, optical depth tau accumulates
/// sigma(sample) * step along the ray through the domain (midpoint samples,
/// partial final interval), opacity = 1 - exp(-tau), and the expected depth
/// is the z-depth where accumulated transmittance first falls below 0.5.
OpacityMap render_opacity(const DensityGrid& grid, const CameraModel& cam, double step = 25.0);

/// mask = (opacity >= opacity_threshold) AND (expected depth <= depth_threshold).
BinaryImage segment(const OpacityMap& om, double opacity_threshold, double depth_threshold);

/// 100 * |gt AND pred| / |gt OR pred|; nullopt (clear-sky exclusion) when the
/// union is empty.
std::optional<double> jaccard(const BinaryImage& gt, const BinaryImage& pred);

/// 100 * |mean(gt) - mean(pred)|.
double coverage_error(const BinaryImage& gt, const BinaryImage& pred);

/// Split L1 metric: cloud and empty voxels (gt > 0 splits them) are averaged
/// separately, (1/N_c) * sum_cloud |gt - pred| + (lambda/N) * sum_empty
/// |gt - pred|, weighing cloud voxels higher. lambda must be in [0, 1].
double split_l1(const DensityGrid& gt, const DensityGrid& pred, double lambda);

struct MetricsReport {
    std::optional<double> jaccard;  // percent; absent on clear-sky exclusion
    double coverage_error = 0.0;    // percent
    std::optional<double> split_l1;
    std::int64_t cloud_voxels = 0;
    std::int64_t empty_voxels = 0;
};

/// Renders both grids from the camera, segments with identical thresholds,
/// and fills a full report (split_l1 uses the given lambda).
MetricsReport evaluate_reconstruction(const DensityGrid& gt, const DensityGrid& pred,
                                      const CameraModel& cam, const EvalThresholds& thresholds,
                                      double lambda = 1.0);

/// 8-bit grayscale PNG writers for masks and opacity maps.
void write_png_gray(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& pixels);
void write_png_mask(const std::string& path, const BinaryImage& mask);
void write_png_opacity(const std::string& path, const OpacityMap& om);

} // namespace cloudvol
