#pragma once

#include <cstdint>
#include <vector>

#include "cloudvol/camera.hpp"
#include "cloudvol/grid.hpp"

namespace cloudvol {

/// Scene parameterization mirroring the synthetic-dataset axes: cloud
/// fraction, optical density, cloud base altitude, cloud height, sun angles.
/// Sun azimuth/zenith are metadata only; the pipeline has no photometric
/// channel.
struct SceneParams {
    double cloud_fraction = 0.4;   // horizontal fraction of cloudy columns, [0, 1]
    double optical_density = 0.04; // peak extinction, 1/m
    double base_altitude = 1000.0; // m
    double cloud_height = 1200.0;  // layer thickness, m
    double sun_azimuth_deg = 120.0;
    double sun_zenith_deg = 35.0;
    double noise_scale = 1500.0;   // horizontal feature size of the noise field, m
    double frame_noise_std = 0.0;  // per-frame additive density noise, 1/m
    std::uint64_t seed = 0;

    void validate(const GridDomain& domain) const;
};

/// Stereo-error model for corrupt_depth.
struct DepthNoise {
    double gaussian_std = 0.0;  // m
    double dropout_prob = 0.0;  // pixel becomes sky
    double quantization = 0.0;  // m, 0 = off

    void validate() const {
        if (!(gaussian_std >= 0.0) || !(dropout_prob >= 0.0) || !(quantization >= 0.0))
            throw config_error("DepthNoise: parameters must be >= 0");
        if (dropout_prob > 1.0) throw config_error("DepthNoise: dropout_prob must be <= 1");
    }
};

/// Smooth 2D gradient noise in (0, 1), deterministic per seed. Exposed for
/// tests and the benchmark driver.
double gradient_noise_2d(std::uint64_t seed, double x, double y);

/// Procedural single-layer cumulus field. A horizontal gradient-noise field
/// thresholded at the (1 - cloud_fraction) quantile selects cloudy columns;
/// inside the mask, density = optical_density * vertical_bump(z) *
/// (n - threshold) / (1 - threshold) with the bump supported on
/// [base_altitude, base_altitude + cloud_height].
DensityGrid generate_cloud_field(const GridDomain& domain, const SceneParams& params);

struct SequenceSample {
    std::vector<DensityGrid> frames;
    double wind_u = 0.0; // ground truth, m/s
    double wind_v = 0.0;
};

/// Temporal sequence: frame i is the base field advected by
/// (u, v) * (i - t_c) * frame_interval, so the frame at the center time
/// equals the base field. frame_noise_std > 0 adds per-frame density noise.
SequenceSample generate_sequence(const GridDomain& domain, const SceneParams& params, double u,
                                 double v, int frames, double frame_interval);

/// Single frame of the sequence above, for streaming pipelines that do not
/// want all frames resident at once.
DensityGrid sequence_frame(const DensityGrid& base, const SceneParams& params, double u, double v,
                           int index, int frames, double frame_interval);

/// Depth stand-in for a stereo matcher: per pixel, the ray is marched
/// through the domain in uniform steps and the z-depth of the first sample
/// with density >= surface_threshold is reported (one bisection refinement
/// between the bracketing samples); +inf if the ray never crosses.
DepthMap render_depth(const DensityGrid& grid, const CameraModel& cam, double surface_threshold,
                      double step = 25.0);

/// Applies Gaussian depth noise, optional quantization, and sky dropout.
/// Per-pixel random streams are keyed by (seed, pixel index); a zero-noise
/// config is the identity. Never produces a depth <= 0.
DepthMap corrupt_depth(const DepthMap& depth, const DepthNoise& noise, std::uint64_t seed);

/// mask = 1 where depth < threshold.
BinaryImage render_silhouette(const DepthMap& depth, double threshold = 20000.0);

} // namespace cloudvol
