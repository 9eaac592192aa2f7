#pragma once

#include <vector>

#include "cloudvol/grid.hpp"

namespace cloudvol {

struct WindProfile {
    double u = 0.0;          // east component, m/s
    double v = 0.0;          // north component, m/s
    double objective = 0.0;  // achieved mean-variance value
    long evaluations = 0;    // number of (u, v) candidates scored
};

struct WindSearch {
    double u_max = 30.0;      // coarse range is [-u_max, u_max] per axis
    double coarse_step = 2.0; // m/s
    double refine_step = 0.25; // m/s
};

struct SequenceConfig {
    double frame_interval = 5.0; // seconds between frames
    int window = 20;             // frame count T
    WindSearch search;

    void validate() const {
        if (!(frame_interval > 0.0))
            throw config_error("SequenceConfig: frame_interval must be > 0");
        if (window < 1) throw config_error("SequenceConfig: window must be >= 1");
        if (!(search.coarse_step > 0.0) || !(search.refine_step > 0.0))
            throw config_error("SequenceConfig: search steps must be > 0");
        if (search.refine_step > search.coarse_step)
            throw config_error("SequenceConfig: refine step must be <= coarse step");
        if (!(search.u_max >= 0.0)) throw config_error("SequenceConfig: u_max must be >= 0");
    }
};

/// Center time of a T-frame window, in frame-index units (fractional for
/// even T).
inline double center_time(std::size_t frames) { return (double(frames) - 1.0) / 2.0; }

/// Semi-Lagrangian backtrace: out(x) = grid(x - (u, v, 0) * dt), evaluated by
/// trilinear sampling with the empty-outside boundary. The displacement is
/// applied in grid coordinates ((u, v) * dt / voxel_size), which is exact for
/// integer-voxel shifts. Throws numeric_error for non-finite u, v or dt.
ScalarGrid advect(const ScalarGrid& grid, double u, double v, double dt);

/// Eq.-style temporal agreement score: every frame i is advected to the
/// window center t_c = (T-1)/2 (dt = (t_c - i) * frame_interval), then the
/// per-voxel population variance across the T advected fields is averaged
/// over the whole grid. Accumulation is per-voxel in fixed frame order and
/// the grid reduction runs over x-slabs in index order, so the result is
/// bit-identical for any thread count.
double wind_objective(const std::vector<ScalarGrid>& frames, double u, double v,
                      const SequenceConfig& cfg);

/// Grid search for the wind that minimizes wind_objective: coarse pass over
/// [-u_max, u_max]^2 at coarse_step, then a refinement pass at refine_step
/// within +-coarse_step of the coarse argmin. Ties break toward the smallest
/// |(u, v)|, then lexicographically. A single frame fits (0, 0) with no
/// evaluations.
WindProfile fit_wind(const std::vector<ScalarGrid>& frames, const SequenceConfig& cfg);

/// Mean of all frames advected to the window center with the fitted wind,
/// clamped at 0.
ScalarGrid integrate(const std::vector<ScalarGrid>& frames, const WindProfile& wind,
                     const SequenceConfig& cfg);

} // namespace cloudvol
