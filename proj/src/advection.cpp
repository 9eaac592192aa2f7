#include "cloudvol/advection.hpp"

#include <algorithm>
#include <cmath>

namespace cloudvol {

namespace {

// Horizontal shift of one grid axis: resolved base index pair and weight.
struct AxisTap {
    int lo = 0;
    int hi = 0;
    double frac = 0.0;
    bool inside = false;
};

// Mirrors the boundary handling of sample_trilinear so the column path is
// bit-identical to per-voxel trilinear sampling with zero z displacement.
AxisTap axis_tap(double g, int dim) {
    AxisTap t;
    if (g < 0.0 || g > double(dim - 1)) return t;
    int lo = int(std::floor(g));
    if (lo == dim - 1) lo = std::max(0, lo - 1);
    t.lo = lo;
    t.hi = std::min(lo + 1, dim - 1);
    t.frac = g - lo;
    t.inside = true;
    return t;
}

// Writes the advected column at (ix, iy) into out[0..nz): the 4-tap blend of
// source columns, the fz = 0 degenerate case of sample_trilinear.
void advected_column(const ScalarGrid& grid, const AxisTap& tx, const AxisTap& ty, double* out) {
    const int nz = grid.domain.nz;
    if (!tx.inside || !ty.inside) {
        std::fill(out, out + nz, 0.0);
        return;
    }
    const float* c00 = grid.data.data() + grid.domain.index(tx.lo, ty.lo, 0);
    const float* c01 = grid.data.data() + grid.domain.index(tx.lo, ty.hi, 0);
    const float* c10 = grid.data.data() + grid.domain.index(tx.hi, ty.lo, 0);
    const float* c11 = grid.data.data() + grid.domain.index(tx.hi, ty.hi, 0);
    const double fy = ty.frac;
    const double fx = tx.frac;
    for (int iz = 0; iz < nz; ++iz) {
        const double a = double(c00[iz]) * (1.0 - fy) + double(c01[iz]) * fy;
        const double b = double(c10[iz]) * (1.0 - fy) + double(c11[iz]) * fy;
        out[iz] = a * (1.0 - fx) + b * fx;
    }
}

void require_finite_wind(double u, double v, double dt) {
    if (!std::isfinite(u) || !std::isfinite(v) || !std::isfinite(dt))
        throw numeric_error("advect: u, v and dt must be finite");
}

const GridDomain& common_domain(const std::vector<ScalarGrid>& frames, const char* what) {
    if (frames.empty()) throw config_error(std::string(what) + ": empty frame list");
    const GridDomain& d = frames.front().domain;
    for (const auto& f : frames)
        if (f.domain != d) throw config_error(std::string(what) + ": frame domain mismatch");
    return d;
}

} // namespace

ScalarGrid advect(const ScalarGrid& grid, double u, double v, double dt) {
    require_finite_wind(u, v, dt);
    const GridDomain& d = grid.domain;
    const double sx = u * dt / d.voxel_size;
    const double sy = v * dt / d.voxel_size;

    ScalarGrid out(d, 0.0f);
#pragma omp parallel for schedule(static)
    for (int ix = 0; ix < d.nx; ++ix) {
        std::vector<double> col(d.nz);
        const AxisTap tx = axis_tap(double(ix) - sx, d.nx);
        for (int iy = 0; iy < d.ny; ++iy) {
            const AxisTap ty = axis_tap(double(iy) - sy, d.ny);
            advected_column(grid, tx, ty, col.data());
            float* dst = out.data.data() + d.index(ix, iy, 0);
            for (int iz = 0; iz < d.nz; ++iz) dst[iz] = float(col[iz]);
        }
    }
    return out;
}

double wind_objective(const std::vector<ScalarGrid>& frames, double u, double v,
                      const SequenceConfig& cfg) {
    cfg.validate();
    require_finite_wind(u, v, cfg.frame_interval);
    const GridDomain& d = common_domain(frames, "wind_objective");
    const std::size_t T = frames.size();
    const double tc = center_time(T);

    // Per-frame horizontal shifts in grid units.
    std::vector<double> sx(T), sy(T);
    for (std::size_t i = 0; i < T; ++i) {
        const double dt = (tc - double(i)) * cfg.frame_interval;
        sx[i] = u * dt / d.voxel_size;
        sy[i] = v * dt / d.voxel_size;
    }

    // Two-level deterministic reduction: per-x-slab partial sums computed
    // sequentially within a slab, combined serially in slab order.
    std::vector<double> slab_sum(d.nx, 0.0);
#pragma omp parallel for schedule(static)
    for (int ix = 0; ix < d.nx; ++ix) {
        std::vector<double> ref(d.nz), cur(d.nz), sum(d.nz), sumsq(d.nz);
        double partial = 0.0;
        for (int iy = 0; iy < d.ny; ++iy) {
            std::fill(sum.begin(), sum.end(), 0.0);
            std::fill(sumsq.begin(), sumsq.end(), 0.0);
            for (std::size_t i = 0; i < T; ++i) {
                const AxisTap tx = axis_tap(double(ix) - sx[i], d.nx);
                const AxisTap ty = axis_tap(double(iy) - sy[i], d.ny);
                advected_column(frames[i], tx, ty, cur.data());
                if (i == 0) std::copy(cur.begin(), cur.end(), ref.begin());
                // Variance is shift-invariant; accumulating s_i - s_0 keeps
                // identical advected fields at an exact zero.
                for (int iz = 0; iz < d.nz; ++iz) {
                    const double dv = cur[iz] - ref[iz];
                    sum[iz] += dv;
                    sumsq[iz] += dv * dv;
                }
            }
            for (int iz = 0; iz < d.nz; ++iz) {
                const double mean = sum[iz] / double(T);
                partial += std::max(0.0, sumsq[iz] / double(T) - mean * mean);
            }
        }
        slab_sum[ix] = partial;
    }

    double total = 0.0;
    for (int ix = 0; ix < d.nx; ++ix) total += slab_sum[ix];
    return total / double(d.voxel_count());
}

namespace {

struct Candidate {
    double u;
    double v;
};

// Serial argmin with the tie-break chain: objective, then |(u,v)|, then
// lexicographic (u, v).
std::size_t best_candidate(const std::vector<Candidate>& cands, const std::vector<double>& obj) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < cands.size(); ++i) {
        if (obj[i] < obj[best]) {
            best = i;
        } else if (obj[i] == obj[best]) {
            const double ni = cands[i].u * cands[i].u + cands[i].v * cands[i].v;
            const double nb = cands[best].u * cands[best].u + cands[best].v * cands[best].v;
            if (ni < nb ||
                (ni == nb && (cands[i].u < cands[best].u ||
                              (cands[i].u == cands[best].u && cands[i].v < cands[best].v))))
                best = i;
        }
    }
    return best;
}

void score_all(const std::vector<ScalarGrid>& frames, const SequenceConfig& cfg,
               const std::vector<Candidate>& cands, std::vector<double>& obj) {
    obj.assign(cands.size(), 0.0);
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < (long long)cands.size(); ++i)
        obj[i] = wind_objective(frames, cands[i].u, cands[i].v, cfg);
}

} // namespace

WindProfile fit_wind(const std::vector<ScalarGrid>& frames, const SequenceConfig& cfg) {
    cfg.validate();
    common_domain(frames, "fit_wind");
    if (frames.size() == 1) return WindProfile{0.0, 0.0, 0.0, 0};

    const WindSearch& s = cfg.search;
    const int half_coarse = int(std::lround(s.u_max / s.coarse_step));
    std::vector<Candidate> cands;
    cands.reserve(std::size_t(2 * half_coarse + 1) * std::size_t(2 * half_coarse + 1));
    for (int i = -half_coarse; i <= half_coarse; ++i)
        for (int j = -half_coarse; j <= half_coarse; ++j)
            cands.push_back({double(i) * s.coarse_step, double(j) * s.coarse_step});

    std::vector<double> obj;
    score_all(frames, cfg, cands, obj);
    std::size_t best = best_candidate(cands, obj);
    const Candidate coarse = cands[best];
    long evaluations = long(cands.size());

    const int half_refine = int(std::lround(s.coarse_step / s.refine_step));
    cands.clear();
    for (int i = -half_refine; i <= half_refine; ++i)
        for (int j = -half_refine; j <= half_refine; ++j)
            cands.push_back(
                {coarse.u + double(i) * s.refine_step, coarse.v + double(j) * s.refine_step});
    score_all(frames, cfg, cands, obj);
    best = best_candidate(cands, obj);
    evaluations += long(cands.size());

    return WindProfile{cands[best].u, cands[best].v, obj[best], evaluations};
}

ScalarGrid integrate(const std::vector<ScalarGrid>& frames, const WindProfile& wind,
                     const SequenceConfig& cfg) {
    cfg.validate();
    require_finite_wind(wind.u, wind.v, cfg.frame_interval);
    const GridDomain& d = common_domain(frames, "integrate");
    const std::size_t T = frames.size();
    const double tc = center_time(T);

    std::vector<double> sx(T), sy(T);
    for (std::size_t i = 0; i < T; ++i) {
        const double dt = (tc - double(i)) * cfg.frame_interval;
        sx[i] = wind.u * dt / d.voxel_size;
        sy[i] = wind.v * dt / d.voxel_size;
    }

    ScalarGrid out(d, 0.0f);
#pragma omp parallel for schedule(static)
    for (int ix = 0; ix < d.nx; ++ix) {
        std::vector<double> cur(d.nz), acc(d.nz);
        for (int iy = 0; iy < d.ny; ++iy) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t i = 0; i < T; ++i) {
                const AxisTap tx = axis_tap(double(ix) - sx[i], d.nx);
                const AxisTap ty = axis_tap(double(iy) - sy[i], d.ny);
                advected_column(frames[i], tx, ty, cur.data());
                for (int iz = 0; iz < d.nz; ++iz) acc[iz] += cur[iz];
            }
            float* dst = out.data.data() + d.index(ix, iy, 0);
            for (int iz = 0; iz < d.nz; ++iz)
                dst[iz] = float(std::max(0.0, acc[iz] / double(T)));
        }
    }
    return out;
}

} // namespace cloudvol
