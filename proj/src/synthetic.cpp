#include "cloudvol/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cloudvol/advection.hpp"
#include "cloudvol/rng.hpp"

namespace cloudvol {

void SceneParams::validate(const GridDomain& domain) const {
    if (!(cloud_fraction >= 0.0 && cloud_fraction <= 1.0))
        throw config_error("SceneParams: cloud_fraction must be in [0, 1]");
    if (!(optical_density > 0.0)) throw config_error("SceneParams: optical_density must be > 0");
    if (!(cloud_height > 0.0)) throw config_error("SceneParams: cloud_height must be > 0");
    if (!(noise_scale > 0.0)) throw config_error("SceneParams: noise_scale must be > 0");
    if (!(frame_noise_std >= 0.0)) throw config_error("SceneParams: frame_noise_std must be >= 0");
    const double ceiling = domain.origin.z + (domain.nz - 1) * domain.voxel_size;
    if (base_altitude < domain.origin.z)
        throw config_error("SceneParams: base_altitude below the domain floor");
    if (base_altitude + cloud_height > ceiling)
        throw config_error("SceneParams: cloud layer exceeds the domain ceiling");
}

namespace {

constexpr std::uint64_t kNoiseTag = 0x676e6f6973ULL;  // "gnois"
constexpr std::uint64_t kFrameTag = 0x666e6f6973ULL;  // "fnois"
constexpr std::uint64_t kDepthTag = 0x646e6f6973ULL;  // "dnois"

// Unit gradient at an integer lattice point.
void lattice_gradient(std::uint64_t seed, long long ix, long long iy, double& gx, double& gy) {
    const std::uint64_t h =
        splitmix64(hash_combine(hash_combine(seed ^ kNoiseTag, std::uint64_t(ix)),
                                std::uint64_t(iy)));
    const double angle = double(h >> 11) * 0x1.0p-53 * 6.283185307179586;
    gx = std::cos(angle);
    gy = std::sin(angle);
}

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double corner_dot(std::uint64_t seed, long long cx, long long cy, double dx, double dy) {
    double gx, gy;
    lattice_gradient(seed, cx, cy, gx, gy);
    return gx * dx + gy * dy;
}

} // namespace

double gradient_noise_2d(std::uint64_t seed, double x, double y) {
    const double fxx = std::floor(x);
    const double fyy = std::floor(y);
    const long long x0 = (long long)fxx;
    const long long y0 = (long long)fyy;
    const double dx = x - fxx;
    const double dy = y - fyy;

    const double n00 = corner_dot(seed, x0, y0, dx, dy);
    const double n10 = corner_dot(seed, x0 + 1, y0, dx - 1.0, dy);
    const double n01 = corner_dot(seed, x0, y0 + 1, dx, dy - 1.0);
    const double n11 = corner_dot(seed, x0 + 1, y0 + 1, dx - 1.0, dy - 1.0);

    const double u = fade(dx);
    const double v = fade(dy);
    const double nx0 = n00 + u * (n10 - n00);
    const double nx1 = n01 + u * (n11 - n01);
    const double n = nx0 + v * (nx1 - nx0);

    // 2D Perlin with unit gradients stays strictly inside +-sqrt(2)/2, so
    // this maps into the open interval (0, 1).
    return 0.5 + 0.5 * (n / 0.70720);
}

DensityGrid generate_cloud_field(const GridDomain& domain, const SceneParams& params) {
    domain.validate();
    params.validate(domain);

    DensityGrid grid(domain, 0.0f);
    if (params.cloud_fraction <= 0.0) return grid;

    const std::size_t columns = std::size_t(domain.nx) * domain.ny;
    std::vector<double> noise(columns);
#pragma omp parallel for schedule(static)
    for (int ix = 0; ix < domain.nx; ++ix) {
        const double wx = (domain.origin.x + ix * domain.voxel_size) / params.noise_scale;
        for (int iy = 0; iy < domain.ny; ++iy) {
            const double wy = (domain.origin.y + iy * domain.voxel_size) / params.noise_scale;
            noise[std::size_t(ix) * domain.ny + iy] = gradient_noise_2d(params.seed, wx, wy);
        }
    }

    double threshold = 0.0;
    if (params.cloud_fraction < 1.0) {
        std::vector<double> sorted(noise);
        const std::size_t k = std::min(
            columns - 1, std::size_t(std::floor((1.0 - params.cloud_fraction) * double(columns))));
        std::nth_element(sorted.begin(), sorted.begin() + k, sorted.end());
        threshold = sorted[k];
    }

#pragma omp parallel for schedule(static)
    for (int ix = 0; ix < domain.nx; ++ix) {
        for (int iy = 0; iy < domain.ny; ++iy) {
            const double n = noise[std::size_t(ix) * domain.ny + iy];
            if (!(n > threshold) && params.cloud_fraction < 1.0) continue;
            const double scale = (n - threshold) / (1.0 - threshold);
            for (int iz = 0; iz < domain.nz; ++iz) {
                const double z = domain.origin.z + iz * domain.voxel_size;
                const double t = (z - params.base_altitude) / params.cloud_height;
                if (t <= 0.0 || t >= 1.0) continue;
                const double bump = 4.0 * t * (1.0 - t);
                grid.at(ix, iy, iz) = float(params.optical_density * bump * scale);
            }
        }
    }
    return grid;
}

DensityGrid sequence_frame(const DensityGrid& base, const SceneParams& params, double u, double v,
                           int index, int frames, double frame_interval) {
    if (frames < 1) throw config_error("sequence_frame: need at least one frame");
    if (index < 0 || index >= frames) throw config_error("sequence_frame: index out of range");
    if (!(frame_interval > 0.0)) throw config_error("sequence_frame: frame_interval must be > 0");
    if (!std::isfinite(u) || !std::isfinite(v))
        throw numeric_error("sequence_frame: wind must be finite");

    const double tc = center_time(std::size_t(frames));
    DensityGrid frame = advect(base, u, v, (double(index) - tc) * frame_interval);
    if (params.frame_noise_std > 0.0) {
        const std::size_t n = frame.data.size();
#pragma omp parallel for schedule(static)
        for (long long j = 0; j < (long long)n; ++j) {
            RandomStream rng(params.seed ^ kFrameTag,
                             hash_combine(std::uint64_t(index), std::uint64_t(j)));
            const double noisy = double(frame.data[j]) + params.frame_noise_std * rng.gaussian();
            frame.data[j] = float(std::max(0.0, noisy));
        }
    }
    return frame;
}

SequenceSample generate_sequence(const GridDomain& domain, const SceneParams& params, double u,
                                 double v, int frames, double frame_interval) {
    if (frames < 1) throw config_error("generate_sequence: need at least one frame");

    const DensityGrid base = generate_cloud_field(domain, params);
    SequenceSample seq;
    seq.wind_u = u;
    seq.wind_v = v;
    seq.frames.reserve(std::size_t(frames));
    for (int i = 0; i < frames; ++i)
        seq.frames.push_back(sequence_frame(base, params, u, v, i, frames, frame_interval));
    return seq;
}

namespace {

struct Ray {
    Vec3 origin;
    Vec3 dir;     // unit length, world frame
    double z_rate; // z-depth gained per unit ray length
};

Ray pixel_ray(const CameraModel& cam, int px, int py) {
    const Vec3 dir_cam{(px + 0.5 - cam.cx) / cam.fx, (py + 0.5 - cam.cy) / cam.fy, 1.0};
    const Vec3 dir_world = transposed_mul(cam.pose.rotation, dir_cam);
    const double len = norm(dir_world);
    const Vec3 unit = dir_world / len;
    const Vec3 fwd{cam.pose.rotation.m[6], cam.pose.rotation.m[7], cam.pose.rotation.m[8]};
    return Ray{cam.pose.center(), unit, dot(fwd, unit)};
}

// Intersection of the ray with the trilinear support box
// [origin, origin + (dims-1)*voxel]. Returns false when the ray misses.
bool clip_to_domain(const Ray& ray, const GridDomain& d, double& t0, double& t1) {
    const double lo[3] = {d.origin.x, d.origin.y, d.origin.z};
    const double hi[3] = {d.origin.x + (d.nx - 1) * d.voxel_size,
                          d.origin.y + (d.ny - 1) * d.voxel_size,
                          d.origin.z + (d.nz - 1) * d.voxel_size};
    const double o[3] = {ray.origin.x, ray.origin.y, ray.origin.z};
    const double v[3] = {ray.dir.x, ray.dir.y, ray.dir.z};
    t0 = 0.0;
    t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        if (std::abs(v[a]) < 1e-15) {
            if (o[a] < lo[a] || o[a] > hi[a]) return false;
            continue;
        }
        double ta = (lo[a] - o[a]) / v[a];
        double tb = (hi[a] - o[a]) / v[a];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    return t0 < t1;
}

double density_at(const DensityGrid& grid, const Ray& ray, double t) {
    const Vec3 p = ray.origin + ray.dir * t;
    return sample_trilinear(grid, world_to_grid(p, grid.domain));
}

// First-crossing depth along one pixel ray; +inf when no sample reaches the
// threshold. Shared by the parallel renderer and the serial reference.
float march_depth_pixel(const DensityGrid& grid, const Ray& ray, double threshold, double step) {
    double t0, t1;
    if (!clip_to_domain(ray, grid.domain, t0, t1))
        return std::numeric_limits<float>::infinity();
    double prev = t0;
    for (double t = t0 + 0.5 * step; t < t1; t += step) {
        if (density_at(grid, ray, t) >= threshold) {
            // One bisection refinement between the bracketing samples.
            double lo = prev;
            double hi = t;
            const double mid = 0.5 * (lo + hi);
            if (density_at(grid, ray, mid) >= threshold)
                hi = mid;
            else
                lo = mid;
            return float(0.5 * (lo + hi) * ray.z_rate);
        }
        prev = t;
    }
    return std::numeric_limits<float>::infinity();
}

} // namespace

DepthMap render_depth(const DensityGrid& grid, const CameraModel& cam, double surface_threshold,
                      double step) {
    if (!(surface_threshold > 0.0))
        throw config_error("render_depth: surface_threshold must be > 0");
    if (!(step > 0.0)) throw config_error("render_depth: step must be > 0");
    cam.validate();

    DepthMap out(cam.width, cam.height, std::numeric_limits<float>::infinity());
#pragma omp parallel for schedule(static)
    for (int py = 0; py < cam.height; ++py) {
        for (int px = 0; px < cam.width; ++px) {
            const Ray ray = pixel_ray(cam, px, py);
            out.at(px, py) = march_depth_pixel(grid, ray, surface_threshold, step);
        }
    }
    return out;
}

DepthMap corrupt_depth(const DepthMap& depth, const DepthNoise& noise, std::uint64_t seed) {
    noise.validate();
    DepthMap out = depth;
    if (noise.gaussian_std == 0.0 && noise.dropout_prob == 0.0 && noise.quantization == 0.0)
        return out;

    const double floor_depth = noise.quantization > 0.0 ? noise.quantization : 1.0;
    const std::size_t n = out.data.size();
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < (long long)n; ++i) {
        const float orig = out.data[i];
        if (std::isinf(orig)) continue;
        RandomStream rng(seed ^ kDepthTag, std::uint64_t(i));
        double v = double(orig);
        if (noise.gaussian_std > 0.0) v += noise.gaussian_std * rng.gaussian();
        if (noise.quantization > 0.0) v = std::round(v / noise.quantization) * noise.quantization;
        if (noise.gaussian_std > 0.0 || noise.quantization > 0.0) v = std::max(v, floor_depth);
        if (noise.dropout_prob > 0.0 && rng.next_double() < noise.dropout_prob)
            v = std::numeric_limits<double>::infinity();
        out.data[i] = float(v);
    }
    return out;
}

BinaryImage render_silhouette(const DepthMap& depth, double threshold) {
    if (!(threshold > 0.0)) throw config_error("render_silhouette: threshold must be > 0");
    BinaryImage mask(depth.width, depth.height, 0);
    for (std::size_t i = 0; i < depth.data.size(); ++i)
        mask.data[i] = depth.data[i] < threshold ? 1 : 0;
    return mask;
}

} // namespace cloudvol
