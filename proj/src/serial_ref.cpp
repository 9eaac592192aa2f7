#include "cloudvol/serial_ref.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cloudvol::serial {

CarvingGrid carve_single_view(const GridDomain& domain, const CameraModel& cam,
                              const DepthMap& depth, const CarveConfig& cfg) {
    cfg.validate();
    cam.validate();
    CarvingGrid out(domain, 1);
    for (int ix = 0; ix < domain.nx; ++ix)
        for (int iy = 0; iy < domain.ny; ++iy)
            for (int iz = 0; iz < domain.nz; ++iz) {
                const Vec3 x = voxel_center(domain, ix, iy, iz);
                const auto d = signed_view_distance(cam, depth, x);
                if (d && !(*d > -cfg.epsilon)) out.at(ix, iy, iz) = 0;
            }
    return out;
}

CarvingGrid silhouette_carve(const GridDomain& domain, const std::vector<CameraModel>& cams,
                             const std::vector<BinaryImage>& masks) {
    if (cams.empty() || cams.size() != masks.size())
        throw config_error("serial::silhouette_carve: camera/mask count mismatch");
    CarvingGrid out(domain, 1);
    for (int ix = 0; ix < domain.nx; ++ix)
        for (int iy = 0; iy < domain.ny; ++iy)
            for (int iz = 0; iz < domain.nz; ++iz) {
                const Vec3 x = voxel_center(domain, ix, iy, iz);
                for (std::size_t k = 0; k < cams.size(); ++k) {
                    const auto pd = project(cams[k], x);
                    if (!pd) continue;
                    const int px = int(std::floor(pd->u));
                    const int py = int(std::floor(pd->v));
                    if (px < 0 || px >= masks[k].width || py < 0 || py >= masks[k].height)
                        continue;
                    if (masks[k].at(px, py) == 0) {
                        out.at(ix, iy, iz) = 0;
                        break;
                    }
                }
            }
    return out;
}

ScalarGrid tsdf_fuse(const GridDomain& domain, const std::vector<CameraModel>& cams,
                     const std::vector<DepthMap>& depths, double truncation) {
    if (!(truncation > 0.0)) throw config_error("serial::tsdf_fuse: truncation must be > 0");
    if (cams.empty() || cams.size() != depths.size())
        throw config_error("serial::tsdf_fuse: camera/depth count mismatch");
    ScalarGrid out(domain, 0.0f);
    for (int ix = 0; ix < domain.nx; ++ix)
        for (int iy = 0; iy < domain.ny; ++iy)
            for (int iz = 0; iz < domain.nz; ++iz) {
                const Vec3 x = voxel_center(domain, ix, iy, iz);
                double sum = 0.0;
                int observed = 0;
                for (std::size_t k = 0; k < cams.size(); ++k) {
                    const auto d = signed_view_distance(cams[k], depths[k], x);
                    if (!d) continue;
                    ++observed;
                    sum += std::clamp(*d / truncation, -1.0, 1.0);
                }
                if (observed > 0) out.at(ix, iy, iz) = float(sum / observed);
            }
    return out;
}

ScalarGrid advect(const ScalarGrid& grid, double u, double v, double dt) {
    if (!std::isfinite(u) || !std::isfinite(v) || !std::isfinite(dt))
        throw numeric_error("serial::advect: u, v and dt must be finite");
    const GridDomain& d = grid.domain;
    const double sx = u * dt / d.voxel_size;
    const double sy = v * dt / d.voxel_size;
    ScalarGrid out(d, 0.0f);
    for (int ix = 0; ix < d.nx; ++ix)
        for (int iy = 0; iy < d.ny; ++iy)
            for (int iz = 0; iz < d.nz; ++iz)
                out.at(ix, iy, iz) = float(sample_trilinear(
                    grid, Vec3{double(ix) - sx, double(iy) - sy, double(iz)}));
    return out;
}

double wind_objective(const std::vector<ScalarGrid>& frames, double u, double v,
                      const SequenceConfig& cfg) {
    cfg.validate();
    if (frames.empty()) throw config_error("serial::wind_objective: empty frame list");
    const GridDomain& d = frames.front().domain;
    for (const auto& f : frames)
        if (f.domain != d) throw config_error("serial::wind_objective: frame domain mismatch");

    const std::size_t T = frames.size();
    const double tc = center_time(T);
    std::vector<double> sx(T), sy(T);
    for (std::size_t i = 0; i < T; ++i) {
        const double dt = (tc - double(i)) * cfg.frame_interval;
        sx[i] = u * dt / d.voxel_size;
        sy[i] = v * dt / d.voxel_size;
    }

    // Same two-level reduction as the parallel kernel: per-x-slab partials
    // combined in slab order.
    std::vector<double> slab_sum(d.nx, 0.0);
    std::vector<double> samples(T);
    for (int ix = 0; ix < d.nx; ++ix) {
        double partial = 0.0;
        for (int iy = 0; iy < d.ny; ++iy)
            for (int iz = 0; iz < d.nz; ++iz) {
                for (std::size_t i = 0; i < T; ++i)
                    samples[i] = sample_trilinear(
                        frames[i], Vec3{double(ix) - sx[i], double(iy) - sy[i], double(iz)});
                double sum = 0.0, sumsq = 0.0;
                for (std::size_t i = 0; i < T; ++i) {
                    const double dv = samples[i] - samples[0];
                    sum += dv;
                    sumsq += dv * dv;
                }
                const double mean = sum / double(T);
                partial += std::max(0.0, sumsq / double(T) - mean * mean);
            }
        slab_sum[ix] = partial;
    }
    double total = 0.0;
    for (int ix = 0; ix < d.nx; ++ix) total += slab_sum[ix];
    return total / double(d.voxel_count());
}

ScalarGrid integrate(const std::vector<ScalarGrid>& frames, const WindProfile& wind,
                     const SequenceConfig& cfg) {
    cfg.validate();
    if (frames.empty()) throw config_error("serial::integrate: empty frame list");
    const GridDomain& d = frames.front().domain;
    const std::size_t T = frames.size();
    const double tc = center_time(T);
    std::vector<double> sx(T), sy(T);
    for (std::size_t i = 0; i < T; ++i) {
        const double dt = (tc - double(i)) * cfg.frame_interval;
        sx[i] = wind.u * dt / d.voxel_size;
        sy[i] = wind.v * dt / d.voxel_size;
    }
    ScalarGrid out(d, 0.0f);
    for (int ix = 0; ix < d.nx; ++ix)
        for (int iy = 0; iy < d.ny; ++iy)
            for (int iz = 0; iz < d.nz; ++iz) {
                double acc = 0.0;
                for (std::size_t i = 0; i < T; ++i)
                    acc += sample_trilinear(
                        frames[i], Vec3{double(ix) - sx[i], double(iy) - sy[i], double(iz)});
                out.at(ix, iy, iz) = float(std::max(0.0, acc / double(T)));
            }
    return out;
}

namespace {

struct Ray {
    Vec3 origin;
    Vec3 dir;
    double z_rate;
};

Ray pixel_ray(const CameraModel& cam, int px, int py) {
    const Vec3 dir_cam{(px + 0.5 - cam.cx) / cam.fx, (py + 0.5 - cam.cy) / cam.fy, 1.0};
    const Vec3 dir_world = transposed_mul(cam.pose.rotation, dir_cam);
    const double len = norm(dir_world);
    const Vec3 unit = dir_world / len;
    const Vec3 fwd{cam.pose.rotation.m[6], cam.pose.rotation.m[7], cam.pose.rotation.m[8]};
    return Ray{cam.pose.center(), unit, dot(fwd, unit)};
}

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

} // namespace

DepthMap render_depth(const DensityGrid& grid, const CameraModel& cam, double surface_threshold,
                      double step) {
    if (!(surface_threshold > 0.0) || !(step > 0.0))
        throw config_error("serial::render_depth: threshold and step must be > 0");
    cam.validate();
    DepthMap out(cam.width, cam.height, std::numeric_limits<float>::infinity());
    for (int py = 0; py < cam.height; ++py)
        for (int px = 0; px < cam.width; ++px) {
            const Ray ray = pixel_ray(cam, px, py);
            double t0, t1;
            if (!clip_to_domain(ray, grid.domain, t0, t1)) continue;
            double prev = t0;
            for (double t = t0 + 0.5 * step; t < t1; t += step) {
                if (density_at(grid, ray, t) >= surface_threshold) {
                    double lo = prev;
                    double hi = t;
                    const double mid = 0.5 * (lo + hi);
                    if (density_at(grid, ray, mid) >= surface_threshold)
                        hi = mid;
                    else
                        lo = mid;
                    out.at(px, py) = float(0.5 * (lo + hi) * ray.z_rate);
                    break;
                }
                prev = t;
            }
        }
    return out;
}

OpacityMap render_opacity(const DensityGrid& grid, const CameraModel& cam, double step) {
    if (!(step > 0.0)) throw config_error("serial::render_opacity: step must be > 0");
    cam.validate();
    OpacityMap om;
    om.width = cam.width;
    om.height = cam.height;
    om.opacity.assign(std::size_t(cam.width) * cam.height, 0.0f);
    om.depth.assign(std::size_t(cam.width) * cam.height,
                    std::numeric_limits<float>::infinity());
    const double ln2 = 0.6931471805599453;
    for (int py = 0; py < cam.height; ++py)
        for (int px = 0; px < cam.width; ++px) {
            const Ray ray = pixel_ray(cam, px, py);
            double t0, t1;
            if (!clip_to_domain(ray, grid.domain, t0, t1)) continue;
            const std::size_t i = std::size_t(py) * cam.width + px;
            double tau = 0.0;
            bool crossed = false;
            double t = t0;
            while (t < t1) {
                const double seg = std::min(step, t1 - t);
                const double mid = t + 0.5 * seg;
                tau += density_at(grid, ray, mid) * seg;
                if (!crossed && tau > ln2) {
                    om.depth[i] = float(mid * ray.z_rate);
                    crossed = true;
                }
                t += seg;
            }
            om.opacity[i] = float(1.0 - std::exp(-tau));
        }
    return om;
}

} // namespace cloudvol::serial
