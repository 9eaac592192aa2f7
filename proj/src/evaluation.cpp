#include "cloudvol/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cloudvol {

double segmentation_density_level(double opacity_threshold, double voxel_size) {
    if (!(opacity_threshold > 0.0 && opacity_threshold < 1.0))
        throw config_error("segmentation_density_level: threshold must be in (0, 1)");
    if (!(voxel_size > 0.0))
        throw config_error("segmentation_density_level: voxel_size must be > 0");
    return -std::log(1.0 - opacity_threshold) / voxel_size;
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

// Midpoint-rule optical depth accumulation with the 50% transmittance
// crossing tracked on the fly. Shared with the serial reference.
void march_opacity_pixel(const DensityGrid& grid, const Ray& ray, double step, float& opacity,
                         float& depth) {
    opacity = 0.0f;
    depth = std::numeric_limits<float>::infinity();
    double t0, t1;
    if (!clip_to_domain(ray, grid.domain, t0, t1)) return;

    const double ln2 = 0.6931471805599453;
    double tau = 0.0;
    bool crossed = false;
    double t = t0;
    while (t < t1) {
        const double seg = std::min(step, t1 - t);
        const double mid = t + 0.5 * seg;
        const Vec3 p = ray.origin + ray.dir * mid;
        tau += sample_trilinear(grid, world_to_grid(p, grid.domain)) * seg;
        if (!crossed && tau > ln2) {
            depth = float(mid * ray.z_rate);
            crossed = true;
        }
        t += seg;
    }
    opacity = float(1.0 - std::exp(-tau));
}

} // namespace

OpacityMap render_opacity(const DensityGrid& grid, const CameraModel& cam, double step) {
    if (!(step > 0.0)) throw config_error("render_opacity: step must be > 0");
    cam.validate();

    OpacityMap om;
    om.width = cam.width;
    om.height = cam.height;
    om.opacity.assign(std::size_t(cam.width) * cam.height, 0.0f);
    om.depth.assign(std::size_t(cam.width) * cam.height,
                    std::numeric_limits<float>::infinity());
#pragma omp parallel for schedule(static)
    for (int py = 0; py < cam.height; ++py) {
        for (int px = 0; px < cam.width; ++px) {
            const Ray ray = pixel_ray(cam, px, py);
            const std::size_t i = std::size_t(py) * cam.width + px;
            march_opacity_pixel(grid, ray, step, om.opacity[i], om.depth[i]);
        }
    }
    return om;
}

BinaryImage segment(const OpacityMap& om, double opacity_threshold, double depth_threshold) {
    if (!(opacity_threshold > 0.0) || !(depth_threshold > 0.0))
        throw config_error("segment: thresholds must be > 0");
    BinaryImage mask(om.width, om.height, 0);
    for (std::size_t i = 0; i < mask.data.size(); ++i)
        mask.data[i] =
            (om.opacity[i] >= opacity_threshold && om.depth[i] <= depth_threshold) ? 1 : 0;
    return mask;
}

namespace {
void check_same_dims(const BinaryImage& a, const BinaryImage& b, const char* what) {
    if (a.width != b.width || a.height != b.height)
        throw config_error(std::string(what) + ": mask dimension mismatch");
}
} // namespace

std::optional<double> jaccard(const BinaryImage& gt, const BinaryImage& pred) {
    check_same_dims(gt, pred, "jaccard");
    std::int64_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < gt.data.size(); ++i) {
        const bool a = gt.data[i] != 0;
        const bool b = pred.data[i] != 0;
        inter += (a && b) ? 1 : 0;
        uni += (a || b) ? 1 : 0;
    }
    if (uni == 0) return std::nullopt; // clear-sky exclusion
    return 100.0 * double(inter) / double(uni);
}

double coverage_error(const BinaryImage& gt, const BinaryImage& pred) {
    check_same_dims(gt, pred, "coverage_error");
    std::int64_t cg = 0, cp = 0;
    for (std::size_t i = 0; i < gt.data.size(); ++i) {
        cg += gt.data[i] != 0 ? 1 : 0;
        cp += pred.data[i] != 0 ? 1 : 0;
    }
    const double n = double(gt.data.size());
    return 100.0 * std::abs(double(cg) / n - double(cp) / n);
}

double split_l1(const DensityGrid& gt, const DensityGrid& pred, double lambda) {
    if (gt.domain != pred.domain) throw config_error("split_l1: domain mismatch");
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw config_error("split_l1: lambda must be in [0, 1]");

    double cloud_sum = 0.0, empty_sum = 0.0;
    std::int64_t cloud_n = 0, empty_n = 0;
    for (std::size_t i = 0; i < gt.data.size(); ++i) {
        const double diff = std::abs(double(gt.data[i]) - double(pred.data[i]));
        if (gt.data[i] > 0.0f) {
            cloud_sum += diff;
            ++cloud_n;
        } else {
            empty_sum += diff;
            ++empty_n;
        }
    }
    const double cloud_term = cloud_n > 0 ? cloud_sum / double(cloud_n) : 0.0;
    const double empty_term = empty_n > 0 ? lambda / double(empty_n) * empty_sum : 0.0;
    return cloud_term + empty_term;
}

MetricsReport evaluate_reconstruction(const DensityGrid& gt, const DensityGrid& pred,
                                      const CameraModel& cam, const EvalThresholds& thresholds,
                                      double lambda) {
    thresholds.validate();
    if (gt.domain != pred.domain)
        throw config_error("evaluate_reconstruction: domain mismatch");

    const OpacityMap om_gt = render_opacity(gt, cam, thresholds.ray_step);
    const OpacityMap om_pred = render_opacity(pred, cam, thresholds.ray_step);
    const BinaryImage m_gt =
        segment(om_gt, thresholds.opacity_threshold, thresholds.depth_threshold);
    const BinaryImage m_pred =
        segment(om_pred, thresholds.opacity_threshold, thresholds.depth_threshold);

    MetricsReport r;
    r.jaccard = jaccard(m_gt, m_pred);
    r.coverage_error = coverage_error(m_gt, m_pred);
    r.split_l1 = split_l1(gt, pred, lambda);
    for (std::size_t i = 0; i < gt.data.size(); ++i)
        if (gt.data[i] > 0.0f)
            ++r.cloud_voxels;
        else
            ++r.empty_voxels;
    return r;
}

} // namespace cloudvol
