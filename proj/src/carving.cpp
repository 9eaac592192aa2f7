#include "cloudvol/carving.hpp"

#include <algorithm>
#include <cmath>

namespace cloudvol {

namespace {

void check_views(std::size_t cams, std::size_t images, const char* what) {
    if (cams == 0) throw config_error(std::string(what) + ": need at least one view");
    if (cams != images)
        throw config_error(std::string(what) + ": camera/image count mismatch (" +
                           std::to_string(cams) + " vs " + std::to_string(images) + ")");
}

} // namespace

CarvingGrid carve_single_view(const GridDomain& domain, const CameraModel& cam,
                              const DepthMap& depth, const CarveConfig& cfg) {
    cfg.validate();
    cam.validate();
    CarvingGrid out(domain, 1);
#pragma omp parallel for schedule(static)
    for (int ix = 0; ix < domain.nx; ++ix) {
        for (int iy = 0; iy < domain.ny; ++iy) {
            for (int iz = 0; iz < domain.nz; ++iz) {
                const Vec3 x = voxel_center(domain, ix, iy, iz);
                const auto d = signed_view_distance(cam, depth, x);
                if (d && !(*d > -cfg.epsilon)) out.at(ix, iy, iz) = 0;
            }
        }
    }
    return out;
}

CarvingGrid combine_carvings(const std::vector<CarvingGrid>& carvings) {
    if (carvings.empty()) throw config_error("combine_carvings: empty carving list");
    const GridDomain& domain = carvings.front().domain;
    for (const auto& c : carvings)
        if (c.domain != domain) throw config_error("combine_carvings: domain mismatch");

    CarvingGrid out(domain, 1);
    const std::size_t n = domain.voxel_count();
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < (long long)n; ++i) {
        std::uint8_t v = 1;
        for (const auto& c : carvings) v = std::uint8_t(v * c.data[i]);
        out.data[i] = v;
    }
    return out;
}

CarvingGrid depth_carve(const GridDomain& domain, const std::vector<CameraModel>& cams,
                        const std::vector<DepthMap>& depths, const CarveConfig& cfg) {
    cfg.validate();
    check_views(cams.size(), depths.size(), "depth_carve");
    for (const auto& c : cams) c.validate();

    CarvingGrid out(domain, 1);
#pragma omp parallel for schedule(static)
    for (int ix = 0; ix < domain.nx; ++ix) {
        for (int iy = 0; iy < domain.ny; ++iy) {
            for (int iz = 0; iz < domain.nz; ++iz) {
                const Vec3 x = voxel_center(domain, ix, iy, iz);
                int observed = 0;
                bool carved = false;
                for (std::size_t k = 0; k < cams.size(); ++k) {
                    const auto d = signed_view_distance(cams[k], depths[k], x);
                    if (!d) continue;
                    ++observed;
                    if (!(*d > -cfg.epsilon)) carved = true;
                }
                if (carved && observed >= cfg.min_views) out.at(ix, iy, iz) = 0;
            }
        }
    }
    return out;
}

CarvingGrid silhouette_carve(const GridDomain& domain, const std::vector<CameraModel>& cams,
                             const std::vector<BinaryImage>& masks) {
    check_views(cams.size(), masks.size(), "silhouette_carve");
    for (const auto& c : cams) c.validate();
    for (std::size_t k = 0; k < cams.size(); ++k)
        if (masks[k].width != cams[k].width || masks[k].height != cams[k].height)
            throw config_error("silhouette_carve: mask dimensions do not match camera " +
                               std::to_string(k));

    CarvingGrid out(domain, 1);
#pragma omp parallel for schedule(static)
    for (int ix = 0; ix < domain.nx; ++ix) {
        for (int iy = 0; iy < domain.ny; ++iy) {
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
        }
    }
    return out;
}

ScalarGrid tsdf_fuse(const GridDomain& domain, const std::vector<CameraModel>& cams,
                     const std::vector<DepthMap>& depths, double truncation) {
    if (!(truncation > 0.0)) throw config_error("tsdf_fuse: truncation must be > 0");
    check_views(cams.size(), depths.size(), "tsdf_fuse");
    for (const auto& c : cams) c.validate();

    ScalarGrid out(domain, 0.0f);
#pragma omp parallel for schedule(static)
    for (int ix = 0; ix < domain.nx; ++ix) {
        for (int iy = 0; iy < domain.ny; ++iy) {
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
        }
    }
    return out;
}

FeatureVolume backproject_features(const GridDomain& domain, const std::vector<CameraModel>& cams,
                                   const std::vector<FeatureImage>& images) {
    check_views(cams.size(), images.size(), "backproject_features");
    for (const auto& c : cams) c.validate();
    const int channels = images.front().channels;
    for (std::size_t k = 0; k < images.size(); ++k) {
        if (images[k].channels != channels)
            throw config_error("backproject_features: channel count mismatch at view " +
                               std::to_string(k));
        if (images[k].width != cams[k].width || images[k].height != cams[k].height)
            throw config_error("backproject_features: image dimensions do not match camera " +
                               std::to_string(k));
    }

    FeatureVolume vol;
    vol.domain = domain;
    vol.channels = channels;
    vol.data.assign(domain.voxel_count() * std::size_t(channels), 0.0f);
    vol.counts.assign(domain.voxel_count(), 0);

#pragma omp parallel for schedule(static)
    for (int ix = 0; ix < domain.nx; ++ix) {
        std::vector<double> acc(channels);
        for (int iy = 0; iy < domain.ny; ++iy) {
            for (int iz = 0; iz < domain.nz; ++iz) {
                const Vec3 x = voxel_center(domain, ix, iy, iz);
                std::fill(acc.begin(), acc.end(), 0.0);
                std::uint32_t observed = 0;
                for (std::size_t k = 0; k < cams.size(); ++k) {
                    const auto pd = project(cams[k], x);
                    if (!pd) continue;
                    const int px = int(std::floor(pd->u));
                    const int py = int(std::floor(pd->v));
                    if (px < 0 || px >= images[k].width || py < 0 || py >= images[k].height)
                        continue;
                    const float* f = images[k].at(px, py);
                    for (int c = 0; c < channels; ++c) acc[c] += double(f[c]);
                    ++observed;
                }
                const std::size_t base = domain.index(ix, iy, iz) * std::size_t(channels);
                if (observed > 0) {
                    for (int c = 0; c < channels; ++c)
                        vol.data[base + c] = float(acc[c] / observed);
                    vol.counts[domain.index(ix, iy, iz)] = observed;
                }
            }
        }
    }
    return vol;
}

ScalarGrid carving_to_density(const CarvingGrid& carving, double fill_value) {
    if (!(fill_value >= 0.0)) throw config_error("carving_to_density: fill_value must be >= 0");
    ScalarGrid out(carving.domain, 0.0f);
    const float fill = float(fill_value);
    const std::size_t n = carving.data.size();
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < (long long)n; ++i)
        out.data[i] = carving.data[i] ? fill : 0.0f;
    return out;
}

} // namespace cloudvol
