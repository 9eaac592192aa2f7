#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "cloudvol/carving.hpp"
#include "cloudvol/rng.hpp"
#include "cloudvol/synthetic.hpp"

using namespace cloudvol;

namespace {

constexpr float kInf = std::numeric_limits<float>::infinity();

// Camera at the world origin looking along +z, narrow image so lateral
// voxels fall outside the frustum.
CameraModel axis_camera(int size = 64, double fx = 1000.0) {
    CameraModel cam;
    cam.fx = cam.fy = fx;
    cam.cx = cam.cy = size / 2.0;
    cam.width = cam.height = size;
    return cam;
}

GridDomain column_domain() {
    GridDomain d;
    d.origin = {-100, -100, 500};
    d.voxel_size = 50.0;
    d.nx = 5;
    d.ny = 5;
    d.nz = 61; // z in [500, 3500]
    return d;
}

CameraModel look_camera(const Vec3& pos, const Vec3& target, int size, double fx) {
    const Vec3 fwd = normalized(target - pos);
    const Vec3 right = normalized(cross(fwd, Vec3{0, 0, 1}));
    const Vec3 down = cross(fwd, right);
    CameraModel cam;
    cam.fx = cam.fy = fx;
    cam.cx = cam.cy = size / 2.0;
    cam.width = cam.height = size;
    cam.pose.rotation = Mat3::from_rows(right, down, fwd);
    cam.pose.translation = -(cam.pose.rotation * pos);
    cam.validate();
    return cam;
}

int voxel_of_z(const GridDomain& d, double z) {
    return int(std::lround((z - d.origin.z) / d.voxel_size));
}

} // namespace

TEST_CASE("carve_single_view keeps within the margin and carves beyond it") {
    const GridDomain d = column_domain();
    const CameraModel cam = axis_camera();
    DepthMap depth(cam.width, cam.height, 3000.0f);
    const CarveConfig cfg; // epsilon 1000

    const CarvingGrid carved = carve_single_view(d, cam, depth, cfg);

    // Voxel 500 m in front of the surface survives, 1500 m in front does not.
    CHECK(carved.at(2, 2, voxel_of_z(d, 2500)) == 1);
    CHECK(carved.at(2, 2, voxel_of_z(d, 1500)) == 0);
    // At and behind the surface always survives.
    CHECK(carved.at(2, 2, voxel_of_z(d, 3000)) == 1);
    CHECK(carved.at(2, 2, voxel_of_z(d, 3400)) == 1);
}

TEST_CASE("sky rays carve every observed voxel") {
    const GridDomain d = column_domain();
    const CameraModel cam = axis_camera();
    DepthMap depth(cam.width, cam.height, kInf);
    const CarvingGrid carved = carve_single_view(d, cam, depth, CarveConfig{});
    for (int iz = 0; iz < d.nz; ++iz) CHECK(carved.at(2, 2, iz) == 0);
}

TEST_CASE("voxels outside the frustum are kept") {
    const GridDomain d = column_domain();
    const CameraModel cam = axis_camera(4); // 4x4 image, only near-axis voxels seen
    DepthMap depth(cam.width, cam.height, kInf);
    const CarvingGrid carved = carve_single_view(d, cam, depth, CarveConfig{});
    // Lateral voxel at 100 m off axis projects far outside the 4px image.
    CHECK(carved.at(0, 0, voxel_of_z(d, 1000)) == 1);
    // On-axis voxel is observed and carved by the sky ray.
    CHECK(carved.at(2, 2, voxel_of_z(d, 1000)) == 0);
}

TEST_CASE("combine_carvings is the voxelwise product") {
    const GridDomain d = column_domain();
    CarvingGrid a(d, 1), b(d, 1);
    CHECK(combine_carvings({a, b}).data == std::vector<std::uint8_t>(d.voxel_count(), 1));

    b.at(1, 2, 3) = 0;
    const CarvingGrid c = combine_carvings({a, b});
    CHECK(c.at(1, 2, 3) == 0);
    CHECK(c.at(0, 0, 0) == 1);

    CHECK_THROWS_AS(combine_carvings({}), config_error);
    GridDomain other = d;
    other.nx += 1;
    CHECK_THROWS_AS(combine_carvings({a, CarvingGrid(other, 1)}), config_error);
}

TEST_CASE("combine_carvings is commutative and idempotent") {
    const GridDomain d = column_domain();
    CarvingGrid a(d), b(d);
    RandomStream rng(5);
    for (auto& v : a.data) v = rng.next_double() < 0.5 ? 1 : 0;
    for (auto& v : b.data) v = rng.next_double() < 0.5 ? 1 : 0;
    CHECK(combine_carvings({a, b}).data == combine_carvings({b, a}).data);
    CHECK(combine_carvings({a, a}).data == a.data);
}

TEST_CASE("two-view sphere carving matches the brute-force oracle") {
    GridDomain d;
    d.origin = {-400, -400, 600};
    d.voxel_size = 50.0;
    d.nx = d.ny = d.nz = 17;

    // Sphere of radius 250 m at (0, 0, 1000).
    DensityGrid sphere(d, 0.0f);
    for (int ix = 0; ix < d.nx; ++ix)
        for (int iy = 0; iy < d.ny; ++iy)
            for (int iz = 0; iz < d.nz; ++iz) {
                const Vec3 p = voxel_center(d, ix, iy, iz);
                const Vec3 c{0, 0, 1000};
                if (norm(p - c) <= 250.0) sphere.at(ix, iy, iz) = 0.04f;
            }

    const std::vector<CameraModel> cams = {
        look_camera({0, -3000, 1000}, {0, 0, 1000}, 256, 800.0),
        look_camera({-3000, 0, 1000}, {0, 0, 1000}, 256, 800.0)};
    std::vector<DepthMap> depths;
    for (const auto& cam : cams) depths.push_back(render_depth(sphere, cam, 0.02, 12.5));

    CarveConfig cfg;
    cfg.epsilon = 100.0;
    const CarvingGrid result =
        combine_carvings({carve_single_view(d, cams[0], depths[0], cfg),
                          carve_single_view(d, cams[1], depths[1], cfg)});

    // Oracle: apply the per-view carve rule voxel by voxel with independent
    // projection arithmetic.
    for (int ix = 0; ix < d.nx; ++ix)
        for (int iy = 0; iy < d.ny; ++iy)
            for (int iz = 0; iz < d.nz; ++iz) {
                int expected = 1;
                const Vec3 p = voxel_center(d, ix, iy, iz);
                for (std::size_t k = 0; k < cams.size(); ++k) {
                    const CameraModel& cam = cams[k];
                    const Mat3& R = cam.pose.rotation;
                    const double zc = R.m[6] * p.x + R.m[7] * p.y + R.m[8] * p.z +
                                      cam.pose.translation.z;
                    if (zc <= 0.0) continue;
                    const double xc = R.m[0] * p.x + R.m[1] * p.y + R.m[2] * p.z +
                                      cam.pose.translation.x;
                    const double yc = R.m[3] * p.x + R.m[4] * p.y + R.m[5] * p.z +
                                      cam.pose.translation.y;
                    const double u = cam.fx * xc / zc + cam.cx;
                    const double v = cam.fy * yc / zc + cam.cy;
                    const int px = int(std::floor(u));
                    const int py = int(std::floor(v));
                    if (px < 0 || px >= cam.width || py < 0 || py >= cam.height) continue;
                    const double observed = double(depths[k].at(px, py));
                    if (!(zc > observed - cfg.epsilon)) expected = 0;
                }
                CHECK(int(result.at(ix, iy, iz)) == expected);
            }

    // Soundness: no truly occupied voxel was carved.
    for (std::size_t i = 0; i < sphere.data.size(); ++i)
        if (sphere.data[i] > 0.0f) CHECK(result.data[i] == 1);
}

TEST_CASE("epsilon monotonicity: larger margins keep a superset") {
    GridDomain d;
    d.origin = {-400, -400, 600};
    d.voxel_size = 50.0;
    d.nx = d.ny = d.nz = 17;
    SceneParams params;
    params.base_altitude = 700.0;
    params.cloud_height = 500.0;
    params.noise_scale = 400.0;
    params.seed = 9;
    const DensityGrid field = generate_cloud_field(d, params);
    const CameraModel cam = look_camera({0, -2500, 800}, {0, 0, 1000}, 128, 400.0);
    const DepthMap depth = render_depth(field, cam, 0.002, 25.0);

    CarveConfig small_eps, large_eps;
    small_eps.epsilon = 100.0;
    large_eps.epsilon = 400.0;
    const CarvingGrid a = carve_single_view(d, cam, depth, small_eps);
    const CarvingGrid b = carve_single_view(d, cam, depth, large_eps);
    for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] <= b.data[i]);
}

TEST_CASE("adding a view can only remove voxels") {
    const GridDomain d = column_domain();
    const CameraModel cam = axis_camera();
    DepthMap near_depth(cam.width, cam.height, 2000.0f);
    DepthMap far_depth(cam.width, cam.height, 3400.0f);
    const CarveConfig cfg;
    const CarvingGrid one = carve_single_view(d, cam, near_depth, cfg);
    const CarvingGrid two =
        combine_carvings({one, carve_single_view(d, cam, far_depth, cfg)});
    for (std::size_t i = 0; i < one.data.size(); ++i) CHECK(two.data[i] <= one.data[i]);
}

TEST_CASE("depth_carve equals carve_single_view + combine for min_views 1") {
    GridDomain d;
    d.origin = {-400, -400, 600};
    d.voxel_size = 50.0;
    d.nx = d.ny = d.nz = 17;
    SceneParams params;
    params.base_altitude = 700.0;
    params.cloud_height = 600.0;
    params.seed = 31;
    const DensityGrid field = generate_cloud_field(d, params);
    const std::vector<CameraModel> cams = {
        look_camera({0, -2500, 500}, {0, 0, 1000}, 128, 300.0),
        look_camera({2500, 0, 500}, {0, 0, 1000}, 128, 300.0)};
    std::vector<DepthMap> depths;
    for (const auto& cam : cams) depths.push_back(render_depth(field, cam, 0.002, 25.0));

    const CarveConfig cfg;
    const CarvingGrid joint = depth_carve(d, cams, depths, cfg);
    const CarvingGrid combined =
        combine_carvings({carve_single_view(d, cams[0], depths[0], cfg),
                          carve_single_view(d, cams[1], depths[1], cfg)});
    CHECK(joint.data == combined.data);
}

TEST_CASE("min_views delays carving decisions") {
    const GridDomain d = column_domain();
    const CameraModel cam = axis_camera();
    DepthMap sky(cam.width, cam.height, kInf);

    CarveConfig strict;
    strict.min_views = 2;
    // Only one view observes anything, so nothing may be carved.
    const CarvingGrid kept = depth_carve(d, {cam}, {sky}, strict);
    CHECK(kept.data == std::vector<std::uint8_t>(d.voxel_count(), 1));
}

TEST_CASE("silhouette carving keeps the visual hull") {
    GridDomain d;
    d.origin = {-400, -400, 600};
    d.voxel_size = 50.0;
    d.nx = d.ny = d.nz = 17;
    DensityGrid sphere(d, 0.0f);
    std::size_t sphere_voxels = 0;
    for (int ix = 0; ix < d.nx; ++ix)
        for (int iy = 0; iy < d.ny; ++iy)
            for (int iz = 0; iz < d.nz; ++iz) {
                const Vec3 p = voxel_center(d, ix, iy, iz);
                if (norm(p - Vec3{0, 0, 1000}) <= 250.0) {
                    sphere.at(ix, iy, iz) = 0.04f;
                    ++sphere_voxels;
                }
            }
    const std::vector<CameraModel> cams = {
        look_camera({0, -3000, 1000}, {0, 0, 1000}, 256, 800.0),
        look_camera({-3000, 0, 1000}, {0, 0, 1000}, 256, 800.0),
        look_camera({2100, 2100, 1000}, {0, 0, 1000}, 256, 800.0)};

    std::vector<DepthMap> depths;
    std::vector<BinaryImage> masks;
    for (const auto& cam : cams) {
        depths.push_back(render_depth(sphere, cam, 0.02, 12.5));
        masks.push_back(render_silhouette(depths.back(), 20000.0));
    }

    const CarvingGrid hull = silhouette_carve(d, cams, masks);
    std::size_t hull_voxels = 0;
    for (std::size_t i = 0; i < hull.data.size(); ++i) {
        if (hull.data[i]) ++hull_voxels;
        if (sphere.data[i] > 0.0f) CHECK(hull.data[i] == 1); // hull contains the object
    }
    CHECK(hull_voxels >= sphere_voxels);

    // Depth carving keeps a subset of the hull on the same inputs.
    CarveConfig cfg;
    cfg.epsilon = 100.0;
    const CarvingGrid depth_kept = depth_carve(d, cams, depths, cfg);
    for (std::size_t i = 0; i < hull.data.size(); ++i)
        CHECK(depth_kept.data[i] <= hull.data[i]);
}

TEST_CASE("all-cloud masks carve nothing") {
    const GridDomain d = column_domain();
    const CameraModel cam = axis_camera();
    BinaryImage mask(cam.width, cam.height, 1);
    const CarvingGrid hull = silhouette_carve(d, {cam}, {mask});
    CHECK(hull.data == std::vector<std::uint8_t>(d.voxel_count(), 1));
}

TEST_CASE("tsdf_fuse clamps and averages signed distances") {
    const GridDomain d = column_domain();
    const CameraModel cam = axis_camera();
    DepthMap depth(cam.width, cam.height, 3000.0f);
    const double trunc = 1000.0;
    const ScalarGrid fused = tsdf_fuse(d, {cam}, {depth}, trunc);

    CHECK(fused.at(2, 2, voxel_of_z(d, 3000)) == doctest::Approx(0.0));
    CHECK(fused.at(2, 2, voxel_of_z(d, 1500)) == doctest::Approx(-1.0)); // beyond -trunc
    CHECK(fused.at(2, 2, voxel_of_z(d, 2500)) == doctest::Approx(-0.5));

    // Single-view slab: fused value equals clamp((z - D) / trunc, -1, 1).
    for (int iz = 0; iz < d.nz; ++iz) {
        const Vec3 p = voxel_center(d, 2, 2, iz);
        const auto pd = project(cam, p);
        REQUIRE(pd.has_value());
        const double expected = std::clamp((pd->depth - 3000.0) / trunc, -1.0, 1.0);
        CHECK(double(fused.at(2, 2, iz)) == doctest::Approx(expected).epsilon(1e-6));
    }
}

TEST_CASE("tsdf treats sky as -1 and unobserved voxels as 0") {
    const GridDomain d = column_domain();
    const CameraModel cam = axis_camera(4); // narrow: lateral voxels unobserved
    DepthMap sky(cam.width, cam.height, kInf);
    const ScalarGrid fused = tsdf_fuse(d, {cam}, {sky});
    CHECK(fused.at(2, 2, 10) == doctest::Approx(-1.0));
    CHECK(fused.at(0, 0, 10) == doctest::Approx(0.0));
}

TEST_CASE("backproject_features averages across observing views") {
    const GridDomain d = column_domain();
    const CameraModel cam_a = axis_camera();
    CameraModel cam_b = axis_camera();
    cam_b.pose.translation = {25.0, 0.0, 0.0};

    FeatureImage img_a(cam_a.width, cam_a.height, 2);
    FeatureImage img_b(cam_b.width, cam_b.height, 2);
    for (int y = 0; y < img_a.height; ++y)
        for (int x = 0; x < img_a.width; ++x) {
            img_a.at(x, y)[0] = 1.0f;
            img_a.at(x, y)[1] = 3.0f;
            img_b.at(x, y)[0] = 2.0f;
            img_b.at(x, y)[1] = 5.0f;
        }

    SUBCASE("single view contributes its constant") {
        const FeatureVolume vol = backproject_features(d, {cam_a}, {img_a});
        CHECK(vol.count_at(2, 2, 10) == 1);
        CHECK(vol.at(2, 2, 10)[0] == doctest::Approx(1.0));
        CHECK(vol.at(2, 2, 10)[1] == doctest::Approx(3.0));
    }
    SUBCASE("two views average") {
        const FeatureVolume vol = backproject_features(d, {cam_a, cam_b}, {img_a, img_b});
        CHECK(vol.count_at(2, 2, 10) == 2);
        CHECK(vol.at(2, 2, 10)[0] == doctest::Approx(1.5));
        CHECK(vol.at(2, 2, 10)[1] == doctest::Approx(4.0));
    }
    SUBCASE("unobserved voxels stay zero with count zero") {
        const CameraModel narrow = axis_camera(4);
        FeatureImage img(narrow.width, narrow.height, 2);
        const FeatureVolume vol = backproject_features(d, {narrow}, {img});
        CHECK(vol.count_at(0, 0, 10) == 0);
        CHECK(vol.at(0, 0, 10)[0] == 0.0f);
        CHECK(vol.at(0, 0, 10)[1] == 0.0f);
    }
    SUBCASE("channel mismatch is a configuration error") {
        FeatureImage bad(cam_b.width, cam_b.height, 3);
        CHECK_THROWS_AS(backproject_features(d, {cam_a, cam_b}, {img_a, bad}), config_error);
    }
}

TEST_CASE("carving_to_density assigns the fill value") {
    const GridDomain d = column_domain();
    CarvingGrid none(d, 0), all(d, 1);
    const ScalarGrid zero = carving_to_density(none, 0.04);
    CHECK(zero.data == std::vector<float>(d.voxel_count(), 0.0f));
    const ScalarGrid filled = carving_to_density(all, 0.04);
    CHECK(filled.data == std::vector<float>(d.voxel_count(), 0.04f));
    CHECK_THROWS_AS(carving_to_density(all, -1.0), config_error);
}
