#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cloudvol/image.hpp"
#include "cloudvol/vec3.hpp"

namespace cloudvol {

/// Rigid world-to-camera transform: x_cam = R * x_world + t.
struct Pose {
    Mat3 rotation;
    Vec3 translation;

    Vec3 to_camera(const Vec3& p_world) const { return rotation * p_world + translation; }
    Vec3 to_world(const Vec3& p_cam) const { return transposed_mul(rotation, p_cam - translation); }
    Vec3 center() const { return transposed_mul(rotation, -translation); }
};

/// Pinhole camera. Camera frame: +z forward, +x right, +y down. Pixel (i, j)
/// covers [i, i+1) x [j, j+1) with its center at (i+0.5, j+0.5).
struct CameraModel {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;
    Pose pose;

    void validate() const;
};

struct PixelDepth {
    double u = 0.0;
    double v = 0.0;
    double depth = 0.0; // z-depth along the optical axis, meters
};

/// Projects a world point. Returns nullopt for points at or behind the
/// camera plane (z_cam <= 0).
std::optional<PixelDepth> project(const CameraModel& cam, const Vec3& p_world);

/// Inverse of project. Throws numeric_error for z_depth <= 0.
Vec3 backproject(const CameraModel& cam, double u, double v, double z_depth);

/// Signed view distance d = z_depth(p) - depth_at(uv), nearest-pixel lookup.
/// d < 0: point in front of the observed surface; d >= 0: at or behind it.
/// Sky pixels (+inf depth) yield -inf. Returns nullopt when the point is
/// behind the camera or projects outside the image (no information).
std::optional<double> signed_view_distance(const CameraModel& cam, const DepthMap& depth,
                                           const Vec3& p_world);

struct StereoPair {
    CameraModel left;
    CameraModel right;

    double baseline() const { return norm(left.pose.center() - right.pose.center()); }
};

struct StereoRig {
    std::vector<StereoPair> pairs;
    std::optional<CameraModel> central;

    void validate() const;
    /// Reference cameras used for carving: the left camera of each pair.
    std::vector<CameraModel> reference_cameras() const;
};

struct RigOptions {
    int stereo_width = 384;
    int stereo_height = 288;
    double stereo_hfov_deg = 90.0;
    int central_size = 384;
    double central_hfov_deg = 120.0;
    double aim_height = 2200.0; // meters; stereo cameras aim at (0, 0, aim_height)
};

/// Field layout: three inward-looking stereo pairs at ground level on a
/// triangle with pair separations in [5000, 8000] m and baselines in
/// [190, 350] m, plus a central upward camera with a 120 degree horizontal
/// field of view. Deterministic for a fixed seed.
StereoRig make_paper_rig(std::uint64_t seed, const RigOptions& opt = {});

/// Camera file: JSON document with a "convention" header field
/// ("world_to_camera, x_cam = R*x + t, +z forward, +x right, +y down") and a
/// "cameras" list of {role, fx, fy, cx, cy, width, height,
/// rotation (9, row-major), translation (3)}. Roles follow the rig layout:
/// "pair<k>_left", "pair<k>_right", "central".
void write_cameras_json(const StereoRig& rig, const std::string& path);
StereoRig read_cameras_json(const std::string& path);

} // namespace cloudvol
