#include "cloudvol/camera.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "cloudvol/errors.hpp"
#include "cloudvol/rng.hpp"

namespace cloudvol {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr const char* kConvention =
    "world_to_camera, x_cam = R*x + t, +z forward, +x right, +y down";
} // namespace

void CameraModel::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw config_error("CameraModel: fx, fy must be > 0");
    if (width < 1 || height < 1) throw config_error("CameraModel: width, height must be >= 1");
    if (rotation_defect(pose.rotation) > 1e-9)
        throw config_error("CameraModel: rotation is not orthonormal with determinant +1");
}

std::optional<PixelDepth> project(const CameraModel& cam, const Vec3& p_world) {
    const Vec3 pc = cam.pose.to_camera(p_world);
    if (pc.z <= 0.0) return std::nullopt;
    return PixelDepth{cam.fx * pc.x / pc.z + cam.cx, cam.fy * pc.y / pc.z + cam.cy, pc.z};
}

Vec3 backproject(const CameraModel& cam, double u, double v, double z_depth) {
    if (!(z_depth > 0.0))
        throw numeric_error("backproject: depth must be > 0, got " + std::to_string(z_depth));
    const Vec3 pc{(u - cam.cx) / cam.fx * z_depth, (v - cam.cy) / cam.fy * z_depth, z_depth};
    return cam.pose.to_world(pc);
}

std::optional<double> signed_view_distance(const CameraModel& cam, const DepthMap& depth,
                                           const Vec3& p_world) {
    const auto pd = project(cam, p_world);
    if (!pd) return std::nullopt;
    const int px = int(std::floor(pd->u));
    const int py = int(std::floor(pd->v));
    if (px < 0 || px >= depth.width || py < 0 || py >= depth.height) return std::nullopt;
    const double observed = double(depth.at(px, py));
    if (std::isinf(observed)) return -std::numeric_limits<double>::infinity();
    return pd->depth - observed;
}

void StereoRig::validate() const {
    for (const auto& p : pairs) {
        p.left.validate();
        p.right.validate();
        if (!(p.baseline() > 0.0)) throw config_error("StereoRig: pair baseline must be > 0");
    }
    if (central) central->validate();
}

std::vector<CameraModel> StereoRig::reference_cameras() const {
    std::vector<CameraModel> cams;
    cams.reserve(pairs.size());
    for (const auto& p : pairs) cams.push_back(p.left);
    return cams;
}

namespace {

// Rotation with rows (right, down, forward): world-to-camera for a camera at
// `pos` looking at `target`, image up aligned with world up.
Pose look_at(const Vec3& pos, const Vec3& target) {
    const Vec3 fwd = normalized(target - pos);
    Vec3 right = cross(fwd, Vec3{0, 0, 1});
    const double n = norm(right);
    if (n < 1e-12) {
        // Optical axis parallel to world up: pick east as image right,
        // which forces image down = north for an upward camera.
        right = Vec3{1, 0, 0};
    } else {
        right = right / n;
    }
    const Vec3 down = cross(fwd, right);
    const Mat3 R = Mat3::from_rows(right, down, fwd);
    return Pose{R, -(R * pos)};
}

CameraModel make_camera(const Vec3& pos, const Vec3& target, int width, int height,
                        double hfov_deg) {
    CameraModel cam;
    cam.width = width;
    cam.height = height;
    cam.cx = width / 2.0;
    cam.cy = height / 2.0;
    cam.fx = (width / 2.0) / std::tan(hfov_deg * kPi / 180.0 / 2.0);
    cam.fy = cam.fx; // square pixels
    cam.pose = look_at(pos, target);
    cam.validate();
    return cam;
}

} // namespace

StereoRig make_paper_rig(std::uint64_t seed, const RigOptions& opt) {
    RandomStream rng(seed, /*stream=*/0x7269675fULL); // "rig_"
    // Equilateral triangle around the origin keeps every pair separation
    // equal, so a single side-length draw satisfies the [5000, 8000] range.
    const double side = rng.uniform(5200.0, 7800.0);
    const double circumradius = side / std::sqrt(3.0);
    const double phase = rng.uniform(0.0, 2.0 * kPi);

    StereoRig rig;
    for (int k = 0; k < 3; ++k) {
        const double angle = phase + 2.0 * kPi * k / 3.0;
        const Vec3 center{circumradius * std::cos(angle), circumradius * std::sin(angle), 0.0};
        const Vec3 target{0.0, 0.0, opt.aim_height};
        const double baseline = rng.uniform(190.0, 350.0);

        // Offset the two cameras along the pair's image-right direction.
        const Vec3 fwd = normalized(target - center);
        const Vec3 right = normalized(cross(fwd, Vec3{0, 0, 1}));
        const Vec3 left_pos = center - right * (baseline / 2.0);
        const Vec3 right_pos = center + right * (baseline / 2.0);

        StereoPair pair;
        pair.left = make_camera(left_pos, target, opt.stereo_width, opt.stereo_height,
                                opt.stereo_hfov_deg);
        pair.right = make_camera(right_pos, target, opt.stereo_width, opt.stereo_height,
                                 opt.stereo_hfov_deg);
        rig.pairs.push_back(pair);
    }
    rig.central = make_camera(Vec3{0, 0, 0}, Vec3{0, 0, 1000.0}, opt.central_size,
                              opt.central_size, opt.central_hfov_deg);
    rig.validate();
    return rig;
}

namespace {

nlohmann::json camera_to_json(const CameraModel& cam, const std::string& role) {
    nlohmann::json j;
    j["role"] = role;
    j["fx"] = cam.fx;
    j["fy"] = cam.fy;
    j["cx"] = cam.cx;
    j["cy"] = cam.cy;
    j["width"] = cam.width;
    j["height"] = cam.height;
    j["rotation"] = std::vector<double>(cam.pose.rotation.m, cam.pose.rotation.m + 9);
    j["translation"] =
        std::vector<double>{cam.pose.translation.x, cam.pose.translation.y, cam.pose.translation.z};
    return j;
}

CameraModel camera_from_json(const nlohmann::json& j) {
    CameraModel cam;
    cam.fx = j.at("fx").get<double>();
    cam.fy = j.at("fy").get<double>();
    cam.cx = j.at("cx").get<double>();
    cam.cy = j.at("cy").get<double>();
    cam.width = j.at("width").get<int>();
    cam.height = j.at("height").get<int>();
    const auto rot = j.at("rotation").get<std::vector<double>>();
    if (rot.size() != 9) throw io_error("camera file: rotation must have 9 entries");
    for (int i = 0; i < 9; ++i) cam.pose.rotation.m[i] = rot[i];
    const auto tr = j.at("translation").get<std::vector<double>>();
    if (tr.size() != 3) throw io_error("camera file: translation must have 3 entries");
    cam.pose.translation = {tr[0], tr[1], tr[2]};
    cam.validate();
    return cam;
}

} // namespace

void write_cameras_json(const StereoRig& rig, const std::string& path) {
    rig.validate();
    nlohmann::json j;
    j["convention"] = kConvention;
    nlohmann::json cams = nlohmann::json::array();
    for (std::size_t k = 0; k < rig.pairs.size(); ++k) {
        cams.push_back(camera_to_json(rig.pairs[k].left, "pair" + std::to_string(k) + "_left"));
        cams.push_back(camera_to_json(rig.pairs[k].right, "pair" + std::to_string(k) + "_right"));
    }
    if (rig.central) cams.push_back(camera_to_json(*rig.central, "central"));
    j["cameras"] = std::move(cams);

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw io_error("write failed: " + path);
}

StereoRig read_cameras_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open for reading: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw io_error(path + ": invalid JSON: " + e.what());
    }
    try {
        if (j.at("convention").get<std::string>() != kConvention)
            throw io_error(path + ": unsupported camera convention");
        StereoRig rig;
        std::vector<std::pair<std::string, CameraModel>> named;
        for (const auto& cj : j.at("cameras"))
            named.emplace_back(cj.at("role").get<std::string>(), camera_from_json(cj));
        for (std::size_t k = 0;; ++k) {
            const std::string lname = "pair" + std::to_string(k) + "_left";
            const std::string rname = "pair" + std::to_string(k) + "_right";
            const CameraModel* left = nullptr;
            const CameraModel* right = nullptr;
            for (const auto& [role, cam] : named) {
                if (role == lname) left = &cam;
                if (role == rname) right = &cam;
            }
            if (!left && !right) break;
            if (!left || !right)
                throw io_error(path + ": incomplete stereo pair " + std::to_string(k));
            rig.pairs.push_back(StereoPair{*left, *right});
        }
        for (const auto& [role, cam] : named)
            if (role == "central") rig.central = cam;
        rig.validate();
        return rig;
    } catch (const nlohmann::json::exception& e) {
        throw io_error(path + ": malformed camera file: " + e.what());
    }
}

} // namespace cloudvol
