#include "cloudvol/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cloudvol/rng.hpp"
#include "cloudvol/volume_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cloudvol {

void PipelineConfig::validate() const {
    domain.validate();
    carve.validate();
    sequence.validate();
    noise.validate();
    scene.validate(domain);
    eval.validate();
    if (!(fill_value >= 0.0)) throw config_error("config: fill_value must be >= 0");
    if (!(tsdf_truncation > 0.0)) throw config_error("config: tsdf_truncation must be > 0");
    if (!(render_step > 0.0)) throw config_error("config: render.step must be > 0");
    if (!(surface_threshold >= 0.0))
        throw config_error("config: render.surface_threshold must be >= 0");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw config_error("config: eval.lambda must be in [0, 1]");
    if (!std::isfinite(scene_wind_u) || !std::isfinite(scene_wind_v))
        throw numeric_error("config: scene wind must be finite");
    if (ablate_windows.empty()) throw config_error("config: ablate_windows must be non-empty");
    for (int w : ablate_windows)
        if (w < 1) throw config_error("config: ablate window sizes must be >= 1");
}

double PipelineConfig::effective_surface_threshold() const {
    if (surface_threshold > 0.0) return surface_threshold;
    return segmentation_density_level(eval.opacity_threshold, domain.voxel_size);
}

// ---------------------------------------------------------------------------
// Config JSON round trip. Unknown keys are rejected so typos cannot silently
// fall back to defaults.
// ---------------------------------------------------------------------------

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw config_error("config: unknown key '" + where + it.key() + "'");
}

template <typename T>
void opt(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

} // namespace

std::string config_to_json_string(const PipelineConfig& cfg) {
    json j;
    j["domain"] = {{"origin", {cfg.domain.origin.x, cfg.domain.origin.y, cfg.domain.origin.z}},
                   {"voxel_size", cfg.domain.voxel_size},
                   {"dims", {cfg.domain.nx, cfg.domain.ny, cfg.domain.nz}}};
    j["carve"] = {{"epsilon", cfg.carve.epsilon},
                  {"min_views", cfg.carve.min_views},
                  {"fill_value", cfg.fill_value},
                  {"tsdf_truncation", cfg.tsdf_truncation}};
    j["sequence"] = {{"frame_interval", cfg.sequence.frame_interval},
                     {"window", cfg.sequence.window},
                     {"search",
                      {{"u_max", cfg.sequence.search.u_max},
                       {"coarse_step", cfg.sequence.search.coarse_step},
                       {"refine_step", cfg.sequence.search.refine_step}}}};
    j["noise"] = {{"gaussian_std", cfg.noise.gaussian_std},
                  {"dropout_prob", cfg.noise.dropout_prob},
                  {"quantization", cfg.noise.quantization}};
    j["scene"] = {{"cloud_fraction", cfg.scene.cloud_fraction},
                  {"optical_density", cfg.scene.optical_density},
                  {"base_altitude", cfg.scene.base_altitude},
                  {"cloud_height", cfg.scene.cloud_height},
                  {"sun_azimuth_deg", cfg.scene.sun_azimuth_deg},
                  {"sun_zenith_deg", cfg.scene.sun_zenith_deg},
                  {"noise_scale", cfg.scene.noise_scale},
                  {"frame_noise_std", cfg.scene.frame_noise_std},
                  {"wind_u", cfg.scene_wind_u},
                  {"wind_v", cfg.scene_wind_v}};
    j["render"] = {{"surface_threshold", cfg.surface_threshold}, {"step", cfg.render_step}};
    j["eval"] = {{"opacity_threshold", cfg.eval.opacity_threshold},
                 {"depth_threshold", cfg.eval.depth_threshold},
                 {"silhouette_depth_threshold", cfg.eval.silhouette_depth_threshold},
                 {"ray_step", cfg.eval.ray_step},
                 {"lambda", cfg.lambda}};
    j["rig"] = {{"stereo_width", cfg.rig.stereo_width},
                {"stereo_height", cfg.rig.stereo_height},
                {"stereo_hfov_deg", cfg.rig.stereo_hfov_deg},
                {"central_size", cfg.rig.central_size},
                {"central_hfov_deg", cfg.rig.central_hfov_deg},
                {"aim_height", cfg.rig.aim_height}};
    j["ablate_windows"] = cfg.ablate_windows;
    j["out_dir"] = cfg.out_dir;
    j["seed"] = cfg.seed;
    return j.dump(2);
}

namespace {

PipelineConfig config_from_json(const json& j) {
    PipelineConfig cfg;
    check_keys(j, {"domain", "carve", "sequence", "noise", "scene", "render", "eval", "rig",
                   "ablate_windows", "out_dir", "seed"},
               "");
    if (j.contains("domain")) {
        const json& d = j.at("domain");
        check_keys(d, {"origin", "voxel_size", "dims"}, "domain.");
        if (d.contains("origin")) {
            const auto o = d.at("origin").get<std::vector<double>>();
            if (o.size() != 3) throw config_error("config: domain.origin must have 3 entries");
            cfg.domain.origin = {o[0], o[1], o[2]};
        }
        opt(d, "voxel_size", cfg.domain.voxel_size);
        if (d.contains("dims")) {
            const auto dims = d.at("dims").get<std::vector<int>>();
            if (dims.size() != 3) throw config_error("config: domain.dims must have 3 entries");
            cfg.domain.nx = dims[0];
            cfg.domain.ny = dims[1];
            cfg.domain.nz = dims[2];
        }
    }
    if (j.contains("carve")) {
        const json& c = j.at("carve");
        check_keys(c, {"epsilon", "min_views", "fill_value", "tsdf_truncation"}, "carve.");
        opt(c, "epsilon", cfg.carve.epsilon);
        opt(c, "min_views", cfg.carve.min_views);
        opt(c, "fill_value", cfg.fill_value);
        opt(c, "tsdf_truncation", cfg.tsdf_truncation);
    }
    if (j.contains("sequence")) {
        const json& s = j.at("sequence");
        check_keys(s, {"frame_interval", "window", "search"}, "sequence.");
        opt(s, "frame_interval", cfg.sequence.frame_interval);
        opt(s, "window", cfg.sequence.window);
        if (s.contains("search")) {
            const json& g = s.at("search");
            check_keys(g, {"u_max", "coarse_step", "refine_step"}, "sequence.search.");
            opt(g, "u_max", cfg.sequence.search.u_max);
            opt(g, "coarse_step", cfg.sequence.search.coarse_step);
            opt(g, "refine_step", cfg.sequence.search.refine_step);
        }
    }
    if (j.contains("noise")) {
        const json& n = j.at("noise");
        check_keys(n, {"gaussian_std", "dropout_prob", "quantization"}, "noise.");
        opt(n, "gaussian_std", cfg.noise.gaussian_std);
        opt(n, "dropout_prob", cfg.noise.dropout_prob);
        opt(n, "quantization", cfg.noise.quantization);
    }
    if (j.contains("scene")) {
        const json& s = j.at("scene");
        check_keys(s,
                   {"cloud_fraction", "optical_density", "base_altitude", "cloud_height",
                    "sun_azimuth_deg", "sun_zenith_deg", "noise_scale", "frame_noise_std",
                    "wind_u", "wind_v"},
                   "scene.");
        opt(s, "cloud_fraction", cfg.scene.cloud_fraction);
        opt(s, "optical_density", cfg.scene.optical_density);
        opt(s, "base_altitude", cfg.scene.base_altitude);
        opt(s, "cloud_height", cfg.scene.cloud_height);
        opt(s, "sun_azimuth_deg", cfg.scene.sun_azimuth_deg);
        opt(s, "sun_zenith_deg", cfg.scene.sun_zenith_deg);
        opt(s, "noise_scale", cfg.scene.noise_scale);
        opt(s, "frame_noise_std", cfg.scene.frame_noise_std);
        opt(s, "wind_u", cfg.scene_wind_u);
        opt(s, "wind_v", cfg.scene_wind_v);
    }
    if (j.contains("render")) {
        const json& r = j.at("render");
        check_keys(r, {"surface_threshold", "step"}, "render.");
        opt(r, "surface_threshold", cfg.surface_threshold);
        opt(r, "step", cfg.render_step);
    }
    if (j.contains("eval")) {
        const json& e = j.at("eval");
        check_keys(e,
                   {"opacity_threshold", "depth_threshold", "silhouette_depth_threshold",
                    "ray_step", "lambda"},
                   "eval.");
        opt(e, "opacity_threshold", cfg.eval.opacity_threshold);
        opt(e, "depth_threshold", cfg.eval.depth_threshold);
        opt(e, "silhouette_depth_threshold", cfg.eval.silhouette_depth_threshold);
        opt(e, "ray_step", cfg.eval.ray_step);
        opt(e, "lambda", cfg.lambda);
    }
    if (j.contains("rig")) {
        const json& r = j.at("rig");
        check_keys(r,
                   {"stereo_width", "stereo_height", "stereo_hfov_deg", "central_size",
                    "central_hfov_deg", "aim_height"},
                   "rig.");
        opt(r, "stereo_width", cfg.rig.stereo_width);
        opt(r, "stereo_height", cfg.rig.stereo_height);
        opt(r, "stereo_hfov_deg", cfg.rig.stereo_hfov_deg);
        opt(r, "central_size", cfg.rig.central_size);
        opt(r, "central_hfov_deg", cfg.rig.central_hfov_deg);
        opt(r, "aim_height", cfg.rig.aim_height);
    }
    if (j.contains("ablate_windows"))
        cfg.ablate_windows = j.at("ablate_windows").get<std::vector<int>>();
    opt(j, "out_dir", cfg.out_dir);
    opt(j, "seed", cfg.seed);
    cfg.validate();
    return cfg;
}

// Dotted keys of everything the config file may set.
std::vector<std::string> json_leaf_keys(const json& j, const std::string& prefix = "") {
    std::vector<std::string> keys;
    if (!j.is_object()) return keys;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.value().is_object()) {
            auto sub = json_leaf_keys(it.value(), prefix + it.key() + ".");
            keys.insert(keys.end(), sub.begin(), sub.end());
        } else {
            keys.push_back(prefix + it.key());
        }
    }
    return keys;
}

} // namespace

PipelineConfig config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw config_error(path + ": invalid JSON: " + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const json::exception& e) {
        throw config_error(path + ": malformed config: " + e.what());
    }
}

void config_to_json_file(const PipelineConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << config_to_json_string(cfg) << "\n";
    if (!out) throw io_error("write failed: " + path);
}

std::vector<std::string> config_file_keys(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw config_error(path + ": invalid JSON: " + e.what());
    }
    return json_leaf_keys(j);
}

const std::map<std::string, std::string>& config_provenance() {
    static const std::map<std::string, std::string> p = {
        {"domain.origin", "paper"},
        {"domain.voxel_size", "paper"},
        {"domain.dims", "paper"},
        {"carve.epsilon", "paper"},
        {"carve.min_views", "design"},
        {"carve.fill_value", "design"},
        {"carve.tsdf_truncation", "design"},
        {"sequence.frame_interval", "paper"},
        {"sequence.window", "paper"},
        {"sequence.search.u_max", "design"},
        {"sequence.search.coarse_step", "design"},
        {"sequence.search.refine_step", "design"},
        {"noise.gaussian_std", "design"},
        {"noise.dropout_prob", "design"},
        {"noise.quantization", "design"},
        {"scene.cloud_fraction", "design"},
        {"scene.optical_density", "design"},
        {"scene.base_altitude", "design"},
        {"scene.cloud_height", "design"},
        {"scene.sun_azimuth_deg", "design"},
        {"scene.sun_zenith_deg", "design"},
        {"scene.noise_scale", "design"},
        {"scene.frame_noise_std", "design"},
        {"scene.wind_u", "design"},
        {"scene.wind_v", "design"},
        {"render.surface_threshold", "design"},
        {"render.step", "design"},
        {"eval.opacity_threshold", "paper"},
        {"eval.depth_threshold", "paper"},
        {"eval.silhouette_depth_threshold", "paper"},
        {"eval.ray_step", "design"},
        {"eval.lambda", "design"},
        {"rig.stereo_width", "design"},
        {"rig.stereo_height", "design"},
        {"rig.stereo_hfov_deg", "design"},
        {"rig.central_size", "design"},
        {"rig.central_hfov_deg", "paper"},
        {"rig.aim_height", "design"},
        {"ablate_windows", "paper"},
        {"seed", "design"},
    };
    return p;
}

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

namespace {

std::uint64_t fnv1a64(const unsigned char* data, std::size_t n, std::uint64_t h) {
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

std::uint64_t hash_file_raw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open for hashing: " + path);
    std::uint64_t h = 1469598103934665603ULL;
    char buf[65536];
    while (in) {
        in.read(buf, sizeof(buf));
        h = fnv1a64(reinterpret_cast<unsigned char*>(buf), std::size_t(in.gcount()), h);
    }
    return h;
}

} // namespace

std::string hash_file(const std::string& path) { return hex64(hash_file_raw(path)); }

std::string hash_tree(const std::string& root) {
    std::vector<std::string> rel;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file())
            rel.push_back(fs::relative(entry.path(), root).generic_string());
    std::sort(rel.begin(), rel.end());
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& r : rel) {
        h = fnv1a64(reinterpret_cast<const unsigned char*>(r.data()), r.size(), h);
        const std::uint64_t fh = hash_file_raw((fs::path(root) / r).string());
        for (int i = 0; i < 8; ++i) {
            const unsigned char b = (fh >> (8 * i)) & 0xff;
            h = fnv1a64(&b, 1, h);
        }
    }
    return hex64(h);
}

// ---------------------------------------------------------------------------
// Scene synthesis and the full pipeline
// ---------------------------------------------------------------------------

namespace {

std::string frame_dir_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%03d", i);
    return buf;
}

json metrics_to_json(const MetricsReport& r) {
    json j;
    if (r.jaccard)
        j["jaccard"] = *r.jaccard;
    else
        j["jaccard"] = nullptr; // clear-sky exclusion
    j["coverage_error"] = r.coverage_error;
    if (r.split_l1)
        j["split_l1"] = *r.split_l1;
    else
        j["split_l1"] = nullptr;
    j["cloud_voxels"] = r.cloud_voxels;
    j["empty_voxels"] = r.empty_voxels;
    return j;
}

json wind_to_json(const WindProfile& w, const SequenceConfig& cfg, std::size_t window) {
    return json{{"u", w.u},
                {"v", w.v},
                {"objective", w.objective},
                {"evaluations", w.evaluations},
                {"window", window},
                {"frame_interval", cfg.frame_interval}};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << text;
    if (!out) throw io_error("write failed: " + path);
}

[[noreturn]] void rethrow_with_stage(const std::string& stage, const std::exception& e) {
    const std::string msg = "stage " + stage + ": " + e.what();
    if (dynamic_cast<const config_error*>(&e)) throw config_error(msg);
    if (dynamic_cast<const io_error*>(&e)) throw io_error(msg);
    if (dynamic_cast<const numeric_error*>(&e)) throw numeric_error(msg);
    throw std::runtime_error(msg);
}

json manifest_base(const PipelineConfig& cfg, const std::vector<std::string>& overrides) {
    json m;
    m["config"] = json::parse(config_to_json_string(cfg));
    m["provenance"] = config_provenance();
    m["overrides"] = overrides;
    m["effective_surface_threshold"] = cfg.effective_surface_threshold();
    return m;
}

void finish_manifest(json& m, const std::string& root, const std::string& status,
                     const std::string& failed_stage = "") {
    m["status"] = status;
    if (!failed_stage.empty()) m["failed_stage"] = failed_stage;
    json artifacts = json::object();
    std::vector<std::string> rel;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file() &&
            fs::relative(entry.path(), root).generic_string() != "manifest.json")
            rel.push_back(fs::relative(entry.path(), root).generic_string());
    std::sort(rel.begin(), rel.end());
    for (const auto& r : rel) artifacts[r] = hash_file((fs::path(root) / r).string());
    m["artifacts"] = artifacts;

    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& r : rel) {
        const std::string line = r + ":" + artifacts[r].get<std::string>();
        h = fnv1a64(reinterpret_cast<const unsigned char*>(line.data()), line.size(), h);
    }
    m["combined_hash"] = hex64(h);
    write_text((fs::path(root) / "manifest.json").string(), m.dump(2) + "\n");
}

struct SceneData {
    StereoRig rig;
    DensityGrid base;
    SceneParams params;
    ScenePaths paths;
};

// Writes cameras, per-frame ground truth and (corrupted) depth maps; returns
// everything needed by downstream stages.
SceneData build_scene(const PipelineConfig& cfg, json& manifest) {
    cfg.validate();
    if (cfg.out_dir.empty()) throw config_error("config: out_dir must be set");

    SceneData s;
    s.paths.root = cfg.out_dir;
    fs::create_directories(cfg.out_dir);

    s.rig = make_paper_rig(hash_combine(cfg.seed, 0x726967ULL), cfg.rig);
    s.paths.cameras = (fs::path(cfg.out_dir) / "cameras.json").string();
    write_cameras_json(s.rig, s.paths.cameras);

    s.params = cfg.scene;
    s.params.seed = hash_combine(cfg.seed, 0x7363656eULL);
    s.base = generate_cloud_field(cfg.domain, s.params);
    s.paths.ground_truth_center =
        (fs::path(cfg.out_dir) / "ground_truth_center.vol").string();
    write_volume(s.base, s.paths.ground_truth_center);

    const int T = cfg.sequence.window;
    const double thr = cfg.effective_surface_threshold();
    const auto cams = s.rig.reference_cameras();
    for (int i = 0; i < T; ++i) {
        const fs::path dir = fs::path(cfg.out_dir) / "frames" / frame_dir_name(i);
        fs::create_directories(dir);
        s.paths.frame_dirs.push_back(dir.string());

        const DensityGrid frame = sequence_frame(s.base, s.params, cfg.scene_wind_u,
                                                 cfg.scene_wind_v, i, T, cfg.sequence.frame_interval);
        write_volume(frame, (dir / "ground_truth.vol").string());
        for (std::size_t k = 0; k < cams.size(); ++k) {
            DepthMap depth = render_depth(frame, cams[k], thr, cfg.render_step);
            depth = corrupt_depth(depth, cfg.noise,
                                  hash_combine(cfg.seed, hash_combine(std::uint64_t(i), k)));
            write_depth_map(depth,
                            (dir / ("depth_pair" + std::to_string(k) + ".dmap")).string());
        }
    }
    manifest["scene"] = {{"wind_u", cfg.scene_wind_u},
                         {"wind_v", cfg.scene_wind_v},
                         {"frames", T},
                         {"scene_seed", s.params.seed}};
    return s;
}

} // namespace

ScenePaths synthesize_scene(const PipelineConfig& cfg, const std::vector<std::string>& overrides) {
    json manifest = manifest_base(cfg, overrides);
    std::string stage = "synthesis";
    try {
        SceneData s = build_scene(cfg, manifest);
        finish_manifest(manifest, cfg.out_dir, "ok");
        return s.paths;
    } catch (...) {
        if (!cfg.out_dir.empty() && fs::exists(cfg.out_dir))
            finish_manifest(manifest, cfg.out_dir, "failed", stage);
        throw;
    }
}

PipelineResult run_pipeline(const PipelineConfig& cfg, const std::vector<std::string>& overrides) {
    json manifest = manifest_base(cfg, overrides);
    std::string stage = "synthesis";
    try {
        SceneData s = build_scene(cfg, manifest);
        const auto cams = s.rig.reference_cameras();
        if (!s.rig.central) throw config_error("pipeline: rig has no central evaluation camera");
        const int T = cfg.sequence.window;
        const int eval_frame = T / 2;

        stage = "carving";
        std::vector<DensityGrid> coarse;
        coarse.reserve(std::size_t(T));
        DensityGrid gt_eval_frame;
        std::vector<DepthMap> eval_depths;
        for (int i = 0; i < T; ++i) {
            const fs::path dir = s.paths.frame_dirs[std::size_t(i)];
            std::vector<DepthMap> depths;
            for (std::size_t k = 0; k < cams.size(); ++k)
                depths.push_back(
                    read_depth_map((dir / ("depth_pair" + std::to_string(k) + ".dmap")).string()));
            const CarvingGrid carved = depth_carve(cfg.domain, cams, depths, cfg.carve);
            write_volume(carved, (dir / "carving.vol").string());
            DensityGrid density = carving_to_density(carved, cfg.fill_value);
            write_volume(density, (dir / "coarse_density.vol").string());
            coarse.push_back(std::move(density));
            if (i == eval_frame) {
                gt_eval_frame = read_density_volume((dir / "ground_truth.vol").string());
                eval_depths = std::move(depths);
            }
        }

        stage = "silhouette_baseline";
        std::vector<BinaryImage> masks;
        for (const auto& d : eval_depths)
            masks.push_back(render_silhouette(d, cfg.eval.silhouette_depth_threshold));
        const CarvingGrid hull = silhouette_carve(cfg.domain, cams, masks);
        const DensityGrid hull_density = carving_to_density(hull, cfg.fill_value);
        write_volume(hull_density, (fs::path(cfg.out_dir) / "silhouette_density.vol").string());

        stage = "wind_fit";
        const WindProfile wind = fit_wind(coarse, cfg.sequence);
        write_text((fs::path(cfg.out_dir) / "wind.json").string(),
                   wind_to_json(wind, cfg.sequence, coarse.size()).dump(2) + "\n");

        stage = "integration";
        const DensityGrid integrated = integrate(coarse, wind, cfg.sequence);
        write_volume(integrated, (fs::path(cfg.out_dir) / "integrated.vol").string());

        stage = "evaluation";
        PipelineResult result;
        result.wind = wind;
        result.eval_frame = eval_frame;
        result.carving = evaluate_reconstruction(gt_eval_frame, coarse[std::size_t(eval_frame)],
                                                 *s.rig.central, cfg.eval, cfg.lambda);
        result.silhouette = evaluate_reconstruction(gt_eval_frame, hull_density, *s.rig.central,
                                                    cfg.eval, cfg.lambda);
        result.integrated =
            evaluate_reconstruction(s.base, integrated, *s.rig.central, cfg.eval, cfg.lambda);

        json metrics;
        metrics["eval_frame"] = eval_frame;
        metrics["depth_carving"] = metrics_to_json(result.carving);
        metrics["silhouette"] = metrics_to_json(result.silhouette);
        metrics["integrated"] = metrics_to_json(result.integrated);
        write_text((fs::path(cfg.out_dir) / "metrics.json").string(), metrics.dump(2) + "\n");

        manifest["wind"] = wind_to_json(wind, cfg.sequence, coarse.size());
        manifest["metrics"] = metrics;
        finish_manifest(manifest, cfg.out_dir, "ok");
        result.manifest_path = (fs::path(cfg.out_dir) / "manifest.json").string();
        result.combined_hash = manifest["combined_hash"].get<std::string>();
        return result;
    } catch (const std::exception& e) {
        if (!cfg.out_dir.empty() && fs::exists(cfg.out_dir))
            finish_manifest(manifest, cfg.out_dir, "failed", stage);
        rethrow_with_stage(stage, e);
    }
}

std::vector<AblationRow> compare_strategies(const PipelineConfig& cfg,
                                            const std::vector<std::string>& overrides) {
    PipelineConfig local = cfg;
    const int total =
        std::max(cfg.sequence.window,
                 *std::max_element(cfg.ablate_windows.begin(), cfg.ablate_windows.end()));
    local.sequence.window = total;

    json manifest = manifest_base(local, overrides);
    std::string stage = "synthesis";
    try {
        SceneData s = build_scene(local, manifest);
        const auto cams = s.rig.reference_cameras();
        if (!s.rig.central) throw config_error("ablate: rig has no central evaluation camera");
        const double tc_total = center_time(std::size_t(total));

        stage = "carving";
        std::vector<DensityGrid> depth_rows, sil_rows, tsdf_rows;
        for (int i = 0; i < total; ++i) {
            const fs::path dir = s.paths.frame_dirs[std::size_t(i)];
            std::vector<DepthMap> depths;
            for (std::size_t k = 0; k < cams.size(); ++k)
                depths.push_back(
                    read_depth_map((dir / ("depth_pair" + std::to_string(k) + ".dmap")).string()));

            depth_rows.push_back(
                carving_to_density(depth_carve(local.domain, cams, depths, local.carve),
                                   local.fill_value));

            std::vector<BinaryImage> masks;
            for (const auto& d : depths)
                masks.push_back(render_silhouette(d, local.eval.silhouette_depth_threshold));
            sil_rows.push_back(carving_to_density(silhouette_carve(local.domain, cams, masks),
                                                  local.fill_value));

            const ScalarGrid fused = tsdf_fuse(local.domain, cams, depths, local.tsdf_truncation);
            CarvingGrid kept(local.domain, 0);
            for (std::size_t vi = 0; vi < fused.data.size(); ++vi)
                kept.data[vi] = fused.data[vi] >= 0.0f ? 1 : 0;
            tsdf_rows.push_back(carving_to_density(kept, local.fill_value));
        }

        stage = "ablation";
        const int eval_frame = total / 2;
        const DensityGrid gt_eval = read_density_volume(
            (fs::path(s.paths.frame_dirs[std::size_t(eval_frame)]) / "ground_truth.vol").string());

        struct Strategy {
            const char* name;
            const std::vector<DensityGrid>* rows;
        };
        const Strategy strategies[] = {{"silhouette", &sil_rows},
                                       {"tsdf", &tsdf_rows},
                                       {"depth", &depth_rows}};

        std::vector<AblationRow> table;
        json jrows = json::array();
        for (const auto& st : strategies) {
            AblationRow none;
            none.strategy = st.name;
            none.window = 0;
            none.metrics = evaluate_reconstruction(gt_eval, (*st.rows)[std::size_t(eval_frame)],
                                                   *s.rig.central, local.eval, local.lambda);
            table.push_back(none);
            jrows.push_back({{"strategy", none.strategy},
                             {"window", 0},
                             {"metrics", metrics_to_json(none.metrics)}});

            for (int w : local.ablate_windows) {
                if (w > total) throw config_error("ablate: window exceeds generated frames");
                const int start = eval_frame - w / 2;
                const int lo = std::clamp(start, 0, total - w);
                std::vector<DensityGrid> slice(st.rows->begin() + lo, st.rows->begin() + lo + w);
                const WindProfile wind = fit_wind(slice, local.sequence);
                const DensityGrid merged = integrate(slice, wind, local.sequence);

                // Ground truth at the slice's own center time.
                const double t_center = lo + center_time(std::size_t(w));
                DensityGrid gt;
                if (t_center == tc_total)
                    gt = s.base;
                else
                    gt = advect(s.base, local.scene_wind_u, local.scene_wind_v,
                                (t_center - tc_total) * local.sequence.frame_interval);

                AblationRow row;
                row.strategy = st.name;
                row.window = w;
                row.metrics = evaluate_reconstruction(gt, merged, *s.rig.central, local.eval,
                                                      local.lambda);
                table.push_back(row);
                jrows.push_back({{"strategy", row.strategy},
                                 {"window", row.window},
                                 {"metrics", metrics_to_json(row.metrics)},
                                 {"wind", wind_to_json(wind, local.sequence, slice.size())}});
            }
        }

        manifest["ablation"] = jrows;
        write_text((fs::path(local.out_dir) / "ablation.json").string(), jrows.dump(2) + "\n");
        finish_manifest(manifest, local.out_dir, "ok");
        return table;
    } catch (const std::exception& e) {
        if (!local.out_dir.empty() && fs::exists(local.out_dir))
            finish_manifest(manifest, local.out_dir, "failed", stage);
        rethrow_with_stage(stage, e);
    }
}

} // namespace cloudvol
