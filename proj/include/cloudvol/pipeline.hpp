#pragma once

#include <map>
#include <string>
#include <vector>

#include "cloudvol/advection.hpp"
#include "cloudvol/carving.hpp"
#include "cloudvol/evaluation.hpp"
#include "cloudvol/synthetic.hpp"

namespace cloudvol {

/// Full run configuration. Defaults reproduce the reference setup: grid
/// 200x200x72 at 50 m over [-5, 5] km from 400 m altitude, epsilon 1000 m,
/// 20-frame window at 5 s, thresholds 0.15 / 4000 m / 20000 m.
struct PipelineConfig {
    GridDomain domain;
    CarveConfig carve;
    double fill_value = 0.04;       // density assigned to kept voxels, 1/m
    double tsdf_truncation = 1000.0;
    SequenceConfig sequence;
    DepthNoise noise;
    SceneParams scene;
    double scene_wind_u = 8.0;      // ground-truth wind for synthetic runs, m/s
    double scene_wind_v = -3.0;
    double surface_threshold = 0.0; // depth-render level; 0 derives it from
                                    // the segmentation opacity threshold
    double render_step = 25.0;
    EvalThresholds eval;
    double lambda = 1.0;
    RigOptions rig;
    std::vector<int> ablate_windows = {5, 20, 40};
    std::string out_dir;
    std::uint64_t seed = 0;

    void validate() const;
    /// The effective depth-render surface level (derives the default).
    double effective_surface_threshold() const;
};

PipelineConfig config_from_json_file(const std::string& path);
void config_to_json_file(const PipelineConfig& cfg, const std::string& path);
std::string config_to_json_string(const PipelineConfig& cfg);
/// Dotted keys explicitly present in a config file (for override tracking).
std::vector<std::string> config_file_keys(const std::string& path);

/// Provenance of each default, keyed by dotted config path: "paper" for
/// values fixed by the reference setup, "design" for artifact decisions.
const std::map<std::string, std::string>& config_provenance();

/// Scene directory layout shared by `synth` and `pipeline`:
///   cameras.json, ground_truth_center.vol, frames/NNN/ground_truth.vol,
///   frames/NNN/depth_pair<k>.dmap, manifest.json
/// `pipeline` adds frames/NNN/carving.vol + coarse_density.vol,
/// silhouette_density.vol, integrated.vol, wind.json, metrics.json.
struct ScenePaths {
    std::string root;
    std::string cameras;
    std::string ground_truth_center;
    std::vector<std::string> frame_dirs;
};

/// Generates and writes a synthetic scene (no reconstruction stages).
/// `overrides` lists config keys that were explicitly set; it is recorded in
/// the manifest next to the defaults' provenance.
ScenePaths synthesize_scene(const PipelineConfig& cfg,
                            const std::vector<std::string>& overrides = {});

struct PipelineResult {
    WindProfile wind;
    MetricsReport carving;     // stand-alone depth carving at the eval frame
    MetricsReport silhouette;  // visual-hull baseline at the eval frame
    MetricsReport integrated;  // carving + advection at the window center
    int eval_frame = 0;
    std::string manifest_path;
    std::string combined_hash;
};

/// End-to-end run: synthesis, depth rendering + corruption, per-frame depth
/// carving, wind fit, integration, metrics, manifest. Deterministic for a
/// fixed config and seed; a failing stage is named in the error and flagged
/// in the manifest.
PipelineResult run_pipeline(const PipelineConfig& cfg,
                            const std::vector<std::string>& overrides = {});

struct AblationRow {
    std::string strategy; // "silhouette", "tsdf", "depth"
    int window = 0;       // 0 = no advection
    MetricsReport metrics;
};

/// Guidance-strategy x advection-window sweep mirroring the ablation tables:
/// {silhouette, tsdf, depth} x {none, ablate_windows...}.
std::vector<AblationRow> compare_strategies(const PipelineConfig& cfg,
                                            const std::vector<std::string>& overrides = {});

/// FNV-1a 64 over a file's bytes, hex-encoded. Exposed for determinism tests.
std::string hash_file(const std::string& path);
/// Combined hash over relative paths + contents of every regular file under
/// root, visited in sorted order.
std::string hash_tree(const std::string& root);

} // namespace cloudvol
