// Command-line front end for the reconstruction pipeline.
//
// Subcommands: synth, carve, advect, integrate, eval, pipeline, ablate.
// Exit codes: 0 success, 2 configuration error, 3 I/O error,
// 4 numeric/domain error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include <omp.h>

#include <CLI11.hpp>

#include "cloudvol/pipeline.hpp"
#include "cloudvol/serial_ref.hpp"
#include "cloudvol/volume_io.hpp"

namespace fs = std::filesystem;
using namespace cloudvol;

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "JSON config file");
    cmd->add_option("--seed", opts.seed, "global seed (overrides config)");
    cmd->add_option("--out", opts.out, "output directory (overrides config)");
    cmd->add_option("--threads", opts.threads,
                    "OpenMP thread count (must not change results; 0 = default)");
}

// Flag wins over config file; both win over defaults. The override list
// feeds the manifest.
PipelineConfig resolve_config(const CommonOpts& opts, std::vector<std::string>& overrides) {
    PipelineConfig cfg;
    if (!opts.config_path.empty()) {
        cfg = config_from_json_file(opts.config_path);
        overrides = config_file_keys(opts.config_path);
    }
    if (opts.seed) {
        cfg.seed = *opts.seed;
        overrides.push_back("flag:--seed");
    }
    if (!opts.out.empty()) {
        cfg.out_dir = opts.out;
        overrides.push_back("flag:--out");
    }
    if (opts.threads > 0) omp_set_num_threads(opts.threads);
    return cfg;
}

void print_metrics(const char* name, const MetricsReport& m) {
    const std::string j = m.jaccard ? std::to_string(*m.jaccard) : "clear-sky";
    std::printf("%-14s jaccard=%s coverage_error=%.3f\n", name, j.c_str(), m.coverage_error);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cloudvol: volumetric cloud reconstruction from sparse stereo depths"};
    app.require_subcommand(1);

    CommonOpts synth_opts, pipeline_opts, ablate_opts;

    auto* synth = app.add_subcommand("synth", "generate a synthetic scene directory");
    add_common(synth, synth_opts);

    auto* pipeline = app.add_subcommand("pipeline", "run the full reconstruction pipeline");
    add_common(pipeline, pipeline_opts);

    auto* ablate = app.add_subcommand("ablate", "guidance-strategy and window-size sweep");
    add_common(ablate, ablate_opts);

    // carve
    std::string carve_scene, carve_out, carve_mode = "depth";
    int carve_frame = 0;
    double carve_epsilon = -1.0, carve_fill = -1.0;
    CommonOpts carve_common;
    auto* carve_cmd = app.add_subcommand("carve", "carve one frame of a scene directory");
    carve_cmd->add_option("--scene", carve_scene, "scene directory from synth")->required();
    carve_cmd->add_option("--frame", carve_frame, "frame index (default 0)");
    carve_cmd->add_option("--mode", carve_mode, "depth | silhouette | tsdf");
    carve_cmd->add_option("--epsilon", carve_epsilon, "carving margin override (m)");
    carve_cmd->add_option("--fill", carve_fill, "density fill for kept voxels (1/m)");
    add_common(carve_cmd, carve_common);

    // advect
    std::string adv_in, adv_out;
    double adv_u = 0.0, adv_v = 0.0, adv_dt = 0.0;
    int adv_threads = 0;
    auto* advect_cmd = app.add_subcommand("advect", "advect a single volume");
    advect_cmd->add_option("--in", adv_in, "input VOL1 file")->required();
    advect_cmd->add_option("--out", adv_out, "output VOL1 file")->required();
    advect_cmd->add_option("--u", adv_u, "east wind (m/s)")->required();
    advect_cmd->add_option("--v", adv_v, "north wind (m/s)")->required();
    advect_cmd->add_option("--dt", adv_dt, "advection time (s)")->required();
    advect_cmd->add_option("--threads", adv_threads, "OpenMP thread count");

    // integrate
    std::vector<std::string> int_frames;
    std::string int_out, int_report;
    double int_interval = 5.0;
    int int_threads = 0;
    auto* integrate_cmd =
        app.add_subcommand("integrate", "fit a wind profile to ordered frames and integrate");
    integrate_cmd->add_option("frames", int_frames, "ordered VOL1 files")->required();
    integrate_cmd->add_option("--out", int_out, "integrated VOL1 output")->required();
    integrate_cmd->add_option("--report", int_report, "wind report JSON output");
    integrate_cmd->add_option("--interval", int_interval, "frame interval (s)");
    integrate_cmd->add_option("--threads", int_threads, "OpenMP thread count");

    // eval
    std::string eval_gt, eval_pred, eval_cams, eval_report, eval_masks;
    double eval_lambda = 1.0;
    int eval_threads = 0;
    auto* eval_cmd = app.add_subcommand("eval", "segmentation metrics for a reconstruction");
    eval_cmd->add_option("--gt", eval_gt, "ground-truth VOL1")->required();
    eval_cmd->add_option("--pred", eval_pred, "predicted VOL1")->required();
    eval_cmd->add_option("--cameras", eval_cams, "camera JSON (central camera used)")->required();
    eval_cmd->add_option("--report", eval_report, "metrics JSON output");
    eval_cmd->add_option("--masks", eval_masks, "directory for PNG masks/opacity images");
    eval_cmd->add_option("--lambda", eval_lambda, "split-L1 empty-voxel weight");
    eval_cmd->add_option("--threads", eval_threads, "OpenMP thread count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    try {
        if (*synth) {
            std::vector<std::string> overrides;
            PipelineConfig cfg = resolve_config(synth_opts, overrides);
            const ScenePaths paths = synthesize_scene(cfg, overrides);
            std::printf("scene written to %s (%zu frames)\n", paths.root.c_str(),
                        paths.frame_dirs.size());
        } else if (*pipeline) {
            std::vector<std::string> overrides;
            PipelineConfig cfg = resolve_config(pipeline_opts, overrides);
            const PipelineResult r = run_pipeline(cfg, overrides);
            std::printf("wind: u=%.3f v=%.3f objective=%.6g evaluations=%ld\n", r.wind.u, r.wind.v,
                        r.wind.objective, r.wind.evaluations);
            print_metrics("depth_carving", r.carving);
            print_metrics("silhouette", r.silhouette);
            print_metrics("integrated", r.integrated);
            std::printf("manifest: %s (hash %s)\n", r.manifest_path.c_str(),
                        r.combined_hash.c_str());
        } else if (*ablate) {
            std::vector<std::string> overrides;
            PipelineConfig cfg = resolve_config(ablate_opts, overrides);
            const auto table = compare_strategies(cfg, overrides);
            std::printf("%-12s %-8s %-10s %s\n", "strategy", "window", "jaccard", "coverage_error");
            for (const auto& row : table)
                std::printf("%-12s %-8d %-10s %.3f\n", row.strategy.c_str(), row.window,
                            row.metrics.jaccard ? std::to_string(*row.metrics.jaccard).c_str()
                                                : "clear-sky",
                            row.metrics.coverage_error);
        } else if (*carve_cmd) {
            std::vector<std::string> overrides;
            PipelineConfig cfg = resolve_config(carve_common, overrides);
            if (carve_epsilon >= 0.0) cfg.carve.epsilon = carve_epsilon;
            if (carve_fill >= 0.0) cfg.fill_value = carve_fill;

            const StereoRig rig = read_cameras_json(
                (fs::path(carve_scene) / "cameras.json").string());
            const auto cams = rig.reference_cameras();
            char frame_name[8];
            std::snprintf(frame_name, sizeof(frame_name), "%03d", carve_frame);
            const fs::path frame_dir = fs::path(carve_scene) / "frames" / frame_name;
            std::vector<DepthMap> depths;
            for (std::size_t k = 0; k < cams.size(); ++k)
                depths.push_back(read_depth_map(
                    (frame_dir / ("depth_pair" + std::to_string(k) + ".dmap")).string()));

            // The frame's ground truth fixes the domain.
            const DensityGrid gt =
                read_density_volume((frame_dir / "ground_truth.vol").string());

            CarvingGrid kept(gt.domain, 0);
            if (carve_mode == "depth") {
                kept = depth_carve(gt.domain, cams, depths, cfg.carve);
            } else if (carve_mode == "silhouette") {
                std::vector<BinaryImage> masks;
                for (const auto& d : depths)
                    masks.push_back(render_silhouette(d, cfg.eval.silhouette_depth_threshold));
                kept = silhouette_carve(gt.domain, cams, masks);
            } else if (carve_mode == "tsdf") {
                const ScalarGrid fused = tsdf_fuse(gt.domain, cams, depths, cfg.tsdf_truncation);
                for (std::size_t i = 0; i < fused.data.size(); ++i)
                    kept.data[i] = fused.data[i] >= 0.0f ? 1 : 0;
            } else {
                throw config_error("carve: unknown mode '" + carve_mode + "'");
            }

            const std::string out =
                carve_common.out.empty() ? (frame_dir / "carving.vol").string() : carve_common.out;
            write_volume(kept, out);
            const fs::path density_path = fs::path(out).parent_path() /
                                          (fs::path(out).stem().string() + "_density.vol");
            write_volume(carving_to_density(kept, cfg.fill_value), density_path.string());
            std::printf("carving written to %s (+ %s)\n", out.c_str(), density_path.c_str());
        } else if (*advect_cmd) {
            if (adv_threads > 0) omp_set_num_threads(adv_threads);
            const DensityGrid in = read_density_volume(adv_in);
            write_volume(advect(in, adv_u, adv_v, adv_dt), adv_out);
            std::printf("advected volume written to %s\n", adv_out.c_str());
        } else if (*integrate_cmd) {
            if (int_threads > 0) omp_set_num_threads(int_threads);
            std::vector<DensityGrid> frames;
            for (const auto& f : int_frames) frames.push_back(read_density_volume(f));
            SequenceConfig seq;
            seq.frame_interval = int_interval;
            seq.window = int(frames.size());
            const WindProfile wind = fit_wind(frames, seq);
            write_volume(integrate(frames, wind, seq), int_out);
            std::printf("u=%.3f v=%.3f objective=%.6g evaluations=%ld window=%zu\n", wind.u,
                        wind.v, wind.objective, wind.evaluations, frames.size());
            if (!int_report.empty()) {
                std::ofstream rep(int_report, std::ios::trunc);
                if (!rep) throw io_error("cannot open for writing: " + int_report);
                rep << "{\n  \"u\": " << wind.u << ",\n  \"v\": " << wind.v
                    << ",\n  \"objective\": " << wind.objective
                    << ",\n  \"evaluations\": " << wind.evaluations
                    << ",\n  \"window\": " << frames.size()
                    << ",\n  \"frame_interval\": " << seq.frame_interval << "\n}\n";
            }
        } else if (*eval_cmd) {
            if (eval_threads > 0) omp_set_num_threads(eval_threads);
            const DensityGrid gt = read_density_volume(eval_gt);
            const DensityGrid pred = read_density_volume(eval_pred);
            const StereoRig rig = read_cameras_json(eval_cams);
            if (!rig.central) throw config_error("eval: camera file has no central camera");
            EvalThresholds thresholds;
            const MetricsReport m =
                evaluate_reconstruction(gt, pred, *rig.central, thresholds, eval_lambda);
            print_metrics("metrics", m);
            if (m.split_l1) std::printf("split_l1=%.6g\n", *m.split_l1);
            if (!eval_report.empty()) {
                std::ofstream rep(eval_report, std::ios::trunc);
                if (!rep) throw io_error("cannot open for writing: " + eval_report);
                rep << "{\n  \"jaccard\": "
                    << (m.jaccard ? std::to_string(*m.jaccard) : "null")
                    << ",\n  \"coverage_error\": " << m.coverage_error << ",\n  \"split_l1\": "
                    << (m.split_l1 ? std::to_string(*m.split_l1) : "null")
                    << ",\n  \"cloud_voxels\": " << m.cloud_voxels
                    << ",\n  \"empty_voxels\": " << m.empty_voxels << "\n}\n";
            }
            if (!eval_masks.empty()) {
                fs::create_directories(eval_masks);
                const OpacityMap om_gt = render_opacity(gt, *rig.central, thresholds.ray_step);
                const OpacityMap om_pred = render_opacity(pred, *rig.central, thresholds.ray_step);
                write_png_opacity((fs::path(eval_masks) / "opacity_gt.png").string(), om_gt);
                write_png_opacity((fs::path(eval_masks) / "opacity_pred.png").string(), om_pred);
                write_png_mask((fs::path(eval_masks) / "mask_gt.png").string(),
                               segment(om_gt, thresholds.opacity_threshold,
                                       thresholds.depth_threshold));
                write_png_mask((fs::path(eval_masks) / "mask_pred.png").string(),
                               segment(om_pred, thresholds.opacity_threshold,
                                       thresholds.depth_threshold));
            }
        }
    } catch (const config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const io_error& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 3;
    } catch (const numeric_error& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
