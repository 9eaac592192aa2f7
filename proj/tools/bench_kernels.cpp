// Timing comparison between the OpenMP kernels and the serial reference.
// Results must match bit-exactly; the tool verifies that while timing.
//
// Usage: bench_kernels [--nx N] [--ny N] [--nz N] [--frames T] [--threads P]

#include <cstdio>
#include <cstring>
#include <string>

#include <omp.h>

#include "cloudvol/pipeline.hpp"
#include "cloudvol/serial_ref.hpp"

using namespace cloudvol;

namespace {

template <typename F>
double time_once(F&& f) {
    const double t0 = omp_get_wtime();
    f();
    return omp_get_wtime() - t0;
}

bool same_bits(const std::vector<float>& a, const std::vector<float>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * 4) == 0;
}

void report(const char* name, double serial_s, double parallel_s, bool identical) {
    std::printf("%-16s serial %8.3f s   openmp %8.3f s   speedup %5.2fx   %s\n", name, serial_s,
                parallel_s, serial_s / parallel_s, identical ? "bit-identical" : "MISMATCH");
}

} // namespace

int main(int argc, char** argv) {
    GridDomain domain;
    domain.nx = 128;
    domain.ny = 128;
    domain.nz = 48;
    int frames = 8;
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string a = argv[i];
        const int v = std::atoi(argv[i + 1]);
        if (a == "--nx") domain.nx = v;
        else if (a == "--ny") domain.ny = v;
        else if (a == "--nz") domain.nz = v;
        else if (a == "--frames") frames = v;
        else if (a == "--threads") omp_set_num_threads(v);
        else {
            std::fprintf(stderr, "unknown option %s\n", a.c_str());
            return 2;
        }
    }
    std::printf("grid %dx%dx%d, %d frames, %d threads\n\n", domain.nx, domain.ny, domain.nz,
                frames, omp_get_max_threads());

    SceneParams params;
    params.cloud_fraction = 0.4;
    params.seed = 7;
    const DensityGrid base = generate_cloud_field(domain, params);
    const StereoRig rig = make_paper_rig(7);
    const auto cams = rig.reference_cameras();
    const double thr = segmentation_density_level(0.15, domain.voxel_size);

    // render_depth
    std::vector<DepthMap> depths_par, depths_ser;
    {
        double ts = 0, tp = 0;
        bool ok = true;
        for (const auto& cam : cams) {
            DepthMap dp, ds;
            tp += time_once([&] { dp = render_depth(base, cam, thr); });
            ts += time_once([&] { ds = serial::render_depth(base, cam, thr); });
            ok = ok && same_bits(dp.data, ds.data);
            depths_par.push_back(std::move(dp));
            depths_ser.push_back(std::move(ds));
        }
        report("render_depth", ts, tp, ok);
    }

    // carve + combine
    {
        CarveConfig cfg;
        std::vector<CarvingGrid> singles;
        double tp = time_once([&] {
            for (std::size_t k = 0; k < cams.size(); ++k)
                singles.push_back(carve_single_view(domain, cams[k], depths_par[k], cfg));
            combine_carvings(singles);
        });
        std::vector<CarvingGrid> singles_s;
        double ts = time_once([&] {
            for (std::size_t k = 0; k < cams.size(); ++k)
                singles_s.push_back(serial::carve_single_view(domain, cams[k], depths_par[k], cfg));
        });
        bool ok = true;
        for (std::size_t k = 0; k < singles.size(); ++k)
            ok = ok && singles[k].data == singles_s[k].data;
        report("depth_carving", ts, tp, ok);
    }

    // tsdf
    {
        ScalarGrid fp, fsr;
        const double tp = time_once([&] { fp = tsdf_fuse(domain, cams, depths_par); });
        const double ts = time_once([&] { fsr = serial::tsdf_fuse(domain, cams, depths_par); });
        report("tsdf_fuse", ts, tp, same_bits(fp.data, fsr.data));
    }

    // advect
    {
        ScalarGrid ap, as;
        const double tp = time_once([&] { ap = advect(base, 7.3, -4.1, 12.5); });
        const double ts = time_once([&] { as = serial::advect(base, 7.3, -4.1, 12.5); });
        report("advect", ts, tp, same_bits(ap.data, as.data));
    }

    // wind objective over a generated sequence
    {
        SequenceConfig seq;
        seq.window = frames;
        const SequenceSample sample = generate_sequence(domain, params, 9.0, -4.0, frames, 5.0);
        double op = 0, os = 0;
        const double tp = time_once([&] { op = wind_objective(sample.frames, 6.0, -2.0, seq); });
        const double ts =
            time_once([&] { os = serial::wind_objective(sample.frames, 6.0, -2.0, seq); });
        report("wind_objective", ts, tp, op == os);

        ScalarGrid ip, is;
        WindProfile wind{9.0, -4.0, 0.0, 0};
        const double tpi = time_once([&] { ip = integrate(sample.frames, wind, seq); });
        const double tsi = time_once([&] { is = serial::integrate(sample.frames, wind, seq); });
        report("integrate", tsi, tpi, same_bits(ip.data, is.data));
    }

    // render_opacity
    {
        OpacityMap op, os;
        const double tp = time_once([&] { op = render_opacity(base, *rig.central); });
        const double ts = time_once([&] { os = serial::render_opacity(base, *rig.central); });
        report("render_opacity", ts, tp,
               same_bits(op.opacity, os.opacity) && same_bits(op.depth, os.depth));
    }
    return 0;
}
