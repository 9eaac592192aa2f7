#include "cloudvol/grid.hpp"

#include <cmath>

namespace cloudvol {

double rotation_defect(const Mat3& A) {
    const Mat3 G = transposed(A) * A;
    double defect = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double target = (i == j) ? 1.0 : 0.0;
            defect = std::max(defect, std::abs(G.m[3 * i + j] - target));
        }
    const double det = A.m[0] * (A.m[4] * A.m[8] - A.m[5] * A.m[7]) -
                       A.m[1] * (A.m[3] * A.m[8] - A.m[5] * A.m[6]) +
                       A.m[2] * (A.m[3] * A.m[7] - A.m[4] * A.m[6]);
    return std::max(defect, std::abs(det - 1.0));
}

double sample_trilinear(const VoxelGrid<float>& grid, const Vec3& g) {
    const GridDomain& d = grid.domain;
    if (g.x < 0.0 || g.x > double(d.nx - 1) ||
        g.y < 0.0 || g.y > double(d.ny - 1) ||
        g.z < 0.0 || g.z > double(d.nz - 1))
        return 0.0;

    int x0 = int(std::floor(g.x));
    int y0 = int(std::floor(g.y));
    int z0 = int(std::floor(g.z));
    // Exact upper boundary: keep the cell below so x0+1 stays in range.
    if (x0 == d.nx - 1) x0 = std::max(0, x0 - 1);
    if (y0 == d.ny - 1) y0 = std::max(0, y0 - 1);
    if (z0 == d.nz - 1) z0 = std::max(0, z0 - 1);
    const int x1 = std::min(x0 + 1, d.nx - 1);
    const int y1 = std::min(y0 + 1, d.ny - 1);
    const int z1 = std::min(z0 + 1, d.nz - 1);

    const double fx = g.x - x0;
    const double fy = g.y - y0;
    const double fz = g.z - z0;

    const auto v = [&](int ix, int iy, int iz) { return double(grid.data[d.index(ix, iy, iz)]); };

    const double c00 = v(x0, y0, z0) * (1.0 - fz) + v(x0, y0, z1) * fz;
    const double c01 = v(x0, y1, z0) * (1.0 - fz) + v(x0, y1, z1) * fz;
    const double c10 = v(x1, y0, z0) * (1.0 - fz) + v(x1, y0, z1) * fz;
    const double c11 = v(x1, y1, z0) * (1.0 - fz) + v(x1, y1, z1) * fz;
    const double c0 = c00 * (1.0 - fy) + c01 * fy;
    const double c1 = c10 * (1.0 - fy) + c11 * fy;
    return c0 * (1.0 - fx) + c1 * fx;
}

void validate_density(const VoxelGrid<float>& grid) {
    for (std::size_t i = 0; i < grid.data.size(); ++i) {
        const float v = grid.data[i];
        if (!std::isfinite(v) || v < 0.0f)
            throw numeric_error("density grid: non-finite or negative value at linear index " +
                                std::to_string(i));
    }
}

void validate_binary(const VoxelGrid<std::uint8_t>& grid) {
    for (std::size_t i = 0; i < grid.data.size(); ++i) {
        if (grid.data[i] > 1)
            throw numeric_error("binary grid: value " + std::to_string(int(grid.data[i])) +
                                " at linear index " + std::to_string(i));
    }
}

} // namespace cloudvol
