// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/voxel_grid.hpp"

#include <algorithm>
#include <cmath>

namespace splatdyn {
namespace {

// Bit 2*axis is set when the ray toward -axis hits a blocking cell, bit 2*axis+1 for +axis.
template <typename Blocking>
std::vector<std::uint8_t> ray_hits(const VoxelGrid& grid, Blocking&& blocking)
{
    std::vector<std::uint8_t> hits(grid.cell_count(), 0);
    const Vec3i d = grid.dims();
    for (int axis = 0; axis < 3; ++axis) {
        const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
        for (int u = 0; u < d[a1]; ++u) {
            for (int v = 0; v < d[a2]; ++v) {
                Vec3i c;
                c[a1] = u;
                c[a2] = v;
                bool seen = false;
                for (int t = 0; t < d[axis]; ++t) {
                    c[axis] = t;
                    const auto idx = grid.index(c);
                    if (seen) hits[idx] |= std::uint8_t(1u << (2 * axis));
                    seen = seen || blocking(grid.state(idx));
                }
                seen = false;
                for (int t = d[axis] - 1; t >= 0; --t) {
                    c[axis] = t;
                    const auto idx = grid.index(c);
                    if (seen) hits[idx] |= std::uint8_t(1u << (2 * axis + 1));
                    seen = seen || blocking(grid.state(idx));
                }
            }
        }
    }
    return hits;
}

} // namespace

AxisDir AxisDir::up_from_gravity(const Vec3d& gravity)
{
    int axis;
    gravity.cwiseAbs().maxCoeff(&axis);
    return {axis, gravity[axis] > 0 ? -1 : 1};
}

VoxelGrid::VoxelGrid(const Vec3d& origin, double spacing, const Vec3i& dims)
    : origin_(origin), spacing_(spacing), dims_(dims)
{
    if (!(spacing > 0.0)) throw ArgumentError("voxel spacing must be positive");
    if ((dims.array() <= 0).any()) throw ArgumentError("voxel grid dimensions must be positive");
    cells_.assign(std::size_t(dims.x()) * dims.y() * dims.z(), CellState::Exterior);
}

Vec3i VoxelGrid::coords(std::size_t idx) const
{
    const int i = int(idx % dims_.x());
    const int j = int((idx / dims_.x()) % dims_.y());
    const int k = int(idx / (std::size_t(dims_.x()) * dims_.y()));
    return {i, j, k};
}

Vec3i VoxelGrid::cell_of(const Vec3d& p) const
{
    const Vec3d f = (p - origin_) / spacing_;
    return Vec3i(int(std::floor(f.x())), int(std::floor(f.y())), int(std::floor(f.z())));
}

std::size_t VoxelGrid::count(CellState s) const { return std::size_t(std::count(cells_.begin(), cells_.end(), s)); }

VoxelGrid voxelize(std::span<const Vec3d> points, double spacing, int padding)
{
    if (!(spacing > 0.0)) throw ArgumentError("voxel spacing must be positive");
    if (points.empty()) throw ArgumentError("cannot voxelize an empty point set");
    if (padding < 0) throw ArgumentError("padding must be non-negative");
    Vec3d lo = points[0], hi = points[0];
    for (const auto& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    Vec3i dims;
    for (int a = 0; a < 3; ++a) dims[a] = int(std::floor((hi[a] - lo[a]) / spacing + 0.5)) + 1 + 2 * padding;
    const Vec3d origin = lo - Vec3d::Constant((padding + 0.5) * spacing);
    VoxelGrid grid(origin, spacing, dims);
    for (const auto& p : points) {
        const Vec3i c = grid.cell_of(p).cwiseMax(Vec3i::Zero()).cwiseMin(dims - Vec3i::Ones());
        grid.set_state(grid.index(c), CellState::Occupied);
    }
    return grid;
}

void classify_interior_6dir(VoxelGrid& grid)
{
    const auto hits = ray_hits(grid, [](CellState s) { return s == CellState::Occupied; });
    for (std::size_t i = 0; i < grid.cell_count(); ++i)
        if (grid.state(i) == CellState::Exterior && hits[i] == 0b111111) grid.set_state(i, CellState::Interior6);
}

void classify_above_surface_5dir(VoxelGrid& grid, AxisDir up)
{
    const auto hits = ray_hits(
        grid, [](CellState s) { return s == CellState::Occupied || s == CellState::Interior6; });
    const std::uint8_t up_bit = std::uint8_t(1u << (2 * up.axis + (up.sign > 0 ? 1 : 0)));
    const std::uint8_t need = std::uint8_t(0b111111 & ~up_bit);
    for (std::size_t i = 0; i < grid.cell_count(); ++i)
        if (grid.state(i) == CellState::Exterior && (hits[i] & need) == need)
            grid.set_state(i, CellState::AboveSurface5);
}

std::vector<std::size_t> extract_surface(const VoxelGrid& grid, double shrink, AxisDir up)
{
    if (!(shrink >= 0.0 && shrink < 0.5)) throw ArgumentError("shrink must lie in [0, 0.5)");
    Vec3i lo = grid.dims(), hi = Vec3i::Constant(-1);
    for (std::size_t i = 0; i < grid.cell_count(); ++i) {
        if (grid.state(i) != CellState::Occupied) continue;
        const Vec3i c = grid.coords(i);
        lo = lo.cwiseMin(c);
        hi = hi.cwiseMax(c);
    }
    std::vector<std::size_t> out;
    if ((hi.array() < 0).any()) return out;

    Eigen::Vector3d keep_lo, keep_hi;
    for (int a = 0; a < 3; ++a) {
        const double w = hi[a] - lo[a];
        const double s = a == up.axis ? 0.0 : shrink;
        keep_lo[a] = lo[a] + s * w;
        keep_hi[a] = hi[a] - s * w;
    }
    for (std::size_t i = 0; i < grid.cell_count(); ++i) {
        if (grid.state(i) != CellState::Occupied) continue;
        const Vec3i c = grid.coords(i);
        bool boundary = false;
        grid.for_each_neighbor(c, [&](const Vec3i& n) { boundary |= grid.state(n) == CellState::AboveSurface5; });
        if (!boundary) continue;
        const Eigen::Vector3d cd = c.cast<double>();
        if ((cd.array() < keep_lo.array() - 1e-9).any() || (cd.array() > keep_hi.array() + 1e-9).any()) continue;
        out.push_back(i);
    }
    return out;
}

} // namespace splatdyn
