// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/types.hpp"

#include <array>
#include <span>

namespace splatdyn {

enum class CellState : std::uint8_t { Exterior, Occupied, Interior6, AboveSurface5, Surface };

/// A signed coordinate axis, used for the "up" direction of container detection.
struct AxisDir {
    int axis = 1;
    int sign = 1;

    /// Dominant axis of -gravity.
    static AxisDir up_from_gravity(const Vec3d& gravity);
};

class VoxelGrid {
public:
    VoxelGrid() = default;
    VoxelGrid(const Vec3d& origin, double spacing, const Vec3i& dims);

    const Vec3d& origin() const { return origin_; }
    double spacing() const { return spacing_; }
    const Vec3i& dims() const { return dims_; }
    std::size_t cell_count() const { return cells_.size(); }

    std::size_t index(int i, int j, int k) const { return std::size_t(i) + std::size_t(dims_.x()) * (j + std::size_t(dims_.y()) * k); }
    std::size_t index(const Vec3i& c) const { return index(c.x(), c.y(), c.z()); }
    Vec3i coords(std::size_t idx) const;
    bool in_bounds(const Vec3i& c) const { return (c.array() >= 0).all() && (c.array() < dims_.array()).all(); }

    /// Cell containing `p` (floor((p - origin)/h)); may be out of bounds.
    Vec3i cell_of(const Vec3d& p) const;
    Vec3d center(const Vec3i& c) const { return origin_ + (c.cast<double>().array() + 0.5).matrix() * spacing_; }

    CellState state(std::size_t idx) const { return cells_[idx]; }
    CellState state(const Vec3i& c) const { return cells_[index(c)]; }
    void set_state(std::size_t idx, CellState s) { cells_[idx] = s; }

    std::size_t count(CellState s) const;

    /// The six face neighbors of a cell that lie inside the grid.
    template <typename Fn>
    void for_each_neighbor(const Vec3i& c, Fn&& fn) const
    {
        for (int axis = 0; axis < 3; ++axis) {
            for (int sign : {-1, 1}) {
                Vec3i n = c;
                n[axis] += sign;
                if (in_bounds(n)) fn(n);
            }
        }
    }

private:
    Vec3d origin_ = Vec3d::Zero();
    double spacing_ = 1.0;
    Vec3i dims_ = Vec3i::Zero();
    std::vector<CellState> cells_;
};

/// Grid over the AABB of `points` plus `padding` cells per side; points sit at cell
/// centers of the lattice anchored at the AABB minimum. Cells holding a point are Occupied.
VoxelGrid voxelize(std::span<const Vec3d> points, double spacing, int padding = 1);

/// Empty cells whose rays along all six axis directions hit an Occupied cell become Interior6.
void classify_interior_6dir(VoxelGrid& grid);

/// Empty, non-Interior6 cells whose rays along the five directions other than `up` hit an
/// Occupied or Interior6 cell become AboveSurface5. Run after classify_interior_6dir.
void classify_above_surface_5dir(VoxelGrid& grid, AxisDir up = {});

/// Occupied cells face-adjacent to the AboveSurface5 region, restricted horizontally to the
/// Occupied AABB shrunk by `shrink` (fraction of its width) per side. Returns cell indices
/// in ascending order. Throws ArgumentError unless 0 <= shrink < 0.5.
std::vector<std::size_t> extract_surface(const VoxelGrid& grid, double shrink, AxisDir up = {});

} // namespace splatdyn
