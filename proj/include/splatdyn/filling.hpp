// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/gaussian.hpp"
#include "splatdyn/voxel_grid.hpp"

#include <nlohmann/json.hpp>

namespace splatdyn {

struct FillOptions {
    double spacing = 0.0;  ///< voxel size h; <= 0 picks one so the longest axis spans `target_cells`
    int target_cells = 24;
    double shrink = 0.2;   ///< horizontal fraction trimmed per side before surface extraction
    double scale_factor = 0.6; ///< s_f applied after isotropization
    AxisDir up{};
    bool include_above_band = false; ///< also fill the AboveSurface5 layer touching the surface
};

struct FillReport {
    double spacing = 0;
    Vec3i dims = Vec3i::Zero();
    std::size_t exterior = 0, occupied = 0, interior6 = 0, above_surface5 = 0, surface_voxels = 0;
    std::size_t surface_kernels = 0, filled_kernels = 0;
    FillOptions options;

    nlohmann::json to_json() const;
};

struct FillResult {
    SplatScene granules;
    FillReport report;
    VoxelGrid grid; ///< classified grid, Surface cells marked
    IndexSet surface_indices; ///< object kernels kept as surface granules; the rest is the container
};

/// Voxel size giving `target_cells` cells along the longest AABB axis.
double auto_spacing(const SplatScene& scene, int target_cells);

/// Rebuilds a container's content as granules: surface kernels are kept, one kernel is
/// added per Interior6 cell at its center inheriting every attribute from the nearest
/// surface kernel (ties to the lowest index), and all output scales become
/// min(s) * scale_factor on every axis. Throws StateError when no surface is found.
FillResult fill_granular(const SplatScene& object, const FillOptions& options = {});

} // namespace splatdyn
