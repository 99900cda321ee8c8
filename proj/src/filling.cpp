// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/filling.hpp"

#include "splatdyn/kdtree.hpp"

#include <algorithm>

namespace splatdyn {

nlohmann::json FillReport::to_json() const
{
    return {
        {"voxel_counts",
         {{"exterior", exterior},
          {"occupied", occupied},
          {"interior_6", interior6},
          {"above_surface_5", above_surface5},
          {"surface", surface_voxels}}},
        {"surface_kernels", surface_kernels},
        {"filled_kernels", filled_kernels},
        {"grid_dims", {dims.x(), dims.y(), dims.z()}},
        {"parameters",
         {{"h", spacing},
          {"shrink", options.shrink},
          {"s_f", options.scale_factor},
          {"up_axis", options.up.axis},
          {"up_sign", options.up.sign},
          {"include_above_band", options.include_above_band}}},
    };
}

double auto_spacing(const SplatScene& scene, int target_cells)
{
    if (scene.empty()) throw ArgumentError("empty scene");
    if (target_cells < 1) throw ArgumentError("target_cells must be positive");
    const Aabb box = scene.bounds();
    const double extent = (box.max - box.min).maxCoeff();
    return extent > 0 ? extent / target_cells : 1e-2;
}

FillResult fill_granular(const SplatScene& object, const FillOptions& options)
{
    if (!(options.scale_factor > 0.0)) throw ArgumentError("scale factor s_f must be positive");
    if (object.empty()) throw ArgumentError("cannot fill an empty object");
    const double h = options.spacing > 0 ? options.spacing : auto_spacing(object, options.target_cells);

    std::vector<Vec3d> centers;
    centers.reserve(object.size());
    for (const auto& k : object.kernels()) centers.push_back(k.position.cast<double>());

    FillResult result;
    VoxelGrid& grid = result.grid;
    grid = voxelize(centers, h, 1);
    classify_interior_6dir(grid);
    classify_above_surface_5dir(grid, options.up);
    const auto surface = extract_surface(grid, options.shrink, options.up);

    FillReport& rep = result.report;
    rep.spacing = h;
    rep.dims = grid.dims();
    rep.options = options;
    rep.options.spacing = h;
    rep.exterior = grid.count(CellState::Exterior);
    rep.occupied = grid.count(CellState::Occupied);
    rep.interior6 = grid.count(CellState::Interior6);
    rep.above_surface5 = grid.count(CellState::AboveSurface5);
    rep.surface_voxels = surface.size();
    if (surface.empty()) {
        throw StateError("no surface between the interior and an above-surface region; "
                         "the object is likely not a filled container");
    }
    for (auto idx : surface) grid.set_state(idx, CellState::Surface);

    auto granule = [&](GaussianKernel k) {
        k.scale = Vec3f::Constant(k.scale.minCoeff() * static_cast<float>(options.scale_factor));
        return k;
    };

    SplatScene out(object.feature_dim());
    std::vector<Vec3d> surface_pos;
    std::vector<std::uint32_t> surface_src;
    for (std::uint32_t i = 0; i < object.size(); ++i) {
        const Vec3i c = grid.cell_of(centers[i]).cwiseMax(Vec3i::Zero()).cwiseMin(grid.dims() - Vec3i::Ones());
        if (grid.state(c) != CellState::Surface) continue;
        surface_pos.push_back(centers[i]);
        surface_src.push_back(i);
        out.push_back(granule(object[i]));
    }
    rep.surface_kernels = surface_src.size();

    std::vector<std::size_t> fill_cells;
    for (std::size_t i = 0; i < grid.cell_count(); ++i) {
        const auto s = grid.state(i);
        if (s == CellState::Interior6) {
            fill_cells.push_back(i);
        } else if (options.include_above_band && s == CellState::AboveSurface5) {
            bool touches = false;
            grid.for_each_neighbor(grid.coords(i),
                                   [&](const Vec3i& n) { touches |= grid.state(n) == CellState::Surface; });
            if (touches) fill_cells.push_back(i);
        }
    }

    const KdTree<double> tree(surface_pos);
    std::vector<GaussianKernel> filled(fill_cells.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t f = 0; f < std::int64_t(fill_cells.size()); ++f) {
        const Vec3d center = grid.center(grid.coords(fill_cells[f]));
        const auto nn = tree.nearest(center);
        GaussianKernel k = granule(object[surface_src[nn.index]]);
        k.position = center.cast<float>();
        filled[f] = std::move(k);
    }
    for (auto& k : filled) out.push_back(std::move(k));
    rep.filled_kernels = filled.size();
    result.granules = std::move(out);
    result.surface_indices = std::move(surface_src);
    return result;
}

} // namespace splatdyn
