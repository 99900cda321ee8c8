// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/generate.hpp"

#include "splatdyn/polar.hpp"
#include "splatdyn/voxel_grid.hpp"

#include <unordered_map>

namespace splatdyn {
namespace {

std::vector<Vec3d> centers_of(const SplatScene& scene)
{
    std::vector<Vec3d> out;
    out.reserve(scene.size());
    for (const auto& k : scene.kernels()) out.push_back(k.position.cast<double>());
    return out;
}

} // namespace

ObjectParticles generate_particles(const SplatScene& object, Phase phase, double h, std::uint32_t object_id,
                                   std::uint32_t body)
{
    if (object.empty()) throw ArgumentError("cannot generate particles for an empty object");
    if (!(h > 0)) throw ArgumentError("particle spacing must be positive");
    ObjectParticles out;
    out.spacing = h;
    ParticleSet& p = out.particles;
    ConstraintSet& cs = out.constraints;
    const double radius = 0.5 * h;

    if (phase == Phase::Granular) {
        for (std::size_t i = 0; i < object.size(); ++i) {
            const Vec3f s = object[i].scale;
            if (s.x() != s.y() || s.y() != s.z()) {
                throw StateError("granular particles need filled granules; kernel " + std::to_string(i) +
                                 " is anisotropic (run the fill stage first)");
            }
        }
        for (const auto& k : object.kernels()) p.add(k.position.cast<double>(), 1.0, radius, phase, object_id, body);
        cs.adjacency.resize(p.size());
        return out;
    }
    if (phase == Phase::Projectile) throw ArgumentError("projectiles are not generated from splat objects");

    const auto centers = centers_of(object);
    VoxelGrid grid = voxelize(centers, h, 1);
    if (phase == Phase::Deformable) classify_interior_6dir(grid);

    std::unordered_map<std::size_t, std::uint32_t> particle_of;
    for (std::size_t idx = 0; idx < grid.cell_count(); ++idx) {
        const CellState s = grid.state(idx);
        const bool take = s == CellState::Occupied || (phase == Phase::Deformable && s == CellState::Interior6);
        if (!take) continue;
        particle_of[idx] = p.add(grid.center(grid.coords(idx)), 1.0, radius, phase, object_id, body);
    }
    cs.adjacency.resize(p.size());
    auto lookup = [&](const Vec3i& c) -> std::int64_t {
        if (!grid.in_bounds(c)) return -1;
        auto it = particle_of.find(grid.index(c));
        return it == particle_of.end() ? -1 : std::int64_t(it->second);
    };

    std::vector<Vec3i> cell(p.size());
    for (const auto& [idx, i] : particle_of) cell[i] = grid.coords(idx);

    if (phase == Phase::Rigid) {
        for (std::uint32_t i = 0; i < p.size(); ++i)
            for (int dz = -1; dz <= 1; ++dz)
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (!dx && !dy && !dz) continue;
                        const auto j = lookup(cell[i] + Vec3i(dx, dy, dz));
                        if (j >= 0) cs.adjacency[i].push_back(std::uint32_t(j));
                    }
        ShapeCluster c;
        for (std::uint32_t i = 0; i < p.size(); ++i) c.members.push_back(i);
        c.rigid = true;
        c.stiffness = 1;
        c.reset_rest(p);
        cs.clusters.push_back(std::move(c));
        return out;
    }

    for (std::uint32_t i = 0; i < p.size(); ++i) {
        for (int axis = 0; axis < 3; ++axis)
            for (int sign : {-1, 1}) {
                Vec3i c = cell[i];
                c[axis] += sign;
                const auto j = lookup(c);
                if (j < 0) continue;
                cs.adjacency[i].push_back(std::uint32_t(j));
                if (sign > 0) cs.distance.push_back({i, std::uint32_t(j), h, 1.0});
            }
    }
    for (std::uint32_t i = 0; i < p.size(); ++i) {
        ShapeCluster c;
        c.members.push_back(i);
        for (auto j : cs.adjacency[i]) c.members.push_back(j);
        c.center = i;
        c.reset_rest(p);
        Mat3d a = Mat3d::Zero();
        for (const auto& q : c.rest_offsets) a.noalias() += q * q.transpose();
        if (c.members.size() < 3 || is_rank_deficient(a)) continue;
        cs.clusters.push_back(std::move(c));
    }
    return out;
}

} // namespace splatdyn
