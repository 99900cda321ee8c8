// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/constraints.hpp"

#include "splatdyn/shape_matching.hpp"

namespace splatdyn {

void ShapeCluster::reset_rest(const ParticleSet& particles)
{
    double total = 0;
    Vec3d c = Vec3d::Zero();
    for (auto i : members) {
        const double m = matching_mass(particles, i);
        c += m * particles.rest[i];
        total += m;
    }
    rest_centroid = total > 0 ? Vec3d(c / total) : Vec3d::Zero();
    rest_offsets.clear();
    for (auto i : members) rest_offsets.push_back(particles.rest[i] - rest_centroid);
    offsets.resize(rest_offsets.size());
    for (std::size_t k = 0; k < rest_offsets.size(); ++k) offsets[k] = plastic * rest_offsets[k];
}

std::size_t ConstraintSet::append(const ConstraintSet& other, std::uint32_t offset)
{
    for (auto c : other.distance) {
        c.i += offset;
        c.j += offset;
        distance.push_back(c);
    }
    const std::size_t cluster_offset = clusters.size();
    for (auto c : other.clusters) {
        for (auto& m : c.members) m += offset;
        if (c.center != kNoObject) c.center += offset;
        clusters.push_back(std::move(c));
    }
    if (adjacency.size() < offset) adjacency.resize(offset);
    for (auto adj : other.adjacency) {
        for (auto& a : adj) a += offset;
        adjacency.push_back(std::move(adj));
    }
    return cluster_offset;
}

void ConstraintSet::validate(std::size_t n) const
{
    for (const auto& d : distance) {
        if (d.i >= n || d.j >= n) throw ArgumentError("distance constraint index out of range");
        if (!(d.rest_length > 0)) throw ArgumentError("distance constraint rest length must be positive");
        if (!(d.stiffness >= 0 && d.stiffness <= 1)) throw ArgumentError("stiffness must lie in [0,1]");
    }
    for (const auto& c : clusters) {
        for (auto m : c.members)
            if (m >= n) throw ArgumentError("cluster member out of range");
        if (!(c.stiffness >= 0 && c.stiffness <= 1)) throw ArgumentError("stiffness must lie in [0,1]");
    }
}

} // namespace splatdyn
