// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/particles.hpp"

namespace splatdyn {

struct DistanceConstraint {
    std::uint32_t i = 0, j = 0;
    double rest_length = 0;
    double stiffness = 1; ///< PBD stiffness in [0,1], corrected for the iteration count
};

/// Meshless shape-matching cluster with a plastic rest-shape state.
struct ShapeCluster {
    std::vector<std::uint32_t> members;
    /// Offsets of the original rest positions from the rest centroid.
    std::vector<Vec3d> rest_offsets;
    /// rest_offsets premultiplied by `plastic`; the shape the cluster is matched to.
    std::vector<Vec3d> offsets;
    Vec3d rest_centroid = Vec3d::Zero();
    double stiffness = 1;
    Mat3d plastic = Mat3d::Identity();
    double yield = 0.1;        ///< deformation magnitude ||A - R|| that triggers plastic flow
    double plastic_rate = 0;   ///< fraction of the excess deformation absorbed per step
    Quatd rotation = Quatd::Identity(); ///< last fitted rotation (warm start and fallback)
    bool rigid = false;
    bool fragile = false;
    double force_threshold = 0;
    /// Largest external force seen during the current step (impulse / substep).
    double peak_force = 0;
    /// Particle this cluster is centered on (deformable clusters), or kNoObject.
    std::uint32_t center = kNoObject;
    bool degenerate = false; ///< last fit fell back to the previous rotation

    /// Recomputes the centroid and offsets from the members' rest positions.
    void reset_rest(const ParticleSet& particles);
    std::size_t size() const { return members.size(); }
};

struct ConstraintSet {
    std::vector<DistanceConstraint> distance;
    std::vector<ShapeCluster> clusters;
    /// Structural adjacency per particle (face neighbors for deformables, 26-neighborhood for
    /// rigid shells). Used for per-particle rotations and fracture region growing.
    std::vector<std::vector<std::uint32_t>> adjacency;

    /// Appends `other` with particle indices shifted by `offset`. Returns the cluster index
    /// offset of the appended clusters.
    std::size_t append(const ConstraintSet& other, std::uint32_t offset);
    void validate(std::size_t particle_count) const;
};

} // namespace splatdyn
