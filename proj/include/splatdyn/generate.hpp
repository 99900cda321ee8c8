// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/constraints.hpp"
#include "splatdyn/gaussian.hpp"

namespace splatdyn {

struct ObjectParticles {
    ParticleSet particles;
    ConstraintSet constraints;
    double spacing = 0;
};

/// Particle proxy for one object on a voxel lattice of spacing h.
///  Rigid: one particle per occupied cell, a single rigid cluster, 26-neighborhood adjacency.
///  Deformable: occupied and interior cells, distance constraints between face neighbors,
///  and one cluster per particle with its face neighbors (collinear ones skipped).
///  Granular: one particle per kernel, contact radius h/2; kernels must be isotropic granules.
/// Particles get unit inverse mass, radius h/2, the given object id and body.
/// Throws StateError for granular input that was not filled.
ObjectParticles generate_particles(const SplatScene& object, Phase phase, double h, std::uint32_t object_id = 0,
                                   std::uint32_t body = 0);

} // namespace splatdyn
