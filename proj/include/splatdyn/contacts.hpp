// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/particles.hpp"

#include <span>

namespace splatdyn {

struct ContactPair {
    std::uint32_t i, j;
    bool operator==(const ContactPair&) const = default;
};

/// Candidate pairs whose spheres are within `margin` of touching, found through a uniform
/// spatial hash. Pairs sharing a non-granular body are skipped. Output is sorted (i < j)
/// so projection order is deterministic.
std::vector<ContactPair> find_contact_pairs(const ParticleSet& particles, double margin);

/// Separates overlapping pairs along their axis in proportion to inverse mass, then scales
/// down the relative tangential displacement since the substep start with a position-based
/// Coulomb rule: sticking when it is below mu * penetration, otherwise reduced by that amount.
/// mu is the mean of the pair's friction coefficients. Pairs that started the substep apart and
/// moved more than half their contact distance are resolved along the time-of-impact normal. When `external` is given, corrections
/// between different bodies are accumulated per particle.
void project_contacts(ParticleSet& particles, std::span<const ContactPair> pairs,
                      std::vector<Vec3d>* external = nullptr);

/// Granular contact projection for a set with a uniform contact radius and friction:
/// every pair closer than 2 * radius is projected once.
void project_granular_contacts(ParticleSet& particles, double radius, double mu);

/// Position-based Coulomb friction: removes the tangential displacement `tangent` entirely when
/// |tangent| <= mu * depth, else shortens it by mu * depth. Returns the correction to apply.
Vec3d coulomb_correction(const Vec3d& tangent, double depth, double mu);

} // namespace splatdyn
