// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/types.hpp"

#include <limits>

namespace splatdyn {

enum class Phase : std::uint8_t { Deformable, Rigid, Granular, Projectile };

const char* to_string(Phase p);

constexpr std::uint32_t kNoObject = std::numeric_limits<std::uint32_t>::max();

/// Structure-of-arrays particle state. `rest` is x0, `rotation` is the accumulated
/// rotation since rest (identity at rest); translation since rest is x - x0.
struct ParticleSet {
    std::vector<Vec3d> position;
    std::vector<Vec3d> previous;
    std::vector<Vec3d> velocity;
    std::vector<Vec3d> rest;
    std::vector<double> inv_mass;
    std::vector<double> radius;
    std::vector<double> friction;
    std::vector<std::uint32_t> object;
    /// Collision body. Particles that share a non-granular body do not collide with each other.
    std::vector<std::uint32_t> body;
    std::vector<Phase> phase;
    std::vector<Quatd> rotation;

    std::size_t size() const { return position.size(); }
    bool empty() const { return position.empty(); }

    std::uint32_t add(const Vec3d& x, double inv_m, double r, Phase ph, std::uint32_t object_id = kNoObject,
                      std::uint32_t body_id = 0, double mu = 0.5);

    /// Appends `other`; returns the index offset of its first particle.
    std::uint32_t append(const ParticleSet& other);

    double mass(std::size_t i) const { return inv_mass[i] > 0 ? 1.0 / inv_mass[i] : 0.0; }
    Vec3d linear_momentum() const;
};

} // namespace splatdyn
