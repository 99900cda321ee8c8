// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/particles.hpp"

namespace splatdyn {

const char* to_string(Phase p)
{
    switch (p) {
    case Phase::Deformable: return "deformable";
    case Phase::Rigid: return "rigid";
    case Phase::Granular: return "granular";
    case Phase::Projectile: return "projectile";
    }
    return "?";
}

std::uint32_t ParticleSet::add(const Vec3d& x, double inv_m, double r, Phase ph, std::uint32_t object_id,
                               std::uint32_t body_id, double mu)
{
    const auto idx = std::uint32_t(size());
    position.push_back(x);
    previous.push_back(x);
    velocity.push_back(Vec3d::Zero());
    rest.push_back(x);
    inv_mass.push_back(inv_m);
    radius.push_back(r);
    friction.push_back(mu);
    object.push_back(object_id);
    body.push_back(body_id);
    phase.push_back(ph);
    rotation.push_back(Quatd::Identity());
    return idx;
}

std::uint32_t ParticleSet::append(const ParticleSet& o)
{
    const auto offset = std::uint32_t(size());
    auto cat = [](auto& a, const auto& b) { a.insert(a.end(), b.begin(), b.end()); };
    cat(position, o.position);
    cat(previous, o.previous);
    cat(velocity, o.velocity);
    cat(rest, o.rest);
    cat(inv_mass, o.inv_mass);
    cat(radius, o.radius);
    cat(friction, o.friction);
    cat(object, o.object);
    cat(body, o.body);
    cat(phase, o.phase);
    cat(rotation, o.rotation);
    return offset;
}

Vec3d ParticleSet::linear_momentum() const
{
    Vec3d p = Vec3d::Zero();
    for (std::size_t i = 0; i < size(); ++i) p += mass(i) * velocity[i];
    return p;
}

} // namespace splatdyn
